#pragma once

#include "scl/classify.hpp"
#include "scl/evaluate.hpp"
#include "scl/graph.hpp"
#include "scl/pairspace.hpp"
#include "scl/simgen.hpp"
#include "scl/types.hpp"
#include "scl/util.hpp"

#include "json.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scl::io {

namespace detail {

inline std::ofstream open_out(const std::string& path, bool binary) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

inline std::ifstream open_in(const std::string& path, bool binary) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

template <class T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T take(std::istream& in, const std::string& path) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error(path + ": truncated file");
    return value;
}

inline void put_magic(std::ostream& out, const char magic[5]) { out.write(magic, 4); }

inline void check_magic(std::istream& in, const char magic[5], const std::string& path) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0)
        throw std::runtime_error(path + ": bad magic, expected " + magic);
}

inline void put_vec(std::ostream& out, const VecXd& v) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double)) * v.size());
}

inline VecXd take_vec(std::istream& in, const std::string& path) {
    const auto n = take<std::uint64_t>(in, path);
    VecXd v(static_cast<Eigen::Index>(n));
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
    if (!in) throw std::runtime_error(path + ": truncated file");
    return v;
}

inline void put_rowmat(std::ostream& out, const RowMatXd& m) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double)) * m.size());
}

inline RowMatXd take_rowmat(std::istream& in, const std::string& path) {
    const auto rows = take<std::uint64_t>(in, path);
    const auto cols = take<std::uint64_t>(in, path);
    RowMatXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * rows * cols));
    if (!in) throw std::runtime_error(path + ": truncated file");
    return m;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_double(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const double value = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw std::runtime_error(where + ": bad numeric field '" + text + "'");
    }
}

inline std::int64_t parse_int(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const std::int64_t value = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw std::runtime_error(where + ": bad integer field '" + text + "'");
    }
}

// Seeds occupy the full unsigned 64-bit range, past what parse_int accepts.
inline std::uint64_t parse_uint(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const std::uint64_t value = std::stoull(text, &used);
        if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw std::runtime_error(where + ": bad unsigned field '" + text + "'");
    }
}

}  // namespace detail

// --- pair/label text format -------------------------------------------------
//
// '#' header lines carry key=value metadata (seed, config hash, p), then a
// column header, then one `k,i,j,label` line per pair; label -1 marks an
// unlabeled query pair.

struct PairLabelFile {
    Index p = 0;
    std::vector<Index> pairs;
    VecXi labels;  // aligned with pairs; -1 when unlabeled
    std::vector<std::pair<std::string, std::string>> header;
};

inline void write_pair_labels(const std::string& path, const PairLabelFile& file) {
    if (file.labels.size() != 0 &&
        file.labels.size() != static_cast<Eigen::Index>(file.pairs.size()))
        throw std::invalid_argument("write_pair_labels: labels misaligned with pairs");
    auto out = detail::open_out(path, false);
    out << "# p=" << file.p << "\n";
    for (const auto& [key, value] : file.header) out << "# " << key << "=" << value << "\n";
    out << "k,i,j,label\n";
    for (std::size_t r = 0; r < file.pairs.size(); ++r) {
        const auto [i, j] = pairs::pair_of(file.pairs[r], static_cast<int>(file.p));
        const int label = file.labels.size() == 0 ? -1 : file.labels[static_cast<Eigen::Index>(r)];
        out << file.pairs[r] << "," << i << "," << j << "," << label << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline PairLabelFile read_pair_labels(const std::string& path) {
    auto in = detail::open_in(path, false);
    PairLabelFile file;
    std::string line;
    std::vector<int> labels;
    bool saw_columns = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        if (line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body.front() == ' ') body.erase(0, 1);
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = body.substr(0, eq);
            const std::string value = body.substr(eq + 1);
            if (key == "p")
                file.p = detail::parse_int(value, where);
            else
                file.header.emplace_back(key, value);
            continue;
        }
        if (!saw_columns) {
            if (line != "k,i,j,label") throw std::runtime_error(where + ": expected k,i,j,label header");
            saw_columns = true;
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 4) throw std::runtime_error(where + ": expected 4 fields");
        const Index k = detail::parse_int(fields[0], where);
        const Index i = detail::parse_int(fields[1], where);
        const Index j = detail::parse_int(fields[2], where);
        const auto label = detail::parse_int(fields[3], where);
        if (file.p < 2) throw std::runtime_error(where + ": pair row before '# p=' header");
        const auto [ei, ej] = pairs::pair_of(k, static_cast<int>(file.p));
        if (ei != i || ej != j)
            throw std::runtime_error(where + ": pair index " + std::to_string(k) +
                                     " does not decode to (" + fields[1] + "," + fields[2] + ")");
        if (label < -1 || label > 1) throw std::runtime_error(where + ": label must be -1, 0, or 1");
        file.pairs.push_back(k);
        labels.push_back(static_cast<int>(label));
    }
    if (!saw_columns) throw std::runtime_error(path + ": missing k,i,j,label header");
    file.labels.resize(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t r = 0; r < labels.size(); ++r)
        file.labels[static_cast<Eigen::Index>(r)] = labels[r];
    return file;
}

// --- pair score text format ---------------------------------------------------

struct PairScoreFile {
    Index p = 0;
    std::vector<Index> pairs;
    VecXd scores;
    std::vector<std::pair<std::string, std::string>> header;
};

inline void write_pair_scores(const std::string& path, const PairScoreFile& file) {
    if (file.scores.size() != static_cast<Eigen::Index>(file.pairs.size()))
        throw std::invalid_argument("write_pair_scores: scores misaligned with pairs");
    auto out = detail::open_out(path, false);
    out << "# p=" << file.p << "\n";
    for (const auto& [key, value] : file.header) out << "# " << key << "=" << value << "\n";
    out << "k,i,j,score\n";
    for (std::size_t r = 0; r < file.pairs.size(); ++r) {
        const auto [i, j] = pairs::pair_of(file.pairs[r], static_cast<int>(file.p));
        out << file.pairs[r] << "," << i << "," << j << ","
            << format_double(file.scores[static_cast<Eigen::Index>(r)]) << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline PairScoreFile read_pair_scores(const std::string& path) {
    auto in = detail::open_in(path, false);
    PairScoreFile file;
    std::string line;
    std::vector<double> scores;
    bool saw_columns = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        if (line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body.front() == ' ') body.erase(0, 1);
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            if (body.substr(0, eq) == "p")
                file.p = detail::parse_int(body.substr(eq + 1), where);
            else
                file.header.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        if (!saw_columns) {
            if (line != "k,i,j,score") throw std::runtime_error(where + ": expected k,i,j,score header");
            saw_columns = true;
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 4) throw std::runtime_error(where + ": expected 4 fields");
        file.pairs.push_back(detail::parse_int(fields[0], where));
        scores.push_back(detail::parse_double(fields[3], where));
    }
    if (!saw_columns) throw std::runtime_error(path + ": missing k,i,j,score header");
    file.scores.resize(static_cast<Eigen::Index>(scores.size()));
    for (std::size_t r = 0; r < scores.size(); ++r)
        file.scores[static_cast<Eigen::Index>(r)] = scores[r];
    return file;
}

// --- feature matrix container -----------------------------------------------

struct FeatureFile {
    Index p = 0;
    std::vector<Index> pairs;
    RowMatXd values;  // one row per pair
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

inline constexpr char kFeatureMagic[5] = "SCLF";
inline constexpr std::uint32_t kFeatureVersion = 1;

inline void write_features(const std::string& path, const FeatureFile& file) {
    if (file.values.rows() != static_cast<Eigen::Index>(file.pairs.size()))
        throw std::invalid_argument("write_features: rows misaligned with pairs");
    auto out = detail::open_out(path, true);
    detail::put_magic(out, kFeatureMagic);
    detail::put<std::uint32_t>(out, kFeatureVersion);
    detail::put<std::int64_t>(out, file.p);
    detail::put<std::uint64_t>(out, file.config_hash);
    detail::put<std::uint64_t>(out, file.seed);
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(file.pairs.size()));
    for (Index k : file.pairs) detail::put<std::int64_t>(out, k);
    detail::put_rowmat(out, file.values);
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline FeatureFile read_features(const std::string& path) {
    auto in = detail::open_in(path, true);
    detail::check_magic(in, kFeatureMagic, path);
    const auto version = detail::take<std::uint32_t>(in, path);
    if (version != kFeatureVersion)
        throw std::runtime_error(path + ": unsupported feature file version " +
                                 std::to_string(version));
    FeatureFile file;
    file.p = detail::take<std::int64_t>(in, path);
    file.config_hash = detail::take<std::uint64_t>(in, path);
    file.seed = detail::take<std::uint64_t>(in, path);
    const auto count = detail::take<std::uint64_t>(in, path);
    file.pairs.resize(count);
    for (auto& k : file.pairs) k = detail::take<std::int64_t>(in, path);
    file.values = detail::take_rowmat(in, path);
    if (file.values.rows() != static_cast<Eigen::Index>(count))
        throw std::runtime_error(path + ": row count does not match pair count");
    return file;
}

inline void write_features_csv(const std::string& path, const FeatureFile& file) {
    auto out = detail::open_out(path, false);
    out << "k,i,j";
    for (Eigen::Index c = 0; c < file.values.cols(); ++c) out << ",f" << c;
    out << "\n";
    for (std::size_t r = 0; r < file.pairs.size(); ++r) {
        const auto [i, j] = pairs::pair_of(file.pairs[r], static_cast<int>(file.p));
        out << file.pairs[r] << "," << i << "," << j;
        for (Eigen::Index c = 0; c < file.values.cols(); ++c)
            out << "," << format_double(file.values(static_cast<Eigen::Index>(r), c));
        out << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

// --- model container ----------------------------------------------------------

inline constexpr char kModelMagic[5] = "SCLM";
inline constexpr std::uint32_t kModelVersion = 1;

inline void write_model(const std::string& path, const learn::ClassifierModel& model) {
    auto out = detail::open_out(path, true);
    detail::put_magic(out, kModelMagic);
    detail::put<std::uint32_t>(out, kModelVersion);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.kind));
    detail::put<std::uint64_t>(out, model.seed);
    detail::put<std::uint64_t>(out, model.config_hash);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.histogram.bins_per_axis));
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.histogram.transform));
    detail::put_vec(out, model.pca.mean);
    detail::put_rowmat(out, model.pca.components);
    detail::put_vec(out, model.pca.eigenvalues);
    switch (model.kind) {
        case learn::LearnerKind::kL1:
            detail::put<double>(out, model.l1.intercept);
            detail::put<double>(out, model.l1.lambda);
            detail::put_vec(out, model.l1.coefficients);
            break;
        case learn::LearnerKind::kNn: {
            detail::put<std::int64_t>(out, model.nn.input_dim);
            detail::put<double>(out, model.nn.config.learning_rate);
            detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.nn.config.epochs));
            detail::put<std::int64_t>(out, model.nn.config.batch_size);
            detail::put<std::uint64_t>(out, model.nn.config.seed);
            detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.nn.weights.size()));
            for (std::size_t l = 0; l < model.nn.weights.size(); ++l) {
                RowMatXd w = model.nn.weights[l];
                detail::put_rowmat(out, w);
                detail::put_vec(out, model.nn.biases[l]);
            }
            break;
        }
        default:
            break;  // correlation baselines carry no parameters
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline learn::ClassifierModel read_model(const std::string& path) {
    auto in = detail::open_in(path, true);
    detail::check_magic(in, kModelMagic, path);
    const auto version = detail::take<std::uint32_t>(in, path);
    if (version != kModelVersion)
        throw std::runtime_error(path + ": unsupported model version " + std::to_string(version));
    learn::ClassifierModel model;
    model.kind = static_cast<learn::LearnerKind>(detail::take<std::uint32_t>(in, path));
    model.seed = detail::take<std::uint64_t>(in, path);
    model.config_hash = detail::take<std::uint64_t>(in, path);
    model.histogram.bins_per_axis = static_cast<int>(detail::take<std::uint32_t>(in, path));
    model.histogram.transform =
        static_cast<feat::Transform>(detail::take<std::uint32_t>(in, path));
    model.pca.mean = detail::take_vec(in, path);
    model.pca.components = detail::take_rowmat(in, path);
    model.pca.eigenvalues = detail::take_vec(in, path);
    switch (model.kind) {
        case learn::LearnerKind::kL1:
            model.l1.intercept = detail::take<double>(in, path);
            model.l1.lambda = detail::take<double>(in, path);
            model.l1.coefficients = detail::take_vec(in, path);
            break;
        case learn::LearnerKind::kNn: {
            model.nn.input_dim = detail::take<std::int64_t>(in, path);
            model.nn.config.learning_rate = detail::take<double>(in, path);
            model.nn.config.epochs = static_cast<int>(detail::take<std::uint32_t>(in, path));
            model.nn.config.batch_size = detail::take<std::int64_t>(in, path);
            model.nn.config.seed = detail::take<std::uint64_t>(in, path);
            const auto layers = detail::take<std::uint32_t>(in, path);
            model.nn.config.hidden.clear();
            for (std::uint32_t l = 0; l < layers; ++l) {
                const RowMatXd w = detail::take_rowmat(in, path);
                model.nn.weights.push_back(MatXd(w));
                model.nn.biases.push_back(detail::take_vec(in, path));
                if (l + 1 < layers)
                    model.nn.config.hidden.push_back(w.rows());
            }
            break;
        }
        case learn::LearnerKind::kPearson:
        case learn::LearnerKind::kKendall:
            break;
        default:
            throw std::runtime_error(path + ": unknown learner kind in model file");
    }
    return model;
}

// --- graph export -------------------------------------------------------------

inline const char* provenance_name(graphs::Provenance p) {
    switch (p) {
        case graphs::Provenance::kBackground: return "background";
        case graphs::Provenance::kPredicted: return "predicted";
        default: return "undefined";
    }
}

inline void write_graph_csv(const std::string& path, const graphs::AncestralGraph& graph) {
    auto out = detail::open_out(path, false);
    out << "i,j,score,provenance\n";
    for (Index i = 0; i < graph.p; ++i)
        for (Index j = 0; j < graph.p; ++j) {
            if (i == j || !graph.defined(i, j)) continue;
            out << i << "," << j << "," << format_double(graph.scores(i, j)) << ","
                << provenance_name(static_cast<graphs::Provenance>(graph.provenance(i, j)))
                << "\n";
        }
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline constexpr char kGraphMagic[5] = "SCLG";
inline constexpr std::uint32_t kGraphVersion = 1;

inline void write_graph_binary(const std::string& path, const graphs::AncestralGraph& graph) {
    auto out = detail::open_out(path, true);
    detail::put_magic(out, kGraphMagic);
    detail::put<std::uint32_t>(out, kGraphVersion);
    detail::put<std::int64_t>(out, graph.p);
    for (Index i = 0; i < graph.p; ++i)
        for (Index j = 0; j < graph.p; ++j) detail::put<double>(out, graph.scores(i, j));
    for (Index i = 0; i < graph.p; ++i)
        for (Index j = 0; j < graph.p; ++j)
            detail::put<std::uint8_t>(out, graph.provenance(i, j));
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline graphs::AncestralGraph read_graph_binary(const std::string& path) {
    auto in = detail::open_in(path, true);
    detail::check_magic(in, kGraphMagic, path);
    const auto version = detail::take<std::uint32_t>(in, path);
    if (version != kGraphVersion)
        throw std::runtime_error(path + ": unsupported graph version " + std::to_string(version));
    const auto p = detail::take<std::int64_t>(in, path);
    graphs::AncestralGraph graph(static_cast<int>(p));
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j) graph.scores(i, j) = detail::take<double>(in, path);
    for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j)
            graph.provenance(i, j) = detail::take<std::uint8_t>(in, path);
    return graph;
}

// --- dataset CSV ----------------------------------------------------------------

inline void write_dataset_csv(const std::string& path, const sim::DataMatrix& data,
                              const std::vector<std::pair<std::string, std::string>>& preamble = {}) {
    if (data.intervention.size() != static_cast<std::size_t>(data.values.rows()))
        throw std::invalid_argument("write_dataset_csv: intervention column misaligned");
    auto out = detail::open_out(path, false);
    for (const auto& [key, value] : preamble) out << "# " << key << "=" << value << "\n";
    for (Eigen::Index c = 0; c < data.values.cols(); ++c) out << "v" << c << ",";
    out << "intervention\n";
    for (Eigen::Index r = 0; r < data.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.values.cols(); ++c)
            out << format_double(data.values(r, c)) << ",";
        const Index target = data.intervention[static_cast<std::size_t>(r)];
        if (target < 0)
            out << "none\n";
        else
            out << "v" << target << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline sim::DataMatrix read_dataset_csv(const std::string& path) {
    auto in = detail::open_in(path, false);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        break;
    }
    const auto columns = detail::split_csv_line(line);
    if (columns.size() < 2 || columns.back() != "intervention")
        throw std::runtime_error(path + ": expected v*,intervention header");
    const Eigen::Index p = static_cast<Eigen::Index>(columns.size()) - 1;

    std::vector<std::vector<double>> rows;
    std::vector<Index> interventions;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != columns.size())
            throw std::runtime_error(where + ": wrong field count");
        std::vector<double> row(static_cast<std::size_t>(p));
        for (Eigen::Index c = 0; c < p; ++c)
            row[static_cast<std::size_t>(c)] =
                detail::parse_double(fields[static_cast<std::size_t>(c)], where);
        const std::string& meta = fields.back();
        if (meta == "none") {
            interventions.push_back(-1);
        } else if (meta.size() > 1 && meta[0] == 'v') {
            const Index target = detail::parse_int(meta.substr(1), where);
            if (target < 0 || target >= p)
                throw std::runtime_error(where + ": intervention target out of range");
            interventions.push_back(target);
        } else {
            throw std::runtime_error(where + ": bad intervention field '" + meta + "'");
        }
        rows.push_back(std::move(row));
    }

    sim::DataMatrix data;
    data.values.resize(static_cast<Eigen::Index>(rows.size()), p);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (Eigen::Index c = 0; c < p; ++c)
            data.values(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    data.intervention = std::move(interventions);
    return data;
}

// --- ScmSpec JSON ----------------------------------------------------------------

inline nlohmann::json scm_to_json(const sim::ScmSpec& spec) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["p_obs"] = spec.p_obs;
    doc["p_lat"] = spec.p_lat;
    nlohmann::json edges = nlohmann::json::array();
    for (Index a = 0; a < spec.total(); ++a)
        for (Index b = 0; b < spec.total(); ++b)
            if (spec.weights(a, b) != 0.0)
                edges.push_back({a, b, spec.weights(a, b)});
    doc["edges"] = std::move(edges);
    doc["noise_sd"] = std::vector<double>(spec.noise_sd.data(),
                                          spec.noise_sd.data() + spec.noise_sd.size());
    doc["noise_mean"] = std::vector<double>(spec.noise_mean.data(),
                                            spec.noise_mean.data() + spec.noise_mean.size());
    doc["intervention_model"] = {{"knockdown_factor", spec.intervention_model.knockdown_factor},
                                 {"shift", spec.intervention_model.shift}};
    return doc;
}

inline sim::ScmSpec scm_from_json(const nlohmann::json& doc) {
    sim::ScmSpec spec;
    if (doc.value("version", 0) != 1)
        throw std::runtime_error("ScmSpec: unsupported or missing version");
    spec.p_obs = doc.at("p_obs").get<Index>();
    spec.p_lat = doc.at("p_lat").get<Index>();
    const Index p = spec.p_obs + spec.p_lat;
    if (p < 1) throw std::runtime_error("ScmSpec: no variables");
    spec.weights = MatXd::Zero(p, p);
    for (const auto& edge : doc.at("edges")) {
        if (!edge.is_array() || edge.size() != 3)
            throw std::runtime_error("ScmSpec: edges must be [from, to, weight] triplets");
        const Index a = edge[0].get<Index>();
        const Index b = edge[1].get<Index>();
        if (a < 0 || a >= p || b < 0 || b >= p)
            throw std::runtime_error("ScmSpec: edge endpoint out of range");
        spec.weights(a, b) = edge[2].get<double>();
    }
    const auto sd = doc.at("noise_sd").get<std::vector<double>>();
    const auto mean = doc.at("noise_mean").get<std::vector<double>>();
    if (static_cast<Index>(sd.size()) != p || static_cast<Index>(mean.size()) != p)
        throw std::runtime_error("ScmSpec: noise vectors must cover every variable");
    spec.noise_sd = Eigen::Map<const VecXd>(sd.data(), p);
    spec.noise_mean = Eigen::Map<const VecXd>(mean.data(), p);
    const auto& im = doc.at("intervention_model");
    spec.intervention_model.knockdown_factor = im.at("knockdown_factor").get<double>();
    spec.intervention_model.shift = im.at("shift").get<double>();
    spec.validate();
    return spec;
}

inline void write_scm_json(const std::string& path, const sim::ScmSpec& spec) {
    auto out = detail::open_out(path, false);
    out << scm_to_json(spec).dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline sim::ScmSpec read_scm_json(const std::string& path) {
    auto in = detail::open_in(path, false);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    try {
        return scm_from_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

// --- metrics and ROC CSV ----------------------------------------------------------

struct MetricRecord {
    std::string experiment;
    std::uint64_t seed = 0;
    Index p = 0;
    double rho = 0.0;
    std::string param;  // experiment-specific setting, "-" when unused
    std::string method;
    double auc = 0.0;
    double wall_ms = 0.0;
};

inline void write_metrics_csv(const std::string& path, const std::vector<MetricRecord>& records,
                              const std::vector<std::pair<std::string, std::string>>& preamble = {}) {
    auto out = detail::open_out(path, false);
    for (const auto& [key, value] : preamble) out << "# " << key << "=" << value << "\n";
    out << "experiment,seed,p,rho,param,method,auc,wall_ms\n";
    for (const auto& rec : records) {
        out << rec.experiment << "," << rec.seed << "," << rec.p << ","
            << format_double(rec.rho) << "," << (rec.param.empty() ? "-" : rec.param) << ","
            << rec.method << "," << format_double(rec.auc) << "," << format_double(rec.wall_ms)
            << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline std::vector<MetricRecord> read_metrics_csv(const std::string& path) {
    auto in = detail::open_in(path, false);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        break;
    }
    if (line != "experiment,seed,p,rho,param,method,auc,wall_ms")
        throw std::runtime_error(path + ": unexpected metrics header");
    std::vector<MetricRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 8) throw std::runtime_error(where + ": expected 8 fields");
        MetricRecord rec;
        rec.experiment = fields[0];
        rec.seed = detail::parse_uint(fields[1], where);
        rec.p = detail::parse_int(fields[2], where);
        rec.rho = detail::parse_double(fields[3], where);
        rec.param = fields[4];
        rec.method = fields[5];
        rec.auc = detail::parse_double(fields[6], where);
        rec.wall_ms = detail::parse_double(fields[7], where);
        records.push_back(std::move(rec));
    }
    return records;
}

inline void write_roc_csv(const std::string& path, const eval::RocCurve& curve,
                          const std::vector<std::pair<std::string, std::string>>& preamble = {}) {
    auto out = detail::open_out(path, false);
    for (const auto& [key, value] : preamble) out << "# " << key << "=" << value << "\n";
    out << "fpr,tpr,threshold\n";
    for (const auto& point : curve.points)
        out << format_double(point.fpr) << "," << format_double(point.tpr) << ","
            << format_double(point.threshold) << "\n";
    if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace scl::io
