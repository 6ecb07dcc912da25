#pragma once

#include "scl/classify.hpp"
#include "scl/evaluate.hpp"
#include "scl/featurize.hpp"
#include "scl/graph.hpp"
#include "scl/io.hpp"
#include "scl/pairspace.hpp"
#include "scl/pca.hpp"
#include "scl/simgen.hpp"
#include "scl/types.hpp"
#include "scl/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace scl::pipe {

// Configuration problems exit with a distinct code at the CLI.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    kVaryP,
    kVaryRho,
    kPerturb,
    kErrorCorrect,
    kSparsePositive,
    kRandomControl,
    kTiming,
};

inline const char* experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::kVaryP: return "vary_p";
        case ExperimentKind::kVaryRho: return "vary_rho";
        case ExperimentKind::kPerturb: return "perturb";
        case ExperimentKind::kErrorCorrect: return "error_correct";
        case ExperimentKind::kSparsePositive: return "sparse_positive";
        case ExperimentKind::kRandomControl: return "random_control";
        case ExperimentKind::kTiming: return "timing";
    }
    return "unknown";
}

inline ExperimentKind experiment_from_name(const std::string& name) {
    for (ExperimentKind kind :
         {ExperimentKind::kVaryP, ExperimentKind::kVaryRho, ExperimentKind::kPerturb,
          ExperimentKind::kErrorCorrect, ExperimentKind::kSparsePositive,
          ExperimentKind::kRandomControl, ExperimentKind::kTiming})
        if (name == experiment_name(kind)) return kind;
    throw ConfigError("unknown experiment '" + name + "'");
}

struct SimulatorConfig {
    Index p_lat = 10;
    double edge_density = -1.0;  // negative selects the mean-degree default below
    bool cyclic = false;
    Index n_obs = 200;
    Index tt_interventions = 20;
    Index cal_interventions = 10;
    Index nui_interventions = 10;
    Index replicates = 8;
    double knockdown_factor = 0.1;
    double shift = 0.0;

    double density_for(Index p_obs) const {
        if (edge_density >= 0.0) return edge_density;
        const Index total = p_obs + p_lat;
        return total > 1 ? std::min(1.0, 2.0 / static_cast<double>(total - 1)) : 0.0;
    }
};

struct FeaturizeConfig {
    feat::HistogramConfig histogram;
    int pca_dim = 100;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::kVaryP;
    std::vector<Index> p_list = {50, 100, 200};
    double rho = 0.5;
    std::vector<double> rho_grid = {0.1, 0.25, 0.5, 0.75, 0.9};
    std::vector<double> perturb_fractions = {0.0, 0.1, 0.2, 0.3};
    double correction_fraction = 0.2;
    std::vector<double> keep_fractions = {0.1, 0.25, 0.5, 1.0};
    std::string sampling = "random";  // or "interventionwise"
    std::vector<std::string> learners = {"l1"};
    int repetitions = 10;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = 1;
    SimulatorConfig sim;
    FeaturizeConfig feat_cfg;
    learn::L1FitOptions l1;
    learn::MlpConfig nn;
    std::vector<Index> timing_p = {50, 100, 200, 400};
    Index timing_train_size = 500;
    Index timing_query_size = 300;
    Index timing_query_growth = 10;

    void validate() const;
    nlohmann::json to_json() const;
    std::uint64_t hash() const;
};

inline void ExperimentConfig::validate() const {
    if (p_list.empty()) throw ConfigError("config: p list is empty");
    for (Index p : p_list)
        if (p < 4) throw ConfigError("config: p must be at least 4");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("config: rho must lie in (0, 1)");
    for (double r : rho_grid)
        if (!(r > 0.0 && r < 1.0)) throw ConfigError("config: rho grid values must lie in (0, 1)");
    for (double f : perturb_fractions)
        if (!(f >= 0.0 && f <= 1.0))
            throw ConfigError("config: perturbation fractions must lie in [0, 1]");
    if (!(correction_fraction > 0.0 && correction_fraction <= 1.0))
        throw ConfigError("config: correction_fraction must lie in (0, 1]");
    for (double g : keep_fractions)
        if (!(g > 0.0 && g <= 1.0))
            throw ConfigError("config: keep fractions must lie in (0, 1]");
    if (sampling != "random" && sampling != "interventionwise")
        throw ConfigError("config: sampling must be 'random' or 'interventionwise'");
    if (learners.empty()) throw ConfigError("config: learners list is empty");
    for (const auto& name : learners) {
        try {
            (void)learn::learner_from_name(name);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
    if (repetitions < 1) throw ConfigError("config: repetitions must be positive");
    if (threads < 1) throw ConfigError("config: threads must be positive");
    if (sim.p_lat < 0) throw ConfigError("config: simulator.p_lat must be non-negative");
    if (sim.n_obs < 3) throw ConfigError("config: simulator.n_obs must be at least 3");
    if (sim.tt_interventions < 2)
        throw ConfigError("config: simulator needs at least two train/test interventions");
    if (sim.cal_interventions < 1)
        throw ConfigError("config: simulator needs at least one calibration intervention");
    if (sim.nui_interventions < 0)
        throw ConfigError("config: simulator.nuisance interventions must be non-negative");
    if (sim.replicates < 1) throw ConfigError("config: simulator.replicates must be positive");
    if (!(sim.knockdown_factor > 0.0 && sim.knockdown_factor < 1.0))
        throw ConfigError("config: simulator.knockdown_factor must lie in (0, 1)");
    if (sim.edge_density > 1.0) throw ConfigError("config: simulator.edge_density exceeds 1");
    const Index targets = sim.tt_interventions + sim.cal_interventions + sim.nui_interventions;
    for (Index p : p_list)
        if (targets > p)
            throw ConfigError("config: intervention targets exceed observed variables at p=" +
                              std::to_string(p));
    try {
        feat_cfg.histogram.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (feat_cfg.pca_dim < 1) throw ConfigError("config: featurize.pca_dim must be positive");
    if (feat_cfg.pca_dim > feat_cfg.histogram.raw_dim())
        throw ConfigError("config: featurize.pca_dim exceeds raw histogram dimension");
    if (kind == ExperimentKind::kVaryRho && rho_grid.empty())
        throw ConfigError("config: vary_rho needs a rho grid");
    if (kind == ExperimentKind::kPerturb && perturb_fractions.empty())
        throw ConfigError("config: perturb needs perturbation fractions");
    if (kind == ExperimentKind::kSparsePositive && keep_fractions.empty())
        throw ConfigError("config: sparse_positive needs keep fractions");
    if (kind == ExperimentKind::kTiming) {
        if (timing_p.size() < 2) throw ConfigError("config: timing needs at least two p values");
        for (Index p : timing_p)
            if (p < 4) throw ConfigError("config: timing p must be at least 4");
        if (timing_train_size < 10 || timing_query_size < 10)
            throw ConfigError("config: timing set sizes must be at least 10");
        if (timing_query_growth < 2)
            throw ConfigError("config: timing_query_growth must be at least 2");
    }
}

inline nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["experiment"] = experiment_name(kind);
    doc["p"] = p_list;
    doc["rho"] = rho;
    doc["rho_grid"] = rho_grid;
    doc["perturb_fractions"] = perturb_fractions;
    doc["correction_fraction"] = correction_fraction;
    doc["keep_fractions"] = keep_fractions;
    doc["sampling"] = sampling;
    doc["learners"] = learners;
    doc["repetitions"] = repetitions;
    doc["seed"] = seed;
    doc["out"] = out_dir;
    doc["threads"] = threads;
    doc["simulator"] = {{"p_lat", sim.p_lat},
                        {"edge_density", sim.edge_density},
                        {"cyclic", sim.cyclic},
                        {"n_obs", sim.n_obs},
                        {"train_test_interventions", sim.tt_interventions},
                        {"calibration_interventions", sim.cal_interventions},
                        {"nuisance_interventions", sim.nui_interventions},
                        {"replicates", sim.replicates},
                        {"knockdown_factor", sim.knockdown_factor},
                        {"shift", sim.shift}};
    doc["featurize"] = {{"bins_per_axis", feat_cfg.histogram.bins_per_axis},
                        {"transform", feat::transform_name(feat_cfg.histogram.transform)},
                        {"pca_dim", feat_cfg.pca_dim}};
    doc["l1"] = {{"path_size", l1.path_size},
                 {"lambda_min_ratio", l1.lambda_min_ratio},
                 {"cv_folds", l1.cv_folds},
                 {"tol", l1.tol},
                 {"max_outer", l1.max_outer}};
    doc["nn"] = {{"hidden", nn.hidden},
                 {"learning_rate", nn.learning_rate},
                 {"epochs", nn.epochs},
                 {"batch_size", nn.batch_size}};
    doc["timing"] = {{"p", timing_p},
                     {"train_size", timing_train_size},
                     {"query_size", timing_query_size},
                     {"query_growth", timing_query_growth}};
    return doc;
}

inline std::uint64_t ExperimentConfig::hash() const { return fnv1a64(to_json().dump()); }

namespace detail {

inline void require_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : obj.items())
        if (allowed.find(item.key()) == allowed.end())
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

template <class T>
T get_or(const nlohmann::json& obj, const std::string& key, T fallback,
         const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + ": bad value for '" + key + "'");
    }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
    const std::string where = "config";
    detail::require_keys(
        doc, {"version", "experiment", "p", "rho", "rho_grid", "perturb_fractions",
              "correction_fraction", "keep_fractions", "sampling", "learners", "repetitions",
              "seed", "out", "threads", "simulator", "featurize", "l1", "nn", "timing",
              "config_hash"},
        where);
    if (detail::get_or<int>(doc, "version", 1, where) != 1)
        throw ConfigError("config: unsupported schema version");

    ExperimentConfig cfg;
    if (doc.contains("experiment"))
        cfg.kind = experiment_from_name(doc.at("experiment").get<std::string>());
    cfg.p_list = detail::get_or(doc, "p", cfg.p_list, where);
    cfg.rho = detail::get_or(doc, "rho", cfg.rho, where);
    cfg.rho_grid = detail::get_or(doc, "rho_grid", cfg.rho_grid, where);
    cfg.perturb_fractions = detail::get_or(doc, "perturb_fractions", cfg.perturb_fractions, where);
    cfg.correction_fraction =
        detail::get_or(doc, "correction_fraction", cfg.correction_fraction, where);
    cfg.keep_fractions = detail::get_or(doc, "keep_fractions", cfg.keep_fractions, where);
    cfg.sampling = detail::get_or(doc, "sampling", cfg.sampling, where);
    cfg.learners = detail::get_or(doc, "learners", cfg.learners, where);
    cfg.repetitions = detail::get_or(doc, "repetitions", cfg.repetitions, where);
    cfg.seed = detail::get_or(doc, "seed", cfg.seed, where);
    cfg.out_dir = detail::get_or(doc, "out", cfg.out_dir, where);
    cfg.threads = detail::get_or(doc, "threads", cfg.threads, where);

    if (doc.contains("simulator")) {
        const auto& sim = doc.at("simulator");
        detail::require_keys(sim,
                             {"p_lat", "edge_density", "cyclic", "n_obs",
                              "train_test_interventions", "calibration_interventions",
                              "nuisance_interventions", "replicates", "knockdown_factor", "shift"},
                             "config.simulator");
        cfg.sim.p_lat = detail::get_or(sim, "p_lat", cfg.sim.p_lat, where);
        cfg.sim.edge_density = detail::get_or(sim, "edge_density", cfg.sim.edge_density, where);
        cfg.sim.cyclic = detail::get_or(sim, "cyclic", cfg.sim.cyclic, where);
        cfg.sim.n_obs = detail::get_or(sim, "n_obs", cfg.sim.n_obs, where);
        cfg.sim.tt_interventions =
            detail::get_or(sim, "train_test_interventions", cfg.sim.tt_interventions, where);
        cfg.sim.cal_interventions =
            detail::get_or(sim, "calibration_interventions", cfg.sim.cal_interventions, where);
        cfg.sim.nui_interventions =
            detail::get_or(sim, "nuisance_interventions", cfg.sim.nui_interventions, where);
        cfg.sim.replicates = detail::get_or(sim, "replicates", cfg.sim.replicates, where);
        cfg.sim.knockdown_factor =
            detail::get_or(sim, "knockdown_factor", cfg.sim.knockdown_factor, where);
        cfg.sim.shift = detail::get_or(sim, "shift", cfg.sim.shift, where);
    }
    if (doc.contains("featurize")) {
        const auto& ft = doc.at("featurize");
        detail::require_keys(ft, {"bins_per_axis", "transform", "pca_dim"}, "config.featurize");
        cfg.feat_cfg.histogram.bins_per_axis =
            detail::get_or(ft, "bins_per_axis", cfg.feat_cfg.histogram.bins_per_axis, where);
        if (ft.contains("transform")) {
            try {
                cfg.feat_cfg.histogram.transform =
                    feat::transform_from_name(ft.at("transform").get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config.featurize: ") + e.what());
            }
        }
        cfg.feat_cfg.pca_dim = detail::get_or(ft, "pca_dim", cfg.feat_cfg.pca_dim, where);
    }
    if (doc.contains("l1")) {
        const auto& l1 = doc.at("l1");
        detail::require_keys(l1, {"path_size", "lambda_min_ratio", "cv_folds", "tol", "max_outer"},
                             "config.l1");
        cfg.l1.path_size = detail::get_or(l1, "path_size", cfg.l1.path_size, where);
        cfg.l1.lambda_min_ratio =
            detail::get_or(l1, "lambda_min_ratio", cfg.l1.lambda_min_ratio, where);
        cfg.l1.cv_folds = detail::get_or(l1, "cv_folds", cfg.l1.cv_folds, where);
        cfg.l1.tol = detail::get_or(l1, "tol", cfg.l1.tol, where);
        cfg.l1.max_outer = detail::get_or(l1, "max_outer", cfg.l1.max_outer, where);
    }
    if (doc.contains("nn")) {
        const auto& nn = doc.at("nn");
        detail::require_keys(nn, {"hidden", "learning_rate", "epochs", "batch_size"}, "config.nn");
        cfg.nn.hidden = detail::get_or(nn, "hidden", cfg.nn.hidden, where);
        cfg.nn.learning_rate = detail::get_or(nn, "learning_rate", cfg.nn.learning_rate, where);
        cfg.nn.epochs = detail::get_or(nn, "epochs", cfg.nn.epochs, where);
        cfg.nn.batch_size = detail::get_or(nn, "batch_size", cfg.nn.batch_size, where);
    }
    if (doc.contains("timing")) {
        const auto& tm = doc.at("timing");
        detail::require_keys(tm, {"p", "train_size", "query_size", "query_growth"},
                             "config.timing");
        cfg.timing_p = detail::get_or(tm, "p", cfg.timing_p, where);
        cfg.timing_train_size = detail::get_or(tm, "train_size", cfg.timing_train_size, where);
        cfg.timing_query_size = detail::get_or(tm, "query_size", cfg.timing_query_size, where);
        cfg.timing_query_growth =
            detail::get_or(tm, "query_growth", cfg.timing_query_growth, where);
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(doc);
}

// Per-repetition RNG stream ids; every stage derives its stream from the
// repetition seed so stage internals can change independently.
enum Stream : std::uint64_t {
    kStreamScm = 1,
    kStreamTargets = 2,
    kStreamSimulate = 3,
    kStreamSplit = 4,
    kStreamL1 = 5,
    kStreamNn = 6,
    kStreamLabels = 7,
};

struct RepData {
    sim::ScmSpec spec;
    std::vector<Index> tt_targets, cal_targets, nui_targets;
    RowMatXd x;                // observational + nuisance rows only
    std::vector<Index> x_meta; // intervention target per row, -1 observational
    Mat<std::int32_t> truth;   // ancestral reachability over observed variables
    double simulate_ms = 0.0;
};

inline RepData build_rep(const ExperimentConfig& cfg, Index p, std::uint64_t rep_seed) {
    Timer timer;
    RepData rep;
    rep.spec = sim::sample_scm(p, cfg.sim.p_lat, cfg.sim.density_for(p), cfg.sim.cyclic,
                               mix_seed(rep_seed, kStreamScm));
    rep.spec.intervention_model.knockdown_factor = cfg.sim.knockdown_factor;
    rep.spec.intervention_model.shift = cfg.sim.shift;

    const Index total_targets =
        cfg.sim.tt_interventions + cfg.sim.cal_interventions + cfg.sim.nui_interventions;
    Rng target_rng(mix_seed(rep_seed, kStreamTargets));
    std::vector<Index> chosen = target_rng.sample_without_replacement(p, total_targets);
    target_rng.shuffle(chosen);
    rep.tt_targets.assign(chosen.begin(), chosen.begin() + cfg.sim.tt_interventions);
    rep.cal_targets.assign(chosen.begin() + cfg.sim.tt_interventions,
                           chosen.begin() + cfg.sim.tt_interventions + cfg.sim.cal_interventions);
    rep.nui_targets.assign(chosen.begin() + cfg.sim.tt_interventions + cfg.sim.cal_interventions,
                           chosen.end());

    std::vector<sim::InterventionRequest> requests;
    for (Index t : rep.tt_targets)
        requests.push_back({t, cfg.sim.replicates, sim::PanelRole::kTrainTest});
    for (Index t : rep.cal_targets)
        requests.push_back({t, cfg.sim.replicates, sim::PanelRole::kCalibration});
    for (Index t : rep.nui_targets)
        requests.push_back({t, cfg.sim.replicates, sim::PanelRole::kNuisance});
    const auto sim_out =
        sim::simulate(rep.spec, cfg.sim.n_obs, requests, mix_seed(rep_seed, kStreamSimulate));

    const sim::InterventionPanel* nui_panel = nullptr;
    for (const auto& panel : sim_out.panels)
        if (panel.role == sim::PanelRole::kNuisance) nui_panel = &panel;

    // X holds observational and nuisance rows only; train/test and
    // calibration panels stay out by construction and are checked below.
    Index n_rows = sim_out.observational.values.rows();
    if (nui_panel != nullptr)
        for (const auto& block : nui_panel->replicates) n_rows += block.rows();
    rep.x.resize(n_rows, p);
    rep.x_meta.clear();
    rep.x_meta.reserve(static_cast<std::size_t>(n_rows));
    Index row = 0;
    for (Eigen::Index r = 0; r < sim_out.observational.values.rows(); ++r, ++row) {
        rep.x.row(row) = sim_out.observational.values.row(r);
        rep.x_meta.push_back(-1);
    }
    if (nui_panel != nullptr) {
        for (std::size_t b = 0; b < nui_panel->replicates.size(); ++b) {
            const auto& block = nui_panel->replicates[b];
            for (Eigen::Index r = 0; r < block.rows(); ++r, ++row) {
                rep.x.row(row) = block.row(r);
                rep.x_meta.push_back(nui_panel->targets[b]);
            }
        }
    }

    std::set<Index> held_out(rep.tt_targets.begin(), rep.tt_targets.end());
    held_out.insert(rep.cal_targets.begin(), rep.cal_targets.end());
    for (Index meta : rep.x_meta)
        if (meta >= 0 && held_out.count(meta) > 0)
            throw std::logic_error("pipeline: held-out panel row leaked into the data matrix");

    rep.truth = sim::ancestral_truth(rep.spec);
    rep.simulate_ms = timer.elapsed_ms();
    return rep;
}

struct SplitData {
    std::vector<Index> train, query;
    VecXi train_labels, query_labels;
};

// T and Q partition the full ordered pair space; labels are the ancestral
// truth. Random sampling draws |T| = round(rho * p(p-1)) pairs uniformly;
// interventionwise sampling restricts both sets to pairs whose source is a
// train/test intervention target and splits those targets rho-proportionally.
inline SplitData make_split(const ExperimentConfig& cfg, const RepData& rep, Index p, double rho,
                            std::uint64_t rep_seed) {
    const std::uint64_t seed = mix_seed(rep_seed, kStreamSplit);
    SplitData split;
    if (cfg.sampling == "random") {
        auto [train, query] = pairs::sample_random(pairs::PairSpace(static_cast<int>(p)), rho, seed);
        split.train = std::move(train);
        split.query = std::move(query);
    } else {
        std::vector<int> interventions;
        interventions.reserve(rep.tt_targets.size());
        for (Index t : rep.tt_targets) interventions.push_back(static_cast<int>(t));
        std::sort(interventions.begin(), interventions.end());
        const int n_int = static_cast<int>(interventions.size());
        if (n_int < 2)
            throw std::logic_error("pipeline: interventionwise split needs two train/test targets");
        const int n_train = std::clamp(
            static_cast<int>(std::llround(rho * static_cast<double>(n_int))), 1, n_int - 1);
        auto iw = pairs::sample_interventionwise(interventions, n_train, static_cast<int>(p), seed);
        split.train = std::move(iw.train);
        split.query = std::move(iw.query);
    }

    std::sort(split.train.begin(), split.train.end());
    std::sort(split.query.begin(), split.query.end());
    std::vector<Index> overlap;
    std::set_intersection(split.train.begin(), split.train.end(), split.query.begin(),
                          split.query.end(), std::back_inserter(overlap));
    if (!overlap.empty())
        throw std::logic_error("pipeline: train and query pair sets overlap");

    split.train_labels = pairs::labels_from_truth(rep.truth, split.train);
    split.query_labels = pairs::labels_from_truth(rep.truth, split.query);
    return split;
}

struct FeatureBlock {
    feat::PcaModel pca;
    RowMatXd train_features;
    RowMatXd query_features;
    double featurize_ms = 0.0;
};

inline FeatureBlock featurize_split(const ExperimentConfig& cfg, const RepData& rep,
                                    const SplitData& split) {
    Timer timer;
    std::vector<Index> all_pairs;
    all_pairs.reserve(split.train.size() + split.query.size());
    all_pairs.insert(all_pairs.end(), split.train.begin(), split.train.end());
    all_pairs.insert(all_pairs.end(), split.query.begin(), split.query.end());

    const RowMatXd raw = feat::build_raw_features<double>(rep.x, all_pairs,
                                                          cfg.feat_cfg.histogram, cfg.threads);
    const int dim = static_cast<int>(
        std::min<Eigen::Index>(cfg.feat_cfg.pca_dim, raw.cols()));
    FeatureBlock block;
    block.pca = feat::pca_fit<double>(raw, dim);
    const RowMatXd features = feat::pca_transform(block.pca, raw);
    const Eigen::Index n_train = static_cast<Eigen::Index>(split.train.size());
    block.train_features = features.topRows(n_train);
    block.query_features = features.bottomRows(features.rows() - n_train);
    block.featurize_ms = timer.elapsed_ms();
    return block;
}

namespace detail {

inline std::string format_setting_value(double value) { return format_short(value); }

// Label transformation applied to the training labels before fitting.
enum class LabelOp { kNone, kPerturb, kSparsify, kRandomControl };

struct Setting {
    Index p = 0;
    double rho = 0.5;
    std::string param = "-";
    LabelOp op = LabelOp::kNone;
    double op_value = 0.0;
    bool evaluate_on_train = false;  // error correction scores T itself
};

inline VecXi apply_label_op(const Setting& setting, const std::vector<Index>& train,
                            const VecXi& labels, std::uint64_t rep_seed) {
    switch (setting.op) {
        case LabelOp::kNone: return labels;
        case LabelOp::kPerturb:
            return pairs::perturb_labels(train, labels, setting.op_value,
                                         mix_seed(rep_seed, kStreamLabels))
                .first;
        case LabelOp::kSparsify:
            return pairs::sparsify_positives(labels, setting.op_value,
                                             mix_seed(rep_seed, kStreamLabels));
        case LabelOp::kRandomControl:
            return pairs::sparsify_positives_random_control(labels, setting.op_value,
                                                            mix_seed(rep_seed, kStreamLabels));
    }
    return labels;
}

struct MethodResult {
    io::MetricRecord record;
    eval::RocCurve roc;
    learn::ClassifierModel model;
    bool has_model = false;
};

inline std::vector<Setting> settings_for(const ExperimentConfig& cfg) {
    std::vector<Setting> settings;
    switch (cfg.kind) {
        case ExperimentKind::kVaryP:
            for (Index p : cfg.p_list) settings.push_back({p, cfg.rho, "-", LabelOp::kNone, 0.0});
            break;
        case ExperimentKind::kVaryRho:
            for (double r : cfg.rho_grid)
                settings.push_back({cfg.p_list.front(), r, "-", LabelOp::kNone, 0.0});
            break;
        case ExperimentKind::kPerturb:
            for (double f : cfg.perturb_fractions)
                settings.push_back({cfg.p_list.front(), cfg.rho,
                                    "f=" + format_setting_value(f), LabelOp::kPerturb, f});
            break;
        case ExperimentKind::kErrorCorrect: {
            Setting setting{cfg.p_list.front(), cfg.rho,
                            "f=" + format_setting_value(cfg.correction_fraction),
                            LabelOp::kPerturb, cfg.correction_fraction};
            setting.evaluate_on_train = true;
            settings.push_back(setting);
            break;
        }
        case ExperimentKind::kSparsePositive:
            for (double g : cfg.keep_fractions)
                settings.push_back({cfg.p_list.front(), cfg.rho,
                                    "g=" + format_setting_value(g), LabelOp::kSparsify, g});
            break;
        case ExperimentKind::kRandomControl:
            settings.push_back(
                {cfg.p_list.front(), cfg.rho, "-", LabelOp::kRandomControl, 1.0});
            break;
        case ExperimentKind::kTiming:
            throw std::logic_error("settings_for: timing runs through run_timing");
    }
    return settings;
}

inline MethodResult run_method(const ExperimentConfig& cfg, const Setting& setting,
                               const RepData& rep, const SplitData& split,
                               const FeatureBlock& block, const VecXi& train_labels_used,
                               const std::string& method, std::uint64_t rep_seed) {
    const learn::LearnerKind kind = learn::learner_from_name(method);
    const auto& eval_pairs = setting.evaluate_on_train ? split.train : split.query;
    const VecXi& eval_labels =
        setting.evaluate_on_train ? split.train_labels : split.query_labels;
    const RowMatXd& eval_features =
        setting.evaluate_on_train ? block.train_features : block.query_features;

    MethodResult result;
    result.record.experiment = experiment_name(cfg.kind);
    result.record.seed = rep_seed;
    result.record.p = setting.p;
    result.record.rho = setting.rho;
    result.record.param = setting.param;
    result.record.method = method;

    Timer train_timer;
    VecXd scores;
    if (learn::is_correlation(kind)) {
        scores = eval::correlation_scores<double>(
            rep.x, eval_pairs,
            kind == learn::LearnerKind::kPearson ? eval::Correlation::kPearson
                                                 : eval::Correlation::kKendall);
    } else {
        learn::ClassifierModel model;
        model.kind = kind;
        model.histogram = cfg.feat_cfg.histogram;
        model.pca = block.pca;
        model.seed = rep_seed;
        model.config_hash = cfg.hash();
        learn::TrainingSet train_set;
        train_set.features = block.train_features;
        train_set.labels = train_labels_used;
        train_set.pair_indices = split.train;
        if (kind == learn::LearnerKind::kL1) {
            learn::L1FitOptions opts = cfg.l1;
            opts.seed = mix_seed(rep_seed, kStreamL1);
            model.l1 = learn::fit_l1_logistic(train_set, opts);
        } else {
            learn::MlpConfig nn_cfg = cfg.nn;
            nn_cfg.seed = mix_seed(rep_seed, kStreamNn);
            model.nn = learn::fit_mlp(train_set, nn_cfg);
        }
        scores = learn::predict_scores(model, eval_features);
        result.model = std::move(model);
        result.has_model = true;
    }
    result.record.wall_ms = train_timer.elapsed_ms();

    if (eval_labels.size() < 2 || eval_labels.minCoeff() == eval_labels.maxCoeff())
        throw std::runtime_error("evaluation labels are single-class; cannot compute AUC");
    result.record.auc = eval::auc<double>(scores, eval_labels);
    result.roc = eval::roc<double>(scores, eval_labels);
    return result;
}

inline std::string sanitize_token(std::string text) {
    for (char& c : text)
        if (c == '=' || c == '.' || c == '-') c = '_';
    return text;
}

}  // namespace detail

struct PipelineResult {
    std::vector<io::MetricRecord> records;
    // Averaged ROC per (setting, method), keyed by a human-readable tag.
    std::vector<std::pair<std::string, eval::RocCurve>> roc_curves;
};

inline PipelineResult run_pipeline(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.kind == ExperimentKind::kTiming)
        throw ConfigError("run_pipeline: use run_timing for timing experiments");

    const std::uint64_t config_hash = cfg.hash();
    const bool writing = !cfg.out_dir.empty();
    namespace fs = std::filesystem;
    if (writing) {
        fs::create_directories(fs::path(cfg.out_dir) / "models");
        fs::create_directories(fs::path(cfg.out_dir) / "roc");
        auto echo = cfg.to_json();
        echo["config_hash"] = to_hex(config_hash);
        std::ofstream out(fs::path(cfg.out_dir) / "config.json");
        if (!out) throw std::runtime_error("cannot write config echo in " + cfg.out_dir);
        out << echo.dump(2) << "\n";
    }

    PipelineResult result;
    const auto settings = detail::settings_for(cfg);
    for (const auto& setting : settings) {
        std::map<std::string, std::vector<eval::RocCurve>> curves_by_method;
        for (int rep_index = 0; rep_index < cfg.repetitions; ++rep_index) {
            const std::uint64_t rep_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rep_index));
            const std::string context = std::string(experiment_name(cfg.kind)) + " p=" +
                                        std::to_string(setting.p) + " rho=" +
                                        format_short(setting.rho) + " param=" + setting.param +
                                        " rep=" + std::to_string(rep_index) + " seed=" +
                                        std::to_string(rep_seed);
            try {
                const auto rep = build_rep(cfg, setting.p, rep_seed);
                const auto split = make_split(cfg, rep, setting.p, setting.rho, rep_seed);
                const VecXi train_labels_used =
                    detail::apply_label_op(setting, split.train, split.train_labels, rep_seed);
                if (train_labels_used.minCoeff() == train_labels_used.maxCoeff())
                    throw std::runtime_error("training labels are single-class");
                const auto block = featurize_split(cfg, rep, split);
                for (const auto& method : cfg.learners) {
                    auto method_result = detail::run_method(cfg, setting, rep, split, block,
                                                            train_labels_used, method, rep_seed);
                    curves_by_method[method].push_back(method_result.roc);
                    result.records.push_back(method_result.record);
                    if (writing && method_result.has_model) {
                        const std::string name =
                            "p" + std::to_string(setting.p) + "_rho" +
                            detail::sanitize_token(format_short(setting.rho)) + "_" +
                            detail::sanitize_token(setting.param) + "_" + method + "_rep" +
                            std::to_string(rep_index) + ".sclm";
                        io::write_model((fs::path(cfg.out_dir) / "models" / name).string(),
                                        method_result.model);
                    }
                }
            } catch (const std::exception& e) {
                throw std::runtime_error(context + ": " + e.what());
            }
        }
        for (auto& [method, curves] : curves_by_method) {
            const std::string tag = std::string(experiment_name(cfg.kind)) + "_p" +
                                    std::to_string(setting.p) + "_rho" +
                                    detail::sanitize_token(format_short(setting.rho)) + "_" +
                                    detail::sanitize_token(setting.param) + "_" + method;
            result.roc_curves.emplace_back(tag, eval::average_roc(curves));
        }
    }

    if (writing) {
        const std::vector<std::pair<std::string, std::string>> preamble = {
            {"config_hash", to_hex(config_hash)}, {"seed", std::to_string(cfg.seed)}};
        io::write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), result.records,
                              preamble);
        for (const auto& [tag, curve] : result.roc_curves)
            io::write_roc_csv((fs::path(cfg.out_dir) / "roc" / (tag + ".csv")).string(), curve,
                              preamble);

        // Per-setting mean and standard error, shaped for plotting.
        std::ofstream summary(fs::path(cfg.out_dir) / "summary.csv");
        if (!summary) throw std::runtime_error("cannot write summary in " + cfg.out_dir);
        for (const auto& [key, value] : preamble) summary << "# " << key << "=" << value << "\n";
        summary << "experiment,p,rho,param,method,mean_auc,se_auc,repetitions\n";
        std::map<std::string, std::vector<double>> grouped;
        for (const auto& rec : result.records) {
            const std::string key = rec.experiment + "," + std::to_string(rec.p) + "," +
                                    format_short(rec.rho) + "," + rec.param + "," + rec.method;
            grouped[key].push_back(rec.auc);
        }
        for (const auto& [key, values] : grouped) {
            double sum = 0.0, sum_sq = 0.0;
            for (double v : values) {
                sum += v;
                sum_sq += v * v;
            }
            const double n = static_cast<double>(values.size());
            const double mean = sum / n;
            const double se =
                values.size() > 1 ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / n) / (n - 1)) / n)
                                  : 0.0;
            summary << key << "," << format_double(mean) << "," << format_double(se) << ","
                    << values.size() << "\n";
        }
    }
    return result;
}

// Wall-clock measurements: featurization over the full ordered pair space per
// p, and training at fixed |T| while |Q| grows.
inline std::vector<io::MetricRecord> run_timing(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<io::MetricRecord> records;

    auto base_record = [&cfg](Index p, const std::string& param, const std::string& method,
                              std::uint64_t seed, double wall_ms) {
        io::MetricRecord rec;
        rec.experiment = "timing";
        rec.seed = seed;
        rec.p = p;
        rec.rho = 0.0;
        rec.param = param;
        rec.method = method;
        rec.auc = 0.0;
        rec.wall_ms = wall_ms;
        return rec;
    };

    for (Index p : cfg.timing_p) {
        for (int rep_index = 0; rep_index < cfg.repetitions; ++rep_index) {
            const std::uint64_t rep_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rep_index));
            const auto spec = sim::sample_scm(p, cfg.sim.p_lat, cfg.sim.density_for(p),
                                              cfg.sim.cyclic, mix_seed(rep_seed, 1));
            const auto sim_out =
                sim::simulate(spec, cfg.sim.n_obs, {}, mix_seed(rep_seed, 3));
            const pairs::PairSpace space(static_cast<int>(p));
            std::vector<Index> all_pairs(static_cast<std::size_t>(space.pair_count()));
            for (std::size_t k = 0; k < all_pairs.size(); ++k)
                all_pairs[k] = static_cast<Index>(k);
            Timer timer;
            const RowMatXd raw = feat::build_raw_features<double>(
                sim_out.observational.values, all_pairs, cfg.feat_cfg.histogram, cfg.threads);
            records.push_back(base_record(p, "featurize_full", "-", rep_seed, timer.elapsed_ms()));
            if (raw.rows() != space.pair_count())
                throw std::logic_error("run_timing: featurization row count mismatch");
        }
    }

    // Training time at fixed |T| as |Q| grows: same training pairs; only the
    // query side of the PCA input changes.
    const Index p_train = cfg.p_list.front();
    for (Index scale : {Index{1}, cfg.timing_query_growth}) {
        const Index query_size = cfg.timing_query_size * scale;
        for (int rep_index = 0; rep_index < cfg.repetitions; ++rep_index) {
            const std::uint64_t rep_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rep_index));
            const auto spec = sim::sample_scm(p_train, cfg.sim.p_lat,
                                              cfg.sim.density_for(p_train), cfg.sim.cyclic,
                                              mix_seed(rep_seed, 1));
            const auto sim_out = sim::simulate(spec, cfg.sim.n_obs, {}, mix_seed(rep_seed, 3));
            const auto truth = sim::ancestral_truth(spec);

            const pairs::PairSpace space(static_cast<int>(p_train));
            if (cfg.timing_train_size + query_size > space.pair_count())
                throw ConfigError("config: timing train+query exceeds the pair space");
            std::vector<Index> order(static_cast<std::size_t>(space.pair_count()));
            for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<Index>(k);
            Rng rng(mix_seed(rep_seed, 4));
            rng.shuffle(order);
            std::vector<Index> train_pairs(order.begin(), order.begin() + cfg.timing_train_size);
            std::vector<Index> query_pairs(order.begin() + cfg.timing_train_size,
                                           order.begin() + cfg.timing_train_size + query_size);

            std::vector<Index> all_pairs = train_pairs;
            all_pairs.insert(all_pairs.end(), query_pairs.begin(), query_pairs.end());
            const RowMatXd raw = feat::build_raw_features<double>(
                sim_out.observational.values, all_pairs, cfg.feat_cfg.histogram, cfg.threads);
            const int dim =
                static_cast<int>(std::min<Eigen::Index>(cfg.feat_cfg.pca_dim, raw.cols()));
            const auto pca = feat::pca_fit<double>(raw, dim);
            const RowMatXd features = feat::pca_transform(pca, raw);

            learn::TrainingSet train_set;
            train_set.features = features.topRows(cfg.timing_train_size);
            train_set.labels.resize(cfg.timing_train_size);
            for (Index r = 0; r < cfg.timing_train_size; ++r) {
                const auto [i, j] =
                    pairs::pair_of(train_pairs[static_cast<std::size_t>(r)],
                                   static_cast<int>(p_train));
                train_set.labels[r] = truth(i, j);
            }
            if (train_set.labels.minCoeff() == train_set.labels.maxCoeff())
                throw std::runtime_error("run_timing: single-class training labels at p=" +
                                         std::to_string(p_train));
            learn::L1FitOptions opts = cfg.l1;
            opts.seed = mix_seed(rep_seed, 5);
            Timer timer;
            learn::fit_l1_logistic(train_set, opts);
            records.push_back(base_record(p_train, "train_q=" + std::to_string(query_size), "l1",
                                          rep_seed, timer.elapsed_ms()));
        }
    }

    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        const std::vector<std::pair<std::string, std::string>> preamble = {
            {"config_hash", to_hex(cfg.hash())}, {"seed", std::to_string(cfg.seed)}};
        io::write_metrics_csv(
            (std::filesystem::path(cfg.out_dir) / "timing.csv").string(), records, preamble);
    }
    return records;
}

}  // namespace scl::pipe
