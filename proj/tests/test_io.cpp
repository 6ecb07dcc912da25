#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "scl/io.hpp"
#include "scl/rng.hpp"

#include <cstdio>
#include <filesystem>

using namespace scl;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("scl_io_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("pair label files round trip, unlabeled pairs included") {
    TempDir dir;
    io::PairLabelFile file;
    file.p = 5;
    file.pairs = {0, 3, 7, 19};
    file.labels.resize(4);
    file.labels << 1, 0, -1, 1;
    file.header = {{"seed", "42"}};
    io::write_pair_labels(dir.file("labels.csv"), file);
    const auto back = io::read_pair_labels(dir.file("labels.csv"));
    CHECK(back.p == 5);
    CHECK(back.pairs == file.pairs);
    CHECK((back.labels.array() == file.labels.array()).all());

    io::PairLabelFile bad = file;
    bad.labels.resize(2);
    CHECK_THROWS_AS(io::write_pair_labels(dir.file("bad.csv"), bad), std::invalid_argument);
}

TEST_CASE("pair score files round trip exactly") {
    TempDir dir;
    io::PairScoreFile file;
    file.p = 4;
    file.pairs = {1, 5, 11};
    file.scores.resize(3);
    file.scores << 0.125, 1.0 / 3.0, 0.875;
    io::write_pair_scores(dir.file("scores.csv"), file);
    const auto back = io::read_pair_scores(dir.file("scores.csv"));
    CHECK(back.pairs == file.pairs);
    // format_double is round-trip exact.
    CHECK((back.scores.array() == file.scores.array()).all());
}

TEST_CASE("feature files round trip bit-exactly with metadata") {
    TempDir dir;
    Rng rng(80);
    io::FeatureFile file;
    file.p = 6;
    file.config_hash = 0xdeadbeefULL;
    file.seed = 99;
    for (Index k = 0; k < 12; ++k) file.pairs.push_back(k);
    file.values.resize(12, 7);
    for (Eigen::Index r = 0; r < 12; ++r)
        for (Eigen::Index c = 0; c < 7; ++c) file.values(r, c) = rng.normal();
    io::write_features(dir.file("phi.sclf"), file);
    const auto back = io::read_features(dir.file("phi.sclf"));
    CHECK(back.p == file.p);
    CHECK(back.config_hash == file.config_hash);
    CHECK(back.seed == file.seed);
    CHECK(back.pairs == file.pairs);
    CHECK((back.values.array() == file.values.array()).all());
}

TEST_CASE("corrupt magic or missing file is reported with the path") {
    TempDir dir;
    {
        auto out = std::ofstream(dir.file("junk.sclf"), std::ios::binary);
        out << "NOPE this is not a feature file";
    }
    CHECK_THROWS_WITH_AS(io::read_features(dir.file("junk.sclf")), doctest::Contains("junk.sclf"),
                         std::runtime_error);
    CHECK_THROWS_AS(io::read_features(dir.file("absent.sclf")), std::runtime_error);
}

TEST_CASE("classifier models round trip for both learner kinds") {
    TempDir dir;
    Rng rng(81);

    learn::ClassifierModel model;
    model.kind = learn::LearnerKind::kL1;
    model.seed = 7;
    model.config_hash = 1234;
    model.histogram.bins_per_axis = 8;
    model.pca.mean = VecXd::Random(64);
    model.pca.components = MatXd::Random(5, 64);
    model.pca.eigenvalues = VecXd::LinSpaced(5, 2.0, 0.1);
    model.l1.intercept = -1.5;
    model.l1.coefficients = VecXd::Random(5);
    model.l1.lambda = 0.01;
    io::write_model(dir.file("model.sclm"), model);
    const auto back = io::read_model(dir.file("model.sclm"));
    CHECK(back.kind == learn::LearnerKind::kL1);
    CHECK(back.seed == model.seed);
    CHECK(back.config_hash == model.config_hash);
    CHECK(back.histogram.bins_per_axis == 8);
    CHECK((back.pca.components.array() == model.pca.components.array()).all());
    CHECK(back.l1.intercept == model.l1.intercept);
    CHECK((back.l1.coefficients.array() == model.l1.coefficients.array()).all());

    learn::ClassifierModel nn_model;
    nn_model.kind = learn::LearnerKind::kNn;
    nn_model.histogram.bins_per_axis = 4;
    nn_model.pca.mean = VecXd::Random(16);
    nn_model.pca.components = MatXd::Random(3, 16);
    nn_model.pca.eigenvalues = VecXd::Constant(3, 1.0);
    learn::MlpConfig cfg;
    cfg.hidden = {4, 2};
    cfg.seed = 3;
    nn_model.nn = learn::mlp_init(3, cfg);
    io::write_model(dir.file("nn.sclm"), nn_model);
    const auto nn_back = io::read_model(dir.file("nn.sclm"));
    CHECK(nn_back.kind == learn::LearnerKind::kNn);
    REQUIRE(nn_back.nn.weights.size() == nn_model.nn.weights.size());
    for (std::size_t l = 0; l < nn_model.nn.weights.size(); ++l)
        CHECK((nn_back.nn.weights[l].array() == nn_model.nn.weights[l].array()).all());

    // Scoring through the deserialized model matches the original.
    RowMatXd rows = RowMatXd::Random(4, 3);
    CHECK((learn::predict_scores(nn_back, rows).array() ==
           learn::predict_scores(nn_model, rows).array())
              .all());
}

TEST_CASE("graph binary round trips scores and provenance") {
    TempDir dir;
    graphs::AncestralGraph g(4);
    g.scores(0, 1) = 0.75;
    g.provenance(0, 1) = static_cast<unsigned char>(graphs::Provenance::kPredicted);
    g.scores(2, 3) = 1.0;
    g.provenance(2, 3) = static_cast<unsigned char>(graphs::Provenance::kBackground);
    io::write_graph_binary(dir.file("graph.sclg"), g);
    const auto back = io::read_graph_binary(dir.file("graph.sclg"));
    CHECK(back.p == 4);
    CHECK((back.scores.array() == g.scores.array()).all());
    CHECK((back.provenance.array() == g.provenance.array()).all());
}

TEST_CASE("dataset csv round trips values and intervention metadata") {
    TempDir dir;
    sim::DataMatrix data;
    data.values.resize(3, 2);
    data.values << 1.5, -2.25,
                   0.0, 1e-7,
                   3.14159, 2.0;
    data.intervention = {-1, 0, 1};
    io::write_dataset_csv(dir.file("data.csv"), data);
    const auto back = io::read_dataset_csv(dir.file("data.csv"));
    CHECK((back.values.array() == data.values.array()).all());
    CHECK(back.intervention == data.intervention);
}

TEST_CASE("scm specs round trip through json") {
    const auto spec = sim::sample_scm(6, 2, 0.3, false, 44);
    TempDir dir;
    io::write_scm_json(dir.file("scm.json"), spec);
    const auto back = io::read_scm_json(dir.file("scm.json"));
    CHECK(back.p_obs == spec.p_obs);
    CHECK(back.p_lat == spec.p_lat);
    CHECK((back.weights.array() == spec.weights.array()).all());
    CHECK((back.noise_sd.array() == spec.noise_sd.array()).all());
    CHECK(back.intervention_model.knockdown_factor == spec.intervention_model.knockdown_factor);

    // Tampered version field is refused.
    auto doc = io::scm_to_json(spec);
    doc["version"] = 9;
    CHECK_THROWS_AS(io::scm_from_json(doc), std::runtime_error);
}

TEST_CASE("metric records round trip through csv") {
    TempDir dir;
    std::vector<io::MetricRecord> records;
    records.push_back({"vary_p", 42, 100, 0.5, "-", "l1", 0.8125, 1234.5});
    records.push_back({"perturb", 42, 200, 0.5, "f=0.3", "nn", 0.7, 99.0});
    io::write_metrics_csv(dir.file("metrics.csv"), records, {{"config", "abc"}});
    const auto back = io::read_metrics_csv(dir.file("metrics.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].experiment == "vary_p");
    CHECK(back[0].seed == 42);
    CHECK(back[0].p == 100);
    CHECK(back[0].rho == 0.5);
    CHECK(back[0].param == "-");
    CHECK(back[0].method == "l1");
    CHECK(back[0].auc == 0.8125);
    CHECK(back[1].param == "f=0.3");
    CHECK(back[1].wall_ms == 99.0);
}
