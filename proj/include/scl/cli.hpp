#pragma once

#include "scl/classify.hpp"
#include "scl/io.hpp"
#include "scl/pipeline.hpp"
#include "scl/types.hpp"
#include "scl/util.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace scl::cli {

namespace detail {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    int threads = 0;
    std::string learner;
    // One --seed option per subcommand, all bound to the same value; the seed
    // counts as given when any of them was parsed.
    std::vector<CLI::Option*> seed_opts;
};

inline void attach_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--config", opts.config_path, "JSON config file");
    opts.seed_opts.push_back(sub->add_option("--seed", opts.seed, "master seed"));
    sub->add_option("--out", opts.out, "output file or directory");
    sub->add_option("--threads", opts.threads, "worker threads for featurization");
    sub->add_option("--learner", opts.learner, "learner: l1|nn|pearson|kendall");
}

inline bool seed_given(const CommonOpts& opts) {
    for (const auto* opt : opts.seed_opts)
        if (opt->count() > 0) return true;
    return false;
}

inline pipe::ExperimentConfig load_config(const CommonOpts& opts) {
    pipe::ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = pipe::config_from_file(opts.config_path);
    if (seed_given(opts)) cfg.seed = opts.seed;
    if (!opts.out.empty()) cfg.out_dir = opts.out;
    if (opts.threads > 0) cfg.threads = opts.threads;
    if (!opts.learner.empty()) cfg.learners = {opts.learner};
    cfg.validate();
    return cfg;
}

inline std::vector<std::pair<std::string, std::string>> preamble_for(
    const pipe::ExperimentConfig& cfg) {
    return {{"config_hash", to_hex(cfg.hash())}, {"seed", std::to_string(cfg.seed)}};
}

inline int run_simulate(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    if (cfg.out_dir.empty()) throw pipe::ConfigError("simulate: --out directory is required");
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    const Index p = cfg.p_list.front();
    const std::uint64_t rep_seed = mix_seed(cfg.seed, 0);
    const auto rep = pipe::build_rep(cfg, p, rep_seed);

    io::write_scm_json((fs::path(cfg.out_dir) / "scm.json").string(), rep.spec);
    sim::DataMatrix data;
    data.values = rep.x;
    data.intervention = rep.x_meta;
    io::write_dataset_csv((fs::path(cfg.out_dir) / "data.csv").string(), data,
                          preamble_for(cfg));
    const pairs::PairSpace pspace(static_cast<int>(p));
    io::PairLabelFile truth;
    truth.p = p;
    truth.pairs.resize(static_cast<std::size_t>(pspace.pair_count()));
    for (std::size_t k = 0; k < truth.pairs.size(); ++k) truth.pairs[k] = static_cast<Index>(k);
    truth.labels = pairs::labels_from_truth(rep.truth, truth.pairs);
    truth.header = preamble_for(cfg);
    io::write_pair_labels((fs::path(cfg.out_dir) / "truth.csv").string(), truth);

    const Index positives = truth.labels.sum();
    std::cout << "simulated p=" << p << " rows=" << rep.x.rows()
              << " pairs=" << truth.pairs.size() << " positives=" << positives << "\n"
              << "wrote " << cfg.out_dir << "/scm.json, data.csv, truth.csv\n";
    return 0;
}

inline int run_featurize(const CommonOpts& opts, const std::string& data_path,
                         const std::string& pairs_path) {
    auto cfg = load_config(opts);
    const auto data = io::read_dataset_csv(data_path);
    const auto pair_file = io::read_pair_labels(pairs_path);
    if (pair_file.p != data.values.cols())
        throw pipe::ConfigError("featurize: pair file p does not match dataset width");

    const RowMatXd raw = feat::build_raw_features<double>(data.values, pair_file.pairs,
                                                          cfg.feat_cfg.histogram, cfg.threads);
    const int dim = static_cast<int>(std::min<Eigen::Index>(cfg.feat_cfg.pca_dim, raw.cols()));
    const auto pca = feat::pca_fit<double>(raw, dim);

    io::FeatureFile file;
    file.p = pair_file.p;
    file.pairs = pair_file.pairs;
    file.values = feat::pca_transform(pca, raw);
    file.config_hash = cfg.hash();
    file.seed = cfg.seed;
    const std::string out = cfg.out_dir.empty() ? "features.bin" : cfg.out_dir;
    if (out.size() > 4 && out.substr(out.size() - 4) == ".csv")
        io::write_features_csv(out, file);
    else
        io::write_features(out, file);
    std::cout << "featurized " << file.pairs.size() << " pairs to " << file.values.cols()
              << " dimensions; wrote " << out << "\n";
    return 0;
}

inline learn::TrainingSet make_training_set(const io::PairLabelFile& train_file,
                                            const RowMatXd& features) {
    learn::TrainingSet set;
    set.features = features;
    set.labels = train_file.labels;
    set.pair_indices = train_file.pairs;
    for (Eigen::Index r = 0; r < set.labels.size(); ++r)
        if (set.labels[r] < 0)
            throw pipe::ConfigError("train: every training pair needs a 0/1 label");
    return set;
}

inline int run_train(const CommonOpts& opts, const std::string& data_path,
                     const std::string& train_path, const std::string& query_path) {
    auto cfg = load_config(opts);
    const learn::LearnerKind kind = learn::learner_from_name(cfg.learners.front());
    if (learn::is_correlation(kind))
        throw pipe::ConfigError("train: correlation baselines are not trained; use l1 or nn");

    const auto data = io::read_dataset_csv(data_path);
    const auto train_file = io::read_pair_labels(train_path);
    if (train_file.p != data.values.cols())
        throw pipe::ConfigError("train: pair file p does not match dataset width");

    std::vector<Index> all_pairs = train_file.pairs;
    if (!query_path.empty()) {
        const auto query_file = io::read_pair_labels(query_path);
        if (query_file.p != train_file.p)
            throw pipe::ConfigError("train: query pair file p does not match training file");
        std::set<Index> train_set(train_file.pairs.begin(), train_file.pairs.end());
        for (Index k : query_file.pairs) {
            if (train_set.count(k) > 0)
                throw pipe::ConfigError("train: query pairs overlap the training pairs");
            all_pairs.push_back(k);
        }
    }

    const RowMatXd raw = feat::build_raw_features<double>(data.values, all_pairs,
                                                          cfg.feat_cfg.histogram, cfg.threads);
    const int dim = static_cast<int>(std::min<Eigen::Index>(cfg.feat_cfg.pca_dim, raw.cols()));

    learn::ClassifierModel model;
    model.kind = kind;
    model.histogram = cfg.feat_cfg.histogram;
    model.pca = feat::pca_fit<double>(raw, dim);
    model.seed = cfg.seed;
    model.config_hash = cfg.hash();

    const RowMatXd features = feat::pca_transform(model.pca, raw);
    const auto train_set = make_training_set(
        train_file, features.topRows(static_cast<Eigen::Index>(train_file.pairs.size())));

    if (kind == learn::LearnerKind::kL1) {
        learn::L1FitOptions fit_opts = cfg.l1;
        fit_opts.seed = mix_seed(cfg.seed, pipe::kStreamL1);
        model.l1 = learn::fit_l1_logistic(train_set, fit_opts);
        std::cout << "fitted l1 model: lambda=" << format_short(model.l1.lambda)
                  << " nonzero=" << (model.l1.coefficients.array() != 0.0).count() << "/"
                  << model.l1.coefficients.size() << "\n";
    } else {
        learn::MlpConfig nn_cfg = cfg.nn;
        nn_cfg.seed = mix_seed(cfg.seed, pipe::kStreamNn);
        model.nn = learn::fit_mlp(train_set, nn_cfg);
        std::cout << "fitted nn model: parameters=" << model.nn.parameter_count() << " epochs="
                  << nn_cfg.epochs << "\n";
    }

    const std::string out = cfg.out_dir.empty() ? "model.sclm" : cfg.out_dir;
    io::write_model(out, model);
    std::cout << "wrote " << out << "\n";
    return 0;
}

inline int run_predict(const CommonOpts& opts, const std::string& model_path,
                       const std::string& data_path, const std::string& pairs_path) {
    auto cfg = load_config(opts);
    const auto model = io::read_model(model_path);
    const auto data = io::read_dataset_csv(data_path);
    const auto pair_file = io::read_pair_labels(pairs_path);
    if (pair_file.p != data.values.cols())
        throw pipe::ConfigError("predict: pair file p does not match dataset width");

    io::PairScoreFile scores;
    scores.p = pair_file.p;
    scores.pairs = pair_file.pairs;
    scores.scores = learn::score_pairs(model, data.values, pair_file.pairs);
    scores.header = {{"model_seed", std::to_string(model.seed)},
                     {"config_hash", to_hex(model.config_hash)},
                     {"learner", learn::learner_name(model.kind)}};
    const std::string out = cfg.out_dir.empty() ? "scores.csv" : cfg.out_dir;
    io::write_pair_scores(out, scores);
    std::cout << "scored " << scores.pairs.size() << " pairs with "
              << learn::learner_name(model.kind) << "; wrote " << out << "\n";
    return 0;
}

inline int run_eval(const CommonOpts& opts, const std::string& scores_path,
                    const std::string& truth_path) {
    auto cfg = load_config(opts);
    const auto scores = io::read_pair_scores(scores_path);
    const auto truth = io::read_pair_labels(truth_path);
    std::unordered_map<Index, int> label_of;
    for (std::size_t r = 0; r < truth.pairs.size(); ++r) {
        const int label = truth.labels[static_cast<Eigen::Index>(r)];
        if (label >= 0) label_of.emplace(truth.pairs[r], label);
    }
    VecXi labels(static_cast<Eigen::Index>(scores.pairs.size()));
    for (std::size_t r = 0; r < scores.pairs.size(); ++r) {
        const auto hit = label_of.find(scores.pairs[r]);
        if (hit == label_of.end())
            throw std::runtime_error("eval: pair " + std::to_string(scores.pairs[r]) +
                                     " has no label in " + truth_path);
        labels[static_cast<Eigen::Index>(r)] = hit->second;
    }
    const double auc = eval::auc<double>(scores.scores, labels);
    std::cout << "pairs=" << scores.pairs.size() << " positives=" << labels.sum()
              << " auc=" << format_short(auc) << "\n";
    if (!cfg.out_dir.empty()) {
        io::write_roc_csv(cfg.out_dir, eval::roc<double>(scores.scores, labels),
                          {{"source", scores_path}});
        std::cout << "wrote " << cfg.out_dir << "\n";
    }
    return 0;
}

inline int run_experiment(const CommonOpts& opts) {
    const auto cfg = load_config(opts);
    const auto result = pipe::run_pipeline(cfg);

    std::map<std::string, std::vector<double>> grouped;
    for (const auto& rec : result.records) {
        const std::string key = rec.experiment + " p=" + std::to_string(rec.p) + " rho=" +
                                format_short(rec.rho) + " param=" + rec.param + " method=" +
                                rec.method;
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
        std::cout << key << " auc=" << format_short(mean) << " se=" << format_short(se)
                  << " reps=" << values.size() << "\n";
    }
    if (!cfg.out_dir.empty()) std::cout << "artifacts in " << cfg.out_dir << "\n";
    return 0;
}

inline int run_timing_cmd(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    cfg.kind = pipe::ExperimentKind::kTiming;
    cfg.validate();
    const auto records = pipe::run_timing(cfg);

    std::map<std::string, std::pair<double, int>> grouped;
    for (const auto& rec : records) {
        auto& slot = grouped["p=" + std::to_string(rec.p) + " " + rec.param];
        slot.first += rec.wall_ms;
        slot.second += 1;
    }
    for (const auto& [key, slot] : grouped)
        std::cout << key << " mean_ms=" << format_short(slot.first / slot.second)
                  << " reps=" << slot.second << "\n";
    if (!cfg.out_dir.empty()) std::cout << "wrote " << cfg.out_dir << "/timing.csv\n";
    return 0;
}

}  // namespace detail

// Entry point shared by the binary and the in-process CLI tests. Returns the
// process exit code: 0 success, 2 configuration/input error, 3 runtime error.
inline int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"supervised ancestral pair classification toolkit"};
    app.require_subcommand(1);

    detail::CommonOpts opts;
    std::string data_path, pairs_path, train_path, query_path, model_path, scores_path,
        truth_path;

    auto* simulate = app.add_subcommand(
        "simulate", "sample an SCM, simulate data, and write ground-truth pair labels");
    detail::attach_common(simulate, opts);

    auto* featurize =
        app.add_subcommand("featurize", "histogram-featurize pairs of a dataset and apply PCA");
    detail::attach_common(featurize, opts);
    featurize->add_option("data", data_path, "dataset CSV")->required();
    featurize->add_option("pairs", pairs_path, "pair file")->required();

    auto* train = app.add_subcommand("train", "fit a classifier on labeled pairs");
    detail::attach_common(train, opts);
    train->add_option("data", data_path, "dataset CSV")->required();
    train->add_option("train_pairs", train_path, "labeled training pair file")->required();
    train->add_option("query_pairs", query_path,
                      "optional query pair file included in the PCA fit");

    auto* predict = app.add_subcommand("predict", "score pairs with a trained model");
    detail::attach_common(predict, opts);
    predict->add_option("--model", model_path, "model file")->required();
    predict->add_option("data", data_path, "dataset CSV")->required();
    predict->add_option("pairs", pairs_path, "pair file to score")->required();

    auto* eval_cmd = app.add_subcommand("eval", "compute AUC and ROC of scores against labels");
    detail::attach_common(eval_cmd, opts);
    eval_cmd->add_option("scores", scores_path, "pair score file")->required();
    eval_cmd->add_option("truth", truth_path, "labeled pair file")->required();

    auto* experiment = app.add_subcommand("experiment", "run a full experiment protocol");
    detail::attach_common(experiment, opts);

    auto* timing = app.add_subcommand("timing", "measure featurization and training costs");
    detail::attach_common(timing, opts);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("scl");
    for (const auto& arg : args) argv.push_back(arg.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (simulate->parsed()) return detail::run_simulate(opts);
        if (featurize->parsed()) return detail::run_featurize(opts, data_path, pairs_path);
        if (train->parsed()) return detail::run_train(opts, data_path, train_path, query_path);
        if (predict->parsed()) return detail::run_predict(opts, model_path, data_path, pairs_path);
        if (eval_cmd->parsed()) return detail::run_eval(opts, scores_path, truth_path);
        if (experiment->parsed()) return detail::run_experiment(opts);
        if (timing->parsed()) return detail::run_timing_cmd(opts);
        std::cerr << "config error: no subcommand selected\n";
        return 2;
    } catch (const pipe::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace scl::cli
