#pragma once

#include "scl/evaluate.hpp"
#include "scl/featurize.hpp"
#include "scl/logistic.hpp"
#include "scl/mlp.hpp"
#include "scl/pca.hpp"
#include "scl/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scl::learn {

enum class LearnerKind { kL1, kNn, kPearson, kKendall };

inline const char* learner_name(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::kL1: return "l1";
        case LearnerKind::kNn: return "nn";
        case LearnerKind::kPearson: return "pearson";
        case LearnerKind::kKendall: return "kendall";
    }
    return "unknown";
}

inline LearnerKind learner_from_name(const std::string& name) {
    if (name == "l1") return LearnerKind::kL1;
    if (name == "nn") return LearnerKind::kNn;
    if (name == "pearson") return LearnerKind::kPearson;
    if (name == "kendall") return LearnerKind::kKendall;
    throw std::invalid_argument("unknown learner '" + name + "' (expected l1|nn|pearson|kendall)");
}

inline bool is_correlation(LearnerKind kind) {
    return kind == LearnerKind::kPearson || kind == LearnerKind::kKendall;
}

// A trained scorer plus everything needed to run it on raw data: the
// featurization config and the PCA basis fitted alongside it.
struct ClassifierModel {
    LearnerKind kind = LearnerKind::kL1;
    feat::HistogramConfig histogram;
    feat::PcaModel pca;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    L1LogisticModel l1;  // populated when kind == kL1
    MlpModel nn;         // populated when kind == kNn
};

inline VecXd predict_scores(const ClassifierModel& model,
                            const Eigen::Ref<const RowMatXd>& features) {
    switch (model.kind) {
        case LearnerKind::kL1: return predict(model.l1, features);
        case LearnerKind::kNn: return predict(model.nn, features);
        default:
            throw std::invalid_argument(
                "predict_scores: correlation baselines score raw data, not feature rows");
    }
}

// End-to-end scoring of a pair set from a raw data matrix. Correlation
// baselines bypass featurization; learned models re-apply the stored
// histogram transform and PCA basis. Single-threaded by contract.
inline VecXd score_pairs(const ClassifierModel& model, const Eigen::Ref<const RowMatXd>& data,
                         const std::vector<Index>& pair_set) {
    if (model.kind == LearnerKind::kPearson)
        return eval::correlation_scores<double>(data, pair_set, eval::Correlation::kPearson);
    if (model.kind == LearnerKind::kKendall)
        return eval::correlation_scores<double>(data, pair_set, eval::Correlation::kKendall);
    const RowMatXd raw = feat::build_raw_features<double>(data, pair_set, model.histogram, 1);
    const RowMatXd features = feat::pca_transform(model.pca, raw);
    return predict_scores(model, features);
}

}  // namespace scl::learn
