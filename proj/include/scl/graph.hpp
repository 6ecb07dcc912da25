#pragma once

#include "scl/pairspace.hpp"
#include "scl/types.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace scl::graphs {

enum class Provenance : unsigned char { kUndefined = 0, kBackground = 1, kPredicted = 2 };

// p x p ancestral score matrix; entry (i,j) is the belief that i is a causal
// ancestor of j. The diagonal is never defined.
struct AncestralGraph {
    int p = 0;
    MatXd scores;                      // undefined entries hold 0
    Mat<unsigned char> provenance;     // Provenance per entry

    explicit AncestralGraph(int p_in)
        : p(p_in),
          scores(MatXd::Zero(p_in, p_in)),
          provenance(Mat<unsigned char>::Zero(p_in, p_in)) {
        if (p < 2) throw std::invalid_argument("AncestralGraph: need at least two variables");
    }

    bool defined(int i, int j) const {
        return provenance(i, j) != static_cast<unsigned char>(Provenance::kUndefined);
    }
};

// Background labels are copied bit-exactly onto T; classifier scores fill Q.
inline AncestralGraph assemble(const std::vector<Index>& query, const VecXd& query_scores,
                               const std::vector<Index>& train, const VecXi& train_labels, int p) {
    if (static_cast<std::size_t>(query_scores.size()) != query.size())
        throw std::invalid_argument("assemble: query scores size mismatch");
    if (static_cast<std::size_t>(train_labels.size()) != train.size())
        throw std::invalid_argument("assemble: train labels size mismatch");
    pairs::BackgroundKnowledge bk;
    bk.train = train;
    bk.query = query;
    bk.check_disjoint();

    AncestralGraph g(p);
    for (std::size_t r = 0; r < train.size(); ++r) {
        const auto [i, j] = pairs::pair_of(train[r], p);
        g.scores(i, j) = static_cast<double>(train_labels[static_cast<Eigen::Index>(r)]);
        g.provenance(i, j) = static_cast<unsigned char>(Provenance::kBackground);
    }
    for (std::size_t r = 0; r < query.size(); ++r) {
        const auto [i, j] = pairs::pair_of(query[r], p);
        const double s = query_scores[static_cast<Eigen::Index>(r)];
        if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("assemble: score outside [0,1]");
        g.scores(i, j) = s;
        g.provenance(i, j) = static_cast<unsigned char>(Provenance::kPredicted);
    }
    return g;
}

// Error-correcting assembly: the fitted classifier's score is used for every
// pair, background labels included only through training.
inline AncestralGraph assemble_corrected(const std::vector<Index>& pair_set,
                                         const VecXd& scores, int p) {
    if (static_cast<std::size_t>(scores.size()) != pair_set.size())
        throw std::invalid_argument("assemble_corrected: scores size mismatch");
    AncestralGraph g(p);
    for (std::size_t r = 0; r < pair_set.size(); ++r) {
        const auto [i, j] = pairs::pair_of(pair_set[r], p);
        const double s = scores[static_cast<Eigen::Index>(r)];
        if (!(s >= 0.0 && s <= 1.0))
            throw std::invalid_argument("assemble_corrected: score outside [0,1]");
        g.scores(i, j) = s;
        g.provenance(i, j) = static_cast<unsigned char>(Provenance::kPredicted);
    }
    return g;
}

// Binary graph: entry 1 iff the defined score exceeds t.
inline Mat<int> threshold(const AncestralGraph& g, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("threshold: t must lie in [0,1]");
    Mat<int> out = Mat<int>::Zero(g.p, g.p);
    for (int i = 0; i < g.p; ++i)
        for (int j = 0; j < g.p; ++j)
            if (i != j && g.defined(i, j) && g.scores(i, j) > t) out(i, j) = 1;
    return out;
}

}  // namespace scl::graphs
