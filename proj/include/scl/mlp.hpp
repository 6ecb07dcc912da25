#pragma once

#include "scl/logistic.hpp"
#include "scl/rng.hpp"
#include "scl/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace scl::learn {

struct MlpConfig {
    std::vector<Eigen::Index> hidden = {256, 256, 128, 64};
    double learning_rate = 1e-3;
    int epochs = 30;
    Eigen::Index batch_size = 256;
    std::uint64_t seed = 0;

    void validate() const {
        for (auto h : hidden)
            if (h < 1) throw std::invalid_argument("MlpConfig: hidden widths must be positive");
        if (learning_rate <= 0.0) throw std::invalid_argument("MlpConfig: learning_rate must be positive");
        if (epochs < 0) throw std::invalid_argument("MlpConfig: epochs must be non-negative");
        if (batch_size < 1) throw std::invalid_argument("MlpConfig: batch_size must be positive");
    }
};

// Fully connected net, ReLU hidden activations, sigmoid output. Layer l maps
// sizes[l] -> sizes[l+1] with weights[l] shaped (out x in).
struct MlpModel {
    std::vector<MatXd> weights;
    std::vector<VecXd> biases;
    Eigen::Index input_dim = 0;
    MlpConfig config;

    Eigen::Index parameter_count() const {
        Eigen::Index count = 0;
        for (std::size_t l = 0; l < weights.size(); ++l)
            count += weights[l].size() + biases[l].size();
        return count;
    }
};

struct MlpGradients {
    std::vector<MatXd> weights;
    std::vector<VecXd> biases;
};

namespace detail {

inline std::vector<Eigen::Index> layer_sizes(Eigen::Index input_dim, const MlpConfig& cfg) {
    std::vector<Eigen::Index> sizes;
    sizes.push_back(input_dim);
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(1);
    return sizes;
}

// Pre-activations and activations for a batch held column-wise (unit x sample).
struct ForwardPass {
    std::vector<MatXd> pre;   // z_l, one per layer
    std::vector<MatXd> act;   // a_0 = input, a_l = relu(z_l), final sigmoid
};

inline ForwardPass forward(const MlpModel& model, const Eigen::Ref<const MatXd>& batch_cols) {
    ForwardPass pass;
    const std::size_t layers = model.weights.size();
    pass.pre.resize(layers);
    pass.act.resize(layers + 1);
    pass.act[0] = batch_cols;
    for (std::size_t l = 0; l < layers; ++l) {
        pass.pre[l] = (model.weights[l] * pass.act[l]).colwise() + model.biases[l];
        if (l + 1 < layers) {
            pass.act[l + 1] = pass.pre[l].cwiseMax(0.0);
        } else {
            pass.act[l + 1] = pass.pre[l].unaryExpr([](double v) { return sigmoid(v); });
        }
    }
    return pass;
}

}  // namespace detail

inline MlpModel mlp_init(Eigen::Index input_dim, const MlpConfig& cfg) {
    cfg.validate();
    if (input_dim < 1) throw std::invalid_argument("mlp_init: input_dim must be positive");
    MlpModel model;
    model.input_dim = input_dim;
    model.config = cfg;
    const auto sizes = detail::layer_sizes(input_dim, cfg);
    Rng rng(mix_seed(cfg.seed, 0x91));
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const Eigen::Index fan_in = sizes[l];
        const Eigen::Index fan_out = sizes[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        MatXd w(fan_out, fan_in);
        for (Eigen::Index r = 0; r < fan_out; ++r)
            for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-limit, limit);
        model.weights.push_back(std::move(w));
        model.biases.push_back(VecXd::Zero(fan_out));
    }
    return model;
}

inline VecXd predict(const MlpModel& model, const Eigen::Ref<const RowMatXd>& features) {
    if (features.cols() != model.input_dim)
        throw std::invalid_argument("predict: feature width does not match model");
    const MatXd cols = features.transpose();
    const auto pass = detail::forward(model, cols);
    return pass.act.back().row(0).transpose();
}

// Mean binary cross-entropy over the batch.
inline double mlp_loss(const MlpModel& model, const Eigen::Ref<const RowMatXd>& features,
                       const VecXi& labels) {
    const VecXd mu = predict(model, features);
    double loss = 0.0;
    for (Eigen::Index r = 0; r < mu.size(); ++r) {
        const double m = std::clamp(mu[r], 1e-12, 1.0 - 1e-12);
        loss -= labels[r] != 0 ? std::log(m) : std::log1p(-m);
    }
    return loss / static_cast<double>(mu.size());
}

// Backpropagated gradients of the mean BCE over the given batch.
inline MlpGradients mlp_gradients(const MlpModel& model, const Eigen::Ref<const RowMatXd>& features,
                                  const VecXi& labels) {
    const Eigen::Index m = features.rows();
    if (m < 1) throw std::invalid_argument("mlp_gradients: empty batch");
    const MatXd cols = features.transpose();
    const auto pass = detail::forward(model, cols);
    const std::size_t layers = model.weights.size();

    MlpGradients grads;
    grads.weights.resize(layers);
    grads.biases.resize(layers);

    // Sigmoid + BCE collapse to (mu - y) / m at the output pre-activation.
    MatXd delta(1, m);
    for (Eigen::Index c = 0; c < m; ++c)
        delta(0, c) = (pass.act[layers](0, c) - static_cast<double>(labels[c])) /
                      static_cast<double>(m);
    for (std::size_t l = layers; l-- > 0;) {
        grads.weights[l] = delta * pass.act[l].transpose();
        grads.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            delta = (model.weights[l].transpose() * delta)
                        .cwiseProduct(pass.pre[l - 1].unaryExpr(
                            [](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        }
    }
    return grads;
}

// Plain SGD on shuffled mini-batches. Zero epochs returns the fresh
// initialization untouched.
inline MlpModel fit_mlp(const TrainingSet& train, const MlpConfig& cfg = {}) {
    train.validate();
    cfg.validate();
    const Eigen::Index n = train.features.rows();
    if (n < 1) throw std::invalid_argument("fit_mlp: empty training set");

    MlpModel model = mlp_init(train.features.cols(), cfg);
    Rng rng(mix_seed(cfg.seed, 0x5d));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) order[static_cast<std::size_t>(r)] = r;

    RowMatXd batch;
    VecXi batch_labels;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
            const Eigen::Index size = std::min(cfg.batch_size, n - start);
            batch.resize(size, train.features.cols());
            batch_labels.resize(size);
            for (Eigen::Index r = 0; r < size; ++r) {
                batch.row(r) = train.features.row(order[static_cast<std::size_t>(start + r)]);
                batch_labels[r] = train.labels[order[static_cast<std::size_t>(start + r)]];
            }
            const auto grads = mlp_gradients(model, batch, batch_labels);
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                model.weights[l] -= cfg.learning_rate * grads.weights[l];
                model.biases[l] -= cfg.learning_rate * grads.biases[l];
            }
        }
    }
    return model;
}

}  // namespace scl::learn
