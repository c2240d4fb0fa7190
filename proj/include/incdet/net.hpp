#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "incdet/dataset.hpp"
#include "incdet/errors.hpp"
#include "incdet/rng.hpp"

namespace incdet::learners {

struct NetParams {
    int hidden_width = 16;
    double learning_rate = 0.1;
    int epochs = 150;
    int batch_size = 32;
    double init_scale = 0.5;
    std::uint64_t seed = 1;

    void validate() const {
        if (hidden_width < 1) throw ConfigError("net: hidden_width must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("net: learning_rate must be > 0");
        if (epochs < 0) throw ConfigError("net: epochs must be >= 0");
        if (batch_size < 1) throw ConfigError("net: batch_size must be >= 1");
        if (!(init_scale > 0.0)) throw ConfigError("net: init_scale must be > 0");
    }
};

/// One hidden layer, rectifier activation, sigmoid output, trained with
/// seeded mini-batch SGD on binary cross-entropy. Parameters live in one
/// flat vector: W1 (h x d, row-major), b1 (h), W2 (h), b2.
class Net {
public:
    static Net train(const datagen::Dataset& dev, const NetParams& params) {
        params.validate();
        if (dev.empty()) throw TrainError("net: empty training set");

        std::size_t positives = 0;
        for (const auto& e : dev.examples) positives += e.z;
        if (positives == 0 || positives == dev.size())
            throw TrainError("net: single-class training set");

        Net net = initialize(dev.dim, params);
        Rng shuffle_rng(derive_seed(params.seed, "net/shuffle"));
        std::vector<std::size_t> order(dev.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        const std::size_t batch = static_cast<std::size_t>(params.batch_size);
        std::vector<double> grad(net.params_.size());

        for (int epoch = 0; epoch < params.epochs; ++epoch) {
            shuffle_rng.shuffle(order);
            double epoch_loss = 0.0;
            for (std::size_t start = 0; start < order.size(); start += batch) {
                const std::size_t stop = std::min(start + batch, order.size());
                std::fill(grad.begin(), grad.end(), 0.0);
                double batch_loss = 0.0;
                for (std::size_t i = start; i < stop; ++i)
                    batch_loss += net.accumulate(dev.examples[order[i]], grad);
                const double scale = 1.0 / static_cast<double>(stop - start);
                for (std::size_t p = 0; p < grad.size(); ++p)
                    net.params_[p] -= params.learning_rate * scale * grad[p];
                epoch_loss += batch_loss;
            }
            epoch_loss /= static_cast<double>(order.size());
            if (!std::isfinite(epoch_loss))
                throw TrainError("net: training diverged at epoch " + std::to_string(epoch));
        }
        return net;
    }

    double score(const std::vector<double>& x) const {
        if (x.size() != dim_) throw Error("net: feature dimension mismatch");
        return sigmoid(logit(x));
    }

    /// Mean binary cross-entropy over a dataset, computed from the logit so
    /// endpoint scores stay finite.
    double loss_on(const datagen::Dataset& data) const {
        double total = 0.0;
        for (const auto& e : data.examples) {
            const double a = logit(e.features);
            total += softplus(a) - static_cast<double>(e.z) * a;
        }
        return total / static_cast<double>(data.size());
    }

    /// Full-batch gradient of loss_on with respect to the flat parameters.
    std::vector<double> gradient_on(const datagen::Dataset& data) const {
        std::vector<double> grad(params_.size(), 0.0);
        Net copy = *this;
        for (const auto& e : data.examples) copy.accumulate(e, grad);
        const double scale = 1.0 / static_cast<double>(data.size());
        for (auto& g : grad) g *= scale;
        return grad;
    }

    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }
    std::size_t dim() const { return dim_; }
    int hidden_width() const { return static_cast<int>(hidden_); }

    static Net from_parts(std::size_t dim, int hidden_width, std::vector<double> params) {
        Net n;
        n.dim_ = dim;
        n.hidden_ = static_cast<std::size_t>(hidden_width);
        if (params.size() != n.dim_ * n.hidden_ + 2 * n.hidden_ + 1)
            throw ParseError("net: parameter count mismatch");
        n.params_ = std::move(params);
        return n;
    }

    static Net initialize(std::size_t dim, const NetParams& params) {
        Net net;
        net.dim_ = dim;
        net.hidden_ = static_cast<std::size_t>(params.hidden_width);
        net.params_.resize(dim * net.hidden_ + 2 * net.hidden_ + 1);
        Rng rng(derive_seed(params.seed, "net/init"));
        for (auto& w : net.params_) w = rng.uniform(-params.init_scale, params.init_scale);
        return net;
    }

private:
    std::size_t dim_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> params_;

    static double sigmoid(double a) {
        return a >= 0.0 ? 1.0 / (1.0 + std::exp(-a))
                        : std::exp(a) / (1.0 + std::exp(a));
    }

    static double softplus(double a) {
        return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
    }

    // params_ layout offsets
    std::size_t w1(std::size_t h, std::size_t j) const { return h * dim_ + j; }
    std::size_t b1(std::size_t h) const { return hidden_ * dim_ + h; }
    std::size_t w2(std::size_t h) const { return hidden_ * dim_ + hidden_ + h; }
    std::size_t b2() const { return hidden_ * dim_ + 2 * hidden_; }

    double logit(const std::vector<double>& x) const {
        double a = params_[b2()];
        for (std::size_t h = 0; h < hidden_; ++h) {
            double pre = params_[b1(h)];
            for (std::size_t j = 0; j < dim_; ++j) pre += params_[w1(h, j)] * x[j];
            if (pre > 0.0) a += params_[w2(h)] * pre;
        }
        return a;
    }

    /// Adds one example's loss gradient into grad; returns its loss term.
    double accumulate(const datagen::LabeledExample& e, std::vector<double>& grad) const {
        std::vector<double> pre(hidden_);
        double a = params_[b2()];
        for (std::size_t h = 0; h < hidden_; ++h) {
            double p = params_[b1(h)];
            for (std::size_t j = 0; j < dim_; ++j) p += params_[w1(h, j)] * e.features[j];
            pre[h] = p;
            if (p > 0.0) a += params_[w2(h)] * p;
        }
        const double y = sigmoid(a);
        const double da = y - static_cast<double>(e.z);
        grad[b2()] += da;
        for (std::size_t h = 0; h < hidden_; ++h) {
            const double act = pre[h] > 0.0 ? pre[h] : 0.0;
            grad[w2(h)] += da * act;
            if (pre[h] > 0.0) {
                const double dh = da * params_[w2(h)];
                grad[b1(h)] += dh;
                for (std::size_t j = 0; j < dim_; ++j) grad[w1(h, j)] += dh * e.features[j];
            }
        }
        return softplus(a) - static_cast<double>(e.z) * a;
    }
};

} // namespace incdet::learners
