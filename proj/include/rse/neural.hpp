// Fully-connected Q-network: rectifier hidden layers, identity output, plain SGD on
// the squared TD error of the taken action's output slot.
#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rse/error.hpp"
#include "rse/numerics.hpp"
#include "rse/random.hpp"

namespace rse {

struct TrainBatch {
    std::vector<Vector> inputs;
    std::vector<std::size_t> action_indices;
    std::vector<double> targets;

    std::size_t size() const noexcept { return inputs.size(); }

    void validate() const {
        if (inputs.empty()) throw InvalidArgument("train batch is empty");
        if (action_indices.size() != inputs.size() || targets.size() != inputs.size())
            throw DimensionMismatch("train batch fields have different lengths");
    }
};

class QNetwork {
public:
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
    QNetwork(std::vector<std::size_t> layer_sizes, Rng &rng) : QNetwork(std::move(layer_sizes)) {
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
            const std::size_t end = bias_offset(l) + sizes_[l + 1];
            for (std::size_t k = weight_offset(l); k < end; ++k) params_[k] = (2.0 * rng.uniform() - 1.0) * bound;
        }
    }

    static QNetwork random(std::vector<std::size_t> layer_sizes, std::uint64_t seed) {
        Rng rng(seed);
        return QNetwork(std::move(layer_sizes), rng);
    }

    static QNetwork zeros(std::vector<std::size_t> layer_sizes) { return QNetwork(std::move(layer_sizes)); }

    static QNetwork from_parameters(std::vector<std::size_t> layer_sizes, std::span<const double> params) {
        QNetwork net(std::move(layer_sizes));
        net.set_parameters(params);
        return net;
    }

    const std::vector<std::size_t> &layer_sizes() const noexcept { return sizes_; }
    std::size_t input_size() const noexcept { return sizes_.front(); }
    std::size_t output_size() const noexcept { return sizes_.back(); }
    std::size_t layer_count() const noexcept { return sizes_.size() - 1; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    std::span<const double> parameters() const noexcept { return params_; }

    void set_parameters(std::span<const double> params) {
        if (params.size() != params_.size())
            throw DimensionMismatch("parameter count " + std::to_string(params.size()) + " != " +
                                    std::to_string(params_.size()));
        for (double v : params)
            if (!std::isfinite(v)) throw NonFinite("network parameter is not finite");
        params_.assign(params.begin(), params.end());
    }

    // Offsets into the flat parameter vector: layer l stores its (out x in) weight
    // matrix row-major, then its out biases.
    std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }
    std::size_t bias_offset(std::size_t l) const { return offsets_[l] + sizes_[l] * sizes_[l + 1]; }

    Vector forward(std::span<const double> x) const {
        std::vector<Vector> acts;
        forward_all(x, acts);
        return std::move(acts.back());
    }

    /// Mean over the batch of (target - Q(input)[action])^2.
    double loss(const TrainBatch &batch) const {
        batch.validate();
        double total = 0.0;
        for (std::size_t s = 0; s < batch.size(); ++s) {
            const double err = batch.targets[s] - output_at(forward(batch.inputs[s]), batch.action_indices[s]);
            total += err * err;
        }
        return total / static_cast<double>(batch.size());
    }

    /// Analytic gradient of loss(batch) w.r.t. the flat parameters; the loss is
    /// written to `loss_out` when given.
    std::vector<double> gradient(const TrainBatch &batch, double *loss_out = nullptr) const {
        batch.validate();
        std::vector<double> grad(params_.size(), 0.0);
        const double inv_n = 1.0 / static_cast<double>(batch.size());
        double total = 0.0;
        std::vector<Vector> acts;
        for (std::size_t s = 0; s < batch.size(); ++s) {
            forward_all(batch.inputs[s], acts);
            const std::size_t slot = batch.action_indices[s];
            const double err = batch.targets[s] - output_at(acts.back(), slot);
            total += err * err;

            // delta = dLoss/d(pre-activation) of the current layer
            Vector delta(output_size(), 0.0);
            delta[slot] = -2.0 * err * inv_n;
            for (std::size_t l = layer_count(); l-- > 0;) {
                const std::size_t in = sizes_[l];
                const std::size_t out = sizes_[l + 1];
                const Vector &a_in = acts[l];
                const std::size_t w0 = weight_offset(l);
                const std::size_t b0 = bias_offset(l);
                for (std::size_t o = 0; o < out; ++o) {
                    if (delta[o] == 0.0) continue;
                    grad[b0 + o] += delta[o];
                    for (std::size_t i = 0; i < in; ++i) grad[w0 + o * in + i] += delta[o] * a_in[i];
                }
                if (l == 0) break;
                Vector prev(in, 0.0);
                for (std::size_t o = 0; o < out; ++o) {
                    if (delta[o] == 0.0) continue;
                    for (std::size_t i = 0; i < in; ++i) prev[i] += params_[w0 + o * in + i] * delta[o];
                }
                // rectifier derivative; the stored activation is relu(z), so z > 0 iff a > 0
                for (std::size_t i = 0; i < in; ++i)
                    if (a_in[i] <= 0.0) prev[i] = 0.0;
                delta = std::move(prev);
            }
        }
        if (loss_out) *loss_out = total * inv_n;
        return grad;
    }

    /// One SGD step theta <- theta - eta * grad. Returns the loss before the update.
    double train_step(const TrainBatch &batch, double eta) {
        if (!(eta >= 0.0)) throw InvalidArgument("learning rate must be >= 0");
        double loss_before = 0.0;
        const std::vector<double> grad = gradient(batch, &loss_before);
        if (!std::isfinite(loss_before)) throw NonFinite("training loss is not finite; learning rate too large?");
        if (eta == 0.0) return loss_before;
        for (std::size_t k = 0; k < params_.size(); ++k) params_[k] -= eta * grad[k];
        for (double v : params_)
            if (!std::isfinite(v)) throw NonFinite("network parameters diverged; learning rate too large?");
        return loss_before;
    }

    friend bool operator==(const QNetwork &, const QNetwork &) = default;

    /// Text format: layer count, one size per line, then every parameter (flat
    /// order) on its own line with round-trip precision.
    void save(std::ostream &os) const {
        os << sizes_.size() << '\n';
        for (std::size_t s : sizes_) os << s << '\n';
        os << std::setprecision(std::numeric_limits<double>::max_digits10);
        for (double v : params_) os << v << '\n';
    }

    static QNetwork load(std::istream &is) {
        std::size_t count = 0;
        if (!(is >> count) || count < 2) throw IoError("network file: bad layer count");
        std::vector<std::size_t> sizes(count);
        for (auto &s : sizes)
            if (!(is >> s) || s == 0) throw IoError("network file: bad layer size");
        QNetwork net(sizes);
        std::vector<double> params(net.parameter_count());
        for (auto &v : params)
            if (!(is >> v)) throw IoError("network file: truncated parameter list");
        std::string extra;
        if (is >> extra) throw IoError("network file: trailing data");
        net.set_parameters(params);
        return net;
    }

private:
    explicit QNetwork(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
        if (sizes_.size() < 2) throw InvalidArgument("network needs at least input and output sizes");
        std::size_t total = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw InvalidArgument("layer sizes must be positive");
            offsets_.push_back(total);
            total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
        }
        params_.assign(total, 0.0);
    }

    double output_at(const Vector &out, std::size_t slot) const {
        if (slot >= out.size()) throw DimensionMismatch("action index " + std::to_string(slot) + " out of range");
        return out[slot];
    }

    // acts[0] = input, acts[l] = output of layer l (rectified for hidden layers).
    void forward_all(std::span<const double> x, std::vector<Vector> &acts) const {
        if (x.size() != input_size())
            throw DimensionMismatch("input length " + std::to_string(x.size()) + " != " + std::to_string(input_size()));
        acts.resize(sizes_.size());
        acts[0].assign(x.begin(), x.end());
        for (std::size_t l = 0; l < layer_count(); ++l) {
            const std::size_t in = sizes_[l];
            const std::size_t out = sizes_[l + 1];
            const double *w = params_.data() + weight_offset(l);
            const double *b = params_.data() + bias_offset(l);
            Vector &y = acts[l + 1];
            y.assign(out, 0.0);
            const Vector &a = acts[l];
            const bool hidden = l + 1 < layer_count();
            for (std::size_t o = 0; o < out; ++o) {
                double z = b[o];
                for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * a[i];
                y[o] = hidden ? std::max(0.0, z) : z;
            }
        }
    }

    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
};

inline QNetwork sync_target(const QNetwork &online) { return online; }

/// Max relative error between the analytic gradient and central differences
/// (step 1e-5) over every parameter, relative to max(|analytic|, 1e-8).
inline double gradient_check(const QNetwork &net, const TrainBatch &batch, double step = 1e-5) {
    const std::vector<double> analytic = net.gradient(batch);
    std::vector<double> params(net.parameters().begin(), net.parameters().end());
    QNetwork probe = net;
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = params[k];
        params[k] = saved + step;
        probe.set_parameters(params);
        const double up = probe.loss(batch);
        params[k] = saved - step;
        probe.set_parameters(params);
        const double down = probe.loss(batch);
        params[k] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double rel = std::abs(analytic[k] - numeric) / std::max(std::abs(analytic[k]), 1e-8);
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace rse
