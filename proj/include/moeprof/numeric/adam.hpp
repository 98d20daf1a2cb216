#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "moeprof/numeric/params.hpp"

namespace moeprof::numeric {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment buffers for one parameter set, plus the completed
/// update count.
template <typename T>
struct AdamState {
    std::uint64_t step = 0;
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    AdamHyper hyper;
};

/// Bias-corrected Adam (Kingma & Ba). Frozen leaves are skipped and keep
/// their moments at zero.
template <typename T>
class Adam {
public:
    Adam(ParamSet<T>& params, AdamHyper hyper) : params_(&params) {
        state_.hyper = hyper;
        for (const auto& [_, p] : params.entries()) {
            state_.m.emplace_back(p.shape(), T{0});
            state_.v.emplace_back(p.shape(), T{0});
        }
    }

    /// Applies one update from the gradients currently held by the leaves.
    /// Throws NumericError naming the parameter on a non-finite gradient;
    /// no parameter is modified in that case.
    void step() {
        auto& entries = params_->entries();
        if (entries.size() != state_.m.size()) throw ContractError("adam: parameter set changed after construction");
        for (const auto& [name, p] : entries) {
            if (!p.requires_grad() || !p.node()->has_grad) continue;
            for (T g : p.node()->grad.data()) {
                if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in parameter '" + name + "'");
            }
        }
        ++state_.step;
        const auto& h = state_.hyper;
        const double t = static_cast<double>(state_.step);
        const double c1 = 1.0 - std::pow(h.beta1, t);
        const double c2 = 1.0 - std::pow(h.beta2, t);
        for (std::size_t k = 0; k < entries.size(); ++k) {
            auto& p = entries[k].second;
            if (!p.requires_grad() || !p.node()->has_grad) continue;
            auto& w = p.mutable_value();
            const auto& g = p.node()->grad;
            auto& m = state_.m[k];
            auto& v = state_.v[k];
            for (std::size_t i = 0; i < w.numel(); ++i) {
                const double gi = static_cast<double>(g[i]);
                const double mi = h.beta1 * static_cast<double>(m[i]) + (1.0 - h.beta1) * gi;
                const double vi = h.beta2 * static_cast<double>(v[i]) + (1.0 - h.beta2) * gi * gi;
                m[i] = static_cast<T>(mi);
                v[i] = static_cast<T>(vi);
                const double update = h.lr * (mi / c1) / (std::sqrt(vi / c2) + h.eps);
                w[i] = static_cast<T>(static_cast<double>(w[i]) - update);
            }
        }
    }

    const AdamState<T>& state() const { return state_; }
    void set_lr(double lr) { state_.hyper.lr = lr; }

private:
    ParamSet<T>* params_;
    AdamState<T> state_;
};

}  // namespace moeprof::numeric
