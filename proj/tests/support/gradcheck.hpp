#pragma once

// Central finite-difference oracle, independent of the backward closures it
// is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "moeprof/numeric/autodiff.hpp"

namespace moeprof::testing {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

inline double rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Perturbs every element of every input (one at a time), reevaluates
/// f and compares the central difference with the accumulated gradient.
/// `stride` > 1 samples a subset of coordinates per tensor.
inline GradCheckResult gradcheck(const std::function<numeric::Var<double>()>& f,
                                 std::vector<numeric::Var<double>> inputs, double h = 1e-5,
                                 std::size_t stride = 1) {
    for (auto& in : inputs) in.zero_grad();
    numeric::backward(f());
    std::vector<numeric::Tensor<double>> analytic;
    for (auto& in : inputs) analytic.push_back(in.grad());

    GradCheckResult res;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto& val = inputs[k].mutable_value();
        for (std::size_t i = 0; i < val.numel(); i += stride) {
            const double orig = val[i];
            val[i] = orig + h;
            const double fp = f().item();
            val[i] = orig - h;
            const double fm = f().item();
            val[i] = orig;
            const double num = (fp - fm) / (2.0 * h);
            res.max_rel_err = std::max(res.max_rel_err, rel_err(analytic[k][i], num));
            ++res.checked;
        }
    }
    return res;
}

}  // namespace moeprof::testing
