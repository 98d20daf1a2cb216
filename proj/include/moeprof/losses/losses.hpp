#pragma once

#include <cmath>

#include "moeprof/errors.hpp"
#include "moeprof/model/moe_model.hpp"
#include "moeprof/numeric/ops.hpp"

namespace moeprof::losses {

/// Train-split label statistics used to z-score regression targets.
struct NormStats {
    double age_mean = 0.0;
    double age_std = 1.0;
    double height_mean = 0.0;
    double height_std = 1.0;

    double age_to_z(double years) const { return (years - age_mean) / age_std; }
    double height_to_z(double cm) const { return (cm - height_mean) / height_std; }
    double age_from_z(double z) const { return z * age_std + age_mean; }
    double height_from_z(double z) const { return z * height_std + height_mean; }
};

/// Targets in natural units; gender may be fractional after mixup.
struct Targets {
    double height_cm = 0.0;
    double age_years = 0.0;
    double gender = 0.0;
};

template <typename T>
struct TaskLosses {
    numeric::Var<T> height;
    numeric::Var<T> age;
    numeric::Var<T> gender;
};

inline constexpr double kBceEps = 1e-7;

/// Squared error on z-scored age/height and binary cross-entropy on the
/// gender probability (soft targets allowed).
template <typename T>
TaskLosses<T> task_losses(const model::ModelOutput<T>& pred, const Targets& target, const NormStats& norm) {
    using namespace numeric;
    if (!(target.gender >= 0.0 && target.gender <= 1.0)) throw ContractError("gender target must lie in [0, 1]");
    const auto z = [](double v) { return Var<T>(Tensor<T>::scalar(static_cast<T>(v))); };
    TaskLosses<T> out;
    out.height = square(sub(pred.height_z, z(norm.height_to_z(target.height_cm))));
    out.age = square(sub(pred.age_z, z(norm.age_to_z(target.age_years))));
    out.gender = binary_cross_entropy(pred.gender_p, static_cast<T>(target.gender), static_cast<T>(kBceEps));
    return out;
}

/// Homoscedastic-uncertainty weighting with s_t = log(sigma_t^2):
///   L = sum_t exp(-s_t) * L_t / 2 + (s_height + s_age + s_gender) / 2
template <typename T>
numeric::Var<T> uncertainty_loss(const TaskLosses<T>& l, const numeric::Var<T>& s_height, const numeric::Var<T>& s_age,
                                 const numeric::Var<T>& s_gender) {
    using namespace numeric;
    const auto term = [](const Var<T>& loss, const Var<T>& s) {
        return add(scale(mul(exp(scale(s, T{-1})), loss), T(0.5)), scale(s, T(0.5)));
    };
    return add(add(term(l.height, s_height), term(l.age, s_age)), term(l.gender, s_gender));
}

/// Plain-double evaluation of the same expression, for reporting.
inline double uncertainty_loss_value(double l_height, double l_age, double l_gender, double s_height, double s_age,
                                     double s_gender) {
    return std::exp(-s_height) * l_height / 2 + std::exp(-s_age) * l_age / 2 + std::exp(-s_gender) * l_gender / 2 +
           (s_height + s_age + s_gender) / 2;
}

}  // namespace moeprof::losses
