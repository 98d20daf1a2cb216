#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "moeprof/numeric/autodiff.hpp"

namespace moeprof::numeric {

/// Ordered, named collection of trainable leaves. Order is registration
/// order, which fixes optimizer and checkpoint iteration.
template <typename T>
class ParamSet {
public:
    Var<T> add(const std::string& name, Tensor<T> init, bool trainable = true) {
        if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
        index_[name] = entries_.size();
        entries_.emplace_back(name, Var<T>::parameter(std::move(init), trainable));
        return entries_.back().second;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    const Var<T>& get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("unknown parameter: " + name);
        return entries_[it->second].second;
    }
    Var<T>& get(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("unknown parameter: " + name);
        return entries_[it->second].second;
    }

    const std::vector<std::pair<std::string, Var<T>>>& entries() const { return entries_; }
    std::vector<std::pair<std::string, Var<T>>>& entries() { return entries_; }
    std::size_t size() const { return entries_.size(); }

    std::size_t num_scalars() const {
        std::size_t n = 0;
        for (const auto& [_, v] : entries_) n += v.value().numel();
        return n;
    }

    void zero_grad() {
        for (auto& [_, v] : entries_) v.zero_grad();
    }

private:
    std::vector<std::pair<std::string, Var<T>>> entries_;
    std::map<std::string, std::size_t> index_;
};

/// Glorot-uniform [fan_in x fan_out] matrix.
template <typename T, typename Rng>
Tensor<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor<T> t = Tensor<T>::matrix(fan_in, fan_out);
    for (auto& v : t.storage()) v = static_cast<T>(dist(rng));
    return t;
}

/// He-normal matrix for GELU/ReLU stacks, std sqrt(2 / fan_in).
template <typename T, typename Rng>
Tensor<T> he_normal(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    Tensor<T> t = Tensor<T>::matrix(fan_in, fan_out);
    for (auto& v : t.storage()) v = static_cast<T>(dist(rng));
    return t;
}

}  // namespace moeprof::numeric
