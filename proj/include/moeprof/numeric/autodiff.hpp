#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "moeprof/numeric/tensor.hpp"

namespace moeprof::numeric {

// Reverse-mode tape. Every op produces a Node holding its value, pointers to
// the parents it was computed from and a closure that pushes the node's
// gradient back into those parents. Parameters are leaf nodes; their grad
// buffers accumulate across backward() calls until zero_grad().

namespace detail {
inline bool& grad_mode_flag() {
    thread_local bool enabled = true;
    return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_flag(); }

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard() : prev_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
    ~NoGradGuard() { detail::grad_mode_flag() = prev_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool has_grad = false;
    bool requires_grad = false;
    bool is_leaf = true;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    Tensor<T>& grad_buffer() {
        if (!has_grad) {
            grad = Tensor<T>(value.shape(), T{0});
            has_grad = true;
        }
        return grad;
    }
};

template <typename T>
class Var {
public:
    Var() = default;

    /// Constant (no gradient).
    explicit Var(Tensor<T> value) : node_(std::make_shared<Node<T>>()) { node_->value = std::move(value); }

    static Var parameter(Tensor<T> value, bool trainable = true) {
        Var v(std::move(value));
        v.node_->requires_grad = trainable;
        return v;
    }

    const Tensor<T>& value() const { return node_->value; }
    Tensor<T>& mutable_value() { return node_->value; }

    /// Gradient of a leaf or of an intermediate after backward(); zeros when
    /// nothing has flowed in.
    Tensor<T> grad() const {
        if (node_->has_grad) return node_->grad;
        return Tensor<T>(node_->value.shape(), T{0});
    }

    bool requires_grad() const { return node_ && node_->requires_grad; }
    void set_requires_grad(bool on) { node_->requires_grad = on; }
    bool defined() const noexcept { return static_cast<bool>(node_); }

    void zero_grad() {
        if (node_->has_grad) node_->grad.fill(T{0});
    }

    const Shape& shape() const { return node_->value.shape(); }
    std::size_t rows() const { return node_->value.rows(); }
    std::size_t cols() const { return node_->value.cols(); }
    T item() const { return node_->value.item(); }

    const std::shared_ptr<Node<T>>& node() const { return node_; }

    /// Builds a non-leaf result. When recording is off or no parent needs a
    /// gradient, the result is a plain constant and the closure is dropped.
    template <typename Fn>
    static Var make_result(Tensor<T> value, std::vector<Var> parents, Fn&& backward_fn) {
        Var out(std::move(value));
        if (!grad_enabled()) return out;
        bool any = false;
        for (const auto& p : parents) any = any || p.requires_grad();
        if (!any) return out;
        out.node_->requires_grad = true;
        out.node_->is_leaf = false;
        out.node_->parents.reserve(parents.size());
        for (auto& p : parents) out.node_->parents.push_back(p.node_);
        out.node_->backward_fn = std::forward<Fn>(backward_fn);
        return out;
    }

private:
    std::shared_ptr<Node<T>> node_;
};

/// Accumulates d(loss)/d(leaf) into every reachable trainable leaf.
/// Intermediate gradients are reset on each call, so calling twice on the
/// same graph adds the gradient to the leaves twice.
template <typename T>
void backward(const Var<T>& loss) {
    if (loss.value().numel() != 1) {
        throw ContractError("backward() requires a scalar loss, got shape " + shape_str(loss.shape()));
    }
    if (!loss.requires_grad()) return;

    // Iterative DFS post-order gives a topological order (parents first).
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> visited;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node<T>* p = node->parents[next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node<T>* n : order) {
        if (!n->is_leaf) {
            n->grad_buffer().fill(T{0});
        }
    }
    loss.node()->grad_buffer()[0] += T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (!n->is_leaf && n->backward_fn) n->backward_fn(*n);
    }
}

}  // namespace moeprof::numeric
