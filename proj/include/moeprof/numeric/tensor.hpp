#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "moeprof/errors.hpp"

namespace moeprof::numeric {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

inline std::size_t shape_numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major tensor. Every dimension is positive and
/// numel() == product(shape). Networks in this project only use rank 2;
/// vectors are stored as 1 x n.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() : shape_{1, 1}, data_(1, T{0}) {}

    explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
        check_shape(shape_);
        data_.assign(shape_numel(shape_), fill);
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape(shape_);
        if (shape_numel(shape_) != data_.size()) {
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_str(shape_));
        }
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T{0}) {
        return Tensor(Shape{rows, cols}, fill);
    }

    static Tensor from_rows(const std::vector<std::vector<T>>& rows) {
        if (rows.empty() || rows.front().empty()) throw DimensionError("from_rows: empty input");
        const std::size_t c = rows.front().size();
        std::vector<T> flat;
        flat.reserve(rows.size() * c);
        for (const auto& r : rows) {
            if (r.size() != c) throw DimensionError("from_rows: ragged rows");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return Tensor(Shape{rows.size(), c}, std::move(flat));
    }

    static Tensor row(std::vector<T> values) {
        const std::size_t n = values.size();
        return Tensor(Shape{1, n}, std::move(values));
    }

    static Tensor scalar(T v) { return Tensor(Shape{1, 1}, std::vector<T>{v}); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t numel() const noexcept { return data_.size(); }

    std::size_t rows() const {
        require_rank2();
        return shape_[0];
    }
    std::size_t cols() const {
        require_rank2();
        return shape_[1];
    }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T item() const {
        if (data_.size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape_));
        return data_[0];
    }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    std::span<T> row_span(std::size_t r) { return std::span<T>(data_).subspan(r * cols(), cols()); }
    std::span<const T> row_span(std::size_t r) const {
        return std::span<const T>(data_).subspan(r * cols(), cols());
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.size());
        std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
        return Tensor<U>(shape_, std::move(out));
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    static void check_shape(const Shape& s) {
        if (s.empty()) throw DimensionError("tensor shape must have at least one dimension");
        for (auto d : s) {
            if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(s));
        }
    }

    void require_rank2() const {
        if (shape_.size() != 2) throw DimensionError("expected rank-2 tensor, got " + shape_str(shape_));
    }

    Shape shape_;
    std::vector<T> data_;
};

}  // namespace moeprof::numeric
