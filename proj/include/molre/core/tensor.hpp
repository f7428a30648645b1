// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensor of doubles with an optional gradient buffer.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace molre {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
    static Tensor identity(std::size_t n);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t dim(std::size_t axis) const;
    bool empty() const noexcept { return data_.empty(); }

    // Rank-2 accessors.
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row(std::size_t r);
    std::span<const double> row(std::size_t r) const;

    bool has_grad() const noexcept { return !grad_.empty(); }
    /// Gradient buffer, allocated as zeros on first access.
    std::span<double> grad();
    std::span<const double> grad() const noexcept { return grad_; }
    void zero_grad();
    void clear_grad() noexcept { grad_.clear(); grad_.shrink_to_fit(); }

    /// Same data under a new shape with equal element count.
    Tensor reshaped(Shape shape) const;
    void fill(double value);

    bool all_finite() const noexcept;
    double squared_norm() const noexcept;

private:
    Shape shape_;
    std::vector<double> data_;
    std::vector<double> grad_;
};

/// Bitwise equality of shape and values.
bool bitwise_equal(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace molre
