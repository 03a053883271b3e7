#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace wearbench {

// Dense row-major tensor of doubles. Rank is whatever the shape says; the
// network only ever uses rank 1 (vectors), 2 (channels x length) and 3
// (conv weights: out x in x kernel).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    [[nodiscard]] const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t dim(std::size_t axis) const;
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    double& at(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_[1] + c]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) noexcept
    {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    // Row view of a rank-2 tensor.
    [[nodiscard]] std::span<double> row(std::size_t r);
    [[nodiscard]] std::span<const double> row(std::size_t r) const;

    void fill(double value) noexcept;
    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

    // Bitwise comparison of shape and data; used for determinism checks.
    friend bool operator==(const Tensor& a, const Tensor& b) noexcept;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

[[nodiscard]] std::size_t shape_volume(std::span<const std::size_t> shape) noexcept;
[[nodiscard]] std::string shape_string(std::span<const std::size_t> shape);

// Throws ShapeError with `what` as context when the shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);
void require_rank(const Tensor& t, std::size_t rank, const char* what);

} // namespace wearbench
