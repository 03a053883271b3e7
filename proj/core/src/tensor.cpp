#include "wearbench/tensor.hpp"

#include "wearbench/errors.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <utility>

namespace wearbench {

std::size_t shape_volume(std::span<const std::size_t> shape) noexcept
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(std::span<const std::size_t> shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape))
{
    for (auto d : shape_)
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
    data_.assign(shape_volume(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data))
{
    for (auto d : shape_)
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
    if (data_.size() != shape_volume(shape_))
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
}

Tensor Tensor::vector(std::vector<double> values)
{
    const auto n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
{
    return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const
{
    if (axis >= shape_.size())
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape_));
    return shape_[axis];
}

std::span<double> Tensor::row(std::size_t r)
{
    return {data_.data() + r * shape_[1], shape_[1]};
}

std::span<const double> Tensor::row(std::size_t r) const
{
    return {data_.data() + r * shape_[1], shape_[1]};
}

void Tensor::fill(double value) noexcept
{
    std::fill(data_.begin(), data_.end(), value);
}

bool Tensor::all_finite() const noexcept
{
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

bool operator==(const Tensor& a, const Tensor& b) noexcept
{
    if (a.shape_ != b.shape_) return false;
    if (a.data_.empty()) return true;
    return std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(double)) == 0;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what)
{
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

void require_rank(const Tensor& t, std::size_t rank, const char* what)
{
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_string(t.shape()));
}

} // namespace wearbench
