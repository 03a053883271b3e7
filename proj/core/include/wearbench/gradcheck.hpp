#pragma once

#include "wearbench/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace wearbench::nn {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    // Coordinates skipped because the +/- eps probes landed in different
    // piecewise-linear regimes (ReLU sign flip or pooling argmax change).
    std::size_t skipped_kinks = 0;
};

// |a - n| / (max(|a|, |n|) + 1e-12)
[[nodiscard]] double relative_error(double analytic, double numeric) noexcept;

// Generic central-difference checker. `coords` are perturbed in place (and
// restored); `objective` re-evaluates the scalar loss. When `regime` is
// given, it must return a fingerprint of the activation pattern; probes whose
// fingerprint differs from the unperturbed one are counted as kinks.
[[nodiscard]] GradCheckResult grad_check(std::span<double> coords, std::span<const double> analytic,
                                         const std::function<double()>& objective, double eps,
                                         const std::function<std::uint64_t()>& regime = {});

// Layer-level checks. Each draws a random upstream projection r, uses
// sum(r * layer(x)) as the scalar objective and compares every parameter and
// input coordinate. eps must lie in [1e-8, 1e-4].
[[nodiscard]] GradCheckResult grad_check_conv1d(const Tensor& input, const Tensor& weights, const Tensor& bias,
                                                double eps, std::uint64_t seed);
[[nodiscard]] GradCheckResult grad_check_dense(const Tensor& input, const Tensor& weights, const Tensor& bias,
                                               double eps, std::uint64_t seed);
[[nodiscard]] GradCheckResult grad_check_relu(const Tensor& input, double eps, std::uint64_t seed);
[[nodiscard]] GradCheckResult grad_check_maxpool(const Tensor& input, double eps, std::uint64_t seed);
[[nodiscard]] GradCheckResult grad_check_global_avg_pool(const Tensor& input, double eps, std::uint64_t seed);
[[nodiscard]] GradCheckResult grad_check_dropout(const Tensor& input, double rate, double eps, std::uint64_t seed);
[[nodiscard]] GradCheckResult grad_check_mse(const Tensor& pred, const Tensor& target, double eps);

// Deterministic random tensor with entries uniform in [lo, hi).
[[nodiscard]] Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double lo = -1.0,
                                   double hi = 1.0);

} // namespace wearbench::nn
