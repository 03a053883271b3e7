#include "wearbench/gradcheck.hpp"

#include "wearbench/errors.hpp"
#include "wearbench/layers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace wearbench::nn {

namespace {

void require_eps(double eps)
{
    if (!(eps >= 1e-8 && eps <= 1e-4))
        throw ParameterError("grad_check: eps must lie in [1e-8, 1e-4], got " + std::to_string(eps));
}

double project(const Tensor& out, const Tensor& r)
{
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * r[i];
    return s;
}

void merge(GradCheckResult& into, const GradCheckResult& part)
{
    into.max_rel_error = std::max(into.max_rel_error, part.max_rel_error);
    into.checked += part.checked;
    into.skipped_kinks += part.skipped_kinks;
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v)
{
    for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xffu;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace

double relative_error(double analytic, double numeric) noexcept
{
    return std::abs(analytic - numeric) / (std::max(std::abs(analytic), std::abs(numeric)) + 1e-12);
}

GradCheckResult grad_check(std::span<double> coords, std::span<const double> analytic,
                           const std::function<double()>& objective, double eps,
                           const std::function<std::uint64_t()>& regime)
{
    require_eps(eps);
    if (coords.size() != analytic.size())
        throw ShapeError("grad_check: " + std::to_string(coords.size()) + " coordinates but " +
                         std::to_string(analytic.size()) + " analytic gradients");
    std::uint64_t base = 0;
    if (regime) {
        (void)objective();
        base = regime();
    }
    GradCheckResult result;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const double orig = coords[i];
        coords[i] = orig + eps;
        const double plus = objective();
        const bool plus_same = !regime || regime() == base;
        coords[i] = orig - eps;
        const double minus = objective();
        const bool minus_same = !regime || regime() == base;
        coords[i] = orig;
        if (!plus_same || !minus_same) {
            ++result.skipped_kinks;
            continue;
        }
        const double numeric = (plus - minus) / (2.0 * eps);
        result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic[i], numeric));
        ++result.checked;
    }
    if (regime) (void)objective();
    return result;
}

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double lo, double hi)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

GradCheckResult grad_check_conv1d(const Tensor& input, const Tensor& weights, const Tensor& bias, double eps,
                                  std::uint64_t seed)
{
    Tensor x = input, w = weights, b = bias;
    const Tensor r = random_tensor({w.dim(0), x.dim(1)}, seed);
    const auto grads = conv1d_backward(x, w, r);
    auto objective = [&] { return project(conv1d_forward(x, w, b), r); };
    GradCheckResult result;
    merge(result, grad_check(w.data(), grads.params[0].data(), objective, eps));
    merge(result, grad_check(b.data(), grads.params[1].data(), objective, eps));
    merge(result, grad_check(x.data(), grads.input.data(), objective, eps));
    return result;
}

GradCheckResult grad_check_dense(const Tensor& input, const Tensor& weights, const Tensor& bias, double eps,
                                 std::uint64_t seed)
{
    Tensor x = input, w = weights, b = bias;
    const Tensor r = random_tensor({w.dim(0)}, seed);
    const auto grads = dense_backward(x, w, r);
    auto objective = [&] { return project(dense_forward(x, w, b), r); };
    GradCheckResult result;
    merge(result, grad_check(w.data(), grads.params[0].data(), objective, eps));
    merge(result, grad_check(b.data(), grads.params[1].data(), objective, eps));
    merge(result, grad_check(x.data(), grads.input.data(), objective, eps));
    return result;
}

GradCheckResult grad_check_relu(const Tensor& input, double eps, std::uint64_t seed)
{
    Tensor x = input;
    const Tensor r = random_tensor(x.shape(), seed);
    const Tensor analytic = relu_backward(x, r);
    auto objective = [&] { return project(relu(x), r); };
    auto regime = [&] {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (double v : x.data()) h = fnv1a(h, v > 0.0);
        return h;
    };
    return grad_check(x.data(), analytic.data(), objective, eps, regime);
}

GradCheckResult grad_check_maxpool(const Tensor& input, double eps, std::uint64_t seed)
{
    Tensor x = input;
    const auto fwd = maxpool1d(x);
    const Tensor r = random_tensor(fwd.output.shape(), seed);
    const Tensor analytic = maxpool1d_backward(fwd, x.shape(), r);
    std::vector<std::size_t> last_argmax;
    auto objective = [&] {
        auto p = maxpool1d(x);
        last_argmax = std::move(p.argmax);
        return project(p.output, r);
    };
    auto regime = [&] {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (auto a : last_argmax) h = fnv1a(h, a);
        return h;
    };
    return grad_check(x.data(), analytic.data(), objective, eps, regime);
}

GradCheckResult grad_check_global_avg_pool(const Tensor& input, double eps, std::uint64_t seed)
{
    Tensor x = input;
    const Tensor r = random_tensor({x.dim(0)}, seed);
    const Tensor analytic = global_avg_pool_backward(x.shape(), r);
    auto objective = [&] { return project(global_avg_pool(x), r); };
    return grad_check(x.data(), analytic.data(), objective, eps);
}

GradCheckResult grad_check_dropout(const Tensor& input, double rate, double eps, std::uint64_t seed)
{
    Tensor x = input;
    const Tensor r = random_tensor(x.shape(), seed);
    auto run = [&] {
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
        return dropout(x, rate, true, rng);
    };
    const Tensor analytic = dropout_backward(run(), r);
    auto objective = [&] { return project(run().output, r); };
    return grad_check(x.data(), analytic.data(), objective, eps);
}

GradCheckResult grad_check_mse(const Tensor& pred, const Tensor& target, double eps)
{
    Tensor p = pred;
    const Tensor analytic = mse_multi(p, target).grad;
    auto objective = [&] { return mse_multi(p, target).loss; };
    return grad_check(p.data(), analytic.data(), objective, eps);
}

} // namespace wearbench::nn
