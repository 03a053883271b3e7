#include "wearbench/layers.hpp"

#include "wearbench/errors.hpp"

#include <algorithm>
#include <string>

namespace wearbench::nn {

namespace {

void check_conv_shapes(const Tensor& input, const Tensor& weights)
{
    require_rank(input, 2, "conv1d input");
    require_rank(weights, 3, "conv1d weights");
    if (weights.dim(1) != input.dim(0))
        throw ShapeError("conv1d: weights expect " + std::to_string(weights.dim(1)) + " input channels, input has " +
                         std::to_string(input.dim(0)));
    const std::size_t k = weights.dim(2);
    if (k % 2 == 0) throw ShapeError("conv1d: kernel size must be odd, got " + std::to_string(k));
    if (input.dim(1) < k)
        throw LengthError("conv1d: input length " + std::to_string(input.dim(1)) + " shorter than kernel " +
                          std::to_string(k));
}

// Valid range of output positions t for which t + shift stays inside [0, n).
inline std::pair<std::ptrdiff_t, std::ptrdiff_t> overlap(std::ptrdiff_t n, std::ptrdiff_t shift)
{
    return {std::max<std::ptrdiff_t>(0, -shift), std::min<std::ptrdiff_t>(n, n - shift)};
}

} // namespace

Tensor conv1d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias)
{
    check_conv_shapes(input, weights);
    const std::size_t c_out = weights.dim(0);
    const std::size_t c_in = weights.dim(1);
    const std::size_t k = weights.dim(2);
    if (bias.size() != c_out)
        throw ShapeError("conv1d: bias length " + std::to_string(bias.size()) + " != output channels " +
                         std::to_string(c_out));

    const auto len = static_cast<std::ptrdiff_t>(input.dim(1));
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    Tensor out({c_out, input.dim(1)});
    for (std::size_t c = 0; c < c_out; ++c) {
        double* o = out.row(c).data();
        std::fill(o, o + len, bias[c]);
        for (std::size_t i = 0; i < c_in; ++i) {
            const double* x = input.row(i).data();
            for (std::size_t j = 0; j < k; ++j) {
                const double w = weights.at(c, i, j);
                const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
                const auto [lo, hi] = overlap(len, shift);
                const double* xs = x + shift;
#pragma omp simd
                for (std::ptrdiff_t t = lo; t < hi; ++t) o[t] += w * xs[t];
            }
        }
    }
    return out;
}

LayerGrads conv1d_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream)
{
    check_conv_shapes(input, weights);
    const std::size_t c_out = weights.dim(0);
    const std::size_t c_in = weights.dim(1);
    const std::size_t k = weights.dim(2);
    require_rank(upstream, 2, "conv1d upstream gradient");
    if (upstream.dim(0) != c_out || upstream.dim(1) != input.dim(1))
        throw ShapeError("conv1d backward: upstream shape " + shape_string(upstream.shape()) +
                         " does not match forward output [" + std::to_string(c_out) + "x" +
                         std::to_string(input.dim(1)) + "]");

    const auto len = static_cast<std::ptrdiff_t>(input.dim(1));
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    LayerGrads grads;
    grads.params.emplace_back(weights.shape());
    grads.params.emplace_back(std::vector<std::size_t>{c_out});
    grads.input = Tensor(input.shape());
    Tensor& gw = grads.params[0];
    Tensor& gb = grads.params[1];

    for (std::size_t c = 0; c < c_out; ++c) {
        const double* g = upstream.row(c).data();
        double bsum = 0.0;
#pragma omp simd reduction(+ : bsum)
        for (std::ptrdiff_t t = 0; t < len; ++t) bsum += g[t];
        gb[c] = bsum;

        for (std::size_t i = 0; i < c_in; ++i) {
            const double* x = input.row(i).data();
            double* gx = grads.input.row(i).data();
            for (std::size_t j = 0; j < k; ++j) {
                const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(j) - pad;
                const auto [lo, hi] = overlap(len, shift);
                const double* xs = x + shift;
                double* gxs = gx + shift;
                const double w = weights.at(c, i, j);
                double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                for (std::ptrdiff_t t = lo; t < hi; ++t) acc += g[t] * xs[t];
                gw.at(c, i, j) = acc;
#pragma omp simd
                for (std::ptrdiff_t t = lo; t < hi; ++t) gxs[t] += w * g[t];
            }
        }
    }
    return grads;
}

PoolResult maxpool1d(const Tensor& input, std::size_t pool)
{
    require_rank(input, 2, "maxpool1d input");
    if (pool == 0) throw ParameterError("maxpool1d: pool size must be positive");
    const std::size_t channels = input.dim(0);
    const std::size_t len = input.dim(1);
    if (len < pool)
        throw LengthError("maxpool1d: input length " + std::to_string(len) + " shorter than pool " +
                          std::to_string(pool));
    const std::size_t out_len = len / pool;
    PoolResult result{Tensor({channels, out_len}), std::vector<std::size_t>(channels * out_len)};
    for (std::size_t c = 0; c < channels; ++c) {
        const auto x = input.row(c);
        auto o = result.output.row(c);
        for (std::size_t t = 0; t < out_len; ++t) {
            std::size_t best = t * pool;
            for (std::size_t q = best + 1; q < (t + 1) * pool; ++q)
                if (x[q] > x[best]) best = q;
            o[t] = x[best];
            result.argmax[c * out_len + t] = c * len + best;
        }
    }
    return result;
}

Tensor maxpool1d_backward(const PoolResult& forward, std::span<const std::size_t> input_shape, const Tensor& upstream)
{
    require_same_shape(upstream, forward.output, "maxpool1d backward");
    Tensor grad(std::vector<std::size_t>(input_shape.begin(), input_shape.end()));
    for (std::size_t i = 0; i < upstream.size(); ++i) grad[forward.argmax[i]] += upstream[i];
    return grad;
}

Tensor global_avg_pool(const Tensor& input)
{
    require_rank(input, 2, "global_avg_pool input");
    const std::size_t channels = input.dim(0);
    const std::size_t len = input.dim(1);
    Tensor out({channels});
    for (std::size_t c = 0; c < channels; ++c) {
        const double* x = input.row(c).data();
        double sum = 0.0;
        for (std::size_t t = 0; t < len; ++t) sum += x[t];
        out[c] = sum / static_cast<double>(len);
    }
    return out;
}

Tensor global_avg_pool_backward(std::span<const std::size_t> input_shape, const Tensor& upstream)
{
    if (input_shape.size() != 2 || upstream.size() != input_shape[0])
        throw ShapeError("global_avg_pool backward: upstream " + shape_string(upstream.shape()) +
                         " does not match input " + shape_string(input_shape));
    Tensor grad(std::vector<std::size_t>(input_shape.begin(), input_shape.end()));
    const double inv = 1.0 / static_cast<double>(input_shape[1]);
    for (std::size_t c = 0; c < input_shape[0]; ++c) {
        const double v = upstream[c] * inv;
        for (auto& g : grad.row(c)) g = v;
    }
    return grad;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias)
{
    require_rank(weights, 2, "dense weights");
    const std::size_t m = weights.dim(0);
    const std::size_t n = weights.dim(1);
    if (input.size() != n)
        throw ShapeError("dense: input length " + std::to_string(input.size()) + " != weight columns " +
                         std::to_string(n));
    if (bias.size() != m)
        throw ShapeError("dense: bias length " + std::to_string(bias.size()) + " != weight rows " + std::to_string(m));
    Tensor out({m});
    for (std::size_t r = 0; r < m; ++r) {
        const auto w = weights.row(r);
        double acc = bias[r];
        for (std::size_t c = 0; c < n; ++c) acc += w[c] * input[c];
        out[r] = acc;
    }
    return out;
}

LayerGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream)
{
    require_rank(weights, 2, "dense weights");
    const std::size_t m = weights.dim(0);
    const std::size_t n = weights.dim(1);
    if (input.size() != n || upstream.size() != m)
        throw ShapeError("dense backward: input " + shape_string(input.shape()) + ", upstream " +
                         shape_string(upstream.shape()) + " vs weights " + shape_string(weights.shape()));
    LayerGrads grads;
    grads.params.emplace_back(weights.shape());
    grads.params.emplace_back(std::vector<std::size_t>{m});
    grads.input = Tensor(input.shape());
    for (std::size_t r = 0; r < m; ++r) {
        const double g = upstream[r];
        const auto w = weights.row(r);
        auto gw = grads.params[0].row(r);
        for (std::size_t c = 0; c < n; ++c) {
            gw[c] = g * input[c];
            grads.input[c] += g * w[c];
        }
        grads.params[1][r] = g;
    }
    return grads;
}

Tensor relu(const Tensor& input)
{
    Tensor out = input;
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream)
{
    require_same_shape(input, upstream, "relu backward");
    Tensor grad(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) grad[i] = input[i] > 0.0 ? upstream[i] : 0.0;
    return grad;
}

DropoutResult dropout(const Tensor& input, double rate, bool training, std::mt19937_64& rng)
{
    if (!(rate >= 0.0 && rate < 1.0))
        throw ParameterError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    DropoutResult result{input, Tensor(input.shape(), 1.0)};
    if (!training || rate == 0.0) return result;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double m = unit(rng) < rate ? 0.0 : keep_scale;
        result.mask[i] = m;
        result.output[i] = input[i] * m;
    }
    return result;
}

Tensor dropout_backward(const DropoutResult& forward, const Tensor& upstream)
{
    require_same_shape(forward.mask, upstream, "dropout backward");
    Tensor grad(upstream.shape());
    for (std::size_t i = 0; i < upstream.size(); ++i) grad[i] = upstream[i] * forward.mask[i];
    return grad;
}

LossResult mse_multi(const Tensor& pred, const Tensor& target)
{
    if (pred.size() != target.size() || pred.empty())
        throw ShapeError("mse_multi: prediction length " + std::to_string(pred.size()) + " vs target length " +
                         std::to_string(target.size()));
    const double n = static_cast<double>(pred.size());
    LossResult result{0.0, Tensor(pred.shape())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        result.loss += d * d;
        result.grad[i] = 2.0 * d / n;
    }
    result.loss /= n;
    return result;
}

} // namespace wearbench::nn
