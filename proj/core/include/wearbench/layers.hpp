#pragma once

#include "wearbench/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

// Forward/backward kernels for the layers of the conditioned CNN. Every
// function is pure: identical inputs give bit-identical outputs.
namespace wearbench::nn {

// Parameter gradients in declaration order (weights, bias) plus the gradient
// with respect to the layer input.
struct LayerGrads {
    std::vector<Tensor> params;
    Tensor input;
};

// Stride-1 convolution with zero "same" padding of (k-1)/2 on both ends.
// input: C_in x L, weights: C_out x C_in x k (k odd), bias: C_out.
[[nodiscard]] Tensor conv1d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
[[nodiscard]] LayerGrads conv1d_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream);

struct PoolResult {
    Tensor output;
    // Flat index into the input tensor for every output entry.
    std::vector<std::size_t> argmax;
};

// Non-overlapping max pooling along the time axis; the trailing L mod pool
// samples are dropped. Ties go to the lowest index.
[[nodiscard]] PoolResult maxpool1d(const Tensor& input, std::size_t pool = 3);
[[nodiscard]] Tensor maxpool1d_backward(const PoolResult& forward, std::span<const std::size_t> input_shape,
                                        const Tensor& upstream);

[[nodiscard]] Tensor global_avg_pool(const Tensor& input);
[[nodiscard]] Tensor global_avg_pool_backward(std::span<const std::size_t> input_shape, const Tensor& upstream);

// out = weights * input + bias (linear).
[[nodiscard]] Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
[[nodiscard]] LayerGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream);

[[nodiscard]] Tensor relu(const Tensor& input);
// Subgradient at 0 is 0.
[[nodiscard]] Tensor relu_backward(const Tensor& input, const Tensor& upstream);

struct DropoutResult {
    Tensor output;
    // Per-entry multiplier: 0 for dropped entries, 1/(1-rate) for survivors,
    // all ones in inference mode.
    Tensor mask;
};

// Inverted dropout. rate must lie in [0, 1).
[[nodiscard]] DropoutResult dropout(const Tensor& input, double rate, bool training, std::mt19937_64& rng);
[[nodiscard]] Tensor dropout_backward(const DropoutResult& forward, const Tensor& upstream);

struct LossResult {
    double loss = 0.0;
    Tensor grad;
};

// Mean over targets of the squared error, with gradient 2(pred - target)/n.
[[nodiscard]] LossResult mse_multi(const Tensor& pred, const Tensor& target);

} // namespace wearbench::nn
