#pragma once

#include "wearbench/cutting.hpp"
#include "wearbench/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>


// The parameter-conditioned 1D CNN. Each conv unit sees its input with the
// tiled cutting parameters appended as extra rows, runs two convolutions
// with ReLU and max-pools by 3; the head is global average pooling, dropout
// and a linear dense layer with one output per wear target.
namespace wearbench::model {

struct ModelSpec {
    std::size_t signal_channels = 15; // K
    std::size_t param_count = 2;      // H
    std::size_t length = 2000;        // L
    std::size_t units = 4;
    std::size_t convs_per_unit = 2;
    std::size_t base_filters = 8; // 2^N in the first unit
    std::size_t filter_cap = 256;
    std::size_t kernel = 3;
    std::size_t pool = 3;
    double dropout = 0.2;
    std::size_t output_dim = 8;
    bool conditioned = true;

    // Throws SpecError on inconsistent hyperparameters (including
    // L < pool^units, which would underflow the pooling chain).
    void validate() const;

    // Parameter rows appended before each unit: H for the test model, 0 for
    // the reference model.
    [[nodiscard]] std::size_t injected_params() const noexcept { return conditioned ? param_count : 0; }
    [[nodiscard]] std::size_t filters(std::size_t unit) const noexcept;
    // Sequence length entering each unit, plus the length after the last pool.
    [[nodiscard]] std::vector<std::size_t> length_trace() const;
    [[nodiscard]] std::size_t gap_channels() const noexcept { return filters(units - 1); }
    [[nodiscard]] std::size_t trainable_parameters() const noexcept;

    // Same architecture without parameter inputs.
    [[nodiscard]] ModelSpec as_reference() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

[[nodiscard]] std::string describe(const ModelSpec& spec);

// Min-max scaling of the cutting parameters to [0, 1] over the training split.
struct ParamScaler {
    std::vector<double> min;
    std::vector<double> max;

    // Throws ParameterError on an empty split or a parameter with max == min.
    [[nodiscard]] static ParamScaler fit(std::span<const CuttingParams> params);
    [[nodiscard]] std::vector<double> scale(const CuttingParams& params) const;
    [[nodiscard]] bool empty() const noexcept { return min.empty(); }
};

// H x length tensor whose row h is constant at scaled[h].
[[nodiscard]] Tensor tile_params(std::span<const double> scaled, std::size_t length);
// Appends the tiled parameter rows below the signal rows. An empty `tiles`
// tensor (reference model) returns the signal unchanged.
[[nodiscard]] Tensor inject_and_concat(const Tensor& signal, const Tensor& tiles);

struct NamedTensor {
    std::string name;
    Tensor value;
};

class ConditionedCnn {
public:
    struct ConvCache {
        Tensor input;
        Tensor pre_activation;
    };
    struct UnitCache {
        std::vector<ConvCache> convs;
        Tensor pool_input;
        Tensor pool_output;
        std::vector<std::size_t> argmax;
    };
    // Intermediate activations kept for backward().
    struct Cache {
        std::vector<UnitCache> units;
        Tensor gap_input;
        Tensor dense_input;
        Tensor dropout_mask;
    };

    explicit ConditionedCnn(ModelSpec spec);

    // Glorot-uniform weights, zero biases.
    void initialize(std::uint64_t seed);

    [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::vector<NamedTensor>& parameters() noexcept { return params_; }
    [[nodiscard]] const std::vector<NamedTensor>& parameters() const noexcept { return params_; }

    // signal: K x L (normalised); scaled_params: H values (ignored by the
    // reference model). In training mode dropout draws from `rng`.
    [[nodiscard]] Tensor forward(const Tensor& signal, std::span<const double> scaled_params, bool training,
                                 std::mt19937_64* rng, Cache* cache) const;
    [[nodiscard]] Tensor predict(const Tensor& signal, std::span<const double> scaled_params) const;

    // Accumulates (+=) parameter gradients into `grads` (same order as
    // parameters()). Optionally returns the gradient w.r.t. the signal.
    void backward(const Cache& cache, const Tensor& upstream, std::vector<Tensor>& grads,
                  Tensor* signal_grad = nullptr) const;

    // Hash of every ReLU sign and pooling argmax of a cached pass.
    [[nodiscard]] static std::uint64_t regime_fingerprint(const Cache& cache);

    [[nodiscard]] std::vector<Tensor> zero_grads() const;

private:
    [[nodiscard]] std::size_t conv_index(std::size_t unit, std::size_t conv) const noexcept
    {
        return 2 * (unit * spec_.convs_per_unit + conv);
    }
    [[nodiscard]] std::size_t dense_index() const noexcept { return 2 * spec_.units * spec_.convs_per_unit; }

    ModelSpec spec_;
    std::vector<NamedTensor> params_;
};

} // namespace wearbench::model
