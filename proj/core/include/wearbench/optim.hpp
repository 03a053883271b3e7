#pragma once

#include "wearbench/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wearbench::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
};

// One trainable tensor handed to the optimizer. The name is only used for
// diagnostics when a gradient turns non-finite.
struct ParamSlot {
    std::string name;
    Tensor* value = nullptr;
    const Tensor* grad = nullptr;
};

[[nodiscard]] OptimizerState make_optimizer_state(std::span<const ParamSlot> slots, AdamConfig config = {});

// Bias-corrected Adam update applied in place. Throws NumericError naming the
// offending parameter if any gradient entry is NaN or infinite; in that case
// no parameter is modified.
void adam_step(std::span<const ParamSlot> slots, OptimizerState& state);

} // namespace wearbench::nn
