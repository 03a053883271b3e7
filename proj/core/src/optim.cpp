#include "wearbench/optim.hpp"

#include "wearbench/errors.hpp"

#include <cmath>

namespace wearbench::nn {

OptimizerState make_optimizer_state(std::span<const ParamSlot> slots, AdamConfig config)
{
    OptimizerState state;
    state.config = config;
    for (const auto& slot : slots) {
        state.first_moment.emplace_back(slot.value->shape());
        state.second_moment.emplace_back(slot.value->shape());
    }
    return state;
}

void adam_step(std::span<const ParamSlot> slots, OptimizerState& state)
{
    if (slots.size() != state.first_moment.size() || slots.size() != state.second_moment.size())
        throw ShapeError("adam_step: optimizer state holds " + std::to_string(state.first_moment.size()) +
                         " moments for " + std::to_string(slots.size()) + " parameters");
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const auto& slot = slots[s];
        require_same_shape(*slot.value, *slot.grad, slot.name.c_str());
        require_same_shape(*slot.value, state.first_moment[s], slot.name.c_str());
        if (!slot.grad->all_finite())
            throw NumericError("non-finite gradient in parameter '" + slot.name + "' at step " +
                               std::to_string(state.step + 1));
    }

    ++state.step;
    const auto& cfg = state.config;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t s = 0; s < slots.size(); ++s) {
        auto value = slots[s].value->data();
        const auto grad = slots[s].grad->data();
        auto m = state.first_moment[s].data();
        auto v = state.second_moment[s].data();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

} // namespace wearbench::nn
