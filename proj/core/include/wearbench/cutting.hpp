#pragma once

#include <array>
#include <cstddef>

namespace wearbench {

// Conditioning inputs of one cut.
struct CuttingParams {
    double cutting_speed_m_min = 0.0; // v_c
    double feed_per_tooth_mm = 0.0;   // f_z

    [[nodiscard]] std::array<double, 2> as_array() const noexcept
    {
        return {cutting_speed_m_min, feed_per_tooth_mm};
    }
    friend bool operator==(const CuttingParams&, const CuttingParams&) = default;
};

inline constexpr std::size_t kCuttingParamCount = 2;
inline constexpr std::size_t kParameterSetCount = 8;

// The eight fixed (v_c, f_z) combinations of the campaign, set numbers 1..8.
inline constexpr std::array<CuttingParams, kParameterSetCount> kParameterSets = {{
    {30.0, 0.03},
    {40.0, 0.04},
    {20.0, 0.03},
    {20.0, 0.04},
    {30.0, 0.02},
    {30.0, 0.04},
    {40.0, 0.02},
    {40.0, 0.03},
}};

// 1-based lookup; throws ParameterError outside 1..8.
[[nodiscard]] CuttingParams parameter_set(int set_number);

} // namespace wearbench
