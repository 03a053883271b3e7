#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Flank-wear-land measurement curves and the eight regression targets
// derived from them.
namespace wearbench::wear {

inline constexpr double kGridSpacingUm = 10.0;
inline constexpr double kZoneWidthUm = 450.0;
inline constexpr std::size_t kZoneCount = 3;
inline constexpr double kZoneCoverageUm = kZoneWidthUm * kZoneCount;
inline constexpr std::size_t kEdgeCount = 4;
inline constexpr std::size_t kTargetCount = 8;

// VB width (um) as a function of distance from the tool tip (um), linear
// between samples.
struct WearCurve {
    std::vector<double> distance_um;
    std::vector<double> vb_um;

    // Throws MeasurementError unless distances strictly increase, VB >= 0 and
    // both vectors have the same length (>= 2).
    void validate() const;
    [[nodiscard]] double value_at(double distance) const;
};

enum class Target : std::size_t {
    MeanZone1,
    MeanZone2,
    MeanZone3,
    MaxZone1,
    MaxZone2,
    MaxZone3,
    Mean,
    Max,
};

struct WearTargets {
    std::array<double, kTargetCount> values{};

    [[nodiscard]] double operator[](Target t) const noexcept { return values[static_cast<std::size_t>(t)]; }
    [[nodiscard]] double zone_mean(std::size_t zone) const noexcept { return values[zone]; }
    [[nodiscard]] double zone_max(std::size_t zone) const noexcept { return values[kZoneCount + zone]; }
    [[nodiscard]] double vb_mean() const noexcept { return values[6]; }
    [[nodiscard]] double vb_max() const noexcept { return values[7]; }
};

inline constexpr std::size_t kVbMaxIndex = static_cast<std::size_t>(Target::Max);

[[nodiscard]] std::string_view target_name(std::size_t index) noexcept;

// Resamples the four edge curves onto a common grid over the intersection of
// their spans and averages them pointwise. The per-point sum is taken in
// sorted order so the result does not depend on edge order.
[[nodiscard]] WearCurve average_edges(std::span<const WearCurve> curves, double grid_um = kGridSpacingUm);

// Zone n covers [450(n-1), 450n) um from the tip; the global statistics use
// the whole covered span. Means are exact integrals of the piecewise-linear
// curve, maxima its supremum. Throws CoverageError when the curve does not
// cover [0, 1350] um.
[[nodiscard]] WearTargets compute_targets(const WearCurve& curve);

// "edge,distance_um,vb_um" rows, edges numbered from 1.
[[nodiscard]] std::string edge_curves_to_csv(std::span<const WearCurve> curves);
[[nodiscard]] std::vector<WearCurve> edge_curves_from_csv(std::string_view text);
void write_edge_curves(const std::filesystem::path& path, std::span<const WearCurve> curves);
[[nodiscard]] std::vector<WearCurve> read_edge_curves(const std::filesystem::path& path);

// Single curve as "distance_um,vb_um".
[[nodiscard]] std::string curve_to_csv(const WearCurve& curve);
[[nodiscard]] WearCurve curve_from_csv(std::string_view text);

} // namespace wearbench::wear
