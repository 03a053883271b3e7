#pragma once

#include "wearbench/tensor.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Turns raw per-cut recordings into fixed-size channel x time windows.
namespace wearbench::signal {

// Fixed row order of an assembled window. External (10 kHz dynamometer)
// channels first, then machine-internal (100 Hz drive) channels.
enum class ChannelId : std::uint8_t {
    M_T,
    F_RCDx,
    F_RCDy,
    F_RCDxy,
    F_SDx,
    F_SDy,
    F_SDxy,
    M_S,
    I_S,
    M_x,
    M_y,
    M_xy,
    I_x,
    I_y,
    I_xy,
};

inline constexpr std::size_t kChannelCount = 15;
inline constexpr std::array<ChannelId, kChannelCount> kAllChannels = {
    ChannelId::M_T,  ChannelId::F_RCDx, ChannelId::F_RCDy, ChannelId::F_RCDxy, ChannelId::F_SDx,
    ChannelId::F_SDy, ChannelId::F_SDxy, ChannelId::M_S,   ChannelId::I_S,     ChannelId::M_x,
    ChannelId::M_y,  ChannelId::M_xy,   ChannelId::I_x,    ChannelId::I_y,     ChannelId::I_xy,
};

[[nodiscard]] std::string_view channel_name(ChannelId id) noexcept;
[[nodiscard]] std::optional<ChannelId> parse_channel(std::string_view name) noexcept;
[[nodiscard]] bool is_external(ChannelId id) noexcept;
// Resultant channels are computed from an orthogonal pair, never recorded.
[[nodiscard]] bool is_derived(ChannelId id) noexcept;

enum class ChannelMode { External, Internal, All };

[[nodiscard]] std::vector<ChannelId> channels_for(ChannelMode mode);
[[nodiscard]] std::string_view mode_name(ChannelMode mode) noexcept;
[[nodiscard]] ChannelMode parse_mode(std::string_view name);

// One recorded milling operation. Only measured (non-derived) channels are
// stored; external ones at external_rate_hz, internal ones and the feed-axis
// position at internal_rate_hz.
struct RawCut {
    std::string cut_id;
    double external_rate_hz = 10'000.0;
    double internal_rate_hz = 100.0;
    std::map<ChannelId, std::vector<double>> channels;
    std::vector<double> feed_position_mm;

    [[nodiscard]] double duration_s() const noexcept;
};

struct WindowConfig {
    double window_s = 2.0;
    // Travel excluded at the start (cut-in) and end (cut-out): one tool diameter.
    double margin_mm = 6.0;
};

// Internal-rate sample range [begin, end) of the steady milling phase.
struct MillingSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

[[nodiscard]] MillingSpan find_milling_phase(std::span<const double> position_mm, double margin_mm,
                                             std::string_view cut_id = {});

// Keeps only the final window_s seconds of the milling phase, every channel
// at its native rate. Throws WindowError if the phase is too short.
[[nodiscard]] RawCut extract_window(const RawCut& cut, const WindowConfig& config = {});

// Piecewise-linear resampling onto target_len equally spaced instants that
// span the first and last source sample inclusive.
[[nodiscard]] std::vector<double> resample_linear(std::span<const double> signal, std::size_t target_len);

// Elementwise sqrt(x^2 + y^2).
[[nodiscard]] std::vector<double> resultant(std::span<const double> x, std::span<const double> y);

struct SignalWindow {
    std::string cut_id;
    double sample_rate_hz = 0.0;
    std::vector<ChannelId> channels;
    Tensor data; // channels.size() x length

    [[nodiscard]] std::size_t length() const { return data.dim(1); }
};

// Builds the K x L window from a trimmed cut: computes the resultants,
// resamples the internal channels to the external length and stacks rows in
// ChannelId order (restricted to `mode`).
[[nodiscard]] SignalWindow assemble_window(const RawCut& trimmed, ChannelMode mode = ChannelMode::All);

// Per-channel z-score statistics. Constant channels normalise to zero.
struct ChannelStats {
    std::vector<ChannelId> channels;
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<bool> constant;
    // Cut ids the statistics were computed from; lets callers prove that no
    // test cut leaked into the fit.
    std::vector<std::string> fitted_cut_ids;
};

[[nodiscard]] ChannelStats fit_stats(std::span<const SignalWindow* const> windows);
[[nodiscard]] ChannelStats fit_stats(std::span<const SignalWindow> windows);
[[nodiscard]] SignalWindow apply_stats(const SignalWindow& window, const ChannelStats& stats);

// <base>.bin holds the little-endian doubles row-major; <base>.json the shape,
// channel order, sample rate and cut id.
void write_window(const SignalWindow& window, const std::filesystem::path& base);
[[nodiscard]] SignalWindow read_window(const std::filesystem::path& base);

} // namespace wearbench::signal
