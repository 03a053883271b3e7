#include "wearbench/signal.hpp"

#include "wearbench/errors.hpp"
#include "wearbench/io.hpp"

#include <json.hpp>

#include <cmath>
#include <string>

namespace wearbench::signal {

using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, kChannelCount> kNames = {
    "M_T", "F_RCDx", "F_RCDy", "F_RCDxy", "F_SDx", "F_SDy", "F_SDxy", "M_S",
    "I_S", "M_x",    "M_y",    "M_xy",    "I_x",   "I_y",   "I_xy",
};

struct ResultantPair {
    ChannelId out, x, y;
};

constexpr std::array<ResultantPair, 4> kResultants = {{
    {ChannelId::F_RCDxy, ChannelId::F_RCDx, ChannelId::F_RCDy},
    {ChannelId::F_SDxy, ChannelId::F_SDx, ChannelId::F_SDy},
    {ChannelId::M_xy, ChannelId::M_x, ChannelId::M_y},
    {ChannelId::I_xy, ChannelId::I_x, ChannelId::I_y},
}};

const std::vector<double>& require_channel(const RawCut& cut, ChannelId id)
{
    const auto it = cut.channels.find(id);
    if (it == cut.channels.end())
        throw AssemblyError("cut '" + cut.cut_id + "' is missing channel " + std::string(channel_name(id)));
    return it->second;
}

std::size_t rounded(double v)
{
    return static_cast<std::size_t>(std::llround(v));
}

} // namespace

std::string_view channel_name(ChannelId id) noexcept
{
    return kNames[static_cast<std::size_t>(id)];
}

std::optional<ChannelId> parse_channel(std::string_view name) noexcept
{
    for (std::size_t i = 0; i < kChannelCount; ++i)
        if (kNames[i] == name) return static_cast<ChannelId>(i);
    return std::nullopt;
}

bool is_external(ChannelId id) noexcept
{
    return static_cast<std::size_t>(id) <= static_cast<std::size_t>(ChannelId::F_SDxy);
}

bool is_derived(ChannelId id) noexcept
{
    return id == ChannelId::F_RCDxy || id == ChannelId::F_SDxy || id == ChannelId::M_xy || id == ChannelId::I_xy;
}

std::vector<ChannelId> channels_for(ChannelMode mode)
{
    std::vector<ChannelId> out;
    for (auto id : kAllChannels) {
        if (mode == ChannelMode::External && !is_external(id)) continue;
        if (mode == ChannelMode::Internal && is_external(id)) continue;
        out.push_back(id);
    }
    return out;
}

std::string_view mode_name(ChannelMode mode) noexcept
{
    switch (mode) {
    case ChannelMode::External: return "external";
    case ChannelMode::Internal: return "internal";
    case ChannelMode::All: return "all";
    }
    return "all";
}

ChannelMode parse_mode(std::string_view name)
{
    if (name == "external") return ChannelMode::External;
    if (name == "internal") return ChannelMode::Internal;
    if (name == "all") return ChannelMode::All;
    throw ConfigError("unknown channel mode '" + std::string(name) + "' (expected external, internal or all)");
}

double RawCut::duration_s() const noexcept
{
    return internal_rate_hz > 0 ? static_cast<double>(feed_position_mm.size()) / internal_rate_hz : 0.0;
}

MillingSpan find_milling_phase(std::span<const double> position_mm, double margin_mm, std::string_view cut_id)
{
    if (position_mm.size() < 2)
        throw WindowError("cut '" + std::string(cut_id) + "' has no usable feed-position trace");
    const double start = position_mm.front() + margin_mm;
    const double stop = position_mm.back() - margin_mm;
    MillingSpan span;
    std::size_t i = 0;
    while (i < position_mm.size() && position_mm[i] < start) ++i;
    span.begin = i;
    std::size_t j = position_mm.size();
    while (j > span.begin && position_mm[j - 1] > stop) --j;
    span.end = j;
    if (span.end <= span.begin)
        throw WindowError("cut '" + std::string(cut_id) + "' has no milling phase between the cut-in and cut-out "
                          "margins");
    for (std::size_t k = span.begin + 1; k < span.end; ++k)
        if (position_mm[k] < position_mm[k - 1])
            throw WindowError("cut '" + std::string(cut_id) + "': feed position moves backwards inside the milling "
                              "phase");
    return span;
}

RawCut extract_window(const RawCut& cut, const WindowConfig& config)
{
    if (!(config.window_s > 0.0)) throw ParameterError("window length must be positive");
    const MillingSpan span = find_milling_phase(cut.feed_position_mm, config.margin_mm, cut.cut_id);
    const std::size_t n_int = rounded(config.window_s * cut.internal_rate_hz);
    const std::size_t n_ext = rounded(config.window_s * cut.external_rate_hz);
    const double span_s = static_cast<double>(span.end - span.begin) / cut.internal_rate_hz;
    if (span.end - span.begin < n_int)
        throw WindowError("cut '" + cut.cut_id + "': milling phase lasts " + std::to_string(span_s) +
                          " s, shorter than the " + std::to_string(config.window_s) + " s window");

    const std::size_t int_end = span.end;
    const std::size_t ext_end = rounded(static_cast<double>(span.end) * cut.external_rate_hz / cut.internal_rate_hz);

    RawCut out;
    out.cut_id = cut.cut_id;
    out.external_rate_hz = cut.external_rate_hz;
    out.internal_rate_hz = cut.internal_rate_hz;
    out.feed_position_mm.assign(cut.feed_position_mm.begin() + static_cast<std::ptrdiff_t>(int_end - n_int),
                                cut.feed_position_mm.begin() + static_cast<std::ptrdiff_t>(int_end));
    for (const auto& [id, samples] : cut.channels) {
        const std::size_t end = is_external(id) ? ext_end : int_end;
        const std::size_t n = is_external(id) ? n_ext : n_int;
        if (end > samples.size() || end < n)
            throw WindowError("cut '" + cut.cut_id + "': channel " + std::string(channel_name(id)) + " holds " +
                              std::to_string(samples.size()) + " samples, too few for the window");
        out.channels.emplace(id, std::vector<double>(samples.begin() + static_cast<std::ptrdiff_t>(end - n),
                                                     samples.begin() + static_cast<std::ptrdiff_t>(end)));
    }
    return out;
}

std::vector<double> resample_linear(std::span<const double> signal, std::size_t target_len)
{
    if (target_len < 2) throw ParameterError("resample_linear: target length must be at least 2");
    if (signal.size() < 2) throw LengthError("resample_linear: need at least 2 source samples");
    if (signal.size() == target_len) return {signal.begin(), signal.end()};

    const std::size_t n = signal.size();
    std::vector<double> out(target_len);
    const double scale = static_cast<double>(n - 1) / static_cast<double>(target_len - 1);
    for (std::size_t i = 0; i < target_len; ++i) {
        const double u = static_cast<double>(i) * scale;
        std::size_t k = static_cast<std::size_t>(u);
        if (k >= n - 1) k = n - 2;
        const double frac = u - static_cast<double>(k);
        out[i] = signal[k] + frac * (signal[k + 1] - signal[k]);
    }
    out.front() = signal.front();
    out.back() = signal.back();
    return out;
}

std::vector<double> resultant(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw ShapeError("resultant: component lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()) + " differ");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::hypot(x[i], y[i]);
    return out;
}

SignalWindow assemble_window(const RawCut& trimmed, ChannelMode mode)
{
    const auto ids = channels_for(mode);
    const std::size_t len =
        rounded(static_cast<double>(trimmed.feed_position_mm.size()) * trimmed.external_rate_hz /
                trimmed.internal_rate_hz);
    if (len < 2) throw AssemblyError("cut '" + trimmed.cut_id + "' is too short to assemble a window");

    SignalWindow window;
    window.cut_id = trimmed.cut_id;
    window.sample_rate_hz = trimmed.external_rate_hz;
    window.channels = ids;
    window.data = Tensor({ids.size(), len});

    auto row_for = [&](ChannelId id) -> std::vector<double> {
        if (is_derived(id)) {
            for (const auto& pair : kResultants)
                if (pair.out == id) return resultant(require_channel(trimmed, pair.x), require_channel(trimmed, pair.y));
        }
        return require_channel(trimmed, id);
    };

    for (std::size_t r = 0; r < ids.size(); ++r) {
        std::vector<double> samples = row_for(ids[r]);
        if (!is_external(ids[r])) samples = resample_linear(samples, len);
        if (samples.size() != len)
            throw AssemblyError("cut '" + trimmed.cut_id + "': channel " + std::string(channel_name(ids[r])) +
                                " has " + std::to_string(samples.size()) + " samples, expected " +
                                std::to_string(len));
        std::copy(samples.begin(), samples.end(), window.data.row(r).begin());
    }
    return window;
}

ChannelStats fit_stats(std::span<const SignalWindow* const> windows)
{
    if (windows.empty()) throw ParameterError("fit_stats: empty training split");
    const auto& first = *windows.front();
    const std::size_t k = first.channels.size();
    ChannelStats stats;
    stats.channels = first.channels;
    stats.mean.assign(k, 0.0);
    stats.stddev.assign(k, 0.0);
    stats.constant.assign(k, false);

    double count = 0.0;
    for (const auto* w : windows) {
        if (w->channels != first.channels)
            throw ShapeError("fit_stats: window '" + w->cut_id + "' has a different channel layout");
        stats.fitted_cut_ids.push_back(w->cut_id);
        count += static_cast<double>(w->length());
        for (std::size_t c = 0; c < k; ++c)
            for (double v : w->data.row(c)) stats.mean[c] += v;
    }
    for (auto& m : stats.mean) m /= count;
    for (const auto* w : windows)
        for (std::size_t c = 0; c < k; ++c)
            for (double v : w->data.row(c)) {
                const double d = v - stats.mean[c];
                stats.stddev[c] += d * d;
            }
    for (std::size_t c = 0; c < k; ++c) {
        stats.stddev[c] = std::sqrt(stats.stddev[c] / count);
        stats.constant[c] = stats.stddev[c] <= 1e-12 * std::max(1.0, std::abs(stats.mean[c]));
    }
    return stats;
}

ChannelStats fit_stats(std::span<const SignalWindow> windows)
{
    std::vector<const SignalWindow*> ptrs;
    ptrs.reserve(windows.size());
    for (const auto& w : windows) ptrs.push_back(&w);
    return fit_stats(std::span<const SignalWindow* const>(ptrs));
}

SignalWindow apply_stats(const SignalWindow& window, const ChannelStats& stats)
{
    if (window.channels != stats.channels)
        throw ShapeError("apply_stats: window '" + window.cut_id + "' channel layout differs from the statistics");
    SignalWindow out = window;
    for (std::size_t c = 0; c < stats.channels.size(); ++c) {
        auto row = out.data.row(c);
        if (stats.constant[c]) {
            std::fill(row.begin(), row.end(), 0.0);
            continue;
        }
        const double inv = 1.0 / stats.stddev[c];
        for (auto& v : row) v = (v - stats.mean[c]) * inv;
    }
    return out;
}

void write_window(const SignalWindow& window, const std::filesystem::path& base)
{
    json sidecar;
    sidecar["format"] = "f64le";
    sidecar["cut_id"] = window.cut_id;
    sidecar["sample_rate_hz"] = window.sample_rate_hz;
    sidecar["shape"] = window.data.shape();
    json names = json::array();
    for (auto id : window.channels) names.push_back(std::string(channel_name(id)));
    sidecar["channels"] = names;
    auto bin = base;
    bin += ".bin";
    auto meta = base;
    meta += ".json";
    io::write_f64_le(bin, window.data.data());
    io::write_text(meta, sidecar.dump(2) + "\n");
}

SignalWindow read_window(const std::filesystem::path& base)
{
    auto bin = base;
    bin += ".bin";
    auto meta = base;
    meta += ".json";
    json sidecar;
    try {
        sidecar = json::parse(io::read_text(meta));
    } catch (const json::exception& e) {
        throw LoadError(meta.string() + ": " + e.what());
    }
    SignalWindow window;
    try {
        window.cut_id = sidecar.at("cut_id").get<std::string>();
        window.sample_rate_hz = sidecar.at("sample_rate_hz").get<double>();
        for (const auto& n : sidecar.at("channels")) {
            const auto id = parse_channel(n.get<std::string>());
            if (!id) throw LoadError(meta.string() + ": unknown channel " + n.get<std::string>());
            window.channels.push_back(*id);
        }
        auto shape = sidecar.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2 || shape[0] != window.channels.size())
            throw LoadError(meta.string() + ": shape does not match channel list");
        window.data = Tensor(shape, io::read_f64_le(bin));
    } catch (const json::exception& e) {
        throw LoadError(meta.string() + ": " + e.what());
    } catch (const ShapeError& e) {
        throw LoadError(bin.string() + ": " + e.what());
    }
    return window;
}

} // namespace wearbench::signal
