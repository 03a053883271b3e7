#include "wearbench/wear.hpp"

#include "wearbench/errors.hpp"
#include "wearbench/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wearbench::wear {

namespace {

struct IntervalStats {
    double mean = 0.0;
    double max = 0.0;
};

// Exact mean and supremum of the piecewise-linear curve over [a, b].
IntervalStats interval_stats(const WearCurve& curve, double a, double b)
{
    const auto& d = curve.distance_um;
    const auto& v = curve.vb_um;
    double integral = 0.0;
    double peak = curve.value_at(a);
    peak = std::max(peak, curve.value_at(b));
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        const double lo = std::max(a, d[i]);
        const double hi = std::min(b, d[i + 1]);
        if (hi <= lo) continue;
        const double slope = (v[i + 1] - v[i]) / (d[i + 1] - d[i]);
        const double f_lo = v[i] + slope * (lo - d[i]);
        const double f_hi = v[i] + slope * (hi - d[i]);
        integral += 0.5 * (f_lo + f_hi) * (hi - lo);
        if (d[i] >= a && d[i] <= b) peak = std::max(peak, v[i]);
        if (d[i + 1] >= a && d[i + 1] <= b) peak = std::max(peak, v[i + 1]);
    }
    return {integral / (b - a), peak};
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text)
{
    std::vector<std::string_view> out;
    for (auto line : split(text, '\n')) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

} // namespace

void WearCurve::validate() const
{
    if (distance_um.size() != vb_um.size())
        throw MeasurementError("wear curve: " + std::to_string(distance_um.size()) + " distances but " +
                               std::to_string(vb_um.size()) + " widths");
    if (distance_um.size() < 2) throw MeasurementError("wear curve needs at least two samples");
    for (std::size_t i = 0; i < distance_um.size(); ++i) {
        if (!std::isfinite(distance_um[i]) || !std::isfinite(vb_um[i]))
            throw MeasurementError("wear curve contains a non-finite sample");
        if (vb_um[i] < 0.0) throw MeasurementError("wear curve has negative width at " + std::to_string(distance_um[i]));
        if (i > 0 && distance_um[i] <= distance_um[i - 1])
            throw MeasurementError("wear curve distances must strictly increase");
    }
}

double WearCurve::value_at(double distance) const
{
    const auto& d = distance_um;
    if (distance <= d.front()) return vb_um.front();
    if (distance >= d.back()) return vb_um.back();
    const auto it = std::upper_bound(d.begin(), d.end(), distance);
    const std::size_t i = static_cast<std::size_t>(it - d.begin()) - 1;
    const double t = (distance - d[i]) / (d[i + 1] - d[i]);
    return vb_um[i] + t * (vb_um[i + 1] - vb_um[i]);
}

std::string_view target_name(std::size_t index) noexcept
{
    static constexpr std::array<std::string_view, kTargetCount> names = {
        "VB_mean_1", "VB_mean_2", "VB_mean_3", "VB_max_1", "VB_max_2", "VB_max_3", "VB_mean", "VB_max",
    };
    return index < names.size() ? names[index] : "?";
}

WearCurve average_edges(std::span<const WearCurve> curves, double grid_um)
{
    if (curves.size() != kEdgeCount)
        throw ParameterError("average_edges expects " + std::to_string(kEdgeCount) + " edge curves, got " +
                             std::to_string(curves.size()));
    if (!(grid_um > 0.0)) throw ParameterError("average_edges: grid spacing must be positive");
    double lo = -INFINITY;
    double hi = INFINITY;
    for (const auto& c : curves) {
        c.validate();
        lo = std::max(lo, c.distance_um.front());
        hi = std::min(hi, c.distance_um.back());
    }
    if (!(hi > lo)) throw MeasurementError("average_edges: edge curves share no common distance span");
    const double first = std::ceil(lo / grid_um - 1e-9) * grid_um;
    const double last = std::floor(hi / grid_um + 1e-9) * grid_um;
    const auto steps = static_cast<long long>(std::llround((last - first) / grid_um));
    if (steps < 1) throw MeasurementError("average_edges: common span is shorter than one grid step");

    WearCurve avg;
    avg.distance_um.resize(static_cast<std::size_t>(steps) + 1);
    avg.vb_um.resize(avg.distance_um.size());
    for (std::size_t i = 0; i < avg.distance_um.size(); ++i) {
        const double d = first + static_cast<double>(i) * grid_um;
        std::array<double, kEdgeCount> vals{};
        for (std::size_t e = 0; e < kEdgeCount; ++e) vals[e] = curves[e].value_at(std::clamp(d, lo, hi));
        std::sort(vals.begin(), vals.end());
        double sum = 0.0;
        for (double v : vals) sum += v;
        avg.distance_um[i] = d;
        avg.vb_um[i] = sum / static_cast<double>(kEdgeCount);
    }
    return avg;
}

WearTargets compute_targets(const WearCurve& curve)
{
    curve.validate();
    constexpr double tol = 1e-9;
    if (curve.distance_um.front() > tol || curve.distance_um.back() < kZoneCoverageUm - tol)
        throw CoverageError("wear curve covers [" + io::format_double(curve.distance_um.front()) + ", " +
                            io::format_double(curve.distance_um.back()) + "] um, need [0, " +
                            io::format_double(kZoneCoverageUm) + "]");
    WearTargets t;
    for (std::size_t z = 0; z < kZoneCount; ++z) {
        const auto s = interval_stats(curve, kZoneWidthUm * static_cast<double>(z),
                                      kZoneWidthUm * static_cast<double>(z + 1));
        t.values[z] = s.mean;
        t.values[kZoneCount + z] = s.max;
    }
    const auto global = interval_stats(curve, curve.distance_um.front(), curve.distance_um.back());
    t.values[6] = global.mean;
    t.values[7] = global.max;
    return t;
}

std::string edge_curves_to_csv(std::span<const WearCurve> curves)
{
    std::string out = "edge,distance_um,vb_um\n";
    for (std::size_t e = 0; e < curves.size(); ++e) {
        const auto& c = curves[e];
        for (std::size_t i = 0; i < c.distance_um.size(); ++i) {
            out += std::to_string(e + 1);
            out += ',';
            out += io::format_double(c.distance_um[i]);
            out += ',';
            out += io::format_double(c.vb_um[i]);
            out += '\n';
        }
    }
    return out;
}

std::vector<WearCurve> edge_curves_from_csv(std::string_view text)
{
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != "edge,distance_um,vb_um")
        throw LoadError("wear CSV: expected header 'edge,distance_um,vb_um'");
    std::vector<WearCurve> curves;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split(lines[i], ',');
        if (fields.size() != 3) throw LoadError("wear CSV line " + std::to_string(i + 1) + ": expected 3 fields");
        const auto edge = static_cast<std::size_t>(io::parse_double(fields[0]));
        if (edge < 1) throw LoadError("wear CSV line " + std::to_string(i + 1) + ": edge numbers start at 1");
        if (edge > curves.size()) curves.resize(edge);
        curves[edge - 1].distance_um.push_back(io::parse_double(fields[1]));
        curves[edge - 1].vb_um.push_back(io::parse_double(fields[2]));
    }
    for (const auto& c : curves) c.validate();
    return curves;
}

void write_edge_curves(const std::filesystem::path& path, std::span<const WearCurve> curves)
{
    io::write_text(path, edge_curves_to_csv(curves));
}

std::vector<WearCurve> read_edge_curves(const std::filesystem::path& path)
{
    return edge_curves_from_csv(io::read_text(path));
}

std::string curve_to_csv(const WearCurve& curve)
{
    std::string out = "distance_um,vb_um\n";
    for (std::size_t i = 0; i < curve.distance_um.size(); ++i) {
        out += io::format_double(curve.distance_um[i]);
        out += ',';
        out += io::format_double(curve.vb_um[i]);
        out += '\n';
    }
    return out;
}

WearCurve curve_from_csv(std::string_view text)
{
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != "distance_um,vb_um")
        throw LoadError("curve CSV: expected header 'distance_um,vb_um'");
    WearCurve c;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split(lines[i], ',');
        if (fields.size() != 2) throw LoadError("curve CSV line " + std::to_string(i + 1) + ": expected 2 fields");
        c.distance_um.push_back(io::parse_double(fields[0]));
        c.vb_um.push_back(io::parse_double(fields[1]));
    }
    c.validate();
    return c;
}

} // namespace wearbench::wear
