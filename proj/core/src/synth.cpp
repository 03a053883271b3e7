#include "wearbench/synth.hpp"

#include "wearbench/dataset.hpp"
#include "wearbench/errors.hpp"
#include "wearbench/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wearbench::synth {

namespace {

// Nominal magnitudes used to scale channel noise.
constexpr double kForceX = 150.0;  // N, feed direction
constexpr double kForceY = 260.0;  // N, normal direction
constexpr double kToolTorque = 0.9; // Nm

struct InternalLevels {
    double spindle_torque, spindle_current, torque_x, torque_y, current_x, current_y;
};

InternalLevels internal_levels(double load, double spindle_rpm)
{
    InternalLevels l{};
    l.spindle_torque = kToolTorque * load + 0.15 + 2.0e-4 * spindle_rpm;
    l.spindle_current = 2.0 + 3.1 * l.spindle_torque;
    l.torque_x = 4.0e-3 * kForceX * load + 0.3;
    l.torque_y = 2.0e-3 * kForceY * load + 0.05;
    l.current_x = 0.5 + 2.2 * l.torque_x;
    l.current_y = 0.2 + 2.2 * l.torque_y;
    return l;
}

} // namespace

CampaignPlan CampaignPlan::standard()
{
    CampaignPlan plan;
    for (int set = 1; set <= 8; ++set)
        for (int k = 0; k < 2; ++k) plan.tools.push_back({2 * (set - 1) + k + 1, false, {set}});
    plan.tools.push_back({17, true, {6, 3, 5, 8, 1, 7, 6, 3, 8, 7, 2}});
    plan.tools.push_back({18, true, {1, 4, 8, 3, 3, 3, 7, 1, 8}});
    plan.tools.push_back({19, true, {8, 4, 3, 8, 6, 1, 1, 5, 8, 7, 6, 4, 1, 5}});
    plan.tools.push_back({20, true, {3, 8, 6, 5, 4, 6, 1, 8, 8, 4, 6, 2}});
    return plan;
}

const ToolPlan& CampaignPlan::tool(int tool_id) const
{
    for (const auto& t : tools)
        if (t.tool_id == tool_id) return t;
    throw DatasetError("campaign plan has no tool " + std::to_string(tool_id));
}

SynthConfig SynthConfig::deterministic(std::uint64_t seed)
{
    SynthConfig c;
    c.eta_sigma = 0.0;
    c.edge_variability = 0.0;
    c.noise_floor = 0.0;
    c.master_seed = seed;
    return c;
}

std::size_t SignalProfile::window_length() const
{
    return static_cast<std::size_t>(std::llround(external_rate_hz * window_s));
}

SignalProfile SignalProfile::full()
{
    return {"full", 10'000.0, 100.0, 2.0};
}

SignalProfile SignalProfile::ci()
{
    return {"ci", 1'000.0, 100.0, 2.0};
}

SignalProfile SignalProfile::by_name(const std::string& name)
{
    if (name == "full") return full();
    if (name == "ci") return ci();
    throw ConfigError("unknown profile '" + name + "' (expected full or ci)");
}

std::vector<wear::WearCurve> WearState::curves() const
{
    std::vector<wear::WearCurve> out;
    for (const auto& p : profiles) out.push_back({grid_um, p});
    return out;
}

wear::WearTargets WearState::targets() const
{
    const auto c = curves();
    return wear::compute_targets(wear::average_edges(c));
}

double wear_shape(double d) noexcept
{
    auto raw = [](double x) {
        const double tip = (x - 220.0) / 380.0;
        const double notch = (x - 1250.0) / 140.0;
        return 0.45 + 0.55 * std::exp(-tip * tip) + 0.25 * std::exp(-notch * notch);
    };
    return raw(d) / raw(220.0);
}

WearState initial_wear_state(const SynthConfig& config, std::mt19937_64& rng)
{
    WearState s;
    const auto n = static_cast<std::size_t>(kProfileSpanUm / wear::kGridSpacingUm) + 1;
    s.grid_um.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.grid_um[i] = static_cast<double>(i) * wear::kGridSpacingUm;
    std::normal_distribution<double> scatter(0.0, 1.0);
    for (std::size_t e = 0; e < wear::kEdgeCount; ++e) {
        s.profiles[e].assign(n, 0.0);
        const double z = config.edge_variability > 0.0 ? scatter(rng) : 0.0;
        s.edge_factors[e] = std::max(0.5, 1.0 + config.edge_variability * z);
    }
    return s;
}

double expected_increment(const CuttingParams& p, const SynthConfig& c, double vb_um, double delta_lf_mm) noexcept
{
    double rate = c.wear_rate_um * std::pow(p.cutting_speed_m_min / 30.0, c.speed_exponent) *
                  std::pow(p.feed_per_tooth_mm / 0.03, c.feed_exponent) * (1.0 + vb_um / c.self_accel_ref_um) *
                  (delta_lf_mm / 50.0);
    if (p.cutting_speed_m_min >= c.high_speed_onset_m_min) rate *= 1.0 + c.high_speed_rate_gain;
    return rate;
}

WearState step_wear(const WearState& state, const CuttingParams& params, const SynthConfig& config,
                    double delta_lf_mm, std::mt19937_64& rng)
{
    if (!(delta_lf_mm > 0.0)) throw ParameterError("step_wear: feed travel increment must be positive");
    double sigma = config.eta_sigma;
    if (params.cutting_speed_m_min >= config.high_speed_onset_m_min) sigma *= 1.0 + config.high_speed_noise_gain;
    double eta = 0.0;
    if (sigma > 0.0) eta = std::normal_distribution<double>(0.0, sigma)(rng);
    const double factor = std::max(0.0, 1.0 + eta);

    WearState next = state;
    next.feed_travel_mm += delta_lf_mm;
    for (std::size_t e = 0; e < wear::kEdgeCount; ++e) {
        auto& prof = next.profiles[e];
        const double vb = *std::max_element(prof.begin(), prof.end());
        const double inc = expected_increment(params, config, vb, delta_lf_mm) * state.edge_factors[e] * factor;
        for (std::size_t i = 0; i < prof.size(); ++i) prof[i] += inc * wear_shape(next.grid_um[i]);
    }
    return next;
}

CutKinematics kinematics(const CuttingParams& params, const CampaignPlan& plan)
{
    if (!(params.cutting_speed_m_min > 0.0 && params.feed_per_tooth_mm > 0.0))
        throw ParameterError("cutting parameters must be strictly positive");
    CutKinematics k;
    k.spindle_rpm = 1000.0 * params.cutting_speed_m_min / (std::numbers::pi * plan.tool_diameter_mm);
    k.tooth_passing_hz = plan.cutting_edges * k.spindle_rpm / 60.0;
    k.feed_rate_mm_min = k.spindle_rpm * plan.cutting_edges * params.feed_per_tooth_mm;
    k.duration_s = plan.feed_travel_mm / k.feed_rate_mm_min * 60.0;
    return k;
}

signal::RawCut synthesize_cut_signals(const CuttingParams& params, const WearState& state,
                                      const SignalProfile& profile, const SynthConfig& config,
                                      const CampaignPlan& plan, std::mt19937_64& rng, std::string cut_id,
                                      double min_duration_s)
{
    using signal::ChannelId;
    const auto kin = kinematics(params, plan);
    if (kin.duration_s < min_duration_s)
        throw ConfigError("cut '" + cut_id + "' lasts " + std::to_string(kin.duration_s) +
                          " s, shorter than the required " + std::to_string(min_duration_s) + " s");

    const double vb_mean = state.targets().vb_mean();
    const double wear_factor = 1.0 + config.wear_force_gain * vb_mean / 100.0;
    const double level = std::pow(params.feed_per_tooth_mm / 0.03, config.force_feed_exponent) *
                         std::pow(params.cutting_speed_m_min / 30.0, config.force_speed_exponent) * wear_factor;
    const double noise_scale =
        config.noise_floor * (1.0 + config.noise_speed_gain * std::max(0.0, params.cutting_speed_m_min / 30.0 - 1.0));

    const double feed_mm_s = kin.feed_rate_mm_min / 60.0;
    auto engagement = [&](double x) {
        const double d = plan.tool_diameter_mm;
        return std::clamp(x / d, 0.0, 1.0) * std::clamp((plan.feed_travel_mm - x) / d, 0.0, 1.0);
    };

    const auto n_int = static_cast<std::size_t>(std::floor(kin.duration_s * profile.internal_rate_hz)) + 1;
    const auto ratio = static_cast<std::size_t>(std::llround(profile.external_rate_hz / profile.internal_rate_hz));
    const std::size_t n_ext = n_int * ratio;

    signal::RawCut cut;
    cut.cut_id = std::move(cut_id);
    cut.external_rate_hz = profile.external_rate_hz;
    cut.internal_rate_hz = profile.internal_rate_hz;

    std::normal_distribution<double> gauss(0.0, 1.0);
    auto noise = [&](double magnitude) { return noise_scale > 0.0 ? noise_scale * magnitude * gauss(rng) : 0.0; };

    std::vector<double> mt(n_ext), rx(n_ext), ry(n_ext), sx(n_ext), sy(n_ext);
    const double w_tooth = 2.0 * std::numbers::pi * kin.tooth_passing_hz;
    const double w_spindle = 2.0 * std::numbers::pi * kin.spindle_rpm / 60.0;
    for (std::size_t j = 0; j < n_ext; ++j) {
        const double t = static_cast<double>(j) / profile.external_rate_hz;
        const double x = std::min(plan.feed_travel_mm, feed_mm_s * t);
        const double load = level * engagement(x) * (1.0 + config.tooth_ripple * std::sin(w_tooth * t));
        const double fx = kForceX * load;
        const double fy = kForceY * load;
        const double c = std::cos(w_spindle * t);
        const double s = std::sin(w_spindle * t);
        sx[j] = fx + noise(kForceX);
        sy[j] = fy + noise(kForceY);
        rx[j] = fx * c + fy * s + noise(kForceX);
        ry[j] = -fx * s + fy * c + noise(kForceX);
        mt[j] = kToolTorque * load + noise(kToolTorque);
    }

    std::vector<double> ms(n_int), is(n_int), mx(n_int), my(n_int), ix(n_int), iy(n_int);
    cut.feed_position_mm.resize(n_int);
    for (std::size_t i = 0; i < n_int; ++i) {
        const double t = static_cast<double>(i) / profile.internal_rate_hz;
        const double x = std::min(plan.feed_travel_mm, feed_mm_s * t);
        cut.feed_position_mm[i] = x;
        const auto l = internal_levels(level * engagement(x), kin.spindle_rpm);
        ms[i] = l.spindle_torque + noise(1.0);
        is[i] = l.spindle_current + noise(3.0);
        mx[i] = l.torque_x + noise(0.9);
        my[i] = l.torque_y + noise(0.6);
        ix[i] = l.current_x + noise(2.0);
        iy[i] = l.current_y + noise(1.3);
    }

    cut.channels[ChannelId::M_T] = std::move(mt);
    cut.channels[ChannelId::F_RCDx] = std::move(rx);
    cut.channels[ChannelId::F_RCDy] = std::move(ry);
    cut.channels[ChannelId::F_SDx] = std::move(sx);
    cut.channels[ChannelId::F_SDy] = std::move(sy);
    cut.channels[ChannelId::M_S] = std::move(ms);
    cut.channels[ChannelId::I_S] = std::move(is);
    cut.channels[ChannelId::M_x] = std::move(mx);
    cut.channels[ChannelId::M_y] = std::move(my);
    cut.channels[ChannelId::I_x] = std::move(ix);
    cut.channels[ChannelId::I_y] = std::move(iy);
    return cut;
}

std::filesystem::path generate_campaign(const CampaignPlan& plan, const SynthConfig& config,
                                        const SignalProfile& profile, const std::filesystem::path& out_dir)
{
    data::Campaign campaign;
    campaign.root = out_dir;
    campaign.plan = plan;
    campaign.config = config;
    campaign.profile = profile;

    for (const auto& tp : plan.tools) {
        if (tp.set_sequence.empty()) throw ConfigError("tool " + std::to_string(tp.tool_id) + " has no parameter set");
        data::ToolRecord tool;
        tool.tool_id = tp.tool_id;
        tool.variable = tp.variable;
        tool.seed = io::derive_seed(config.master_seed, static_cast<std::uint64_t>(tp.tool_id));
        std::mt19937_64 rng(tool.seed);
        WearState state = initial_wear_state(config, rng);

        const int planned = tp.variable ? static_cast<int>(tp.set_sequence.size()) : plan.max_cuts;
        for (int k = 1; k <= planned; ++k) {
            const int set = tp.variable ? tp.set_sequence[static_cast<std::size_t>(k - 1)] : tp.set_sequence.front();
            const CuttingParams params = parameter_set(set);

            data::CutRecord rec;
            rec.tool_id = tp.tool_id;
            rec.cut_index = k;
            rec.parameter_set = set;
            rec.params = params;
            char stem[64];
            std::snprintf(stem, sizeof stem, "tool_%02d/cut_%03d", tp.tool_id, k);
            rec.signal_file = std::string(stem) + ".bin";
            rec.sidecar_file = std::string(stem) + ".json";
            rec.wear_file = std::string(stem) + "_wear.csv";

            const auto raw = synthesize_cut_signals(params, state, profile, config, plan, rng, rec.cut_id());
            state = step_wear(state, params, config, plan.feed_travel_mm, rng);
            rec.feed_travel_mm = state.feed_travel_mm;

            data::write_raw_cut(raw, out_dir / rec.signal_file, out_dir / rec.sidecar_file);
            const auto curves = state.curves();
            wear::write_edge_curves(out_dir / rec.wear_file, curves);
            tool.cuts.push_back(std::move(rec));

            if (!tp.variable && state.targets().vb_max() >= plan.stop_vbmax_um) break;
        }
        campaign.tools.push_back(std::move(tool));
    }
    data::write_manifest(campaign);
    return out_dir / data::kManifestName;
}

} // namespace wearbench::synth
