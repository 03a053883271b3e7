#pragma once

#include "wearbench/cutting.hpp"
#include "wearbench/signal.hpp"
#include "wearbench/wear.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

// Synthetic 20-tool milling campaign: a wear-progression model plus
// wear-dependent force/torque/drive signals. Every constant lives in
// SynthConfig; nothing here is calibrated against real machining data.
namespace wearbench::synth {

struct ToolPlan {
    int tool_id = 0;
    bool variable = false;
    // Fixed tools: one entry repeated until the stop rule fires.
    // Variable tools: the full per-cut sequence.
    std::vector<int> set_sequence;
};

struct CampaignPlan {
    std::vector<ToolPlan> tools;
    double feed_travel_mm = 50.0;
    double depth_of_cut_mm = 1.5;
    double width_of_cut_mm = 1.5;
    double tool_diameter_mm = 6.0;
    int cutting_edges = 4;
    // Fixed-parameter tools stop once VB_max reaches this or after max_cuts.
    double stop_vbmax_um = 120.0;
    int max_cuts = 30;

    // Tools 1..16 two per parameter set, tools 17..20 with the variable
    // set sequences.
    [[nodiscard]] static CampaignPlan standard();
    [[nodiscard]] const ToolPlan& tool(int tool_id) const;
};

struct SynthConfig {
    // Wear progression: per-cut increment
    //   a (v_c/30)^p (f_z/0.03)^q (1 + VB/VB_ref) (dl/50) (1 + eta),
    // times (1 + high_speed_rate_gain) at v_c >= high_speed_onset.
    double wear_rate_um = 0.9;
    double speed_exponent = 2.0;
    double feed_exponent = 1.0;
    double self_accel_ref_um = 100.0;
    double eta_sigma = 0.15;
    double high_speed_onset_m_min = 40.0;
    double high_speed_rate_gain = 1.0;
    double high_speed_noise_gain = 2.0;
    double edge_variability = 0.08;

    // Signals: forces scale with (f_z/0.03)^force_feed_exponent,
    // (v_c/30)^force_speed_exponent and (1 + c_w VB_mean/100).
    double wear_force_gain = 0.5; // c_w
    double force_feed_exponent = 1.0;
    double force_speed_exponent = -0.15;
    double tooth_ripple = 0.25;
    double noise_floor = 0.03;
    double noise_speed_gain = 1.5;

    std::uint64_t master_seed = 42;

    // No eta, no edge scatter, no signal noise.
    [[nodiscard]] static SynthConfig deterministic(std::uint64_t seed = 42);
};

struct SignalProfile {
    std::string name = "full";
    double external_rate_hz = 10'000.0;
    double internal_rate_hz = 100.0;
    double window_s = 2.0;

    [[nodiscard]] std::size_t window_length() const;
    [[nodiscard]] static SignalProfile full();
    [[nodiscard]] static SignalProfile ci();
    [[nodiscard]] static SignalProfile by_name(const std::string& name);
};

// Per-edge wear profiles on a fixed grid measured from the tool tip.
struct WearState {
    std::vector<double> grid_um;
    std::array<std::vector<double>, wear::kEdgeCount> profiles;
    std::array<double, wear::kEdgeCount> edge_factors{};
    double feed_travel_mm = 0.0;

    [[nodiscard]] std::vector<wear::WearCurve> curves() const;
    [[nodiscard]] wear::WearTargets targets() const;
};

inline constexpr double kProfileSpanUm = 1500.0;

[[nodiscard]] WearState initial_wear_state(const SynthConfig& config, std::mt19937_64& rng);

// Shape of a wear increment along the edge, peaked near the tip, max 1.
[[nodiscard]] double wear_shape(double distance_um) noexcept;

// Advances every edge by one cut of delta_lf_mm feed travel. Profiles never
// decrease.
[[nodiscard]] WearState step_wear(const WearState& state, const CuttingParams& params, const SynthConfig& config,
                                  double delta_lf_mm, std::mt19937_64& rng);

// Expected (eta = 0) per-cut VB increment at wear level vb_um for a nominal edge.
[[nodiscard]] double expected_increment(const CuttingParams& params, const SynthConfig& config, double vb_um,
                                        double delta_lf_mm = 50.0) noexcept;

struct CutKinematics {
    double spindle_rpm = 0.0;
    double tooth_passing_hz = 0.0;
    double feed_rate_mm_min = 0.0;
    double duration_s = 0.0;
};

[[nodiscard]] CutKinematics kinematics(const CuttingParams& params, const CampaignPlan& plan);

// Throws ConfigError if the cut would last less than `min_duration_s`.
[[nodiscard]] signal::RawCut synthesize_cut_signals(const CuttingParams& params, const WearState& state,
                                                    const SignalProfile& profile, const SynthConfig& config,
                                                    const CampaignPlan& plan, std::mt19937_64& rng,
                                                    std::string cut_id = {}, double min_duration_s = 2.0);

// Simulates every tool and writes the dataset (manifest, signal blocks,
// wear CSVs) under out_dir. Returns the manifest path.
std::filesystem::path generate_campaign(const CampaignPlan& plan, const SynthConfig& config,
                                        const SignalProfile& profile, const std::filesystem::path& out_dir);

} // namespace wearbench::synth
