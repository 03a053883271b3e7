#include "oracles.hpp"

#include "wearbench/dataset.hpp"
#include "wearbench/errors.hpp"
#include "wearbench/io.hpp"
#include "wearbench/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

using namespace wearbench;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("wearbench_synth_" + name);
    fs::remove_all(p);
    return p;
}

double vb_max(const synth::WearState& s)
{
    return s.targets().vb_max();
}

// A small plan: every fixed tool capped at a few cuts.
synth::CampaignPlan short_plan(int max_cuts)
{
    auto plan = synth::CampaignPlan::standard();
    plan.max_cuts = max_cuts;
    return plan;
}

std::string read_all_files(const fs::path& dir)
{
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += fs::relative(f, dir).string() + "\n" + io::read_text(f);
    return all;
}

} // namespace

TEST(Plan, TwentyToolsWithTableSequences)
{
    const auto plan = synth::CampaignPlan::standard();
    ASSERT_EQ(plan.tools.size(), 20u);
    for (int id = 1; id <= 16; ++id) {
        const auto& t = plan.tool(id);
        EXPECT_FALSE(t.variable);
        EXPECT_EQ(t.set_sequence, std::vector<int>{(id + 1) / 2});
    }
    EXPECT_EQ(plan.tool(17).set_sequence, (std::vector<int>{6, 3, 5, 8, 1, 7, 6, 3, 8, 7, 2}));
    EXPECT_EQ(plan.tool(18).set_sequence, (std::vector<int>{1, 4, 8, 3, 3, 3, 7, 1, 8}));
    EXPECT_EQ(plan.tool(19).set_sequence, (std::vector<int>{8, 4, 3, 8, 6, 1, 1, 5, 8, 7, 6, 4, 1, 5}));
    EXPECT_EQ(plan.tool(20).set_sequence, (std::vector<int>{3, 8, 6, 5, 4, 6, 1, 8, 8, 4, 6, 2}));
    EXPECT_EQ(plan.feed_travel_mm, 50.0);
    EXPECT_EQ(plan.depth_of_cut_mm, 1.5);
    EXPECT_EQ(plan.width_of_cut_mm, 1.5);
    EXPECT_EQ(plan.tool_diameter_mm, 6.0);
    EXPECT_EQ(plan.cutting_edges, 4);
}

TEST(Kinematics, SetOneAndSetSeven)
{
    const auto plan = synth::CampaignPlan::standard();
    const auto k1 = synth::kinematics(parameter_set(1), plan);
    EXPECT_NEAR(k1.spindle_rpm, 1591.5, 0.05);
    EXPECT_NEAR(k1.tooth_passing_hz, 106.1, 0.05);
    EXPECT_NEAR(k1.duration_s, 15.7, 0.05);
    EXPECT_NEAR(synth::kinematics(parameter_set(7), plan).duration_s, 17.7, 0.05);
}

TEST(StepWear, ZeroRateLeavesWearUnchanged)
{
    auto cfg = synth::SynthConfig{};
    cfg.wear_rate_um = 0.0;
    std::mt19937_64 rng(1);
    auto s = synth::initial_wear_state(cfg, rng);
    const auto before = s.profiles;
    s = synth::step_wear(s, parameter_set(2), cfg, 50.0, rng);
    EXPECT_EQ(s.profiles, before);
    EXPECT_EQ(s.feed_travel_mm, 50.0);
}

TEST(StepWear, TwelveSetOneCutsInBand)
{
    // Deterministic centre of the band.
    const auto det = synth::SynthConfig::deterministic();
    std::mt19937_64 rng(0);
    auto s = synth::initial_wear_state(det, rng);
    for (int k = 0; k < 12; ++k) s = synth::step_wear(s, parameter_set(1), det, 50.0, rng);
    EXPECT_GE(vb_max(s), 8.0);
    EXPECT_LE(vb_max(s), 30.0);
    // Stochastic runs stay within the band.
    const auto cfg = synth::SynthConfig{};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        std::mt19937_64 r(seed);
        auto st = synth::initial_wear_state(cfg, r);
        for (int k = 0; k < 12; ++k) st = synth::step_wear(st, parameter_set(1), cfg, 50.0, r);
        EXPECT_GE(vb_max(st), 8.0);
        EXPECT_LE(vb_max(st), 30.0);
    }
}

TEST(StepWear, SameSeedSameTrajectory)
{
    const auto cfg = synth::SynthConfig{};
    auto run = [&] {
        std::mt19937_64 rng(77);
        auto s = synth::initial_wear_state(cfg, rng);
        std::vector<double> out;
        for (int k = 0; k < 10; ++k) {
            s = synth::step_wear(s, parameter_set(8), cfg, 50.0, rng);
            out.push_back(vb_max(s));
        }
        return out;
    };
    EXPECT_EQ(run(), run());
}

TEST(StepWear, HighSpeedIsNoisier)
{
    const auto cfg = synth::SynthConfig{};
    auto variance = [&](CuttingParams p) {
        std::vector<double> finals;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            std::mt19937_64 rng(seed);
            auto s = synth::initial_wear_state(cfg, rng);
            for (int k = 0; k < 8; ++k) s = synth::step_wear(s, p, cfg, 50.0, rng);
            finals.push_back(vb_max(s));
        }
        const double m = std::accumulate(finals.begin(), finals.end(), 0.0) / 200.0;
        double v = 0.0;
        for (double f : finals) v += (f - m) * (f - m);
        return v / 199.0;
    };
    EXPECT_GT(variance({40, 0.03}), variance({20, 0.03}));
}

TEST(StepWear, ParameterOrderingDeterministic)
{
    const auto det = synth::SynthConfig::deterministic();
    auto first_increment = [&](int set) {
        std::mt19937_64 rng(0);
        const auto s0 = synth::initial_wear_state(det, rng);
        return vb_max(synth::step_wear(s0, parameter_set(set), det, 50.0, rng)) - vb_max(s0);
    };
    EXPECT_GT(first_increment(2), first_increment(1));
    EXPECT_GT(first_increment(1), first_increment(5));
}

TEST(StepWear, MonotoneProfiles)
{
    const auto cfg = synth::SynthConfig{};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        auto s = synth::initial_wear_state(cfg, rng);
        for (int k = 0; k < 20; ++k) {
            const auto next = synth::step_wear(s, parameter_set(1 + k % 8), cfg, 50.0, rng);
            for (std::size_t e = 0; e < 4; ++e)
                for (std::size_t i = 0; i < s.profiles[e].size(); ++i) ASSERT_GE(next.profiles[e][i], s.profiles[e][i]);
            s = next;
        }
    }
}

TEST(StepWear, RejectsNonPositiveTravel)
{
    const auto cfg = synth::SynthConfig{};
    std::mt19937_64 rng(0);
    const auto s = synth::initial_wear_state(cfg, rng);
    EXPECT_THROW((void)synth::step_wear(s, parameter_set(1), cfg, 0.0, rng), ParameterError);
}

TEST(WearShape, PeakedNearTip)
{
    double peak = 0.0, where = 0.0;
    for (double d = 0; d <= synth::kProfileSpanUm; d += 10) {
        const double v = synth::wear_shape(d);
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-12);
        if (v > peak) {
            peak = v;
            where = d;
        }
    }
    EXPECT_LT(where, 450.0);
}

TEST(Signals, ChannelsRatesAndDuration)
{
    const auto plan = synth::CampaignPlan::standard();
    const auto cfg = synth::SynthConfig{};
    std::mt19937_64 rng(3);
    const auto s = synth::initial_wear_state(cfg, rng);
    const auto raw = synth::synthesize_cut_signals(parameter_set(1), s, synth::SignalProfile::ci(), cfg, plan, rng, "x");
    EXPECT_EQ(raw.channels.size(), 11u);
    for (const auto& [id, v] : raw.channels) {
        EXPECT_FALSE(signal::is_derived(id));
        EXPECT_EQ(v.size(), signal::is_external(id) ? raw.feed_position_mm.size() * 10 : raw.feed_position_mm.size());
    }
    EXPECT_NEAR(raw.duration_s(), 15.7, 0.05);
    // Last internal sample lies within one sampling step of the end of the cut.
    const double step_mm = synth::kinematics(parameter_set(1), plan).feed_rate_mm_min / 60.0 / 100.0;
    EXPECT_LE(raw.feed_position_mm.back(), 50.0);
    EXPECT_GT(raw.feed_position_mm.back(), 50.0 - step_mm);
}

TEST(Signals, TooShortCutIsConfigError)
{
    const auto plan = synth::CampaignPlan::standard();
    const auto cfg = synth::SynthConfig{};
    std::mt19937_64 rng(3);
    const auto s = synth::initial_wear_state(cfg, rng);
    EXPECT_THROW((void)synth::synthesize_cut_signals({300, 0.3}, s, synth::SignalProfile::ci(), cfg, plan, rng),
                 ConfigError);
}

TEST(Signals, ResultantForceConstantUpToRippleAndScalesWithWear)
{
    const auto plan = synth::CampaignPlan::standard();
    auto cfg = synth::SynthConfig::deterministic();
    cfg.tooth_ripple = 0.0;
    std::mt19937_64 rng(0);
    auto s = synth::initial_wear_state(cfg, rng);
    auto mean_force = [&](const synth::WearState& st) {
        const auto raw = synth::synthesize_cut_signals(parameter_set(1), st, synth::SignalProfile::ci(), cfg, plan, rng);
        const auto w = signal::assemble_window(signal::extract_window(raw, {2.0, 6.0}));
        double lo = INFINITY, hi = -INFINITY, sum = 0.0;
        for (double v : w.data.row(3)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        EXPECT_NEAR(lo, hi, 1e-9 * hi);
        return sum / static_cast<double>(w.length());
    };
    const double fresh = mean_force(s);
    for (int k = 0; k < 25; ++k) s = synth::step_wear(s, parameter_set(2), cfg, 50.0, rng);
    const double vb1 = s.targets().vb_mean();
    const double worn = mean_force(s);
    EXPECT_NEAR(worn / fresh, 1.0 + cfg.wear_force_gain * vb1 / 100.0, 1e-9);
}

TEST(Signals, WearCouplingCorrelation)
{
    const auto plan = synth::CampaignPlan::standard();
    const auto cfg = synth::SynthConfig::deterministic();
    std::mt19937_64 rng(0);
    auto s = synth::initial_wear_state(cfg, rng);
    std::vector<double> vb, force;
    for (int k = 0; k < 20; ++k) {
        const auto raw = synth::synthesize_cut_signals(parameter_set(6), s, synth::SignalProfile::ci(), cfg, plan, rng);
        const auto w = signal::assemble_window(signal::extract_window(raw, {2.0, 6.0}));
        double m = 0.0;
        for (double v : w.data.row(3)) m += std::abs(v);
        force.push_back(m / static_cast<double>(w.length()));
        vb.push_back(s.targets().vb_mean());
        s = synth::step_wear(s, parameter_set(6), cfg, 50.0, rng);
    }
    const double mv = std::accumulate(vb.begin(), vb.end(), 0.0) / 20.0;
    const double mf = std::accumulate(force.begin(), force.end(), 0.0) / 20.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int i = 0; i < 20; ++i) {
        sxy += (vb[i] - mv) * (force[i] - mf);
        sxx += (vb[i] - mv) * (vb[i] - mv);
        syy += (force[i] - mf) * (force[i] - mf);
    }
    EXPECT_GT(sxy / std::sqrt(sxx * syy), 0.8);
}

TEST(Campaign, SmallCampaignOnDisk)
{
    const auto dir = temp_dir("small");
    const auto manifest = synth::generate_campaign(short_plan(3), synth::SynthConfig{}, synth::SignalProfile::ci(), dir);
    EXPECT_TRUE(fs::exists(manifest));
    const auto c = data::load_campaign(dir);
    ASSERT_EQ(c.tools.size(), 20u);
    const auto& t17 = c.tool(17);
    ASSERT_EQ(t17.cuts.size(), 11u);
    std::vector<int> seq;
    for (const auto& cut : t17.cuts) seq.push_back(cut.parameter_set);
    EXPECT_EQ(seq, (std::vector<int>{6, 3, 5, 8, 1, 7, 6, 3, 8, 7, 2}));
    for (const auto& tool : c.tools)
        for (std::size_t k = 0; k < tool.cuts.size(); ++k) {
            EXPECT_EQ(tool.cuts[k].cut_index, static_cast<int>(k + 1));
            EXPECT_DOUBLE_EQ(tool.cuts[k].feed_travel_mm, 50.0 * static_cast<double>(k + 1));
            EXPECT_EQ(tool.cuts[k].params, parameter_set(tool.cuts[k].parameter_set));
        }
    EXPECT_LE(c.tool(1).cuts.size(), 3u);

    const auto raw = data::load_cut_signals(c, c.tool(5).cuts[1]);
    EXPECT_EQ(raw.external_rate_hz, 1000.0);
    EXPECT_EQ(data::load_cut_wear(c, c.tool(5).cuts[1]).size(), 4u);
}

TEST(Campaign, SameSeedByteIdentical)
{
    const auto a = temp_dir("det_a");
    const auto b = temp_dir("det_b");
    (void)synth::generate_campaign(short_plan(2), synth::SynthConfig{}, synth::SignalProfile::ci(), a);
    (void)synth::generate_campaign(short_plan(2), synth::SynthConfig{}, synth::SignalProfile::ci(), b);
    EXPECT_EQ(read_all_files(a), read_all_files(b));
}

TEST(Campaign, PerToolSeedsDerivedFromMaster)
{
    const auto dir = temp_dir("seeds");
    auto cfg = synth::SynthConfig{};
    cfg.master_seed = 7;
    (void)synth::generate_campaign(short_plan(1), cfg, synth::SignalProfile::ci(), dir);
    const auto c = data::load_campaign(dir);
    for (const auto& t : c.tools) EXPECT_EQ(t.seed, io::derive_seed(7, static_cast<std::uint64_t>(t.tool_id)));
}

TEST(Campaign, StopRule)
{
    const auto dir = temp_dir("stop");
    auto cfg = synth::SynthConfig{};
    cfg.wear_rate_um = 20.0;
    auto plan = synth::CampaignPlan::standard();
    plan.tools.resize(2);
    (void)synth::generate_campaign(plan, cfg, synth::SignalProfile::ci(), dir);
    const auto c = data::load_campaign(dir);
    for (const auto& t : c.tools) {
        const auto last = data::load_cut_wear(c, t.cuts.back());
        EXPECT_GE(wear::compute_targets(wear::average_edges(last)).vb_max(), 120.0);
        if (t.cuts.size() > 1) {
            const auto prev = data::load_cut_wear(c, t.cuts[t.cuts.size() - 2]);
            EXPECT_LT(wear::compute_targets(wear::average_edges(prev)).vb_max(), 120.0);
        }
    }
}

TEST(Dataset, MissingManifestIsDatasetError)
{
    EXPECT_THROW((void)data::load_campaign(temp_dir("nothing")), DatasetError);
}

TEST(Dataset, RawCutRoundTrip)
{
    const auto dir = temp_dir("rawcut");
    const auto plan = synth::CampaignPlan::standard();
    const auto cfg = synth::SynthConfig{};
    std::mt19937_64 rng(1);
    const auto s = synth::initial_wear_state(cfg, rng);
    const auto raw = synth::synthesize_cut_signals(parameter_set(4), s, synth::SignalProfile::ci(), cfg, plan, rng, "rt");
    data::write_raw_cut(raw, dir / "c.bin", dir / "c.json");
    const auto back = data::read_raw_cut(dir / "c.bin", dir / "c.json");
    EXPECT_EQ(back.channels, raw.channels);
    EXPECT_EQ(back.feed_position_mm, raw.feed_position_mm);
    EXPECT_EQ(back.cut_id, "rt");
}

TEST(Campaign, VariableToolsSteeperAtHighSpeed)
{
    const auto det = synth::SynthConfig::deterministic();
    const auto plan = synth::CampaignPlan::standard();
    for (int tool = 17; tool <= 20; ++tool) {
        const auto& seq = plan.tool(tool).set_sequence;
        const auto ratios = oracle::high_speed_slope_ratios(seq, oracle::vbmax_increments(seq, det, 0));
        ASSERT_FALSE(ratios.empty());
        for (double r : ratios) EXPECT_GT(r, 1.5) << "tool " << tool;
    }
}
