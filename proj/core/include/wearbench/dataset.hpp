#pragma once

#include "wearbench/cutting.hpp"
#include "wearbench/signal.hpp"
#include "wearbench/synth.hpp"
#include "wearbench/wear.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

// On-disk campaign layout:
//   campaign.json                 manifest (plan, config, profile, seeds, cut index)
//   tool_NN/cut_MMM.bin           stored channels, little-endian doubles
//   tool_NN/cut_MMM.json          sidecar: per-channel rate, offset, length
//   tool_NN/cut_MMM_wear.csv      post-cut edge curves (edge, distance_um, vb_um)
namespace wearbench::data {

inline constexpr const char* kManifestName = "campaign.json";

struct CutRecord {
    int tool_id = 0;
    int cut_index = 0; // 1-based
    double feed_travel_mm = 0.0; // cumulative after this cut
    int parameter_set = 0;
    CuttingParams params;
    std::string signal_file;
    std::string sidecar_file;
    std::string wear_file;

    [[nodiscard]] std::string cut_id() const;
};

struct ToolRecord {
    int tool_id = 0;
    bool variable = false;
    std::uint64_t seed = 0;
    std::vector<CutRecord> cuts;
};

struct Campaign {
    std::filesystem::path root;
    synth::CampaignPlan plan;
    synth::SynthConfig config;
    synth::SignalProfile profile;
    std::vector<ToolRecord> tools;

    [[nodiscard]] const ToolRecord& tool(int tool_id) const;
    [[nodiscard]] bool has_tool(int tool_id) const noexcept;
    [[nodiscard]] std::size_t cut_count() const noexcept;
};

void write_raw_cut(const signal::RawCut& cut, const std::filesystem::path& bin, const std::filesystem::path& sidecar);
[[nodiscard]] signal::RawCut read_raw_cut(const std::filesystem::path& bin, const std::filesystem::path& sidecar);

void write_manifest(const Campaign& campaign);
// Throws DatasetError when the manifest is missing or malformed.
[[nodiscard]] Campaign load_campaign(const std::filesystem::path& root);

[[nodiscard]] signal::RawCut load_cut_signals(const Campaign& campaign, const CutRecord& cut);
[[nodiscard]] std::vector<wear::WearCurve> load_cut_wear(const Campaign& campaign, const CutRecord& cut);

} // namespace wearbench::data
