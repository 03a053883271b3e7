#include "wearbench/dataset.hpp"

#include "wearbench/errors.hpp"
#include "wearbench/io.hpp"

#include <json.hpp>

#include <cstdio>

namespace wearbench::data {

using json = nlohmann::json;

namespace {

constexpr const char* kFormat = "wearbench-campaign";
constexpr int kVersion = 1;

json config_to_json(const synth::SynthConfig& c)
{
    return {
        {"wear_rate_um", c.wear_rate_um},
        {"speed_exponent", c.speed_exponent},
        {"feed_exponent", c.feed_exponent},
        {"self_accel_ref_um", c.self_accel_ref_um},
        {"eta_sigma", c.eta_sigma},
        {"high_speed_onset_m_min", c.high_speed_onset_m_min},
        {"high_speed_rate_gain", c.high_speed_rate_gain},
        {"high_speed_noise_gain", c.high_speed_noise_gain},
        {"edge_variability", c.edge_variability},
        {"wear_force_gain", c.wear_force_gain},
        {"force_feed_exponent", c.force_feed_exponent},
        {"force_speed_exponent", c.force_speed_exponent},
        {"tooth_ripple", c.tooth_ripple},
        {"noise_floor", c.noise_floor},
        {"noise_speed_gain", c.noise_speed_gain},
        {"master_seed", c.master_seed},
    };
}

synth::SynthConfig config_from_json(const json& j)
{
    synth::SynthConfig c;
    c.wear_rate_um = j.at("wear_rate_um").get<double>();
    c.speed_exponent = j.at("speed_exponent").get<double>();
    c.feed_exponent = j.at("feed_exponent").get<double>();
    c.self_accel_ref_um = j.at("self_accel_ref_um").get<double>();
    c.eta_sigma = j.at("eta_sigma").get<double>();
    c.high_speed_onset_m_min = j.at("high_speed_onset_m_min").get<double>();
    c.high_speed_rate_gain = j.at("high_speed_rate_gain").get<double>();
    c.high_speed_noise_gain = j.at("high_speed_noise_gain").get<double>();
    c.edge_variability = j.at("edge_variability").get<double>();
    c.wear_force_gain = j.at("wear_force_gain").get<double>();
    c.force_feed_exponent = j.at("force_feed_exponent").get<double>();
    c.force_speed_exponent = j.at("force_speed_exponent").get<double>();
    c.tooth_ripple = j.at("tooth_ripple").get<double>();
    c.noise_floor = j.at("noise_floor").get<double>();
    c.noise_speed_gain = j.at("noise_speed_gain").get<double>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    return c;
}

json plan_to_json(const synth::CampaignPlan& p)
{
    json tools = json::array();
    for (const auto& t : p.tools)
        tools.push_back({{"tool", t.tool_id}, {"variable", t.variable}, {"sets", t.set_sequence}});
    return {
        {"feed_travel_mm", p.feed_travel_mm},   {"depth_of_cut_mm", p.depth_of_cut_mm},
        {"width_of_cut_mm", p.width_of_cut_mm}, {"tool_diameter_mm", p.tool_diameter_mm},
        {"cutting_edges", p.cutting_edges},     {"stop_vbmax_um", p.stop_vbmax_um},
        {"max_cuts", p.max_cuts},               {"tools", tools},
    };
}

synth::CampaignPlan plan_from_json(const json& j)
{
    synth::CampaignPlan p;
    p.feed_travel_mm = j.at("feed_travel_mm").get<double>();
    p.depth_of_cut_mm = j.at("depth_of_cut_mm").get<double>();
    p.width_of_cut_mm = j.at("width_of_cut_mm").get<double>();
    p.tool_diameter_mm = j.at("tool_diameter_mm").get<double>();
    p.cutting_edges = j.at("cutting_edges").get<int>();
    p.stop_vbmax_um = j.at("stop_vbmax_um").get<double>();
    p.max_cuts = j.at("max_cuts").get<int>();
    for (const auto& t : j.at("tools"))
        p.tools.push_back({t.at("tool").get<int>(), t.at("variable").get<bool>(), t.at("sets").get<std::vector<int>>()});
    return p;
}

} // namespace

std::string CutRecord::cut_id() const
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "T%02d-C%03d", tool_id, cut_index);
    return buf;
}

const ToolRecord& Campaign::tool(int tool_id) const
{
    for (const auto& t : tools)
        if (t.tool_id == tool_id) return t;
    throw DatasetError("campaign has no tool " + std::to_string(tool_id));
}

bool Campaign::has_tool(int tool_id) const noexcept
{
    for (const auto& t : tools)
        if (t.tool_id == tool_id) return true;
    return false;
}

std::size_t Campaign::cut_count() const noexcept
{
    std::size_t n = 0;
    for (const auto& t : tools) n += t.cuts.size();
    return n;
}

void write_raw_cut(const signal::RawCut& cut, const std::filesystem::path& bin, const std::filesystem::path& sidecar)
{
    std::string payload;
    json channels = json::array();
    std::size_t offset = 0;
    auto add = [&](const std::string& name, double rate, const std::vector<double>& values) {
        io::append_f64_le(payload, values);
        channels.push_back({{"name", name}, {"rate_hz", rate}, {"offset", offset}, {"length", values.size()}});
        offset += values.size();
    };
    for (const auto& [id, values] : cut.channels) {
        if (signal::is_derived(id))
            throw DatasetError("cut '" + cut.cut_id + "': resultant channels are not stored");
        add(std::string(signal::channel_name(id)), signal::is_external(id) ? cut.external_rate_hz : cut.internal_rate_hz,
            values);
    }
    add("feed_position_mm", cut.internal_rate_hz, cut.feed_position_mm);

    json meta = {
        {"format", "f64le"},
        {"cut_id", cut.cut_id},
        {"external_rate_hz", cut.external_rate_hz},
        {"internal_rate_hz", cut.internal_rate_hz},
        {"channels", channels},
    };
    io::write_text(bin, payload);
    io::write_text(sidecar, meta.dump(2) + "\n");
}

signal::RawCut read_raw_cut(const std::filesystem::path& bin, const std::filesystem::path& sidecar)
{
    signal::RawCut cut;
    try {
        const auto meta = json::parse(io::read_text(sidecar));
        const auto values = io::read_f64_le(bin);
        cut.cut_id = meta.at("cut_id").get<std::string>();
        cut.external_rate_hz = meta.at("external_rate_hz").get<double>();
        cut.internal_rate_hz = meta.at("internal_rate_hz").get<double>();
        for (const auto& ch : meta.at("channels")) {
            const auto name = ch.at("name").get<std::string>();
            const auto off = ch.at("offset").get<std::size_t>();
            const auto len = ch.at("length").get<std::size_t>();
            if (off + len > values.size())
                throw DatasetError(bin.string() + ": channel '" + name + "' exceeds the signal block");
            std::vector<double> v(values.begin() + static_cast<std::ptrdiff_t>(off),
                                  values.begin() + static_cast<std::ptrdiff_t>(off + len));
            if (name == "feed_position_mm") {
                cut.feed_position_mm = std::move(v);
                continue;
            }
            const auto id = signal::parse_channel(name);
            if (!id) throw DatasetError(sidecar.string() + ": unknown channel '" + name + "'");
            cut.channels[*id] = std::move(v);
        }
    } catch (const json::exception& e) {
        throw DatasetError(sidecar.string() + ": " + e.what());
    } catch (const LoadError& e) {
        throw DatasetError(e.what());
    } catch (const IoError& e) {
        throw DatasetError(e.what());
    }
    return cut;
}

void write_manifest(const Campaign& campaign)
{
    json tools = json::array();
    for (const auto& t : campaign.tools) {
        json cuts = json::array();
        for (const auto& c : t.cuts) {
            cuts.push_back({
                {"cut", c.cut_index},
                {"feed_travel_mm", c.feed_travel_mm},
                {"set", c.parameter_set},
                {"vc_m_min", c.params.cutting_speed_m_min},
                {"fz_mm", c.params.feed_per_tooth_mm},
                {"signal", c.signal_file},
                {"sidecar", c.sidecar_file},
                {"wear", c.wear_file},
            });
        }
        tools.push_back({{"tool", t.tool_id}, {"variable", t.variable}, {"seed", t.seed}, {"cuts", cuts}});
    }
    const json manifest = {
        {"format", kFormat},
        {"version", kVersion},
        {"seed", campaign.config.master_seed},
        {"profile",
         {{"name", campaign.profile.name},
          {"external_rate_hz", campaign.profile.external_rate_hz},
          {"internal_rate_hz", campaign.profile.internal_rate_hz},
          {"window_s", campaign.profile.window_s}}},
        {"plan", plan_to_json(campaign.plan)},
        {"config", config_to_json(campaign.config)},
        {"tools", tools},
    };
    io::write_text(campaign.root / kManifestName, manifest.dump(2) + "\n");
}

Campaign load_campaign(const std::filesystem::path& root)
{
    const auto path = root / kManifestName;
    if (!std::filesystem::exists(path)) throw DatasetError("no campaign manifest at " + path.string());
    Campaign c;
    c.root = root;
    try {
        const auto j = json::parse(io::read_text(path));
        if (j.at("format").get<std::string>() != kFormat)
            throw DatasetError(path.string() + ": not a campaign manifest");
        if (j.at("version").get<int>() != kVersion)
            throw DatasetError(path.string() + ": unsupported manifest version");
        const auto& prof = j.at("profile");
        c.profile = {prof.at("name").get<std::string>(), prof.at("external_rate_hz").get<double>(),
                     prof.at("internal_rate_hz").get<double>(), prof.at("window_s").get<double>()};
        c.plan = plan_from_json(j.at("plan"));
        c.config = config_from_json(j.at("config"));
        for (const auto& t : j.at("tools")) {
            ToolRecord tool;
            tool.tool_id = t.at("tool").get<int>();
            tool.variable = t.at("variable").get<bool>();
            tool.seed = t.at("seed").get<std::uint64_t>();
            for (const auto& cj : t.at("cuts")) {
                CutRecord r;
                r.tool_id = tool.tool_id;
                r.cut_index = cj.at("cut").get<int>();
                r.feed_travel_mm = cj.at("feed_travel_mm").get<double>();
                r.parameter_set = cj.at("set").get<int>();
                r.params = {cj.at("vc_m_min").get<double>(), cj.at("fz_mm").get<double>()};
                r.signal_file = cj.at("signal").get<std::string>();
                r.sidecar_file = cj.at("sidecar").get<std::string>();
                r.wear_file = cj.at("wear").get<std::string>();
                tool.cuts.push_back(std::move(r));
            }
            c.tools.push_back(std::move(tool));
        }
    } catch (const json::exception& e) {
        throw DatasetError(path.string() + ": " + e.what());
    } catch (const IoError& e) {
        throw DatasetError(e.what());
    }
    return c;
}

signal::RawCut load_cut_signals(const Campaign& campaign, const CutRecord& cut)
{
    return read_raw_cut(campaign.root / cut.signal_file, campaign.root / cut.sidecar_file);
}

std::vector<wear::WearCurve> load_cut_wear(const Campaign& campaign, const CutRecord& cut)
{
    try {
        return wear::read_edge_curves(campaign.root / cut.wear_file);
    } catch (const LoadError& e) {
        throw DatasetError(e.what());
    } catch (const IoError& e) {
        throw DatasetError(e.what());
    }
}

} // namespace wearbench::data
