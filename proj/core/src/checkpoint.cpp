#include "wearbench/checkpoint.hpp"

#include "wearbench/errors.hpp"
#include "wearbench/io.hpp"

#include <json.hpp>

#include <cstring>

namespace wearbench::model {

using json = nlohmann::json;

namespace {

constexpr char kMagic[8] = {'W', 'B', 'C', 'K', 'P', 'T', '0', '1'};

json spec_to_json(const ModelSpec& s)
{
    return {{"K", s.signal_channels},   {"H", s.param_count},       {"L", s.length},
            {"units", s.units},         {"convs_per_unit", s.convs_per_unit},
            {"base_filters", s.base_filters}, {"filter_cap", s.filter_cap}, {"kernel", s.kernel},
            {"pool", s.pool},           {"dropout", s.dropout},     {"output_dim", s.output_dim},
            {"conditioned", s.conditioned}};
}

ModelSpec spec_from_json(const json& j)
{
    ModelSpec s;
    s.signal_channels = j.at("K").get<std::size_t>();
    s.param_count = j.at("H").get<std::size_t>();
    s.length = j.at("L").get<std::size_t>();
    s.units = j.at("units").get<std::size_t>();
    s.convs_per_unit = j.at("convs_per_unit").get<std::size_t>();
    s.base_filters = j.at("base_filters").get<std::size_t>();
    s.filter_cap = j.at("filter_cap").get<std::size_t>();
    s.kernel = j.at("kernel").get<std::size_t>();
    s.pool = j.at("pool").get<std::size_t>();
    s.dropout = j.at("dropout").get<double>();
    s.output_dim = j.at("output_dim").get<std::size_t>();
    s.conditioned = j.at("conditioned").get<bool>();
    return s;
}

json stats_to_json(const signal::ChannelStats& s)
{
    json names = json::array();
    for (auto id : s.channels) names.push_back(std::string(signal::channel_name(id)));
    return {{"channels", names},
            {"mean", s.mean},
            {"stddev", s.stddev},
            {"constant", s.constant},
            {"fitted_cut_ids", s.fitted_cut_ids}};
}

signal::ChannelStats stats_from_json(const json& j)
{
    signal::ChannelStats s;
    for (const auto& n : j.at("channels")) {
        const auto id = signal::parse_channel(n.get<std::string>());
        if (!id) throw LoadError("unknown channel '" + n.get<std::string>() + "' in checkpoint");
        s.channels.push_back(*id);
    }
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    s.constant = j.at("constant").get<std::vector<bool>>();
    s.fitted_cut_ids = j.at("fitted_cut_ids").get<std::vector<std::string>>();
    if (s.mean.size() != s.channels.size() || s.stddev.size() != s.channels.size() ||
        s.constant.size() != s.channels.size())
        throw LoadError("checkpoint channel statistics are inconsistent");
    return s;
}

std::uint64_t read_u64_le(const std::string& bytes, std::size_t offset)
{
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i)]);
    return v;
}

void append_u64_le(std::string& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

} // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt)
{
    json header;
    header["format_version"] = ckpt.format_version;
    header["seed"] = ckpt.seed;
    header["spec"] = spec_to_json(ckpt.spec);
    header["param_scaler"] = {{"min", ckpt.param_scaler.min}, {"max", ckpt.param_scaler.max}};
    header["target_scaler"] = {{"max", ckpt.target_scaler.max}};
    header["channel_stats"] = stats_to_json(ckpt.channel_stats);
    json table = json::array();
    std::size_t total = 0;
    for (const auto& t : ckpt.weights) {
        table.push_back({{"name", t.name}, {"shape", t.value.shape()}});
        total += t.value.size();
    }
    header["tensors"] = table;
    header["weight_count"] = total;

    const std::string text = header.dump();
    std::string out(kMagic, sizeof kMagic);
    append_u64_le(out, text.size());
    out += text;
    for (const auto& t : ckpt.weights) io::append_f64_le(out, t.value.data());
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin)
{
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw LoadError(origin + ": not a wearbench checkpoint");
    const std::uint64_t header_len = read_u64_le(bytes, 8);
    if (header_len > bytes.size() - 16) throw LoadError(origin + ": truncated header");

    Checkpoint ckpt;
    try {
        const json header = json::parse(bytes.substr(16, header_len));
        ckpt.format_version = header.at("format_version").get<int>();
        if (ckpt.format_version != Checkpoint::kFormatVersion)
            throw LoadError(origin + ": unsupported checkpoint version " + std::to_string(ckpt.format_version) +
                            " (this build reads version " + std::to_string(Checkpoint::kFormatVersion) + ")");
        ckpt.seed = header.at("seed").get<std::uint64_t>();
        ckpt.spec = spec_from_json(header.at("spec"));
        ckpt.param_scaler.min = header.at("param_scaler").at("min").get<std::vector<double>>();
        ckpt.param_scaler.max = header.at("param_scaler").at("max").get<std::vector<double>>();
        const auto tmax = header.at("target_scaler").at("max").get<std::vector<double>>();
        if (tmax.size() != wear::kTargetCount) throw LoadError(origin + ": target scaler has wrong length");
        std::copy(tmax.begin(), tmax.end(), ckpt.target_scaler.max.begin());
        ckpt.channel_stats = stats_from_json(header.at("channel_stats"));

        std::size_t offset = 16 + header_len;
        std::size_t expected = 0;
        for (const auto& entry : header.at("tensors"))
            expected += shape_volume(entry.at("shape").get<std::vector<std::size_t>>());
        if (bytes.size() != offset + expected * 8)
            throw LoadError(origin + ": weight block holds " + std::to_string(bytes.size() - offset) +
                            " bytes, tensor table requires " + std::to_string(expected * 8));
        for (const auto& entry : header.at("tensors")) {
            auto shape = entry.at("shape").get<std::vector<std::size_t>>();
            Tensor t(shape);
            io::decode_f64_le(std::string_view(bytes).substr(offset, t.size() * 8), t.data());
            offset += t.size() * 8;
            ckpt.weights.push_back({entry.at("name").get<std::string>(), std::move(t)});
        }
    } catch (const json::exception& e) {
        throw LoadError(origin + ": malformed header: " + e.what());
    } catch (const ShapeError& e) {
        throw LoadError(origin + ": " + e.what());
    }
    try {
        ckpt.spec.validate();
        (void)ckpt.network();
    } catch (const SpecError& e) {
        throw LoadError(origin + ": " + e.what());
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path)
{
    io::write_text(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    return deserialize_checkpoint(io::read_text(path), path.string());
}

} // namespace wearbench::model
