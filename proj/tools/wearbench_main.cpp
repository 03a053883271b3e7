#include "wearbench/checkpoint.hpp"
#include "wearbench/dataset.hpp"
#include "wearbench/errors.hpp"
#include "wearbench/experiments.hpp"
#include "wearbench/io.hpp"
#include "wearbench/synth.hpp"
#include "wearbench/training.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace wearbench;

namespace {

struct RunConfig {
    std::string dataset;
    std::string out = ".";
    std::string checkpoint;
    std::string report;
    std::string profile = "ci";
    std::string channels = "all";
    std::string conditioned = "true";
    std::uint64_t seed = 42;
    int filters_exp = 3;
    std::size_t units = 4;
    std::size_t kernel = 3;
    double dropout = 0.2;
    double lr = 1e-3;
    std::size_t epochs = 300;
    std::size_t batch = 16;
    std::size_t patience = 20;
    double val_fraction = 0.15;
    unsigned jobs = 1;
    bool force = false;
    std::vector<int> tools;
    int tool = 0;
    int cut = 0;
    std::optional<double> vc;
    std::optional<double> fz;
    std::vector<std::size_t> grid_units{2, 3, 4, 5};
    std::vector<int> grid_exps{3, 4, 5};
};

void log(const std::string& line)
{
    std::cerr << "[wearbench] " << line << std::endl;
}

model::ModelSpec spec_from(const RunConfig& rc)
{
    if (rc.filters_exp < 0 || rc.filters_exp > 8) throw ConfigError("--n-filters-exp must lie in 0..8");
    model::ModelSpec spec;
    spec.units = rc.units;
    spec.base_filters = std::size_t{1} << rc.filters_exp;
    spec.kernel = rc.kernel;
    spec.dropout = rc.dropout;
    spec.conditioned = rc.conditioned == "true";
    spec.signal_channels = signal::channels_for(signal::parse_mode(rc.channels)).size();
    spec.length = synth::SignalProfile::by_name(rc.profile).window_length();
    return spec;
}

model::TrainConfig train_config_from(const RunConfig& rc)
{
    if (rc.epochs == 0) throw ConfigError("--epochs must be positive");
    if (rc.batch == 0) throw ConfigError("--batch must be positive");
    if (!(rc.lr > 0.0)) throw ConfigError("--lr must be positive");
    model::TrainConfig tc;
    tc.max_epochs = rc.epochs;
    tc.batch_size = rc.batch;
    tc.patience = rc.patience;
    tc.adam.learning_rate = rc.lr;
    tc.seed = rc.seed;
    return tc;
}

// Loads the manifest and pins the window length to the dataset's profile.
data::Campaign open_dataset(const RunConfig& rc, model::ModelSpec& spec)
{
    if (rc.dataset.empty()) throw ConfigError("--dataset is required");
    auto campaign = data::load_campaign(rc.dataset);
    spec.length = campaign.profile.window_length();
    spec.validate();
    return campaign;
}

std::vector<int> fixed_tools(const data::Campaign& campaign)
{
    std::vector<int> ids;
    for (const auto& t : campaign.tools)
        if (!t.variable) ids.push_back(t.tool_id);
    return ids;
}

void announce(const RunConfig& rc, const model::ModelSpec& spec, const std::string& config_text)
{
    log("seed " + std::to_string(rc.seed));
    log("spec " + model::describe(spec));
    log("config hash " + io::hex64(io::fnv1a64(config_text)));
}

int cmd_synth(const RunConfig& rc)
{
    if (rc.out.empty()) throw ConfigError("--out is required");
    const fs::path out = rc.out;
    if (fs::exists(out) && !fs::is_empty(out)) {
        if (!rc.force) throw ConfigError(out.string() + " is not empty (use --force to overwrite)");
        if (!fs::exists(out / data::kManifestName))
            throw ConfigError(out.string() + " holds no campaign; refusing to clear it");
        for (const auto& entry : fs::directory_iterator(out)) {
            const auto name = entry.path().filename().string();
            if (name == data::kManifestName || name.rfind("tool_", 0) == 0) fs::remove_all(entry.path());
        }
    }
    auto config = synth::SynthConfig{};
    config.master_seed = rc.seed;
    const auto profile = synth::SignalProfile::by_name(rc.profile);
    log("seed " + std::to_string(rc.seed));
    log("profile " + profile.name + " window length " + std::to_string(profile.window_length()));
    const auto manifest = synth::generate_campaign(synth::CampaignPlan::standard(), config, profile, out);
    std::cout << manifest.string() << "\n";
    return 0;
}

int cmd_train(const RunConfig& rc, const std::string& config_text)
{
    auto spec = spec_from(rc);
    const auto tc = train_config_from(rc);
    const auto campaign = open_dataset(rc, spec);
    announce(rc, spec, config_text);

    const auto tools = rc.tools.empty() ? fixed_tools(campaign) : rc.tools;
    const auto data = exp::prepare_dataset(campaign, signal::parse_mode(rc.channels), tools);
    const auto labeled = data.labeled(tools);
    const auto split = model::split_train_val(labeled, rc.val_fraction);
    log("training on " + std::to_string(split.train.size()) + " cuts, validating on " +
        std::to_string(split.val.size()));
    const auto result = model::train(split.train, split.val, spec, tc, [](const model::EpochLog& e) {
        log("epoch " + std::to_string(e.epoch) + " loss " + io::format_double(e.train_loss) + " val_rmse_um " +
            io::format_double(e.val_rmse_vbmax_um));
    });
    const fs::path path = rc.checkpoint.empty() ? fs::path(rc.out) / "model.wbc" : fs::path(rc.checkpoint);
    model::save_checkpoint(result.checkpoint, path);
    std::cout << path.string() << "\n"
              << "best_epoch " << result.best_epoch << "\n"
              << "val_rmse_vbmax_um " << io::format_double(result.best_val_rmse_um) << "\n";
    return 0;
}

int cmd_eval(const RunConfig& rc, const std::string& config_text, bool logo)
{
    auto spec = spec_from(rc);
    spec.conditioned = true;
    exp::ExperimentConfig ec;
    ec.train = train_config_from(rc);
    ec.val_fraction = rc.val_fraction;
    ec.jobs = rc.jobs;
    ec.log = log;
    const auto campaign = open_dataset(rc, spec);
    ec.spec = spec;
    announce(rc, spec, config_text);

    const auto data = exp::prepare_dataset(campaign, signal::parse_mode(rc.channels));
    const auto report = logo ? exp::logo_cv(data, campaign, ec) : exp::variable_transfer(data, campaign, ec);
    const fs::path out = rc.out;
    exp::save_report(report, out / "report.json");
    exp::render_report(report, out);
    std::cout << io::read_text(out / "summary.txt");
    return 0;
}

int cmd_gridsearch(const RunConfig& rc, const std::string& config_text)
{
    auto spec = spec_from(rc);
    const auto tc = train_config_from(rc);
    const auto campaign = open_dataset(rc, spec);
    announce(rc, spec, config_text);

    const auto tools = rc.tools.empty() ? fixed_tools(campaign) : rc.tools;
    const auto data = exp::prepare_dataset(campaign, signal::parse_mode(rc.channels), tools);
    const auto split = model::split_train_val(data.labeled(tools), rc.val_fraction);
    const auto result = model::grid_search(rc.grid_units, rc.grid_exps, spec, split.train, split.val, tc);

    std::string csv = "units,n_filters_exp,parameters,val_rmse_um\n";
    for (const auto& c : result.table)
        csv += std::to_string(c.units) + "," + std::to_string(c.filters_exp) + "," + std::to_string(c.parameters) +
               "," + io::format_double(c.val_rmse_um) + "\n";
    const auto& best = result.table[result.best];
    const std::string best_cfg = "units=" + std::to_string(best.units) +
                                 "\nn-filters-exp=" + std::to_string(best.filters_exp) + "\n";
    io::write_text(fs::path(rc.out) / "gridsearch.csv", csv);
    io::write_text(fs::path(rc.out) / "best_spec.cfg", best_cfg);
    std::cout << csv << "best: " << model::describe(result.best_spec) << "\n";
    return 0;
}

signal::ChannelMode mode_of(const signal::ChannelStats& stats)
{
    for (auto mode : {signal::ChannelMode::All, signal::ChannelMode::External, signal::ChannelMode::Internal})
        if (signal::channels_for(mode) == stats.channels) return mode;
    throw LoadError("checkpoint channel layout matches no channel mode");
}

int cmd_predict(const RunConfig& rc)
{
    if (rc.checkpoint.empty()) throw ConfigError("--checkpoint is required");
    if (rc.dataset.empty()) throw ConfigError("--dataset is required");
    if (rc.tool <= 0 || rc.cut <= 0) throw ConfigError("--tool and --cut are required");
    const auto ckpt = model::load_checkpoint(rc.checkpoint);
    const auto campaign = data::load_campaign(rc.dataset);
    const std::array<int, 1> tools{rc.tool};
    const auto data = exp::prepare_dataset(campaign, mode_of(ckpt.channel_stats), tools);
    const auto& cut = data.find(rc.tool, rc.cut);
    CuttingParams params = cut.params;
    if (rc.vc) params.cutting_speed_m_min = *rc.vc;
    if (rc.fz) params.feed_per_tooth_mm = *rc.fz;
    log("seed " + std::to_string(ckpt.seed));
    log("spec " + model::describe(ckpt.spec));

    const auto est = model::predict(ckpt, cut.window, params);
    std::cout << "target,estimate_um,measured_um\n";
    for (std::size_t i = 0; i < wear::kTargetCount; ++i)
        std::cout << wear::target_name(i) << "," << io::format_double(est.values[i])
                  << "," << io::format_double(cut.targets.values[i]) << "\n";
    return 0;
}

int cmd_report(const RunConfig& rc)
{
    if (rc.report.empty()) throw ConfigError("--report is required");
    const auto report = exp::load_report(rc.report);
    exp::render_report(report, rc.out);
    std::cout << io::read_text(fs::path(rc.out) / "summary.txt");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Parameter-conditioned CNN tool-wear benchmark"};
    app.set_config("--config", "", "key=value configuration file (flags override it)");
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig rc;
    app.add_option("--dataset", rc.dataset, "Campaign directory");
    app.add_option("--out", rc.out, "Output directory")->capture_default_str();
    app.add_option("--checkpoint", rc.checkpoint, "Checkpoint file (train output, predict input)");
    app.add_option("--report", rc.report, "report.json to re-render");
    app.add_option("--profile", rc.profile, "Signal profile")
        ->check(CLI::IsMember({"full", "ci"}))
        ->capture_default_str();
    app.add_option("--channels", rc.channels, "Channel mode")
        ->check(CLI::IsMember({"external", "internal", "all"}))
        ->capture_default_str();
    app.add_option("--conditioned", rc.conditioned, "Inject cutting parameters")
        ->check(CLI::IsMember({"true", "false"}))
        ->capture_default_str();
    app.add_option("--seed", rc.seed, "Master seed")->envname("WEARBENCH_SEED")->capture_default_str();
    app.add_option("--n-filters-exp", rc.filters_exp, "First-unit filters = 2^N")->capture_default_str();
    app.add_option("--units", rc.units, "Convolutional units")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--kernel", rc.kernel, "Kernel size")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--dropout", rc.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.99))->capture_default_str();
    app.add_option("--lr", rc.lr, "Adam learning rate")->capture_default_str();
    app.add_option("--epochs", rc.epochs, "Maximum epochs")->capture_default_str();
    app.add_option("--batch", rc.batch, "Mini-batch size")->capture_default_str();
    app.add_option("--patience", rc.patience, "Early-stopping patience")->capture_default_str();
    app.add_option("--val-fraction", rc.val_fraction, "Validation share of each tool's last cuts")
        ->check(CLI::Range(0.0, 0.9))
        ->capture_default_str();
    app.add_option("--jobs", rc.jobs, "Parallel trainings")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_flag("--force", rc.force, "Overwrite an existing campaign");
    app.add_option("--tools", rc.tools, "Tool ids (train, gridsearch)");
    app.add_option("--tool", rc.tool, "Tool id (predict)");
    app.add_option("--cut", rc.cut, "Cut index (predict)");
    app.add_option("--vc", rc.vc, "Override cutting speed m/min (predict)");
    app.add_option("--fz", rc.fz, "Override feed per tooth mm (predict)");
    app.add_option("--grid-units", rc.grid_units, "Unit counts to search")->capture_default_str();
    app.add_option("--grid-exps", rc.grid_exps, "Filter exponents to search")->capture_default_str();

    auto* synth = app.add_subcommand("synth", "Generate the synthetic campaign");
    auto* train = app.add_subcommand("train", "Train one model");
    auto* logo = app.add_subcommand("eval-logo", "Leave-one-parameter-set-out comparison");
    auto* variable = app.add_subcommand("eval-variable", "Fixed to variable parameter transfer");
    auto* grid = app.add_subcommand("gridsearch", "Search units x filters");
    auto* predict = app.add_subcommand("predict", "Estimate the wear targets of one cut");
    auto* report = app.add_subcommand("report", "Re-render a saved report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const std::string config_text = app.config_to_str(true, false);
    try {
        if (*synth) return cmd_synth(rc);
        if (*train) return cmd_train(rc, config_text);
        if (*logo) return cmd_eval(rc, config_text, true);
        if (*variable) return cmd_eval(rc, config_text, false);
        if (*grid) return cmd_gridsearch(rc, config_text);
        if (*predict) return cmd_predict(rc);
        if (*report) return cmd_report(rc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
