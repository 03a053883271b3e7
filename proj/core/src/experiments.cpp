#include "wearbench/experiments.hpp"

#include "wearbench/errors.hpp"
#include "wearbench/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace wearbench::exp {

using json = nlohmann::json;

std::vector<model::LabeledCut> PreparedDataset::labeled(std::span<const int> tools) const
{
    const std::set<int> wanted(tools.begin(), tools.end());
    std::vector<model::LabeledCut> out;
    for (const auto& c : cuts)
        if (wanted.count(c.tool_id)) out.push_back({&c.window, c.params, c.targets, c.tool_id, c.cut_index});
    return out;
}

std::vector<int> PreparedDataset::tool_ids() const
{
    std::set<int> ids;
    for (const auto& c : cuts) ids.insert(c.tool_id);
    return {ids.begin(), ids.end()};
}

const PreparedCut& PreparedDataset::find(int tool_id, int cut_index) const
{
    for (const auto& c : cuts)
        if (c.tool_id == tool_id && c.cut_index == cut_index) return c;
    throw DatasetError("no prepared cut " + std::to_string(cut_index) + " for tool " + std::to_string(tool_id));
}

PreparedDataset prepare_dataset(const data::Campaign& campaign, signal::ChannelMode mode, std::span<const int> tools)
{
    const std::set<int> wanted(tools.begin(), tools.end());
    const signal::WindowConfig window{campaign.profile.window_s, campaign.plan.tool_diameter_mm};
    PreparedDataset out;
    out.mode = mode;
    for (const auto& tool : campaign.tools) {
        if (!wanted.empty() && !wanted.count(tool.tool_id)) continue;
        for (const auto& rec : tool.cuts) {
            PreparedCut c;
            c.tool_id = rec.tool_id;
            c.cut_index = rec.cut_index;
            c.parameter_set = rec.parameter_set;
            c.feed_travel_mm = rec.feed_travel_mm;
            c.params = rec.params;
            const auto raw = data::load_cut_signals(campaign, rec);
            c.window = signal::assemble_window(signal::extract_window(raw, window), mode);
            c.targets = wear::compute_targets(wear::average_edges(data::load_cut_wear(campaign, rec)));
            out.cuts.push_back(std::move(c));
        }
    }
    for (int id : wanted)
        if (!campaign.has_tool(id)) throw DatasetError("campaign has no tool " + std::to_string(id));
    return out;
}

double rmse(std::span<const double> pred, std::span<const double> truth)
{
    if (pred.empty()) throw ParameterError("rmse: empty input");
    if (pred.size() != truth.size()) throw ParameterError("rmse: length mismatch");
    double ss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(pred.size()));
}

double r_squared(std::span<const double> pred, std::span<const double> truth)
{
    if (pred.size() != truth.size()) throw ParameterError("r_squared: length mismatch");
    if (truth.size() < 2) throw ParameterError("r_squared: need at least two values");
    double mean = 0.0;
    for (double t : truth) mean += t;
    mean /= static_cast<double>(truth.size());
    long double ss_tot = 0.0L;
    long double ss_res = 0.0L;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const long double dt = static_cast<long double>(truth[i]) - mean;
        const long double dr = static_cast<long double>(truth[i]) - pred[i];
        ss_tot += dt * dt;
        ss_res += dr * dr;
    }
    if (ss_tot == 0.0L) throw UndefinedMetricError("r_squared: truth is constant");
    return static_cast<double>(1.0L - ss_res / ss_tot);
}

double improvement_pct(double reference, double test)
{
    if (!(reference > 0.0)) throw ParameterError("improvement_pct: reference must be positive");
    return (reference - test) / reference * 100.0;
}

std::string_view kind_name(ModelKind kind) noexcept
{
    return kind == ModelKind::Test ? "test" : "reference";
}

double FoldResult::max_abs_error_um() const
{
    double m = 0.0;
    for (const auto& c : cuts) m = std::max(m, std::abs(c.estimated_um - c.measured_um));
    return m;
}

double FoldResult::max_abs_error_um(int tool_id) const
{
    double m = 0.0;
    for (const auto& c : cuts)
        if (c.tool_id == tool_id) m = std::max(m, std::abs(c.estimated_um - c.measured_um));
    return m;
}

void ComparisonReport::summarize()
{
    mean_rmse_improvement_pct = 0.0;
    mean_r2_increase_pct = 0.0;
    wins = 0;
    if (folds.empty()) return;
    for (const auto& f : folds) {
        mean_rmse_improvement_pct += improvement_pct(f.reference.rmse_um, f.test.rmse_um);
        mean_r2_increase_pct += (f.test.r2 - f.reference.r2) / std::abs(f.reference.r2) * 100.0;
        if (f.test.rmse_um < f.reference.rmse_um) ++wins;
    }
    mean_rmse_improvement_pct /= static_cast<double>(folds.size());
    mean_r2_increase_pct /= static_cast<double>(folds.size());
}

namespace {

struct FoldPlan {
    std::string id;
    std::vector<int> train_tools;
    std::vector<int> test_tools;
};

struct TrainedModel {
    model::Checkpoint checkpoint;
    std::size_t best_epoch = 0;
};

void log_line(const ExperimentConfig& config, const std::string& line)
{
    if (config.log) config.log(line);
}

TrainedModel train_model(const PreparedDataset& data, const FoldPlan& fold, ModelKind kind,
                         const ExperimentConfig& config)
{
    for (int t : fold.test_tools)
        if (std::find(fold.train_tools.begin(), fold.train_tools.end(), t) != fold.train_tools.end())
            throw Error("fold " + fold.id + ": tool " + std::to_string(t) + " is in both training and test");

    const auto labeled = data.labeled(fold.train_tools);
    const auto split = model::split_train_val(labeled, config.val_fraction);
    model::ModelSpec spec = config.spec;
    if (!data.cuts.empty()) {
        spec.signal_channels = data.cuts.front().window.channels.size();
        spec.length = data.cuts.front().window.length();
    }
    if (kind == ModelKind::Reference) spec = spec.as_reference();
    auto result = model::train(split.train, split.val, spec, config.train);

    std::set<std::string> allowed;
    for (const auto& c : split.train) allowed.insert(c.window->cut_id);
    for (const auto& id : result.checkpoint.channel_stats.fitted_cut_ids)
        if (!allowed.count(id))
            throw Error("fold " + fold.id + ": normalisation statistics include non-training cut " + id);
    return {std::move(result.checkpoint), result.best_epoch};
}

FoldResult evaluate(const PreparedDataset& data, const FoldPlan& fold, ModelKind kind, const TrainedModel& trained)
{
    FoldResult r;
    r.fold_id = fold.id;
    r.kind = kind;
    r.test_tools = fold.test_tools;
    r.train_tools = fold.train_tools;
    r.best_epoch = trained.best_epoch;
    const auto test = data.labeled(fold.test_tools);
    if (test.empty()) throw DatasetError("fold " + fold.id + ": no test cuts");
    const auto preds = model::predict_batch(trained.checkpoint, test);
    std::vector<double> est, truth;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& src = data.find(test[i].tool_id, test[i].cut_index);
        CutEstimate e{src.tool_id, src.cut_index, src.parameter_set, src.feed_travel_mm, src.targets.vb_max(),
                      preds[i].vb_max()};
        r.cuts.push_back(e);
        est.push_back(e.estimated_um);
        truth.push_back(e.measured_um);
    }
    r.rmse_um = rmse(est, truth);
    r.r2 = r_squared(est, truth);
    return r;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is
// rethrown after all workers finish.
template <class Fn>
void run_parallel(std::size_t n, unsigned jobs, Fn fn)
{
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

ComparisonReport run_folds(const std::string& protocol, const PreparedDataset& data,
                           const std::vector<FoldPlan>& folds, bool shared_training, const ExperimentConfig& config)
{
    ComparisonReport report;
    report.protocol = protocol;
    report.folds.resize(folds.size());
    const std::array<ModelKind, 2> kinds{ModelKind::Test, ModelKind::Reference};

    if (shared_training) {
        // One training per model kind, evaluated on every fold.
        std::array<TrainedModel, 2> models;
        run_parallel(2, config.jobs, [&](std::size_t k) {
            log_line(config, protocol + ": training " + std::string(kind_name(kinds[k])) + " model");
            models[k] = train_model(data, folds.front(), kinds[k], config);
        });
        for (std::size_t f = 0; f < folds.size(); ++f) {
            report.folds[f].test = evaluate(data, folds[f], ModelKind::Test, models[0]);
            report.folds[f].reference = evaluate(data, folds[f], ModelKind::Reference, models[1]);
        }
    } else {
        run_parallel(folds.size() * 2, config.jobs, [&](std::size_t task) {
            const auto& fold = folds[task / 2];
            const ModelKind kind = kinds[task % 2];
            log_line(config, protocol + " " + fold.id + ": training " + std::string(kind_name(kind)) + " model");
            const auto trained = train_model(data, fold, kind, config);
            auto res = evaluate(data, fold, kind, trained);
            log_line(config, protocol + " " + fold.id + " " + std::string(kind_name(kind)) +
                                 ": rmse_um=" + io::format_double(res.rmse_um));
            (kind == ModelKind::Test ? report.folds[task / 2].test : report.folds[task / 2].reference) =
                std::move(res);
        });
    }
    report.summarize();
    return report;
}

std::map<int, std::vector<int>> fixed_tools_by_set(const PreparedDataset& data, const data::Campaign& campaign)
{
    std::map<int, std::vector<int>> by_set;
    for (const auto& tool : campaign.tools) {
        if (tool.variable || tool.cuts.empty()) continue;
        bool present = false;
        for (const auto& c : data.cuts) present = present || c.tool_id == tool.tool_id;
        if (present) by_set[tool.cuts.front().parameter_set].push_back(tool.tool_id);
    }
    return by_set;
}

} // namespace

ComparisonReport logo_cv(const PreparedDataset& data, const data::Campaign& campaign, const ExperimentConfig& config)
{
    const auto by_set = fixed_tools_by_set(data, campaign);
    for (int set = 1; set <= static_cast<int>(kParameterSetCount); ++set)
        if (!by_set.count(set)) throw DatasetError("no fixed-parameter tool for parameter set " + std::to_string(set));

    std::vector<FoldPlan> folds;
    for (const auto& [set, tools] : by_set) {
        FoldPlan f;
        f.id = "set" + std::to_string(set);
        f.test_tools = tools;
        for (const auto& [other, other_tools] : by_set)
            if (other != set) f.train_tools.insert(f.train_tools.end(), other_tools.begin(), other_tools.end());
        std::sort(f.train_tools.begin(), f.train_tools.end());
        folds.push_back(std::move(f));
    }
    return run_folds("logo", data, folds, false, config);
}

ComparisonReport variable_transfer(const PreparedDataset& data, const data::Campaign& campaign,
                                   const ExperimentConfig& config)
{
    const auto by_set = fixed_tools_by_set(data, campaign);
    std::vector<int> train_tools;
    std::set<int> trained_sets;
    for (const auto& [set, tools] : by_set) {
        train_tools.insert(train_tools.end(), tools.begin(), tools.end());
        trained_sets.insert(set);
    }
    std::sort(train_tools.begin(), train_tools.end());
    if (train_tools.empty()) throw DatasetError("no fixed-parameter tools to train on");

    std::vector<FoldPlan> folds;
    for (const auto& tool : campaign.tools) {
        if (!tool.variable) continue;
        bool present = false;
        for (const auto& c : data.cuts) present = present || c.tool_id == tool.tool_id;
        if (!present) throw DatasetError("variable tool " + std::to_string(tool.tool_id) + " was not prepared");
        for (const auto& c : tool.cuts)
            if (!trained_sets.count(c.parameter_set))
                throw DatasetError("tool " + std::to_string(tool.tool_id) + " uses parameter set " +
                                   std::to_string(c.parameter_set) + " absent from training");
        folds.push_back({"tool" + std::to_string(tool.tool_id), train_tools, {tool.tool_id}});
    }
    if (folds.empty()) throw DatasetError("campaign has no variable-parameter tools");
    return run_folds("variable", data, folds, true, config);
}

namespace {

std::string join_tools(const std::vector<int>& tools)
{
    std::string s;
    for (std::size_t i = 0; i < tools.size(); ++i) s += (i ? ";" : "") + std::to_string(tools[i]);
    return s;
}

std::string fixed(double v, int digits)
{
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

} // namespace

void render_report(const ComparisonReport& report, const std::filesystem::path& out_dir)
{
    if (report.folds.empty()) throw ParameterError("render_report: report has no folds");

    std::string folds = "fold,model,test_tools,rmse_um,r2,max_abs_error_um,n_cuts,best_epoch\n";
    std::map<int, std::pair<const FoldResult*, const FoldResult*>> per_tool;
    for (const auto& f : report.folds) {
        if (f.test.cuts.size() != f.reference.cuts.size())
            throw ParameterError("render_report: fold " + f.test.fold_id + " has mismatched cut lists");
        for (const auto* r : {&f.test, &f.reference})
            folds += r->fold_id + "," + std::string(kind_name(r->kind)) + "," + join_tools(r->test_tools) + "," +
                     io::format_double(r->rmse_um) + "," + io::format_double(r->r2) + "," +
                     io::format_double(r->max_abs_error_um()) + "," + std::to_string(r->cuts.size()) + "," +
                     std::to_string(r->best_epoch) + "\n";
        for (int t : f.test.test_tools) per_tool[t] = {&f.test, &f.reference};
    }

    std::ostringstream summary;
    summary << "protocol: " << report.protocol << "\n"
            << "folds: " << report.folds.size() << "\n"
            << "test model wins (lower rmse): " << report.wins << " of " << report.folds.size() << "\n"
            << "mean rmse improvement %: " << fixed(report.mean_rmse_improvement_pct, 2) << "\n"
            << "mean r2 increase %: " << fixed(report.mean_r2_increase_pct, 2) << "\n\n"
            << "fold       test_rmse  ref_rmse  test_r2   ref_r2    test_maxerr ref_maxerr\n";
    double test_mean = 0.0, ref_mean = 0.0;
    for (const auto& f : report.folds) {
        std::string id = f.test.fold_id;
        id.resize(std::max<std::size_t>(id.size(), 10), ' ');
        summary << id << " " << fixed(f.test.rmse_um, 3) << "  " << fixed(f.reference.rmse_um, 3) << "  "
                << fixed(f.test.r2, 4) << "  " << fixed(f.reference.r2, 4) << "  "
                << fixed(f.test.max_abs_error_um(), 3) << "  " << fixed(f.reference.max_abs_error_um(), 3) << "\n";
        test_mean += f.test.rmse_um;
        ref_mean += f.reference.rmse_um;
    }
    const auto n = static_cast<double>(report.folds.size());
    summary << "\nmean rmse um: test " << fixed(test_mean / n, 3) << ", reference " << fixed(ref_mean / n, 3) << "\n";

    io::write_text(out_dir / "folds.csv", folds);
    io::write_text(out_dir / "summary.txt", summary.str());

    for (const auto& [tool, pair] : per_tool) {
        const auto& [test, ref] = pair;
        std::string csv = "tool,cut,feed_travel_mm,parameter_set,measured_vbmax_um,test_estimate_um,"
                          "reference_estimate_um\n";
        for (std::size_t i = 0; i < test->cuts.size(); ++i) {
            const auto& a = test->cuts[i];
            const auto& b = ref->cuts[i];
            if (a.tool_id != tool) continue;
            if (b.tool_id != a.tool_id || b.cut_index != a.cut_index)
                throw ParameterError("render_report: cut lists of fold " + test->fold_id + " are not aligned");
            csv += std::to_string(a.tool_id) + "," + std::to_string(a.cut_index) + "," +
                   io::format_double(a.feed_travel_mm) + "," + std::to_string(a.parameter_set) + "," +
                   io::format_double(a.measured_um) + "," + io::format_double(a.estimated_um) + "," +
                   io::format_double(b.estimated_um) + "\n";
        }
        char name[32];
        std::snprintf(name, sizeof name, "tool_%02d_curve.csv", tool);
        io::write_text(out_dir / name, csv);
    }
}

namespace {

json fold_to_json(const FoldResult& r)
{
    json cuts = json::array();
    for (const auto& c : r.cuts)
        cuts.push_back({c.tool_id, c.cut_index, c.parameter_set, c.feed_travel_mm, c.measured_um, c.estimated_um});
    return {{"fold", r.fold_id},       {"model", std::string(kind_name(r.kind))},
            {"test_tools", r.test_tools}, {"train_tools", r.train_tools}, {"rmse_um", r.rmse_um},
            {"r2", r.r2},              {"best_epoch", r.best_epoch},
            {"cuts", cuts}};
}

FoldResult fold_from_json(const json& j)
{
    FoldResult r;
    r.fold_id = j.at("fold").get<std::string>();
    const auto kind = j.at("model").get<std::string>();
    if (kind != "test" && kind != "reference") throw LoadError("unknown model kind '" + kind + "'");
    r.kind = kind == "test" ? ModelKind::Test : ModelKind::Reference;
    r.test_tools = j.at("test_tools").get<std::vector<int>>();
    r.train_tools = j.at("train_tools").get<std::vector<int>>();
    r.rmse_um = j.at("rmse_um").get<double>();
    r.r2 = j.at("r2").get<double>();
    r.best_epoch = j.at("best_epoch").get<std::size_t>();
    for (const auto& c : j.at("cuts"))
        r.cuts.push_back({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>(), c.at(3).get<double>(),
                          c.at(4).get<double>(), c.at(5).get<double>()});
    return r;
}

} // namespace

void save_report(const ComparisonReport& report, const std::filesystem::path& path)
{
    json folds = json::array();
    for (const auto& f : report.folds) folds.push_back({fold_to_json(f.test), fold_to_json(f.reference)});
    const json j = {{"protocol", report.protocol}, {"folds", folds}};
    io::write_text(path, j.dump(1) + "\n");
}

ComparisonReport load_report(const std::filesystem::path& path)
{
    ComparisonReport report;
    try {
        const auto j = json::parse(io::read_text(path));
        report.protocol = j.at("protocol").get<std::string>();
        for (const auto& f : j.at("folds")) report.folds.push_back({fold_from_json(f.at(0)), fold_from_json(f.at(1))});
    } catch (const json::exception& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
    report.summarize();
    return report;
}

} // namespace wearbench::exp
