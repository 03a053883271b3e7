#pragma once

#include "wearbench/dataset.hpp"
#include "wearbench/model.hpp"
#include "wearbench/signal.hpp"
#include "wearbench/training.hpp"
#include "wearbench/wear.hpp"

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace wearbench::exp {

// A cut ready for the network: assembled raw window plus targets derived
// from the edge-averaged wear curve.
struct PreparedCut {
    int tool_id = 0;
    int cut_index = 0;
    int parameter_set = 0;
    double feed_travel_mm = 0.0;
    CuttingParams params;
    wear::WearTargets targets;
    signal::SignalWindow window;
};

struct PreparedDataset {
    signal::ChannelMode mode = signal::ChannelMode::All;
    std::vector<PreparedCut> cuts;

    // Views into `cuts`; valid while the dataset is alive and unmodified.
    [[nodiscard]] std::vector<model::LabeledCut> labeled(std::span<const int> tools) const;
    [[nodiscard]] std::vector<int> tool_ids() const;
    [[nodiscard]] const PreparedCut& find(int tool_id, int cut_index) const;
};

// Loads, windows and labels every cut of `tools` (all tools when empty).
[[nodiscard]] PreparedDataset prepare_dataset(const data::Campaign& campaign, signal::ChannelMode mode,
                                              std::span<const int> tools = {});

[[nodiscard]] double rmse(std::span<const double> pred, std::span<const double> truth);
[[nodiscard]] double r_squared(std::span<const double> pred, std::span<const double> truth);
// (reference - test) / reference * 100.
[[nodiscard]] double improvement_pct(double reference, double test);

enum class ModelKind { Test, Reference };
[[nodiscard]] std::string_view kind_name(ModelKind kind) noexcept;

struct CutEstimate {
    int tool_id = 0;
    int cut_index = 0;
    int parameter_set = 0;
    double feed_travel_mm = 0.0;
    double measured_um = 0.0;
    double estimated_um = 0.0;
};

struct FoldResult {
    std::string fold_id;
    ModelKind kind = ModelKind::Test;
    std::vector<int> test_tools;
    std::vector<int> train_tools;
    double rmse_um = 0.0;
    double r2 = 0.0;
    std::size_t best_epoch = 0;
    std::vector<CutEstimate> cuts;

    [[nodiscard]] double max_abs_error_um() const;
    [[nodiscard]] double max_abs_error_um(int tool_id) const;
};

struct FoldComparison {
    FoldResult test;
    FoldResult reference;
};

struct ComparisonReport {
    std::string protocol;
    std::vector<FoldComparison> folds;
    double mean_rmse_improvement_pct = 0.0;
    double mean_r2_increase_pct = 0.0;
    std::size_t wins = 0;

    // Recomputes the aggregate fields from `folds`.
    void summarize();
};

using LogFn = std::function<void(const std::string&)>;

struct ExperimentConfig {
    model::ModelSpec spec; // conditioned variant; the reference drops the parameter inputs
    model::TrainConfig train;
    double val_fraction = 0.15;
    unsigned jobs = 1;
    LogFn log;
};

// Leave-one-parameter-set-out over tools 1..16: eight folds, each holding out
// both tools of one set.
[[nodiscard]] ComparisonReport logo_cv(const PreparedDataset& data, const data::Campaign& campaign,
                                       const ExperimentConfig& config);

// Trains on the fixed-parameter tools, tests on each variable-parameter tool.
[[nodiscard]] ComparisonReport variable_transfer(const PreparedDataset& data, const data::Campaign& campaign,
                                                 const ExperimentConfig& config);

// summary.txt, folds.csv and tool_<id>_curve.csv under out_dir.
void render_report(const ComparisonReport& report, const std::filesystem::path& out_dir);

void save_report(const ComparisonReport& report, const std::filesystem::path& path);
[[nodiscard]] ComparisonReport load_report(const std::filesystem::path& path);

} // namespace wearbench::exp
