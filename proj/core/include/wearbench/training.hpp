#pragma once

#include "wearbench/cutting.hpp"
#include "wearbench/model.hpp"
#include "wearbench/optim.hpp"
#include "wearbench/signal.hpp"
#include "wearbench/wear.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace wearbench::model {

// One training/evaluation example. The window is raw (un-normalised); the
// checkpoint carries the statistics needed to normalise it.
struct LabeledCut {
    const signal::SignalWindow* window = nullptr;
    CuttingParams params;
    wear::WearTargets targets;
    int tool_id = 0;
    int cut_index = 0;
};

// Targets are divided by their training-split maximum before the loss.
struct TargetScaler {
    std::array<double, wear::kTargetCount> max{};

    [[nodiscard]] static TargetScaler fit(std::span<const LabeledCut> cuts);
    [[nodiscard]] Tensor scale(const wear::WearTargets& targets) const;
    [[nodiscard]] wear::WearTargets unscale(const Tensor& scaled) const;
};

// Everything needed to reproduce predictions: architecture, preprocessing
// statistics fitted on the training split, and weights.
struct Checkpoint {
    static constexpr int kFormatVersion = 1;

    ModelSpec spec;
    ParamScaler param_scaler;
    signal::ChannelStats channel_stats;
    TargetScaler target_scaler;
    std::vector<NamedTensor> weights;
    std::uint64_t seed = 0;
    int format_version = kFormatVersion;

    [[nodiscard]] ConditionedCnn network() const;
};

// Predicted wear targets in um for a raw window.
[[nodiscard]] wear::WearTargets predict(const Checkpoint& checkpoint, const signal::SignalWindow& window,
                                        const CuttingParams& params);
[[nodiscard]] wear::WearTargets predict(const Checkpoint& checkpoint, const ConditionedCnn& network,
                                        const signal::SignalWindow& window, const CuttingParams& params);
// Fans out over `threads` workers; output order follows `cuts`.
[[nodiscard]] std::vector<wear::WearTargets> predict_batch(const Checkpoint& checkpoint,
                                                           std::span<const LabeledCut> cuts, unsigned threads = 1);

struct TrainConfig {
    std::size_t max_epochs = 300;
    std::size_t batch_size = 16;
    std::size_t patience = 20;
    nn::AdamConfig adam;
    std::uint64_t seed = 42;
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_rmse_vbmax_um = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochLog> history;
    std::size_t best_epoch = 0;
    double best_val_rmse_um = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Minimises the mean squared error over the scaled targets with Adam and
// early-stops on the validation RMSE of VB_max (um). Returns the best epoch's
// weights. Throws ParameterError on an empty split or overlapping
// train/validation cuts, NumericError on a non-finite loss.
[[nodiscard]] TrainResult train(std::span<const LabeledCut> train_set, std::span<const LabeledCut> val_set,
                                const ModelSpec& spec, const TrainConfig& config, const EpochCallback& on_epoch = {});

struct Split {
    std::vector<LabeledCut> train;
    std::vector<LabeledCut> val;
};

// The last `val_fraction` of cuts (by cut index) of every tool go to
// validation; at least one cut per tool stays on each side when possible.
[[nodiscard]] Split split_train_val(std::span<const LabeledCut> cuts, double val_fraction = 0.15);

struct GridCell {
    std::size_t units = 0;
    int filters_exp = 0;
    std::size_t parameters = 0;
    double val_rmse_um = 0.0;
};

struct GridSearchResult {
    std::vector<GridCell> table;
    std::size_t best = 0;
    ModelSpec best_spec;
};

// Trains every (units, 2^N) combination with the same seed and keeps the
// lowest validation VB_max RMSE; ties go to the smaller model.
[[nodiscard]] GridSearchResult grid_search(std::span<const std::size_t> units, std::span<const int> filter_exps,
                                           const ModelSpec& base, std::span<const LabeledCut> train_set,
                                           std::span<const LabeledCut> val_set, const TrainConfig& config);
// Index of the winning row of an already-evaluated table.
[[nodiscard]] std::size_t select_best(std::span<const GridCell> table);

} // namespace wearbench::model
