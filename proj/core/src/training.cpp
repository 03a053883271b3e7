#include "wearbench/training.hpp"

#include "wearbench/errors.hpp"
#include "wearbench/io.hpp"
#include "wearbench/layers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <utility>

namespace wearbench::model {

namespace {

struct PreparedExample {
    Tensor signal;
    std::vector<double> params;
    Tensor targets; // scaled
    double vb_max_um = 0.0;
};

std::vector<PreparedExample> prepare(std::span<const LabeledCut> cuts, const Checkpoint& ckpt)
{
    std::vector<PreparedExample> out;
    out.reserve(cuts.size());
    for (const auto& c : cuts) {
        PreparedExample ex;
        ex.signal = signal::apply_stats(*c.window, ckpt.channel_stats).data;
        if (ckpt.spec.conditioned) ex.params = ckpt.param_scaler.scale(c.params);
        ex.targets = ckpt.target_scaler.scale(c.targets);
        ex.vb_max_um = c.targets.vb_max();
        out.push_back(std::move(ex));
    }
    return out;
}

double validation_rmse(const ConditionedCnn& net, const std::vector<PreparedExample>& val,
                       const TargetScaler& scaler)
{
    double sse = 0.0;
    for (const auto& ex : val) {
        const Tensor out = net.predict(ex.signal, ex.params);
        const double est = out[wear::kVbMaxIndex] * scaler.max[wear::kVbMaxIndex];
        const double d = est - ex.vb_max_um;
        sse += d * d;
    }
    return std::sqrt(sse / static_cast<double>(val.size()));
}

void check_windows(std::span<const LabeledCut> cuts, const ModelSpec& spec, const char* split)
{
    for (const auto& c : cuts) {
        if (c.window == nullptr) throw ParameterError(std::string(split) + " split contains a cut without a window");
        if (c.window->channels.size() != spec.signal_channels || c.window->length() != spec.length)
            throw SpecError(std::string(split) + " window '" + c.window->cut_id + "' is " +
                            shape_string(c.window->data.shape()) + ", spec expects [" +
                            std::to_string(spec.signal_channels) + "x" + std::to_string(spec.length) + "]");
    }
}

} // namespace

TargetScaler TargetScaler::fit(std::span<const LabeledCut> cuts)
{
    if (cuts.empty()) throw ParameterError("TargetScaler: empty training split");
    TargetScaler s;
    s.max.fill(0.0);
    for (const auto& c : cuts)
        for (std::size_t i = 0; i < wear::kTargetCount; ++i) s.max[i] = std::max(s.max[i], c.targets.values[i]);
    for (auto& m : s.max)
        if (!(m > 0.0)) m = 1.0;
    return s;
}

Tensor TargetScaler::scale(const wear::WearTargets& targets) const
{
    Tensor t({wear::kTargetCount});
    for (std::size_t i = 0; i < wear::kTargetCount; ++i) t[i] = targets.values[i] / max[i];
    return t;
}

wear::WearTargets TargetScaler::unscale(const Tensor& scaled) const
{
    if (scaled.size() != wear::kTargetCount)
        throw ShapeError("TargetScaler: expected " + std::to_string(wear::kTargetCount) + " outputs, got " +
                         std::to_string(scaled.size()));
    wear::WearTargets t;
    for (std::size_t i = 0; i < wear::kTargetCount; ++i) t.values[i] = scaled[i] * max[i];
    return t;
}

ConditionedCnn Checkpoint::network() const
{
    ConditionedCnn net(spec);
    auto& params = net.parameters();
    if (params.size() != weights.size())
        throw LoadError("checkpoint holds " + std::to_string(weights.size()) + " tensors, architecture needs " +
                        std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name != weights[i].name || !params[i].value.same_shape(weights[i].value))
            throw LoadError("checkpoint tensor '" + weights[i].name + "' " + shape_string(weights[i].value.shape()) +
                            " does not match '" + params[i].name + "' " + shape_string(params[i].value.shape()));
        params[i].value = weights[i].value;
    }
    return net;
}

wear::WearTargets predict(const Checkpoint& checkpoint, const ConditionedCnn& network,
                          const signal::SignalWindow& window, const CuttingParams& params)
{
    const auto normalized = signal::apply_stats(window, checkpoint.channel_stats);
    std::vector<double> scaled;
    if (checkpoint.spec.conditioned) scaled = checkpoint.param_scaler.scale(params);
    return checkpoint.target_scaler.unscale(network.predict(normalized.data, scaled));
}

wear::WearTargets predict(const Checkpoint& checkpoint, const signal::SignalWindow& window,
                          const CuttingParams& params)
{
    return predict(checkpoint, checkpoint.network(), window, params);
}

std::vector<wear::WearTargets> predict_batch(const Checkpoint& checkpoint, std::span<const LabeledCut> cuts,
                                             unsigned threads)
{
    const ConditionedCnn net = checkpoint.network();
    std::vector<wear::WearTargets> out(cuts.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = predict(checkpoint, net, *cuts[i].window, cuts[i].params);
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cuts.size())));
    if (threads <= 1) {
        work(0, cuts.size());
        return out;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (cuts.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(cuts.size(), begin + chunk);
        if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
    return out;
}

TrainResult train(std::span<const LabeledCut> train_set, std::span<const LabeledCut> val_set, const ModelSpec& spec,
                  const TrainConfig& config, const EpochCallback& on_epoch)
{
    if (train_set.empty()) throw ParameterError("train: empty training split");
    if (val_set.empty()) throw ParameterError("train: empty validation split");
    if (config.batch_size == 0) throw ParameterError("train: batch size must be positive");
    spec.validate();
    check_windows(train_set, spec, "training");
    check_windows(val_set, spec, "validation");
    {
        std::set<std::pair<int, int>> seen;
        for (const auto& c : train_set) seen.emplace(c.tool_id, c.cut_index);
        for (const auto& c : val_set)
            if (seen.count({c.tool_id, c.cut_index}))
                throw ParameterError("train: cut " + std::to_string(c.cut_index) + " of tool " +
                                     std::to_string(c.tool_id) + " is in both the training and validation split");
    }

    TrainResult result;
    Checkpoint& ckpt = result.checkpoint;
    ckpt.spec = spec;
    ckpt.seed = config.seed;
    {
        std::vector<const signal::SignalWindow*> windows;
        windows.reserve(train_set.size());
        for (const auto& c : train_set) windows.push_back(c.window);
        ckpt.channel_stats = signal::fit_stats(std::span<const signal::SignalWindow* const>(windows));
    }
    if (spec.conditioned) {
        std::vector<CuttingParams> params;
        for (const auto& c : train_set) params.push_back(c.params);
        ckpt.param_scaler = ParamScaler::fit(params);
    }
    ckpt.target_scaler = TargetScaler::fit(train_set);

    const auto train_data = prepare(train_set, ckpt);
    const auto val_data = prepare(val_set, ckpt);

    ConditionedCnn net(spec);
    net.initialize(io::derive_seed(config.seed, 1));
    std::mt19937_64 rng(io::derive_seed(config.seed, 2));

    std::vector<nn::ParamSlot> slots;
    auto grads = net.zero_grads();
    for (std::size_t i = 0; i < net.parameters().size(); ++i)
        slots.push_back({net.parameters()[i].name, &net.parameters()[i].value, &grads[i]});
    auto opt = nn::make_optimizer_state(slots, config.adam);

    std::vector<std::size_t> order(train_data.size());
    std::iota(order.begin(), order.end(), 0);

    double best = INFINITY;
    std::size_t since_best = 0;
    ConditionedCnn::Cache cache;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            for (auto& g : grads) g.fill(0.0);
            for (std::size_t b = start; b < end; ++b) {
                const auto& ex = train_data[order[b]];
                const Tensor out = net.forward(ex.signal, ex.params, true, &rng, &cache);
                auto loss = nn::mse_multi(out, ex.targets);
                if (!std::isfinite(loss.loss)) {
                    const auto& cut = train_set[order[b]];
                    throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " on tool " +
                                       std::to_string(cut.tool_id) + " cut " + std::to_string(cut.cut_index));
                }
                loss_sum += loss.loss;
                net.backward(cache, loss.grad, grads);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (auto& g : grads)
                for (auto& v : g.data()) v *= inv;
            nn::adam_step(slots, opt);
        }

        EpochLog log{epoch, loss_sum / static_cast<double>(order.size()),
                     validation_rmse(net, val_data, ckpt.target_scaler)};
        result.history.push_back(log);
        if (on_epoch) on_epoch(log);
        if (!std::isfinite(log.val_rmse_vbmax_um))
            throw NumericError("non-finite validation RMSE at epoch " + std::to_string(epoch));
        if (log.val_rmse_vbmax_um < best) {
            best = log.val_rmse_vbmax_um;
            since_best = 0;
            result.best_epoch = epoch;
            ckpt.weights = net.parameters();
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    result.best_val_rmse_um = best;
    return result;
}

Split split_train_val(std::span<const LabeledCut> cuts, double val_fraction)
{
    if (!(val_fraction >= 0.0 && val_fraction < 1.0))
        throw ParameterError("split_train_val: fraction must lie in [0, 1)");
    std::map<int, std::vector<int>> per_tool;
    for (const auto& c : cuts) per_tool[c.tool_id].push_back(c.cut_index);
    std::map<int, int> first_val_cut;
    for (auto& [tool, idx] : per_tool) {
        std::sort(idx.begin(), idx.end());
        const auto n = static_cast<long>(idx.size());
        long n_val = std::lround(val_fraction * static_cast<double>(n));
        if (n >= 2 && val_fraction > 0.0) n_val = std::clamp(n_val, 1L, n - 1);
        else n_val = 0;
        first_val_cut[tool] = n_val > 0 ? idx[static_cast<std::size_t>(n - n_val)] : INT32_MAX;
    }
    Split split;
    for (const auto& c : cuts) (c.cut_index >= first_val_cut[c.tool_id] ? split.val : split.train).push_back(c);
    return split;
}

std::size_t select_best(std::span<const GridCell> table)
{
    if (table.empty()) throw ParameterError("grid search: empty grid");
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& a = table[i];
        const auto& b = table[best];
        if (a.val_rmse_um < b.val_rmse_um || (a.val_rmse_um == b.val_rmse_um && a.parameters < b.parameters))
            best = i;
    }
    return best;
}

GridSearchResult grid_search(std::span<const std::size_t> units, std::span<const int> filter_exps,
                             const ModelSpec& base, std::span<const LabeledCut> train_set,
                             std::span<const LabeledCut> val_set, const TrainConfig& config)
{
    if (units.empty() || filter_exps.empty()) throw ParameterError("grid search: empty grid");
    GridSearchResult result;
    std::vector<ModelSpec> specs;
    for (auto u : units)
        for (auto n : filter_exps) {
            if (n < 0 || n > 16) throw ParameterError("grid search: filter exponent out of range");
            ModelSpec s = base;
            s.units = u;
            s.base_filters = std::size_t{1} << n;
            const auto run = train(train_set, val_set, s, config);
            result.table.push_back({u, n, s.trainable_parameters(), run.best_val_rmse_um});
            specs.push_back(s);
        }
    result.best = select_best(result.table);
    result.best_spec = specs[result.best];
    return result;
}

} // namespace wearbench::model
