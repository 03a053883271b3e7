#include "wearbench/gradcheck.hpp"
#include "wearbench/layers.hpp"
#include "wearbench/model.hpp"
#include "wearbench/synth.hpp"

#include <benchmark/benchmark.h>

using namespace wearbench;

namespace {

void BM_ConvForward(benchmark::State& state)
{
    const auto c = static_cast<std::size_t>(state.range(0));
    const auto x = nn::random_tensor({c, 2000}, 1);
    const auto w = nn::random_tensor({c, c, 3}, 2);
    const auto b = nn::random_tensor({c}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv1d_forward(x, w, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * 3 * 2000));
}
BENCHMARK(BM_ConvForward)->Arg(8)->Arg(17)->Arg(64);

void BM_ConvBackward(benchmark::State& state)
{
    const auto c = static_cast<std::size_t>(state.range(0));
    const auto x = nn::random_tensor({c, 2000}, 1);
    const auto w = nn::random_tensor({c, c, 3}, 2);
    const auto up = nn::random_tensor({c, 2000}, 4);
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv1d_backward(x, w, up));
}
BENCHMARK(BM_ConvBackward)->Arg(8)->Arg(17)->Arg(64);

model::ModelSpec ci_spec()
{
    model::ModelSpec s;
    s.signal_channels = 15;
    s.length = 2000;
    return s;
}

void BM_NetworkForward(benchmark::State& state)
{
    model::ConditionedCnn net(ci_spec());
    net.initialize(1);
    const auto x = nn::random_tensor({15, 2000}, 2);
    const std::vector<double> p{0.5, 0.5};
    for (auto _ : state) benchmark::DoNotOptimize(net.predict(x, p));
}
BENCHMARK(BM_NetworkForward);

void BM_NetworkForwardBackward(benchmark::State& state)
{
    model::ConditionedCnn net(ci_spec());
    net.initialize(1);
    const auto x = nn::random_tensor({15, 2000}, 2);
    const auto up = nn::random_tensor({8}, 3);
    const std::vector<double> p{0.5, 0.5};
    std::mt19937_64 rng(4);
    auto grads = net.zero_grads();
    for (auto _ : state) {
        model::ConditionedCnn::Cache cache;
        (void)net.forward(x, p, true, &rng, &cache);
        net.backward(cache, up, grads);
    }
}
BENCHMARK(BM_NetworkForwardBackward);

void BM_SynthesizeCut(benchmark::State& state)
{
    const auto plan = synth::CampaignPlan::standard();
    const auto cfg = synth::SynthConfig{};
    const auto profile = state.range(0) ? synth::SignalProfile::full() : synth::SignalProfile::ci();
    std::mt19937_64 rng(5);
    const auto wear = synth::initial_wear_state(cfg, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(synth::synthesize_cut_signals(parameter_set(1), wear, profile, cfg, plan, rng));
}
BENCHMARK(BM_SynthesizeCut)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
