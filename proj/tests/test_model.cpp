#include "wearbench/checkpoint.hpp"
#include "wearbench/errors.hpp"
#include "wearbench/gradcheck.hpp"
#include "wearbench/layers.hpp"
#include "wearbench/model.hpp"
#include "wearbench/training.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace wearbench;
using model::ModelSpec;

namespace {

ModelSpec mini_spec(bool conditioned = true)
{
    ModelSpec s;
    s.signal_channels = 2;
    s.param_count = 2;
    s.length = 81;
    s.units = 2;
    s.base_filters = 4;
    s.conditioned = conditioned;
    return s;
}

std::vector<CuttingParams> table_sets()
{
    return {kParameterSets.begin(), kParameterSets.end()};
}

} // namespace

TEST(ParameterSets, TableValues)
{
    EXPECT_EQ(parameter_set(1), (CuttingParams{30, 0.03}));
    EXPECT_EQ(parameter_set(2), (CuttingParams{40, 0.04}));
    EXPECT_EQ(parameter_set(7), (CuttingParams{40, 0.02}));
    EXPECT_EQ(parameter_set(8), (CuttingParams{40, 0.03}));
    EXPECT_THROW((void)parameter_set(0), ParameterError);
    EXPECT_THROW((void)parameter_set(9), ParameterError);
}

TEST(ParamScaler, MinMaxOverTableRanges)
{
    const auto sets = table_sets();
    const auto scaler = model::ParamScaler::fit(sets);
    const auto s1 = scaler.scale(parameter_set(1));
    EXPECT_NEAR(s1[0], 0.5, 1e-12);
    EXPECT_NEAR(s1[1], 0.5, 1e-12);
    const auto s7 = scaler.scale(parameter_set(7));
    EXPECT_DOUBLE_EQ(s7[0], 1.0);
    EXPECT_DOUBLE_EQ(s7[1], 0.0);
}

TEST(ParamScaler, DegenerateAndEmptyRejected)
{
    const std::vector<CuttingParams> same{{30, 0.03}, {30, 0.04}};
    EXPECT_THROW((void)model::ParamScaler::fit(same), ParameterError);
    EXPECT_THROW((void)model::ParamScaler::fit(std::span<const CuttingParams>{}), ParameterError);
}

TEST(TileParams, Examples)
{
    const std::vector<double> half{0.5, 0.5};
    const auto t = model::tile_params(half, 5);
    EXPECT_EQ(t.shape(), (std::vector<std::size_t>{2, 5}));
    for (double v : t.data()) EXPECT_EQ(v, 0.5);
    const std::vector<double> one{1.0};
    EXPECT_EQ(model::tile_params(one, 4).values(), (std::vector<double>{1, 1, 1, 1}));
    EXPECT_THROW((void)model::tile_params(std::vector<double>{}, 4), SpecError);
}

TEST(InjectAndConcat, AppendsRowsAndKeepsSignal)
{
    const auto sig = nn::random_tensor({7, 20000}, 1);
    const std::vector<double> p{0.25, 0.75};
    const auto out = model::inject_and_concat(sig, model::tile_params(p, 20000));
    EXPECT_EQ(out.shape(), (std::vector<std::size_t>{9, 20000}));
    for (std::size_t r = 0; r < 7; ++r)
        for (std::size_t t = 0; t < 20000; t += 1234) EXPECT_EQ(out.at(r, t), sig.at(r, t));
    EXPECT_EQ(out.at(7, 19999), 0.25);
    EXPECT_EQ(out.at(8, 0), 0.75);
}

TEST(InjectAndConcat, ReferenceModelUnchanged)
{
    const auto sig = nn::random_tensor({3, 10}, 2);
    EXPECT_EQ(model::inject_and_concat(sig, Tensor{}), sig);
}

TEST(InjectAndConcat, LengthMismatch)
{
    const std::vector<double> p{0.1, 0.2};
    EXPECT_THROW((void)model::inject_and_concat(Tensor({3, 10}), model::tile_params(p, 9)), ShapeError);
}

TEST(ModelSpec, LengthTraceFullScale)
{
    ModelSpec s;
    s.length = 20000;
    EXPECT_EQ(s.length_trace(), (std::vector<std::size_t>{20000, 6666, 2222, 740, 246}));
    s.validate();
}

TEST(ModelSpec, ClosedFormTraceAndGapChannels)
{
    for (std::size_t units = 1; units <= 5; ++units)
        for (std::size_t base : {2u, 8u, 32u, 128u})
            for (std::size_t len : {243u, 1000u, 2000u, 20000u}) {
                ModelSpec s;
                s.units = units;
                s.base_filters = base;
                s.length = len;
                auto trace = s.length_trace();
                std::size_t l = len;
                for (std::size_t u = 0; u <= units; ++u) {
                    EXPECT_EQ(trace[u], l);
                    l /= 3;
                }
                EXPECT_EQ(s.gap_channels(), std::min<std::size_t>(base << (units - 1), 256));
            }
}

TEST(ModelSpec, Validation)
{
    ModelSpec s;
    s.length = 80;
    EXPECT_THROW(s.validate(), SpecError);
    s.length = 81;
    s.validate();
    s.base_filters = 12;
    EXPECT_THROW(s.validate(), SpecError);
    s.base_filters = 8;
    s.units = 0;
    EXPECT_THROW(s.validate(), SpecError);
    s.units = 4;
    s.param_count = 0;
    EXPECT_THROW(s.validate(), SpecError);
    s.conditioned = false;
    s.validate();
}

TEST(ModelSpec, ReferenceTwin)
{
    ModelSpec s;
    const auto r = s.as_reference();
    EXPECT_FALSE(r.conditioned);
    auto back = r;
    back.conditioned = true;
    EXPECT_EQ(back, s);
    EXPECT_EQ(r.injected_params(), 0u);
    EXPECT_LT(r.trainable_parameters(), s.trainable_parameters());
}

TEST(Network, ParameterCountMatchesTensors)
{
    for (bool cond : {true, false}) {
        ModelSpec s;
        s.conditioned = cond;
        model::ConditionedCnn net(s);
        std::size_t n = 0;
        for (const auto& p : net.parameters()) n += p.value.size();
        EXPECT_EQ(n, s.trainable_parameters());
        EXPECT_EQ(net.parameters().front().value.shape(),
                  (std::vector<std::size_t>{8, cond ? 17u : 15u, 3}));
    }
}

TEST(Network, ZeroWeightsPredictDenseBias)
{
    model::ConditionedCnn net(mini_spec());
    for (auto& p : net.parameters()) p.value.fill(0.0);
    auto& bias = net.parameters().back().value;
    for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = static_cast<double>(i) - 2.5;
    const std::vector<double> params{0.3, 0.9};
    EXPECT_EQ(net.predict(nn::random_tensor({2, 81}, 4), params), bias);
}

TEST(Network, ReferenceIgnoresParams)
{
    model::ConditionedCnn net(mini_spec(false));
    net.initialize(3);
    const auto x = nn::random_tensor({2, 81}, 5);
    const std::vector<double> a{0.0, 0.0}, b{1.0, 0.37};
    EXPECT_EQ(net.predict(x, a), net.predict(x, b));
}

TEST(Network, ConditionedReactsToParams)
{
    model::ConditionedCnn net(mini_spec());
    net.initialize(3);
    const auto x = nn::random_tensor({2, 81}, 5);
    const std::vector<double> a{0.0, 0.0}, b{1.0, 0.37};
    EXPECT_FALSE(net.predict(x, a) == net.predict(x, b));
}

TEST(Network, DeterministicInitAndInference)
{
    model::ConditionedCnn a(mini_spec()), b(mini_spec());
    a.initialize(9);
    b.initialize(9);
    for (std::size_t i = 0; i < a.parameters().size(); ++i) EXPECT_EQ(a.parameters()[i].value, b.parameters()[i].value);
    const auto x = nn::random_tensor({2, 81}, 1);
    const std::vector<double> p{0.2, 0.4};
    EXPECT_EQ(a.predict(x, p), b.predict(x, p));
}

TEST(Network, GlorotUniformBounds)
{
    ModelSpec s;
    model::ConditionedCnn net(s);
    net.initialize(1);
    const auto& w = net.parameters()[0].value; // 8 x 17 x 3
    const double limit = std::sqrt(6.0 / (17.0 * 3 + 8.0 * 3));
    double peak = 0.0;
    for (double v : w.data()) peak = std::max(peak, std::abs(v));
    EXPECT_LE(peak, limit);
    EXPECT_GT(peak, 0.8 * limit);
    for (double v : net.parameters()[1].value.data()) EXPECT_EQ(v, 0.0);
}

TEST(Network, RejectsWrongWindowShape)
{
    model::ConditionedCnn net(mini_spec());
    const std::vector<double> p{0.2, 0.4};
    EXPECT_THROW((void)net.predict(Tensor({2, 80}), p), ShapeError);
    EXPECT_THROW((void)net.predict(Tensor({3, 81}), p), ShapeError);
}

namespace {

// End-to-end check of the network gradient on a sum(r * output) objective.
nn::GradCheckResult network_grad_check(std::uint64_t seed, const ModelSpec& spec)
{
    model::ConditionedCnn net(spec);
    net.initialize(seed);
    auto x = nn::random_tensor({spec.signal_channels, spec.length}, seed + 1);
    const auto r = nn::random_tensor({spec.output_dim}, seed + 2);
    const std::vector<double> params{0.3, 0.8};

    model::ConditionedCnn::Cache cache;
    (void)net.forward(x, params, false, nullptr, &cache);
    auto grads = net.zero_grads();
    Tensor dx;
    net.backward(cache, r, grads, &dx);

    auto objective = [&] {
        const auto out = net.predict(x, params);
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += r[i] * out[i];
        return s;
    };
    auto regime = [&] {
        model::ConditionedCnn::Cache c;
        (void)net.forward(x, params, false, nullptr, &c);
        return model::ConditionedCnn::regime_fingerprint(c);
    };
    nn::GradCheckResult total;
    auto merge = [&](const nn::GradCheckResult& g) {
        total.max_rel_error = std::max(total.max_rel_error, g.max_rel_error);
        total.checked += g.checked;
        total.skipped_kinks += g.skipped_kinks;
    };
    for (std::size_t i = 0; i < net.parameters().size(); ++i)
        merge(nn::grad_check(net.parameters()[i].value.data(), grads[i].data(), objective, 1e-6, regime));
    merge(nn::grad_check(x.data(), dx.data(), objective, 1e-6, regime));
    return total;
}

} // namespace

TEST(Network, EndToEndGradientTwoUnits)
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto r = network_grad_check(seed, mini_spec());
        EXPECT_LT(r.max_rel_error, 1e-3);
        EXPECT_GT(r.checked, 0u);
    }
}

TEST(Network, EndToEndGradientFourUnits)
{
    auto s = mini_spec();
    s.units = 4;
    const auto r = network_grad_check(5, s);
    EXPECT_LT(r.max_rel_error, 1e-3);
}

TEST(Network, DropoutMaskAppliedInTraining)
{
    auto s = mini_spec();
    s.dropout = 0.5;
    model::ConditionedCnn net(s);
    net.initialize(2);
    const auto x = nn::random_tensor({2, 81}, 3);
    const std::vector<double> p{0.2, 0.4};
    std::mt19937_64 rng(4);
    model::ConditionedCnn::Cache cache;
    const auto train_out = net.forward(x, p, true, &rng, &cache);
    EXPECT_EQ(cache.dropout_mask.size(), s.gap_channels());
    EXPECT_FALSE(train_out == net.predict(x, p));
}
