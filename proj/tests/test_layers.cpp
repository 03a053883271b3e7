#include "wearbench/errors.hpp"
#include "wearbench/gradcheck.hpp"
#include "wearbench/layers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using wearbench::Tensor;
namespace nn = wearbench::nn;

namespace {

Tensor row(std::vector<double> v)
{
    const auto n = v.size();
    return Tensor({1, n}, std::move(v));
}

// Straightforward zero-padded convolution used as the oracle.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b)
{
    const auto cin = x.dim(0), len = x.dim(1), cout = w.dim(0), k = w.dim(2);
    const long pad = static_cast<long>(k / 2);
    Tensor out({cout, len});
    for (std::size_t c = 0; c < cout; ++c)
        for (std::size_t t = 0; t < len; ++t) {
            double s = b[c];
            for (std::size_t i = 0; i < cin; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    const long src = static_cast<long>(t + j) - pad;
                    if (src >= 0 && src < static_cast<long>(len)) s += w.at(c, i, j) * x.at(i, static_cast<std::size_t>(src));
                }
            out.at(c, t) = s;
        }
    return out;
}

} // namespace

TEST(Conv1d, IdentityKernel)
{
    const auto out = nn::conv1d_forward(row({1, 2, 3, 4, 5}), Tensor({1, 1, 1}, 1.0), Tensor::vector({0}));
    EXPECT_EQ(out.values(), (std::vector<double>{1, 2, 3, 4, 5}));
}

TEST(Conv1d, ZeroInputPassesBias)
{
    const auto w = nn::random_tensor({1, 1, 3}, 4);
    const auto out = nn::conv1d_forward(row({0, 0, 0, 0}), w, Tensor::vector({0.75}));
    EXPECT_EQ(out.values(), (std::vector<double>{0.75, 0.75, 0.75, 0.75}));
}

TEST(Conv1d, BoxKernelWithZeroPadding)
{
    const auto out = nn::conv1d_forward(row({1, 2, 3}), Tensor({1, 1, 3}, 1.0), Tensor::vector({0}));
    EXPECT_EQ(out.values(), (std::vector<double>{3, 6, 5}));
}

TEST(Conv1d, MatchesNaiveOracleOnRandomInputs)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto x = nn::random_tensor({3, 17}, seed);
        const auto w = nn::random_tensor({4, 3, 5}, seed + 100);
        const auto b = nn::random_tensor({4}, seed + 200);
        const auto fast = nn::conv1d_forward(x, w, b);
        const auto ref = naive_conv(x, w, b);
        for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], ref[i], 1e-12);
    }
}

TEST(Conv1d, IdentityKernelIsIdentityMapForAnyInput)
{
    Tensor w({3, 3, 3}, 0.0);
    for (std::size_t c = 0; c < 3; ++c) w.at(c, c, 1) = 1.0;
    const auto x = nn::random_tensor({3, 40}, 11, -50, 50);
    EXPECT_EQ(nn::conv1d_forward(x, w, Tensor({3}, 0.0)), x);
}

TEST(Conv1d, RejectsChannelMismatch)
{
    EXPECT_THROW((void)nn::conv1d_forward(Tensor({2, 8}), Tensor({1, 3, 3}), Tensor({1})), wearbench::ShapeError);
}

TEST(Conv1d, BackwardZeroUpstream)
{
    const auto x = nn::random_tensor({2, 8}, 1);
    const auto w = nn::random_tensor({3, 2, 3}, 2);
    const auto g = nn::conv1d_backward(x, w, Tensor({3, 8}, 0.0));
    for (const auto& t : g.params)
        for (double v : t.data()) EXPECT_EQ(v, 0.0);
    for (double v : g.input.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv1d, BackwardIdentityKernelPassesUpstream)
{
    const auto up = nn::random_tensor({1, 6}, 5);
    const auto g = nn::conv1d_backward(row({1, 2, 3, 4, 5, 6}), Tensor({1, 1, 1}, 1.0), up);
    EXPECT_EQ(g.input, up);
}

TEST(Conv1d, BackwardRejectsWrongUpstreamShape)
{
    EXPECT_THROW((void)nn::conv1d_backward(Tensor({2, 8}), Tensor({3, 2, 3}), Tensor({3, 7})), wearbench::ShapeError);
}

TEST(Conv1d, GradientMatchesFiniteDifferences)
{
    const auto r = nn::grad_check_conv1d(nn::random_tensor({2, 8}, 7), nn::random_tensor({3, 2, 3}, 8),
                                         nn::random_tensor({3}, 9), 1e-6, 10);
    EXPECT_LT(r.max_rel_error, 1e-5);
    EXPECT_EQ(r.checked, 2u * 8 + 3 * 2 * 3 + 3);
}

TEST(Conv1d, GradCheckOnTwelveSamples)
{
    const auto r = nn::grad_check_conv1d(nn::random_tensor({2, 12}, 3), nn::random_tensor({4, 2, 3}, 4),
                                         nn::random_tensor({4}, 5), 1e-6, 6);
    EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(MaxPool, Basic)
{
    const auto r = nn::maxpool1d(row({1, 2, 3, 4, 5, 6}));
    EXPECT_EQ(r.output.values(), (std::vector<double>{3, 6}));
}

TEST(MaxPool, TieGoesToFirstIndex)
{
    const auto r = nn::maxpool1d(row({7, 7, 7}));
    EXPECT_EQ(r.output.values(), (std::vector<double>{7}));
    EXPECT_EQ(r.argmax, (std::vector<std::size_t>{0}));
}

TEST(MaxPool, DropsTrailingRemainder)
{
    const auto r = nn::maxpool1d(row({5, 1, 2, 0, 9, 3, 4}));
    EXPECT_EQ(r.output.values(), (std::vector<double>{5, 9}));
}

TEST(MaxPool, ShortInputIsLengthError)
{
    EXPECT_THROW((void)nn::maxpool1d(row({1, 2})), wearbench::LengthError);
}

TEST(MaxPool, OutputLengthAndRouting)
{
    for (std::size_t len = 3; len < 40; ++len) {
        const auto x = nn::random_tensor({2, len}, len);
        const auto r = nn::maxpool1d(x);
        ASSERT_EQ(r.output.dim(1), len / 3);
        const auto up = nn::random_tensor({2, len / 3}, len + 1000);
        const auto g = nn::maxpool1d_backward(r, x.shape(), up);
        std::size_t nonzero = 0;
        double sum = 0.0;
        for (double v : g.data()) {
            nonzero += v != 0.0;
            sum += v;
        }
        double up_sum = 0.0;
        for (double v : up.data()) up_sum += v;
        EXPECT_EQ(nonzero, up.size());
        EXPECT_NEAR(sum, up_sum, 1e-12);
    }
}

TEST(GlobalAvgPool, Values)
{
    EXPECT_DOUBLE_EQ(nn::global_avg_pool(row({2, 4, 6}))[0], 4.0);
    EXPECT_DOUBLE_EQ(nn::global_avg_pool(row({1, 2, 3, 5}))[0], 2.75);
}

TEST(GlobalAvgPool, ConstantChannel)
{
    for (double v : {0.1, -3.7, 1e6, 123.456}) {
        const double m = nn::global_avg_pool(Tensor({1, 997}, v))[0];
        EXPECT_LE(std::abs(m - v), 1e-12 * std::abs(v));
    }
}

TEST(GlobalAvgPool, BackwardDistributesUniformly)
{
    const std::vector<std::size_t> shape{2, 4};
    const auto g = nn::global_avg_pool_backward(shape, Tensor::vector({4.0, 8.0}));
    EXPECT_EQ(g.values(), (std::vector<double>{1, 1, 1, 1, 2, 2, 2, 2}));
}

TEST(Dense, Examples)
{
    const auto x = Tensor::vector({1.5, -2.0});
    EXPECT_EQ(nn::dense_forward(x, Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor({2}, 0.0)), x);
    EXPECT_EQ(nn::dense_forward(x, Tensor({2, 2}, 0.0), Tensor::vector({3, 4})).values(),
              (std::vector<double>{3, 4}));
    EXPECT_EQ(nn::dense_forward(Tensor::vector({1, 1}), Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor({2}, 0.0)).values(),
              (std::vector<double>{3, 7}));
}

TEST(Dense, DimensionMismatch)
{
    EXPECT_THROW((void)nn::dense_forward(Tensor({3}), Tensor({2, 2}), Tensor({2})), wearbench::ShapeError);
}

TEST(Dense, GradientMatchesFiniteDifferences)
{
    const auto r = nn::grad_check_dense(nn::random_tensor({8}, 1), nn::random_tensor({5, 8}, 2),
                                        nn::random_tensor({5}, 3), 1e-6, 4);
    EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(Relu, Examples)
{
    EXPECT_EQ(nn::relu(Tensor::vector({-1, 0, 2})).values(), (std::vector<double>{0, 0, 2}));
    const auto pos = nn::random_tensor({3, 5}, 2, 0.1, 5.0);
    EXPECT_EQ(nn::relu(pos), pos);
}

TEST(Relu, SubgradientAtZeroIsZero)
{
    const auto g = nn::relu_backward(Tensor::vector({0.0, 1.0}), Tensor::vector({5.0, 5.0}));
    EXPECT_EQ(g.values(), (std::vector<double>{0.0, 5.0}));
}

TEST(Relu, GradientAwayFromZero)
{
    auto x = nn::random_tensor({4, 6}, 12);
    for (auto& v : x.data()) v += v >= 0 ? 0.1 : -0.1;
    const auto r = nn::grad_check_relu(x, 1e-6, 13);
    EXPECT_LT(r.max_rel_error, 1e-5);
    EXPECT_EQ(r.skipped_kinks, 0u);
}

TEST(Dropout, ZeroRateIsIdentity)
{
    std::mt19937_64 rng(1);
    const auto x = nn::random_tensor({3, 4}, 1);
    EXPECT_EQ(nn::dropout(x, 0.0, true, rng).output, x);
    EXPECT_EQ(nn::dropout(x, 0.0, false, rng).output, x);
}

TEST(Dropout, InferenceIsIdentity)
{
    std::mt19937_64 rng(1);
    const auto x = nn::random_tensor({10}, 2);
    EXPECT_EQ(nn::dropout(x, 0.5, false, rng).output, x);
}

TEST(Dropout, RateOneRejected)
{
    std::mt19937_64 rng(1);
    EXPECT_THROW((void)nn::dropout(Tensor({4}), 1.0, true, rng), wearbench::ParameterError);
}

TEST(Dropout, PreservesExpectationMonteCarlo)
{
    std::mt19937_64 rng(42);
    const Tensor x({100000}, 2.5);
    const auto r = nn::dropout(x, 0.5, true, rng);
    double mean = 0.0;
    for (double v : r.output.data()) mean += v;
    mean /= static_cast<double>(x.size());
    EXPECT_NEAR(mean, 2.5, 0.02 * 2.5);
}

TEST(Dropout, GradientMatchesFiniteDifferences)
{
    const auto r = nn::grad_check_dropout(nn::random_tensor({3, 7}, 4), 0.3, 1e-6, 5);
    EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(Mse, Examples)
{
    const auto t = nn::random_tensor({8}, 3);
    EXPECT_EQ(nn::mse_multi(t, t).loss, 0.0);
    Tensor p({8}, 0.0);
    p[0] = 2.0;
    EXPECT_DOUBLE_EQ(nn::mse_multi(p, Tensor({8}, 0.0)).loss, 0.5);
    EXPECT_THROW((void)nn::mse_multi(Tensor({8}), Tensor({7})), wearbench::ShapeError);
}

TEST(Mse, NonNegativeAndZeroOnlyAtEquality)
{
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto a = nn::random_tensor({8}, s);
        auto b = a;
        b[s % 8] += 1e-3;
        EXPECT_GT(nn::mse_multi(a, b).loss, 0.0);
    }
}

TEST(Mse, GradientMatchesFiniteDifferences)
{
    const auto r = nn::grad_check_mse(nn::random_tensor({8}, 1), nn::random_tensor({8}, 2), 1e-6);
    EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(GradCheck, EpsilonRangeEnforced)
{
    const auto x = nn::random_tensor({4}, 1);
    EXPECT_THROW((void)nn::grad_check_relu(x, 1e-3, 1), wearbench::ParameterError);
    EXPECT_THROW((void)nn::grad_check_relu(x, 1e-9, 1), wearbench::ParameterError);
}

TEST(GradCheck, RelativeErrorFormula)
{
    EXPECT_DOUBLE_EQ(nn::relative_error(1.0, 1.0), 0.0);
    EXPECT_NEAR(nn::relative_error(1.0, 0.9), 0.1, 1e-12);
    EXPECT_EQ(nn::relative_error(0.0, 0.0), 0.0);
}

TEST(GradCheck, EveryLayerOverHundredSeeds)
{
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        worst = std::max(worst, nn::grad_check_conv1d(nn::random_tensor({2, 9}, s), nn::random_tensor({3, 2, 3}, s + 1),
                                                      nn::random_tensor({3}, s + 2), 1e-6, s + 3)
                                    .max_rel_error);
        worst = std::max(worst, nn::grad_check_dense(nn::random_tensor({6}, s), nn::random_tensor({4, 6}, s + 1),
                                                     nn::random_tensor({4}, s + 2), 1e-6, s + 3)
                                    .max_rel_error);
        worst = std::max(worst, nn::grad_check_relu(nn::random_tensor({3, 5}, s), 1e-6, s + 1).max_rel_error);
        worst = std::max(worst, nn::grad_check_maxpool(nn::random_tensor({2, 10}, s), 1e-6, s + 1).max_rel_error);
        worst = std::max(worst, nn::grad_check_global_avg_pool(nn::random_tensor({3, 7}, s), 1e-6, s + 1).max_rel_error);
        worst = std::max(worst, nn::grad_check_dropout(nn::random_tensor({3, 5}, s), 0.2, 1e-6, s + 1).max_rel_error);
        worst = std::max(worst, nn::grad_check_mse(nn::random_tensor({8}, s), nn::random_tensor({8}, s + 1), 1e-6)
                                    .max_rel_error);
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(Layers, PureFunctions)
{
    const auto x = nn::random_tensor({2, 30}, 1);
    const auto w = nn::random_tensor({3, 2, 3}, 2);
    const auto b = nn::random_tensor({3}, 3);
    EXPECT_EQ(nn::conv1d_forward(x, w, b), nn::conv1d_forward(x, w, b));
    const auto up = nn::random_tensor({3, 30}, 4);
    const auto g1 = nn::conv1d_backward(x, w, up);
    const auto g2 = nn::conv1d_backward(x, w, up);
    EXPECT_EQ(g1.input, g2.input);
    EXPECT_EQ(g1.params[0], g2.params[0]);
    EXPECT_EQ(nn::maxpool1d(x).output, nn::maxpool1d(x).output);
}
