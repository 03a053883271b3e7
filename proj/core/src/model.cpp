#include "wearbench/model.hpp"

#include "wearbench/errors.hpp"
#include "wearbench/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wearbench {

CuttingParams parameter_set(int set_number)
{
    if (set_number < 1 || set_number > static_cast<int>(kParameterSetCount))
        throw ParameterError("parameter set number must lie in 1..8, got " + std::to_string(set_number));
    return kParameterSets[static_cast<std::size_t>(set_number - 1)];
}

} // namespace wearbench

namespace wearbench::model {

void ModelSpec::validate() const
{
    auto fail = [](const std::string& msg) { throw SpecError("model spec: " + msg); };
    if (signal_channels == 0) fail("signal channel count K must be positive");
    if (units == 0) fail("at least one conv unit is required");
    if (convs_per_unit == 0) fail("at least one convolution per unit is required");
    if (base_filters == 0 || (base_filters & (base_filters - 1)) != 0)
        fail("base filter count must be a power of two, got " + std::to_string(base_filters));
    if (filter_cap < base_filters) fail("filter cap below the base filter count");
    if (kernel == 0 || kernel % 2 == 0) fail("kernel size must be odd, got " + std::to_string(kernel));
    if (pool < 2) fail("pool size must be at least 2");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout rate must lie in [0, 1)");
    if (output_dim == 0) fail("output dimension must be positive");
    if (conditioned && param_count == 0) fail("a conditioned model needs at least one cutting parameter (H > 0)");
    std::size_t min_len = 1;
    for (std::size_t u = 0; u < units; ++u) min_len *= pool;
    if (length < min_len)
        fail("window length " + std::to_string(length) + " underflows " + std::to_string(units) +
             " pooling stages (need at least " + std::to_string(min_len) + ")");
}

std::size_t ModelSpec::filters(std::size_t unit) const noexcept
{
    std::size_t f = base_filters;
    for (std::size_t u = 0; u < unit && f < filter_cap; ++u) f *= 2;
    return std::min(f, filter_cap);
}

std::vector<std::size_t> ModelSpec::length_trace() const
{
    std::vector<std::size_t> trace{length};
    for (std::size_t u = 0; u < units; ++u) trace.push_back(trace.back() / pool);
    return trace;
}

std::size_t ModelSpec::trainable_parameters() const noexcept
{
    std::size_t total = 0;
    std::size_t in = signal_channels;
    for (std::size_t u = 0; u < units; ++u) {
        const std::size_t f = filters(u);
        std::size_t c_in = in + injected_params();
        for (std::size_t c = 0; c < convs_per_unit; ++c) {
            total += f * c_in * kernel + f;
            c_in = f;
        }
        in = f;
    }
    return total + output_dim * in + output_dim;
}

ModelSpec ModelSpec::as_reference() const
{
    ModelSpec ref = *this;
    ref.conditioned = false;
    return ref;
}

std::string describe(const ModelSpec& s)
{
    std::ostringstream os;
    os << (s.conditioned ? "conditioned" : "reference") << " K=" << s.signal_channels << " H=" << s.injected_params()
       << " L=" << s.length << " units=" << s.units << "x" << s.convs_per_unit << " filters=" << s.base_filters
       << " kernel=" << s.kernel << " pool=" << s.pool << " dropout=" << s.dropout << " outputs=" << s.output_dim
       << " params=" << s.trainable_parameters();
    return os.str();
}

ParamScaler ParamScaler::fit(std::span<const CuttingParams> params)
{
    if (params.empty()) throw ParameterError("ParamScaler: empty training split");
    ParamScaler s;
    s.min.assign(kCuttingParamCount, INFINITY);
    s.max.assign(kCuttingParamCount, -INFINITY);
    for (const auto& p : params) {
        const auto v = p.as_array();
        for (std::size_t h = 0; h < kCuttingParamCount; ++h) {
            s.min[h] = std::min(s.min[h], v[h]);
            s.max[h] = std::max(s.max[h], v[h]);
        }
    }
    for (std::size_t h = 0; h < kCuttingParamCount; ++h)
        if (!(s.max[h] > s.min[h]))
            throw ParameterError("ParamScaler: cutting parameter " + std::to_string(h) +
                                 " is constant over the training split; cannot scale");
    return s;
}

std::vector<double> ParamScaler::scale(const CuttingParams& params) const
{
    if (min.size() != kCuttingParamCount) throw SpecError("ParamScaler used before fitting");
    const auto v = params.as_array();
    std::vector<double> out(kCuttingParamCount);
    for (std::size_t h = 0; h < kCuttingParamCount; ++h) out[h] = (v[h] - min[h]) / (max[h] - min[h]);
    return out;
}

Tensor tile_params(std::span<const double> scaled, std::size_t length)
{
    if (scaled.empty()) throw SpecError("tile_params: no cutting parameters to tile (H = 0)");
    if (length == 0) throw ShapeError("tile_params: length must be positive");
    Tensor tiles({scaled.size(), length});
    for (std::size_t h = 0; h < scaled.size(); ++h) {
        if (!std::isfinite(scaled[h])) throw ParameterError("tile_params: non-finite cutting parameter");
        auto row = tiles.row(h);
        std::fill(row.begin(), row.end(), scaled[h]);
    }
    return tiles;
}

Tensor inject_and_concat(const Tensor& signal, const Tensor& tiles)
{
    require_rank(signal, 2, "inject_and_concat signal");
    if (tiles.empty()) return signal;
    require_rank(tiles, 2, "inject_and_concat tiles");
    if (tiles.dim(1) != signal.dim(1))
        throw ShapeError("inject_and_concat: parameter tiles have length " + std::to_string(tiles.dim(1)) +
                         ", signal has length " + std::to_string(signal.dim(1)));
    Tensor out({signal.dim(0) + tiles.dim(0), signal.dim(1)});
    std::copy(signal.data().begin(), signal.data().end(), out.data().begin());
    std::copy(tiles.data().begin(), tiles.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(signal.size()));
    return out;
}

ConditionedCnn::ConditionedCnn(ModelSpec spec)
    : spec_(spec)
{
    spec_.validate();
    std::size_t in = spec_.signal_channels;
    for (std::size_t u = 0; u < spec_.units; ++u) {
        const std::size_t f = spec_.filters(u);
        std::size_t c_in = in + spec_.injected_params();
        for (std::size_t c = 0; c < spec_.convs_per_unit; ++c) {
            const std::string prefix = "unit" + std::to_string(u + 1) + ".conv" + std::to_string(c + 1);
            params_.push_back({prefix + ".weight", Tensor({f, c_in, spec_.kernel})});
            params_.push_back({prefix + ".bias", Tensor({f})});
            c_in = f;
        }
        in = f;
    }
    params_.push_back({"dense.weight", Tensor({spec_.output_dim, in})});
    params_.push_back({"dense.bias", Tensor({spec_.output_dim})});
}

void ConditionedCnn::initialize(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    for (auto& p : params_) {
        auto& t = p.value;
        if (t.rank() == 1) {
            t.fill(0.0);
            continue;
        }
        double fan_in = 0.0, fan_out = 0.0;
        if (t.rank() == 3) {
            fan_in = static_cast<double>(t.dim(1) * t.dim(2));
            fan_out = static_cast<double>(t.dim(0) * t.dim(2));
        } else {
            fan_in = static_cast<double>(t.dim(1));
            fan_out = static_cast<double>(t.dim(0));
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& v : t.data()) v = dist(rng);
    }
}

std::vector<Tensor> ConditionedCnn::zero_grads() const
{
    std::vector<Tensor> grads;
    grads.reserve(params_.size());
    for (const auto& p : params_) grads.emplace_back(p.value.shape());
    return grads;
}

Tensor ConditionedCnn::forward(const Tensor& signal, std::span<const double> scaled_params, bool training,
                               std::mt19937_64* rng, Cache* cache) const
{
    require_rank(signal, 2, "network input");
    if (signal.dim(0) != spec_.signal_channels || signal.dim(1) != spec_.length)
        throw ShapeError("network input is " + shape_string(signal.shape()) + ", model expects [" +
                         std::to_string(spec_.signal_channels) + "x" + std::to_string(spec_.length) + "]");
    if (spec_.conditioned && scaled_params.size() != spec_.param_count)
        throw ShapeError("network expects " + std::to_string(spec_.param_count) + " cutting parameters, got " +
                         std::to_string(scaled_params.size()));
    if (training && spec_.dropout > 0.0 && rng == nullptr)
        throw ParameterError("training-mode forward needs a random generator for dropout");

    if (cache) {
        cache->units.assign(spec_.units, {});
    }
    Tensor x = signal;
    for (std::size_t u = 0; u < spec_.units; ++u) {
        Tensor in = spec_.conditioned ? inject_and_concat(x, tile_params(scaled_params, x.dim(1))) : std::move(x);
        for (std::size_t c = 0; c < spec_.convs_per_unit; ++c) {
            const auto idx = conv_index(u, c);
            Tensor pre = nn::conv1d_forward(in, params_[idx].value, params_[idx + 1].value);
            Tensor act = nn::relu(pre);
            if (cache) cache->units[u].convs.push_back({std::move(in), std::move(pre)});
            in = std::move(act);
        }
        auto pooled = nn::maxpool1d(in, spec_.pool);
        if (cache) {
            cache->units[u].pool_input = std::move(in);
            cache->units[u].argmax = std::move(pooled.argmax);
            cache->units[u].pool_output = pooled.output;
        }
        x = std::move(pooled.output);
    }
    Tensor gap = nn::global_avg_pool(x);
    std::mt19937_64 unused(0);
    auto drop = nn::dropout(gap, spec_.dropout, training, rng ? *rng : unused);
    Tensor out = nn::dense_forward(drop.output, params_[dense_index()].value, params_[dense_index() + 1].value);
    if (cache) {
        cache->gap_input = std::move(x);
        cache->dense_input = std::move(drop.output);
        cache->dropout_mask = std::move(drop.mask);
    }
    return out;
}

Tensor ConditionedCnn::predict(const Tensor& signal, std::span<const double> scaled_params) const
{
    return forward(signal, scaled_params, false, nullptr, nullptr);
}

void ConditionedCnn::backward(const Cache& cache, const Tensor& upstream, std::vector<Tensor>& grads,
                              Tensor* signal_grad) const
{
    if (grads.size() != params_.size()) throw ShapeError("backward: gradient buffer does not match parameters");
    auto accumulate = [](Tensor& into, const Tensor& part) {
        auto dst = into.data();
        const auto src = part.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };

    const auto di = dense_index();
    auto dense = nn::dense_backward(cache.dense_input, params_[di].value, upstream);
    accumulate(grads[di], dense.params[0]);
    accumulate(grads[di + 1], dense.params[1]);

    Tensor g = std::move(dense.input);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= cache.dropout_mask[i];
    g = nn::global_avg_pool_backward(cache.gap_input.shape(), g);

    for (std::size_t u = spec_.units; u-- > 0;) {
        const auto& uc = cache.units[u];
        nn::PoolResult pool{uc.pool_output, uc.argmax};
        g = nn::maxpool1d_backward(pool, uc.pool_input.shape(), g);
        for (std::size_t c = spec_.convs_per_unit; c-- > 0;) {
            const auto& cc = uc.convs[c];
            g = nn::relu_backward(cc.pre_activation, g);
            const auto idx = conv_index(u, c);
            auto conv = nn::conv1d_backward(cc.input, params_[idx].value, g);
            accumulate(grads[idx], conv.params[0]);
            accumulate(grads[idx + 1], conv.params[1]);
            g = std::move(conv.input);
        }
        if (spec_.conditioned) {
            const std::size_t keep = g.dim(0) - spec_.param_count;
            Tensor stripped({keep, g.dim(1)});
            std::copy(g.data().begin(), g.data().begin() + static_cast<std::ptrdiff_t>(stripped.size()),
                      stripped.data().begin());
            g = std::move(stripped);
        }
    }
    if (signal_grad) *signal_grad = std::move(g);
}

std::uint64_t ConditionedCnn::regime_fingerprint(const Cache& cache)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    for (const auto& uc : cache.units) {
        for (const auto& cc : uc.convs) {
            std::uint64_t word = 0;
            std::size_t bit = 0;
            for (double v : cc.pre_activation.data()) {
                word |= static_cast<std::uint64_t>(v > 0.0) << bit;
                if (++bit == 64) {
                    mix(word);
                    word = 0;
                    bit = 0;
                }
            }
            mix(word);
        }
        for (auto a : uc.argmax) mix(a);
    }
    return h;
}

} // namespace wearbench::model
