#include "aimc/tile.hpp"

#include <algorithm>
#include <cmath>

#include "aimc/ops.hpp"
#include "aimc/rng.hpp"

namespace aimc::tile {

using nlohmann::json;

namespace {
constexpr std::uint64_t kTagProgram = 0x700911;
constexpr std::uint64_t kTagNu = 0xd217f7;
constexpr std::uint64_t kTagRead = 0x9ead;
constexpr std::uint64_t kTagOutRec = 0x0127ec;
constexpr std::uint64_t kTagOutFix = 0x0127f1;
}  // namespace

double Lut::operator()(double q) const {
    if (x.empty()) return 0.0;
    if (q <= x.front()) return y.front();
    if (q >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), q);
    const std::size_t hi = static_cast<std::size_t>(it - x.begin());
    const std::size_t lo = hi - 1;
    const double t = (q - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + t * (y[hi] - y[lo]);
}

Lut Lut::constant(double v) {
    Lut l;
    l.x = {0.0, 1.0};
    l.y = {v, v};
    return l;
}

NoiseModel NoiseModel::chip_default(const TileConfig& cfg) {
    NoiseModel m;
    m.prog_mean = Poly3{};
    m.prog_std = Poly3{{0.0, 0.08, 0.0, 0.0}};
    // std = 0.03 * sqrt(G/g_max) * g_max, tabulated over conductance in ADC units
    const double g_max = cfg.g_max, unit = cfg.adc_unit;
    m.read_std = Lut::tabulate(
        [g_max, unit](double q_adc) { return 0.03 * std::sqrt(q_adc * unit / g_max) * g_max; },
        0.0, cfg.g_max / cfg.adc_unit, 33);
    m.output_std = 0.08;
    m.weight_nonrecurrent = true;
    m.weight_recurrent = true;
    m.output_recurrent = true;
    m.output_nonrecurrent = false;
    return m;
}

NoiseModel NoiseModel::all_off() {
    NoiseModel m;
    m.prog_mean = Poly3{};
    m.prog_std = Poly3{};
    m.read_std = Lut::constant(0.0);
    m.output_std = 0.0;
    m.weight_nonrecurrent = false;
    m.weight_recurrent = false;
    m.output_recurrent = false;
    m.output_nonrecurrent = false;
    return m;
}

json NoiseModel::to_json() const {
    json j;
    j["prog_mean_poly"] = prog_mean.c;
    j["prog_std_poly"] = prog_std.c;
    j["read_std_lut"] = {{"x", read_std.x}, {"y", read_std.y}};
    j["output_std"] = output_std;
    j["weight_nonrecurrent"] = weight_nonrecurrent;
    j["weight_recurrent"] = weight_recurrent;
    j["output_recurrent"] = output_recurrent;
    j["output_nonrecurrent"] = output_nonrecurrent;
    return j;
}

NoiseModel NoiseModel::from_json(const json& j) {
    NoiseModel m;
    m.prog_mean.c = j.at("prog_mean_poly").get<std::array<double, 4>>();
    m.prog_std.c = j.at("prog_std_poly").get<std::array<double, 4>>();
    m.read_std.x = j.at("read_std_lut").at("x").get<std::vector<double>>();
    m.read_std.y = j.at("read_std_lut").at("y").get<std::vector<double>>();
    m.output_std = j.at("output_std").get<double>();
    m.weight_nonrecurrent = j.at("weight_nonrecurrent").get<bool>();
    m.weight_recurrent = j.at("weight_recurrent").get<bool>();
    m.output_recurrent = j.at("output_recurrent").get<bool>();
    m.output_nonrecurrent = j.at("output_nonrecurrent").get<bool>();
    return m;
}

json DriftModel::to_json() const {
    json j;
    j["nu_mean_lut"] = {{"x", nu_mean.x}, {"y", nu_mean.y}};
    j["nu_std_lut"] = {{"x", nu_std.x}, {"y", nu_std.y}};
    j["t0"] = t0;
    j["enabled"] = enabled;
    return j;
}

DriftModel DriftModel::from_json(const json& j) {
    DriftModel d;
    d.nu_mean.x = j.at("nu_mean_lut").at("x").get<std::vector<double>>();
    d.nu_mean.y = j.at("nu_mean_lut").at("y").get<std::vector<double>>();
    d.nu_std.x = j.at("nu_std_lut").at("x").get<std::vector<double>>();
    d.nu_std.y = j.at("nu_std_lut").at("y").get<std::vector<double>>();
    d.t0 = j.at("t0").get<double>();
    d.enabled = j.at("enabled").get<bool>();
    return d;
}

NoiseModel isolate_source(const NoiseModel& base, const TileConfig& cfg, NoiseLocation loc,
                          Recurrence rec, double magnitude) {
    if (magnitude < 0.0) throw ArgumentError("noise magnitude must be >= 0");
    NoiseModel m = base;
    m.weight_nonrecurrent = false;
    m.weight_recurrent = false;
    m.output_recurrent = false;
    m.output_nonrecurrent = false;
    m.prog_mean = Poly3{};
    m.prog_std = Poly3{};
    m.read_std = Lut::constant(0.0);
    m.output_std = 0.0;
    if (magnitude == 0.0) return m;  // fully deterministic platform
    if (loc == NoiseLocation::Weight) {
        if (rec == Recurrence::NonRecurrent) {
            m.weight_nonrecurrent = true;
            m.prog_std = Poly3{{0.0, magnitude, 0.0, 0.0}};  // std = magnitude * |g|
        } else {
            m.weight_recurrent = true;
            // multiplicative std as a table over conductance in ADC units;
            // linear, so piecewise interpolation is exact
            const double unit = cfg.adc_unit;
            m.read_std = Lut::tabulate([magnitude, unit](double q_adc) { return magnitude * q_adc * unit; },
                                       0.0, cfg.g_max / cfg.adc_unit, 2);
        }
    } else {
        m.output_std = magnitude;
        if (rec == Recurrence::Recurrent)
            m.output_recurrent = true;
        else
            m.output_nonrecurrent = true;
    }
    return m;
}

Tile::Tile(TileConfig cfg, NoiseModel noise, DriftModel drift, std::uint64_t rng_key)
    : cfg_(cfg), noise_(std::move(noise)), drift_(std::move(drift)), rng_key_(rng_key) {
    if (cfg_.rows < 1 || cfg_.cols < 1) throw ArgumentError("tile extents must be >= 1");
    if (cfg_.g_max <= 0.0 || cfg_.adc_unit <= 0.0) throw ArgumentError("g_max and adc_unit must be > 0");
}

void Tile::set_weights(const Tensor& w) {
    if (w.rank() != 2 || w.dim(0) != cfg_.rows || w.dim(1) != cfg_.cols)
        throw DimensionError("weight block " + w.shape_str() + " does not match tile " +
                             std::to_string(cfg_.rows) + "x" + std::to_string(cfg_.cols));
    if (!w.all_finite()) throw ArgumentError("non-finite weights cannot be mapped");
    const std::int64_t rows = cfg_.rows, cols = cfg_.cols;
    col_scale_.assign(static_cast<std::size_t>(cols), 0.0);
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c)
            col_scale_[static_cast<std::size_t>(c)] =
                std::max(col_scale_[static_cast<std::size_t>(c)], std::abs(static_cast<double>(w.at(r, c))));
    for (auto& s : col_scale_)
        if (s == 0.0) s = 1.0;
    g_target_.assign(static_cast<std::size_t>(rows * cols), 0.0);
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c)
            g_target_[static_cast<std::size_t>(r * cols + c)] =
                static_cast<double>(w.at(r, c)) / col_scale_[static_cast<std::size_t>(c)] * cfg_.g_max;
    weights_set_ = true;
    programmed_ = false;
}

Tensor Tile::unmap_target() const {
    if (!weights_set_) throw StateError("tile has no weights");
    Tensor w({cfg_.rows, cfg_.cols});
    for (std::int64_t r = 0; r < cfg_.rows; ++r)
        for (std::int64_t c = 0; c < cfg_.cols; ++c)
            w.at(r, c) = static_cast<float>(g_target_[static_cast<std::size_t>(r * cfg_.cols + c)] /
                                            cfg_.g_max * col_scale_[static_cast<std::size_t>(c)]);
    return w;
}

Tensor Tile::programmed_weights() const {
    if (!programmed_) throw StateError("tile not programmed");
    Tensor w({cfg_.rows, cfg_.cols});
    for (std::int64_t r = 0; r < cfg_.rows; ++r)
        for (std::int64_t c = 0; c < cfg_.cols; ++c)
            w.at(r, c) = static_cast<float>(g_programmed_[static_cast<std::size_t>(r * cfg_.cols + c)] /
                                            cfg_.g_max * col_scale_[static_cast<std::size_t>(c)]);
    return w;
}

void Tile::program() {
    if (!weights_set_) throw StateError("set_weights must run before program");
    const std::size_t n = g_target_.size();
    g_programmed_.resize(n);
    if (noise_.weight_nonrecurrent) {
        Rng rng(key_combine(rng_key_, kTagProgram));
        for (std::size_t i = 0; i < n; ++i) {
            const double ghat = std::abs(g_target_[i]) / cfg_.g_max;
            const double mean = noise_.prog_mean(ghat) * cfg_.g_max;
            const double std = std::max(0.0, noise_.prog_std(ghat) * cfg_.g_max);
            const double g = g_target_[i] + mean + rng.normal(0.0, 1.0) * std;
            g_programmed_[i] = std::clamp(g, -cfg_.g_max, cfg_.g_max);
        }
        std::lock_guard<std::mutex> lk(mu_);
        draws_.programming += n;
    } else {
        g_programmed_ = g_target_;
    }
    nu_.assign(n, 0.0);
    if (drift_.enabled) {
        Rng rng(key_combine(rng_key_, kTagNu));
        for (std::size_t i = 0; i < n; ++i) {
            const double ghat = std::abs(g_programmed_[i]) / cfg_.g_max;
            nu_[i] = std::max(0.0, rng.normal(drift_.nu_mean(ghat), drift_.nu_std(ghat)));
        }
        std::lock_guard<std::mutex> lk(mu_);
        draws_.drift_exponent += n;
    }
    fixed_out_offset_.assign(static_cast<std::size_t>(cfg_.cols), 0.0f);
    if (noise_.output_nonrecurrent && noise_.output_std > 0.0) {
        Rng rng(key_combine(rng_key_, kTagOutFix));
        for (auto& v : fixed_out_offset_) v = static_cast<float>(rng.normal(0.0, noise_.output_std));
        std::lock_guard<std::mutex> lk(mu_);
        draws_.output += fixed_out_offset_.size();
    }
    elapsed_ = 0.0;
    programmed_ = true;
}

void Tile::set_input_scale(double s) {
    if (!(s > 0.0)) throw ArgumentError("input scale must be > 0");
    input_scale_ = s;
}

void Tile::set_elapsed(double seconds) {
    if (seconds < 0.0) throw ArgumentError("elapsed time must be >= 0");
    elapsed_ = seconds;
}

void Tile::drifted_conductance(double t_abs, std::vector<double>& g_out,
                               std::vector<double>& ratio_out) const {
    if (!programmed_) throw StateError("tile not programmed");
    if (t_abs < drift_.t0) throw ArgumentError("drift evaluation requires t >= t0");
    const std::size_t n = g_programmed_.size();
    g_out.resize(n);
    ratio_out.resize(n);
    if (!drift_.enabled) {
        g_out = g_programmed_;
        std::fill(ratio_out.begin(), ratio_out.end(), 1.0);
        return;
    }
    const double tr = t_abs / drift_.t0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ratio = std::pow(tr, -nu_[i]);
        ratio_out[i] = ratio;
        g_out[i] = g_programmed_[i] * ratio;
    }
}

double Tile::dac_step() const {
    if (cfg_.converter_bits <= 0) return 0.0;
    return 1.0 / ((1 << (cfg_.converter_bits - 1)) - 1);
}

double Tile::adc_step() const {
    if (cfg_.converter_bits <= 0) return 0.0;
    return cfg_.out_range / ((1 << (cfg_.converter_bits - 1)) - 1);
}

void Tile::effective_norm_weights(std::uint64_t minibatch_id, std::vector<double>& out) const {
    const std::size_t n = g_programmed_.size();
    std::vector<double> g(n), ratio(n);
    drifted_conductance(drift_.t0 + elapsed_, g, ratio);
    out.resize(n);
    if (noise_.weight_recurrent) {
        std::uint32_t seq;
        {
            std::lock_guard<std::mutex> lk(mu_);
            seq = call_seq_[minibatch_id]++;
            draws_.read += n;
        }
        Rng rng(key_combine(rng_key_, kTagRead, minibatch_id, seq));
        for (std::size_t i = 0; i < n; ++i) {
            const double g_adc = std::abs(g_programmed_[i]) / cfg_.adc_unit;
            const double std_us = std::max(0.0, noise_.read_std(g_adc)) * ratio[i];
            out[i] = (g[i] + rng.normal(0.0, 1.0) * std_us) / cfg_.g_max;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = g[i] / cfg_.g_max;
    }
}

std::vector<float> Tile::output_offsets(std::uint64_t minibatch_id) const {
    std::vector<float> off(static_cast<std::size_t>(cfg_.cols), 0.0f);
    if (noise_.output_recurrent && noise_.output_std > 0.0) {
        Rng rng(key_combine(rng_key_, kTagOutRec, minibatch_id));
        for (auto& v : off) v = static_cast<float>(rng.normal(0.0, noise_.output_std));
        std::lock_guard<std::mutex> lk(mu_);
        draws_.output += off.size();
    }
    if (noise_.output_nonrecurrent)
        for (std::size_t c = 0; c < off.size(); ++c) off[c] += fixed_out_offset_[c];
    return off;
}

Tile::CallSample Tile::sample_call(std::uint64_t minibatch_id) const {
    if (!programmed_) throw StateError("unprogrammed tile");
    CallSample s;
    std::vector<double> eff;
    effective_norm_weights(minibatch_id, eff);
    s.w_eff_norm = Tensor({cfg_.rows, cfg_.cols});
    s.w_eff = Tensor({cfg_.rows, cfg_.cols});
    for (std::int64_t r = 0; r < cfg_.rows; ++r)
        for (std::int64_t c = 0; c < cfg_.cols; ++c) {
            const double norm = eff[static_cast<std::size_t>(r * cfg_.cols + c)];
            s.w_eff_norm.at(r, c) = static_cast<float>(norm);
            s.w_eff.at(r, c) = static_cast<float>(norm * col_scale_[static_cast<std::size_t>(c)]);
        }
    s.out_offset = output_offsets(minibatch_id);
    return s;
}

Tensor Tile::mvm(const Tensor& x, std::uint64_t minibatch_id) const {
    if (!programmed_) throw StateError("unprogrammed tile");
    if (x.rank() != 2 || x.dim(1) != cfg_.rows)
        throw DimensionError("mvm input " + x.shape_str() + " does not match tile rows");
    const CallSample s = sample_call(minibatch_id);
    const std::int64_t batch = x.dim(0), rows = cfg_.rows, cols = cfg_.cols;
    Tensor out({batch, cols});
    if (cfg_.converter_bits <= 0) {
        // ideal converters: plain product with the effective weights plus the
        // output offset expressed in layer units
        ops::matmul_kernel(x.data(), s.w_eff.data(), out.data(), batch, rows, cols);
        for (std::int64_t b = 0; b < batch; ++b)
            for (std::int64_t c = 0; c < cols; ++c)
                out.at(b, c) += static_cast<float>(
                    s.out_offset[static_cast<std::size_t>(c)] * input_scale_ *
                    col_scale_[static_cast<std::size_t>(c)]);
        return out;
    }
    const int levels = (1 << (cfg_.converter_bits - 1)) - 1;
    const double adc = adc_step();
    std::vector<double> xq(static_cast<std::size_t>(rows));
    std::vector<double> acc(static_cast<std::size_t>(cols));
    for (std::int64_t b = 0; b < batch; ++b) {
        const float* xrow = x.data() + b * rows;
        for (std::int64_t r = 0; r < rows; ++r) {
            const double xh = std::clamp(static_cast<double>(xrow[r]) / input_scale_, -1.0, 1.0);
            xq[static_cast<std::size_t>(r)] = std::nearbyint(xh * levels) / levels;
        }
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::int64_t r = 0; r < rows; ++r) {
            const double xv = xq[static_cast<std::size_t>(r)];
            if (xv == 0.0) continue;
            const float* wrow = s.w_eff_norm.data() + r * cols;
            for (std::int64_t c = 0; c < cols; ++c) acc[static_cast<std::size_t>(c)] += xv * wrow[c];
        }
        for (std::int64_t c = 0; c < cols; ++c) {
            const double noisy = acc[static_cast<std::size_t>(c)] + s.out_offset[static_cast<std::size_t>(c)];
            const double quant = ops::quantize_symmetric(noisy, adc, levels);
            out.at(b, c) = static_cast<float>(quant * input_scale_ * col_scale_[static_cast<std::size_t>(c)]);
        }
    }
    return out;
}

Tensor Tile::mvm_normalized(const Tensor& x_hat, std::uint64_t minibatch_id) const {
    if (!programmed_) throw StateError("unprogrammed tile");
    if (x_hat.rank() != 2 || x_hat.dim(1) != cfg_.rows)
        throw DimensionError("probe input " + x_hat.shape_str() + " does not match tile rows");
    const CallSample s = sample_call(minibatch_id);
    const std::int64_t batch = x_hat.dim(0), rows = cfg_.rows, cols = cfg_.cols;
    const bool ideal = cfg_.converter_bits <= 0;
    const int levels = ideal ? 0 : (1 << (cfg_.converter_bits - 1)) - 1;
    const double adc = adc_step();
    Tensor out({batch, cols});
    std::vector<double> acc(static_cast<std::size_t>(cols));
    for (std::int64_t b = 0; b < batch; ++b) {
        const float* xrow = x_hat.data() + b * rows;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::int64_t r = 0; r < rows; ++r) {
            double xv = std::clamp(static_cast<double>(xrow[r]), -1.0, 1.0);
            if (!ideal) xv = std::nearbyint(xv * levels) / levels;
            if (xv == 0.0) continue;
            const float* wrow = s.w_eff_norm.data() + r * cols;
            for (std::int64_t c = 0; c < cols; ++c) acc[static_cast<std::size_t>(c)] += xv * wrow[c];
        }
        for (std::int64_t c = 0; c < cols; ++c) {
            double v = acc[static_cast<std::size_t>(c)] + s.out_offset[static_cast<std::size_t>(c)];
            if (!ideal) v = ops::quantize_symmetric(v, adc, levels);
            out.at(b, c) = static_cast<float>(v);
        }
    }
    return out;
}

DrawCounts Tile::draw_counts() const {
    std::lock_guard<std::mutex> lk(mu_);
    return draws_;
}

}  // namespace aimc::tile
