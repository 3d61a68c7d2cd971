#pragma once

#include <array>
#include <mutex>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "aimc/tensor.hpp"

namespace aimc::tile {

struct TileConfig {
    int rows = 256;
    int cols = 256;
    double g_max = 160.0;     // uS
    double adc_unit = 0.115;  // uS per ADC count; domain unit of the read-noise table
    int converter_bits = 8;   // 0 -> ideal (no DAC/ADC quantization)
    double out_range = 10.0;  // normalized output units spanned by the ADC
};

struct Poly3 {
    std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};
    double operator()(double x) const { return c[0] + x * (c[1] + x * (c[2] + x * c[3])); }
    bool is_zero() const { return c[0] == 0 && c[1] == 0 && c[2] == 0 && c[3] == 0; }
};

// Piecewise-linear table, clamped at both ends. Breakpoints must be strictly
// increasing.
struct Lut {
    std::vector<double> x;
    std::vector<double> y;

    double operator()(double q) const;
    static Lut constant(double v);
    template <typename F>
    static Lut tabulate(F f, double lo, double hi, int points) {
        Lut l;
        l.x.resize(static_cast<std::size_t>(points));
        l.y.resize(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
            const double q = lo + (hi - lo) * i / (points - 1);
            l.x[static_cast<std::size_t>(i)] = q;
            l.y[static_cast<std::size_t>(i)] = f(q);
        }
        return l;
    }
};

enum class NoiseLocation { Weight, Output };
enum class Recurrence { Recurrent, NonRecurrent };

// Stochastic sources of the crossbar model. Conventions:
//  - programming (weight, non-recurrent): mean/std third-order polynomials in
//    normalized conductance |g|/g_max, results scaled by g_max;
//  - read (weight, recurrent): std table over conductance in ADC units, values
//    in uS, evaluated at the programmed conductance and scaled by the drift
//    ratio;
//  - output (recurrent or non-recurrent): additive per-column Gaussian with a
//    fixed std in normalized output units, independent of column conductance.
struct NoiseModel {
    Poly3 prog_mean{};
    Poly3 prog_std{{0.0, 0.08, 0.0, 0.0}};
    Lut read_std;
    double output_std = 0.08;
    bool weight_nonrecurrent = true;
    bool weight_recurrent = true;
    bool output_recurrent = true;
    bool output_nonrecurrent = false;

    static NoiseModel chip_default(const TileConfig& cfg);
    static NoiseModel all_off();
    bool deterministic() const {
        return !weight_nonrecurrent && !weight_recurrent && !output_recurrent &&
               !output_nonrecurrent;
    }

    nlohmann::json to_json() const;
    static NoiseModel from_json(const nlohmann::json& j);
};

// Exactly one stochastic source active at the given magnitude. Weight
// magnitudes are multiplicative stds relative to the stored conductance;
// output magnitudes are additive stds in normalized output units.
NoiseModel isolate_source(const NoiseModel& base, const TileConfig& cfg, NoiseLocation loc,
                          Recurrence rec, double magnitude);

// Power-law conductance decay G(t) = G0 * (t/t0)^-nu with per-device nu drawn
// from tables over normalized conductance.
struct DriftModel {
    Lut nu_mean = Lut::constant(0.06);
    Lut nu_std = Lut::constant(0.02);
    double t0 = 25.0;  // seconds; reference read time after programming
    bool enabled = false;

    nlohmann::json to_json() const;
    static DriftModel from_json(const nlohmann::json& j);
};

struct DrawCounts {
    std::uint64_t programming = 0;
    std::uint64_t drift_exponent = 0;
    std::uint64_t read = 0;
    std::uint64_t output = 0;
    std::uint64_t total() const { return programming + drift_exponent + read + output; }
};

// One crossbar with its mapped weights, stochastic state and converter chain.
// Signed weights are represented as one effective signed conductance per unit
// cell (the differential device pair is absorbed into the mapping), so the
// physical per-device bound [0, g_max] appears here as |g| <= g_max.
class Tile {
public:
    Tile(TileConfig cfg, NoiseModel noise, DriftModel drift, std::uint64_t rng_key);

    // Per-column scale = max |w[:, c]| (1 for all-zero columns); conductances
    // are the scaled weights mapped linearly onto [-g_max, g_max].
    void set_weights(const Tensor& w);
    // Inverse of the mapping applied to g_target; recovers w when noise is off.
    Tensor unmap_target() const;
    Tensor programmed_weights() const;  // g_programmed unmapped through column scales

    void program();
    bool programmed() const { return programmed_; }

    void set_input_scale(double s);
    double input_scale() const { return input_scale_; }

    void set_elapsed(double seconds);  // study time since programming
    double elapsed() const { return elapsed_; }

    // G(t_abs) and the per-device ratio G(t_abs)/g_programmed used to scale
    // read noise. t_abs is absolute time with t_abs = t0 meaning "just read".
    void drifted_conductance(double t_abs, std::vector<double>& g_out,
                             std::vector<double>& ratio_out) const;

    // One stochastic realization of an MVM call.
    struct CallSample {
        Tensor w_eff_norm;              // rows x cols, normalized conductance in [-1, 1] plus read noise
        Tensor w_eff;                   // rows x cols, weight units (w_eff_norm * col_scale)
        std::vector<float> out_offset;  // per column, normalized output units
    };
    CallSample sample_call(std::uint64_t minibatch_id) const;

    // Full converter pipeline, inputs in layer units: [batch x rows] -> [batch x cols].
    Tensor mvm(const Tensor& x, std::uint64_t minibatch_id) const;

    // Tile-boundary form used by probing: DAC-domain inputs in [-1, 1] map to
    // post-ADC outputs in normalized units (no input scaling, no column rescale).
    Tensor mvm_normalized(const Tensor& x_hat, std::uint64_t minibatch_id) const;

    const TileConfig& config() const { return cfg_; }
    const NoiseModel& noise() const { return noise_; }
    const DriftModel& drift() const { return drift_; }
    const std::vector<double>& col_scales() const { return col_scale_; }
    const std::vector<double>& g_target() const { return g_target_; }
    const std::vector<double>& g_programmed() const { return g_programmed_; }
    DrawCounts draw_counts() const;

    double dac_step() const;  // in normalized input units
    double adc_step() const;  // in normalized output units

private:
    void apply_noise_and_quantize(const Tensor& x_hat_q, std::uint64_t minibatch_id,
                                  Tensor& out_norm) const;
    std::vector<float> output_offsets(std::uint64_t minibatch_id) const;
    void effective_norm_weights(std::uint64_t minibatch_id, std::vector<double>& out) const;

    TileConfig cfg_;
    NoiseModel noise_;
    DriftModel drift_;
    std::uint64_t rng_key_;

    std::vector<double> g_target_;      // rows*cols, uS, signed
    std::vector<double> g_programmed_;  // rows*cols, uS, signed
    std::vector<double> nu_;            // rows*cols drift exponents
    std::vector<double> col_scale_;     // cols
    std::vector<float> fixed_out_offset_;  // per column, sampled once at programming
    double input_scale_ = 1.0;
    double elapsed_ = 0.0;
    bool weights_set_ = false;
    bool programmed_ = false;

    mutable std::mutex mu_;
    mutable DrawCounts draws_;
    mutable std::unordered_map<std::uint64_t, std::uint32_t> call_seq_;
};

}  // namespace aimc::tile
