#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aimc/dataset.hpp"
#include "aimc/network.hpp"
#include "aimc/ops.hpp"
#include "aimc/tape.hpp"
#include "aimc/tile.hpp"

namespace aimc::platform {

enum class Kind { Fp32, HwaFp32, Digital, AimcModel, AimcChipInstance };

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& s);
bool is_stochastic(Kind k);
bool is_analog(Kind k);

struct TrainHyper {
    int epochs = 30;
    double lr = 0.1;
    double momentum = 0.7;
    int batch = 128;
    std::uint64_t seed = 1;
};

struct TrainLog {
    std::vector<double> epoch_loss;
    std::vector<double> val_acc;
    double best_val_acc = 0.0;
    int best_epoch = -1;
};

net::Weights train_fp32(const net::NetworkSpec& spec, const data::Dataset& train,
                        const data::Dataset& val, const TrainHyper& hyper,
                        TrainLog* log = nullptr);

struct HwaHyper {
    int epochs = 10;
    double lr = 0.02;
    double momentum = 0.7;
    int batch = 128;
    double noise_std = 0.08;  // multiplicative Gaussian on unit weights, per forward pass
    std::uint64_t seed = 2;
};

net::Weights hwa_retrain(const net::NetworkSpec& spec, net::Weights init,
                         const data::Dataset& train, const data::Dataset& val,
                         const HwaHyper& hyper, TrainLog* log = nullptr);

// Fixed-point parameters for the deterministic digital platform: channel-wise
// symmetric weights, per-tensor activation scales captured on a calibration set.
struct PtqParams {
    int weight_bits = 4;
    int act_bits = 8;
    std::vector<std::vector<float>> weight_scales;  // [layer][out_channel]
    std::vector<float> act_scales;                  // one per mapped layer input
    bool valid() const { return weight_scales.size() == 4 && act_scales.size() == 4; }

    nlohmann::json to_json() const;
    static PtqParams from_json(const nlohmann::json& j);
};

PtqParams ptq_calibrate(const net::NetworkSpec& spec, const net::Weights& w,
                        const data::Dataset& calib, int weight_bits = 4, int act_bits = 8);

struct DeployOptions {
    tile::TileConfig tile_cfg;
    tile::NoiseModel noise;
    tile::DriftModel drift;
    PtqParams ptq;                           // required for Kind::Digital
    const data::Dataset* calibration = nullptr;  // input-range calibration for analog kinds
    int calib_samples = 512;

    DeployOptions() { noise = tile::NoiseModel::chip_default(tile_cfg); }
};

// Per-call capture of mapped-layer boundary values, for the in-the-loop module.
struct ActivationCache {
    struct LayerIo {
        Tensor input;   // tile-path input matrix [P x in_dim] (pre-quantization)
        Tensor output;  // mapped matmul result [P x out_dim] (post rescale, pre bias)
    };
    std::vector<LayerIo> layers;
    Tensor logits;
    bool complete = false;
};

class DeployedNetwork {
public:
    Kind kind() const { return kind_; }
    const net::NetworkSpec& spec() const { return spec_; }
    const net::Weights& weights() const { return weights_; }
    std::uint64_t deployment_seed() const { return seed_; }
    bool deterministic() const;

    // Logits for pixel-space inputs [N, C, H, W] in [0, 1]. Normalization is
    // the first (floating-point) layer of the graph.
    Tensor predict(const Tensor& x, std::uint64_t minibatch_id) const;
    Tensor predict_cached(const Tensor& x, std::uint64_t minibatch_id, ActivationCache& cache) const;

    // Builds the platform's forward graph on the tape; returns the logits node.
    NodeId build_forward(Tape& t, NodeId x, std::uint64_t minibatch_id,
                         ActivationCache* cache = nullptr) const;

    // d(mean CE)/dx for true labels y; flows through this call's noise draws.
    Tensor input_gradient(const Tensor& x, const std::vector<int>& y,
                          std::uint64_t minibatch_id) const;

    // Analog state control (no-ops on digital kinds).
    void set_elapsed(double seconds);
    void advance_elapsed(double dt);
    double elapsed() const { return elapsed_; }

    int num_mapped_layers() const { return 4; }
    int tiles_in_layer(int layer) const;
    tile::Tile& analog_tile(int layer, int index);
    const tile::Tile& analog_tile(int layer, int index) const;
    const PtqParams& ptq() const { return ptq_; }

    nlohmann::json deployment_manifest() const;

private:
    friend DeployedNetwork deploy(const net::NetworkSpec&, const net::Weights&, Kind,
                                  std::uint64_t, const DeployOptions&);

    struct MappedLayer {
        std::int64_t in_dim = 0;
        std::int64_t out_dim = 0;
        // row/column tiling over the layer weight matrix; empty on digital kinds
        std::vector<std::int64_t> row_starts, row_sizes;
        std::vector<std::int64_t> col_starts, col_sizes;
        std::vector<std::unique_ptr<tile::Tile>> tiles;  // row-major over (row block, col block)
    };

    NodeId mapped_matmul(Tape& t, int layer, NodeId xmat, std::uint64_t minibatch_id,
                         ActivationCache* cache) const;
    const Tensor& layer_weight_matrix(int layer) const;
    void build_analog_layers(const DeployOptions& opt);
    void calibrate_input_scales(const data::Dataset& calib, int samples);

    Kind kind_ = Kind::Fp32;
    net::NetworkSpec spec_;
    net::Weights weights_;
    std::uint64_t seed_ = 0;
    PtqParams ptq_;
    Tensor fc_w1mat_, fc_w2mat_;      // dense weight matrices (shared layout helpers)
    Tensor conv1_mat_, conv2_mat_;    // conv weights as [C*k*k, O]
    Tensor digital_w_[4];             // quantized weight matrices for Kind::Digital
    std::vector<MappedLayer> analog_;
    double elapsed_ = 0.0;
};

DeployedNetwork deploy(const net::NetworkSpec& spec, const net::Weights& w, Kind kind,
                       std::uint64_t seed, const DeployOptions& opt);

// Classification accuracy under the platform's noise draws; minibatch ids are
// derived from eval_seed and the batch index.
double accuracy(const DeployedNetwork& net, const data::Dataset& d, int batch,
                std::uint64_t eval_seed);

}  // namespace aimc::platform
