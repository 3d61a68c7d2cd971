#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aimc/dataset.hpp"
#include "aimc/tensor.hpp"

namespace aimc::net {

// Desk-scale CNN: conv3x3 -> relu -> pool2 -> conv3x3 -> relu -> pool2 ->
// dense -> relu -> dense. Convs are stride 1, pad 1.
struct NetworkSpec {
    std::int64_t in_channels = 1;
    std::int64_t image_h = 28;
    std::int64_t image_w = 28;
    int num_classes = 10;
    std::int64_t conv1_ch = 8;
    std::int64_t conv2_ch = 12;
    std::int64_t hidden = 32;
    data::NormStats norm;  // train-split statistics, applied as the first layer

    std::int64_t pooled_h() const { return image_h / 4; }
    std::int64_t pooled_w() const { return image_w / 4; }
    std::int64_t flat_dim() const { return conv2_ch * pooled_h() * pooled_w(); }

    nlohmann::json to_json() const;
    static NetworkSpec from_json(const nlohmann::json& j);
};

// Parameter container. Serializes to a flat little-endian float32 blob plus a
// JSON manifest listing (name, shape, offset) per entry.
struct Weights {
    Tensor conv1_w, conv1_b;  // [O,C,3,3], [O]
    Tensor conv2_w, conv2_b;
    Tensor fc1_w, fc1_b;  // [in, out], [out]
    Tensor fc2_w, fc2_b;

    static Weights init(const NetworkSpec& spec, std::uint64_t seed);

    std::vector<std::pair<std::string, Tensor*>> entries();
    std::vector<std::pair<std::string, const Tensor*>> entries() const;

    void save(const std::filesystem::path& bin, const std::filesystem::path& manifest) const;
    static Weights load(const std::filesystem::path& bin, const std::filesystem::path& manifest);

    std::uint64_t content_hash() const;
};

}  // namespace aimc::net
