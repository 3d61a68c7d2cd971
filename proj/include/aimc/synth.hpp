#pragma once

#include <filesystem>

#include "aimc/dataset.hpp"

namespace aimc::data {

// Procedural oriented-grating classification task used for self-contained
// runs: class k is a sinusoidal grating at angle k * 180/num_classes degrees,
// with jittered orientation, frequency, phase, contrast and pixel noise.
// Images land in [0, 1] so they round-trip the byte formats.
struct SynthOptions {
    int num_classes = 10;
    std::int64_t height = 28;
    std::int64_t width = 28;
    std::int64_t channels = 1;
    double angle_jitter_deg = 7.0;
    double cycles = 2.6;           // grating cycles across the image
    double cycles_jitter = 0.18;   // relative
    double amp_lo = 0.16;
    double amp_hi = 0.30;
    double bias_lo = 0.40;
    double bias_hi = 0.58;
    double pixel_noise = 0.07;
};

Dataset make_synthetic(std::int64_t count, std::uint64_t seed, const SynthOptions& opt = {});

// Writes a synthetic train/test pair in IDX (grayscale) or CIFAR-10 binary
// (32x32 RGB) layout so the standard loaders exercise the real formats.
void write_synthetic_mnist(const std::filesystem::path& dir, std::int64_t train_count,
                           std::int64_t test_count, std::uint64_t seed,
                           const SynthOptions& opt = {});
void write_synthetic_cifar10(const std::filesystem::path& dir, std::int64_t train_count,
                             std::int64_t test_count, std::uint64_t seed);

}  // namespace aimc::data
