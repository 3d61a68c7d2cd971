#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "aimc/tensor.hpp"

namespace aimc::data {

// Images are NCHW float32 in [0, 1]; labels are class indices.
struct Dataset {
    Tensor images;
    std::vector<int> labels;
    int num_classes = 10;

    std::int64_t size() const { return images.numel() == 0 ? 0 : images.dim(0); }

    Tensor sample(std::int64_t i) const;
    Tensor batch(std::int64_t start, std::int64_t count) const;
};

struct NormStats {
    std::vector<float> mean;
    std::vector<float> std;
};

// --- CIFAR-10 binary batches (3073-byte records) -----------------------------

std::pair<Dataset, Dataset> load_cifar10(const std::filesystem::path& dir);
std::vector<std::uint8_t> encode_cifar10(const Dataset& d);
Dataset decode_cifar10(const std::vector<std::uint8_t>& bytes, const std::string& origin);
void write_cifar10(const std::filesystem::path& dir, const Dataset& train, const Dataset& test);

// --- IDX (MNIST-style) --------------------------------------------------------

std::pair<Dataset, Dataset> load_mnist(const std::filesystem::path& dir);
void write_idx_images(const std::filesystem::path& p, const Dataset& d);
void write_idx_labels(const std::filesystem::path& p, const Dataset& d);
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// --- transforms ---------------------------------------------------------------

// Per-channel statistics over the given (training) split.
NormStats compute_norm_stats(const Dataset& train);

Dataset subset(const Dataset& d, const std::vector<std::int64_t>& indices);

// Seed-deterministic disjoint exhaustive split; second member has val_count samples.
std::pair<Dataset, Dataset> split_train_val(const Dataset& train, std::int64_t val_count,
                                            std::uint64_t seed);
std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> split_indices(
    std::int64_t n, std::int64_t val_count, std::uint64_t seed);

// Exactly per_class samples of each class, seed-deterministic.
std::vector<std::int64_t> balanced_subset_indices(const Dataset& d, std::int64_t per_class,
                                                  std::uint64_t seed);
Dataset balanced_subset(const Dataset& d, std::int64_t per_class, std::uint64_t seed);

void save_subset_indices(const std::filesystem::path& p, const std::vector<std::int64_t>& idx);
std::vector<std::int64_t> load_subset_indices(const std::filesystem::path& p);

// Alternating presentation sequence [c0, a0, c1, a1, ...]; labels repeat per pair.
Dataset interleave(const Dataset& clean, const Dataset& adversarial);

}  // namespace aimc::data
