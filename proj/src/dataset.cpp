#include "aimc/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include <nlohmann/json.hpp>

#include "aimc/io.hpp"
#include "aimc/rng.hpp"

namespace aimc::data {

namespace fs = std::filesystem;
using nlohmann::json;

Tensor Dataset::sample(std::int64_t i) const { return batch(i, 1); }

Tensor Dataset::batch(std::int64_t start, std::int64_t count) const {
    const std::int64_t c = images.dim(1), h = images.dim(2), w = images.dim(3);
    const std::int64_t stride = c * h * w;
    Tensor out({count, c, h, w});
    std::memcpy(out.data(), images.data() + start * stride,
                static_cast<std::size_t>(count * stride) * sizeof(float));
    return out;
}

// --- CIFAR-10 ----------------------------------------------------------------

static constexpr std::size_t kCifarRecord = 3073;  // label byte + 3*1024 pixels

Dataset decode_cifar10(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (bytes.size() % kCifarRecord != 0)
        throw IngestionError(origin + ": truncated record at byte offset " +
                             std::to_string(bytes.size() - bytes.size() % kCifarRecord));
    const std::int64_t n = static_cast<std::int64_t>(bytes.size() / kCifarRecord);
    Dataset d;
    d.images = Tensor({n, 3, 32, 32});
    d.labels.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const std::uint8_t* rec = bytes.data() + static_cast<std::size_t>(i) * kCifarRecord;
        if (rec[0] > 9)
            throw IngestionError(origin + ": label " + std::to_string(rec[0]) +
                                 " out of range at byte offset " +
                                 std::to_string(static_cast<std::size_t>(i) * kCifarRecord));
        d.labels[static_cast<std::size_t>(i)] = rec[0];
        float* dst = d.images.data() + i * 3 * 1024;
        for (std::size_t p = 0; p < 3072; ++p)
            dst[p] = static_cast<float>(rec[1 + p]) / 255.0f;
    }
    return d;
}

std::vector<std::uint8_t> encode_cifar10(const Dataset& d) {
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(d.size()) * kCifarRecord);
    for (std::int64_t i = 0; i < d.size(); ++i) {
        out.push_back(static_cast<std::uint8_t>(d.labels[static_cast<std::size_t>(i)]));
        const float* src = d.images.data() + i * 3 * 1024;
        for (std::size_t p = 0; p < 3072; ++p) {
            const float v = src[p] * 255.0f;
            out.push_back(static_cast<std::uint8_t>(v + 0.5f));
        }
    }
    return out;
}

static Dataset concat(Dataset a, const Dataset& b) {
    if (a.size() == 0) return b;
    Tensor merged({a.size() + b.size(), a.images.dim(1), a.images.dim(2), a.images.dim(3)});
    std::memcpy(merged.data(), a.images.data(), static_cast<std::size_t>(a.images.numel()) * sizeof(float));
    std::memcpy(merged.data() + a.images.numel(), b.images.data(),
                static_cast<std::size_t>(b.images.numel()) * sizeof(float));
    a.images = std::move(merged);
    a.labels.insert(a.labels.end(), b.labels.begin(), b.labels.end());
    return a;
}

std::pair<Dataset, Dataset> load_cifar10(const fs::path& dir) {
    Dataset train;
    for (int b = 1; b <= 5; ++b) {
        const fs::path p = dir / ("data_batch_" + std::to_string(b) + ".bin");
        train = concat(std::move(train), decode_cifar10(io::read_file(p), p.string()));
    }
    const fs::path tp = dir / "test_batch.bin";
    Dataset test = decode_cifar10(io::read_file(tp), tp.string());
    return {std::move(train), std::move(test)};
}

void write_cifar10(const fs::path& dir, const Dataset& train, const Dataset& test) {
    fs::create_directories(dir);
    const std::int64_t per = (train.size() + 4) / 5;
    for (int b = 0; b < 5; ++b) {
        const std::int64_t start = b * per;
        const std::int64_t count = std::min<std::int64_t>(per, train.size() - start);
        Dataset chunk;
        chunk.images = train.batch(start, count);
        chunk.labels.assign(train.labels.begin() + start, train.labels.begin() + start + count);
        auto bytes = encode_cifar10(chunk);
        io::write_file(dir / ("data_batch_" + std::to_string(b + 1) + ".bin"), bytes.data(), bytes.size());
    }
    auto bytes = encode_cifar10(test);
    io::write_file(dir / "test_batch.bin", bytes.data(), bytes.size());
}

// --- IDX ----------------------------------------------------------------------

static std::uint32_t read_be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

static void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

Dataset load_idx(const fs::path& images, const fs::path& labels) {
    auto ib = io::read_file(images);
    auto lb = io::read_file(labels);
    if (ib.size() < 16 || read_be32(ib.data()) != 0x803)
        throw IngestionError(images.string() + ": bad IDX image magic");
    if (lb.size() < 8 || read_be32(lb.data()) != 0x801)
        throw IngestionError(labels.string() + ": bad IDX label magic");
    const std::int64_t n = read_be32(ib.data() + 4);
    const std::int64_t h = read_be32(ib.data() + 8);
    const std::int64_t w = read_be32(ib.data() + 12);
    if (ib.size() != 16 + static_cast<std::size_t>(n * h * w))
        throw IngestionError(images.string() + ": truncated at byte offset " + std::to_string(ib.size()));
    if (static_cast<std::int64_t>(read_be32(lb.data() + 4)) != n)
        throw IngestionError(labels.string() + ": label count mismatch");
    Dataset d;
    d.images = Tensor({n, 1, h, w});
    d.labels.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n * h * w; ++i)
        d.images[i] = static_cast<float>(ib[16 + static_cast<std::size_t>(i)]) / 255.0f;
    for (std::int64_t i = 0; i < n; ++i) d.labels[static_cast<std::size_t>(i)] = lb[8 + static_cast<std::size_t>(i)];
    return d;
}

void write_idx_images(const fs::path& p, const Dataset& d) {
    std::vector<std::uint8_t> out;
    append_be32(out, 0x803);
    append_be32(out, static_cast<std::uint32_t>(d.size()));
    append_be32(out, static_cast<std::uint32_t>(d.images.dim(2)));
    append_be32(out, static_cast<std::uint32_t>(d.images.dim(3)));
    for (std::int64_t i = 0; i < d.images.numel(); ++i)
        out.push_back(static_cast<std::uint8_t>(d.images[i] * 255.0f + 0.5f));
    io::write_file(p, out.data(), out.size());
}

void write_idx_labels(const fs::path& p, const Dataset& d) {
    std::vector<std::uint8_t> out;
    append_be32(out, 0x801);
    append_be32(out, static_cast<std::uint32_t>(d.size()));
    for (int y : d.labels) out.push_back(static_cast<std::uint8_t>(y));
    io::write_file(p, out.data(), out.size());
}

std::pair<Dataset, Dataset> load_mnist(const fs::path& dir) {
    return {load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"),
            load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte")};
}

// --- transforms ----------------------------------------------------------------

NormStats compute_norm_stats(const Dataset& train) {
    const std::int64_t c = train.images.dim(1);
    const std::int64_t per = train.images.dim(2) * train.images.dim(3);
    NormStats s;
    s.mean.resize(static_cast<std::size_t>(c));
    s.std.resize(static_cast<std::size_t>(c));
    for (std::int64_t ch = 0; ch < c; ++ch) {
        double sum = 0.0, sq = 0.0;
        std::int64_t count = 0;
        for (std::int64_t i = 0; i < train.size(); ++i) {
            const float* px = train.images.data() + (i * c + ch) * per;
            for (std::int64_t p = 0; p < per; ++p) {
                sum += px[p];
                sq += static_cast<double>(px[p]) * px[p];
                ++count;
            }
        }
        const double mean = sum / static_cast<double>(count);
        const double var = sq / static_cast<double>(count) - mean * mean;
        s.mean[static_cast<std::size_t>(ch)] = static_cast<float>(mean);
        s.std[static_cast<std::size_t>(ch)] = static_cast<float>(std::sqrt(std::max(var, 1e-12)));
    }
    return s;
}

Dataset subset(const Dataset& d, const std::vector<std::int64_t>& indices) {
    const std::int64_t c = d.images.dim(1), h = d.images.dim(2), w = d.images.dim(3);
    const std::int64_t stride = c * h * w;
    Dataset out;
    out.num_classes = d.num_classes;
    out.images = Tensor({static_cast<std::int64_t>(indices.size()), c, h, w});
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::memcpy(out.images.data() + static_cast<std::int64_t>(i) * stride,
                    d.images.data() + indices[i] * stride,
                    static_cast<std::size_t>(stride) * sizeof(float));
        out.labels[i] = d.labels[static_cast<std::size_t>(indices[i])];
    }
    return out;
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> split_indices(
    std::int64_t n, std::int64_t val_count, std::uint64_t seed) {
    if (val_count < 0 || val_count > n) throw ArgumentError("val_count out of range");
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(key_combine(seed, 0xda7a5e7ULL));
    for (std::int64_t i = n - 1; i > 0; --i)
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);
    std::vector<std::int64_t> val(idx.begin(), idx.begin() + val_count);
    std::vector<std::int64_t> train(idx.begin() + val_count, idx.end());
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    return {std::move(train), std::move(val)};
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& train, std::int64_t val_count,
                                            std::uint64_t seed) {
    auto [ti, vi] = split_indices(train.size(), val_count, seed);
    return {subset(train, ti), subset(train, vi)};
}

std::vector<std::int64_t> balanced_subset_indices(const Dataset& d, std::int64_t per_class,
                                                  std::uint64_t seed) {
    if (per_class < 0) throw ArgumentError("per_class must be non-negative");
    std::vector<std::vector<std::int64_t>> byclass(static_cast<std::size_t>(d.num_classes));
    for (std::int64_t i = 0; i < d.size(); ++i)
        byclass[static_cast<std::size_t>(d.labels[static_cast<std::size_t>(i)])].push_back(i);
    std::vector<std::int64_t> out;
    for (int c = 0; c < d.num_classes; ++c) {
        auto& pool = byclass[static_cast<std::size_t>(c)];
        if (static_cast<std::int64_t>(pool.size()) < per_class)
            throw ArgumentError("class " + std::to_string(c) + " has only " +
                                std::to_string(pool.size()) + " samples; per_class=" +
                                std::to_string(per_class));
        Rng rng(key_combine(seed, 0xba1a9cedULL, static_cast<std::uint64_t>(c)));
        for (std::size_t i = pool.size() - 1; i > 0; --i)
            std::swap(pool[i], pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);
        out.insert(out.end(), pool.begin(), pool.begin() + per_class);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Dataset balanced_subset(const Dataset& d, std::int64_t per_class, std::uint64_t seed) {
    return subset(d, balanced_subset_indices(d, per_class, seed));
}

void save_subset_indices(const fs::path& p, const std::vector<std::int64_t>& idx) {
    json j;
    j["indices"] = idx;
    io::write_text(p, j.dump(2) + "\n");
}

std::vector<std::int64_t> load_subset_indices(const fs::path& p) {
    json j = json::parse(io::read_text(p));
    return j.at("indices").get<std::vector<std::int64_t>>();
}

Dataset interleave(const Dataset& clean, const Dataset& adversarial) {
    if (clean.size() != adversarial.size())
        throw ArgumentError("interleave requires index-aligned sets of equal length");
    const std::int64_t c = clean.images.numel() == 0 ? 0 : clean.images.dim(1);
    const std::int64_t h = clean.images.numel() == 0 ? 0 : clean.images.dim(2);
    const std::int64_t w = clean.images.numel() == 0 ? 0 : clean.images.dim(3);
    const std::int64_t stride = c * h * w;
    Dataset out;
    out.num_classes = clean.num_classes;
    out.images = Tensor({2 * clean.size(), c, h, w});
    out.labels.resize(static_cast<std::size_t>(2 * clean.size()));
    for (std::int64_t i = 0; i < clean.size(); ++i) {
        std::memcpy(out.images.data() + (2 * i) * stride, clean.images.data() + i * stride,
                    static_cast<std::size_t>(stride) * sizeof(float));
        std::memcpy(out.images.data() + (2 * i + 1) * stride, adversarial.images.data() + i * stride,
                    static_cast<std::size_t>(stride) * sizeof(float));
        out.labels[static_cast<std::size_t>(2 * i)] = clean.labels[static_cast<std::size_t>(i)];
        out.labels[static_cast<std::size_t>(2 * i + 1)] = adversarial.labels[static_cast<std::size_t>(i)];
    }
    return out;
}

}  // namespace aimc::data
