#include "aimc/synth.hpp"

#include <algorithm>
#include <cmath>

#include "aimc/rng.hpp"

namespace aimc::data {

static constexpr double kPi = 3.14159265358979323846;

Dataset make_synthetic(std::int64_t count, std::uint64_t seed, const SynthOptions& opt) {
    Dataset d;
    d.num_classes = opt.num_classes;
    d.images = Tensor({count, opt.channels, opt.height, opt.width});
    d.labels.resize(static_cast<std::size_t>(count));
    const double span = std::max(opt.height, opt.width) - 1.0;
    for (std::int64_t i = 0; i < count; ++i) {
        Rng rng(key_combine(seed, 0x5e11f1e1dULL, static_cast<std::uint64_t>(i)));
        const int label = rng.uniform_int(0, opt.num_classes - 1);
        d.labels[static_cast<std::size_t>(i)] = label;
        const double theta = (180.0 / opt.num_classes * label +
                              rng.uniform(-opt.angle_jitter_deg, opt.angle_jitter_deg)) *
                             kPi / 180.0;
        const double freq = opt.cycles * (1.0 + rng.uniform(-opt.cycles_jitter, opt.cycles_jitter));
        const double phase = rng.uniform(0.0, 2.0 * kPi);
        const double amp = rng.uniform(opt.amp_lo, opt.amp_hi);
        const double bias = rng.uniform(opt.bias_lo, opt.bias_hi);
        const double ct = std::cos(theta), st = std::sin(theta);
        for (std::int64_t ch = 0; ch < opt.channels; ++ch) {
            const double gain = opt.channels == 1 ? 1.0 : rng.uniform(0.85, 1.0);
            for (std::int64_t y = 0; y < opt.height; ++y)
                for (std::int64_t x = 0; x < opt.width; ++x) {
                    const double u = (x * ct + y * st) / span;
                    double v = bias + gain * amp * std::sin(2.0 * kPi * freq * u + phase) +
                               rng.normal(0.0, opt.pixel_noise);
                    d.images.at4(i, ch, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
        }
    }
    return d;
}

void write_synthetic_mnist(const std::filesystem::path& dir, std::int64_t train_count,
                           std::int64_t test_count, std::uint64_t seed, const SynthOptions& opt) {
    Dataset train = make_synthetic(train_count, key_combine(seed, 1), opt);
    Dataset test = make_synthetic(test_count, key_combine(seed, 2), opt);
    std::filesystem::create_directories(dir);
    write_idx_images(dir / "train-images-idx3-ubyte", train);
    write_idx_labels(dir / "train-labels-idx1-ubyte", train);
    write_idx_images(dir / "t10k-images-idx3-ubyte", test);
    write_idx_labels(dir / "t10k-labels-idx1-ubyte", test);
}

void write_synthetic_cifar10(const std::filesystem::path& dir, std::int64_t train_count,
                             std::int64_t test_count, std::uint64_t seed) {
    SynthOptions opt;
    opt.height = 32;
    opt.width = 32;
    opt.channels = 3;
    Dataset train = make_synthetic(train_count, key_combine(seed, 1), opt);
    Dataset test = make_synthetic(test_count, key_combine(seed, 2), opt);
    write_cifar10(dir, train, test);
}

}  // namespace aimc::data
