#include "aimc/network.hpp"

#include <cmath>

#include "aimc/io.hpp"
#include "aimc/rng.hpp"

namespace aimc::net {

using nlohmann::json;

json NetworkSpec::to_json() const {
    json j;
    j["in_channels"] = in_channels;
    j["image_h"] = image_h;
    j["image_w"] = image_w;
    j["num_classes"] = num_classes;
    j["conv1_ch"] = conv1_ch;
    j["conv2_ch"] = conv2_ch;
    j["hidden"] = hidden;
    j["norm_mean"] = norm.mean;
    j["norm_std"] = norm.std;
    return j;
}

NetworkSpec NetworkSpec::from_json(const json& j) {
    NetworkSpec s;
    s.in_channels = j.at("in_channels").get<std::int64_t>();
    s.image_h = j.at("image_h").get<std::int64_t>();
    s.image_w = j.at("image_w").get<std::int64_t>();
    s.num_classes = j.at("num_classes").get<int>();
    s.conv1_ch = j.at("conv1_ch").get<std::int64_t>();
    s.conv2_ch = j.at("conv2_ch").get<std::int64_t>();
    s.hidden = j.at("hidden").get<std::int64_t>();
    s.norm.mean = j.at("norm_mean").get<std::vector<float>>();
    s.norm.std = j.at("norm_std").get<std::vector<float>>();
    return s;
}

static void fill_normal(Tensor& t, Rng& rng, double std) {
    for (auto& v : t.vec()) v = static_cast<float>(rng.normal(0.0, std));
}

Weights Weights::init(const NetworkSpec& spec, std::uint64_t seed) {
    Weights w;
    Rng rng(key_combine(seed, 0x1417ULL));
    w.conv1_w = Tensor({spec.conv1_ch, spec.in_channels, 3, 3});
    fill_normal(w.conv1_w, rng, std::sqrt(2.0 / static_cast<double>(spec.in_channels * 9)));
    w.conv1_b = Tensor({spec.conv1_ch});
    w.conv2_w = Tensor({spec.conv2_ch, spec.conv1_ch, 3, 3});
    fill_normal(w.conv2_w, rng, std::sqrt(2.0 / static_cast<double>(spec.conv1_ch * 9)));
    w.conv2_b = Tensor({spec.conv2_ch});
    w.fc1_w = Tensor({spec.flat_dim(), spec.hidden});
    fill_normal(w.fc1_w, rng, std::sqrt(2.0 / static_cast<double>(spec.flat_dim())));
    w.fc1_b = Tensor({spec.hidden});
    w.fc2_w = Tensor({spec.hidden, spec.num_classes});
    fill_normal(w.fc2_w, rng, std::sqrt(1.0 / static_cast<double>(spec.hidden)));
    w.fc2_b = Tensor({spec.num_classes});
    return w;
}

std::vector<std::pair<std::string, Tensor*>> Weights::entries() {
    return {{"conv1_w", &conv1_w}, {"conv1_b", &conv1_b}, {"conv2_w", &conv2_w},
            {"conv2_b", &conv2_b}, {"fc1_w", &fc1_w},     {"fc1_b", &fc1_b},
            {"fc2_w", &fc2_w},     {"fc2_b", &fc2_b}};
}

std::vector<std::pair<std::string, const Tensor*>> Weights::entries() const {
    return {{"conv1_w", &conv1_w}, {"conv1_b", &conv1_b}, {"conv2_w", &conv2_w},
            {"conv2_b", &conv2_b}, {"fc1_w", &fc1_w},     {"fc1_b", &fc1_b},
            {"fc2_w", &fc2_w},     {"fc2_b", &fc2_b}};
}

void Weights::save(const std::filesystem::path& bin, const std::filesystem::path& manifest) const {
    std::vector<std::uint8_t> blob;
    json entries_json = json::array();
    for (const auto& [name, t] : entries()) {
        json e;
        e["name"] = name;
        e["shape"] = t->shape();
        e["offset"] = blob.size();
        entries_json.push_back(e);
        for (std::int64_t i = 0; i < t->numel(); ++i) io::append_f32(blob, (*t)[i]);
    }
    io::write_file(bin, blob.data(), blob.size());
    json m;
    m["format"] = "flat-f32-le";
    m["entries"] = entries_json;
    m["content_hash"] = io::hex64(io::fnv1a(blob.data(), blob.size()));
    io::write_text(manifest, m.dump(2) + "\n");
}

Weights Weights::load(const std::filesystem::path& bin, const std::filesystem::path& manifest) {
    auto blob = io::read_file(bin);
    json m = json::parse(io::read_text(manifest));
    Weights w;
    auto targets = w.entries();
    for (const auto& e : m.at("entries")) {
        const std::string name = e.at("name").get<std::string>();
        const auto shape = e.at("shape").get<std::vector<std::int64_t>>();
        const std::size_t offset = e.at("offset").get<std::size_t>();
        Tensor t(shape);
        if (offset + static_cast<std::size_t>(t.numel()) * 4 > blob.size())
            throw IngestionError(bin.string() + ": entry " + name + " exceeds blob at offset " +
                                 std::to_string(offset));
        for (std::int64_t i = 0; i < t.numel(); ++i)
            t[i] = io::read_f32_le(blob.data() + offset + static_cast<std::size_t>(i) * 4);
        bool found = false;
        for (auto& [tname, ptr] : targets)
            if (tname == name) {
                *ptr = std::move(t);
                found = true;
                break;
            }
        if (!found) throw IngestionError("unknown weight entry " + name);
    }
    return w;
}

std::uint64_t Weights::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [name, t] : entries()) {
        h = io::fnv1a(name.data(), name.size(), h);
        h = io::fnv1a(t->data(), static_cast<std::size_t>(t->numel()) * sizeof(float), h);
    }
    return h;
}

}  // namespace aimc::net
