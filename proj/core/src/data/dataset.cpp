#include "scanet/data/dataset.hpp"

#include <algorithm>
#include <map>

#include "scanet/data/image_io.hpp"
#include "scanet/tensor/random.hpp"

namespace scanet::data {

namespace fs = std::filesystem;

namespace {

std::map<std::string, fs::path> list_pngs(const fs::path& dir) {
  std::map<std::string, fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files.emplace(entry.path().filename().string(), entry.path());
  }
  return files;
}

}  // namespace

PairScan scan_pair_dir(const fs::path& root) {
  const auto noisy = list_pngs(root / "noisy");
  const auto clean = list_pngs(root / "clean");
  PairScan scan;
  for (const auto& [name, path] : noisy) {
    const auto it = clean.find(name);
    if (it == clean.end()) {
      scan.warnings.push_back("noisy/" + name + " has no clean counterpart; skipped");
    } else {
      scan.pairs.push_back({name, path, it->second});
    }
  }
  for (const auto& [name, path] : clean) {
    if (!noisy.count(name)) scan.warnings.push_back("clean/" + name + " has no noisy counterpart; skipped");
  }
  if (scan.pairs.empty()) {
    throw DatasetError("empty dataset: no matching PNG pairs under " + (root / "noisy").string() +
                       " and " + (root / "clean").string());
  }
  return scan;
}

ImagePair load_pair(const PairDescriptor& d) {
  ImagePair p{load_image(d.noisy), load_image(d.clean), d.id};
  if (p.noisy.shape() != p.clean.shape()) {
    throw DatasetError("pair '" + d.id + "': noisy " + p.noisy.shape().to_string() +
                       " and clean " + p.clean.shape().to_string() + " differ in size");
  }
  return p;
}

std::vector<ImagePair> load_pairs(const std::vector<PairDescriptor>& descriptors) {
  std::vector<ImagePair> out;
  out.reserve(descriptors.size());
  for (const auto& d : descriptors) out.push_back(load_pair(d));
  return out;
}

Tensor synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed, std::uint64_t index) {
  random::Stream rng(seed, random::mix(random::hash_name("synthetic"), index));
  const std::size_t plane = height * width;
  std::vector<float> data(3 * plane);
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  for (std::size_t c = 0; c < 3; ++c) {
    const double base = 0.2 + 0.6 * rng.uniform();
    const double gy = (rng.uniform() - 0.5) * 0.6;
    const double gx = (rng.uniform() - 0.5) * 0.6;
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        data[c * plane + y * width + x] =
            static_cast<float>(base + gy * (double(y) / h - 0.5) + gx * (double(x) / w - 0.5));
      }
    }
  }
  const std::size_t shapes = 2 + rng.below(4);
  for (std::size_t k = 0; k < shapes; ++k) {
    const bool disc = rng.coin();
    const double cy = rng.uniform() * h;
    const double cx = rng.uniform() * w;
    const double ry = (0.1 + 0.25 * rng.uniform()) * h;
    const double rx = (0.1 + 0.25 * rng.uniform()) * w;
    float color[3];
    for (float& v : color) v = static_cast<float>(0.1 + 0.8 * rng.uniform());
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double dy = (double(y) + 0.5 - cy) / ry;
        const double dx = (double(x) + 0.5 - cx) / rx;
        const bool inside = disc ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
        if (!inside) continue;
        for (std::size_t c = 0; c < 3; ++c) data[c * plane + y * width + x] = color[c];
      }
    }
  }
  for (float& v : data) v = std::clamp(v, 0.05f, 0.95f);
  return Tensor::from_data(Shape{1, 3, height, width}, std::move(data));
}

std::vector<ImagePair> synthetic_pairs(std::size_t count, std::size_t size, std::uint64_t seed) {
  std::vector<ImagePair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Tensor clean = synthetic_image(size, size, seed, i);
    out.push_back({clean.clone(), clean, "synthetic_" + std::to_string(i)});
  }
  return out;
}

}  // namespace scanet::data
