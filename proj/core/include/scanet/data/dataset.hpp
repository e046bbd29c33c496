#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "scanet/data/augment.hpp"

namespace scanet::data {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PairDescriptor {
  std::string id;  // shared file name
  std::filesystem::path noisy;
  std::filesystem::path clean;
};

struct PairScan {
  std::vector<PairDescriptor> pairs;  // sorted by id
  std::vector<std::string> warnings;  // one per orphan file
};

/// Matches root/noisy/*.png with root/clean/*.png by file name. Orphans are skipped with a
/// warning; no matched pairs is an error.
[[nodiscard]] PairScan scan_pair_dir(const std::filesystem::path& root);

[[nodiscard]] ImagePair load_pair(const PairDescriptor& d);
[[nodiscard]] std::vector<ImagePair> load_pairs(const std::vector<PairDescriptor>& descriptors);

/// Procedural clean image in [0.05, 0.95]: a per-channel linear ramp plus a few flat-colored
/// rectangles and discs. Pure function of (seed, index).
[[nodiscard]] Tensor synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed,
                                     std::uint64_t index);

/// `count` synthetic clean images; noisy is a copy of clean (noise is added on the fly).
[[nodiscard]] std::vector<ImagePair> synthetic_pairs(std::size_t count, std::size_t size,
                                                     std::uint64_t seed);

}  // namespace scanet::data
