#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "scanet/cam/cam.hpp"

namespace scanet::arch {

enum class Structure { unet, cascade };

[[nodiscard]] std::string_view to_string(Structure s);
/// Throws std::invalid_argument for names other than "unet" / "cascade".
[[nodiscard]] Structure parse_structure(std::string_view name);

/// Every architectural free parameter of the network. Channels double at each UNet scale.
struct NetworkConfig {
  std::size_t base_channels = 32;
  std::size_t num_scales = 3;
  std::size_t cams_per_stage = 2;
  /// Template for every CAM block; `channels` is overwritten per scale.
  cam::CamConfig cam;
  bool enable_grad_branch = true;
  std::size_t grad_branch_blocks = 3;
  Structure structure = Structure::unet;
  std::size_t cascade_depth = 6;

  void validate() const;
  [[nodiscard]] std::size_t channels_at(std::size_t scale) const {
    return base_channels << scale;
  }
  /// Input height and width must be multiples of this.
  [[nodiscard]] std::size_t size_multiple() const {
    return structure == Structure::unet ? std::size_t{1} << (num_scales - 1) : 1;
  }
  /// Number of pixel-branch features handed to the gradient branch.
  [[nodiscard]] std::size_t skip_feature_count() const {
    if (structure == Structure::unet) return num_scales;
    return cascade_depth == 0 ? 1 : cascade_depth;
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Canonical text form (sorted-key JSON); round-trips exactly.
[[nodiscard]] std::string to_text(const NetworkConfig& cfg);
[[nodiscard]] NetworkConfig network_config_from_text(std::string_view text);

}  // namespace scanet::arch
