#include "scanet/arch/config.hpp"

#include <algorithm>

#include "json_io.hpp"

namespace scanet {

namespace jsonio {
void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed,
                    std::string_view where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}
}  // namespace jsonio

namespace cam {

void to_json(json& j, const CamConfig& c) {
  j = json{{"sparse_ratio", c.sparse_ratio}, {"sa_kernel", c.sa_kernel},
           {"ca_reduction", c.ca_reduction}, {"cheap_kernel", c.cheap_kernel},
           {"enable_dense", c.enable_dense}, {"enable_sparse", c.enable_sparse}};
}

void from_json(const json& j, CamConfig& c) {
  jsonio::reject_unknown(j, {"sparse_ratio", "sa_kernel", "ca_reduction", "cheap_kernel",
                             "enable_dense", "enable_sparse"}, "cam");
  c.sparse_ratio = j.value("sparse_ratio", c.sparse_ratio);
  c.sa_kernel = j.value("sa_kernel", c.sa_kernel);
  c.ca_reduction = j.value("ca_reduction", c.ca_reduction);
  c.cheap_kernel = j.value("cheap_kernel", c.cheap_kernel);
  c.enable_dense = j.value("enable_dense", c.enable_dense);
  c.enable_sparse = j.value("enable_sparse", c.enable_sparse);
}

}  // namespace cam

namespace arch {

std::string_view to_string(Structure s) { return s == Structure::unet ? "unet" : "cascade"; }

Structure parse_structure(std::string_view name) {
  if (name == "unet") return Structure::unet;
  if (name == "cascade") return Structure::cascade;
  throw std::invalid_argument("unknown structure '" + std::string(name) + "' (unet|cascade)");
}

void NetworkConfig::validate() const {
  if (base_channels == 0 || num_scales == 0) {
    throw std::invalid_argument("NetworkConfig: base_channels and num_scales must be >= 1");
  }
  if (num_scales > 8) throw std::invalid_argument("NetworkConfig: num_scales must be <= 8");
  const std::size_t scales = structure == Structure::unet ? num_scales : 1;
  for (std::size_t s = 0; s < scales; ++s) cam.with_channels(channels_at(s)).validate();
  // The gradient branch always runs at base_channels.
  cam.with_channels(base_channels).validate();
}

void to_json(json& j, const NetworkConfig& c) {
  j = json{{"base_channels", c.base_channels},
           {"num_scales", c.num_scales},
           {"cams_per_stage", c.cams_per_stage},
           {"cam", c.cam},
           {"enable_grad_branch", c.enable_grad_branch},
           {"grad_branch_blocks", c.grad_branch_blocks},
           {"structure", std::string(to_string(c.structure))},
           {"cascade_depth", c.cascade_depth}};
}

void from_json(const json& j, NetworkConfig& c) {
  jsonio::reject_unknown(j, {"base_channels", "num_scales", "cams_per_stage", "cam",
                             "enable_grad_branch", "grad_branch_blocks", "structure",
                             "cascade_depth"}, "network");
  c.base_channels = j.value("base_channels", c.base_channels);
  c.num_scales = j.value("num_scales", c.num_scales);
  c.cams_per_stage = j.value("cams_per_stage", c.cams_per_stage);
  if (j.contains("cam")) from_json(j.at("cam"), c.cam);
  c.enable_grad_branch = j.value("enable_grad_branch", c.enable_grad_branch);
  c.grad_branch_blocks = j.value("grad_branch_blocks", c.grad_branch_blocks);
  if (j.contains("structure")) c.structure = parse_structure(j.at("structure").get<std::string>());
  c.cascade_depth = j.value("cascade_depth", c.cascade_depth);
}

std::string to_text(const NetworkConfig& cfg) { return json(cfg).dump(2) + "\n"; }

NetworkConfig network_config_from_text(std::string_view text) {
  NetworkConfig cfg;
  try {
    from_json(json::parse(text), cfg);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("network config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace arch
}  // namespace scanet
