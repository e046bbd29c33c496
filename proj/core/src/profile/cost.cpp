#include "scanet/profile/cost.hpp"

#include <cstdio>
#include <ostream>
#include <string>

#include "scanet/nn/conv.hpp"

namespace scanet::profile {

using nn::conv_geometry;
using nn::ConvGeometry;

namespace {

// Mirrors the forward pass of arch::ScaNet layer by layer, tracking shapes only.
class Walker {
 public:
  Walker(const arch::NetworkConfig& cfg, CostReport& report) : cfg_(cfg), report_(report) {}

  Shape conv(const std::string& name, const ConvGeometry& g, const Shape& in) {
    const Shape out = g.output_shape(in);
    report_.rows.push_back({name, out, g.param_count(), g.macs(out)});
    report_.total_macs += report_.rows.back().macs;
    report_.total_params += report_.rows.back().params;
    return out;
  }

  Shape cam_block(const std::string& prefix, const Shape& x) {
    const std::size_t c = x.c;
    const cam::CamConfig& k = cfg_.cam;
    if (k.enable_dense) {
      const std::string d = prefix + ".dense";
      const Shape u = conv(d + ".conv2", conv_geometry(c, c, 3), conv(d + ".conv1", conv_geometry(c, c, 3), x));
      conv(d + ".sa", conv_geometry(2, 1, k.sa_kernel), Shape{u.n, 2, u.h, u.w});
      const Shape squeezed = conv(d + ".ca_squeeze", conv_geometry(c, c / k.ca_reduction, 1), Shape{u.n, c, 1, 1});
      conv(d + ".ca_excite", conv_geometry(c / k.ca_reduction, c, 1), squeezed);
      conv(d + ".fuse", conv_geometry(2 * c, c, 1), Shape{u.n, 2 * c, u.h, u.w});
    }
    if (k.enable_sparse) sparse_module(prefix + ".sparse", x, c, k.sparse_ratio, k.cheap_kernel);
    return x;
  }

  Shape sparse_module(const std::string& prefix, const Shape& x, std::size_t out, std::size_t s,
                      std::size_t d) {
    const std::size_t intrinsic = out / (s + 1);
    const Shape p = conv(prefix + ".primary", conv_geometry(x.c, intrinsic, 3), x);
    for (std::size_t j = 1; j <= s; ++j) {
      conv(prefix + ".cheap" + std::to_string(j), conv_geometry(intrinsic, intrinsic, d, 1, intrinsic), p);
    }
    return Shape{x.n, intrinsic * (s + 1), x.h, x.w};
  }

  Shape stage(const std::string& prefix, Shape x) {
    for (std::size_t k = 0; k < cfg_.cams_per_stage; ++k) x = cam_block(prefix + ".cam" + std::to_string(k), x);
    return x;
  }

  void network(std::size_t h, std::size_t w) {
    const bool branch = cfg_.enable_grad_branch;
    const std::size_t c0 = cfg_.base_channels;
    const Shape image{1, 3, h, w};
    Shape x;
    if (cfg_.structure == arch::Structure::unet) {
      const std::size_t S = cfg_.num_scales;
      x = conv("pixel.head", conv_geometry(3, c0, 3), image);
      std::vector<Shape> encoded;
      for (std::size_t i = 0; i + 1 < S; ++i) {
        x = stage("pixel.enc" + std::to_string(i), x);
        encoded.push_back(x);
        x = conv("pixel.down" + std::to_string(i), conv_geometry(x.c, 2 * x.c, 3, 2), x);
      }
      x = stage("pixel.mid", x);
      if (branch) conv("pixel.tap" + std::to_string(S - 1), conv_geometry(x.c, c0, 1), x);
      for (std::size_t i = S - 1; i-- > 0;) {
        const std::string idx = std::to_string(i);
        const Shape enlarged{x.n, x.c, 2 * x.h, 2 * x.w};
        x = conv("pixel.up" + idx, conv_geometry(x.c, x.c / 2, 3), enlarged);
        x = conv("pixel.merge" + idx, conv_geometry(2 * x.c, x.c, 1), Shape{x.n, 2 * x.c, x.h, x.w});
        x = stage("pixel.dec" + idx, x);
        if (branch) conv("pixel.tap" + idx, conv_geometry(x.c, c0, 1), x);
      }
    } else {
      x = conv("cascade.head", conv_geometry(3, c0, 3), image);
      for (std::size_t b = 0; b < cfg_.cascade_depth; ++b) x = cam_block("cascade.block" + std::to_string(b), x);
    }
    if (branch) {
      Shape g = conv("grad.head", conv_geometry(1, c0, 3), Shape{1, 1, h, w});
      for (std::size_t t = 0; t < cfg_.grad_branch_blocks; ++t) {
        const std::string idx = std::to_string(t);
        g = conv("grad.fuse" + idx, conv_geometry(2 * c0, c0, 1), Shape{1, 2 * c0, h, w});
        g = cam_block("grad.cam" + idx, g);
      }
      conv("grad.out", conv_geometry(c0, 1, 1), g);
      x = conv("fusion.grad", conv_geometry(2 * c0, c0, 1), Shape{1, 2 * c0, h, w});
    }
    conv(cfg_.structure == arch::Structure::unet ? "pixel.tail" : "cascade.tail", conv_geometry(c0, 3, 3), x);
  }

 private:
  const arch::NetworkConfig& cfg_;
  CostReport& report_;
};

}  // namespace

CostReport count_costs(const arch::NetworkConfig& cfg, std::size_t height, std::size_t width) {
  cfg.validate();
  const std::size_t m = cfg.size_multiple();
  if (height == 0 || width == 0 || height % m != 0 || width % m != 0) {
    throw std::invalid_argument("count_costs: input " + std::to_string(height) + "x" +
                                std::to_string(width) + " must be a positive multiple of " +
                                std::to_string(m));
  }
  CostReport report;
  report.height = height;
  report.width = width;
  Walker(cfg, report).network(height, width);
  return report;
}

SparseCostComparison sparse_vs_standard(std::size_t in_channels, std::size_t out_channels,
                                        std::size_t sparse_ratio, std::size_t cheap_kernel,
                                        std::size_t kernel, std::size_t height, std::size_t width) {
  if (sparse_ratio == 0 || out_channels % (sparse_ratio + 1) != 0) {
    throw std::invalid_argument("sparse_vs_standard: out_channels must be divisible by s + 1");
  }
  const Shape out{1, out_channels, height, width};
  const std::size_t intrinsic = out_channels / (sparse_ratio + 1);
  const Shape part{1, intrinsic, height, width};
  SparseCostComparison r;
  r.standard_macs = conv_geometry(in_channels, out_channels, kernel).macs(out);
  r.sparse_macs = conv_geometry(in_channels, intrinsic, kernel).macs(part) +
                  sparse_ratio * conv_geometry(intrinsic, intrinsic, cheap_kernel, 1, intrinsic).macs(part);
  return r;
}

void CostReport::print(std::ostream& out) const {
  char buf[160];
  out << "# cost report at " << height << "x" << width
      << " (MACs: conv layers only, H_out*W_out*C_out*C_in/groups*k^2; bias, pooling,\n"
         "# activations and elementwise ops count 0; FLOPs = 2*MACs)\n";
  std::snprintf(buf, sizeof buf, "%-36s %-18s %12s %16s\n", "layer", "output", "params", "MACs");
  out << buf;
  for (const auto& r : rows) {
    const std::string shape = std::to_string(r.output.c) + "x" + std::to_string(r.output.h) + "x" +
                              std::to_string(r.output.w);
    std::snprintf(buf, sizeof buf, "%-36s %-18s %12llu %16llu\n", r.name.c_str(), shape.c_str(),
                  static_cast<unsigned long long>(r.params), static_cast<unsigned long long>(r.macs));
    out << buf;
  }
  std::snprintf(buf, sizeof buf,
                "total: %zu layers, %llu params, %llu MACs (%.4f GMAC), %llu FLOPs (%.4f GFLOPs)\n",
                rows.size(), static_cast<unsigned long long>(total_params),
                static_cast<unsigned long long>(total_macs), double(total_macs) * 1e-9,
                static_cast<unsigned long long>(flops()), double(flops()) * 1e-9);
  out << buf;
}

void CostReport::write_csv(std::ostream& out) const {
  out << "name,out_c,out_h,out_w,params,macs\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.output.c << ',' << r.output.h << ',' << r.output.w << ',' << r.params
        << ',' << r.macs << '\n';
  }
  out << "total,,,," << total_params << ',' << total_macs << '\n';
}

}  // namespace scanet::profile
