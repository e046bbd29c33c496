#include "scanet/profile/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "scanet/arch/network.hpp"
#include "scanet/profile/cost.hpp"
#include "scanet/tensor/random.hpp"

namespace scanet::profile {

MachineInfo machine_info() {
  MachineInfo info;
  info.hardware_threads = std::thread::hardware_concurrency();
  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) info.cpu = line.substr(colon + 2);
      break;
    }
  }
  if (info.cpu.empty()) info.cpu = "unknown";
#if defined(__clang__)
  info.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  info.compiler = "gcc " __VERSION__;
#else
  info.compiler = "unknown";
#endif
#if defined(NDEBUG)
  info.build = "release";
#else
  info.build = "debug";
#endif
#if defined(__AVX512F__)
  info.build += " avx512";
#elif defined(__AVX2__)
  info.build += " avx2";
#endif
  return info;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double median_absolute_deviation(const std::vector<double>& values) {
  const double m = median(values);
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - m));
  return median(std::move(dev));
}

BenchmarkResult benchmark_forward(const arch::NetworkConfig& cfg, std::size_t height,
                                  std::size_t width, std::size_t repeats, std::size_t warmup,
                                  std::uint64_t seed) {
  if (repeats < 3) throw std::invalid_argument("benchmark_forward: repeats must be >= 3");
  BenchmarkResult r;
  r.height = height;
  r.width = width;
  r.macs = count_costs(cfg, height, width).total_macs;
  r.machine = machine_info();

  const arch::ScaNet<float> model(cfg, seed);
  std::vector<float> pixels(3 * height * width);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<float>(random::uniform(seed, random::hash_name("bench-input"), i));
  }
  const Tensor input = Tensor::from_data(Shape{1, 3, height, width}, std::move(pixels));
  NoGradGuard guard;
  for (std::size_t i = 0; i < warmup; ++i) (void)model.forward(input, arch::Phase::inference);
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    (void)model.forward(input, arch::Phase::inference);
    const auto t1 = std::chrono::steady_clock::now();
    r.samples_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  r.median_ms = median(r.samples_ms);
  r.mad_ms = median_absolute_deviation(r.samples_ms);
  return r;
}

void BenchmarkResult::print(std::ostream& out) const {
  out << "# machine: " << machine.cpu << ", " << machine.hardware_threads << " hw threads, "
      << machine.compiler << ", " << machine.build << "\n"
      << "input " << height << "x" << width << ": " << median_ms << " ms median, MAD " << mad_ms
      << " ms over " << samples_ms.size() << " runs; " << macs << " MACs ("
      << gmacs_per_second() << " GMAC/s)\n";
}

}  // namespace scanet::profile
