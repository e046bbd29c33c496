#include "scanet/nn/parameters.hpp"

#include <cmath>

#include "scanet/nn/cost_recorder.hpp"
#include "scanet/tensor/random.hpp"

namespace scanet::nn {

namespace {
thread_local CostRecorder* active_recorder = nullptr;
}

CostRecorder::CostRecorder() : previous_(active_recorder) { active_recorder = this; }
CostRecorder::~CostRecorder() { active_recorder = previous_; }
CostRecorder* CostRecorder::active() noexcept { return active_recorder; }

template <typename T>
void ParameterSet<T>::add(const std::string& name, BasicTensor<T> tensor) {
  if (!tensors_.emplace(name, std::move(tensor)).second) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
}

template <typename T>
const BasicTensor<T>& ParameterSet<T>::at(const std::string& name) const {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

template <typename T>
BasicTensor<T>& ParameterSet<T>::at(const std::string& name) {
  const auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

template <typename T>
std::uint64_t ParameterSet<T>::element_count() const {
  std::uint64_t total = 0;
  for (const auto& [name, t] : tensors_) total += t.numel();
  return total;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& [name, t] : tensors_) t.zero_grad();
}

template <typename T>
Conv2dParams<T> ParamFactory<T>::conv(const std::string& name, const ConvGeometry& geometry) {
  geometry.validate();
  Conv2dParams<T> p;
  p.name = name;
  p.geometry = geometry;
  const std::size_t fan_in = (geometry.in_channels / geometry.groups) * geometry.kernel * geometry.kernel;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  const std::uint64_t stream = random::hash_name(name);
  std::vector<T> w(geometry.weight_count());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<T>((2.0 * random::uniform(seed_, stream, i) - 1.0) * bound);
  }
  p.weight = BasicTensor<T>::from_data(
      Shape{geometry.out_channels, geometry.in_channels / geometry.groups, geometry.kernel,
            geometry.kernel},
      std::move(w), true);
  set_->add(name + ".weight", p.weight);
  if (geometry.bias) {
    p.bias = BasicTensor<T>::zeros(Shape{1, geometry.out_channels, 1, 1}, true);
    set_->add(name + ".bias", p.bias);
  }
  return p;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class ParamFactory<float>;
template class ParamFactory<double>;

}  // namespace scanet::nn
