#include "scanet/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace scanet {

std::string Shape::to_string() const {
  std::ostringstream os;
  os << '[' << n << ',' << c << ',' << h << ',' << w << ']';
  return os.str();
}

namespace {
thread_local bool grad_mode_enabled = true;

void check_shape(const Shape& s) {
  if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0) {
    throw ShapeError("tensor dimensions must be >= 1, got " + s.to_string());
  }
}
}  // namespace

bool GradMode::enabled() noexcept { return grad_mode_enabled; }
void GradMode::set_enabled(bool on) noexcept { grad_mode_enabled = on; }

namespace detail {

void throw_shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + a.to_string() + " vs " + b.to_string());
}

template <typename T>
std::vector<T>& Node<T>::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), T{0});
  return grad;
}

template <typename T>
void Node<T>::accumulate_grad(std::span<const T> g) {
  auto& dst = ensure_grad();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data,
                           std::vector<std::shared_ptr<Node<T>>> inputs, const char* op,
                           std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = shape;
  node->data = std::move(data);
  node->op = op;
  bool needs = false;
  if (GradMode::enabled()) {
    for (const auto& in : inputs) needs = needs || in->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(backward_fn);
  }
  return BasicTensor<T>(std::move(node));
}

}  // namespace detail

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(shape, T{0}, requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value, bool requires_grad) {
  check_shape(shape);
  return from_data(shape, std::vector<T>(shape.numel(), value), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad) {
  check_shape(shape);
  if (data.size() != shape.numel()) {
    throw ShapeError("from_data: " + std::to_string(data.size()) + " values for shape " +
                     shape.to_string());
  }
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = shape;
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value, bool requires_grad) {
  return full(Shape{}, value, requires_grad);
}

template <typename T>
detail::Node<T>& BasicTensor<T>::checked() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return *node_;
}

template <typename T>
const Shape& BasicTensor<T>::shape() const {
  return checked().shape;
}

template <typename T>
std::span<const T> BasicTensor<T>::data() const {
  return checked().data;
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_data() {
  return checked().data;
}

template <typename T>
T BasicTensor<T>::item() const {
  const auto& node = checked();
  if (node.data.size() != 1) {
    throw ShapeError("item: tensor is not a scalar, shape " + node.shape.to_string());
  }
  return node.data[0];
}

template <typename T>
T BasicTensor<T>::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
  const auto& s = shape();
  return checked().data[((n * s.c + c) * s.h + h) * s.w + w];
}

template <typename T>
bool BasicTensor<T>::requires_grad() const {
  return checked().requires_grad;
}

template <typename T>
void BasicTensor<T>::set_requires_grad(bool flag) {
  auto& node = checked();
  if (!node.inputs.empty()) throw std::logic_error("requires_grad can only be set on leaves");
  node.requires_grad = flag;
}

template <typename T>
bool BasicTensor<T>::is_leaf() const {
  return checked().inputs.empty();
}

template <typename T>
const char* BasicTensor<T>::op_name() const {
  return checked().op;
}

template <typename T>
bool BasicTensor<T>::has_grad() const {
  return !checked().grad.empty();
}

template <typename T>
std::span<const T> BasicTensor<T>::grad() const {
  const auto& node = checked();
  if (node.grad.empty()) throw std::logic_error("tensor has no gradient");
  return node.grad;
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  auto& node = checked();
  node.grad.assign(node.data.size(), T{0});
}

template <typename T>
void BasicTensor<T>::clear_grad() {
  auto& node = checked();
  node.grad.clear();
  node.grad.shrink_to_fit();
}

template <typename T>
void BasicTensor<T>::backward() const {
  auto& root = checked();
  if (root.data.size() != 1) {
    throw ShapeError("backward: loss must have exactly one element, shape " +
                     root.shape.to_string());
  }
  if (!root.requires_grad) throw std::logic_error("backward: loss does not require grad");

  // Iterative post-order DFS gives a topological order (inputs before consumers).
  std::vector<detail::Node<T>*> order;
  std::unordered_set<detail::Node<T>*> visited;
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.ensure_grad()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T>* node = *it;
    if (!node->backward_fn || node->grad.empty()) continue;
    node->backward_fn(*node);
    // Interior adjoints are not needed after propagation.
    if (node != &root) {
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  const auto& node = checked();
  return from_data(node.shape, node.data, false);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone(bool requires_grad) const {
  const auto& node = checked();
  return from_data(node.shape, node.data, requires_grad);
}

template <typename T>
template <typename U>
BasicTensor<U> BasicTensor<T>::cast() const {
  const auto& node = checked();
  std::vector<U> out(node.data.size());
  std::transform(node.data.begin(), node.data.end(), out.begin(),
                 [](T v) { return static_cast<U>(v); });
  return BasicTensor<U>::from_data(node.shape, std::move(out), node.requires_grad);
}

template struct detail::Node<float>;
template struct detail::Node<double>;
template class BasicTensor<float>;
template class BasicTensor<double>;
template BasicTensor<double> BasicTensor<float>::cast<double>() const;
template BasicTensor<float> BasicTensor<double>::cast<float>() const;
template BasicTensor<float> BasicTensor<float>::cast<float>() const;
template BasicTensor<double> BasicTensor<double>::cast<double>() const;
template BasicTensor<float> detail::make_result(Shape, std::vector<float>,
                                                std::vector<std::shared_ptr<detail::Node<float>>>,
                                                const char*,
                                                std::function<void(detail::Node<float>&)>);
template BasicTensor<double> detail::make_result(
    Shape, std::vector<double>, std::vector<std::shared_ptr<detail::Node<double>>>, const char*,
    std::function<void(detail::Node<double>&)>);

}  // namespace scanet
