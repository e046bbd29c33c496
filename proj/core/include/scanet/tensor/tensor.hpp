#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scanet {

/// NCHW extent of a tensor. Every dimension is at least one.
struct Shape {
  std::size_t n = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  [[nodiscard]] constexpr std::size_t numel() const noexcept { return n * c * h * w; }
  [[nodiscard]] constexpr std::size_t plane() const noexcept { return h * w; }
  [[nodiscard]] std::string to_string() const;

  friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

/// Raised when operand shapes violate an op's contract. The message names every shape involved.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this->grad and accumulates into the grads of `inputs`.
  std::function<void(Node&)> backward_fn;

  void accumulate_grad(std::span<const T> g);
  std::vector<T>& ensure_grad();
};

}  // namespace detail

/// Reference-counted handle to a dense NCHW array that may take part in reverse-mode
/// differentiation. Copies share storage; ops always allocate fresh results.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false);
  static BasicTensor scalar(T value, bool requires_grad = false);

  [[nodiscard]] bool defined() const noexcept { return node_ != nullptr; }
  [[nodiscard]] const Shape& shape() const;
  [[nodiscard]] std::size_t numel() const { return shape().numel(); }

  [[nodiscard]] std::span<const T> data() const;
  /// In-place access for leaves (parameter updates, data loading). Ops never mutate inputs.
  [[nodiscard]] std::span<T> mutable_data();
  [[nodiscard]] T item() const;
  [[nodiscard]] T at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

  [[nodiscard]] bool requires_grad() const;
  void set_requires_grad(bool flag);
  [[nodiscard]] bool is_leaf() const;
  [[nodiscard]] const char* op_name() const;

  [[nodiscard]] bool has_grad() const;
  [[nodiscard]] std::span<const T> grad() const;
  /// Resets the gradient slot to a zero-filled array of the tensor's shape.
  void zero_grad();
  void clear_grad();

  /// Reverse sweep from this single-element tensor; leaf grads accumulate by summation.
  void backward() const;

  /// Same values, no history, requires_grad = false.
  [[nodiscard]] BasicTensor detach() const;
  /// Deep copy of the values into a new leaf.
  [[nodiscard]] BasicTensor clone(bool requires_grad = false) const;

  template <typename U>
  [[nodiscard]] BasicTensor<U> cast() const;

  // Internal: op construction.
  explicit BasicTensor(std::shared_ptr<detail::Node<T>> node) : node_(std::move(node)) {}
  [[nodiscard]] const std::shared_ptr<detail::Node<T>>& node() const { return node_; }

 private:
  detail::Node<T>& checked() const;
  std::shared_ptr<detail::Node<T>> node_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Thread-local switch controlling whether ops record backward history.
class GradMode {
 public:
  [[nodiscard]] static bool enabled() noexcept;
  static void set_enabled(bool on) noexcept;
};

class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

/// Builds an op result. When grad mode is on and any input requires grad, the result
/// records `inputs` and `backward_fn`; otherwise both are dropped.
template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> data,
                           std::vector<std::shared_ptr<Node<T>>> inputs, const char* op,
                           std::function<void(Node<T>&)> backward_fn);

[[noreturn]] void throw_shape_mismatch(const char* op, const Shape& a, const Shape& b);

}  // namespace detail

}  // namespace scanet
