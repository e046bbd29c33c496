#pragma once

#include "scanet/tensor/tensor.hpp"

namespace scanet::loss {

/// Weights of the three-term objective  alpha*pixel + beta*pixel_grad + gamma*grad_branch.
struct LossWeights {
  double alpha = 1.0;
  double beta = 0.1;
  double gamma = 0.2;
  double charbonnier_eps = 1e-3;

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossReport {
  double pixel = 0.0;
  double pixel_grad = 0.0;
  double grad_branch = 0.0;
  double total = 0.0;
};

template <typename T>
struct LossTerms {
  BasicTensor<T> total;
  BasicTensor<T> pixel;
  BasicTensor<T> pixel_grad;
  BasicTensor<T> grad_branch;  // undefined when the gamma term is absent

  [[nodiscard]] LossReport report() const;
};

/// mean(sqrt((d - g)^2 + eps^2)).
template <typename T>
BasicTensor<T> charbonnier_loss(const BasicTensor<T>& denoised, const BasicTensor<T>& gt, double eps);

/// Mean absolute difference between the gradient maps of the two images; differentiable in
/// `denoised`.
template <typename T>
BasicTensor<T> pixel_grad_loss(const BasicTensor<T>& denoised, const BasicTensor<T>& gt);

/// Mean squared error between the predicted gradient map and that of the clean image. No
/// gradient flows into `gt_image`.
template <typename T>
BasicTensor<T> grad_branch_loss(const BasicTensor<T>& pred_grad, const BasicTensor<T>& gt_image);

/// Combines the three terms. `pred_grad` may be undefined when the gradient branch is
/// disabled; then the gamma term is zero. Throws std::invalid_argument when the branch is
/// enabled, gamma > 0 and no prediction was given.
template <typename T>
LossTerms<T> total_loss(const BasicTensor<T>& denoised, const BasicTensor<T>& pred_grad,
                        const BasicTensor<T>& gt, const LossWeights& weights,
                        bool grad_branch_enabled);

}  // namespace scanet::loss
