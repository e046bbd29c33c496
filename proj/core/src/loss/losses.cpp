#include "scanet/loss/losses.hpp"

#include "scanet/arch/gradient_map.hpp"
#include "scanet/tensor/ops.hpp"

namespace scanet::loss {

void LossWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0) throw std::invalid_argument("loss weights must be >= 0");
  if (alpha + beta + gamma <= 0) throw std::invalid_argument("loss weights must not all be zero");
  if (charbonnier_eps < 0) throw std::invalid_argument("charbonnier_eps must be >= 0");
}

template <typename T>
LossReport LossTerms<T>::report() const {
  LossReport r;
  r.pixel = static_cast<double>(pixel.item());
  r.pixel_grad = static_cast<double>(pixel_grad.item());
  r.grad_branch = grad_branch.defined() ? static_cast<double>(grad_branch.item()) : 0.0;
  r.total = static_cast<double>(total.item());
  return r;
}

template <typename T>
BasicTensor<T> charbonnier_loss(const BasicTensor<T>& denoised, const BasicTensor<T>& gt, double eps) {
  if (denoised.shape() != gt.shape()) detail::throw_shape_mismatch("charbonnier_loss", denoised.shape(), gt.shape());
  const BasicTensor<T> d2 = square(sub(denoised, gt));
  return mean(sqrt(add_scalar(d2, static_cast<T>(eps * eps))));
}

template <typename T>
BasicTensor<T> pixel_grad_loss(const BasicTensor<T>& denoised, const BasicTensor<T>& gt) {
  if (denoised.shape() != gt.shape()) detail::throw_shape_mismatch("pixel_grad_loss", denoised.shape(), gt.shape());
  return mean(abs(sub(arch::extract_gradient_map(denoised), arch::extract_gradient_map(gt))));
}

template <typename T>
BasicTensor<T> grad_branch_loss(const BasicTensor<T>& pred_grad, const BasicTensor<T>& gt_image) {
  BasicTensor<T> target = arch::extract_gradient_map(gt_image).detach();
  if (pred_grad.shape() != target.shape()) detail::throw_shape_mismatch("grad_branch_loss", pred_grad.shape(), target.shape());
  return mean(square(sub(pred_grad, target)));
}

template <typename T>
LossTerms<T> total_loss(const BasicTensor<T>& denoised, const BasicTensor<T>& pred_grad,
                        const BasicTensor<T>& gt, const LossWeights& weights,
                        bool grad_branch_enabled) {
  weights.validate();
  if (grad_branch_enabled && weights.gamma > 0 && !pred_grad.defined()) {
    throw std::invalid_argument("total_loss: gradient branch enabled but no predicted gradient map");
  }
  LossTerms<T> terms;
  terms.pixel = charbonnier_loss(denoised, gt, weights.charbonnier_eps);
  terms.pixel_grad = pixel_grad_loss(denoised, gt);
  terms.total = add(mul_scalar(terms.pixel, static_cast<T>(weights.alpha)),
                    mul_scalar(terms.pixel_grad, static_cast<T>(weights.beta)));
  if (pred_grad.defined()) {
    terms.grad_branch = grad_branch_loss(pred_grad, gt);
    terms.total = add(terms.total, mul_scalar(terms.grad_branch, static_cast<T>(weights.gamma)));
  }
  return terms;
}

#define SCANET_INSTANTIATE_LOSS(T)                                                             \
  template struct LossTerms<T>;                                                                \
  template BasicTensor<T> charbonnier_loss(const BasicTensor<T>&, const BasicTensor<T>&, double); \
  template BasicTensor<T> pixel_grad_loss(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template BasicTensor<T> grad_branch_loss(const BasicTensor<T>&, const BasicTensor<T>&);      \
  template LossTerms<T> total_loss(const BasicTensor<T>&, const BasicTensor<T>&,               \
                                   const BasicTensor<T>&, const LossWeights&, bool);

SCANET_INSTANTIATE_LOSS(float)
SCANET_INSTANTIATE_LOSS(double)

}  // namespace scanet::loss
