#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "scanet/arch/checkpoint.hpp"
#include "scanet/arch/network.hpp"
#include "scanet/data/augment.hpp"
#include "scanet/loss/losses.hpp"
#include "scanet/train/adam.hpp"
#include "scanet/train/config.hpp"

namespace scanet::train {

/// Raised when the loss becomes non-finite; the message names step, lr and batch ids.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepLog {
  std::uint64_t step = 0;  // 1-based
  loss::LossReport loss;
  double psnr = 0.0;       // batch PSNR of the (unclamped) training output
};

inline constexpr const char* kTrainLogHeader = "step,pixel,pixel_grad,grad_branch,total,psnr";
void write_log_row(std::ostream& out, const StepLog& row);

/// Stacks [1,C,H,W] tensors into [N,C,H,W].
[[nodiscard]] Tensor stack_batch(const std::vector<Tensor>& items);

/// Deterministic optimisation loop. Every random choice is a pure function of the seed and
/// the global step (batch order: seed and epoch), so resuming from a checkpoint reproduces
/// the uninterrupted run exactly.
class Trainer {
 public:
  Trainer(arch::NetworkConfig network, TrainConfig train, std::vector<data::ImagePair> dataset);

  /// Continues from a checkpoint written by this trainer (same network config).
  void resume(const arch::Checkpoint& ck);

  /// Per-step CSV log; the header precedes the first row unless `write_header` is false
  /// (appending to an existing log).
  void set_log(std::ostream* out, bool write_header = true) {
    log_ = out;
    header_written_ = !write_header;
  }
  /// Writes latest.ckpt at every epoch boundary and final.ckpt when run() ends.
  void set_checkpoint_dir(std::filesystem::path dir) { checkpoint_dir_ = std::move(dir); }
  void on_step(std::function<void(const StepLog&)> cb) { on_step_ = std::move(cb); }

  [[nodiscard]] std::size_t steps_per_epoch() const noexcept { return steps_per_epoch_; }
  [[nodiscard]] std::uint64_t total_steps() const noexcept;
  [[nodiscard]] std::uint64_t step() const noexcept { return adam_.step; }
  [[nodiscard]] std::uint64_t epoch() const noexcept { return adam_.step / steps_per_epoch_; }

  /// Runs the remaining steps; returns the final checkpoint.
  arch::Checkpoint run();
  /// Runs at most `count` further steps (bounded by total_steps()).
  void run_steps(std::uint64_t count);
  StepLog train_step();

  [[nodiscard]] arch::Checkpoint checkpoint() const;
  [[nodiscard]] const arch::ScaNet<float>& model() const { return model_; }
  [[nodiscard]] arch::ScaNet<float>& model() { return model_; }

  /// Dataset indices of the batch taken at a 0-based global step.
  [[nodiscard]] std::vector<std::size_t> batch_indices(std::uint64_t step) const;
  /// The (noisy, clean) training batch at a 0-based global step.
  [[nodiscard]] std::pair<Tensor, Tensor> make_batch(std::uint64_t step) const;

 private:
  TrainConfig cfg_;
  std::vector<data::ImagePair> dataset_;
  arch::ScaNet<float> model_;
  AdamState<float> adam_;
  std::size_t steps_per_epoch_;
  std::ostream* log_ = nullptr;
  bool header_written_ = false;
  std::filesystem::path checkpoint_dir_;
  std::function<void(const StepLog&)> on_step_;
};

/// Full-image inference: reflect-pad bottom/right to the network's size multiple, run the
/// inference phase, crop back.
[[nodiscard]] Tensor denoise_image(const arch::ScaNet<float>& model, const Tensor& noisy);

/// Reflect padding (mirror without repeating the edge) of the bottom and right borders.
[[nodiscard]] Tensor reflect_pad(const Tensor& x, std::size_t pad_bottom, std::size_t pad_right);

struct EvalRow {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalTable {
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;

  /// "id,psnr,ssim" rows followed by a "mean" row.
  void write_csv(std::ostream& out) const;
};

[[nodiscard]] EvalTable evaluate(const arch::ScaNet<float>& model,
                                 const std::vector<data::ImagePair>& dataset);
[[nodiscard]] EvalTable evaluate(const arch::Checkpoint& ck,
                                 const std::vector<data::ImagePair>& dataset);

}  // namespace scanet::train
