#include "scanet/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "scanet/data/noise.hpp"
#include "scanet/loss/metrics.hpp"
#include "scanet/tensor/random.hpp"

namespace scanet::train {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kPermutationStream = random::hash_name("batch-order");
constexpr std::uint64_t kSampleStream = random::hash_name("crop-augment");
constexpr std::uint64_t kNoiseStream = random::hash_name("online-noise");

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  random::Stream rng(seed, random::mix(kPermutationStream, epoch));
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

void save_atomically(const fs::path& path, const arch::Checkpoint& ck) {
  fs::path tmp = path;
  tmp += ".tmp";
  arch::save_checkpoint(tmp, ck);
  fs::rename(tmp, path);
}

}  // namespace

void write_log_row(std::ostream& out, const StepLog& r) {
  out << r.step << ',' << fmt(r.loss.pixel) << ',' << fmt(r.loss.pixel_grad) << ','
      << fmt(r.loss.grad_branch) << ',' << fmt(r.loss.total) << ',' << fmt(r.psnr) << '\n';
}

Tensor stack_batch(const std::vector<Tensor>& items) {
  if (items.empty()) throw std::invalid_argument("stack_batch: no items");
  const Shape s = items.front().shape();
  std::vector<float> data;
  data.reserve(items.size() * s.numel());
  for (const auto& t : items) {
    if (t.shape() != s) detail::throw_shape_mismatch("stack_batch", s, t.shape());
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  return Tensor::from_data(Shape{items.size() * s.n, s.c, s.h, s.w}, std::move(data));
}

Trainer::Trainer(arch::NetworkConfig network, TrainConfig train, std::vector<data::ImagePair> dataset)
    : cfg_((train.validate(), train)),
      dataset_(std::move(dataset)),
      model_(network, train.seed),
      steps_per_epoch_(0) {
  if (dataset_.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& p : dataset_) p.validate();
  if (cfg_.crop % network.size_multiple() != 0) {
    throw std::invalid_argument("train: crop " + std::to_string(cfg_.crop) +
                                " is not a multiple of " + std::to_string(network.size_multiple()));
  }
  adam_.config = cfg_.adam;
  steps_per_epoch_ = (dataset_.size() + cfg_.batch_size - 1) / cfg_.batch_size;
}

std::uint64_t Trainer::total_steps() const noexcept {
  return cfg_.max_steps ? *cfg_.max_steps : cfg_.epochs * steps_per_epoch_;
}

std::vector<std::size_t> Trainer::batch_indices(std::uint64_t step) const {
  const std::uint64_t epoch = step / steps_per_epoch_;
  const std::uint64_t within = step % steps_per_epoch_;
  const auto perm = permutation(dataset_.size(), cfg_.seed, epoch);
  std::vector<std::size_t> out(cfg_.batch_size);
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = perm[(within * cfg_.batch_size + j) % dataset_.size()];
  }
  return out;
}

std::pair<Tensor, Tensor> Trainer::make_batch(std::uint64_t step) const {
  const auto idx = batch_indices(step);
  std::vector<Tensor> noisy, clean;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    random::Stream rng(cfg_.seed, random::mix(random::mix(kSampleStream, step), j));
    data::ImagePair p = data::random_crop_pair(dataset_[idx[j]], cfg_.crop, rng);
    if (cfg_.augment) p = data::augment_pair(p, rng);
    if (cfg_.online_noise) {
      data::NoiseSpec spec = *cfg_.online_noise;
      spec.seed = random::mix(cfg_.seed, spec.seed);
      p.noisy = data::add_noise(p.clean, spec, random::mix(random::mix(kNoiseStream, step), j));
    }
    noisy.push_back(p.noisy);
    clean.push_back(p.clean);
  }
  return {stack_batch(noisy), stack_batch(clean)};
}

StepLog Trainer::train_step() {
  const std::uint64_t step0 = adam_.step;
  const double lr = lr_at(static_cast<std::size_t>(step0 / steps_per_epoch_), cfg_);
  auto [noisy, clean] = make_batch(step0);

  model_.parameters().zero_grad();
  const auto out = model_.forward(noisy, arch::Phase::train);
  const auto terms = loss::total_loss(out.denoised, out.pred_grad, clean, cfg_.loss,
                                      model_.config().enable_grad_branch);
  StepLog row;
  row.step = step0 + 1;
  row.loss = terms.report();
  if (!std::isfinite(row.loss.total)) {
    std::ostringstream msg;
    msg << "non-finite loss at step " << row.step << " (lr " << lr << "), batch ids:";
    for (std::size_t i : batch_indices(step0)) msg << ' ' << dataset_[i].id;
    throw TrainingError(msg.str());
  }
  terms.total.backward();
  adam_step(model_.parameters(), adam_, lr);
  row.psnr = loss::psnr(out.denoised.detach(), clean);

  if (log_) {
    if (!header_written_) *log_ << kTrainLogHeader << '\n';
    header_written_ = true;
    write_log_row(*log_, row);
  }
  if (on_step_) on_step_(row);
  if (!checkpoint_dir_.empty() && adam_.step % steps_per_epoch_ == 0) {
    fs::create_directories(checkpoint_dir_);
    save_atomically(checkpoint_dir_ / "latest.ckpt", checkpoint());
  }
  return row;
}

void Trainer::run_steps(std::uint64_t count) {
  for (std::uint64_t i = 0; i < count && adam_.step < total_steps(); ++i) train_step();
}

arch::Checkpoint Trainer::run() {
  run_steps(total_steps());
  auto ck = checkpoint();
  if (!checkpoint_dir_.empty()) {
    fs::create_directories(checkpoint_dir_);
    save_atomically(checkpoint_dir_ / "final.ckpt", ck);
  }
  return ck;
}

arch::Checkpoint Trainer::checkpoint() const {
  arch::Checkpoint ck;
  ck.config = model_.config();
  ck.parameters = arch::export_parameters(model_);
  arch::OptimizerSnapshot snap;
  snap.step = adam_.step;
  for (const auto& [name, p] : model_.parameters()) {
    const auto m = adam_.first_moment.find(name);
    const auto v = adam_.second_moment.find(name);
    if (m == adam_.first_moment.end() || v == adam_.second_moment.end()) continue;
    snap.first_moment.emplace(name, Tensor::from_data(p.shape(), m->second));
    snap.second_moment.emplace(name, Tensor::from_data(p.shape(), v->second));
  }
  ck.optimizer = std::move(snap);
  ck.epoch = epoch();
  ck.step = adam_.step;
  ck.seed = cfg_.seed;
  return ck;
}

void Trainer::resume(const arch::Checkpoint& ck) {
  if (!(ck.config == model_.config())) {
    throw std::invalid_argument("resume: checkpoint network config differs from the run's");
  }
  if (ck.seed != cfg_.seed) {
    throw std::invalid_argument("resume: checkpoint seed " + std::to_string(ck.seed) +
                                " differs from the run's seed " + std::to_string(cfg_.seed));
  }
  arch::import_parameters(model_, ck.parameters);
  adam_.first_moment.clear();
  adam_.second_moment.clear();
  adam_.step = ck.step;
  if (ck.optimizer) {
    adam_.step = ck.optimizer->step;
    for (const auto& [name, t] : ck.optimizer->first_moment) {
      adam_.first_moment[name].assign(t.data().begin(), t.data().end());
    }
    for (const auto& [name, t] : ck.optimizer->second_moment) {
      adam_.second_moment[name].assign(t.data().begin(), t.data().end());
    }
  }
}

namespace {

std::size_t fold(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<std::ptrdiff_t>(n) ? i : period - i);
}

}  // namespace

Tensor reflect_pad(const Tensor& x, std::size_t pad_bottom, std::size_t pad_right) {
  const Shape s = x.shape();
  const Shape o{s.n, s.c, s.h + pad_bottom, s.w + pad_right};
  std::vector<float> out(o.numel());
  const auto src = x.data();
  for (std::size_t p = 0; p < s.n * s.c; ++p) {
    for (std::size_t y = 0; y < o.h; ++y) {
      const std::size_t sy = fold(static_cast<std::ptrdiff_t>(y), s.h);
      for (std::size_t c = 0; c < o.w; ++c) {
        out[p * o.plane() + y * o.w + c] =
            src[p * s.plane() + sy * s.w + fold(static_cast<std::ptrdiff_t>(c), s.w)];
      }
    }
  }
  return Tensor::from_data(o, std::move(out));
}

Tensor denoise_image(const arch::ScaNet<float>& model, const Tensor& noisy) {
  NoGradGuard guard;
  const Shape s = noisy.shape();
  const std::size_t m = model.config().size_multiple();
  const std::size_t ph = (m - s.h % m) % m;
  const std::size_t pw = (m - s.w % m) % m;
  const Tensor input = ph || pw ? reflect_pad(noisy, ph, pw) : noisy;
  const Tensor out = model.forward(input, arch::Phase::inference).denoised;
  return ph || pw ? data::crop(out, 0, 0, s.h, s.w) : out;
}

void EvalTable::write_csv(std::ostream& out) const {
  out << "id,psnr,ssim\n";
  for (const auto& r : rows) out << r.id << ',' << fmt(r.psnr) << ',' << fmt(r.ssim) << '\n';
  out << "mean," << fmt(mean_psnr) << ',' << fmt(mean_ssim) << '\n';
}

EvalTable evaluate(const arch::ScaNet<float>& model, const std::vector<data::ImagePair>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
  EvalTable table;
  for (const auto& pair : dataset) {
    pair.validate();
    const Tensor den = denoise_image(model, pair.noisy);
    EvalRow row{pair.id, loss::psnr(den, pair.clean), loss::ssim(den, pair.clean)};
    table.mean_psnr += row.psnr;
    table.mean_ssim += row.ssim;
    table.rows.push_back(std::move(row));
  }
  table.mean_psnr /= static_cast<double>(dataset.size());
  table.mean_ssim /= static_cast<double>(dataset.size());
  return table;
}

EvalTable evaluate(const arch::Checkpoint& ck, const std::vector<data::ImagePair>& dataset) {
  return evaluate(arch::model_from_checkpoint(ck), dataset);
}

}  // namespace scanet::train
