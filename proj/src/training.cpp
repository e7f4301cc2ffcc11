#include "training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "augment.hpp"
#include "errors.hpp"

namespace scd {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = a * 0x9e3779b97f4a7c15ull;
  h ^= b + 0x632be59bd9b4e019ull + (h << 6) + (h >> 2);
  h ^= c + 0x85ebca6b4c0ffee5ull + (h << 6) + (h >> 2);
  return h;
}

std::string snapshot(std::size_t epoch, std::size_t step, const std::string& stem, const LossReport& r) {
  std::ostringstream os;
  os << "epoch " << epoch << " step " << step << " sample " << stem << " l_sem1=" << r.l_sem1
     << " l_sem2=" << r.l_sem2 << " l_change=" << r.l_change << " l_sc=" << r.l_sc << " l_total=" << r.l_total;
  return os.str();
}

}  // namespace

bool LossConfig::sc_enabled(Family family) const {
  if (is_direct(family)) return false;
  if (use_sc) return *use_sc;
  return family == Family::BiSRNet;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (epochs == 0 && max_steps == 0) throw ConfigError("train.epochs or train.max_steps must be positive");
  if (initial_lr < 0.0) throw ConfigError("train.lr must be non-negative");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train.momentum must lie in [0, 1)");
  if (poly_power <= 0.0) throw ConfigError("lr.power must be positive");
  if (grad_clip < 0.0) throw ConfigError("train.grad_clip must be non-negative");
}

LossReport compute_losses(const Network& net, const ForwardOutput& out, const SamplePair& sample,
                          const LossConfig& config, Tensor* total) {
  LossReport r;
  const Family family = net.family();
  Tensor t;
  if (is_direct(family)) {
    const Tensor s1 = direct_semantic_loss(out.p1, sample.label1);
    const Tensor s2 = direct_semantic_loss(out.p2, sample.label2);
    r.l_sem1 = s1.item();
    r.l_sem2 = s2.item();
    r.sem1_pixels = r.sem2_pixels = sample.label1.size();
    t = scale(add(s1, s2), 0.5);
  } else {
    const LabelMap change = sample.change();
    const Tensor s1 = semantic_loss(out.p1, sample.label1, &r.sem1_pixels);
    const Tensor s2 = semantic_loss(out.p2, sample.label2, &r.sem2_pixels);
    const Tensor c = change_loss(out.change, change);
    r.change_pixels = change.size();
    Tensor sc = Tensor::scalar(0.0);
    if (config.sc_enabled(family)) {
      sc = semantic_consistency_loss(out.p1, out.p2, change, config.sc_mode, config.sc_space);
      r.sc_pixels = change.size();
    }
    r.l_sem1 = s1.item();
    r.l_sem2 = s2.item();
    r.l_change = c.item();
    r.l_sc = sc.item();
    t = total_loss(s1, s2, c, sc);
  }
  r.l_total = t.item();
  if (total) *total = t;
  return r;
}

NesterovSgd::NesterovSgd(std::vector<Tensor> params, double momentum)
    : params_(std::move(params)), momentum_(momentum) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.emplace_back(p.numel(), 0.0);
}

void NesterovSgd::step(double lr, double grad_scale) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    auto theta = p.mutable_data();
    auto g = p.grad();
    auto& u = velocity_[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = grad_scale * g[j];
      u[j] = momentum_ * u[j] - lr * gj;
      theta[j] += momentum_ * u[j] - lr * gj;
    }
  }
}

void NesterovSgd::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double learning_rate(const TrainConfig& config, std::size_t step, std::size_t total_steps) {
  if (config.schedule == LrSchedule::Constant || total_steps == 0) return config.initial_lr;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return config.initial_lr * std::pow(std::max(0.0, 1.0 - progress), config.poly_power);
}

double gradient_norm(const std::vector<Tensor>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient");
      sq += g * g;
    }
  }
  return std::sqrt(sq);
}

TrainResult train(Network& net, const std::vector<SamplePair>& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw ContractError("training set is empty");
  const std::size_t n = data.size();
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = config.max_steps ? config.max_steps : config.epochs * batches;

  NesterovSgd opt(net.parameters().tensors(), config.momentum);
  opt.zero_grad();

  TrainResult result;
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; result.steps < total_steps; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(mix(config.seed, epoch, 0x5eed));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochReport report;
    report.epoch = epoch;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches && result.steps < total_steps; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(n, begin + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - begin);
      const double lr = learning_rate(config, result.steps, total_steps);
      double batch_total = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const SamplePair& raw = data[order[k]];
        const SamplePair sample = config.augment ? augment(raw, mix(config.seed, epoch, order[k])) : raw;
        LossReport r;
        try {
          const ForwardOutput out = net.forward(image_tensor(sample.image1), image_tensor(sample.image2));
          Tensor loss;
          r = compute_losses(net, out, sample, config.loss, &loss);
          if (!std::isfinite(r.l_total)) throw NumericError("non-finite loss");
          backward(scale(loss, inv));
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " at " + snapshot(epoch, result.steps, sample.stem, r));
        }
        report.mean += r;
        batch_total += r.l_total * inv;
        ++seen;
      }
      double norm = 0.0;
      try {
        norm = gradient_norm(opt.params());
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(result.steps));
      }
      const double clip = (config.grad_clip > 0.0 && norm > config.grad_clip) ? config.grad_clip / norm : 1.0;
      opt.step(lr, clip);
      opt.zero_grad();
      result.step_losses.push_back(batch_total);
      ++result.steps;
      ++report.steps;
      report.lr = lr;
    }
    if (seen) report.mean = report.mean.scaled(1.0 / static_cast<double>(seen));
    result.epochs.push_back(report);
    if (on_epoch) on_epoch(report);
  }
  return result;
}

}  // namespace scd
