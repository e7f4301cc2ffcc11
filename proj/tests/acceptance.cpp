// Acceptance gate: one [PASS]/[FAIL] line per criterion AC1..AC9.
// Usage: acceptance <path-to-scd-cli> [AC1 AC2 ...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "blocks.hpp"
#include "dataset.hpp"
#include "evaluation.hpp"
#include "gradsuite.hpp"
#include "metrics.hpp"
#include "networks.hpp"
#include "synthetic.hpp"
#include "training.hpp"

using namespace scd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("scd_accept_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.numel(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

Tensor random_input(std::mt19937_64& rng, Shape shape) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v));
}

LabelMap random_map(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t n) {
  LabelMap m(h, w);
  std::uniform_int_distribution<int> u(0, static_cast<int>(n));
  for (auto& v : m.values) v = static_cast<std::uint8_t>(u(rng));
  return m;
}

NetworkConfig family_config(Family f) {
  NetworkConfig c;
  c.family = f;
  return c;
}

// ---------------------------------------------------------------------------

Outcome ac1_gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t checks = 0;
  for (std::uint64_t seed = 0; seed <= 9; ++seed) {
    for (const auto& r : run_grad_suite(seed)) {
      ++checks;
      if (!(r.max_rel_error <= worst)) {
        worst = r.max_rel_error;
        worst_name = r.name + " seed " + std::to_string(seed);
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst < kGradTolerance && t < 60.0 && checks == 10 * grad_components().size(),
          fmt("%zu component checks, worst %.3g (%s) < %.0e, %.1f s < 60 s", checks, worst, worst_name.c_str(),
              kGradTolerance, t)};
}

bool same_metric(const std::optional<double>& a, const std::optional<double>& b, double tol) {
  if (a.has_value() != b.has_value()) return false;
  return !a || std::abs(*a - *b) <= tol;
}

Outcome ac2_oracle() {
  std::size_t mismatches = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 2 + seed % 5;
    const std::vector<LabelMap> pred{random_map(rng, 8, 8, n)};
    const std::vector<LabelMap> truth{random_map(rng, 8, 8, n)};
    ConfusionMatrix cm(n);
    cm.accumulate(pred[0], truth[0]);
    const MetricsReport a = compute_report(cm);
    const MetricsReport b = oracle_metrics(pred, truth, n);
    bool ok = a.pixels == b.pixels;
    for (const char* name : kMetricNames) {
      const auto x = metric_value(a, name), y = metric_value(b, name);
      ok = ok && same_metric(x, y, 1e-12);
      if (x && y) worst = std::max(worst, std::abs(*x - *y));
    }
    mismatches += !ok;
  }
  const ConfusionMatrix q = ConfusionMatrix::from_counts(2, {{4, 1, 0}, {1, 2, 1}, {0, 0, 1}});
  const MetricsReport r = compute_report(q);
  const double sek_expected = std::exp(-1.0 / 3.0) * (0.5 - 15.0 / 36.0) / (1.0 - 15.0 / 36.0);
  const bool worked = r.oa && std::abs(*r.oa - 0.7) < 1e-12 && r.miou && std::abs(*r.miou - 2.0 / 3.0) < 1e-12 &&
                      r.sek && std::abs(*r.sek - sek_expected) < 1e-12 && std::abs(*r.sek - 0.10236) < 5e-6 &&
                      r.f_scd && std::abs(*r.f_scd - 0.6) < 1e-12;
  return {mismatches == 0 && worked,
          fmt("1000 pairs, N in 2..6: %zu mismatches, worst ratio gap %.2g; worked Q: OA %.6f mIoU %.6f SeK %.6f "
              "F_scd %.6f",
              mismatches, worst, r.oa.value_or(NAN), r.miou.value_or(NAN), r.sek.value_or(NAN),
              r.f_scd.value_or(NAN))};
}

Outcome ac3_perfect() {
  const fs::path root = scratch("ac3");
  std::size_t datasets = 0, failures = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    SynthConfig cfg;
    cfg.count = 8;
    cfg.num_classes = 2 + seed % 5;
    cfg.height = cfg.width = seed % 2 ? 64 : 32;
    cfg.change_fraction = 0.1 + 0.05 * static_cast<double>(seed);
    const fs::path dir = root / std::to_string(seed);
    generate_synthetic(dir, seed, cfg);
    const Evaluation e = evaluate_predictions(dir, dir, cfg.num_classes);
    ++datasets;
    const MetricsReport& m = e.report;
    const bool ones = m.pixels.truth_changed > 0 && m.oa == 1.0 && m.miou == 1.0 && m.sek == 1.0 && m.f_scd == 1.0;
    failures += !ones;
  }
  fs::remove_all(root);
  return {failures == 0, fmt("%zu synthetic datasets; OA = mIoU = SeK = F_scd = 1 on %zu", datasets,
                             datasets - failures)};
}

Outcome ac4_identity() {
  std::mt19937_64 rng(4);
  bool siam = true, cot = true, net = true;
  for (int t = 0; t < 10; ++t) {
    const Tensor x1 = random_input(rng, {64, 4, 4});
    const Tensor x2 = random_input(rng, {64, 4, 4});
    siam = siam && bit_equal(SiamSR::make(t, "siam_sr", 64, 2)(x1), x1);
    for (bool shared : {true, false}) {
      auto [y1, y2] = CotSR::make(t, "cot_sr", 64, 2, shared)(x1, x2);
      cot = cot && bit_equal(y1, x1) && bit_equal(y2, x2);
    }
  }
  std::size_t pairs = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Network bisr = Network::build(family_config(Family::BiSRNet), seed);
    const Network sscd = Network::build(family_config(Family::SscdLate), seed);
    for (int t = 0; t < 4; ++t, ++pairs) {
      const Tensor i1 = random_input(rng, {3, 32, 32});
      const Tensor i2 = random_input(rng, {3, 32, 32});
      const auto a = bisr.forward(i1, i2);
      const auto b = sscd.forward(i1, i2);
      net = net && bit_equal(a.p1, b.p1) && bit_equal(a.p2, b.p2) && bit_equal(a.change, b.change) && a.s1 == b.s1 &&
            a.s2 == b.s2;
    }
  }
  return {siam && cot && net, fmt("Siam-SR identity %s, Cot-SR identity (shared, unshared) %s, Bi-SRNet == SSCD-l "
                                  "bitwise on %zu pairs %s",
                                  siam ? "yes" : "no", cot ? "yes" : "no", pairs, net ? "yes" : "no")};
}

Outcome ac5_masking() {
  std::mt19937_64 rng(5);
  const Network sscd = Network::build(family_config(Family::SscdLate), 1);
  Network bisr = Network::build(family_config(Family::BiSRNet), 1);
  // Non-zero value projections so Bi-SRNet differs from SSCD-l.
  std::normal_distribution<double> g(0.0, 0.05);
  for (Tensor w : {bisr.siam_sr()->projections().v.weight, bisr.cot_sr()->branch1().v.weight})
    for (auto& v : w.mutable_data()) v = g(rng);
  const Network dscd = Network::build(family_config(Family::DscdEarly), 1);

  std::size_t consistent_failures = 0;
  double dscd_rate = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Tensor i1 = random_input(rng, {3, 32, 32});
    const Tensor i2 = random_input(rng, {3, 32, 32});
    for (const Network* net : {&sscd, static_cast<const Network*>(&bisr)}) {
      const auto out = net->forward(i1, i2);
      consistent_failures += zero_set_disagreement(out.s1, out.s2) != 0.0;
    }
    const auto d = dscd.forward(i1, i2);
    dscd_rate += zero_set_disagreement(d.s1, d.s2) / 100.0;
  }
  return {consistent_failures == 0,
          fmt("100 inputs: SSCD-l and Bi-SRNet zero-sets identical on %zu of 200 forwards; DSCD-e disagreement "
              "rate %.4f (reported only)",
              200 - consistent_failures, dscd_rate)};
}

Outcome ac6_cost() {
  const Network dscd_e = Network::build(family_config(Family::DscdEarly), 0);
  const Network dscd_l = Network::build(family_config(Family::DscdLate), 0);
  const Network sscd_e = Network::build(family_config(Family::SscdEarly), 0);
  const Network sscd_l = Network::build(family_config(Family::SscdLate), 0);
  const Network bisr = Network::build(family_config(Family::BiSRNet), 0);
  ParamList sr;
  bisr.siam_sr()->collect(sr, "siam_sr");
  bisr.cot_sr()->collect(sr, "cot_sr");
  const std::uint64_t diff = count_params(bisr) - count_params(sscd_l);
  const SynthConfig toy;
  const auto f = [&](const Network& n) { return estimate_flops(n, toy.height, toy.width); };
  const bool order = f(dscd_e) < f(dscd_l) && f(dscd_l) <= f(sscd_l) && f(sscd_l) < f(sscd_e);
  return {diff == sr.count() && order,
          fmt("params(Bi-SRNet) - params(SSCD-l) = %llu, SR blocks = %llu; FLOPs at %zux%zu: DSCD-e %llu < DSCD-l "
              "%llu <= SSCD-l %llu < SSCD-e %llu",
              static_cast<unsigned long long>(diff), static_cast<unsigned long long>(sr.count()), toy.height,
              toy.width, static_cast<unsigned long long>(f(dscd_e)), static_cast<unsigned long long>(f(dscd_l)),
              static_cast<unsigned long long>(f(sscd_l)), static_cast<unsigned long long>(f(sscd_e)))};
}

Outcome ac7_overfit() {
  const auto t0 = Clock::now();
  const SamplePair pair = generate_pair(0, 0, SynthConfig{});
  Network net = Network::build(family_config(Family::BiSRNet), 0);
  TrainConfig tc;
  tc.max_steps = 500;
  tc.loss.sc_mode = ScMode::Intent;
  const TrainResult r = train(net, {pair}, tc);
  std::size_t reached = 0;
  for (std::size_t k = 0; k < r.step_losses.size() && !reached; ++k)
    if (r.step_losses[k] < 0.05) reached = k + 1;
  const Evaluation e = evaluate(net, {pair}, std::nullopt, 1);
  const double miou = e.report.miou.value_or(-1.0);
  const double t = seconds_since(t0);
  return {reached > 0 && r.steps <= 500 && miou > 0.95 && t < 300.0,
          fmt("l_total < 0.05 first at step %zu of %zu (final %.3g), mIoU %.4f > 0.95, %.1f s < 300 s", reached,
              r.steps, r.step_losses.empty() ? NAN : r.step_losses.back(), miou, t)};
}

Outcome ac8_ablation() {
  const auto t0 = Clock::now();
  const SynthConfig sc;
  const auto train_set = generate_synthetic(100, sc);
  const auto test_set = generate_synthetic(200, sc);
  double mean[2] = {0.0, 0.0};
  std::string per_seed[2];
  const Family fams[2] = {Family::SscdLate, Family::BiSRNet};
  bool defined = true;
  for (int f = 0; f < 2; ++f) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Network net = Network::build(family_config(fams[f]), seed);
      TrainConfig tc;
      tc.seed = seed;
      train(net, train_set, tc);
      const auto s = evaluate(net, test_set).report.sek;
      defined = defined && s.has_value();
      mean[f] += s.value_or(NAN) / 5.0;
      per_seed[f] += fmt(" %.4f", s.value_or(NAN));
    }
  }
  const double t = seconds_since(t0);
  return {defined && mean[1] >= mean[0] - 0.01 && t < 1800.0,
          fmt("test SeK over seeds 0-4: Bi-SRNet mean %.4f (%s ) >= SSCD-l mean %.4f (%s ) - 0.01, %.0f s < 1800 s",
              mean[1], per_seed[1].c_str() + 1, mean[0], per_seed[0].c_str() + 1, t)};
}

int run(const std::string& command) { return std::system((command + " >/dev/null 2>&1").c_str()); }

Outcome ac9_determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path given"};
  const fs::path root = scratch("ac9");
  {
    std::ofstream cfg(root / "toy.cfg");
    cfg << "seed = 11\nsynth.count = 12\ntrain.epochs = 3\ntrain.batch_size = 4\n";
  }
  const std::string base = "\"" + cli + "\" ";
  const std::string conf = " --config \"" + (root / "toy.cfg").string() + "\"";
  int rc = run(base + "generate" + conf + " --out \"" + (root / "data").string() + "\"");
  for (const char* out : {"run1", "run2"})
    rc |= run(base + "train" + conf + " --data \"" + (root / "data").string() + "\" --out \"" + (root / out).string() +
              "\"");
  const auto c1 = file_bytes(root / "run1" / "model.ckpt"), c2 = file_bytes(root / "run2" / "model.ckpt");
  const auto m1 = file_bytes(root / "run1" / "metrics.json"), m2 = file_bytes(root / "run2" / "metrics.json");
  const auto l1 = file_bytes(root / "run1" / "loss.csv"), l2 = file_bytes(root / "run2" / "loss.csv");
  fs::remove_all(root);
  const bool pass = rc == 0 && !c1.empty() && !m1.empty() && c1 == c2 && m1 == m2 && l1 == l2;
  return {pass, fmt("exit codes %s; checkpoint %zu bytes %s; metrics.json %zu bytes %s; loss.csv %s",
                    rc == 0 ? "0" : "non-zero", c1.size(), c1 == c2 ? "identical" : "differ", m1.size(),
                    m1 == m2 ? "identical" : "differ", l1 == l2 ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  std::set<std::string> only(argv + std::min(argc, 2), argv + argc);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1", ac1_gradients},
      {"AC2", ac2_oracle},
      {"AC3", ac3_perfect},
      {"AC4", ac4_identity},
      {"AC5", ac5_masking},
      {"AC6", ac6_cost},
      {"AC7", ac7_overfit},
      {"AC8", ac8_ablation},
      {"AC9", [&] { return ac9_determinism(cli); }},
  };

  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
