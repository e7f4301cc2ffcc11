#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "augment.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "netpbm.hpp"
#include "networks.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"
#include "training.hpp"

using namespace scd;
using scd::testing::random_labels;
using scd::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

RgbImage random_image(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  RgbImage img(h, w);
  std::uniform_int_distribution<int> u(0, 255);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(u(rng));
  return img;
}

SynthConfig small_synth(std::size_t count, std::size_t side = 16) {
  SynthConfig s;
  s.count = count;
  s.height = side;
  s.width = side;
  return s;
}

TrainConfig quick_train(std::size_t epochs) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 2;
  t.seed = 3;
  return t;
}

std::vector<std::vector<double>> snapshot(const Network& net) {
  std::vector<std::vector<double>> out;
  const ParamList params = net.parameters();
  for (const auto& p : params.items()) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

// Image with one distinct marker pixel and label maps marking the same pixel.
SamplePair marker_sample(std::size_t h, std::size_t w, std::size_t mi, std::size_t mj) {
  SamplePair s;
  s.stem = "m";
  s.image1 = RgbImage(h, w);
  s.image2 = RgbImage(h, w);
  s.label1 = LabelMap(h, w);
  s.label2 = LabelMap(h, w);
  s.image1.pixel(mi, mj)[0] = 200;
  s.image2.pixel(mi, mj)[2] = 100;
  s.label1.at(mi, mj) = 3;
  s.label2.at(mi, mj) = 1;
  return s;
}

std::pair<std::size_t, std::size_t> find_marker(const LabelMap& m) {
  for (std::size_t i = 0; i < m.height; ++i)
    for (std::size_t j = 0; j < m.width; ++j)
      if (m.at(i, j)) return {i, j};
  return {m.height, m.width};
}

}  // namespace

TEST_CASE("netpbm round trip is bit exact") {
  TempDir dir("pbm");
  std::mt19937_64 rng(1);
  const RgbImage img = random_image(rng, 5, 7);
  const LabelMap lab = random_labels(rng, 5, 7, 255);
  write_ppm(dir.path() / "a.ppm", img);
  write_pgm(dir.path() / "a.pgm", lab);
  CHECK(read_ppm(dir.path() / "a.ppm") == img);
  CHECK(read_pgm(dir.path() / "a.pgm") == lab);
}

TEST_CASE("netpbm rejects malformed files") {
  TempDir dir("pbmbad");
  const fs::path p = dir.path() / "x.pgm";
  write_bytes(p, std::string("P5\n2 1\n15\n") + std::string("\x01\x02", 2));
  CHECK_THROWS_AS(read_pgm(p), DataError);
  write_bytes(p, std::string("P2\n2 1\n255\n1 2\n"));
  CHECK_THROWS_AS(read_pgm(p), DataError);
  write_bytes(p, std::string("P5\n2 2\n255\n") + std::string("\x01\x02", 2));
  CHECK_THROWS_AS(read_pgm(p), DataError);
  write_bytes(p, std::string("P5\n# comment\n2 1\n255\n") + std::string("\x04\x05", 2));
  CHECK(read_pgm(p).values == std::vector<std::uint8_t>{4, 5});
  CHECK_THROWS_AS(read_ppm(dir.path() / "missing.ppm"), DataError);
  try {
    write_bytes(p, "P6\n1 1\n255\n");
    read_ppm(p);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("x.pgm") != std::string::npos);
  }
}

TEST_CASE("dataset round trip, label range and dimension checks") {
  TempDir dir("ds");
  const auto pairs = generate_synthetic(4, small_synth(3));
  for (const auto& s : pairs) write_sample(dir.path(), s);
  write_dataset_meta(dir.path(), 4);
  CHECK(dataset_classes(dir.path()) == 4u);
  const auto back = read_dataset(dir.path(), 4);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].stem == pairs[i].stem);
    CHECK(back[i].image1 == pairs[i].image1);
    CHECK(back[i].label2 == pairs[i].label2);
  }
  CHECK_THROWS_AS(read_dataset(dir.path(), 1), DataError);

  LabelMap small(8, 8);
  write_pgm(dir.path() / "label2" / (pairs[0].stem + ".pgm"), small);
  CHECK_THROWS_AS(read_sample(dir.path(), pairs[0].stem, 4), DataError);
  CHECK_THROWS_AS(read_dataset(dir.path() / "none", 4), DataError);
}

TEST_CASE("mismatched zero-sets warn but do not fail") {
  TempDir dir("warn");
  SamplePair s = marker_sample(8, 8, 2, 3);
  s.label2.at(2, 3) = 0;
  CHECK(check_pair_invariants(s).size() == 1);
  write_sample(dir.path(), s);
  std::vector<std::string> warnings;
  read_sample(dir.path(), s.stem, 4, &warnings);
  CHECK(warnings.size() == 1);
  const ValidationReport r = validate_dataset(dir.path(), 4);
  CHECK(r.ok());
  CHECK_FALSE(r.warnings.empty());
  CHECK(s.change().values[2 * 8 + 3] == 1);
}

TEST_CASE("predictions round trip") {
  TempDir dir("pred");
  std::mt19937_64 rng(2);
  const LabelMap a = random_labels(rng, 8, 8, 4), b = random_labels(rng, 8, 8, 4);
  write_prediction(dir.path(), "s0", a, b);
  const auto [ra, rb] = read_prediction(dir.path(), "s0", 4);
  CHECK(ra == a);
  CHECK(rb == b);
  CHECK(list_label_stems(dir.path()) == std::vector<std::string>{"s0"});
}

TEST_CASE("synthetic generation is deterministic and bit-identical on disk") {
  TempDir a("syn_a"), b("syn_b");
  generate_synthetic(a.path(), 9, small_synth(4));
  generate_synthetic(b.path(), 9, small_synth(4));
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    ++files;
    CHECK(file_bytes(e.path()) == file_bytes(b.path() / fs::relative(e.path(), a.path())));
  }
  CHECK(files == 4u * 4 + 1);
  CHECK_FALSE(generate_pair(9, 0, small_synth(4)).image1 == generate_pair(10, 0, small_synth(4)).image1);
}

TEST_CASE("synthetic pairs meet the pair invariants and the changed-pixel target") {
  for (double target : {0.2, 0.35}) {
    SynthConfig cfg = small_synth(100, 32);
    cfg.change_fraction = target;
    std::size_t changed = 0, pixels = 0;
    for (const auto& s : generate_synthetic(5, cfg)) {
      CHECK(check_pair_invariants(s).empty());
      for (std::size_t q = 0; q < s.label1.size(); ++q) {
        CHECK(s.label1.values[q] <= 4);
        if (s.label1.values[q]) CHECK(s.label1.values[q] != s.label2.values[q]);
        changed += s.label1.values[q] != 0;
      }
      pixels += s.label1.size();
    }
    const double fraction = static_cast<double>(changed) / static_cast<double>(pixels);
    INFO("target " << target << " got " << fraction);
    CHECK(std::abs(fraction - target) <= 0.05);
  }
  SynthConfig bad = small_synth(1, 12);
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = small_synth(1);
  bad.num_classes = 1;
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("augmentation: identity, involutions and pixel correspondence") {
  const SamplePair s = generate_pair(1, 0, small_synth(1));
  const SamplePair id = apply_transform(s, Transform::Identity);
  CHECK(id.image1 == s.image1);
  CHECK(id.label2 == s.label2);
  for (Transform t : {Transform::FlipH, Transform::FlipV, Transform::Rot180}) {
    const SamplePair twice = apply_transform(apply_transform(s, t), t);
    CHECK(twice.image1 == s.image1);
    CHECK(twice.image2 == s.image2);
    CHECK(twice.label1 == s.label1);
  }
  CHECK(apply_transform(apply_transform(s.label1, Transform::Rot90), Transform::Rot270) == s.label1);

  const SamplePair m = marker_sample(8, 8, 1, 5);
  for (Transform t : {Transform::Identity, Transform::FlipH, Transform::FlipV, Transform::Rot90, Transform::Rot180,
                      Transform::Rot270}) {
    INFO(transform_name(t));
    const SamplePair a = apply_transform(m, t);
    const auto [i, j] = find_marker(a.label1);
    REQUIRE(i < 8);
    CHECK(a.label2.at(i, j) == 1);
    CHECK(a.image1.pixel(i, j)[0] == 200);
    CHECK(a.image2.pixel(i, j)[2] == 100);
  }
  const SamplePair rect = marker_sample(8, 16, 1, 5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Transform t = choose_transform(seed, false);
    CHECK((t != Transform::Rot90 && t != Transform::Rot270));
  }
  CHECK_THROWS_AS(apply_transform(rect, Transform::Rot90), ContractError);
}

TEST_CASE("augmentation preserves the label1-vs-label1 confusion matrix") {
  const auto pairs = generate_synthetic(6, small_synth(10));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SamplePair a = augment(pairs[i], 100 + i);
    ConfusionMatrix before(4), after(4);
    before.accumulate(pairs[i].label1, pairs[i].label1);
    after.accumulate(a.label1, a.label1);
    CHECK(before == after);
    CHECK(augment(pairs[i], 100 + i).label1 == a.label1);
  }
}

TEST_CASE("learning rate schedules and Nesterov update") {
  TrainConfig t;
  CHECK(learning_rate(t, 0, 10) == 0.1);
  CHECK(learning_rate(t, 5, 10) == doctest::Approx(0.1 * std::pow(0.5, 0.9)).epsilon(1e-12));
  t.schedule = LrSchedule::Constant;
  CHECK(learning_rate(t, 9, 10) == 0.1);

  Tensor p = Tensor::from({1}, {1.0}, true);
  NesterovSgd opt({p}, 0.9);
  p.accumulate_grad(std::vector<double>{2.0});
  opt.step(0.1);
  // u = -0.2; theta = 1 + 0.9 * -0.2 - 0.2
  CHECK(p.data()[0] == doctest::Approx(0.62).epsilon(1e-12));
  opt.zero_grad();
  p.accumulate_grad(std::vector<double>{1.0});
  opt.step(0.1, 0.5);
  // u = 0.9 * -0.2 - 0.05 = -0.23; theta = 0.62 + 0.9 * -0.23 - 0.05
  CHECK(p.data()[0] == doctest::Approx(0.62 - 0.207 - 0.05).epsilon(1e-12));
  CHECK(gradient_norm({p}) == doctest::Approx(1.0));
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const auto data = generate_synthetic(1, small_synth(4));
  Network net = Network::build(NetworkConfig{}, 1);
  const auto before = snapshot(net);
  TrainConfig t = quick_train(1);
  t.initial_lr = 0.0;
  const TrainResult r = train(net, data, t);
  CHECK(r.steps == 2);
  CHECK(snapshot(net) == before);
}

TEST_CASE("training is deterministic and the loss report identity holds") {
  const auto data = generate_synthetic(2, small_synth(4));
  std::vector<EpochReport> seen;
  Network a = Network::build(NetworkConfig{}, 4);
  Network b = Network::build(NetworkConfig{}, 4);
  const TrainResult ra = train(a, data, quick_train(2), [&](const EpochReport& e) { seen.push_back(e); });
  const TrainResult rb = train(b, data, quick_train(2));
  CHECK(ra.step_losses == rb.step_losses);
  CHECK(encode_checkpoint(a) == encode_checkpoint(b));
  CHECK(ra.step_losses.size() == 4);
  REQUIRE(seen.size() == 2);
  for (const auto& e : seen) {
    const LossReport& m = e.mean;
    CHECK(std::abs(m.l_total - ((m.l_sem1 + m.l_sem2) / 2 + m.l_change + m.l_sc)) < 1e-12);
    CHECK(m.l_sc > 0.0);
  }

  TrainConfig other = quick_train(2);
  other.seed = 4;
  Network c = Network::build(NetworkConfig{}, 4);
  CHECK(train(c, data, other).step_losses != ra.step_losses);
}

TEST_CASE("loss routing per family") {
  const SamplePair s = generate_pair(3, 0, small_synth(1));
  for (Family f : kAllFamilies) {
    NetworkConfig nc;
    nc.family = f;
    const Network net = Network::build(nc, 0);
    const LossReport r = compute_losses(net, net.forward(image_tensor(s.image1), image_tensor(s.image2)), s, {});
    INFO(family_name(f));
    CHECK(std::abs(r.l_total - ((r.l_sem1 + r.l_sem2) / 2 + r.l_change + r.l_sc)) < 1e-12);
    if (is_direct(f)) CHECK(r.l_change == 0.0);
    CHECK((r.l_sc != 0.0) == (f == Family::BiSRNet));
  }
  LossConfig forced;
  forced.use_sc = true;
  CHECK(forced.sc_enabled(Family::SscdLate));
  CHECK_FALSE(forced.sc_enabled(Family::DscdLate));
}

TEST_CASE("invalid training config and empty data are rejected") {
  Network net = Network::build(NetworkConfig{}, 0);
  TrainConfig t = quick_train(1);
  t.batch_size = 0;
  CHECK_THROWS_AS(train(net, generate_synthetic(1, small_synth(1)), t), ConfigError);
  CHECK_THROWS_AS(train(net, {}, quick_train(1)), ContractError);
}

TEST_CASE("evaluating ground truth against itself and all-zero predictions") {
  TempDir truth("truth"), zeros("zeros");
  generate_synthetic(truth.path(), 7, small_synth(5));
  const Evaluation self = evaluate_predictions(truth.path(), truth.path(), 4);
  CHECK(*self.report.oa == 1.0);
  CHECK(*self.report.miou == 1.0);
  CHECK(*self.report.sek == 1.0);
  CHECK(*self.report.f_scd == 1.0);
  CHECK(self.samples == 5);
  CHECK(self.joint.total() == 2u * 5 * 16 * 16);

  for (const auto& stem : list_stems(truth.path())) write_prediction(zeros.path(), stem, LabelMap(16, 16), LabelMap(16, 16));
  const Evaluation z = evaluate_predictions(zeros.path(), truth.path(), 4);
  CHECK_FALSE(z.report.f_scd.has_value());
  CHECK_FALSE(z.report.p_scd.has_value());
  CHECK(*z.report.r_scd == 0.0);

  fs::remove(zeros.path() / "label1" / (list_stems(truth.path())[0] + ".pgm"));
  CHECK_THROWS_AS(evaluate_predictions(zeros.path(), truth.path(), 4), DataError);
}

TEST_CASE("evaluate(net) equals evaluating its written predictions; threads do not matter") {
  TempDir truth("etruth"), pred("epred");
  generate_synthetic(truth.path(), 8, small_synth(5));
  const auto data = read_dataset(truth.path(), 4);
  Network net = Network::build(NetworkConfig{}, 2);
  train(net, data, quick_train(1));
  const Evaluation direct = evaluate(net, data, pred.path(), 1);
  const Evaluation read_back = evaluate_predictions(pred.path(), truth.path(), 4);
  CHECK(direct.joint == read_back.joint);
  CHECK(direct.t1 == read_back.t1);
  CHECK(merge(direct.t1, direct.t2) == direct.joint);
  CHECK(evaluate(net, data, std::nullopt, 3).joint == direct.joint);
  CHECK(direct.zero_set_disagreement == 0.0);
}

TEST_CASE("checkpoint round trip and rejection of foreign checkpoints") {
  TempDir dir("ckpt");
  Network a = Network::build(NetworkConfig{}, 1);
  train(a, generate_synthetic(1, small_synth(2)), quick_train(1));
  save_checkpoint(a, dir.path() / "m.ckpt");
  Network b = Network::build(NetworkConfig{}, 99);
  load_checkpoint(b, dir.path() / "m.ckpt");
  CHECK(snapshot(a) == snapshot(b));
  CHECK(file_bytes(dir.path() / "m.ckpt") == encode_checkpoint(b));

  NetworkConfig other;
  other.family = Family::SscdLate;
  Network c = Network::build(other, 0);
  const auto before = snapshot(c);
  CHECK_THROWS_AS(load_checkpoint(c, dir.path() / "m.ckpt"), DataError);
  CHECK(snapshot(c) == before);

  auto bytes = encode_checkpoint(a);
  bytes.pop_back();
  CHECK_THROWS_AS(decode_checkpoint(b, bytes), DataError);
  bytes = encode_checkpoint(a);
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(b, bytes), DataError);
  CHECK_THROWS_AS(load_checkpoint(b, dir.path() / "missing.ckpt"), DataError);
}

TEST_CASE("config parsing and builders") {
  const Config cfg = Config::parse(
      "# toy\nfamily = SSCD-l\nclasses = 3  # trailing\n\nencoder.channels = 8, 8, 16, 16\n"
      "train.lr = 0.05\ncotsr.shared = false\nloss.sc_mode = literal\nsynth.size = 24\nfamily = DSCD-e\n");
  const NetworkConfig n = network_config(cfg);
  CHECK(n.family == Family::DscdEarly);
  CHECK(n.num_classes == 3);
  CHECK(n.encoder.stage_channels == std::vector<std::size_t>{8, 8, 16, 16});
  CHECK_FALSE(n.cotsr_shared);
  CHECK(train_config(cfg).initial_lr == 0.05);
  CHECK(loss_config(cfg).sc_mode == ScMode::Literal);
  CHECK(synth_config(cfg).height == 24);
  CHECK(synth_config(cfg).num_classes == 3);
  cfg.check_known_keys();

  CHECK_THROWS_AS(Config::parse("classes 3\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("bogus = 1\n").check_known_keys(), ConfigError);
  CHECK_THROWS_AS(Config::parse("classes = three\n").get_int("classes"), ConfigError);
  CHECK_THROWS_AS(network_config(Config::parse("family = UNet\n")), ConfigError);
  CHECK_THROWS_AS(train_config(Config::parse("train.grad_clip = -1\n")), ConfigError);
  try {
    Config::parse("a = 1\nbroken\n", "toy.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("toy.cfg:2") != std::string::npos);
  }
}

TEST_CASE("overfit loss curve decreases after window-10 smoothing without augmentation") {
  // Augmentation draws a new transform per step, so only the fixed-view curve
  // is expected to be monotone; the tolerance absorbs roundoff near zero loss.
  const SamplePair pair = generate_pair(0, 0, SynthConfig{});
  Network net = Network::build(NetworkConfig{}, 0);
  TrainConfig t;
  t.max_steps = 500;
  t.augment = false;
  const std::vector<double> loss = train(net, {pair}, t).step_losses;
  REQUIRE(loss.size() == 500);
  std::vector<double> smooth;
  for (std::size_t k = 0; k + 10 <= loss.size(); ++k) {
    double m = 0.0;
    for (std::size_t j = k; j < k + 10; ++j) m += loss[j];
    smooth.push_back(m / 10.0);
  }
  std::size_t increases = 0;
  for (std::size_t k = 1; k < smooth.size(); ++k) increases += smooth[k] > smooth[k - 1] + 1e-6;
  CHECK(increases == 0);
  CHECK(smooth.back() < 0.05);
}
