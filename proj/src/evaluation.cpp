#include "evaluation.hpp"

#include <algorithm>
#include <thread>

#include "errors.hpp"

namespace scd {

namespace {

struct Shard {
  ConfusionMatrix joint, t1, t2;
  std::uint64_t disagree = 0;
  std::uint64_t pixels = 0;
  explicit Shard(std::size_t n) : joint(n), t1(n), t2(n) {}

  void add(const LabelMap& s1, const LabelMap& s2, const LabelMap& l1, const LabelMap& l2) {
    t1.accumulate(s1, l1);
    t2.accumulate(s2, l2);
    for (std::size_t q = 0; q < s1.size(); ++q) disagree += (s1.values[q] == 0) != (s2.values[q] == 0);
    pixels += s1.size();
  }
};

Evaluation finish(std::size_t num_classes, const std::vector<Shard>& shards, std::size_t samples) {
  Evaluation ev(num_classes);
  std::uint64_t disagree = 0, pixels = 0;
  for (const auto& s : shards) {
    ev.t1.merge(s.t1);
    ev.t2.merge(s.t2);
    disagree += s.disagree;
    pixels += s.pixels;
  }
  ev.joint = merge(ev.t1, ev.t2);
  ev.report = compute_report(ev.joint);
  ev.report_t1 = compute_report(ev.t1);
  ev.report_t2 = compute_report(ev.t2);
  ev.samples = samples;
  ev.zero_set_disagreement = pixels ? static_cast<double>(disagree) / static_cast<double>(pixels) : 0.0;
  return ev;
}

}  // namespace

std::pair<LabelMap, LabelMap> predict(const Network& net, const SamplePair& sample) {
  NoGradGuard guard;
  ForwardOutput out = net.forward(image_tensor(sample.image1), image_tensor(sample.image2));
  return {std::move(out.s1), std::move(out.s2)};
}

double zero_set_disagreement(const LabelMap& a, const LabelMap& b) {
  if (!a.same_shape(b)) throw DataError("label maps differ in shape");
  if (a.size() == 0) return 0.0;
  std::size_t n = 0;
  for (std::size_t q = 0; q < a.size(); ++q) n += (a.values[q] == 0) != (b.values[q] == 0);
  return static_cast<double>(n) / static_cast<double>(a.size());
}

Evaluation evaluate(const Network& net, const std::vector<SamplePair>& samples,
                    const std::optional<std::filesystem::path>& prediction_dir, std::size_t threads) {
  const std::size_t n = net.config().num_classes;
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, samples.size()));
  std::vector<Shard> shards(threads, Shard(n));
  std::vector<std::pair<LabelMap, LabelMap>> predictions(samples.size());
  std::vector<std::exception_ptr> failures(threads);

  auto work = [&](std::size_t t) {
    try {
      for (std::size_t i = t; i < samples.size(); i += threads) {
        const SamplePair& s = samples[i];
        predictions[i] = predict(net, s);
        if (!predictions[i].first.same_shape(s.label1)) throw DataError("prediction shape differs for " + s.stem);
        shards[t].add(predictions[i].first, predictions[i].second, s.label1, s.label2);
      }
    } catch (...) {
      failures[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  if (prediction_dir) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      write_prediction(*prediction_dir, samples[i].stem, predictions[i].first, predictions[i].second);
    }
  }
  return finish(n, shards, samples.size());
}

Evaluation evaluate_predictions(const std::filesystem::path& pred_dir, const std::filesystem::path& truth_dir,
                                std::size_t num_classes) {
  std::vector<Shard> shards(1, Shard(num_classes));
  const auto stems = list_label_stems(truth_dir);
  for (const auto& stem : stems) {
    const std::filesystem::path l1 = truth_dir / "label1" / (stem + ".pgm");
    auto [t1, t2] = read_prediction(truth_dir, stem, num_classes);
    auto [s1, s2] = read_prediction(pred_dir, stem, num_classes);
    if (!s1.same_shape(t1) || !s2.same_shape(t2)) {
      throw DataError("prediction " + (pred_dir / "label1" / (stem + ".pgm")).string() + " differs in shape from " +
                      l1.string());
    }
    shards[0].add(s1, s2, t1, t2);
  }
  return finish(num_classes, shards, stems.size());
}

}  // namespace scd
