#include "dataset.hpp"

#include <algorithm>
#include <fstream>

#include "config.hpp"
#include "errors.hpp"
#include "netpbm.hpp"

namespace fs = std::filesystem;

namespace scd {

namespace {

std::vector<std::string> stems_in(const fs::path& dir, const char* ext) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + ": not a directory");
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

void check_labels(const LabelMap& map, std::size_t num_classes, const fs::path& path) {
  for (std::size_t q = 0; q < map.size(); ++q) {
    if (map.values[q] > num_classes) {
      throw DataError(path.string() + ": label " + std::to_string(map.values[q]) + " at pixel (" +
                      std::to_string(q / map.width) + ", " + std::to_string(q % map.width) + ") exceeds " +
                      std::to_string(num_classes) + " classes");
    }
  }
}

}  // namespace

LabelMap SamplePair::change() const {
  LabelMap out(label1.height, label1.width);
  for (std::size_t q = 0; q < label1.size(); ++q) out.values[q] = label1.values[q] != 0 ? 1 : 0;
  return out;
}

std::vector<std::string> list_stems(const fs::path& dir) { return stems_in(dir / "im1", ".ppm"); }

std::vector<std::string> list_label_stems(const fs::path& dir) { return stems_in(dir / "label1", ".pgm"); }

std::optional<std::size_t> dataset_classes(const fs::path& dir) {
  const fs::path meta = dir / kDatasetMeta;
  if (!fs::exists(meta)) return std::nullopt;
  const Config cfg = Config::load(meta);
  if (!cfg.has("classes")) return std::nullopt;
  return static_cast<std::size_t>(cfg.get_int("classes"));
}

std::vector<std::string> check_pair_invariants(const SamplePair& s) {
  std::vector<std::string> out;
  std::size_t mismatched = 0;
  for (std::size_t q = 0; q < s.label1.size(); ++q) {
    if ((s.label1.values[q] == 0) != (s.label2.values[q] == 0)) ++mismatched;
  }
  if (mismatched) {
    out.push_back(s.stem + ": label1/label2 no-change areas differ at " + std::to_string(mismatched) + " pixels");
  }
  return out;
}

SamplePair read_sample(const fs::path& dir, const std::string& stem, std::size_t num_classes,
                       std::vector<std::string>* warnings) {
  SamplePair s;
  s.stem = stem;
  const fs::path p_im1 = dir / "im1" / (stem + ".ppm");
  const fs::path p_im2 = dir / "im2" / (stem + ".ppm");
  const fs::path p_l1 = dir / "label1" / (stem + ".pgm");
  const fs::path p_l2 = dir / "label2" / (stem + ".pgm");
  s.image1 = read_ppm(p_im1);
  s.image2 = read_ppm(p_im2);
  s.label1 = read_pgm(p_l1);
  s.label2 = read_pgm(p_l2);
  auto dims_match = [&](std::size_t h, std::size_t w) { return h == s.image1.height && w == s.image1.width; };
  if (!dims_match(s.image2.height, s.image2.width)) throw DataError(p_im2.string() + ": dimensions differ from im1");
  if (!dims_match(s.label1.height, s.label1.width)) throw DataError(p_l1.string() + ": dimensions differ from im1");
  if (!dims_match(s.label2.height, s.label2.width)) throw DataError(p_l2.string() + ": dimensions differ from im1");
  check_labels(s.label1, num_classes, p_l1);
  check_labels(s.label2, num_classes, p_l2);
  if (warnings) {
    auto w = check_pair_invariants(s);
    warnings->insert(warnings->end(), w.begin(), w.end());
  }
  return s;
}

std::vector<SamplePair> read_dataset(const fs::path& dir, std::size_t num_classes, std::vector<std::string>* warnings) {
  std::vector<SamplePair> out;
  for (const auto& stem : list_stems(dir)) out.push_back(read_sample(dir, stem, num_classes, warnings));
  if (out.empty()) throw DataError(dir.string() + ": dataset is empty");
  return out;
}

void write_sample(const fs::path& dir, const SamplePair& s) {
  for (const char* sub : {"im1", "im2", "label1", "label2"}) fs::create_directories(dir / sub);
  write_ppm(dir / "im1" / (s.stem + ".ppm"), s.image1);
  write_ppm(dir / "im2" / (s.stem + ".ppm"), s.image2);
  write_pgm(dir / "label1" / (s.stem + ".pgm"), s.label1);
  write_pgm(dir / "label2" / (s.stem + ".pgm"), s.label2);
}

void write_dataset_meta(const fs::path& dir, std::size_t num_classes) {
  fs::create_directories(dir);
  std::ofstream out(dir / kDatasetMeta, std::ios::trunc);
  if (!out) throw DataError((dir / kDatasetMeta).string() + ": cannot open for writing");
  out << "# semantic change dataset\nclasses = " << num_classes << '\n';
}

void write_prediction(const fs::path& dir, const std::string& stem, const LabelMap& s1, const LabelMap& s2) {
  fs::create_directories(dir / "label1");
  fs::create_directories(dir / "label2");
  write_pgm(dir / "label1" / (stem + ".pgm"), s1);
  write_pgm(dir / "label2" / (stem + ".pgm"), s2);
}

std::pair<LabelMap, LabelMap> read_prediction(const fs::path& dir, const std::string& stem, std::size_t num_classes) {
  const fs::path p1 = dir / "label1" / (stem + ".pgm");
  const fs::path p2 = dir / "label2" / (stem + ".pgm");
  LabelMap s1 = read_pgm(p1);
  LabelMap s2 = read_pgm(p2);
  if (!s1.same_shape(s2)) throw DataError(p2.string() + ": dimensions differ from label1");
  check_labels(s1, num_classes, p1);
  check_labels(s2, num_classes, p2);
  return {std::move(s1), std::move(s2)};
}

ValidationReport validate_dataset(const fs::path& dir, std::size_t num_classes) {
  ValidationReport report;
  std::vector<std::string> stems;
  try {
    stems = list_stems(dir);
  } catch (const Error& e) {
    report.errors.emplace_back(e.what());
    return report;
  }
  if (stems.empty()) report.errors.push_back(dir.string() + ": no samples under im1/");
  for (const auto& stem : stems) {
    try {
      SamplePair s = read_sample(dir, stem, num_classes, &report.warnings);
      ++report.samples;
      if (s.image1.height % 8 != 0 || s.image1.width % 8 != 0) {
        report.warnings.push_back(stem + ": dimensions not divisible by 8");
      }
      report.pixels += 2 * s.label1.size();
      for (std::size_t q = 0; q < s.label1.size(); ++q) {
        report.changed_pixels += (s.label1.values[q] != 0) + (s.label2.values[q] != 0);
      }
    } catch (const Error& e) {
      report.errors.emplace_back(e.what());
    }
  }
  return report;
}

}  // namespace scd
