#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "labels.hpp"

namespace scd {

// Two co-registered images and their semantic change maps.
struct SamplePair {
  std::string stem;
  RgbImage image1;
  RgbImage image2;
  LabelMap label1;
  LabelMap label2;

  // 1 where label1 is non-zero.
  LabelMap change() const;
};

// Directory layout: im1/<stem>.ppm, im2/<stem>.ppm, label1/<stem>.pgm,
// label2/<stem>.pgm, plus an optional dataset.cfg holding `classes = N`.
inline constexpr const char* kDatasetMeta = "dataset.cfg";

// Stems of im1/*.ppm in sorted order.
std::vector<std::string> list_stems(const std::filesystem::path& dir);
// Stems of label1/*.pgm in sorted order (prediction directories).
std::vector<std::string> list_label_stems(const std::filesystem::path& dir);

// Class count recorded in dataset.cfg, if present.
std::optional<std::size_t> dataset_classes(const std::filesystem::path& dir);

// Throws DataError on unreadable files, dimension disagreement or labels
// above num_classes. Soft invariant violations go to `warnings`.
SamplePair read_sample(const std::filesystem::path& dir, const std::string& stem, std::size_t num_classes,
                       std::vector<std::string>* warnings = nullptr);
std::vector<SamplePair> read_dataset(const std::filesystem::path& dir, std::size_t num_classes,
                                     std::vector<std::string>* warnings = nullptr);

void write_sample(const std::filesystem::path& dir, const SamplePair& sample);
void write_dataset_meta(const std::filesystem::path& dir, std::size_t num_classes);

// Writes label1/<stem>.pgm and label2/<stem>.pgm under dir.
void write_prediction(const std::filesystem::path& dir, const std::string& stem, const LabelMap& s1,
                      const LabelMap& s2);
std::pair<LabelMap, LabelMap> read_prediction(const std::filesystem::path& dir, const std::string& stem,
                                              std::size_t num_classes);

// Paired no-change convention: label1 == 0 exactly where label2 == 0.
std::vector<std::string> check_pair_invariants(const SamplePair& sample);

struct ValidationReport {
  std::size_t samples = 0;
  std::size_t pixels = 0;
  std::size_t changed_pixels = 0;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
  double changed_fraction() const {
    return pixels ? static_cast<double>(changed_pixels) / static_cast<double>(pixels) : 0.0;
  }
};

ValidationReport validate_dataset(const std::filesystem::path& dir, std::size_t num_classes);

}  // namespace scd
