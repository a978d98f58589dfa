#pragma once

// Image files, dataset manifests, synthetic data and model serialization.

#include "ptm/jpats.hpp"
#include "ptm/pats.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ptm {

// Binary PGM (P5). Values are scaled to [0, 1]; the grid is the centered
// unit-spaced window of the file's size.
Image parse_pgm(std::string_view bytes);
Image load_pgm(const std::string& path);
/// Values are clamped to [0, 1] and rounded to `maxval` levels.
std::string encode_pgm(const Image& img, int maxval = 255);
void save_pgm(const std::string& path, const Image& img, int maxval = 255);

struct ManifestEntry {
  std::string path;                       // PGM file, relative to the manifest
  std::optional<Eigen::VectorXd> values;  // inline pixels instead of a file
  std::optional<int> label;
};

struct DatasetManifest {
  SamplingGrid grid;
  std::vector<ManifestEntry> entries;
  bool normalize = false;

  /// Throws SchemaError unless labels are all absent or cover 0..M-1.
  void validate() const;
  /// Number of classes, 0 when unlabeled.
  int classes() const;
};

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(std::string_view text);
void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& path);

/// Images in manifest order; files are resolved against `base_dir`.
std::vector<Image> load_images(const DatasetManifest& m, const std::string& base_dir);
/// Images grouped by label.
LabeledSet load_labeled(const DatasetManifest& m, const std::string& base_dir);
std::vector<int> manifest_labels(const DatasetManifest& m);

Image normalized(const Image& u);

struct SynthSpec {
  SamplingGrid grid = SamplingGrid::centered(32, 32);
  MotherFunction mother = MotherFunction::gaussian();
  std::vector<int> atoms_per_class{10};
  int train_per_class = 50;
  int test_per_class = 0;
  TransformModel model = TransformModel::Full5;
  ParamDomain lambda_range;  // empty: default transform box
  ParamDomain gamma_range;   // empty: default atom box
  double noise_variance = 0.0;
  std::optional<double> signal_power;  // rescale clean images to this mean pixel power
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthResult {
  std::vector<Pattern> patterns;                      // per class
  LabeledSet train, test;
  std::vector<std::vector<TransformParams>> train_lambda, test_lambda;
  double signal_power = 0.0;                          // mean clean pixel power
  double snr_db = 0.0;                                // +inf without noise
};

SynthResult generate_synthetic(const SynthSpec& spec);

/// Inline manifest for a labeled set (labels in class order).
DatasetManifest manifest_of(const LabeledSet& images, bool with_labels = true);

inline constexpr int kModelSchemaVersion = 1;

std::string model_to_json(const LearnedModel& m);
LearnedModel learned_model_from_json(std::string_view text);
std::string class_model_to_json(const ClassModel& m);
ClassModel class_model_from_json(std::string_view text);

void save_model(const std::string& path, const LearnedModel& m);
LearnedModel load_model(const std::string& path);
void save_class_model(const std::string& path, const ClassModel& m);
ClassModel load_class_model(const std::string& path);

/// "kind" field of a model file ("pats" or "jpats").
std::string model_kind(std::string_view text);

inline constexpr const char* kErrorHeader = "atoms,normalized_error";
inline constexpr const char* kMisclassificationHeader = "atoms,misclassification_pct";

std::string format_csv(const std::string& header, const std::vector<std::pair<int, double>>& rows);
std::vector<std::pair<int, double>> parse_csv(std::string_view text, std::string* header = nullptr);

std::string error_csv(const std::vector<TracePoint>& trace);
/// One row per accepted iteration: (largest per-class atom count, % misclassified).
std::string misclassification_csv(const ClassModel& m);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace ptm
