#pragma once

// Joint learning of one manifold per class. Atoms are chosen to reduce the
// approximation error plus a smoothed count of misclassified images, and an
// iteration is kept only if the exact count does not grow.

#include "ptm/pats.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ptm {

/// Logistic 1 / (1 + exp(-beta f)).
double sigmoid(double f, double beta);
/// Derivative of sigmoid(., beta) at f0. Kept strictly positive where the
/// exact value underflows.
double eta(double f0, double beta);

/// Slope of the logistic curve (offset 0) that best fits the 0/1 flags in
/// least squares, searched over [1e-2, 1e4]. Returns `previous` when all
/// flags agree.
double estimate_beta(const std::vector<double>& f0, const std::vector<int>& flags, double previous = 1.0);

struct AlphaSchedule {
  double start = 0.5;
  double end = 10.0;
  double center = 6.0;
  double slope = 1.0;

  double operator()(int iteration) const;
  void validate() const;
};

enum class BetaKind { Fitted, Fixed };

struct BetaPolicy {
  BetaKind kind = BetaKind::Fitted;
  double value = 1.0;  // fixed value, or the initial one when fitted
};

enum class BlockOrder { DescendingError, Natural };

struct JpatsConfig {
  PatsConfig base;
  AlphaSchedule alpha;
  BetaPolicy beta;
  double coef_significance = 0.05;
  BlockOrder block_order = BlockOrder::DescendingError;
  int patience = 3;         // iterations without a drop in the error count
  bool refresh_f0 = true;   // once, between the DC and descent stages

  void validate() const;
};

/// images[m] holds the training images of class m.
using LabeledSet = std::vector<std::vector<Image>>;

/// Projections of every image onto every class manifold, indexed
/// [class of the image][image][manifold].
struct CrossTable {
  std::vector<std::vector<std::vector<TransformParams>>> lambda;
  std::vector<std::vector<std::vector<double>>> distance;

  friend bool operator==(const CrossTable&, const CrossTable&) = default;
};

struct JpatsTracePoint {
  int iteration = 0;
  std::vector<int> atoms;  // per class
  double E_a = 0.0;
  int E_c = 0;
  double E = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  friend bool operator==(const JpatsTracePoint&, const JpatsTracePoint&) = default;
};

struct ClassModel {
  std::vector<Pattern> patterns;
  TransformModel model = TransformModel::Full5;
  ParamDomain lambda_domain;
  SamplingGrid grid;
  CrossTable cross;
  std::vector<JpatsTracePoint> trace;  // accepted iterations, starting with the initial state
  int iterations = 0;

  int classes() const { return static_cast<int>(patterns.size()); }
};

struct WeightState {
  double beta = 1.0;
  std::vector<std::vector<double>> f0;
  std::vector<std::vector<double>> eta;
  std::vector<std::vector<int>> rival;
  std::vector<std::vector<std::pair<int, int>>> R;  // R[m] holds (i, k) with rival[k][i] == m
};

WeightState update_rivals_and_weights(const CrossTable& cross, double beta);

/// 1 when the own-class distance is not strictly below every rival distance.
std::vector<std::vector<int>> misclassified(const CrossTable& cross);
int classification_error(const CrossTable& cross);
double approximation_error(const CrossTable& cross);

struct JointSelection {
  std::vector<AtomChoice> atoms;  // per class; c = 0 for inactive classes
  std::vector<int> order;         // block order used in the DC stage
};

/// `active[m]` false skips class m.
JointSelection joint_select_atoms(const LabeledSet& images, const ClassModel& models, const WeightState& weights,
                                  double alpha, const JpatsConfig& cfg, const std::vector<bool>& active = {});

struct JpatsHooks {
  std::function<void(int, std::vector<AtomChoice>&)> override_atoms;
  /// Called after every iteration with the committed state.
  std::function<void(int, const ClassModel&, bool accepted)> observe;
  std::function<void(const std::string&)> progress;
};

ClassModel run_jpats(const LabeledSet& images, const JpatsConfig& cfg, const JpatsHooks& hooks = {});

inline constexpr int kOutlier = -1;

/// Argmin label (ties to the lowest index), or kOutlier when the smallest
/// distance reaches the threshold.
int classify_from_distances(const std::vector<double>& distances, std::optional<double> reject_threshold);

struct Classification {
  int label = kOutlier;
  std::vector<double> distances;
};

Classification classify(const Image& u, const ClassModel& model, std::optional<double> reject_threshold,
                        const ProjectOptions& opts = {});
std::vector<Classification> classify_all(const std::vector<Image>& images, const ClassModel& model,
                                         std::optional<double> reject_threshold, const ProjectOptions& opts = {});

}  // namespace ptm
