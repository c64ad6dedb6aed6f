#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mailsentry/features.hpp"

namespace mailsentry {

class DegenerateDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-feature z-score statistics. Boolean features pass through (mean 0,
// inv_std 1); zero-variance continuous features map to 0 (inv_std 0).
struct Scaler {
  std::vector<double> mean;
  std::vector<double> inv_std;

  static Scaler fit(const std::vector<const FeatureVector*>& vectors,
                    const std::vector<ValueKind>& kinds);
  std::vector<double> transform(const FeatureVector& v) const;  // dense scaled copy
};

struct TrainingSet {
  std::vector<FeatureVector> positives;  // the user's own emails
  std::vector<FeatureVector> negatives;  // round-robin pool draws
  Scaler scaler;

  static TrainingSet make(std::vector<FeatureVector> positives,
                          std::vector<FeatureVector> negatives,
                          const std::vector<ValueKind>& kinds);
  std::uint32_t dim() const;
};

struct SvmHyperparams {
  double C = 1.0;
  double tol = 1e-3;
  int max_passes = 10;
};

enum class Verdict { user, not_user };

struct SvmModel {
  std::vector<double> weights;  // scaled feature space
  double bias = 0.0;
  std::vector<std::pair<std::uint32_t, double>> support_alphas;  // (training index, alpha)
  SvmHyperparams hyperparams;
  Scaler scaler;
  std::string schema_hash;
  std::uint32_t dim = 0;

  // margin = w . scale(v) + bias
  double margin(const FeatureVector& v) const;  // throws SchemaMismatchError
  // margin == 0 is classified not_user (fail-safe: a tie triggers verification)
  std::pair<Verdict, double> predict(const FeatureVector& v) const;

  void finalize();  // rebuilds the sparse-dot shortcut after load/train

 private:
  std::vector<double> weight_times_inv_;  // w[i] * inv_std[i]
  double margin_const_ = 0.0;             // bias - w . (inv_std * mean)
};

// Sequential minimal optimization for the linear-kernel dual. Deterministic
// for a fixed seed. Throws DegenerateDataError when every training vector is
// identical, and std::invalid_argument when a class is empty.
SvmModel train_smo(const TrainingSet& ts, const SvmHyperparams& hp, std::uint64_t seed);

// Batch margins; the OpenMP variant is slot-parallel and bitwise identical to
// the serial reference.
std::vector<double> margins_batch_serial(const SvmModel& model,
                                         std::span<const FeatureVector> vectors);
std::vector<double> margins_batch(const SvmModel& model, std::span<const FeatureVector> vectors);

}  // namespace mailsentry
