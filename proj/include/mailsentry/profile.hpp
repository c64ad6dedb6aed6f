#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mailsentry/svm.hpp"

namespace mailsentry {

class InsufficientNegativesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BelowMinimumHistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VectorOrigin { initial, verified };

struct StoredVector {
  FeatureVector vector;
  int label = +1;  // +1 user, -1 negative example
  VectorOrigin origin = VectorOrigin::initial;
};

// Only feature vectors are ever stored, never email text.
struct BehavioralProfile {
  std::string user_id;
  std::optional<SvmModel> model;
  std::string schema_hash;
  std::uint64_t context_version = 0;
  std::vector<StoredVector> stored_vectors;
  std::uint64_t sent_count = 0;  // positive stored vectors + pending
  std::int64_t trained_at = 0;
  std::vector<FeatureVector> pending_updates;

  bool trained() const { return model.has_value(); }
  std::uint64_t digest() const;  // trained_at excluded, so it is seed-stable

  std::string to_json() const;
  static BehavioralProfile from_json(std::string_view text);
  void save(const std::string& path) const;
  static BehavioralProfile load(const std::string& path);
};

// Negative pools: one entry per other user, plus the external pool under the
// reserved key. Keys iterate in sorted order, which fixes the cycle order.
using NegativePools = std::map<std::string, std::vector<FeatureVector>>;
inline constexpr std::string_view kExternalPoolKey = "\x7f_external";

// Builds M_o by cycling through the other users (then the external pool),
// drawing one uniformly random unused vector from the pool under the cursor;
// exhausted pools are skipped. |negatives| == |positives| on success.
TrainingSet assemble_training_set(const std::string& user_id,
                                  std::vector<FeatureVector> user_vectors,
                                  const NegativePools& pools,
                                  const std::vector<ValueKind>& kinds, std::uint64_t seed);

struct ProfileTrainingConfig {
  SvmHyperparams svm;
  std::uint64_t min_history = 50;
  std::uint64_t retrain_threshold = 50;
};

BehavioralProfile build_profile(const std::string& user_id,
                                std::vector<FeatureVector> user_vectors,
                                const NegativePools& pools, const FeatureSchema& schema,
                                const ProfileTrainingConfig& cfg, std::uint64_t seed,
                                std::int64_t trained_at);

// Appends a validated vector; the model itself is untouched until retrain.
void queue_update(BehavioralProfile& profile, FeatureVector v);

bool retrain_due(const BehavioralProfile& profile, std::uint64_t threshold);

// Merges pending updates into the positives (origin = verified), assembles a
// fresh negative set and retrains. Errors when nothing is pending.
BehavioralProfile retrain(BehavioralProfile profile, const NegativePools& pools,
                          const FeatureSchema& schema, const ProfileTrainingConfig& cfg,
                          std::uint64_t seed, std::int64_t trained_at);

// profiles/<user_id>.json
std::string profile_path(const std::string& profiles_dir, const std::string& user_id);

}  // namespace mailsentry
