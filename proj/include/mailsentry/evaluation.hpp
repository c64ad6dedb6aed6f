#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mailsentry/pipeline.hpp"

namespace mailsentry {

class InsufficientHistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- k-fold cross-validation ----------------------------------------------------

struct KfoldResult {
  double fp_rate = 0.0;  // genuine email classified not_user
  double fn_rate = 0.0;  // negative-example email classified user
};

// Stratified k-fold over positives and negatives. writing_only restricts both
// training and testing to the writing-habit prefix of the schema.
KfoldResult kfold_validate(const std::vector<FeatureVector>& positives,
                           const std::vector<FeatureVector>& negatives, int k,
                           bool writing_only, const FeatureSchema& schema,
                           const SvmHyperparams& hp, std::uint64_t seed);

// Schema truncated to the writing-habit prefix; vectors sliced to match.
FeatureSchema writing_only_schema(const FeatureSchema& schema);
FeatureVector slice_to_schema(const FeatureVector& v, const FeatureSchema& sliced);

struct UserEvalRow {
  std::string user_id;
  std::uint64_t history = 0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
};

struct BucketRow {
  std::uint64_t bucket = 0;
  std::size_t users = 0;
  double mean_fp = 0.0, stddev_fp = 0.0;
  double mean_fn = 0.0, stddev_fn = 0.0;
};

struct EvaluationReport {
  std::vector<UserEvalRow> per_user;
  std::vector<BucketRow> buckets;
  bool ablation = false;
};

inline constexpr std::uint64_t kHistoryBuckets[] = {50, 100, 200, 500, 1000, 2000, 4000, 8000};

// Largest bucket <= history; users below the smallest bucket are dropped.
std::optional<std::uint64_t> bucket_for_history(std::uint64_t history);
EvaluationReport bucket_curves(std::vector<UserEvalRow> per_user, bool ablation);

// --- attack injection -----------------------------------------------------------

struct InjectionRow {
  std::string user_id;
  std::uint64_t history = 0;
  double tp_rate = 0.0;  // challenged fraction of the attack set
};

// Re-attributes every attack vector to every user (the From: rewrite leaves
// the feature vector unchanged) and runs the send-time decision.
std::vector<InjectionRow> inject_attacks(
    const std::map<std::string, BehavioralProfile>& profiles,
    const std::vector<FeatureVector>& attack_vectors);

// --- adversarial evasion ---------------------------------------------------------

enum class EvasionOp { coworker, peak_time, top_contact, mimic10, mimic20 };

struct EvasionStrategy {
  std::string label;          // e.g. "T+TC+M20"
  std::vector<EvasionOp> ops;  // applied left to right
};

// Tokens: C, T, TC, M10, M20, joined by '+'. Throws std::invalid_argument.
EvasionStrategy parse_strategy(const std::string& text);
std::vector<EvasionStrategy> default_strategies();  // the shipped eight

// What an attacker can learn from the victim's Sent folder alone.
struct VictimStats {
  std::vector<double> feature_means;            // dense, over the victim's own vectors
  std::vector<std::uint32_t> coworker_addr;     // L_a indices contacted at least once
  std::vector<std::uint32_t> coworker_dom;      // aligned domain indices (L_d)
  std::optional<std::uint32_t> top_contact_addr;
  std::optional<std::uint32_t> top_contact_dom;
  int peak_day = 0;
  int peak_hour = 0;
  std::vector<std::uint32_t> top_word_features;  // functional+context, by mean ratio desc
};

VictimStats compute_victim_stats(const std::vector<Email>& victim_emails,
                                 const std::vector<FeatureVector>& victim_vectors,
                                 const OrgContext& ctx, const FeatureSchema& schema);

// Offsets of the blocks an evasion strategy may touch.
struct SchemaLayout {
  std::uint32_t time_base = 0;      // 7 day bits then 24 hour bits
  std::uint32_t to_addr_base = 0;
  std::uint32_t to_addr_count = 0;  // includes "other"
  std::uint32_t to_dom_base = 0;
  std::uint32_t to_dom_count = 0;
  static SchemaLayout from(const FeatureSchema& schema, const OrgContext& ctx);
};

// Applies one strategy; only the features the strategy names change.
FeatureVector apply_evasion(const EvasionStrategy& strategy, FeatureVector v,
                            const VictimStats& stats, const SchemaLayout& layout,
                            std::uint64_t seed);

struct EvasionResult {
  std::string strategy;
  std::size_t failure = 0;    // modified set evades strictly less
  std::size_t success = 0;    // modified set evades strictly more
  std::size_t no_effect = 0;
  double avg_change_pct = 0.0;  // mean percentage-point change in evasion rate
};

std::vector<EvasionResult> evasion_matrix(
    const std::map<std::string, BehavioralProfile>& profiles,
    const std::map<std::string, VictimStats>& stats, const SchemaLayout& layout,
    const std::vector<FeatureVector>& attack_vectors,
    const std::vector<EvasionStrategy>& strategies, std::uint64_t seed);

// --- report emission -------------------------------------------------------------

std::string per_user_csv(const std::vector<UserEvalRow>& rows);
std::string injection_csv(const std::vector<InjectionRow>& rows);
std::string bucket_summary_json(const EvaluationReport& report);
// Fig-style plot data: history_size, metric, mean_rate, stddev
std::string plot_csv(const EvaluationReport& report);
std::string evasion_json(const std::vector<EvasionResult>& results);

}  // namespace mailsentry
