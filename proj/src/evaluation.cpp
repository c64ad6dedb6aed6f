#include "mailsentry/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mailsentry {

namespace {
constexpr std::uint32_t kNoDomain = 0xffffffffu;
}  // namespace

FeatureSchema writing_only_schema(const FeatureSchema& schema) {
  FeatureSchema s;
  s.entries.assign(schema.entries.begin(),
                   schema.entries.begin() + schema.writing_feature_count);
  s.context_version = schema.context_version;
  s.writing_feature_count = schema.writing_feature_count;
  s.hash = hex64(fnv1a64(schema.hash + ":writing_only"));
  return s;
}

FeatureVector slice_to_schema(const FeatureVector& v, const FeatureSchema& sliced) {
  FeatureVector out;
  out.schema_hash = sliced.hash;
  out.dim = sliced.size();
  for (const auto& [i, x] : v.items) {
    if (i >= out.dim) break;  // items are sorted
    out.items.emplace_back(i, x);
  }
  return out;
}

namespace {

std::vector<std::vector<std::uint32_t>> make_folds(size_t n, int k, std::mt19937_64& rng) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::vector<std::vector<std::uint32_t>> folds(k);
  for (size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
  return folds;
}

}  // namespace

KfoldResult kfold_validate(const std::vector<FeatureVector>& positives,
                           const std::vector<FeatureVector>& negatives, int k,
                           bool writing_only, const FeatureSchema& schema,
                           const SvmHyperparams& hp, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_validate requires k >= 2");
  if (positives.size() < static_cast<size_t>(k) || negatives.size() < static_cast<size_t>(k))
    throw InsufficientHistoryError("need at least " + std::to_string(k) +
                                   " emails per class for " + std::to_string(k) + "-fold");

  const FeatureSchema effective = writing_only ? writing_only_schema(schema) : schema;
  std::vector<FeatureVector> pos, neg;
  pos.reserve(positives.size());
  neg.reserve(negatives.size());
  if (writing_only) {
    for (const auto& v : positives) pos.push_back(slice_to_schema(v, effective));
    for (const auto& v : negatives) neg.push_back(slice_to_schema(v, effective));
  } else {
    pos = positives;
    neg = negatives;
  }
  const std::vector<ValueKind> kinds = schema_kinds(effective);

  std::mt19937_64 rng(seed);
  auto pos_folds = make_folds(pos.size(), k, rng);
  auto neg_folds = make_folds(neg.size(), k, rng);

  size_t fp = 0, fn = 0, pos_tested = 0, neg_tested = 0;
  for (int fold = 0; fold < k; ++fold) {
    std::vector<FeatureVector> train_pos, train_neg;
    std::vector<char> pos_in_test(pos.size(), 0), neg_in_test(neg.size(), 0);
    for (auto i : pos_folds[fold]) pos_in_test[i] = 1;
    for (auto i : neg_folds[fold]) neg_in_test[i] = 1;
    for (size_t i = 0; i < pos.size(); ++i)
      if (!pos_in_test[i]) train_pos.push_back(pos[i]);
    for (size_t i = 0; i < neg.size(); ++i)
      if (!neg_in_test[i]) train_neg.push_back(neg[i]);
    if (train_pos.empty() || train_neg.empty()) continue;

    SvmModel model;
    try {
      model = train_smo(TrainingSet::make(std::move(train_pos), std::move(train_neg), kinds), hp,
                        fnv1a64(std::to_string(fold), seed));
    } catch (const DegenerateDataError&) {
      // an untrainable fold challenges everything it sees
      fp += pos_folds[fold].size();
      pos_tested += pos_folds[fold].size();
      neg_tested += neg_folds[fold].size();
      continue;
    }
    for (auto i : pos_folds[fold]) {
      ++pos_tested;
      if (model.predict(pos[i]).first != Verdict::user) ++fp;
    }
    for (auto i : neg_folds[fold]) {
      ++neg_tested;
      if (model.predict(neg[i]).first == Verdict::user) ++fn;
    }
  }
  KfoldResult r;
  r.fp_rate = pos_tested ? static_cast<double>(fp) / pos_tested : 0.0;
  r.fn_rate = neg_tested ? static_cast<double>(fn) / neg_tested : 0.0;
  return r;
}

std::optional<std::uint64_t> bucket_for_history(std::uint64_t history) {
  std::optional<std::uint64_t> best;
  for (std::uint64_t b : kHistoryBuckets)
    if (history >= b) best = b;
  return best;
}

EvaluationReport bucket_curves(std::vector<UserEvalRow> per_user, bool ablation) {
  EvaluationReport report;
  report.ablation = ablation;
  std::map<std::uint64_t, std::vector<const UserEvalRow*>> grouped;
  for (const auto& row : per_user)
    if (auto b = bucket_for_history(row.history)) grouped[*b].push_back(&row);
  for (const auto& [bucket, rows] : grouped) {
    BucketRow b;
    b.bucket = bucket;
    b.users = rows.size();
    double sfp = 0, sfn = 0;
    for (const auto* r : rows) {
      sfp += r->fp_rate;
      sfn += r->fn_rate;
    }
    b.mean_fp = sfp / rows.size();
    b.mean_fn = sfn / rows.size();
    double vfp = 0, vfn = 0;
    for (const auto* r : rows) {
      vfp += (r->fp_rate - b.mean_fp) * (r->fp_rate - b.mean_fp);
      vfn += (r->fn_rate - b.mean_fn) * (r->fn_rate - b.mean_fn);
    }
    b.stddev_fp = std::sqrt(vfp / rows.size());
    b.stddev_fn = std::sqrt(vfn / rows.size());
    report.buckets.push_back(b);
  }
  report.per_user = std::move(per_user);
  return report;
}

std::vector<InjectionRow> inject_attacks(
    const std::map<std::string, BehavioralProfile>& profiles,
    const std::vector<FeatureVector>& attack_vectors) {
  std::vector<InjectionRow> rows;
  rows.reserve(profiles.size());
  for (const auto& [user_id, profile] : profiles) {
    InjectionRow row;
    row.user_id = user_id;
    row.history = profile.sent_count;
    if (!attack_vectors.empty()) {
      size_t challenged = 0;
      for (const auto& v : attack_vectors)
        if (decide_vector(v, profile, "").verdict == DecisionVerdict::challenged) ++challenged;
      row.tp_rate = static_cast<double>(challenged) / attack_vectors.size();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

EvasionStrategy parse_strategy(const std::string& text) {
  EvasionStrategy s;
  s.label = text;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, '+')) {
    std::string t(trim(token));
    if (t == "C")
      s.ops.push_back(EvasionOp::coworker);
    else if (t == "T")
      s.ops.push_back(EvasionOp::peak_time);
    else if (t == "TC")
      s.ops.push_back(EvasionOp::top_contact);
    else if (t == "M10")
      s.ops.push_back(EvasionOp::mimic10);
    else if (t == "M20")
      s.ops.push_back(EvasionOp::mimic20);
    else
      throw std::invalid_argument("unknown evasion op: " + t);
  }
  if (s.ops.empty()) throw std::invalid_argument("empty evasion strategy");
  return s;
}

std::vector<EvasionStrategy> default_strategies() {
  std::vector<EvasionStrategy> out;
  for (const char* label : {"C", "T", "T+C", "M10", "M20", "T+TC", "T+TC+M10", "T+TC+M20"})
    out.push_back(parse_strategy(label));
  return out;
}

VictimStats compute_victim_stats(const std::vector<Email>& victim_emails,
                                 const std::vector<FeatureVector>& victim_vectors,
                                 const OrgContext& ctx, const FeatureSchema& schema) {
  VictimStats stats;
  stats.feature_means.assign(schema.size(), 0.0);
  for (const auto& v : victim_vectors)
    for (const auto& [i, x] : v.items) stats.feature_means[i] += x;
  if (!victim_vectors.empty())
    for (double& m : stats.feature_means) m /= static_cast<double>(victim_vectors.size());

  // contacts, restricted to what the org context can express
  std::map<std::uint32_t, std::uint64_t> contact_counts;  // addr index -> count
  std::array<std::array<std::uint64_t, 24>, 7> when{};
  for (const Email& e : victim_emails) {
    for (const Address& a : e.recipients)
      if (auto i = ctx.address_index(to_lower(a.str()))) ++contact_counts[*i];
    if (e.weekday >= 0 && e.weekday < 7 && e.hour >= 0 && e.hour < 24)
      ++when[e.weekday][e.hour];
  }
  std::uint64_t best_count = 0;
  for (const auto& [addr_idx, count] : contact_counts) {
    const std::string& addr = ctx.contacted_addresses()[addr_idx];
    auto dom = ctx.domain_index(addr.substr(addr.find('@') + 1));
    // context construction always records the domain alongside the address
    std::uint32_t dom_idx = dom.value_or(kNoDomain);
    stats.coworker_addr.push_back(addr_idx);
    stats.coworker_dom.push_back(dom_idx);
    if (count > best_count) {
      best_count = count;
      stats.top_contact_addr = addr_idx;
      stats.top_contact_dom = dom_idx;
    }
  }

  std::uint64_t best_when = 0;
  for (int d = 0; d < 7; ++d)
    for (int h = 0; h < 24; ++h)
      if (when[d][h] > best_when) {
        best_when = when[d][h];
        stats.peak_day = d;
        stats.peak_hour = h;
      }

  // functional + context-word features ranked by the victim's mean ratio
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t i = 0; i < schema.size(); ++i) {
    auto fam = schema.entries[i].family;
    if (fam == FeatureFamily::functional || fam == FeatureFamily::context_word)
      candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::uint32_t a, std::uint32_t b) {
    return stats.feature_means[a] > stats.feature_means[b];
  });
  stats.top_word_features = std::move(candidates);
  return stats;
}

SchemaLayout SchemaLayout::from(const FeatureSchema& schema, const OrgContext& ctx) {
  SchemaLayout l;
  bool time_seen = false, inter_seen = false;
  for (std::uint32_t i = 0; i < schema.size(); ++i) {
    if (!time_seen && schema.entries[i].family == FeatureFamily::time) {
      l.time_base = i;
      time_seen = true;
    }
    if (!inter_seen && schema.entries[i].family == FeatureFamily::interaction) {
      l.to_addr_base = i;
      inter_seen = true;
    }
  }
  l.to_addr_count = static_cast<std::uint32_t>(ctx.contacted_addresses().size()) + 1;
  l.to_dom_base = l.to_addr_base + l.to_addr_count;
  l.to_dom_count = static_cast<std::uint32_t>(ctx.contacted_domains().size()) + 1;
  return l;
}

namespace {

void clear_range(FeatureVector& v, std::uint32_t base, std::uint32_t count) {
  v.items.erase(std::remove_if(v.items.begin(), v.items.end(),
                               [&](const auto& p) {
                                 return p.first >= base && p.first < base + count;
                               }),
                v.items.end());
}

void set_recipient(FeatureVector& v, const SchemaLayout& layout, std::uint32_t addr_idx,
                   std::uint32_t dom_idx) {
  clear_range(v, layout.to_addr_base, layout.to_addr_count);
  clear_range(v, layout.to_dom_base, layout.to_dom_count);
  v.set(layout.to_addr_base + addr_idx, 1.0);
  if (dom_idx != kNoDomain) v.set(layout.to_dom_base + dom_idx, 1.0);
}

}  // namespace

FeatureVector apply_evasion(const EvasionStrategy& strategy, FeatureVector v,
                            const VictimStats& stats, const SchemaLayout& layout,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (EvasionOp op : strategy.ops) {
    switch (op) {
      case EvasionOp::coworker: {
        if (stats.coworker_addr.empty()) break;  // nothing learnable, no-op
        size_t pick = static_cast<size_t>(rng() % stats.coworker_addr.size());
        set_recipient(v, layout, stats.coworker_addr[pick], stats.coworker_dom[pick]);
        break;
      }
      case EvasionOp::top_contact: {
        if (!stats.top_contact_addr) break;
        set_recipient(v, layout, *stats.top_contact_addr, *stats.top_contact_dom);
        break;
      }
      case EvasionOp::peak_time: {
        clear_range(v, layout.time_base, 31);
        v.set(layout.time_base + static_cast<std::uint32_t>(stats.peak_day), 1.0);
        v.set(layout.time_base + 7 + static_cast<std::uint32_t>(stats.peak_hour), 1.0);
        break;
      }
      case EvasionOp::mimic10:
      case EvasionOp::mimic20: {
        const size_t n = op == EvasionOp::mimic10 ? 10 : 20;
        for (size_t i = 0; i < n && i < stats.top_word_features.size(); ++i) {
          std::uint32_t idx = stats.top_word_features[i];
          v.set(idx, stats.feature_means[idx]);
        }
        break;
      }
    }
  }
  return v;
}

std::vector<EvasionResult> evasion_matrix(
    const std::map<std::string, BehavioralProfile>& profiles,
    const std::map<std::string, VictimStats>& stats, const SchemaLayout& layout,
    const std::vector<FeatureVector>& attack_vectors,
    const std::vector<EvasionStrategy>& strategies, std::uint64_t seed) {
  std::vector<EvasionResult> results;
  for (const auto& strategy : strategies) {
    EvasionResult res;
    res.strategy = strategy.label;
    double change_sum = 0.0;
    size_t users = 0;
    for (const auto& [user_id, profile] : profiles) {
      auto st = stats.find(user_id);
      if (st == stats.end()) continue;
      ++users;
      size_t base_evaded = 0, mod_evaded = 0;
      for (size_t i = 0; i < attack_vectors.size(); ++i) {
        const FeatureVector& v = attack_vectors[i];
        if (decide_vector(v, profile, "").verdict == DecisionVerdict::accepted) ++base_evaded;
        std::uint64_t s =
            fnv1a64(strategy.label, fnv1a64(user_id, seed ^ (0x9e3779b97f4a7c15ull * (i + 1))));
        FeatureVector mod = apply_evasion(strategy, v, st->second, layout, s);
        if (decide_vector(mod, profile, "").verdict == DecisionVerdict::accepted) ++mod_evaded;
      }
      if (mod_evaded > base_evaded)
        ++res.success;
      else if (mod_evaded < base_evaded)
        ++res.failure;
      else
        ++res.no_effect;
      if (!attack_vectors.empty())
        change_sum += 100.0 *
                      (static_cast<double>(mod_evaded) - static_cast<double>(base_evaded)) /
                      static_cast<double>(attack_vectors.size());
    }
    res.avg_change_pct = users ? change_sum / static_cast<double>(users) : 0.0;
    results.push_back(std::move(res));
  }
  return results;
}

std::string per_user_csv(const std::vector<UserEvalRow>& rows) {
  std::string out = "user_id,history,fp_rate,fn_rate\n";
  for (const auto& r : rows)
    out += r.user_id + "," + std::to_string(r.history) + "," + format_double(r.fp_rate) + "," +
           format_double(r.fn_rate) + "\n";
  return out;
}

std::string injection_csv(const std::vector<InjectionRow>& rows) {
  std::string out = "user_id,history,tp_rate\n";
  for (const auto& r : rows)
    out += r.user_id + "," + std::to_string(r.history) + "," + format_double(r.tp_rate) + "\n";
  return out;
}

std::string bucket_summary_json(const EvaluationReport& report) {
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& b : report.buckets)
    buckets.push_back({{"history_bucket", b.bucket},
                       {"users", b.users},
                       {"mean_fp", b.mean_fp},
                       {"stddev_fp", b.stddev_fp},
                       {"mean_fn", b.mean_fn},
                       {"stddev_fn", b.stddev_fn}});
  nlohmann::json j{{"ablation", report.ablation}, {"buckets", std::move(buckets)}};
  return j.dump(2);
}

std::string plot_csv(const EvaluationReport& report) {
  std::string out = "history_size,metric,mean_rate,stddev\n";
  for (const auto& b : report.buckets) {
    out += std::to_string(b.bucket) + ",fp," + format_double(b.mean_fp) + "," +
           format_double(b.stddev_fp) + "\n";
    out += std::to_string(b.bucket) + ",fn," + format_double(b.mean_fn) + "," +
           format_double(b.stddev_fn) + "\n";
  }
  return out;
}

std::string evasion_json(const std::vector<EvasionResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results)
    arr.push_back({{"strategy", r.strategy},
                   {"failure", r.failure},
                   {"success", r.success},
                   {"no_effect", r.no_effect},
                   {"avg_change_pct", r.avg_change_pct}});
  return arr.dump(2);
}

}  // namespace mailsentry
