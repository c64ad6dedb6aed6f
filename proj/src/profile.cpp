#include "mailsentry/profile.hpp"

#include <algorithm>
#include <filesystem>
#include <random>

#include <nlohmann/json.hpp>

namespace mailsentry {

namespace {

void hash_vector(std::uint64_t& h, const FeatureVector& v) {
  h = fnv1a64(v.schema_hash, h);
  for (const auto& [i, x] : v.items) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&i), sizeof(i)), h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&x), sizeof(x)), h);
  }
}

void hash_doubles(std::uint64_t& h, const std::vector<double>& values) {
  h = fnv1a64(std::string_view(reinterpret_cast<const char*>(values.data()),
                               values.size() * sizeof(double)),
              h);
}

nlohmann::json vector_to_json(const FeatureVector& v) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& [i, x] : v.items) items.push_back({i, x});
  return {{"dim", v.dim}, {"items", std::move(items)}};
}

FeatureVector vector_from_json(const nlohmann::json& j, const std::string& schema_hash) {
  FeatureVector v;
  v.schema_hash = schema_hash;
  v.dim = j.at("dim").get<std::uint32_t>();
  for (const auto& item : j.at("items"))
    v.items.emplace_back(item.at(0).get<std::uint32_t>(), item.at(1).get<double>());
  return v;
}

}  // namespace

std::uint64_t BehavioralProfile::digest() const {
  std::uint64_t h = fnv1a64(user_id);
  h = fnv1a64(schema_hash, h);
  h = fnv1a64(std::to_string(context_version), h);
  h = fnv1a64(std::to_string(sent_count), h);
  if (model) {
    hash_doubles(h, model->weights);
    double b = model->bias;
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&b), sizeof(b)), h);
    hash_doubles(h, model->scaler.mean);
    hash_doubles(h, model->scaler.inv_std);
    for (const auto& [i, a] : model->support_alphas) {
      h = fnv1a64(std::to_string(i), h);
      h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&a), sizeof(a)), h);
    }
  }
  for (const auto& sv : stored_vectors) {
    h = fnv1a64(sv.label > 0 ? "+" : "-", h);
    h = fnv1a64(sv.origin == VectorOrigin::initial ? "i" : "v", h);
    hash_vector(h, sv.vector);
  }
  for (const auto& v : pending_updates) hash_vector(h, v);
  return h;
}

std::string BehavioralProfile::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["user_id"] = user_id;
  j["schema_hash"] = schema_hash;
  j["context_version"] = context_version;
  j["sent_count"] = sent_count;
  j["trained_at"] = trained_at;
  if (model) {
    nlohmann::json m;
    m["bias"] = model->bias;
    m["dim"] = model->dim;
    m["weights"] = model->weights;
    m["scaler_mean"] = model->scaler.mean;
    m["scaler_inv_std"] = model->scaler.inv_std;
    nlohmann::json alphas = nlohmann::json::array();
    for (const auto& [i, a] : model->support_alphas) alphas.push_back({i, a});
    m["support_alphas"] = std::move(alphas);
    m["hyperparams"] = {{"C", model->hyperparams.C},
                        {"tol", model->hyperparams.tol},
                        {"max_passes", model->hyperparams.max_passes}};
    j["model"] = std::move(m);
  } else {
    j["model"] = nullptr;
  }
  nlohmann::json stored = nlohmann::json::array();
  for (const auto& sv : stored_vectors) {
    nlohmann::json e = vector_to_json(sv.vector);
    e["label"] = sv.label;
    e["origin"] = sv.origin == VectorOrigin::initial ? "initial" : "verified";
    stored.push_back(std::move(e));
  }
  j["stored_vectors"] = std::move(stored);
  nlohmann::json pending = nlohmann::json::array();
  for (const auto& v : pending_updates) pending.push_back(vector_to_json(v));
  j["pending_updates"] = std::move(pending);
  return j.dump();
}

BehavioralProfile BehavioralProfile::from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text);
  BehavioralProfile p;
  p.user_id = j.at("user_id").get<std::string>();
  p.schema_hash = j.at("schema_hash").get<std::string>();
  p.context_version = j.at("context_version").get<std::uint64_t>();
  p.sent_count = j.at("sent_count").get<std::uint64_t>();
  p.trained_at = j.at("trained_at").get<std::int64_t>();
  if (!j.at("model").is_null()) {
    const nlohmann::json& m = j["model"];
    SvmModel model;
    model.bias = m.at("bias").get<double>();
    model.dim = m.at("dim").get<std::uint32_t>();
    model.weights = m.at("weights").get<std::vector<double>>();
    model.scaler.mean = m.at("scaler_mean").get<std::vector<double>>();
    model.scaler.inv_std = m.at("scaler_inv_std").get<std::vector<double>>();
    for (const auto& a : m.at("support_alphas"))
      model.support_alphas.emplace_back(a.at(0).get<std::uint32_t>(), a.at(1).get<double>());
    model.hyperparams.C = m.at("hyperparams").at("C").get<double>();
    model.hyperparams.tol = m.at("hyperparams").at("tol").get<double>();
    model.hyperparams.max_passes = m.at("hyperparams").at("max_passes").get<int>();
    model.schema_hash = p.schema_hash;
    model.finalize();
    p.model = std::move(model);
  }
  for (const auto& e : j.at("stored_vectors")) {
    StoredVector sv;
    sv.vector = vector_from_json(e, p.schema_hash);
    sv.label = e.at("label").get<int>();
    sv.origin = e.at("origin").get<std::string>() == "verified" ? VectorOrigin::verified
                                                                : VectorOrigin::initial;
    p.stored_vectors.push_back(std::move(sv));
  }
  for (const auto& e : j.at("pending_updates"))
    p.pending_updates.push_back(vector_from_json(e, p.schema_hash));
  return p;
}

void BehavioralProfile::save(const std::string& path) const {
  // write-then-rename so readers never observe a half-written profile
  const std::string tmp = path + ".tmp";
  write_file(tmp, to_json());
  std::filesystem::rename(tmp, path);
}

BehavioralProfile BehavioralProfile::load(const std::string& path) {
  return from_json(read_file(path));
}

TrainingSet assemble_training_set(const std::string& user_id,
                                  std::vector<FeatureVector> user_vectors,
                                  const NegativePools& pools,
                                  const std::vector<ValueKind>& kinds, std::uint64_t seed) {
  if (user_vectors.empty())
    throw std::invalid_argument("assemble_training_set: no positives for " + user_id);

  // cycle order: sorted other-user ids, external pool last
  std::vector<const std::vector<FeatureVector>*> cycle;
  const std::vector<FeatureVector>* external = nullptr;
  for (const auto& [id, vecs] : pools) {
    if (id == user_id || vecs.empty()) continue;
    if (id == kExternalPoolKey)
      external = &vecs;
    else
      cycle.push_back(&vecs);
  }
  if (external) cycle.push_back(external);

  size_t total_available = 0;
  for (const auto* pool : cycle) total_available += pool->size();
  if (total_available < user_vectors.size())
    throw InsufficientNegativesError(
        "need " + std::to_string(user_vectors.size()) + " negatives for " + user_id +
        " but pools hold " + std::to_string(total_available));

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::uint32_t>> unused(cycle.size());
  for (size_t p = 0; p < cycle.size(); ++p) {
    unused[p].resize(cycle[p]->size());
    for (std::uint32_t i = 0; i < unused[p].size(); ++i) unused[p][i] = i;
  }

  std::vector<FeatureVector> negatives;
  negatives.reserve(user_vectors.size());
  size_t cursor = 0;
  for (size_t k = 0; k < user_vectors.size(); ++k) {
    size_t attempts = 0;
    while (unused[cursor % cycle.size()].empty() && attempts < cycle.size()) {
      ++cursor;
      ++attempts;
    }
    auto& avail = unused[cursor % cycle.size()];
    const auto& pool = *cycle[cursor % cycle.size()];
    ++cursor;
    const size_t pick = static_cast<size_t>(rng() % avail.size());
    negatives.push_back(pool[avail[pick]]);
    avail[pick] = avail.back();
    avail.pop_back();
  }

  return TrainingSet::make(std::move(user_vectors), std::move(negatives), kinds);
}

BehavioralProfile build_profile(const std::string& user_id,
                                std::vector<FeatureVector> user_vectors,
                                const NegativePools& pools, const FeatureSchema& schema,
                                const ProfileTrainingConfig& cfg, std::uint64_t seed,
                                std::int64_t trained_at) {
  if (user_vectors.size() < cfg.min_history)
    throw BelowMinimumHistoryError("user " + user_id + " has " +
                                   std::to_string(user_vectors.size()) + " emails, minimum is " +
                                   std::to_string(cfg.min_history));
  TrainingSet ts =
      assemble_training_set(user_id, std::move(user_vectors), pools, schema_kinds(schema), seed);
  SvmModel model = train_smo(ts, cfg.svm, seed);

  BehavioralProfile p;
  p.user_id = user_id;
  p.schema_hash = schema.hash;
  p.context_version = schema.context_version;
  p.trained_at = trained_at;
  p.sent_count = ts.positives.size();
  p.stored_vectors.reserve(ts.positives.size() + ts.negatives.size());
  for (auto& v : ts.positives) p.stored_vectors.push_back({std::move(v), +1, VectorOrigin::initial});
  for (auto& v : ts.negatives) p.stored_vectors.push_back({std::move(v), -1, VectorOrigin::initial});
  p.model = std::move(model);
  return p;
}

void queue_update(BehavioralProfile& profile, FeatureVector v) {
  if (v.schema_hash != profile.schema_hash)
    throw SchemaMismatchError("queued vector schema does not match profile");
  profile.pending_updates.push_back(std::move(v));
  ++profile.sent_count;
}

bool retrain_due(const BehavioralProfile& profile, std::uint64_t threshold) {
  return profile.pending_updates.size() >= threshold;
}

BehavioralProfile retrain(BehavioralProfile profile, const NegativePools& pools,
                          const FeatureSchema& schema, const ProfileTrainingConfig& cfg,
                          std::uint64_t seed, std::int64_t trained_at) {
  if (profile.pending_updates.empty())
    throw std::invalid_argument("retrain: no pending updates for " + profile.user_id);
  std::vector<FeatureVector> positives;
  std::vector<VectorOrigin> origins;
  for (auto& sv : profile.stored_vectors)
    if (sv.label > 0) {
      positives.push_back(std::move(sv.vector));
      origins.push_back(sv.origin);
    }
  // everything merged from pending becomes verified
  for (auto& v : profile.pending_updates) {
    positives.push_back(std::move(v));
    origins.push_back(VectorOrigin::verified);
  }
  profile.pending_updates.clear();

  TrainingSet ts =
      assemble_training_set(profile.user_id, std::move(positives), pools, schema_kinds(schema),
                            seed);
  SvmModel model = train_smo(ts, cfg.svm, seed);

  BehavioralProfile out;
  out.user_id = profile.user_id;
  out.schema_hash = schema.hash;
  out.context_version = schema.context_version;
  out.trained_at = trained_at;
  out.sent_count = ts.positives.size();
  for (size_t i = 0; i < ts.positives.size(); ++i)
    out.stored_vectors.push_back({std::move(ts.positives[i]), +1, origins[i]});
  for (auto& v : ts.negatives) out.stored_vectors.push_back({std::move(v), -1, VectorOrigin::initial});
  out.model = std::move(model);
  return out;
}

std::string profile_path(const std::string& profiles_dir, const std::string& user_id) {
  std::string safe;
  for (char c : user_id)
    safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')
                ? c
                : '_';
  return profiles_dir + "/" + safe + ".json";
}

}  // namespace mailsentry
