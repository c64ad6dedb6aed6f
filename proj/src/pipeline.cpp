#include "mailsentry/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

namespace mailsentry {

Decision decide_vector(const FeatureVector& v, const BehavioralProfile& profile,
                       const std::string& email_id) {
  Decision d;
  d.email_id = email_id;
  if (!profile.trained()) {
    d.verdict = DecisionVerdict::challenged;
    d.reasons.push_back("untrained");
    return d;
  }
  if (v.schema_hash != profile.schema_hash)
    throw SchemaMismatchError("vector schema does not match profile " + profile.user_id);

  // replay guard: exact feature-vector equality with anything seen before
  for (const auto& sv : profile.stored_vectors)
    if (sv.vector == v) {
      d.verdict = DecisionVerdict::challenged;
      d.reasons.push_back("replay");
      return d;
    }
  for (const auto& pv : profile.pending_updates)
    if (pv == v) {
      d.verdict = DecisionVerdict::challenged;
      d.reasons.push_back("replay");
      return d;
    }

  auto [verdict, margin] = profile.model->predict(v);
  d.margin = margin;
  if (verdict == Verdict::user) {
    d.verdict = DecisionVerdict::accepted;
  } else {
    d.verdict = DecisionVerdict::challenged;
    d.reasons.push_back("margin");
  }
  return d;
}

Decision check_outgoing(const Email& email, BehavioralProfile& profile,
                        const FeatureExtractor& extractor, FeatureVector* extracted) {
  FeatureVector v = extractor.extract(email);
  Decision d = decide_vector(v, profile, email.message_id);
  if (d.verdict == DecisionVerdict::accepted) queue_update(profile, v);
  if (extracted) *extracted = std::move(v);
  return d;
}

FinalAction resolve_verification(const Decision& decision, const VerificationOutcome& outcome,
                                 BehavioralProfile& profile, const FeatureVector& vector) {
  if (decision.verdict != DecisionVerdict::challenged)
    throw std::invalid_argument("resolve_verification on a non-challenged decision");
  if (decision.email_id != outcome.email_id)
    throw std::invalid_argument("outcome email id " + outcome.email_id +
                                " does not match decision " + decision.email_id);
  if (outcome.result == VerificationResult::confirmed) {
    queue_update(profile, vector);
    return FinalAction::released;
  }
  return FinalAction::discarded;  // failed and timeout are treated alike
}

VerificationResult PromptResponder::respond(const std::string& email_id, const Email& email) {
  std::cerr << "identity verification for email " << email_id << " (subject: " << email.subject
            << ")\nconfirm? [y/N] " << std::flush;
  std::string line;
  if (!std::getline(std::cin, line)) return VerificationResult::timeout;
  auto t = trim(line);
  return (t == "y" || t == "Y" || iequals(t, "yes")) ? VerificationResult::confirmed
                                                     : VerificationResult::failed;
}

OracleResponder::OracleResponder(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  for (const auto& [key, value] : j.items()) {
    if (key == "*")
      fallback_ = value.get<std::string>();
    else
      answers_[key] = value.get<std::string>();
  }
}

VerificationResult OracleResponder::respond(const std::string& email_id, const Email&) {
  auto it = answers_.find(email_id);
  const std::string& a = it != answers_.end() ? it->second : fallback_;
  if (a == "confirm") return VerificationResult::confirmed;
  if (a == "fail") return VerificationResult::failed;
  return VerificationResult::timeout;
}

std::unique_ptr<VerificationResponder> make_responder(const std::string& spec) {
  if (spec == "prompt") return std::make_unique<PromptResponder>();
  if (spec == "always_fail") return std::make_unique<AlwaysFailResponder>();
  if (spec.starts_with("oracle:")) return std::make_unique<OracleResponder>(spec.substr(7));
  throw std::invalid_argument("unknown verification responder: " + spec);
}

namespace {

nlohmann::json vector_json(const FeatureVector& v) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& [i, x] : v.items) items.push_back({i, x});
  return {{"dim", v.dim}, {"items", std::move(items)}};
}

void append_jsonl(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot append to " + path);
  out << j.dump() << "\n";
}

}  // namespace

void append_held(const std::string& path, const HeldEmail& held) {
  nlohmann::json j{{"email_id", held.email_id},
                   {"user_id", held.user_id},
                   {"margin", held.margin},
                   {"reasons", held.reasons},
                   {"vector", vector_json(held.vector)}};
  append_jsonl(path, j);
}

std::vector<HeldEmail> read_held(const std::string& path, const std::string& schema_hash) {
  std::vector<HeldEmail> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    HeldEmail h;
    h.email_id = j.at("email_id").get<std::string>();
    h.user_id = j.at("user_id").get<std::string>();
    h.margin = j.at("margin").get<double>();
    h.reasons = j.at("reasons").get<std::vector<std::string>>();
    h.vector.schema_hash = schema_hash;
    h.vector.dim = j.at("vector").at("dim").get<std::uint32_t>();
    for (const auto& item : j.at("vector").at("items"))
      h.vector.items.emplace_back(item.at(0).get<std::uint32_t>(), item.at(1).get<double>());
    out.push_back(std::move(h));
  }
  return out;
}

void append_alert(const std::string& path, const AlertRecord& alert) {
  nlohmann::json j{{"email_id", alert.email_id},
                   {"user_id", alert.user_id},
                   {"outcome", alert.outcome},
                   {"reasons", alert.reasons}};
  append_jsonl(path, j);
}

}  // namespace mailsentry
