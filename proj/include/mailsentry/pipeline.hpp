#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mailsentry/profile.hpp"

namespace mailsentry {

enum class DecisionVerdict { accepted, challenged };

struct Decision {
  std::string email_id;
  DecisionVerdict verdict = DecisionVerdict::challenged;
  double margin = 0.0;
  std::vector<std::string> reasons;  // "margin", "replay", "untrained", ...
};

enum class VerificationResult { confirmed, failed, timeout };

struct VerificationOutcome {
  std::string email_id;
  VerificationResult result = VerificationResult::timeout;
};

enum class FinalAction { released, discarded };

// Pure decision on an already-extracted vector: replay guard first, then the
// margin test. An untrained profile challenges everything.
Decision decide_vector(const FeatureVector& v, const BehavioralProfile& profile,
                       const std::string& email_id);

// Full send-time check. On accept the vector is queued onto the profile; on
// challenge the caller is expected to hold the email until verification.
// The extracted vector lands in *extracted when provided.
Decision check_outgoing(const Email& email, BehavioralProfile& profile,
                        const FeatureExtractor& extractor, FeatureVector* extracted = nullptr);

// Confirmed challenges release the email and queue its vector (so the false
// positive is absorbed at the next retrain); failed or timed-out ones discard.
FinalAction resolve_verification(const Decision& decision, const VerificationOutcome& outcome,
                                 BehavioralProfile& profile, const FeatureVector& vector);

// --- identity verification responders ------------------------------------------

class VerificationResponder {
 public:
  virtual ~VerificationResponder() = default;
  virtual VerificationResult respond(const std::string& email_id, const Email& email) = 0;
};

// Interactive yes/no prompt on the controlling terminal.
class PromptResponder : public VerificationResponder {
 public:
  VerificationResult respond(const std::string& email_id, const Email& email) override;
};

// Scripted oracle for experiments: a JSON object mapping email_id to
// "confirm" | "fail"; missing ids time out. "*" provides a default.
class OracleResponder : public VerificationResponder {
 public:
  explicit OracleResponder(const std::string& path);
  VerificationResult respond(const std::string& email_id, const Email& email) override;

 private:
  std::map<std::string, std::string> answers_;
  std::string fallback_;
};

class AlwaysFailResponder : public VerificationResponder {
 public:
  VerificationResult respond(const std::string&, const Email&) override {
    return VerificationResult::failed;
  }
};

std::unique_ptr<VerificationResponder> make_responder(const std::string& spec);

// --- held queue / alert log (append-only JSONL) --------------------------------

struct HeldEmail {
  std::string email_id;
  std::string user_id;
  double margin = 0.0;
  std::vector<std::string> reasons;
  FeatureVector vector;
};

void append_held(const std::string& path, const HeldEmail& held);
std::vector<HeldEmail> read_held(const std::string& path, const std::string& schema_hash);

struct AlertRecord {
  std::string email_id;
  std::string user_id;
  std::string outcome;  // "failed" | "timeout"
  std::vector<std::string> reasons;
};

void append_alert(const std::string& path, const AlertRecord& alert);

}  // namespace mailsentry
