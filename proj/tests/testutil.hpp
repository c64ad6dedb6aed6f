#pragma once

#include <random>
#include <string>
#include <vector>

#include "mailsentry/email.hpp"
#include "mailsentry/resources.hpp"

namespace mailsentry::testutil {

inline std::string fixture_dir() { return MAILSENTRY_FIXTURE_DIR; }
inline std::string fixture(const std::string& name) { return fixture_dir() + "/" + name; }

inline WordLists default_lists() { return WordLists::load(); }

// Deterministic synthetic organization: a handful of users with individual
// word habits, sending hours and contacts, plus a small phishing-style attack
// set. Used by the evaluation tests and the acceptance experiments.
struct SyntheticOrg {
  std::vector<std::string> user_ids;
  std::map<std::string, std::vector<Email>> sent;  // per user
  std::vector<Email> external;                     // the U_x pool
  std::vector<Email> attack;
};

SyntheticOrg make_synthetic_org(std::uint64_t seed, size_t users = 8,
                                size_t emails_per_user = 80, size_t attack_count = 30);

// One corpus line in the JSONL input schema; parse_email(line, jsonl) gives
// back an equivalent Email.
std::string to_jsonl_line(const Email& email);

}  // namespace mailsentry::testutil
