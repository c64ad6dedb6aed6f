#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mailsentry/email.hpp"

namespace mailsentry {

// Organization-wide lists that parameterize the variable-size feature families.
// All lists are insertion-ordered by first occurrence and append-only, so a
// feature's index never moves across versions.
class OrgContext {
 public:
  const std::vector<std::string>& url_domains() const { return url_domains_; }
  const std::vector<std::string>& contacted_addresses() const { return contacted_addresses_; }
  const std::vector<std::string>& contacted_domains() const { return contacted_domains_; }
  const std::vector<std::string>& context_words() const { return context_words_; }
  std::uint64_t version() const { return version_; }

  std::optional<std::uint32_t> url_domain_index(std::string_view domain) const;
  std::optional<std::uint32_t> address_index(std::string_view address) const;
  std::optional<std::uint32_t> domain_index(std::string_view domain) const;

  void set_context_words(std::vector<std::string> words);
  // Folds one email into the lists; returns true if anything was added.
  bool absorb(const Email& email);
  void bump_version() { ++version_; }

  std::string to_json() const;
  static OrgContext from_json(std::string_view text);  // throws std::runtime_error

  void save(const std::string& path) const;
  static OrgContext load(const std::string& path);

 private:
  bool add_url_domain(std::string value);
  bool add_address(std::string value);
  bool add_domain(std::string value);

  std::vector<std::string> url_domains_;
  std::vector<std::string> contacted_addresses_;
  std::vector<std::string> contacted_domains_;
  std::vector<std::string> context_words_;
  std::unordered_map<std::string, std::uint32_t> url_index_;
  std::unordered_map<std::string, std::uint32_t> addr_index_;
  std::unordered_map<std::string, std::uint32_t> dom_index_;
  std::uint64_t version_ = 0;
};

// Builds a fresh context from a legitimate-organization email stream.
// version starts at 1. An empty stream yields a valid empty context.
template <typename EmailRange>
OrgContext build_context(const EmailRange& emails, std::vector<std::string> context_words) {
  OrgContext ctx;
  ctx.set_context_words(std::move(context_words));
  for (const Email& e : emails) ctx.absorb(e);
  ctx.bump_version();
  return ctx;
}

// Supersets the lists with anything new; version always advances.
template <typename EmailRange>
OrgContext extend_context(OrgContext ctx, const EmailRange& emails) {
  for (const Email& e : emails) ctx.absorb(e);
  ctx.bump_version();
  return ctx;
}

}  // namespace mailsentry
