#include "mailsentry/org_context.hpp"

#include <nlohmann/json.hpp>

#include "mailsentry/util.hpp"

namespace mailsentry {

namespace {
std::optional<std::uint32_t> find_in(const std::unordered_map<std::string, std::uint32_t>& index,
                                     std::string_view key) {
  auto it = index.find(std::string(key));
  if (it == index.end()) return std::nullopt;
  return it->second;
}
}  // namespace

std::optional<std::uint32_t> OrgContext::url_domain_index(std::string_view d) const {
  return find_in(url_index_, d);
}
std::optional<std::uint32_t> OrgContext::address_index(std::string_view a) const {
  return find_in(addr_index_, a);
}
std::optional<std::uint32_t> OrgContext::domain_index(std::string_view d) const {
  return find_in(dom_index_, d);
}

void OrgContext::set_context_words(std::vector<std::string> words) {
  context_words_ = std::move(words);
  for (auto& w : context_words_) w = to_lower(w);
}

bool OrgContext::add_url_domain(std::string value) {
  if (value.empty() || url_index_.count(value)) return false;
  url_index_.emplace(value, static_cast<std::uint32_t>(url_domains_.size()));
  url_domains_.push_back(std::move(value));
  return true;
}

bool OrgContext::add_address(std::string value) {
  if (value.empty() || addr_index_.count(value)) return false;
  addr_index_.emplace(value, static_cast<std::uint32_t>(contacted_addresses_.size()));
  contacted_addresses_.push_back(std::move(value));
  return true;
}

bool OrgContext::add_domain(std::string value) {
  if (value.empty() || dom_index_.count(value)) return false;
  dom_index_.emplace(value, static_cast<std::uint32_t>(contacted_domains_.size()));
  contacted_domains_.push_back(std::move(value));
  return true;
}

bool OrgContext::absorb(const Email& email) {
  bool changed = false;
  for (const std::string& url : email.urls) changed |= add_url_domain(url_domain(url));
  auto take = [&](const std::vector<Address>& addrs) {
    for (const Address& a : addrs) {
      changed |= add_address(to_lower(a.str()));
      changed |= add_domain(a.domain);
    }
  };
  take(email.recipients);
  take(email.cc);
  return changed;
}

std::string OrgContext::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["version"] = version_;
  j["url_domains"] = url_domains_;
  j["contacted_addresses"] = contacted_addresses_;
  j["contacted_domains"] = contacted_domains_;
  j["context_words"] = context_words_;
  return j.dump(2);
}

OrgContext OrgContext::from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text);
  OrgContext ctx;
  ctx.version_ = j.at("version").get<std::uint64_t>();
  for (const auto& d : j.at("url_domains")) ctx.add_url_domain(d.get<std::string>());
  for (const auto& a : j.at("contacted_addresses")) ctx.add_address(a.get<std::string>());
  for (const auto& d : j.at("contacted_domains")) ctx.add_domain(d.get<std::string>());
  ctx.context_words_ = j.at("context_words").get<std::vector<std::string>>();
  return ctx;
}

void OrgContext::save(const std::string& path) const { write_file(path, to_json()); }

OrgContext OrgContext::load(const std::string& path) { return from_json(read_file(path)); }

}  // namespace mailsentry
