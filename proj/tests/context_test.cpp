#include <doctest.h>

#include <filesystem>

#include "mailsentry/org_context.hpp"
#include "testutil.hpp"

using namespace mailsentry;

namespace {

Email mail_to(const std::string& to, const std::string& url = "") {
  Email e;
  e.sender = *Address::parse("someone@corp.example");
  e.recipients = {*Address::parse(to)};
  if (!url.empty()) {
    e.body = "see " + url;
    e.urls = extract_urls(e.body);
  }
  return e;
}

}  // namespace

TEST_CASE("single email populates all three lists") {
  std::vector<Email> corpus = {mail_to("b@y.com", "http://z.org/p")};
  OrgContext ctx = build_context(corpus, {"stock"});
  CHECK(ctx.contacted_addresses() == std::vector<std::string>{"b@y.com"});
  CHECK(ctx.contacted_domains() == std::vector<std::string>{"y.com"});
  CHECK(ctx.url_domains() == std::vector<std::string>{"z.org"});
  CHECK(ctx.context_words() == std::vector<std::string>{"stock"});
  CHECK(ctx.version() == 1);
}

TEST_CASE("duplicate urls are deduplicated") {
  std::vector<Email> corpus = {mail_to("b@y.com", "http://z.org/p"),
                               mail_to("c@y.com", "http://z.org/other")};
  OrgContext ctx = build_context(corpus, {});
  CHECK(ctx.url_domains() == std::vector<std::string>{"z.org"});
  CHECK(ctx.contacted_addresses().size() == 2);
}

TEST_CASE("empty corpus yields a valid empty context") {
  std::vector<Email> corpus;
  OrgContext ctx = build_context(corpus, {"stock"});
  CHECK(ctx.url_domains().empty());
  CHECK(ctx.contacted_addresses().empty());
  CHECK(ctx.contacted_domains().empty());
  CHECK(ctx.version() == 1);
}

TEST_CASE("extension is monotone: old lists are prefixes") {
  std::vector<Email> first = {mail_to("b@y.com"), mail_to("a@x.org", "http://u.net/1")};
  OrgContext ctx = build_context(first, {});
  auto addr_before = ctx.contacted_addresses();
  auto dom_before = ctx.contacted_domains();
  auto url_before = ctx.url_domains();

  std::vector<Email> more = {mail_to("c@w.com", "http://v.io/x"), mail_to("b@y.com")};
  OrgContext ext = extend_context(std::move(ctx), more);

  CHECK(ext.version() == 2);
  REQUIRE(ext.contacted_addresses().size() == 3);
  CHECK(ext.contacted_addresses().back() == "c@w.com");
  for (size_t i = 0; i < addr_before.size(); ++i)
    CHECK(ext.contacted_addresses()[i] == addr_before[i]);
  for (size_t i = 0; i < dom_before.size(); ++i)
    CHECK(ext.contacted_domains()[i] == dom_before[i]);
  for (size_t i = 0; i < url_before.size(); ++i)
    CHECK(ext.url_domains()[i] == url_before[i]);
}

TEST_CASE("extending with known addresses still bumps the version") {
  std::vector<Email> base = {mail_to("b@y.com")};
  OrgContext ctx = build_context(base, {});
  auto addrs = ctx.contacted_addresses();
  OrgContext ext = extend_context(std::move(ctx), base);
  CHECK(ext.contacted_addresses() == addrs);
  CHECK(ext.version() == 2);
}

TEST_CASE("extending an empty context with N distinct addresses") {
  std::vector<Email> empty;
  OrgContext ctx = build_context(empty, {});
  std::vector<Email> batch;
  const size_t n = 23;
  for (size_t i = 0; i < n; ++i) batch.push_back(mail_to("user" + std::to_string(i) + "@o.com"));
  OrgContext ext = extend_context(std::move(ctx), batch);
  CHECK(ext.contacted_addresses().size() == n);
  CHECK(ext.contacted_domains().size() == 1);
}

TEST_CASE("build is deterministic given stream order") {
  std::vector<Email> corpus = {mail_to("b@y.com", "http://z.org/1"), mail_to("a@x.com"),
                               mail_to("c@y.com", "http://w.net/2")};
  OrgContext c1 = build_context(corpus, {"a", "b"});
  OrgContext c2 = build_context(corpus, {"a", "b"});
  CHECK(c1.to_json() == c2.to_json());
}

TEST_CASE("save/load round-trip preserves order and version") {
  std::vector<Email> corpus = {mail_to("b@y.com", "http://z.org/1"), mail_to("a@x.com")};
  OrgContext ctx = build_context(corpus, {"stock", "oil"});
  std::string path = (std::filesystem::temp_directory_path() / "ms_ctx_test.json").string();
  ctx.save(path);
  OrgContext back = OrgContext::load(path);
  CHECK(back.to_json() == ctx.to_json());
  CHECK(back.address_index("b@y.com") == ctx.address_index("b@y.com"));
  std::filesystem::remove(path);
}

TEST_CASE("cc addresses feed the lists too") {
  Email e = mail_to("b@y.com");
  e.cc = {*Address::parse("CC-Person@Other.ORG")};
  std::vector<Email> corpus = {e};
  OrgContext ctx = build_context(corpus, {});
  REQUIRE(ctx.contacted_addresses().size() == 2);
  CHECK(ctx.contacted_addresses()[1] == "cc-person@other.org");
  CHECK(ctx.domain_index("other.org").has_value());
}
