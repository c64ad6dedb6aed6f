// Drives the corpus-scale experiment machinery end-to-end on a synthetic
// maildir: messages written to disk as individual EML files under
// maildir/<user>/sent/, attacks as an mbox. This is the same code path the
// full-corpus acceptance criteria run, at toy scale.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "corpus_world.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace mailsentry;

namespace {

std::string as_eml(const Email& e) {
  std::string out;
  out += "Message-ID: <" + e.message_id + ">\n";
  out += "From: " + e.sender.str() + "\n";
  std::string to;
  for (const auto& a : e.recipients) {
    if (!to.empty()) to += ", ";
    to += a.str();
  }
  out += "To: " + to + "\n";
  if (!e.cc.empty()) {
    std::string cc;
    for (const auto& a : e.cc) {
      if (!cc.empty()) cc += ", ";
      cc += a.str();
    }
    out += "Cc: " + cc + "\n";
  }
  // RFC-822 date with the weekday/hour the generator intended
  static const char* days[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
  static const char* months[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                 "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  CivilDateTime c = epoch_to_civil(e.sent_at);
  char date[64];
  std::snprintf(date, sizeof(date), "%s, %d %s %d %02d:%02d:%02d +0000",
                days[weekday_from_days(days_from_civil(c.year, c.month, c.day))], c.day,
                months[c.month - 1], c.year, c.hour, c.minute, c.second);
  out += std::string("Date: ") + date + "\n";
  out += "Subject: " + e.subject + "\n\n";
  out += e.body;  // verbatim: vector equality with the in-memory pipeline needs exact bytes
  return out;
}

struct MaildirFixture {
  fs::path root;
  testutil::SyntheticOrg org;

  MaildirFixture() : org(testutil::make_synthetic_org(31415, 6, 120, 25)) {
    root = fs::temp_directory_path() / ("ms_maildir_" + std::to_string(::getpid()));
    fs::remove_all(root);
    for (const auto& [id, emails] : org.sent) {
      fs::path sent = root / "maildir" / id / "sent";
      fs::create_directories(sent);
      for (size_t i = 0; i < emails.size(); ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "%04zu.", i + 1);  // keep file order == send order
        write_file((sent / name).string(), as_eml(emails[i]));
      }
    }
    std::ofstream mbox(root / "phishing.mbox", std::ios::binary);
    for (const auto& e : org.attack) {
      mbox << "From spoofed@corp.example Mon Jan  1 00:00:00 2024\n";
      mbox << as_eml(e) << "\n\n";
    }
  }
  ~MaildirFixture() { fs::remove_all(root); }
};

}  // namespace

TEST_CASE_FIXTURE(MaildirFixture, "maildir world: load, trend machinery, injection") {
  WordLists lists = testutil::default_lists();
  auto world = testutil::load_maildir_world(root.string(), lists, 60, 4);
  REQUIRE(world);

  // every user came back with the full history
  CHECK(world->pools.size() == org.sent.size());
  for (const auto& [id, emails] : org.sent) {
    REQUIRE(world->histories.count(id));
    CHECK(world->histories.at(id) == emails.size());
  }
  CHECK(world->selected.size() == 4);

  // disk round-trip preserves the vectors the in-memory pipeline computes
  {
    std::vector<Email> stream;
    for (const auto& [id, emails] : org.sent)
      stream.insert(stream.end(), emails.begin(), emails.end());
    OrgContext mem_ctx = build_context(stream, lists.context_words);
    CHECK(mem_ctx.contacted_addresses() == world->ctx.contacted_addresses());
    CHECK(mem_ctx.contacted_domains() == world->ctx.contacted_domains());
    CHECK(mem_ctx.url_domains() == world->ctx.url_domains());

    FeatureExtractor mem_ex(lists, mem_ctx);
    auto mem_vecs = extract_batch_serial(mem_ex, org.sent.at("alice"));
    const auto& disk_vecs = world->pools.at("alice");
    REQUIRE(mem_vecs.size() == disk_vecs.size());
    for (size_t i = 0; i < mem_vecs.size(); ++i)
      CHECK(mem_vecs[i].items == disk_vecs[i].items);
  }

  const SvmHyperparams hp{1.0, 1e-3, 6};

  // history-sliced k-fold runs and is deterministic
  for (const std::string& id : world->selected) {
    KfoldResult shallow = testutil::history_kfold(*world, id, 60, false, hp, 5);
    KfoldResult deep = testutil::history_kfold(*world, id, 120, false, hp, 5);
    KfoldResult again = testutil::history_kfold(*world, id, 120, false, hp, 5);
    for (double r : {shallow.fp_rate, shallow.fn_rate, deep.fp_rate, deep.fn_rate}) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
    CHECK(deep.fp_rate == again.fp_rate);
    CHECK(deep.fn_rate == again.fn_rate);
  }

  // the ablation path slices consistently at maildir scale too
  KfoldResult writing = testutil::history_kfold(*world, world->selected[0], 120, true, hp, 5);
  CHECK(writing.fp_rate >= 0.0);
  CHECK(writing.fp_rate <= 1.0);

  // attack mbox loads and the injection path produces sane, deterministic TP
  auto attacks = testutil::load_attack_vectors(*world, (root / "phishing.mbox").string(), 500);
  CHECK(attacks.size() == org.attack.size());
  double tp_a = testutil::history_injection_tp(*world, "alice", 120, attacks, hp);
  double tp_b = testutil::history_injection_tp(*world, "alice", 120, attacks, hp);
  CHECK(tp_a == tp_b);
  CHECK(tp_a >= 0.5);  // alice is a distinctive sender; the attacks are alien to her profile
  CHECK(tp_a <= 1.0);

  // the attack cap applies
  auto capped = testutil::load_attack_vectors(*world, (root / "phishing.mbox").string(), 10);
  CHECK(capped.size() == 10);
}
