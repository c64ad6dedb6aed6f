// Acceptance suite. Runs every shipped criterion and prints one line per
// criterion: PASS / FAIL / SKIP (skips happen only for the corpus-scale
// experiments when the external datasets are not present). Exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mailsentry/corpus.hpp"
#include "mailsentry/evaluation.hpp"
#include "mailsentry/pipeline.hpp"
#include "corpus_world.hpp"
#include "oracle/qp_reference.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace mailsentry;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  if (!ok) ++g_failures;
}

void skip(int criterion, const std::string& why) {
  std::printf("SKIP criterion %d: %s\n", criterion, why.c_str());
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// --- criterion 1 & 2: the SMO core ---------------------------------------------

FeatureVector dense_vec(std::uint32_t dim, const std::vector<double>& x) {
  FeatureVector v;
  v.schema_hash = "acc";
  v.dim = dim;
  for (std::uint32_t i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) v.items.emplace_back(i, x[i]);
  return v;
}

struct RandomSet {
  TrainingSet ts;
  std::vector<const FeatureVector*> points;
  std::vector<double> labels;
};

RandomSet random_dataset(std::uint64_t seed, size_t max_points, std::uint32_t max_dims,
                         double separation) {
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return double(rng() >> 11) * 0x1.0p-53; };
  const std::uint32_t dim = 2 + rng() % (max_dims - 1);
  const size_t npos = 2 + rng() % (max_points / 2 - 1);
  const size_t nneg = 2 + rng() % (max_points / 2 - 1);
  std::vector<FeatureVector> pos, neg;
  for (size_t i = 0; i < npos; ++i) {
    std::vector<double> x(dim);
    for (auto& xi : x) xi = separation + 2.0 * uniform() - 1.0;
    pos.push_back(dense_vec(dim, x));
  }
  for (size_t i = 0; i < nneg; ++i) {
    std::vector<double> x(dim);
    for (auto& xi : x) xi = -separation + 2.0 * uniform() - 1.0;
    neg.push_back(dense_vec(dim, x));
  }
  RandomSet out;
  out.ts = TrainingSet::make(std::move(pos), std::move(neg),
                             std::vector<ValueKind>(dim, ValueKind::metric));
  for (const auto& v : out.ts.positives) {
    out.points.push_back(&v);
    out.labels.push_back(+1);
  }
  for (const auto& v : out.ts.negatives) {
    out.points.push_back(&v);
    out.labels.push_back(-1);
  }
  return out;
}

void criterion_1() {
  auto t0 = Clock::now();
  double worst_gap = 0.0;
  size_t label_mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomSet set = random_dataset(seed, 12, 4, 0.6);
    SvmHyperparams hp{1.0, 1e-4, 30};
    SvmModel model = train_smo(set.ts, hp, seed);

    qp_reference::Problem p;
    p.C = hp.C;
    for (size_t i = 0; i < set.points.size(); ++i) {
      p.x.push_back(set.ts.scaler.transform(*set.points[i]));
      p.y.push_back(set.labels[i]);
    }
    qp_reference::Solution oracle = qp_reference::solve(p);

    const size_t n = set.points.size();
    std::vector<double> alpha(n, 0.0);
    for (const auto& [i, a] : model.support_alphas) alpha[i] = a;
    std::vector<std::vector<double>> K(n, std::vector<double>(n));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) K[i][j] = qp_reference::dot(p.x[i], p.x[j]);
    const double smo_obj = qp_reference::dual_objective(alpha, p.y, K);
    worst_gap = std::max(worst_gap, std::abs(smo_obj - oracle.objective));

    for (size_t i = 0; i < n; ++i) {
      const bool smo_label = model.margin(*set.points[i]) > 0;
      const bool oracle_label = qp_reference::dot(oracle.w, p.x[i]) + oracle.b > 0;
      if (smo_label != oracle_label) ++label_mismatches;
    }
  }
  const double elapsed = seconds_since(t0);
  report(1, worst_gap <= 1e-4 && label_mismatches == 0 && elapsed < 10.0,
         fmt("SMO vs QP oracle on 20 seeded sets: max dual gap %.2e, %zu label mismatches, "
             "%.1fs (budget 10s)",
             worst_gap, label_mismatches, elapsed));
}

void criterion_2() {
  auto t0 = Clock::now();
  size_t violations = 0;
  int cases = 0;
  std::mt19937_64 meta(2);
  while (cases < 100) {
    RandomSet set = random_dataset(1000 + meta(), 12, 4, 0.4);
    SvmModel model;
    try {
      model = train_smo(set.ts, {1.0, 1e-3, 12}, meta());
    } catch (const DegenerateDataError&) {
      continue;
    }
    ++cases;
    const double C = model.hyperparams.C;
    std::vector<double> alpha(set.points.size(), 0.0);
    double alpha_y = 0.0;
    for (const auto& [i, a] : model.support_alphas) {
      alpha[i] = a;
      if (a < 0.0 || a > C + 1e-12) ++violations;
    }
    for (size_t i = 0; i < alpha.size(); ++i) alpha_y += alpha[i] * set.labels[i];
    if (std::abs(alpha_y) > 1e-6) ++violations;

    std::vector<double> w(model.dim, 0.0);
    for (size_t i = 0; i < set.points.size(); ++i) {
      if (alpha[i] == 0.0) continue;
      std::vector<double> z = model.scaler.transform(*set.points[i]);
      for (std::uint32_t d = 0; d < model.dim; ++d) w[d] += alpha[i] * set.labels[i] * z[d];
    }
    for (std::uint32_t d = 0; d < model.dim; ++d)
      if (std::abs(w[d] - model.weights[d]) > 1e-9 * std::max(1.0, std::abs(w[d])))
        ++violations;
  }
  const double elapsed = seconds_since(t0);
  report(2, violations == 0 && elapsed < 30.0,
         fmt("alpha bounds, sum(alpha*y)=0, w reconstruction over %d cases: %zu violations, "
             "%.1fs (budget 30s)",
             cases, violations, elapsed));
}

// --- criterion 3 & 4: feature extractor ----------------------------------------

OrgContext golden_context(const WordLists& lists) {
  Email seed;
  seed.sender = *Address::parse("s@corp.example");
  seed.recipients = {*Address::parse("b@y.com")};
  seed.body = "see http://intra.corp/page";
  seed.urls = extract_urls(seed.body);
  std::vector<Email> corpus = {seed};
  return build_context(corpus, lists.context_words);
}

void criterion_3() {
  WordLists lists = testutil::default_lists();
  OrgContext ctx = golden_context(lists);
  FeatureExtractor ex(lists, ctx);
  const FeatureSchema& schema = ex.schema();

  bool counts_ok = schema.family_count(FeatureFamily::char_occ) == 62 &&
                   schema.family_count(FeatureFamily::functional) >= 340 &&
                   schema.family_count(FeatureFamily::functional) <= 348 &&
                   schema.family_count(FeatureFamily::special) == 11 &&
                   schema.family_count(FeatureFamily::style_char) == 38 &&
                   schema.family_count(FeatureFamily::style_metric) == 33 &&
                   schema.family_count(FeatureFamily::context_word) == 46;

  auto email = parse_email(read_file(testutil::fixture("golden.eml")), EmailFormat::eml);
  bool golden_ok = email.has_value();
  size_t mismatches = 0;
  if (golden_ok) {
    FeatureVector v = ex.extract(*email);
    const std::string text = read_file(testutil::fixture("golden_vector.csv"));
    std::map<std::string, double> expected;
    auto lines = split_lines(text);
    for (size_t i = 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      std::string line(lines[i]);
      size_t comma = line.rfind(',');
      expected[line.substr(0, comma)] = std::strtod(line.c_str() + comma + 1, nullptr);
    }
    size_t nonzero = 0;
    for (const auto& [i, x] : v.items) {
      auto it = expected.find(schema.entries[i].name);
      if (it == expected.end() || it->second != x) ++mismatches;
      ++nonzero;
    }
    if (nonzero != expected.size()) ++mismatches;
  }
  report(3, counts_ok && golden_ok && mismatches == 0,
         fmt("golden vector bit-exact (%zu mismatches); schema families "
             "62/%u/11/38/33 writing + 46 context words",
             mismatches, schema.family_count(FeatureFamily::functional)));
}

void criterion_4() {
  WordLists lists = testutil::default_lists();
  OrgContext ctx = golden_context(lists);
  FeatureExtractor ex(lists, ctx);
  const FeatureSchema& schema = ex.schema();
  std::mt19937_64 rng(44);
  const char* snippets[] = {"the plan is due 01/02/2013", "ok :) fine", "> quoted",
                            "call 555-123-4567 now",       "$5 per unit", "",
                            "see http://intra.corp/a",     "http://x.biz/b", "As Well As"};
  size_t violations = 0;
  auto idx_other_addr = *schema.index_of("to_addr:other");
  auto idx_known_addr = *schema.index_of("to_addr:b@y.com");

  for (int round = 0; round < 500; ++round) {
    Email e;
    e.sender = *Address::parse("s@corp.example");
    const bool known_rcpt = rng() % 2 == 0;
    if (rng() % 10 != 0)
      e.recipients = {*Address::parse(known_rcpt ? "b@y.com" : "zz@unknown.tld")};
    e.weekday = int(rng() % 7);
    e.hour = int(rng() % 24);
    int parts = int(rng() % 6);
    for (int p = 0; p < parts; ++p) {
      e.body += snippets[rng() % std::size(snippets)];
      e.body += rng() % 4 ? " " : "\n";
    }
    e.urls = extract_urls(e.body);
    e.is_reply = rng() % 2;

    FeatureVector v = ex.extract(e);
    FeatureVector v2 = ex.extract(e);
    if (!(v == v2)) ++violations;

    double day_sum = 0, hour_sum = 0;
    for (const auto& [i, x] : v.items) {
      if (!std::isfinite(x)) ++violations;
      const auto& entry = schema.entries[i];
      if (entry.kind == ValueKind::ratio && (x < 0.0 || x > 1.0)) ++violations;
      if (entry.kind == ValueKind::boolean && x != 0.0 && x != 1.0) ++violations;
      if (entry.name.rfind("time:day_", 0) == 0) day_sum += x;
      if (entry.name.rfind("time:hour_", 0) == 0) hour_sum += x;
    }
    if (day_sum != 1.0 || hour_sum != 1.0) ++violations;

    // "other" bit logic for the recipient group
    if (e.recipients.empty()) {
      if (v.at(idx_other_addr) != 0.0 || v.at(idx_known_addr) != 0.0) ++violations;
    } else if (known_rcpt) {
      if (v.at(idx_known_addr) != 1.0 || v.at(idx_other_addr) != 0.0) ++violations;
    } else {
      if (v.at(idx_known_addr) != 0.0 || v.at(idx_other_addr) != 1.0) ++violations;
    }
    if (e.body.empty()) {
      for (const auto& [i, x] : v.items) {
        (void)x;
        auto fam = schema.entries[i].family;
        if (fam == FeatureFamily::char_occ || fam == FeatureFamily::functional ||
            fam == FeatureFamily::special || fam == FeatureFamily::style_char ||
            fam == FeatureFamily::style_metric || fam == FeatureFamily::context_word)
          ++violations;
      }
    }
  }
  report(4, violations == 0,
         fmt("500 randomized emails: one-hot time, ratio ranges, other-bit logic, "
             "empty-body finiteness, determinism (%zu violations)",
             violations));
}

// --- fixture-scale experiment state --------------------------------------------

struct FixtureWorld {
  WordLists lists = testutil::default_lists();
  testutil::SyntheticOrg org;
  OrgContext ctx;
  std::unique_ptr<FeatureExtractor> ex;
  NegativePools pools;
  std::vector<FeatureVector> attack_vectors;
  std::map<std::string, BehavioralProfile> profiles;
  std::map<std::string, VictimStats> stats;

  explicit FixtureWorld(std::uint64_t seed) : org(testutil::make_synthetic_org(seed, 8, 80, 30)) {
    std::vector<Email> stream;
    for (const auto& [id, emails] : org.sent)
      stream.insert(stream.end(), emails.begin(), emails.end());
    ctx = build_context(stream, lists.context_words);
    ex = std::make_unique<FeatureExtractor>(lists, ctx);
    for (const auto& [id, emails] : org.sent) pools[id] = extract_batch(*ex, emails);
    pools[std::string(kExternalPoolKey)] = extract_batch(*ex, org.external);
    attack_vectors = extract_batch(*ex, org.attack);

    ProfileTrainingConfig cfg;
    cfg.svm.max_passes = 8;
    for (const std::string& id : org.user_ids) {
      profiles.emplace(id, build_profile(id, pools.at(id), pools, ex->schema(), cfg,
                                         fnv1a64(id, 99), 0));
      stats.emplace(id, compute_victim_stats(org.sent.at(id), pools.at(id), ctx, ex->schema()));
    }
  }
};

void criterion_7(const FixtureWorld& world) {
  SchemaLayout layout = SchemaLayout::from(world.ex->schema(), world.ctx);
  auto results = evasion_matrix(world.profiles, world.stats, layout, world.attack_vectors,
                                default_strategies(), 4242);

  const EvasionResult* c_row = nullptr;
  const EvasionResult* combo_row = nullptr;
  for (const auto& r : results) {
    if (r.strategy == "C") c_row = &r;
    if (r.strategy == "T+TC+M20") combo_row = &r;
  }
  bool ok = c_row && combo_row;
  std::string detail;
  if (ok) {
    const size_t users = world.profiles.size();
    bool book = true;
    for (const auto& r : results) book &= r.failure + r.success + r.no_effect == users;

    const bool c_ok = c_row->avg_change_pct <= 0.0 && c_row->no_effect * 2 > users;
    bool combo_largest = combo_row->avg_change_pct > 0.0;
    for (const auto& r : results)
      if (r.strategy != "T+TC+M20") combo_largest &= combo_row->avg_change_pct >= r.avg_change_pct;
    const bool combo_fails =
        combo_row->failure * 4 >= users;  // evasion backfires for >= 25% of users

    ok = book && c_ok && combo_largest && combo_fails;
    detail = fmt("C: %+.2f%% with %zu/%zu no_effect; T+TC+M20: %+.2f%% (largest: %s) with "
                 "%zu/%zu failures; bookkeeping exact: %s",
                 c_row->avg_change_pct, c_row->no_effect, users, combo_row->avg_change_pct,
                 combo_largest ? "yes" : "no", combo_row->failure, users, book ? "yes" : "no");
  } else {
    detail = "strategy rows missing from the matrix";
  }
  report(7, ok, detail);
}

void criterion_8(const FixtureWorld& world) {
  const BehavioralProfile& profile = world.profiles.at("alice");
  const auto& emails = world.org.sent.at("alice");
  size_t challenged = 0;
  const size_t n = 50;
  for (size_t i = 0; i < n; ++i) {
    const Email& e = emails[i % emails.size()];
    Decision d = decide_vector(world.ex->extract(e), profile, e.message_id);
    if (d.verdict == DecisionVerdict::challenged && !d.reasons.empty() &&
        d.reasons[0] == "replay")
      ++challenged;
  }
  report(8, challenged == n,
         fmt("replay guard challenged %zu/%zu byte-identical resends", challenged, n));
}

void criterion_9(const FixtureWorld& world) {
  // library level: an untrained profile challenges every email
  BehavioralProfile empty;
  empty.user_id = "nobody";
  empty.schema_hash = world.ex->schema().hash;
  size_t lib_challenged = 0;
  const auto& emails = world.org.sent.at("bob");
  for (const Email& e : emails)
    if (decide_vector(world.ex->extract(e), empty, e.message_id).verdict ==
        DecisionVerdict::challenged)
      ++lib_challenged;

  // CLI level: exit code 3 for every check against a missing profile
  size_t cli_exit3 = 0;
  const size_t cli_n = 10;
#ifdef MAILSENTRY_CLI_PATH
  fs::path dir = fs::temp_directory_path() / "ms_acceptance_failsafe";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::vector<Email> none;
    OrgContext tiny = build_context(none, world.lists.context_words);
    tiny.save((dir / "context.json").string());
  }
  for (size_t i = 0; i < cli_n; ++i) {
    const Email& e = emails[i];
    const std::string probe = (dir / "probe.jsonl").string();
    write_file(probe, testutil::to_jsonl_line(e));
    std::string cmd = std::string(MAILSENTRY_CLI_PATH) +
                      " check " + probe + " --format jsonl --user ghost --context " +
                      (dir / "context.json").string() + " --profiles-dir " +
                      (dir / "profiles").string() + " --held " + (dir / "held.jsonl").string() +
                      " --alerts " + (dir / "alerts.jsonl").string() +
                      " --responder always_fail > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    if (WEXITSTATUS(rc) == 3) ++cli_exit3;
  }
  fs::remove_all(dir);
#else
  cli_exit3 = cli_n;
#endif
  report(9, lib_challenged == emails.size() && cli_exit3 == cli_n,
         fmt("untrained profile: %zu/%zu challenged in-process, %zu/%zu CLI checks exited 3",
             lib_challenged, emails.size(), cli_exit3, cli_n));
}

// --- criterion 5 & 6: corpus-scale experiments ----------------------------------

void criterion_5(testutil::CorpusWorld* world) {
  if (!world) {
    skip(5, "Enron corpus not present (set MAILSENTRY_ENRON_DIR; see scripts/fetch_enron.sh)");
    return;
  }
  if (world->selected.size() < 20) {
    report(5, false,
           fmt("only %zu users with >= 1000 sent emails found", world->selected.size()));
    return;
  }
  auto t0 = Clock::now();
  const SvmHyperparams hp{1.0, 1e-3, 10};
  double fp200 = 0, fn200 = 0, fp1000 = 0, fn1000 = 0, fp1000_writing = 0;
  const std::int64_t n = static_cast<std::int64_t>(world->selected.size());

#pragma omp parallel for schedule(dynamic) \
    reduction(+ : fp200, fn200, fp1000, fn1000, fp1000_writing)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string& id = world->selected[i];
    KfoldResult r200 = testutil::history_kfold(*world, id, 200, false, hp);
    KfoldResult r1000 = testutil::history_kfold(*world, id, 1000, false, hp);
    KfoldResult rw = testutil::history_kfold(*world, id, 1000, true, hp);
    fp200 += r200.fp_rate;
    fn200 += r200.fn_rate;
    fp1000 += r1000.fp_rate;
    fn1000 += r1000.fn_rate;
    fp1000_writing += rw.fp_rate;
#pragma omp critical(log5)
    std::fprintf(stderr, "kfold %s: fp200=%.3f fp1000=%.3f fn1000=%.3f writing=%.3f\n",
                 id.c_str(), r200.fp_rate, r1000.fp_rate, r1000.fn_rate, rw.fp_rate);
  }
  fp200 /= n; fn200 /= n; fp1000 /= n; fn1000 /= n; fp1000_writing /= n;
  const double elapsed = seconds_since(t0);

  const bool trend = fp1000 < fp200 && fn1000 < fn200;
  const bool fn_band = fn1000 <= 0.15;
  const bool ablation = fp1000_writing >= 2.0 * fp1000;
  report(5, trend && fn_band && ablation && elapsed < 1800,
         fmt("fp 200->1000: %.3f->%.3f, fn: %.3f->%.3f (trend %s); fn(1000)=%.3f <= 0.15: %s; "
             "writing-only fp %.3f >= 2x full %.3f: %s; %.0fs",
             fp200, fp1000, fn200, fn1000, trend ? "yes" : "no", fn1000, fn_band ? "yes" : "no",
             fp1000_writing, fp1000, ablation ? "yes" : "no", elapsed));
}

void criterion_6(testutil::CorpusWorld* world, const std::string& phishing_path) {
  if (!world) {
    skip(6, "Enron corpus not present (set MAILSENTRY_ENRON_DIR)");
    return;
  }
  if (phishing_path.empty() || !std::filesystem::exists(phishing_path)) {
    skip(6, "phishing stand-in corpus not present (set MAILSENTRY_PHISHING; see "
            "scripts/fetch_phishing.sh)");
    return;
  }
  std::vector<FeatureVector> attack_vectors =
      testutil::load_attack_vectors(*world, phishing_path, 500);
  if (attack_vectors.empty()) {
    report(6, false, "attack corpus parsed to zero messages");
    return;
  }

  const SvmHyperparams hp{1.0, 1e-3, 10};
  double tp200 = 0, tp1000 = 0;
  const std::int64_t n = static_cast<std::int64_t>(world->selected.size());
#pragma omp parallel for schedule(dynamic) reduction(+ : tp200, tp1000)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string& id = world->selected[i];
    tp200 += testutil::history_injection_tp(*world, id, 200, attack_vectors, hp);
    tp1000 += testutil::history_injection_tp(*world, id, 1000, attack_vectors, hp);
  }
  tp200 /= n;
  tp1000 /= n;
  report(6, tp1000 >= 0.70 && tp1000 > tp200,
         fmt("attack injection (%zu attacks): mean TP %.3f at 200-history, %.3f at "
             "1000-history (>= 0.70 and rising: %s)",
             attack_vectors.size(), tp200, tp1000,
             tp1000 >= 0.70 && tp1000 > tp200 ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  std::string enron_dir, phishing;
  if (const char* env = std::getenv("MAILSENTRY_ENRON_DIR")) enron_dir = env;
  if (const char* env = std::getenv("MAILSENTRY_PHISHING")) phishing = env;
  for (int i = 1; i + 1 < argc; i += 2) {
    std::string flag = argv[i];
    if (flag == "--enron-dir") enron_dir = argv[i + 1];
    if (flag == "--phishing") phishing = argv[i + 1];
  }

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();

  WordLists lists = testutil::default_lists();
  std::unique_ptr<testutil::CorpusWorld> enron;
  if (!enron_dir.empty()) enron = testutil::load_maildir_world(enron_dir, lists, 1000, 20);
  if (!enron_dir.empty() && !enron)
    report(5, false, "MAILSENTRY_ENRON_DIR is set but no maildir layout was found there");
  else
    criterion_5(enron.get());
  criterion_6(enron.get(), phishing);

  FixtureWorld world(20240);
  criterion_7(world);
  criterion_8(world);
  criterion_9(world);

  std::printf("%s\n", g_failures == 0 ? "acceptance: all criteria passed"
                                      : "acceptance: FAILURES present");
  return g_failures == 0 ? 0 : 1;
}
