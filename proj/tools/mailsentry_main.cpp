// mailsentry command-line front end: context building, profile training,
// send-time checks and the evaluation experiments. Logs go to stderr, data to
// stdout or files, so output is pipeable.

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mailsentry/corpus.hpp"
#include "mailsentry/evaluation.hpp"
#include "mailsentry/features.hpp"
#include "mailsentry/org_context.hpp"
#include "mailsentry/pipeline.hpp"
#include "mailsentry/profile.hpp"

namespace fs = std::filesystem;
using namespace mailsentry;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitChallenged = 3;
constexpr int kExitInternal = 4;

struct Config {
  std::string manifest;
  std::string context_path = "context.json";
  std::string profiles_dir = "profiles";
  std::string data_dir = WordLists::default_data_dir();
  std::string held_path = "held.jsonl";
  std::string alerts_path = "alerts.jsonl";
  std::string responder = "prompt";
  std::string timezone = "header";
  SvmHyperparams svm;
  std::uint64_t retrain_threshold = 50;
  std::uint64_t min_history = 50;
  std::optional<std::uint64_t> seed;
};

Config load_config(const std::string& explicit_path) {
  Config c;
  std::string path = explicit_path;
  if (path.empty())
    if (const char* env = std::getenv("MAILSENTRY_CONFIG")) path = env;
  if (path.empty()) return c;
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  c.manifest = j.value("manifest", c.manifest);
  c.context_path = j.value("context", c.context_path);
  c.profiles_dir = j.value("profiles_dir", c.profiles_dir);
  c.data_dir = j.value("data_dir", c.data_dir);
  c.held_path = j.value("held_path", c.held_path);
  c.alerts_path = j.value("alerts_path", c.alerts_path);
  c.responder = j.value("responder", c.responder);
  c.timezone = j.value("timezone", c.timezone);
  if (j.contains("svm")) {
    c.svm.C = j["svm"].value("C", c.svm.C);
    c.svm.tol = j["svm"].value("tol", c.svm.tol);
    c.svm.max_passes = j["svm"].value("max_passes", c.svm.max_passes);
  }
  c.retrain_threshold = j.value("retrain_threshold", c.retrain_threshold);
  c.min_history = j.value("min_history", c.min_history);
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (c.svm.C <= 0 || c.svm.tol <= 0 || c.svm.max_passes <= 0)
    throw std::invalid_argument("svm hyperparameters must be positive");
  return c;
}

TimePolicy time_policy(const Config& c) {
  TimePolicy tz;
  if (c.timezone == "header") return tz;
  tz.use_header_offset = false;
  if (c.timezone == "utc" || c.timezone == "UTC") return tz;
  // "+HH:MM" / "-HH:MM"
  if (c.timezone.size() == 6 && (c.timezone[0] == '+' || c.timezone[0] == '-')) {
    int sign = c.timezone[0] == '-' ? -1 : 1;
    int hh = std::atoi(c.timezone.substr(1, 2).c_str());
    int mm = std::atoi(c.timezone.substr(4, 2).c_str());
    tz.fixed_offset_minutes = sign * (hh * 60 + mm);
    return tz;
  }
  throw std::invalid_argument("bad timezone spec: " + c.timezone);
}

// In-memory corpus grouped by role.
struct LoadedCorpus {
  std::map<std::string, std::vector<Email>> user_sent;
  std::vector<Email> org_sent;
  std::vector<Email> external;
  std::vector<Email> attack;
  CorpusCounters counters;
};

LoadedCorpus load_all(const Config& cfg) {
  LoadedCorpus out;
  CorpusManifest manifest = CorpusManifest::load(cfg.manifest);
  out.counters = load_corpus(
      manifest,
      [&](CorpusRole role, const std::string& user_id, Email&& email) {
        switch (role) {
          case CorpusRole::user_sent: out.user_sent[user_id].push_back(std::move(email)); break;
          case CorpusRole::org_sent: out.org_sent.push_back(std::move(email)); break;
          case CorpusRole::external_legit: out.external.push_back(std::move(email)); break;
          case CorpusRole::attack: out.attack.push_back(std::move(email)); break;
        }
      },
      time_policy(cfg), [](const std::string& msg) { std::cerr << msg << "\n"; });
  for (const auto& [role, n] : out.counters.loaded)
    std::cerr << "loaded " << role_to_string(role) << ": " << n << "\n";
  if (out.counters.skipped) std::cerr << "skipped malformed: " << out.counters.skipped << "\n";
  return out;
}

std::vector<std::string> select_users(const LoadedCorpus& corpus, std::uint64_t min_history,
                                      std::size_t limit, const std::vector<std::string>& only) {
  std::vector<std::string> users;
  if (!only.empty()) {
    users = only;
  } else {
    std::vector<std::pair<std::string, std::size_t>> counted;
    for (const auto& [id, emails] : corpus.user_sent)
      if (emails.size() >= min_history) counted.emplace_back(id, emails.size());
    std::sort(counted.begin(), counted.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (const auto& [id, _] : counted) users.push_back(id);
  }
  if (limit && users.size() > limit) users.resize(limit);
  return users;
}

// Vectors for every user pool plus the external set, keyed by user id with
// the external set under the reserved key.
NegativePools extract_pools(const LoadedCorpus& corpus, const FeatureExtractor& ex) {
  NegativePools pools;
  for (const auto& [id, emails] : corpus.user_sent)
    pools[id] = extract_batch(ex, emails);
  if (!corpus.external.empty())
    pools[std::string(kExternalPoolKey)] = extract_batch(ex, corpus.external);
  return pools;
}

OrgContext load_context(const Config& cfg) {
  if (!fs::exists(cfg.context_path))
    throw CorpusError("context file not found: " + cfg.context_path +
                      " (run build-context first)");
  return OrgContext::load(cfg.context_path);
}

std::uint64_t require_seed(const Config& cfg) {
  if (!cfg.seed) throw std::invalid_argument("experiment commands require --seed");
  return *cfg.seed;
}

std::uint64_t user_seed(std::uint64_t base, const std::string& user_id) {
  return fnv1a64(user_id, base ^ 0x5851f42d4c957f2dull);
}

int cmd_build_context(const Config& cfg, const std::string& words_file,
                      const std::string& extend_from) {
  CorpusManifest manifest = CorpusManifest::load(cfg.manifest);
  std::vector<Email> org_emails;
  load_corpus(
      manifest,
      [&](CorpusRole role, const std::string&, Email&& email) {
        if (role == CorpusRole::user_sent || role == CorpusRole::org_sent)
          org_emails.push_back(std::move(email));
      },
      time_policy(cfg), [](const std::string& msg) { std::cerr << msg << "\n"; });

  OrgContext ctx;
  if (!extend_from.empty()) {
    ctx = extend_context(OrgContext::load(extend_from), org_emails);
  } else {
    std::vector<std::string> words;
    if (!words_file.empty()) {
      const std::string text = read_file(words_file);
      for (std::string_view line : split_lines(text)) {
        auto t = trim(line);
        if (!t.empty() && t.front() != '#') words.emplace_back(t);
      }
    } else {
      words = WordLists::load(cfg.data_dir).context_words;
    }
    ctx = build_context(org_emails, std::move(words));
  }
  ctx.save(cfg.context_path);
  std::cout << ctx.url_domains().size() << " / " << ctx.contacted_addresses().size() << " / "
            << ctx.contacted_domains().size() << "\n";
  std::cerr << "context v" << ctx.version() << " -> " << cfg.context_path << "\n";
  return kExitOk;
}

int cmd_train(const Config& cfg, const std::vector<std::string>& only_users, bool all) {
  if (!all && only_users.empty())
    throw std::invalid_argument("train requires --user or --all");
  LoadedCorpus corpus = load_all(cfg);
  OrgContext ctx = load_context(cfg);
  WordLists lists = WordLists::load(cfg.data_dir);
  FeatureExtractor ex(lists, ctx);
  NegativePools pools = extract_pools(corpus, ex);

  std::vector<std::string> users;
  if (all)
    for (const auto& [id, _] : corpus.user_sent) users.push_back(id);
  else
    users = only_users;

  fs::create_directories(cfg.profiles_dir);
  ProfileTrainingConfig pcfg{cfg.svm, cfg.min_history, cfg.retrain_threshold};
  const std::uint64_t seed = cfg.seed.value_or(1);
  const std::int64_t now = static_cast<std::int64_t>(std::time(nullptr));

  std::size_t trained = 0, skipped = 0;
  const std::int64_t n = static_cast<std::int64_t>(users.size());
#pragma omp parallel for schedule(dynamic) reduction(+ : trained, skipped)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string& id = users[i];
    auto it = pools.find(id);
    if (it == pools.end()) {
#pragma omp critical(log)
      std::cerr << "no sent emails for user " << id << "\n";
      ++skipped;
      continue;
    }
    try {
      BehavioralProfile profile = build_profile(id, it->second, pools, ex.schema(), pcfg,
                                                user_seed(seed, id), now);
      profile.save(profile_path(cfg.profiles_dir, id));
#pragma omp critical(log)
      std::cerr << "trained " << id << " on " << profile.sent_count << " emails\n";
      ++trained;
    } catch (const BelowMinimumHistoryError& e) {
#pragma omp critical(log)
      std::cerr << "skip " << id << ": " << e.what() << "\n";
      ++skipped;
    } catch (const DegenerateDataError& e) {
#pragma omp critical(log)
      std::cerr << "untrainable " << id << ": " << e.what() << "\n";
      ++skipped;
    }
  }
  std::cout << "trained=" << trained << " skipped=" << skipped << "\n";
  return kExitOk;
}

int cmd_check(const Config& cfg, const std::string& email_file, const std::string& user_id,
              const std::string& format_name) {
  auto fmt = format_from_string(format_name);
  if (!fmt) throw std::invalid_argument("unknown format: " + format_name);
  OrgContext ctx = load_context(cfg);
  WordLists lists = WordLists::load(cfg.data_dir);
  FeatureExtractor ex(lists, ctx);

  const std::string ppath = profile_path(cfg.profiles_dir, user_id);
  BehavioralProfile profile;
  if (fs::exists(ppath)) {
    profile = BehavioralProfile::load(ppath);
  } else {
    profile.user_id = user_id;  // untrained: fail-safe challenge below
    profile.schema_hash = ex.schema().hash;
  }

  std::string err;
  auto email = parse_email(read_file(email_file), *fmt, time_policy(cfg), &err);
  if (!email) throw std::invalid_argument("cannot parse email: " + err);

  FeatureVector vector;
  Decision decision = check_outgoing(*email, profile, ex, &vector);

  nlohmann::json out{{"email_id", decision.email_id},
                     {"user_id", user_id},
                     {"margin", decision.margin},
                     {"reasons", decision.reasons}};

  if (decision.verdict == DecisionVerdict::accepted) {
    out["verdict"] = "accepted";
    profile.save(ppath);  // vector was queued
    std::cout << out.dump() << "\n";
    return kExitOk;
  }

  append_held(cfg.held_path, {decision.email_id, user_id, decision.margin, decision.reasons,
                              vector});
  auto responder = make_responder(cfg.responder);
  VerificationResult result = responder->respond(decision.email_id, *email);
  VerificationOutcome outcome{decision.email_id, result};
  FinalAction action = resolve_verification(decision, outcome, profile, vector);
  out["verdict"] = "challenged";
  out["verification"] = result == VerificationResult::confirmed ? "confirmed"
                        : result == VerificationResult::failed  ? "failed"
                                                                : "timeout";
  out["action"] = action == FinalAction::released ? "released" : "discarded";
  if (action == FinalAction::released) {
    if (profile.trained() || fs::exists(ppath)) profile.save(ppath);
  } else {
    append_alert(cfg.alerts_path,
                 {decision.email_id, user_id,
                  result == VerificationResult::failed ? "failed" : "timeout",
                  decision.reasons});
  }
  std::cout << out.dump() << "\n";
  return kExitChallenged;
}

int cmd_retrain(const Config& cfg, const std::vector<std::string>& only_users, bool all,
                bool force) {
  LoadedCorpus corpus = load_all(cfg);
  OrgContext ctx = load_context(cfg);
  WordLists lists = WordLists::load(cfg.data_dir);
  FeatureExtractor ex(lists, ctx);
  NegativePools pools = extract_pools(corpus, ex);
  ProfileTrainingConfig pcfg{cfg.svm, cfg.min_history, cfg.retrain_threshold};
  const std::uint64_t seed = cfg.seed.value_or(1);
  const std::int64_t now = static_cast<std::int64_t>(std::time(nullptr));

  std::vector<std::string> users = only_users;
  if (all) {
    users.clear();
    for (const auto& e : fs::directory_iterator(cfg.profiles_dir))
      if (e.path().extension() == ".json") users.push_back(e.path().stem().string());
    std::sort(users.begin(), users.end());
  }
  std::size_t retrained = 0;
  for (const std::string& id : users) {
    BehavioralProfile profile = BehavioralProfile::load(profile_path(cfg.profiles_dir, id));
    if (profile.pending_updates.empty()) {
      std::cerr << "skip " << id << ": nothing pending\n";
      continue;
    }
    if (!force && !retrain_due(profile, cfg.retrain_threshold)) {
      std::cerr << "skip " << id << ": " << profile.pending_updates.size() << " pending < "
                << cfg.retrain_threshold << " (use --force)\n";
      continue;
    }
    profile = retrain(std::move(profile), pools, ex.schema(), pcfg, user_seed(seed, id), now);
    profile.save(profile_path(cfg.profiles_dir, id));
    std::cerr << "retrained " << id << " on " << profile.sent_count << " emails\n";
    ++retrained;
  }
  std::cout << "retrained=" << retrained << "\n";
  return kExitOk;
}

void write_report_files(const std::string& out_dir, const std::string& stem,
                        const EvaluationReport& report) {
  fs::create_directories(out_dir);
  write_file(out_dir + "/" + stem + "_per_user.csv", per_user_csv(report.per_user));
  write_file(out_dir + "/" + stem + "_buckets.json", bucket_summary_json(report));
  write_file(out_dir + "/" + stem + "_plot.csv", plot_csv(report));
}

int cmd_evaluate_kfold(const Config& cfg, int k, bool writing_only, std::uint64_t min_history,
                       std::size_t limit, const std::vector<std::string>& only,
                       const std::string& out_dir) {
  const std::uint64_t seed = require_seed(cfg);
  LoadedCorpus corpus = load_all(cfg);
  OrgContext ctx = load_context(cfg);
  WordLists lists = WordLists::load(cfg.data_dir);
  FeatureExtractor ex(lists, ctx);
  NegativePools pools = extract_pools(corpus, ex);
  std::vector<std::string> users = select_users(corpus, min_history, limit, only);
  if (users.empty()) throw std::invalid_argument("no users match the selection");

  std::vector<UserEvalRow> rows(users.size());
  const std::int64_t n = static_cast<std::int64_t>(users.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string& id = users[i];
    const auto& own = pools.at(id);
    TrainingSet ts =
        assemble_training_set(id, own, pools, schema_kinds(ex.schema()), user_seed(seed, id));
    KfoldResult r = kfold_validate(ts.positives, ts.negatives, k, writing_only, ex.schema(),
                                   cfg.svm, user_seed(seed, id));
    rows[i] = {id, own.size(), r.fp_rate, r.fn_rate};
#pragma omp critical(log)
    std::cerr << "kfold " << id << " history=" << own.size() << " fp=" << r.fp_rate
              << " fn=" << r.fn_rate << "\n";
  }
  EvaluationReport report = bucket_curves(std::move(rows), writing_only);
  write_report_files(out_dir, writing_only ? "kfold_writing_only" : "kfold", report);
  std::cout << bucket_summary_json(report) << "\n";
  return kExitOk;
}

int cmd_evaluate_inject(const Config& cfg, std::uint64_t min_history, std::size_t limit,
                        const std::vector<std::string>& only, const std::string& out_dir) {
  const std::uint64_t seed = require_seed(cfg);
  LoadedCorpus corpus = load_all(cfg);
  if (corpus.attack.empty())
    throw std::invalid_argument("manifest has no attack-role entries");
  OrgContext ctx = load_context(cfg);
  WordLists lists = WordLists::load(cfg.data_dir);
  FeatureExtractor ex(lists, ctx);
  NegativePools pools = extract_pools(corpus, ex);
  std::vector<FeatureVector> attack_vectors = extract_batch(ex, corpus.attack);
  std::vector<std::string> users = select_users(corpus, min_history, limit, only);
  if (users.empty()) throw std::invalid_argument("no users match the selection");

  ProfileTrainingConfig pcfg{cfg.svm, cfg.min_history, cfg.retrain_threshold};
  std::map<std::string, BehavioralProfile> profiles;
  const std::int64_t n = static_cast<std::int64_t>(users.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string& id = users[i];
    BehavioralProfile p = build_profile(id, pools.at(id), pools, ex.schema(), pcfg,
                                        user_seed(seed, id), 0);
#pragma omp critical(collect)
    profiles.emplace(id, std::move(p));
  }

  std::vector<InjectionRow> rows = inject_attacks(profiles, attack_vectors);
  fs::create_directories(out_dir);
  write_file(out_dir + "/inject_per_user.csv", injection_csv(rows));
  // bucketed TP curve, reusing the report shape with tp in the fp slot
  std::vector<UserEvalRow> as_eval;
  for (const auto& r : rows) as_eval.push_back({r.user_id, r.history, r.tp_rate, 0.0});
  EvaluationReport report = bucket_curves(std::move(as_eval), false);
  std::string plot = "history_size,metric,mean_rate,stddev\n";
  for (const auto& b : report.buckets)
    plot += std::to_string(b.bucket) + ",tp," + format_double(b.mean_fp) + "," +
            format_double(b.stddev_fp) + "\n";
  write_file(out_dir + "/inject_plot.csv", plot);
  std::cout << injection_csv(rows);
  return kExitOk;
}

int cmd_evaluate_evade(const Config& cfg, const std::string& strategies_arg,
                       std::uint64_t min_history, std::size_t limit,
                       const std::vector<std::string>& only, const std::string& out_dir) {
  const std::uint64_t seed = require_seed(cfg);
  LoadedCorpus corpus = load_all(cfg);
  if (corpus.attack.empty())
    throw std::invalid_argument("manifest has no attack-role entries");
  OrgContext ctx = load_context(cfg);
  WordLists lists = WordLists::load(cfg.data_dir);
  FeatureExtractor ex(lists, ctx);
  NegativePools pools = extract_pools(corpus, ex);
  std::vector<FeatureVector> attack_vectors = extract_batch(ex, corpus.attack);
  std::vector<std::string> users = select_users(corpus, min_history, limit, only);
  if (users.empty()) throw std::invalid_argument("no users match the selection");

  std::vector<EvasionStrategy> strategies;
  if (strategies_arg.empty()) {
    strategies = default_strategies();
  } else {
    std::istringstream in(strategies_arg);
    std::string tok;
    while (std::getline(in, tok, ','))
      if (!trim(tok).empty()) strategies.push_back(parse_strategy(std::string(trim(tok))));
  }

  ProfileTrainingConfig pcfg{cfg.svm, cfg.min_history, cfg.retrain_threshold};
  SchemaLayout layout = SchemaLayout::from(ex.schema(), ctx);
  std::map<std::string, BehavioralProfile> profiles;
  std::map<std::string, VictimStats> stats;
  const std::int64_t n = static_cast<std::int64_t>(users.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string& id = users[i];
    BehavioralProfile p = build_profile(id, pools.at(id), pools, ex.schema(), pcfg,
                                        user_seed(seed, id), 0);
    VictimStats vs = compute_victim_stats(corpus.user_sent.at(id), pools.at(id), ctx, ex.schema());
#pragma omp critical(collect)
    {
      profiles.emplace(id, std::move(p));
      stats.emplace(id, std::move(vs));
    }
  }

  std::vector<EvasionResult> results =
      evasion_matrix(profiles, stats, layout, attack_vectors, strategies, seed);
  fs::create_directories(out_dir);
  write_file(out_dir + "/evasion_matrix.json", evasion_json(results));
  std::cout << evasion_json(results) << "\n";
  return kExitOk;
}

int cmd_report(const std::string& in_csv, const std::string& out_dir) {
  // rebuild bucket summary + plot data from a per-user CSV
  std::vector<UserEvalRow> rows;
  const std::string text = read_file(in_csv);
  auto lines = split_lines(text);
  for (size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    std::string line(lines[i]);
    std::vector<std::string> cols;
    std::istringstream in(line);
    std::string col;
    while (std::getline(in, col, ',')) cols.push_back(col);
    if (cols.size() < 3) continue;
    UserEvalRow r;
    r.user_id = cols[0];
    r.history = std::strtoull(cols[1].c_str(), nullptr, 10);
    r.fp_rate = std::atof(cols[2].c_str());
    r.fn_rate = cols.size() > 3 ? std::atof(cols[3].c_str()) : 0.0;
    rows.push_back(std::move(r));
  }
  EvaluationReport report = bucket_curves(std::move(rows), false);
  fs::create_directories(out_dir);
  write_file(out_dir + "/report_buckets.json", bucket_summary_json(report));
  write_file(out_dir + "/report_plot.csv", plot_csv(report));
  std::cout << bucket_summary_json(report) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"outgoing-email authorship validation"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (or MAILSENTRY_CONFIG)");

  // shared overrides; flags win over the config file
  std::string manifest, context_path, profiles_dir, data_dir, responder, timezone;
  std::string held_path, alerts_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> svm_c, svm_tol;
  std::optional<int> svm_passes;
  std::optional<std::uint64_t> min_history_opt, retrain_threshold;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest, "corpus manifest JSON");
    cmd->add_option("--context", context_path, "org context file");
    cmd->add_option("--profiles-dir", profiles_dir, "profile directory");
    cmd->add_option("--data-dir", data_dir, "word list / pattern directory");
    cmd->add_option("--seed", seed, "experiment seed");
    cmd->add_option("--svm-c", svm_c, "SVM C");
    cmd->add_option("--svm-tol", svm_tol, "SMO KKT tolerance");
    cmd->add_option("--svm-passes", svm_passes, "SMO max quiet passes");
    cmd->add_option("--min-history", min_history_opt, "minimum sent-history");
    cmd->add_option("--retrain-threshold", retrain_threshold, "pending vectors before retrain");
    cmd->add_option("--responder", responder, "prompt | oracle:<path> | always_fail");
    cmd->add_option("--timezone", timezone, "header | utc | +HH:MM");
    cmd->add_option("--held", held_path, "held-email queue (JSONL)");
    cmd->add_option("--alerts", alerts_path, "alert log (JSONL)");
  };

  auto* build_ctx = app.add_subcommand("build-context", "build the org context lists");
  std::string words_file, extend_from;
  add_common(build_ctx);
  build_ctx->add_option("--words-file", words_file, "context word list (one per line)");
  build_ctx->add_option("--extend", extend_from, "extend an existing context file");

  auto* train = app.add_subcommand("train", "train behavioral profiles");
  std::vector<std::string> train_users;
  bool train_all = false;
  add_common(train);
  train->add_option("--user", train_users, "user id (repeatable)");
  train->add_flag("--all", train_all, "train every user in the manifest");

  auto* check = app.add_subcommand("check", "check one outgoing email");
  std::string check_file, check_user, check_format = "eml";
  add_common(check);
  check->add_option("email_file", check_file, "message file")->required();
  check->add_option("--user", check_user, "sender user id")->required();
  check->add_option("--format", check_format, "eml | mbox | jsonl");

  auto* retrain_cmd = app.add_subcommand("retrain", "fold pending updates into profiles");
  std::vector<std::string> retrain_users;
  bool retrain_all = false, retrain_force = false;
  add_common(retrain_cmd);
  retrain_cmd->add_option("--user", retrain_users, "user id (repeatable)");
  retrain_cmd->add_flag("--all", retrain_all, "retrain every stored profile");
  retrain_cmd->add_flag("--force", retrain_force, "ignore the pending threshold");

  auto* evaluate = app.add_subcommand("evaluate", "run the experiments");
  evaluate->require_subcommand(1);
  int kfold_k = 10;
  bool writing_only = false;
  std::uint64_t sel_min_history = 50;
  std::size_t sel_limit = 0;
  std::vector<std::string> sel_users;
  std::string out_dir = "reports", strategies_arg;

  auto* ev_kfold = evaluate->add_subcommand("kfold", "10-fold cross-validation curves");
  add_common(ev_kfold);
  ev_kfold->add_option("--k", kfold_k, "fold count");
  ev_kfold->add_flag("--writing-only", writing_only, "writing-habit ablation");
  ev_kfold->add_option("--select-min-history", sel_min_history, "only users with this history");
  ev_kfold->add_option("--limit", sel_limit, "cap the user count");
  ev_kfold->add_option("--users", sel_users, "explicit user ids");
  ev_kfold->add_option("--out", out_dir, "report directory");

  auto* ev_inject = evaluate->add_subcommand("inject", "attack-injection TP curves");
  add_common(ev_inject);
  ev_inject->add_option("--select-min-history", sel_min_history, "only users with this history");
  ev_inject->add_option("--limit", sel_limit, "cap the user count");
  ev_inject->add_option("--users", sel_users, "explicit user ids");
  ev_inject->add_option("--out", out_dir, "report directory");

  auto* ev_evade = evaluate->add_subcommand("evade", "adversarial evasion matrix");
  add_common(ev_evade);
  ev_evade->add_option("--strategies", strategies_arg, "comma list, e.g. T,TC,M20,T+TC+M20");
  ev_evade->add_option("--select-min-history", sel_min_history, "only users with this history");
  ev_evade->add_option("--limit", sel_limit, "cap the user count");
  ev_evade->add_option("--users", sel_users, "explicit user ids");
  ev_evade->add_option("--out", out_dir, "report directory");

  auto* report = app.add_subcommand("report", "rebuild bucket summary from a per-user CSV");
  std::string report_in;
  report->add_option("--in", report_in, "per-user CSV")->required();
  report->add_option("--out", out_dir, "report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Config cfg = load_config(config_path);
    if (!manifest.empty()) cfg.manifest = manifest;
    if (!context_path.empty()) cfg.context_path = context_path;
    if (!profiles_dir.empty()) cfg.profiles_dir = profiles_dir;
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    if (!responder.empty()) cfg.responder = responder;
    if (!timezone.empty()) cfg.timezone = timezone;
    if (!held_path.empty()) cfg.held_path = held_path;
    if (!alerts_path.empty()) cfg.alerts_path = alerts_path;
    if (seed) cfg.seed = seed;
    if (svm_c) cfg.svm.C = *svm_c;
    if (svm_tol) cfg.svm.tol = *svm_tol;
    if (svm_passes) cfg.svm.max_passes = *svm_passes;
    if (min_history_opt) cfg.min_history = *min_history_opt;
    if (retrain_threshold) cfg.retrain_threshold = *retrain_threshold;
    if (cfg.svm.C <= 0 || cfg.svm.tol <= 0 || cfg.svm.max_passes <= 0)
      throw std::invalid_argument("svm hyperparameters must be positive");
    if (cfg.min_history == 0 || cfg.retrain_threshold == 0)
      throw std::invalid_argument("min-history and retrain-threshold must be positive");

    if (build_ctx->parsed()) return cmd_build_context(cfg, words_file, extend_from);
    if (train->parsed()) return cmd_train(cfg, train_users, train_all);
    if (check->parsed()) return cmd_check(cfg, check_file, check_user, check_format);
    if (retrain_cmd->parsed())
      return cmd_retrain(cfg, retrain_users, retrain_all, retrain_force);
    if (evaluate->parsed()) {
      if (ev_kfold->parsed())
        return cmd_evaluate_kfold(cfg, kfold_k, writing_only, sel_min_history, sel_limit,
                                  sel_users, out_dir);
      if (ev_inject->parsed())
        return cmd_evaluate_inject(cfg, sel_min_history, sel_limit, sel_users, out_dir);
      if (ev_evade->parsed())
        return cmd_evaluate_evade(cfg, strategies_arg, sel_min_history, sel_limit, sel_users,
                                  out_dir);
    }
    if (report->parsed()) return cmd_report(report_in, out_dir);
    std::cerr << "no subcommand\n";
    return kExitUsage;
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
