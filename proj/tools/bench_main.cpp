// Benchmark: serial reference kernels vs the OpenMP batch kernels, on a
// synthetic corpus. Also cross-checks that both paths produce bitwise
// identical output before timing anything.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mailsentry/features.hpp"
#include "mailsentry/svm.hpp"

using namespace mailsentry;
using Clock = std::chrono::steady_clock;

namespace {

std::vector<Email> synthetic_corpus(size_t n, std::uint64_t seed) {
  static const char* words[] = {"the",    "report, ", "please",  "review",  "schedule",
                                "we",     "meeting",  "at",      "contract","numbers",
                                "trading","update",   "thanks",  "if",      "you",
                                "can",    "send",     "it",      "by",      "friday"};
  std::mt19937_64 rng(seed);
  std::vector<Email> emails(n);
  for (size_t i = 0; i < n; ++i) {
    Email& e = emails[i];
    e.message_id = "bench-" + std::to_string(i);
    e.sender = {"user" + std::to_string(i % 16), "corp.example"};
    e.recipients = {{"peer" + std::to_string(rng() % 64), "corp.example"}};
    if (rng() % 3 == 0) e.cc = {{"cc" + std::to_string(rng() % 16), "corp.example"}};
    e.weekday = static_cast<int>(rng() % 7);
    e.hour = static_cast<int>(rng() % 24);
    std::string body;
    const size_t len = 60 + rng() % 240;
    for (size_t w = 0; w < len; ++w) {
      body += words[rng() % std::size(words)];
      body += (w % 13 == 12) ? ".\n" : " ";
    }
    if (rng() % 4 == 0) body += "\nsee http://intra.corp.example/page/" + std::to_string(rng() % 50);
    e.body = std::move(body);
    e.urls = extract_urls(e.body);
  }
  return emails;
}

template <typename F>
double time_ms(F&& f) {
  auto t0 = Clock::now();
  f();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  size_t n_emails = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 4000;
  int reps = argc > 2 ? std::atoi(argv[2]) : 3;

  WordLists lists = WordLists::load();
  std::vector<Email> emails = synthetic_corpus(n_emails, 7);
  OrgContext ctx = build_context(emails, lists.context_words);
  FeatureExtractor ex(lists, ctx);

  std::printf("corpus: %zu emails, schema: %u features", n_emails, ex.schema().size());
#ifdef _OPENMP
  std::printf(", threads: %d\n", omp_get_max_threads());
#else
  std::printf(", threads: 1 (OpenMP off)\n");
#endif

  // correctness first: parallel output must equal the serial reference
  auto serial_vecs = extract_batch_serial(ex, emails);
  auto parallel_vecs = extract_batch(ex, emails);
  if (serial_vecs != parallel_vecs) {
    std::fprintf(stderr, "FATAL: extract_batch diverges from serial reference\n");
    return 1;
  }

  std::printf("%-28s %12s %12s %8s\n", "kernel", "serial ms", "parallel ms", "speedup");
  double ts = 1e300, tp = 1e300;
  for (int r = 0; r < reps; ++r) {
    ts = std::min(ts, time_ms([&] { extract_batch_serial(ex, emails); }));
    tp = std::min(tp, time_ms([&] { extract_batch(ex, emails); }));
  }
  std::printf("%-28s %12.1f %12.1f %7.2fx\n", "feature extraction", ts, tp, ts / tp);

  // batch margins on a small trained model
  std::vector<FeatureVector> pos(serial_vecs.begin(), serial_vecs.begin() + n_emails / 2);
  std::vector<FeatureVector> neg(serial_vecs.begin() + n_emails / 2, serial_vecs.end());
  TrainingSet tset = TrainingSet::make(std::move(pos), std::move(neg), schema_kinds(ex.schema()));
  SvmModel model = train_smo(tset, {1.0, 1e-3, 3}, 11);

  auto ms = margins_batch_serial(model, serial_vecs);
  auto mp = margins_batch(model, serial_vecs);
  if (ms != mp) {
    std::fprintf(stderr, "FATAL: margins_batch diverges from serial reference\n");
    return 1;
  }
  // margins are cheap per call; time a repeated batch so the numbers mean something
  const int inner = 50;
  ts = tp = 1e300;
  for (int r = 0; r < reps; ++r) {
    ts = std::min(ts, time_ms([&] {
           for (int k = 0; k < inner; ++k) margins_batch_serial(model, serial_vecs);
         }));
    tp = std::min(tp, time_ms([&] {
           for (int k = 0; k < inner; ++k) margins_batch(model, serial_vecs);
         }));
  }
  std::printf("%-28s %12.1f %12.1f %7.2fx\n", "svm margins (x50)", ts, tp, ts / tp);
  return 0;
}
