#include "mailsentry/features.hpp"

namespace mailsentry {

std::vector<FeatureVector> extract_batch_serial(const FeatureExtractor& ex,
                                                std::span<const Email> emails) {
  std::vector<FeatureVector> out(emails.size());
  for (size_t i = 0; i < emails.size(); ++i) out[i] = ex.extract(emails[i]);
  return out;
}

std::vector<FeatureVector> extract_batch(const FeatureExtractor& ex,
                                         std::span<const Email> emails) {
  std::vector<FeatureVector> out(emails.size());
  const std::int64_t n = static_cast<std::int64_t>(emails.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) out[i] = ex.extract(emails[i]);
  return out;
}

}  // namespace mailsentry
