#include "mailsentry/svm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mailsentry {

Scaler Scaler::fit(const std::vector<const FeatureVector*>& vectors,
                   const std::vector<ValueKind>& kinds) {
  const std::uint32_t dim = static_cast<std::uint32_t>(kinds.size());
  Scaler s;
  s.mean.assign(dim, 0.0);
  s.inv_std.assign(dim, 1.0);
  if (vectors.empty()) return s;
  const double n = static_cast<double>(vectors.size());
  std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
  for (const FeatureVector* v : vectors)
    for (const auto& [i, x] : v->items) {
      sum[i] += x;
      sum_sq[i] += x * x;
    }
  for (std::uint32_t i = 0; i < dim; ++i) {
    if (kinds[i] == ValueKind::boolean) continue;  // pass through
    const double mu = sum[i] / n;
    const double var = std::max(0.0, sum_sq[i] / n - mu * mu);
    s.mean[i] = mu;
    s.inv_std[i] = var > 1e-24 ? 1.0 / std::sqrt(var) : 0.0;
  }
  return s;
}

std::vector<double> Scaler::transform(const FeatureVector& v) const {
  std::vector<double> out(mean.size());
  for (size_t i = 0; i < mean.size(); ++i) out[i] = (0.0 - mean[i]) * inv_std[i];
  for (const auto& [i, x] : v.items) out[i] = (x - mean[i]) * inv_std[i];
  return out;
}

TrainingSet TrainingSet::make(std::vector<FeatureVector> positives,
                              std::vector<FeatureVector> negatives,
                              const std::vector<ValueKind>& kinds) {
  TrainingSet ts;
  ts.positives = std::move(positives);
  ts.negatives = std::move(negatives);
  std::vector<const FeatureVector*> all;
  all.reserve(ts.positives.size() + ts.negatives.size());
  for (const auto& v : ts.positives) all.push_back(&v);
  for (const auto& v : ts.negatives) all.push_back(&v);
  for (const FeatureVector* v : all)
    if (!all.empty() && v->schema_hash != all.front()->schema_hash)
      throw SchemaMismatchError("training vectors span multiple schemas");
  ts.scaler = Scaler::fit(all, kinds);
  return ts;
}

std::uint32_t TrainingSet::dim() const {
  if (!positives.empty()) return positives.front().dim;
  if (!negatives.empty()) return negatives.front().dim;
  return 0;
}

void SvmModel::finalize() {
  weight_times_inv_.assign(weights.size(), 0.0);
  double c = bias;
  for (size_t i = 0; i < weights.size(); ++i) {
    weight_times_inv_[i] = weights[i] * scaler.inv_std[i];
    c -= weight_times_inv_[i] * scaler.mean[i];
  }
  margin_const_ = c;
}

double SvmModel::margin(const FeatureVector& v) const {
  if (v.schema_hash != schema_hash)
    throw SchemaMismatchError("vector schema " + v.schema_hash + " != model schema " +
                              schema_hash);
  double m = margin_const_;
  for (const auto& [i, x] : v.items) m += weight_times_inv_[i] * x;
  return m;
}

std::pair<Verdict, double> SvmModel::predict(const FeatureVector& v) const {
  const double m = margin(v);
  return {m > 0.0 ? Verdict::user : Verdict::not_user, m};
}

namespace {

struct ScaledPoint {
  std::vector<std::pair<std::uint32_t, double>> sx;  // inv_std[i] * x[i], zeros dropped
  double t = 0.0;                                    // sx . u
  double q = 0.0;                                    // sx . sx
  double y = 1.0;
};

double sparse_dot(const std::vector<std::pair<std::uint32_t, double>>& a,
                  const std::vector<std::pair<std::uint32_t, double>>& b) {
  double acc = 0.0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first)
      ++i;
    else if (a[i].first > b[j].first)
      ++j;
    else {
      acc += a[i].second * b[j].second;
      ++i;
      ++j;
    }
  }
  return acc;
}

}  // namespace

SvmModel train_smo(const TrainingSet& ts, const SvmHyperparams& hp, std::uint64_t seed) {
  const size_t n_pos = ts.positives.size();
  const size_t n_neg = ts.negatives.size();
  const size_t n = n_pos + n_neg;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("train_smo requires at least one vector per class");

  const std::uint32_t dim = ts.dim();
  const std::string schema_hash =
      !ts.positives.empty() ? ts.positives.front().schema_hash : ts.negatives.front().schema_hash;

  // u = inv_std * mean; the scaled space is z_i = sx_i - u
  std::vector<double> u(dim, 0.0);
  for (std::uint32_t i = 0; i < dim; ++i) u[i] = ts.scaler.inv_std[i] * ts.scaler.mean[i];
  double m2 = 0.0;
  for (double v : u) m2 += v * v;

  std::vector<ScaledPoint> pts(n);
  auto load_point = [&](size_t slot, const FeatureVector& v, double label) {
    ScaledPoint& p = pts[slot];
    p.y = label;
    p.sx.reserve(v.items.size());
    for (const auto& [i, x] : v.items) {
      const double sv = ts.scaler.inv_std[i] * x;
      if (sv != 0.0) p.sx.emplace_back(i, sv);
    }
    double t = 0.0, q = 0.0;
    for (const auto& [i, sv] : p.sx) {
      t += sv * u[i];
      q += sv * sv;
    }
    p.t = t;
    p.q = q;
  };
  for (size_t i = 0; i < n_pos; ++i) load_point(i, ts.positives[i], +1.0);
  for (size_t i = 0; i < n_neg; ++i) load_point(n_pos + i, ts.negatives[i], -1.0);

  bool all_identical = true;
  for (size_t i = 1; i < n && all_identical; ++i)
    all_identical = pts[i].sx == pts[0].sx;
  if (all_identical)
    throw DegenerateDataError("all training vectors are identical; profile untrainable");

  // state: alphas, bias, and the affine decomposition of w = ws - gamma*u
  std::vector<double> alpha(n, 0.0);
  std::vector<double> ws(dim, 0.0);
  double gamma = 0.0;     // sum of alpha_k * y_k
  double s_wu = 0.0;      // ws . u
  double b = 0.0;

  auto f_of = [&](size_t i) {
    const ScaledPoint& p = pts[i];
    double dot_ws_sx = 0.0;
    for (const auto& [d, sv] : p.sx) dot_ws_sx += ws[d] * sv;
    return dot_ws_sx - s_wu - gamma * p.t + gamma * m2 + b;
  };
  auto kernel = [&](size_t i, size_t j) {
    if (i == j) return pts[i].q - 2.0 * pts[i].t + m2;
    return sparse_dot(pts[i].sx, pts[j].sx) - pts[i].t - pts[j].t + m2;
  };
  auto apply_update = [&](size_t i, double delta) {  // alpha_i += delta (already applied)
    const ScaledPoint& p = pts[i];
    const double c = p.y * delta;
    for (const auto& [d, sv] : p.sx) ws[d] += c * sv;
    gamma += c;
    s_wu += c * p.t;
  };

  std::mt19937_64 rng(seed);
  const double C = hp.C;
  const double tol = hp.tol;
  int passes = 0;
  int sweeps = 0;
  const int max_sweeps = std::max(2000, hp.max_passes * 200);

  // One pairwise step; false when (i, j) cannot make progress.
  auto try_pair = [&](size_t i, size_t j, double Ei) {
    const double Ej = f_of(j) - pts[j].y;
    const double ai_old = alpha[i], aj_old = alpha[j];
    double L, H;
    if (pts[i].y != pts[j].y) {
      L = std::max(0.0, aj_old - ai_old);
      H = std::min(C, C + aj_old - ai_old);
    } else {
      L = std::max(0.0, ai_old + aj_old - C);
      H = std::min(C, ai_old + aj_old);
    }
    if (L >= H) return false;

    const double kii = kernel(i, i), kjj = kernel(j, j), kij = kernel(i, j);
    const double eta = 2.0 * kij - kii - kjj;
    if (eta >= 0.0) return false;

    double aj = aj_old - pts[j].y * (Ei - Ej) / eta;
    aj = std::clamp(aj, L, H);
    if (std::abs(aj - aj_old) < 1e-7) return false;
    const double ai = ai_old + pts[i].y * pts[j].y * (aj_old - aj);

    alpha[i] = ai;
    alpha[j] = aj;
    apply_update(i, ai - ai_old);
    apply_update(j, aj - aj_old);

    const double b1 = b - Ei - pts[i].y * (ai - ai_old) * kii - pts[j].y * (aj - aj_old) * kij;
    const double b2 = b - Ej - pts[i].y * (ai - ai_old) * kij - pts[j].y * (aj - aj_old) * kjj;
    if (ai > 0.0 && ai < C)
      b = b1;
    else if (aj > 0.0 && aj < C)
      b = b2;
    else
      b = 0.5 * (b1 + b2);
    return true;
  };

  // On large noisy sets an exhaustive partner walk per violator is quadratic,
  // so the walk is capped; small problems still get the full ring, which makes
  // termination imply KKT at tol for them.
  const size_t max_partner_walk = std::min<size_t>(n, 64);

  while (passes < hp.max_passes && sweeps < max_sweeps) {
    ++sweeps;
    size_t num_changed = 0;
    for (size_t i = 0; i < n; ++i) {
      const double Ei = f_of(i) - pts[i].y;
      const double yEi = pts[i].y * Ei;
      if (!((yEi < -tol && alpha[i] < C) || (yEi > tol && alpha[i] > 0))) continue;

      // random partner first, then walk the ring so a violating point is only
      // abandoned when no reachable partner can move it
      size_t j0 = rng() % (n - 1);
      if (j0 >= i) ++j0;
      bool progressed = try_pair(i, j0, Ei);
      for (size_t step = 1; !progressed && step < max_partner_walk; ++step) {
        size_t j = (j0 + step) % n;
        if (j == i || j == j0) continue;
        progressed = try_pair(i, j, Ei);  // state is untouched while tries fail
      }
      if (progressed) ++num_changed;
    }
    // a sweep that moved almost nothing (< 0.2% of the points) counts as quiet
    if (num_changed * 500 < n)
      ++passes;
    else
      passes = 0;
  }

  SvmModel model;
  model.hyperparams = hp;
  model.scaler = ts.scaler;
  model.schema_hash = schema_hash;
  model.dim = dim;
  model.bias = b;
  model.weights.assign(dim, 0.0);
  for (std::uint32_t d = 0; d < dim; ++d) model.weights[d] = ws[d] - gamma * u[d];
  for (size_t i = 0; i < n; ++i)
    if (alpha[i] > 0.0) model.support_alphas.emplace_back(static_cast<std::uint32_t>(i), alpha[i]);
  model.finalize();
  return model;
}

std::vector<double> margins_batch_serial(const SvmModel& model,
                                         std::span<const FeatureVector> vectors) {
  std::vector<double> out(vectors.size());
  for (size_t i = 0; i < vectors.size(); ++i) out[i] = model.margin(vectors[i]);
  return out;
}

std::vector<double> margins_batch(const SvmModel& model,
                                  std::span<const FeatureVector> vectors) {
  std::vector<double> out(vectors.size());
  const std::int64_t n = static_cast<std::int64_t>(vectors.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = model.margin(vectors[i]);
  return out;
}

}  // namespace mailsentry
