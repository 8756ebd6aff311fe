#include "cascademix/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "cascademix/rng.hpp"

namespace cascademix {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace

ClusterAssignment assign_clusters(const PosteriorAssignment& posterior) {
  ClusterAssignment out;
  out.cluster.reserve(posterior.gamma.size());
  out.tie.reserve(posterior.gamma.size());
  for (const auto& row : posterior.gamma) {
    auto best = std::max_element(row.begin(), row.end());
    bool tie = std::count(row.begin(), row.end(), *best) > 1;
    // Exact ties resolve to the lowest component index.
    out.cluster.push_back(static_cast<std::uint32_t>(
        tie ? 0 : std::distance(row.begin(), best)));
    out.tie.push_back(tie);
  }
  return out;
}

std::vector<std::size_t> stratified_holdout(const std::vector<CascadeLabel>& truth,
                                            double fraction, std::uint64_t rng_seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("holdout fraction must be in (0,1)");
  }
  std::vector<std::size_t> holdout;
  for (CascadeLabel which : {CascadeLabel::kTrue, CascadeLabel::kFake}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == which) members.push_back(i);
    }
    if (members.empty()) continue;
    RngStream rng = RngStream::child(rng_seed, 0x5712a7ULL, static_cast<std::uint64_t>(which));
    std::size_t take = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(fraction * members.size())));
    for (std::size_t i = 0; i < take; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(members.size() - i));
      std::swap(members[i], members[j]);
      holdout.push_back(members[i]);
    }
  }
  std::sort(holdout.begin(), holdout.end());
  return holdout;
}

ClusterLabelMap map_clusters_to_labels(const std::vector<std::uint32_t>& clusters,
                                       const std::vector<CascadeLabel>& truth,
                                       const std::vector<std::size_t>& holdout) {
  if (clusters.size() != truth.size()) {
    throw std::invalid_argument("map_clusters_to_labels: clusters and truth differ in length");
  }
  bool has_true = false, has_fake = false;
  // counts[cluster][label]: 0 = true, 1 = fake
  std::size_t counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i : holdout) {
    if (i >= truth.size()) throw std::invalid_argument("holdout index out of range");
    if (truth[i] == CascadeLabel::kUnknown) continue;
    if (clusters[i] > 1) throw std::invalid_argument("map_clusters_to_labels supports 2 clusters");
    bool fake = truth[i] == CascadeLabel::kFake;
    has_true |= !fake;
    has_fake |= fake;
    ++counts[clusters[i]][fake ? 1 : 0];
  }
  if (!has_true || !has_fake) {
    throw std::invalid_argument("holdout must contain at least one cascade of each label");
  }

  auto accuracy_of = [&](CascadeLabel c0, CascadeLabel c1) {
    std::size_t correct = counts[0][c0 == CascadeLabel::kFake ? 1 : 0] +
                          counts[1][c1 == CascadeLabel::kFake ? 1 : 0];
    std::size_t total = counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
    return static_cast<double>(correct) / static_cast<double>(total);
  };

  CascadeLabel maj0 = counts[0][1] > counts[0][0] ? CascadeLabel::kFake : CascadeLabel::kTrue;
  CascadeLabel maj1 = counts[1][1] > counts[1][0] ? CascadeLabel::kFake : CascadeLabel::kTrue;

  ClusterLabelMap map;
  if (maj0 != maj1) {
    map.label_of_cluster[0] = maj0;
    map.label_of_cluster[1] = maj1;
    map.holdout_accuracy = accuracy_of(maj0, maj1);
    return map;
  }
  // Both majorities agree: keep the bijection with the higher holdout
  // accuracy.
  double acc_tf = accuracy_of(CascadeLabel::kTrue, CascadeLabel::kFake);
  double acc_ft = accuracy_of(CascadeLabel::kFake, CascadeLabel::kTrue);
  if (acc_ft > acc_tf) {
    map.label_of_cluster[0] = CascadeLabel::kFake;
    map.label_of_cluster[1] = CascadeLabel::kTrue;
    map.holdout_accuracy = acc_ft;
  } else {
    map.label_of_cluster[0] = CascadeLabel::kTrue;
    map.label_of_cluster[1] = CascadeLabel::kFake;
    map.holdout_accuracy = acc_tf;
  }
  return map;
}

ClusteringMetrics clustering_metrics(const std::vector<CascadeLabel>& predicted,
                                     const std::vector<CascadeLabel>& truth,
                                     const std::vector<double>& pi_hat) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("clustering_metrics: length mismatch");
  }
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0, n_true = 0, n_fake = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == truth[i]) ++correct;
    bool pred_fake = predicted[i] == CascadeLabel::kFake;
    bool is_fake = truth[i] == CascadeLabel::kFake;
    if (pred_fake && is_fake) ++tp;
    if (pred_fake && !is_fake) ++fp;
    if (!pred_fake && is_fake) ++fn;
    (is_fake ? n_fake : n_true) += 1;
  }
  ClusteringMetrics metrics;
  metrics.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / truth.size();
  double denom = 2.0 * tp + fp + fn;
  metrics.f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;
  if (pi_hat.size() == 2 && !truth.empty()) {
    double freq_true = static_cast<double>(n_true) / truth.size();
    double freq_fake = static_cast<double>(n_fake) / truth.size();
    metrics.mae_pi = 0.5 * (std::abs(pi_hat[0] - freq_true) + std::abs(pi_hat[1] - freq_fake));
  } else {
    metrics.mae_pi = kNaN;
  }
  return metrics;
}

TestResult welch_one_sided(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("welch test needs >= 2 samples per group");
  }
  double ma = mean_of(a), mb = mean_of(b);
  double va = sample_variance(a, ma), vb = sample_variance(b, mb);
  double se2 = va / a.size() + vb / b.size();
  if (se2 == 0.0) {
    throw std::invalid_argument("welch test: zero variance in both groups, statistic undefined");
  }
  double t = (ma - mb) / std::sqrt(se2);
  double df = se2 * se2 /
              (va * va / (static_cast<double>(a.size()) * a.size() * (a.size() - 1)) +
               vb * vb / (static_cast<double>(b.size()) * b.size() * (b.size() - 1)));
  boost::math::students_t dist(df);
  TestResult res;
  res.name = "welch_t";
  res.statistic = t;
  res.z_score = kNaN;
  res.p_value = boost::math::cdf(boost::math::complement(dist, t));
  res.n1 = a.size();
  res.n2 = b.size();
  return res;
}

TestResult temporal_test(const std::vector<Cascade>& fake, const std::vector<Cascade>& tru) {
  auto log_mean_delays = [](const std::vector<Cascade>& group) {
    std::vector<double> out;
    out.reserve(group.size());
    for (const Cascade& c : group) {
      if (c.events.size() < 2) {
        throw std::invalid_argument("temporal_test: cascade '" + c.id + "' has < 2 events");
      }
      double span = c.events.back().time - c.events.front().time;
      double mean_delay = span / static_cast<double>(c.events.size() - 1);
      if (!(mean_delay > 0.0)) {
        throw std::invalid_argument("temporal_test: cascade '" + c.id +
                                    "' has zero mean delay; log-transform undefined");
      }
      out.push_back(std::log(mean_delay));
    }
    return out;
  };
  TestResult res = welch_one_sided(log_mean_delays(fake), log_mean_delays(tru));
  res.name = "temporal_welch_t";
  return res;
}

double mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) {
      if (x > y)
        u += 1.0;
      else if (x == y)
        u += 0.5;
    }
  }
  return u;
}

namespace {

// 2U as an integer: win = 2, tie = 1. Keeps the enumeration exact.
long long u_doubled(const std::vector<double>& a, const std::vector<double>& b) {
  long long u2 = 0;
  for (double x : a) {
    for (double y : b) {
      if (x > y)
        u2 += 2;
      else if (x == y)
        u2 += 1;
    }
  }
  return u2;
}

bool has_cross_tie(const std::vector<double>& a, const std::vector<double>& b) {
  for (double x : a) {
    for (double y : b) {
      if (x == y) return true;
    }
  }
  return false;
}

}  // namespace

double mann_whitney_exact_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> combined(a);
  combined.insert(combined.end(), b.begin(), b.end());
  const std::size_t n = combined.size(), n1 = a.size();
  long long observed = u_doubled(a, b);

  // All C(n, n1) group assignments via descending-sorted mask permutations.
  std::vector<char> mask(n, 0);
  std::fill(mask.begin(), mask.begin() + n1, 1);
  std::sort(mask.begin(), mask.end(), std::greater<>());
  std::size_t total = 0, greater = 0, equal = 0;
  std::vector<double> ga, gb;
  do {
    ga.clear();
    gb.clear();
    for (std::size_t i = 0; i < n; ++i) (mask[i] ? ga : gb).push_back(combined[i]);
    long long u2 = u_doubled(ga, gb);
    ++total;
    if (u2 > observed)
      ++greater;
    else if (u2 == observed)
      ++equal;
  } while (std::prev_permutation(mask.begin(), mask.end()));

  // Inclusive P(U >= u) normally; mid-p when cross-group ties make the
  // observed U ambiguous.
  double eq_weight = has_cross_tie(a, b) ? 0.5 : 1.0;
  return (static_cast<double>(greater) + eq_weight * static_cast<double>(equal)) /
         static_cast<double>(total);
}

double mann_whitney_normal_p(const std::vector<double>& a, const std::vector<double>& b,
                             double* z_out) {
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  double u = mann_whitney_u(a, b);

  std::vector<double> combined(a);
  combined.insert(combined.end(), b.begin(), b.end());
  std::sort(combined.begin(), combined.end());
  double tie_sum = 0.0;
  for (std::size_t i = 0; i < combined.size();) {
    std::size_t j = i;
    while (j < combined.size() && combined[j] == combined[i]) ++j;
    double t = static_cast<double>(j - i);
    tie_sum += t * t * t - t;
    i = j;
  }

  double mu = n1 * n2 / 2.0;
  double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
  if (var <= 0.0) {
    if (z_out) *z_out = 0.0;
    return 0.5;  // all values tied; no evidence either way
  }
  double z = (u - mu) / std::sqrt(var);
  if (z_out) *z_out = z;
  return normal_sf(z);
}

TestResult mann_whitney_one_sided(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("mann-whitney test needs non-empty groups");
  }
  TestResult res;
  res.statistic = mann_whitney_u(a, b);
  res.n1 = a.size();
  res.n2 = b.size();
  res.tied = has_cross_tie(a, b);
  if (a.size() + b.size() <= 12) {
    res.name = "mann_whitney_exact";
    res.exact = true;
    res.z_score = kNaN;
    res.p_value = mann_whitney_exact_p(a, b);
  } else {
    res.name = "mann_whitney_normal";
    res.exact = false;
    res.p_value = mann_whitney_normal_p(a, b, &res.z_score);
  }
  return res;
}

TestResult structural_test(const std::vector<double>& fake_r, const std::vector<double>& true_r) {
  TestResult res = mann_whitney_one_sided(fake_r, true_r);
  res.name = "structural_" + res.name;
  return res;
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<std::pair<double, double>> cdf;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    cdf.emplace_back(values[i], static_cast<double>(j) / n);
    i = j;
  }
  return cdf;
}

double CorrelationMatrix::at(std::size_t j, std::size_t jp) const {
  if (j == jp || j >= m || jp >= m) {
    throw std::invalid_argument("correlation is defined for distinct coordinates j != j'");
  }
  if (j > jp) std::swap(j, jp);
  std::size_t idx = j * (2 * m - j - 1) / 2 + (jp - j - 1);
  return upper[idx];
}

CorrelationMatrix pairwise_correlation(const std::vector<LiveEdgeGraph>& observations) {
  if (observations.empty()) {
    throw std::invalid_argument("pairwise_correlation needs >= 1 observation");
  }
  const std::size_t m = observations.front().live.size();
  for (const auto& obs : observations) {
    if (obs.live.size() != m) {
      throw std::invalid_argument("pairwise_correlation: observations differ in edge set");
    }
  }
  CorrelationMatrix corr;
  corr.m = m;
  corr.n_observations = observations.size();
  corr.upper.assign(m * (m - 1) / 2, 0.0);
  std::vector<std::size_t> live_idx;
  for (const auto& obs : observations) {
    live_idx.clear();
    for (std::size_t j = 0; j < m; ++j) {
      if (obs.live[j]) live_idx.push_back(j);
    }
    for (std::size_t x = 0; x < live_idx.size(); ++x) {
      std::size_t j = live_idx[x];
      for (std::size_t y = x + 1; y < live_idx.size(); ++y) {
        std::size_t jp = live_idx[y];
        corr.upper[j * (2 * m - j - 1) / 2 + (jp - j - 1)] += 1.0;
      }
    }
  }
  for (double& v : corr.upper) v /= static_cast<double>(observations.size());
  return corr;
}

std::uint64_t required_samples(double eps_matrix, double delta_matrix) {
  if (!(eps_matrix > 0.0 && eps_matrix < 1.0) || !(delta_matrix > 0.0 && delta_matrix < 1.0)) {
    throw std::invalid_argument("required_samples: eps_matrix and delta_matrix must be in (0,1)");
  }
  double bound = (2.0 + eps_matrix) / (eps_matrix * eps_matrix) * std::log(2.0 / delta_matrix);
  double n = std::ceil(bound);
  if (!(n < 1.8e19)) {
    throw std::range_error("required_samples: bound exceeds the representable sample count");
  }
  return static_cast<std::uint64_t>(n);
}

SampleSizeSpec derive_sample_size(double epsilon, double delta, std::size_t m, std::size_t n,
                                  std::size_t k) {
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("derive_sample_size: epsilon and delta must be in (0,1)");
  }
  if (m < 2 || n < 1 || k < 1) {
    throw std::invalid_argument("derive_sample_size: need m >= 2, n >= 1, k >= 1");
  }
  SampleSizeSpec spec;
  spec.epsilon = epsilon;
  spec.delta = delta;
  spec.m = m;
  spec.n = n;
  spec.k = k;
  double md = static_cast<double>(m), nd = static_cast<double>(n);
  spec.eps_prime = epsilon / (md * nd);
  spec.eps_matrix = std::pow(spec.eps_prime * spec.eps_prime / (md * md),
                             static_cast<double>(k + 1));
  spec.delta_matrix = 2.0 * delta / (md * (md - 1.0));
  spec.required = required_samples(spec.eps_matrix, spec.delta_matrix);
  spec.aggregate_complexity =
      std::pow(nd * nd * nd * nd * std::pow(md, 8) / std::pow(epsilon, 4),
               static_cast<double>(k + 1)) *
      std::log(md / delta);
  return spec;
}

}  // namespace cascademix
