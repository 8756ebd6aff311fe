#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cascademix/cascade.hpp"
#include "cascademix/common.hpp"
#include "cascademix/diffusion.hpp"
#include "cascademix/inference.hpp"

namespace cascademix {

struct ClusterAssignment {
  std::vector<std::uint32_t> cluster;  // argmax_M gamma[s][M]
  std::vector<bool> tie;               // exact-tie rows (assigned cluster 0)
};

ClusterAssignment assign_clusters(const PosteriorAssignment& posterior);

struct ClusterLabelMap {
  CascadeLabel label_of_cluster[2] = {CascadeLabel::kTrue, CascadeLabel::kFake};
  double holdout_accuracy = 0.0;
};

// Majority label per cluster over the labeled holdout; when both clusters
// agree on the majority, the bijection maximizing holdout accuracy wins.
// Throws when the holdout misses a label. k = 2 clusters only.
ClusterLabelMap map_clusters_to_labels(const std::vector<std::uint32_t>& clusters,
                                       const std::vector<CascadeLabel>& truth,
                                       const std::vector<std::size_t>& holdout);

// Deterministic stratified subset of ~`fraction` per label class.
std::vector<std::size_t> stratified_holdout(const std::vector<CascadeLabel>& truth,
                                            double fraction, std::uint64_t rng_seed);

struct ClusteringMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;      // fake as the positive class
  double mae_pi = 0.0;  // mean |pi_hat - empirical label frequency|
};

ClusteringMetrics clustering_metrics(const std::vector<CascadeLabel>& predicted,
                                     const std::vector<CascadeLabel>& truth,
                                     const std::vector<double>& pi_hat);

struct TestResult {
  std::string name;
  double statistic = 0.0;  // t, or U for Mann-Whitney
  double z_score = 0.0;    // normal-approximation tests only (else NaN)
  double p_value = 0.0;    // one-sided
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool exact = false;
  bool tied = false;
};

// One-sided Welch two-sample t-test, H1: mean(a) > mean(b). Throws when the
// pooled variance term is zero (undefined statistic).
TestResult welch_one_sided(const std::vector<double>& a, const std::vector<double>& b);

// H1: the average inter-engagement delay is higher in fake cascades; per
// cascade the mean delay is log-transformed before the Welch test. Every
// cascade needs >= 2 events and a positive mean delay.
TestResult temporal_test(const std::vector<Cascade>& fake, const std::vector<Cascade>& tru);

// One-sided Mann-Whitney U, H1: a stochastically larger than b. Exact
// enumeration when n1 + n2 <= 12 (mid-p under cross-group ties), otherwise
// tie-corrected normal approximation with z-score.
TestResult mann_whitney_one_sided(const std::vector<double>& a, const std::vector<double>& b);

double mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);
double mann_whitney_exact_p(const std::vector<double>& a, const std::vector<double>& b);
double mann_whitney_normal_p(const std::vector<double>& a, const std::vector<double>& b,
                             double* z_out = nullptr);

// H1: the proportion of connected components r is higher in fake cascades.
TestResult structural_test(const std::vector<double>& fake_r, const std::vector<double>& true_r);

// (value, F) pairs of the empirical CDF, for the ECDF side outputs.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values);

// Empirical pairwise coordinate means E[x_j x_j'] over live-edge draws that
// share one edge set; converges to sum_i pi_i p_j^i p_j'^i.
struct CorrelationMatrix {
  std::size_t m = 0;               // number of edges (coordinates)
  std::vector<double> upper;       // j < j', row-major upper triangle
  std::size_t n_observations = 0;

  double at(std::size_t j, std::size_t jp) const;
};

CorrelationMatrix pairwise_correlation(const std::vector<LiveEdgeGraph>& observations);

// Chernoff sample-size calculator for estimating every pairwise coordinate
// mean within eps_matrix at confidence 1 - delta_matrix:
// N = ceil((2 + eps) / eps^2 * ln(2 / delta)).
std::uint64_t required_samples(double eps_matrix, double delta_matrix);

struct SampleSizeSpec {
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t m = 0;  // edges
  std::size_t n = 0;  // nodes
  std::size_t k = 2;  // mixture components
  // derived
  double eps_prime = 0.0;    // epsilon / (m n)
  double eps_matrix = 0.0;   // (eps_prime^2 / m^2)^(k+1)
  double delta_matrix = 0.0; // 2 delta / (m (m - 1))
  std::uint64_t required = 0;
  double aggregate_complexity = 0.0;  // (n^4 m^8 / eps^4)^(k+1) ln(m / delta)
};

SampleSizeSpec derive_sample_size(double epsilon, double delta, std::size_t m, std::size_t n,
                                  std::size_t k = 2);

}  // namespace cascademix
