#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cascademix/cascade.hpp"
#include "cascademix/common.hpp"
#include "cascademix/indexing.hpp"
#include "cascademix/params.hpp"

namespace cascademix {

// Posterior responsibilities gamma[s][m] (rows sum to 1) with hard labels
// argmax_m gamma[s][m].
struct PosteriorAssignment {
  std::size_t k = 2;
  std::vector<std::vector<double>> gamma;  // |C| rows of size k
  std::vector<std::uint32_t> hard_labels;
};

struct EmConfig {
  std::size_t k = 2;
  std::uint64_t init_seed = 0;
  std::uint32_t max_iters = 200;
  double tol = 0.01;            // stop when |delta NLL per cascade| < tol
  std::uint32_t restarts = 5;   // keep the lowest-NLL solution
  double param_clamp = 1e-6;    // eps_p: edge parameters live in [eps, 1-eps]
  unsigned threads = 0;
  bool tie_edges = false;       // HIC: one scalar per component
  // When set, runs a single EM from this initialization (restarts ignored).
  std::optional<MixtureParams> init;
};

struct EmState {
  MixtureParams params;
  std::vector<std::vector<double>> loglik;  // per cascade, per component
  std::vector<double> nll_trace;            // observed NLL per cascade, per iteration
  double q_value = 0.0;                     // surrogate objective at the last E-step
  std::uint32_t iterations = 0;             // == nll_trace.size()
  bool converged = false;
  std::uint32_t degenerate_cascades = 0;    // all-component -inf likelihoods seen
  std::uint32_t skipped_edge_updates = 0;   // zero-responsibility denominators
};

struct FitResult {
  MixtureParams params;
  PosteriorAssignment posterior;
  EmState state;
};

// 1 - prod_{u in parents_W(v, s)} (1 - p_uv) with parent probabilities taken
// from `component` (pairs absent from the map contribute nothing). Throws
// when v is a seed of s or not activated in s.
double activation_probability(NodeId v, const Cascade& cascade,
                              const ActivationIndex::PerCascade& index,
                              const ComponentParams& component);

// log P(s; theta_M): sum of log activation probabilities over non-seed
// activations plus log(1 - p) over component edges whose cascade lies in B.
// Seeds contribute 0; the result can be -inf. `activation_floor` > 0 bounds
// each per-activation probability from below (used for held-out scoring).
double cascade_log_likelihood(const Cascade& cascade, const WindowSpec& window,
                              const ComponentParams& component,
                              FailureMode failure_mode = FailureMode::kWindowAfterParent,
                              double activation_floor = 0.0);

// Bayes responsibilities from mixing weights and per-component
// log-likelihoods, computed in the log domain via max-subtraction. When all
// components are -inf the row falls back to pi (degeneracy).
PosteriorAssignment e_step(const std::vector<double>& pi,
                           const std::vector<std::vector<double>>& loglik,
                           std::uint32_t* degenerate_count = nullptr);

// One M-step at the given responsibilities: pi becomes the responsibility
// mean; each edge parameter becomes the expected success count over A_{u,v}
// divided by the expected attempt count over A and B, evaluated at the
// pre-update parameters and clamped to [eps_p, 1 - eps_p]. Edges whose
// responsibilities sum to zero keep their previous value (counted in
// *skipped_updates).
MixtureParams m_step(const CascadeSet& set, const ActivationIndex& index,
                     const CandidateEdgeIndex& edges, const MixtureParams& current,
                     const PosteriorAssignment& posterior, double param_clamp = 1e-6,
                     std::uint32_t* skipped_updates = nullptr);

// EM for the k-component IC mixture over the candidate edge index.
FitResult fit(const CascadeSet& set, const ActivationIndex& index,
              const CandidateEdgeIndex& edges, const EmConfig& config = {});

// Homogeneous variant: the M-step pools every edge of a component into one
// scalar, which the returned params expand back over all candidate edges.
FitResult fit_hic(const CascadeSet& set, const ActivationIndex& index,
                  const CandidateEdgeIndex& edges, EmConfig config = {});

// Mean over held-out cascades of -log sum_M pi_M exp(loglik_M(s)). Scoring
// floors each activation probability at `activation_floor` so cascades with
// moves unexplained by the model stay finite.
double heldout_nll(const CascadeSet& heldout, const MixtureParams& params,
                   FailureMode failure_mode = FailureMode::kWindowAfterParent,
                   double activation_floor = 1e-6);

}  // namespace cascademix
