#include "cascademix/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "cascademix/parallel.hpp"
#include "cascademix/rng.hpp"

namespace cascademix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Flat cascade-major structures for the EM inner loops. An "activation
// slot" is one non-seed activation with a non-empty potential-parent set;
// its parents map to candidate-edge handles.
struct EmWorkspace {
  std::size_t n_cascades = 0;
  std::size_t n_edges = 0;
  std::vector<std::size_t> act_offset;        // per cascade -> slot range
  std::vector<std::size_t> parent_offset;     // per slot -> parent handle range
  std::vector<std::uint32_t> parent_handles;  // candidate edge per (slot, parent)
  std::vector<std::size_t> fail_offset;       // per cascade -> failure handle range
  std::vector<std::uint32_t> fail_handles;    // cascades' B membership, transposed
  std::vector<std::uint32_t> impossible;      // non-seed activations with no parents
};

EmWorkspace build_workspace(const CascadeSet& set, const ActivationIndex& index,
                            const CandidateEdgeIndex& edges) {
  EmWorkspace ws;
  ws.n_cascades = set.cascades.size();
  ws.n_edges = edges.edge_count();
  ws.act_offset.assign(ws.n_cascades + 1, 0);
  ws.fail_offset.assign(ws.n_cascades + 1, 0);
  ws.impossible.assign(ws.n_cascades, 0);

  ws.parent_offset.push_back(0);
  for (std::size_t s = 0; s < ws.n_cascades; ++s) {
    const Cascade& c = set.cascades[s];
    const auto& per = index.cascades[s];
    for (std::size_t i = per.seed_count; i < c.events.size(); ++i) {
      if (per.parent_lo[i] == per.parent_hi[i]) {
        ++ws.impossible[s];
        continue;
      }
      NodeId v = c.events[i].user;
      for (std::uint32_t j = per.parent_lo[i]; j < per.parent_hi[i]; ++j) {
        auto it = edges.by_pair.find(CandidateEdgeIndex::pack(c.events[j].user, v));
        ws.parent_handles.push_back(static_cast<std::uint32_t>(it->second));
      }
      ws.parent_offset.push_back(ws.parent_handles.size());
    }
    ws.act_offset[s + 1] = ws.parent_offset.size() - 1;
  }

  // Transpose the per-edge B lists into per-cascade failure handle lists.
  std::vector<std::size_t> counts(ws.n_cascades, 0);
  for (const auto& e : edges.edges) {
    for (std::uint32_t s : e.b) ++counts[s];
  }
  for (std::size_t s = 0; s < ws.n_cascades; ++s) {
    ws.fail_offset[s + 1] = ws.fail_offset[s] + counts[s];
  }
  ws.fail_handles.resize(ws.fail_offset[ws.n_cascades]);
  std::vector<std::size_t> cursor(ws.fail_offset.begin(), ws.fail_offset.end() - 1);
  for (std::size_t h = 0; h < edges.edges.size(); ++h) {
    for (std::uint32_t s : edges.edges[h].b) {
      ws.fail_handles[cursor[s]++] = static_cast<std::uint32_t>(h);
    }
  }
  return ws;
}

// Per-component E-step quantities at the current parameters.
struct ComponentEval {
  std::vector<double> loglik;   // per cascade
  std::vector<double> act_prob; // p_s^M(v) per activation slot
};

void evaluate_component(const EmWorkspace& ws, const std::vector<double>& p,
                        ComponentEval& eval, unsigned threads) {
  eval.loglik.assign(ws.n_cascades, 0.0);
  eval.act_prob.assign(ws.parent_offset.size() - 1, 0.0);
  std::vector<double> log_fail(ws.n_edges);
  for (std::size_t h = 0; h < ws.n_edges; ++h) log_fail[h] = std::log1p(-p[h]);

  parallel_for(ws.n_cascades, threads, 64, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      double ll = 0.0;
      for (std::size_t a = ws.act_offset[s]; a < ws.act_offset[s + 1]; ++a) {
        double fail = 1.0;
        for (std::size_t q = ws.parent_offset[a]; q < ws.parent_offset[a + 1]; ++q) {
          fail *= 1.0 - p[ws.parent_handles[q]];
        }
        double pv = 1.0 - fail;
        eval.act_prob[a] = pv;
        ll += std::log(pv);
      }
      for (std::size_t q = ws.fail_offset[s]; q < ws.fail_offset[s + 1]; ++q) {
        ll += log_fail[ws.fail_handles[q]];
      }
      if (ws.impossible[s] > 0) ll = kNegInf;
      eval.loglik[s] = ll;
    }
  });
}

double observed_nll(const std::vector<double>& pi, const std::vector<ComponentEval>& evals,
                    std::size_t n_cascades) {
  double total = 0.0;
  for (std::size_t s = 0; s < n_cascades; ++s) {
    double mx = kNegInf;
    for (std::size_t m = 0; m < pi.size(); ++m) {
      double a = std::log(pi[m]) + evals[m].loglik[s];
      if (a > mx) mx = a;
    }
    if (!std::isfinite(mx)) {
      total = std::numeric_limits<double>::infinity();
      continue;
    }
    double sum = 0.0;
    for (std::size_t m = 0; m < pi.size(); ++m) {
      sum += std::exp(std::log(pi[m]) + evals[m].loglik[s] - mx);
    }
    total -= mx + std::log(sum);
  }
  return total / static_cast<double>(n_cascades);
}

// M-step: pi is the responsibility mean; each edge update is the expected
// success count over A divided by the expected attempt count over A and B,
// with p_s(v) fixed at the pre-update parameters. Accumulation runs over
// cascades in fixed 256-cascade chunks merged in order, so results match
// for any thread count.
void m_step_update(const EmWorkspace& ws, const std::vector<double>& gamma,
                   const std::vector<ComponentEval>& evals, bool tie_edges, double eps,
                   std::vector<double>& pi, std::vector<std::vector<double>>& p,
                   std::uint32_t& skipped_updates) {
  const std::size_t k = pi.size();
  const std::size_t n = ws.n_cascades;
  auto clamp = [&](double x) { return std::min(1.0 - eps, std::max(eps, x)); };

  constexpr std::size_t kChunk = 256;
  std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  for (std::size_t m = 0; m < k; ++m) {
    double pi_sum = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      double part = 0.0;
      for (std::size_t s = c * kChunk; s < std::min(n, (c + 1) * kChunk); ++s) {
        part += gamma[s * k + m];
      }
      pi_sum += part;
    }
    pi[m] = pi_sum / static_cast<double>(n);
  }

  for (std::size_t m = 0; m < k; ++m) {
    std::vector<double> num(ws.n_edges, 0.0), den(ws.n_edges, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      double g = gamma[s * k + m];
      if (g == 0.0) continue;
      for (std::size_t a = ws.act_offset[s]; a < ws.act_offset[s + 1]; ++a) {
        double pv = evals[m].act_prob[a];
        for (std::size_t q = ws.parent_offset[a]; q < ws.parent_offset[a + 1]; ++q) {
          std::uint32_t h = ws.parent_handles[q];
          num[h] += g * p[m][h] / pv;
          den[h] += g;
        }
      }
      for (std::size_t q = ws.fail_offset[s]; q < ws.fail_offset[s + 1]; ++q) {
        den[ws.fail_handles[q]] += g;
      }
    }
    if (tie_edges) {
      double num_all = std::accumulate(num.begin(), num.end(), 0.0);
      double den_all = std::accumulate(den.begin(), den.end(), 0.0);
      if (den_all == 0.0) {
        ++skipped_updates;
      } else {
        double scalar = clamp(num_all / den_all);
        std::fill(p[m].begin(), p[m].end(), scalar);
      }
    } else {
      for (std::size_t h = 0; h < ws.n_edges; ++h) {
        if (den[h] == 0.0) {
          ++skipped_updates;
          continue;
        }
        p[m][h] = clamp(num[h] / den[h]);
      }
    }
  }
}

struct EmRun {
  std::vector<double> pi;
  std::vector<std::vector<double>> p;  // per component, per edge handle
  std::vector<std::vector<double>> gamma_rows;
  std::vector<std::vector<double>> loglik_rows;
  std::vector<double> nll_trace;
  double q_value = 0.0;
  bool converged = false;
  std::uint32_t degenerate = 0;
  std::uint32_t skipped_updates = 0;
};

// One EM run from an explicit initialization. Accumulation over cascades is
// done in fixed 256-cascade chunks merged in order, so results match for
// any thread count.
EmRun run_em(const EmWorkspace& ws, std::vector<double> pi, std::vector<std::vector<double>> p,
             const EmConfig& config) {
  const std::size_t k = pi.size();
  const std::size_t n = ws.n_cascades;
  const double eps = config.param_clamp;
  EmRun run;

  std::vector<ComponentEval> evals(k);
  std::vector<double> gamma(n * k, 0.0);

  auto clamp = [&](double x) { return std::min(1.0 - eps, std::max(eps, x)); };
  for (auto& comp : p) {
    for (double& x : comp) x = clamp(x);
  }

  for (std::uint32_t iter = 0; iter < config.max_iters; ++iter) {
    for (std::size_t m = 0; m < k; ++m) {
      evaluate_component(ws, p[m], evals[m], config.threads);
    }
    run.nll_trace.push_back(observed_nll(pi, evals, n));

    // Responsibilities in the log domain with max-subtraction; all -inf
    // rows fall back to pi.
    std::uint32_t degenerate_now = 0;
    for (std::size_t s = 0; s < n; ++s) {
      double mx = kNegInf;
      for (std::size_t m = 0; m < k; ++m) {
        double a = pi[m] > 0.0 ? std::log(pi[m]) + evals[m].loglik[s] : kNegInf;
        if (a > mx) mx = a;
      }
      if (!std::isfinite(mx)) {
        for (std::size_t m = 0; m < k; ++m) gamma[s * k + m] = pi[m];
        ++degenerate_now;
        continue;
      }
      double sum = 0.0;
      for (std::size_t m = 0; m < k; ++m) {
        double a = pi[m] > 0.0 ? std::log(pi[m]) + evals[m].loglik[s] : kNegInf;
        gamma[s * k + m] = std::exp(a - mx);
        sum += gamma[s * k + m];
      }
      for (std::size_t m = 0; m < k; ++m) gamma[s * k + m] /= sum;
    }
    run.degenerate += degenerate_now;

    std::size_t trace_len = run.nll_trace.size();
    if (trace_len >= 2) {
      double delta = run.nll_trace[trace_len - 2] - run.nll_trace[trace_len - 1];
      if (std::isfinite(delta) && std::abs(delta) < config.tol) {
        run.converged = true;
        break;
      }
    }

    m_step_update(ws, gamma, evals, config.tie_edges, eps, pi, p, run.skipped_updates);
  }

  // Surrogate objective at the final responsibilities, with 0 * (-inf) = 0.
  double q = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t m = 0; m < k; ++m) {
      double g = gamma[s * k + m];
      if (g == 0.0) continue;
      double log_pi = pi[m] > 0.0 ? std::log(pi[m]) : kNegInf;
      q += g * (log_pi + evals[m].loglik[s]);
    }
  }
  run.q_value = q;

  run.pi = std::move(pi);
  run.p = std::move(p);
  run.gamma_rows.resize(n);
  run.loglik_rows.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    run.gamma_rows[s].assign(gamma.begin() + s * k, gamma.begin() + (s + 1) * k);
    run.loglik_rows[s].resize(k);
    for (std::size_t m = 0; m < k; ++m) run.loglik_rows[s][m] = evals[m].loglik[s];
  }
  return run;
}

std::vector<double> init_pi(std::size_t k, RngStream& rng) {
  if (k == 2) {
    double t = rng.uniform(0.25, 0.75);
    return {t, 1.0 - t};
  }
  std::vector<double> pi(k);
  double total = 0.0;
  for (double& x : pi) {
    x = rng.uniform(0.25, 0.75);
    total += x;
  }
  for (double& x : pi) x /= total;
  return pi;
}

FitResult fit_impl(const CascadeSet& set, const ActivationIndex& index,
                   const CandidateEdgeIndex& edges, const EmConfig& config) {
  if (set.cascades.empty()) throw std::invalid_argument("fit: cascade set is empty");
  if (edges.edge_count() == 0) throw std::invalid_argument("fit: candidate edge index is empty");
  if (config.k < 2) throw std::invalid_argument("fit: k must be >= 2");
  if (!(config.tol > 0.0)) throw std::invalid_argument("fit: tol must be > 0");

  EmWorkspace ws = build_workspace(set, index, edges);
  const std::size_t k = config.k;

  std::vector<EmRun> runs;
  if (config.init) {
    const MixtureParams& init = *config.init;
    init.validate();
    if (init.k() != k) throw std::invalid_argument("fit: init has wrong component count");
    std::vector<std::vector<double>> p(k, std::vector<double>(ws.n_edges, 0.0));
    for (std::size_t m = 0; m < k; ++m) {
      for (std::size_t h = 0; h < ws.n_edges; ++h) {
        auto val = init.components[m].get(edges.edges[h].u, edges.edges[h].v);
        if (!val) {
          throw std::invalid_argument("fit: init is missing a candidate edge parameter");
        }
        p[m][h] = *val;
      }
    }
    runs.push_back(run_em(ws, init.pi, std::move(p), config));
  } else {
    std::uint32_t restarts = std::max<std::uint32_t>(1, config.restarts);
    for (std::uint32_t r = 0; r < restarts; ++r) {
      RngStream pi_rng = RngStream::child(config.init_seed, 0x70691ULL, r);
      std::vector<double> pi = init_pi(k, pi_rng);
      std::vector<std::vector<double>> p(k);
      for (std::size_t m = 0; m < k; ++m) {
        RngStream theta_rng = RngStream::child(config.init_seed, 0x7e7a1ULL, r, m);
        p[m].resize(ws.n_edges);
        if (config.tie_edges) {
          double scalar = theta_rng.uniform(0.05, 0.95);
          std::fill(p[m].begin(), p[m].end(), scalar);
        } else {
          for (double& x : p[m]) x = theta_rng.uniform(0.05, 0.95);
        }
      }
      runs.push_back(run_em(ws, std::move(pi), std::move(p), config));
    }
  }

  // Keep the restart with the lowest final observed NLL.
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].nll_trace.back() < runs[best].nll_trace.back()) best = r;
  }
  EmRun& win = runs[best];

  FitResult result;
  result.params.pi = win.pi;
  result.params.component_names = MixtureParams::default_names(k);
  result.params.window = index.window;
  result.params.components.resize(k);
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t h = 0; h < ws.n_edges; ++h) {
      result.params.components[m].set(edges.edges[h].u, edges.edges[h].v, win.p[m][h]);
    }
  }
  result.posterior.k = k;
  result.posterior.gamma = std::move(win.gamma_rows);
  result.posterior.hard_labels.resize(ws.n_cascades);
  for (std::size_t s = 0; s < ws.n_cascades; ++s) {
    const auto& row = result.posterior.gamma[s];
    result.posterior.hard_labels[s] = static_cast<std::uint32_t>(
        std::max_element(row.begin(), row.end()) - row.begin());
  }
  result.state.params = result.params;
  result.state.loglik = std::move(win.loglik_rows);
  result.state.nll_trace = std::move(win.nll_trace);
  result.state.q_value = win.q_value;
  result.state.iterations = static_cast<std::uint32_t>(result.state.nll_trace.size());
  result.state.converged = win.converged;
  result.state.degenerate_cascades = win.degenerate;
  result.state.skipped_edge_updates = win.skipped_updates;
  return result;
}

}  // namespace

double activation_probability(NodeId v, const Cascade& cascade,
                              const ActivationIndex::PerCascade& index,
                              const ComponentParams& component) {
  for (std::size_t i = 0; i < cascade.events.size(); ++i) {
    if (cascade.events[i].user != v) continue;
    if (i < index.seed_count) {
      throw std::invalid_argument("activation_probability: node is a seed of the cascade");
    }
    double fail = 1.0;
    for (std::uint32_t j = index.parent_lo[i]; j < index.parent_hi[i]; ++j) {
      fail *= 1.0 - component.get_or(cascade.events[j].user, v, 0.0);
    }
    return 1.0 - fail;
  }
  throw std::invalid_argument("activation_probability: node is not activated in the cascade");
}

PosteriorAssignment e_step(const std::vector<double>& pi,
                           const std::vector<std::vector<double>>& loglik,
                           std::uint32_t* degenerate_count) {
  PosteriorAssignment post;
  post.k = pi.size();
  post.gamma.resize(loglik.size());
  post.hard_labels.resize(loglik.size());
  std::uint32_t degenerate = 0;
  for (std::size_t s = 0; s < loglik.size(); ++s) {
    if (loglik[s].size() != pi.size()) {
      throw std::invalid_argument("e_step: loglik row size does not match pi");
    }
    auto& row = post.gamma[s];
    row.resize(pi.size());
    double mx = kNegInf;
    for (std::size_t m = 0; m < pi.size(); ++m) {
      double a = pi[m] > 0.0 ? std::log(pi[m]) + loglik[s][m] : kNegInf;
      if (a > mx) mx = a;
    }
    if (!std::isfinite(mx)) {
      row = pi;
      ++degenerate;
    } else {
      double sum = 0.0;
      for (std::size_t m = 0; m < pi.size(); ++m) {
        double a = pi[m] > 0.0 ? std::log(pi[m]) + loglik[s][m] : kNegInf;
        row[m] = std::exp(a - mx);
        sum += row[m];
      }
      for (double& g : row) g /= sum;
    }
    post.hard_labels[s] =
        static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  if (degenerate_count) *degenerate_count = degenerate;
  return post;
}

double cascade_log_likelihood(const Cascade& cascade, const WindowSpec& window,
                              const ComponentParams& component, FailureMode failure_mode,
                              double activation_floor) {
  CascadeSet one;
  one.cascades.push_back(cascade);
  ActivationIndex index = index_cascades(one, window);
  const auto& per = index.cascades[0];

  double ll = 0.0;
  for (std::size_t i = per.seed_count; i < cascade.events.size(); ++i) {
    double fail = 1.0;
    for (std::uint32_t j = per.parent_lo[i]; j < per.parent_hi[i]; ++j) {
      fail *= 1.0 - component.get_or(cascade.events[j].user, cascade.events[i].user, 0.0);
    }
    ll += std::log(std::max(activation_floor, 1.0 - fail));
  }

  std::unordered_map<NodeId, std::uint32_t> pos_of;
  for (std::size_t i = 0; i < cascade.events.size(); ++i) {
    pos_of.emplace(cascade.events[i].user, static_cast<std::uint32_t>(i));
  }
  for (const auto& e : component.sorted_entries()) {
    auto up = pos_of.find(e.u);
    if (up == pos_of.end()) continue;  // u not activated: edge contributes nothing
    auto vp = pos_of.find(e.v);
    if (vp == pos_of.end()) {
      ll += std::log1p(-e.p);
      continue;
    }
    if (failure_mode == FailureMode::kNeverInCascade) continue;
    std::uint32_t i = vp->second, j = up->second;
    bool in_window = j >= per.parent_lo[i] && j < per.parent_hi[i];
    if (in_window) continue;
    if (cascade.events[i].time > cascade.events[j].time) ll += std::log1p(-e.p);
  }
  return ll;
}

MixtureParams m_step(const CascadeSet& set, const ActivationIndex& index,
                     const CandidateEdgeIndex& edges, const MixtureParams& current,
                     const PosteriorAssignment& posterior, double param_clamp,
                     std::uint32_t* skipped_updates) {
  current.validate();
  if (posterior.gamma.size() != set.cascades.size()) {
    throw std::invalid_argument("m_step: posterior does not match the cascade set");
  }
  EmWorkspace ws = build_workspace(set, index, edges);
  const std::size_t k = current.k();
  std::vector<double> pi = current.pi;
  // Inputs are clamped like the EM's own estimates so success ratios stay
  // well-defined.
  auto clamp = [&](double x) {
    return std::min(1.0 - param_clamp, std::max(param_clamp, x));
  };
  std::vector<std::vector<double>> p(k, std::vector<double>(ws.n_edges, 0.0));
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t h = 0; h < ws.n_edges; ++h) {
      p[m][h] = clamp(current.components[m].get_or(edges.edges[h].u, edges.edges[h].v, 0.0));
    }
  }
  std::vector<double> gamma(ws.n_cascades * k, 0.0);
  for (std::size_t s = 0; s < ws.n_cascades; ++s) {
    if (posterior.gamma[s].size() != k) {
      throw std::invalid_argument("m_step: posterior row has wrong component count");
    }
    for (std::size_t m = 0; m < k; ++m) gamma[s * k + m] = posterior.gamma[s][m];
  }
  std::vector<ComponentEval> evals(k);
  for (std::size_t m = 0; m < k; ++m) evaluate_component(ws, p[m], evals[m], 1);
  std::uint32_t skipped = 0;
  m_step_update(ws, gamma, evals, false, param_clamp, pi, p, skipped);
  if (skipped_updates) *skipped_updates = skipped;

  MixtureParams updated;
  updated.pi = std::move(pi);
  updated.component_names = current.component_names;
  updated.window = index.window;
  updated.components.resize(k);
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t h = 0; h < ws.n_edges; ++h) {
      updated.components[m].set(edges.edges[h].u, edges.edges[h].v, p[m][h]);
    }
  }
  return updated;
}

FitResult fit(const CascadeSet& set, const ActivationIndex& index,
              const CandidateEdgeIndex& edges, const EmConfig& config) {
  return fit_impl(set, index, edges, config);
}

FitResult fit_hic(const CascadeSet& set, const ActivationIndex& index,
                  const CandidateEdgeIndex& edges, EmConfig config) {
  config.tie_edges = true;
  return fit_impl(set, index, edges, config);
}

double heldout_nll(const CascadeSet& heldout, const MixtureParams& params,
                   FailureMode failure_mode, double activation_floor) {
  if (heldout.cascades.empty()) throw std::invalid_argument("heldout_nll: empty cascade set");
  params.validate();
  double total = 0.0;
  for (const Cascade& c : heldout.cascades) {
    double mx = kNegInf;
    std::vector<double> a(params.k());
    for (std::size_t m = 0; m < params.k(); ++m) {
      double ll = cascade_log_likelihood(c, params.window, params.components[m], failure_mode,
                                         activation_floor);
      a[m] = params.pi[m] > 0.0 ? std::log(params.pi[m]) + ll : kNegInf;
      if (a[m] > mx) mx = a[m];
    }
    if (!std::isfinite(mx)) {
      total = std::numeric_limits<double>::infinity();
      continue;
    }
    double sum = 0.0;
    for (double x : a) sum += std::exp(x - mx);
    total -= mx + std::log(sum);
  }
  return total / static_cast<double>(heldout.cascades.size());
}

}  // namespace cascademix
