#include "cascademix/influence.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "cascademix/diffusion.hpp"
#include "cascademix/parallel.hpp"
#include "cascademix/rng.hpp"

namespace cascademix {

// Monte Carlo spread with common random numbers: every greedy step samples
// one set of live-edge rounds that all candidate evaluations within the
// step share, so marginal-gain comparisons see identical noise.
struct MonteCarloSpread::Impl {
  const DirectedGraph& graph;
  std::vector<double> edge_prob;
  std::uint32_t rounds;
  std::uint64_t rng_seed;
  unsigned threads;
  std::uint32_t step = 0;

  // Per round: live out-adjacency as CSR over nodes.
  std::vector<std::vector<std::uint32_t>> adj_offset;  // per round, size n+1
  std::vector<std::vector<NodeId>> adj_targets;        // per round

  Impl(const DirectedGraph& g, const ComponentParams& params, std::uint32_t r,
       std::uint64_t seed, unsigned th)
      : graph(g), edge_prob(align_edge_probabilities(g, params)), rounds(r), rng_seed(seed),
        threads(th) {
    if (rounds < 1) throw std::invalid_argument("spread estimation needs rounds >= 1");
    adj_offset.resize(rounds);
    adj_targets.resize(rounds);
    resample();
  }

  void resample() {
    const NodeId n = graph.node_count();
    parallel_for(rounds, threads, 8, [&](std::size_t begin, std::size_t end) {
      for (std::size_t r = begin; r < end; ++r) {
        RngStream rng = RngStream::child(rng_seed, 0x11f3ULL, step, r);
        std::vector<std::uint8_t> live(graph.edge_count());
        for (std::size_t e = 0; e < live.size(); ++e) live[e] = rng.bernoulli(edge_prob[e]);
        auto& offsets = adj_offset[r];
        auto& targets = adj_targets[r];
        offsets.assign(n + 1, 0);
        for (std::size_t e = 0; e < live.size(); ++e) {
          if (live[e]) ++offsets[graph.edge(e).src + 1];
        }
        for (NodeId u = 0; u < n; ++u) offsets[u + 1] += offsets[u];
        targets.resize(offsets[n]);
        std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t e = 0; e < live.size(); ++e) {
          if (live[e]) targets[cursor[graph.edge(e).src]++] = graph.edge(e).dst;
        }
      }
    });
  }

  double spread(const std::vector<NodeId>& seeds) {
    std::vector<double> sizes(rounds, 0.0);
    const NodeId n = graph.node_count();
    parallel_for(rounds, threads, 16, [&](std::size_t begin, std::size_t end) {
      std::vector<std::uint8_t> visited(n);
      std::vector<NodeId> stack;
      for (std::size_t r = begin; r < end; ++r) {
        std::fill(visited.begin(), visited.end(), 0);
        stack.clear();
        std::size_t count = 0;
        for (NodeId s : seeds) {
          if (!visited[s]) {
            visited[s] = 1;
            ++count;
            stack.push_back(s);
          }
        }
        const auto& offsets = adj_offset[r];
        const auto& targets = adj_targets[r];
        while (!stack.empty()) {
          NodeId u = stack.back();
          stack.pop_back();
          for (std::uint32_t q = offsets[u]; q < offsets[u + 1]; ++q) {
            NodeId v = targets[q];
            if (!visited[v]) {
              visited[v] = 1;
              ++count;
              stack.push_back(v);
            }
          }
        }
        sizes[r] = static_cast<double>(count);
      }
    });
    double total = 0.0;
    for (double x : sizes) total += x;
    return total / static_cast<double>(rounds);
  }
};

MonteCarloSpread::MonteCarloSpread(const DirectedGraph& g, const ComponentParams& params,
                                   std::uint32_t rounds, std::uint64_t rng_seed, unsigned threads)
    : impl_(std::make_unique<Impl>(g, params, rounds, rng_seed, threads)) {}

MonteCarloSpread::~MonteCarloSpread() = default;

void MonteCarloSpread::set_step(std::uint32_t step) {
  if (step == impl_->step) return;
  impl_->step = step;
  impl_->resample();
}

double MonteCarloSpread::spread(const std::vector<NodeId>& seeds) { return impl_->spread(seeds); }

InfluencerRanking greedy_select(std::uint32_t n_nodes, std::uint32_t k, SpreadOracle& oracle) {
  if (k < 1) throw std::invalid_argument("greedy selection needs K >= 1");
  InfluencerRanking ranking;
  if (k > n_nodes) {
    ranking.truncated = true;
    k = n_nodes;
  }

  // Lazy queue entries: (cached gain, node, step the gain was computed at).
  // Ordering: higher gain first, smaller node index on ties.
  struct Entry {
    double gain;
    NodeId node;
    std::uint32_t fresh_at;
    bool operator<(const Entry& other) const {
      if (gain != other.gain) return gain < other.gain;
      return node > other.node;
    }
  };
  std::priority_queue<Entry> queue;

  std::vector<NodeId> selected;
  oracle.set_step(0);
  double base = oracle.spread({});
  // With no seeds the spread is 0; the first step's gains are plain spreads.
  for (NodeId v = 0; v < n_nodes; ++v) {
    queue.push({oracle.spread({v}) - base, v, 0});
  }

  for (std::uint32_t step = 0; step < k; ++step) {
    if (step > 0) {
      oracle.set_step(step);
      base = oracle.spread(selected);
    }
    for (;;) {
      Entry top = queue.top();
      queue.pop();
      if (top.fresh_at == step) {
        selected.push_back(top.node);
        ranking.nodes.push_back(top.node);
        ranking.marginal_gains.push_back(top.gain);
        ranking.cumulative_sigma.push_back(base + top.gain);
        break;
      }
      std::vector<NodeId> with = selected;
      with.push_back(top.node);
      queue.push({oracle.spread(with) - base, top.node, step});
    }
  }
  return ranking;
}

InfluencerRanking greedy_influencers(const DirectedGraph& g, const ComponentParams& params,
                                     std::uint32_t k, std::uint32_t rounds,
                                     std::uint64_t rng_seed, unsigned threads,
                                     const std::string& component) {
  MonteCarloSpread oracle(g, params, rounds, rng_seed, threads);
  InfluencerRanking ranking = greedy_select(g.node_count(), k, oracle);
  ranking.component = component;
  ranking.rounds = rounds;
  return ranking;
}

AppearanceStats appearance_stats(const std::vector<NodeId>& nodes, const CascadeSet& cascades) {
  std::vector<std::size_t> fake_counts(cascades.users.size(), 0);
  std::vector<std::size_t> true_counts(cascades.users.size(), 0);
  for (const Cascade& c : cascades.cascades) {
    if (c.label == CascadeLabel::kUnknown) continue;
    auto& counts = c.label == CascadeLabel::kFake ? fake_counts : true_counts;
    for (const CascadeEvent& ev : c.events) ++counts[ev.user];
  }
  AppearanceStats stats;
  stats.nodes.reserve(nodes.size());
  for (NodeId u : nodes) {
    AppearanceStats::PerNode per;
    per.node = u;
    if (u < cascades.users.size()) {
      per.fake_count = fake_counts[u];
      per.true_count = true_counts[u];
    }
    std::size_t total = per.fake_count + per.true_count;
    if (total > 0) {
      per.pct_fake = 100.0 * static_cast<double>(per.fake_count) / static_cast<double>(total);
    }
    stats.nodes.push_back(per);
  }
  return stats;
}

std::optional<std::array<double, 3>> AppearanceStats::quartiles() const {
  std::vector<double> pct;
  for (const auto& per : nodes) {
    if (per.pct_fake) pct.push_back(*per.pct_fake);
  }
  if (pct.empty()) return std::nullopt;
  std::sort(pct.begin(), pct.end());
  auto quantile = [&](double q) {
    double pos = q * static_cast<double>(pct.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    return pct[lo] + (pct[hi] - pct[lo]) * (pos - static_cast<double>(lo));
  };
  return std::array<double, 3>{quantile(0.25), quantile(0.5), quantile(0.75)};
}

}  // namespace cascademix
