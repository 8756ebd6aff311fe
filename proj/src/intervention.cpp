#include "cascademix/intervention.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "cascademix/diffusion.hpp"
#include "cascademix/parallel.hpp"
#include "cascademix/rng.hpp"

namespace cascademix {

namespace {

void check_k_values(std::span<const std::uint32_t> k_values, std::size_t available,
                    const char* what) {
  if (k_values.empty()) throw std::invalid_argument("intervention: no K values given");
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    if (k_values[i] == 0) throw std::invalid_argument("intervention: K values must be >= 1");
    if (i > 0 && k_values[i] <= k_values[i - 1]) {
      throw std::invalid_argument("intervention: K values must be strictly increasing");
    }
  }
  if (k_values.back() > available) {
    throw std::invalid_argument(std::string("intervention: ") + what +
                                " shorter than the largest K");
  }
}

}  // namespace

InterventionReport node_intervention_eval(const std::vector<Cascade>& fake_cascades,
                                          std::span<const NodeId> monitored,
                                          std::span<const std::uint32_t> k_values,
                                          const std::string& strategy) {
  if (fake_cascades.empty()) {
    throw std::invalid_argument("node_intervention_eval: empty cascade set");
  }
  check_k_values(k_values, monitored.size(), "monitored list");

  InterventionReport report;
  report.strategy = strategy;
  report.n_eval = fake_cascades.size();

  // earliest_hit[s][i]: first event position engaging one of monitored[0..i].
  // Monitored sets are nested, so we track the best hit incrementally.
  std::vector<std::size_t> best_hit(fake_cascades.size(), SIZE_MAX);
  std::size_t next_prefix = 0;
  for (std::uint32_t k : k_values) {
    std::unordered_set<NodeId> added(monitored.begin() + next_prefix, monitored.begin() + k);
    for (std::size_t s = 0; s < fake_cascades.size(); ++s) {
      const auto& events = fake_cascades[s].events;
      std::size_t limit = std::min(best_hit[s], events.size());
      for (std::size_t i = 0; i < limit; ++i) {
        if (added.count(events[i].user)) {
          best_hit[s] = i;
          break;
        }
      }
    }
    next_prefix = k;

    double total = 0.0;
    for (std::size_t s = 0; s < fake_cascades.size(); ++s) {
      const std::size_t size = fake_cascades[s].events.size();
      // Everything strictly after the intercepting engagement is prevented;
      // the intercepted engagement itself already happened.
      std::size_t prevented = best_hit[s] == SIZE_MAX ? 0 : size - best_hit[s] - 1;
      total += static_cast<double>(prevented) / static_cast<double>(size);
    }
    report.k_values.push_back(k);
    report.mean_reduction_pct.push_back(100.0 * total / fake_cascades.size());
  }
  return report;
}

std::vector<NodeId> node_strategy_mic(const InfluencerRanking& fake_ranking) {
  if (fake_ranking.nodes.empty()) {
    throw std::invalid_argument("node_strategy_mic: empty influencer ranking");
  }
  return fake_ranking.nodes;
}

std::vector<NodeId> node_strategy_topu(const CascadeSet& cascades,
                                       const std::vector<std::size_t>* predicted_fake) {
  if (cascades.cascades.empty()) {
    throw std::invalid_argument("node_strategy_topu: empty cascade set");
  }
  std::vector<std::size_t> counts(cascades.users.size(), 0);
  auto count_cascade = [&](const Cascade& c) {
    for (const CascadeEvent& ev : c.events) ++counts[ev.user];
  };
  if (predicted_fake) {
    for (std::size_t idx : *predicted_fake) {
      count_cascade(cascades.cascades.at(idx));
    }
  } else {
    for (const Cascade& c : cascades.cascades) count_cascade(c);
  }
  std::vector<NodeId> users;
  for (NodeId u = 0; u < cascades.users.size(); ++u) {
    if (counts[u] > 0) users.push_back(u);
  }
  std::sort(users.begin(), users.end(), [&](NodeId a, NodeId b) {
    return counts[a] != counts[b] ? counts[a] > counts[b] : a < b;
  });
  return users;
}

std::vector<NodeId> cascade_head_users(const std::vector<Cascade>& cascades) {
  std::vector<NodeId> heads;
  heads.reserve(cascades.size());
  for (const Cascade& c : cascades) {
    if (!c.events.empty()) heads.push_back(c.events.front().user);
  }
  return heads;
}

InterventionReport edge_intervention_eval(const DirectedGraph& g,
                                          const ComponentParams& fake_params,
                                          std::span<const std::pair<NodeId, NodeId>> removed,
                                          std::span<const std::uint32_t> k_values,
                                          std::uint32_t rounds, std::span<const NodeId> seed_pool,
                                          std::uint64_t rng_seed, std::size_t seed_set_size,
                                          unsigned threads, const std::string& strategy) {
  check_k_values(k_values, removed.size(), "removal list");
  if (rounds < 1) throw std::invalid_argument("edge_intervention_eval: rounds must be >= 1");
  if (seed_pool.empty()) throw std::invalid_argument("edge_intervention_eval: empty seed pool");
  if (seed_set_size < 1) seed_set_size = 1;

  auto edge_prob = align_edge_probabilities(g, fake_params);
  std::vector<std::size_t> removed_ids;
  removed_ids.reserve(removed.size());
  for (auto [u, v] : removed) {
    auto id = g.edge_id(u, v);
    if (!id) throw std::invalid_argument("edge_intervention_eval: removal pair is not an edge");
    removed_ids.push_back(*id);
  }

  // Paired common random numbers: round r draws one live-edge realization
  // and one seed set, reused for the baseline and for every removal budget,
  // so nested removals reduce reach monotonically by construction.
  const std::size_t n_k = k_values.size();
  std::vector<double> base_sizes(rounds, 0.0);
  std::vector<std::vector<double>> removed_sizes(n_k, std::vector<double>(rounds, 0.0));

  parallel_for(rounds, threads, 16, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      RngStream rng = RngStream::child(rng_seed, 0xed6eULL, r);
      LiveEdgeGraph live;
      live.live.resize(g.edge_count());
      for (std::size_t e = 0; e < live.live.size(); ++e) {
        live.live[e] = rng.bernoulli(edge_prob[e]);
      }
      std::vector<NodeId> seeds;
      for (std::size_t i = 0; i < seed_set_size; ++i) {
        NodeId s = seed_pool[rng.uniform_index(seed_pool.size())];
        if (std::find(seeds.begin(), seeds.end(), s) == seeds.end()) seeds.push_back(s);
      }
      base_sizes[r] = static_cast<double>(live_edge_reach_count(g, live, seeds));
      for (std::size_t ki = 0; ki < n_k; ++ki) {
        std::span<const std::size_t> cut(removed_ids.data(), k_values[ki]);
        removed_sizes[ki][r] =
            static_cast<double>(live_edge_reach_count(g, live, seeds, cut));
      }
    }
  });

  double base_mean = 0.0;
  for (double x : base_sizes) base_mean += x;
  base_mean /= rounds;

  InterventionReport report;
  report.strategy = strategy;
  report.n_eval = rounds;
  for (std::size_t ki = 0; ki < n_k; ++ki) {
    double mean = 0.0;
    for (double x : removed_sizes[ki]) mean += x;
    mean /= rounds;
    report.k_values.push_back(k_values[ki]);
    report.mean_reduction_pct.push_back(100.0 * (base_mean - mean) / base_mean);
  }
  return report;
}

std::vector<std::pair<NodeId, NodeId>> edge_strategy_mic(const ComponentParams& fake_params) {
  auto entries = fake_params.sorted_entries();
  std::stable_sort(entries.begin(), entries.end(),
                   [](const ComponentParams::Entry& a, const ComponentParams::Entry& b) {
                     return a.p > b.p;
                   });
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(entries.size());
  for (const auto& e : entries) edges.emplace_back(e.u, e.v);
  return edges;
}

std::vector<std::pair<NodeId, NodeId>> edge_strategy_random(const DirectedGraph& g,
                                                            std::uint64_t rng_seed) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(g.edge_count());
  for (const GraphEdge& e : g.edges()) edges.emplace_back(e.src, e.dst);
  RngStream rng = RngStream::child(rng_seed, 0x5a4dULL);
  for (std::size_t i = edges.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(edges[i - 1], edges[j]);
  }
  return edges;
}

}  // namespace cascademix
