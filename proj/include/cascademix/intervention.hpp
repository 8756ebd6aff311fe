#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cascademix/cascade.hpp"
#include "cascademix/common.hpp"
#include "cascademix/graph.hpp"
#include "cascademix/influence.hpp"
#include "cascademix/params.hpp"

namespace cascademix {

// Mean % reduction in fake-cascade size per monitoring/removal budget K.
struct InterventionReport {
  std::string strategy;
  std::vector<std::uint32_t> k_values;      // strictly increasing
  std::vector<double> mean_reduction_pct;   // in [0, 100]
  std::size_t n_eval = 0;                   // cascades or rounds per K
};

// Monitoring the first K nodes of `monitored`: the earliest engagement by a
// monitored user intercepts the cascade and every strictly later engagement
// counts as prevented (the intercepting engagement itself does not).
InterventionReport node_intervention_eval(const std::vector<Cascade>& fake_cascades,
                                          std::span<const NodeId> monitored,
                                          std::span<const std::uint32_t> k_values,
                                          const std::string& strategy = "mic");

// Fake-component influencer ranking order, as-is. Throws on empty rankings.
std::vector<NodeId> node_strategy_mic(const InfluencerRanking& fake_ranking);

// Users by descending cascade-engagement count, ties by node index. With
// `predicted_fake` given, only those cascades are counted.
std::vector<NodeId> node_strategy_topu(const CascadeSet& cascades,
                                       const std::vector<std::size_t>* predicted_fake = nullptr);

// Simulates the fake component with and without the first K removed edges
// over paired live-edge rounds (common random numbers per round, shared
// across K values, so nested removals reduce monotonically). Seeds are
// drawn per round from `seed_pool`, the multiset of first-engagement users
// of observed fake cascades.
InterventionReport edge_intervention_eval(const DirectedGraph& g,
                                          const ComponentParams& fake_params,
                                          std::span<const std::pair<NodeId, NodeId>> removed,
                                          std::span<const std::uint32_t> k_values,
                                          std::uint32_t rounds, std::span<const NodeId> seed_pool,
                                          std::uint64_t rng_seed, std::size_t seed_set_size = 1,
                                          unsigned threads = 0,
                                          const std::string& strategy = "mic");

// First-engagement user of each cascade (the head of the sequence).
std::vector<NodeId> cascade_head_users(const std::vector<Cascade>& cascades);

// Edges by descending fake-component weight, ties by (u, v).
std::vector<std::pair<NodeId, NodeId>> edge_strategy_mic(const ComponentParams& fake_params);

// Uniform permutation of the graph's edge set.
std::vector<std::pair<NodeId, NodeId>> edge_strategy_random(const DirectedGraph& g,
                                                            std::uint64_t rng_seed);

}  // namespace cascademix
