#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cascademix/cascade.hpp"
#include "cascademix/common.hpp"
#include "cascademix/graph.hpp"
#include "cascademix/params.hpp"

namespace cascademix {

struct InfluencerRanking {
  std::string component;                // "true" / "fake" / caller-chosen
  std::vector<NodeId> nodes;            // selection order
  std::vector<double> marginal_gains;   // sigma gain when the node was added
  std::vector<double> cumulative_sigma; // sigma estimate after each addition
  std::uint32_t rounds = 0;
  bool truncated = false;               // K exceeded |V|
};

// Spread evaluator interface for the greedy selector. set_step() announces a
// new greedy iteration; Monte Carlo implementations refresh their common
// random numbers there so all candidate evaluations within one step share
// the same draws.
class SpreadOracle {
 public:
  virtual ~SpreadOracle() = default;
  virtual void set_step(std::uint32_t step) = 0;
  virtual double spread(const std::vector<NodeId>& seeds) = 0;
};

// Monte Carlo oracle over live-edge samples of (graph, params).
class MonteCarloSpread final : public SpreadOracle {
 public:
  MonteCarloSpread(const DirectedGraph& g, const ComponentParams& params,
                   std::uint32_t rounds, std::uint64_t rng_seed, unsigned threads = 0);
  ~MonteCarloSpread() override;
  void set_step(std::uint32_t step) override;
  double spread(const std::vector<NodeId>& seeds) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// CELF-style lazy greedy: cached gains re-evaluated only when stale at the
// top of the queue; ties broken by smaller node index.
InfluencerRanking greedy_select(std::uint32_t n_nodes, std::uint32_t k, SpreadOracle& oracle);

// Top-K influential users for one component, K > |V| truncates with the
// `truncated` flag set.
InfluencerRanking greedy_influencers(const DirectedGraph& g, const ComponentParams& params,
                                     std::uint32_t k, std::uint32_t rounds,
                                     std::uint64_t rng_seed, unsigned threads = 0,
                                     const std::string& component = "fake");

struct AppearanceStats {
  struct PerNode {
    NodeId node = 0;
    std::size_t fake_count = 0;
    std::size_t true_count = 0;
    // % relative fake appearance, absent when the node appears in neither.
    std::optional<double> pct_fake;
  };
  std::vector<PerNode> nodes;

  // Quartile summary of defined percentages: {q1, median, q3}.
  std::optional<std::array<double, 3>> quartiles() const;
};

// Distinct labeled-cascade appearance counts per node. Unknown-label
// cascades are ignored.
AppearanceStats appearance_stats(const std::vector<NodeId>& nodes, const CascadeSet& cascades);

}  // namespace cascademix
