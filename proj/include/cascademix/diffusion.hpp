#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "cascademix/cascade.hpp"
#include "cascademix/common.hpp"
#include "cascademix/graph.hpp"
#include "cascademix/params.hpp"
#include "cascademix/rng.hpp"

namespace cascademix {

// Live-edge realization of one IC draw: flag per graph edge id.
struct LiveEdgeGraph {
  std::vector<std::uint8_t> live;  // indexed by graph edge id
};

struct InfluenceEstimate {
  double mean = 0.0;        // sigma hat: expected activated count
  double std_error = 0.0;
  std::uint32_t rounds = 0;
};

struct SeedDistribution {
  enum class Mode : std::uint8_t { kUniformNodes, kPowerLawSize, kExplicit };

  Mode mode = Mode::kPowerLawSize;
  double exponent = 2.5;               // size-law exponent, > 1
  std::size_t max_size = 0;            // 0 = |V|
  std::vector<NodeId> explicit_seeds;  // kExplicit only

  // Distinct nodes drawn uniformly; kPowerLawSize draws the set size from a
  // Pareto(exponent) law truncated to [1, |V|] and rounded down.
  std::vector<NodeId> sample(const DirectedGraph& g, RngStream& rng) const;
};

// Resolves params against graph edge ids; absent edges get probability 0.
// Throws when a param key is not a graph edge.
std::vector<double> align_edge_probabilities(const DirectedGraph& g,
                                             const ComponentParams& params);

// Materializes an inferred component as a weighted graph: every interned
// name becomes a node (keeping ids aligned with `names`), every param edge
// a weighted edge.
DirectedGraph skeleton_from_component(const ComponentParams& params, const Interner& names);

// Discrete-time IC simulation: seeds activate at t=0; a node activated at t
// makes one Bernoulli(p_uv) attempt per inactive out-neighbor at t+1.
// Timestamps in the returned cascade are the integer timesteps.
Cascade simulate_ic(const DirectedGraph& g, const ComponentParams& params,
                    std::span<const NodeId> seeds, std::uint64_t rng_seed,
                    const std::string& cascade_id = "sim");

// Same process, given pre-aligned per-edge probabilities (hot path).
Cascade simulate_ic_aligned(const DirectedGraph& g, std::span<const double> edge_prob,
                            std::span<const NodeId> seeds, RngStream& rng,
                            const std::string& cascade_id);

LiveEdgeGraph sample_live_edge_graph(const DirectedGraph& g, const ComponentParams& params,
                                     std::uint64_t rng_seed);

// Nodes reachable from seeds over live edges, optionally with some edge ids
// removed. Equivalent in distribution to |simulate_ic| activation counts.
std::size_t live_edge_reach_count(const DirectedGraph& g, const LiveEdgeGraph& live,
                                  std::span<const NodeId> seeds,
                                  std::span<const std::size_t> removed_edge_ids = {});

InfluenceEstimate estimate_influence(const DirectedGraph& g, const ComponentParams& params,
                                     std::span<const NodeId> seeds, std::uint32_t rounds,
                                     std::uint64_t rng_seed, unsigned threads = 0);

// Generative mixture draw: per cascade, seeds ~ seed_dist, component ~
// Bernoulli(pi[0]) over k=2 (categorical for general k), then one IC
// simulation. Ground-truth labels are attached for evaluation only.
CascadeSet sample_mixture_cascades(const DirectedGraph& g, const MixtureParams& mix,
                                   const SeedDistribution& seed_dist, std::size_t n,
                                   std::uint64_t rng_seed);

struct BenchmarkSpec {
  std::uint32_t n_nodes = 512;
  std::uint32_t n_edges = 1024;
  std::vector<std::array<double, 2>> mixtures = {{0.5, 0.5}, {0.2, 0.8}, {0.35, 0.65}};
  std::vector<std::size_t> sample_sizes = {100, 1000, 5000};
  double seed_exponent = 2.5;
  std::uint64_t rng_seed = 0;
};

struct BenchmarkBundle {
  struct Block {
    std::array<double, 2> pi;
    std::size_t sample_size = 0;
    CascadeSet cascades;
  };

  DirectedGraph graph;
  ComponentParams theta_true;
  ComponentParams theta_fake;
  std::vector<Block> blocks;

  MixtureParams truth_model(std::size_t block) const;
};

// Uniform random simple digraph (n_edges distinct ordered pairs, no self
// loops), both components' edge probabilities i.i.d. uniform [0,1], seed
// sets uniform over nodes with power-law sizes. Deterministic per rng_seed.
BenchmarkBundle generate_synthetic_benchmark(const BenchmarkSpec& spec);

// Persists graph.tsv, truth_model_m{i}.json and cascades_m{i}_n{size}.jsonl
// under dir; returns the written file names.
std::vector<std::string> save_benchmark_bundle(const BenchmarkBundle& bundle,
                                               const std::filesystem::path& dir);

}  // namespace cascademix
