#include "cascademix/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "cascademix/parallel.hpp"

namespace cascademix {

namespace {

// Stream tags so every stochastic sub-operation draws from its own lane of
// the master seed.
enum StreamTag : std::uint64_t {
  kTagSimulate = 1,
  kTagLiveEdge = 2,
  kTagInfluenceRound = 3,
  kTagMixSeeds = 4,
  kTagMixComponent = 5,
  kTagMixSim = 6,
  kTagBenchGraph = 7,
  kTagBenchTheta = 8,
};

}  // namespace

std::vector<double> align_edge_probabilities(const DirectedGraph& g,
                                             const ComponentParams& params) {
  std::vector<double> probs(g.edge_count(), 0.0);
  for (const auto& e : params.sorted_entries()) {
    auto id = g.edge_id(e.u, e.v);
    if (!id) {
      throw std::invalid_argument("component parameter for (" + g.nodes().name(e.u) + ", " +
                                  g.nodes().name(e.v) + ") is not a graph edge");
    }
    probs[*id] = e.p;
  }
  return probs;
}

DirectedGraph skeleton_from_component(const ComponentParams& params, const Interner& names) {
  DirectedGraph g;
  for (NodeId u = 0; u < names.size(); ++u) g.add_node(names.name(u));
  for (const auto& e : params.sorted_entries()) g.add_edge(e.u, e.v, e.p);
  return g;
}

Cascade simulate_ic_aligned(const DirectedGraph& g, std::span<const double> edge_prob,
                            std::span<const NodeId> seeds, RngStream& rng,
                            const std::string& cascade_id) {
  if (seeds.empty()) throw std::invalid_argument("simulate_ic: seed set must be non-empty");
  Cascade cascade;
  cascade.id = cascade_id;
  std::vector<std::uint8_t> active(g.node_count(), 0);

  std::vector<NodeId> frontier;
  for (NodeId s : seeds) {
    if (s >= g.node_count()) throw std::invalid_argument("simulate_ic: unknown seed node");
    if (!active[s]) {
      active[s] = 1;
      frontier.push_back(s);
    }
  }
  std::sort(frontier.begin(), frontier.end());
  for (NodeId s : frontier) cascade.events.push_back({s, 0.0});

  double t = 0.0;
  std::vector<NodeId> next;
  while (!frontier.empty()) {
    t += 1.0;
    next.clear();
    for (NodeId u : frontier) {
      for (auto [v, eid] : g.out_edges(u)) {
        if (active[v]) continue;
        if (rng.bernoulli(edge_prob[eid])) {
          active[v] = 1;
          next.push_back(v);
        }
      }
    }
    std::sort(next.begin(), next.end());
    for (NodeId v : next) cascade.events.push_back({v, t});
    frontier.swap(next);
  }
  return cascade;
}

Cascade simulate_ic(const DirectedGraph& g, const ComponentParams& params,
                    std::span<const NodeId> seeds, std::uint64_t rng_seed,
                    const std::string& cascade_id) {
  auto probs = align_edge_probabilities(g, params);
  RngStream rng = RngStream::child(rng_seed, kTagSimulate);
  return simulate_ic_aligned(g, probs, seeds, rng, cascade_id);
}

LiveEdgeGraph sample_live_edge_graph(const DirectedGraph& g, const ComponentParams& params,
                                     std::uint64_t rng_seed) {
  auto probs = align_edge_probabilities(g, params);
  RngStream rng = RngStream::child(rng_seed, kTagLiveEdge);
  LiveEdgeGraph live;
  live.live.resize(g.edge_count());
  for (std::size_t e = 0; e < probs.size(); ++e) {
    live.live[e] = rng.bernoulli(probs[e]) ? 1 : 0;
  }
  return live;
}

std::size_t live_edge_reach_count(const DirectedGraph& g, const LiveEdgeGraph& live,
                                  std::span<const NodeId> seeds,
                                  std::span<const std::size_t> removed_edge_ids) {
  if (live.live.size() != g.edge_count()) {
    throw std::invalid_argument("live-edge graph does not match the graph's edge set");
  }
  std::vector<std::uint8_t> removed(removed_edge_ids.empty() ? 0 : g.edge_count(), 0);
  for (std::size_t id : removed_edge_ids) removed[id] = 1;

  std::vector<std::uint8_t> visited(g.node_count(), 0);
  std::vector<NodeId> stack;
  for (NodeId s : seeds) {
    if (s >= g.node_count()) throw std::invalid_argument("unknown seed node");
    if (!visited[s]) {
      visited[s] = 1;
      stack.push_back(s);
    }
  }
  std::size_t count = stack.size();
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (auto [v, eid] : g.out_edges(u)) {
      if (!live.live[eid] || visited[v]) continue;
      if (!removed.empty() && removed[eid]) continue;
      visited[v] = 1;
      ++count;
      stack.push_back(v);
    }
  }
  return count;
}

InfluenceEstimate estimate_influence(const DirectedGraph& g, const ComponentParams& params,
                                     std::span<const NodeId> seeds, std::uint32_t rounds,
                                     std::uint64_t rng_seed, unsigned threads) {
  if (rounds < 1) throw std::invalid_argument("estimate_influence: rounds must be >= 1");
  auto probs = align_edge_probabilities(g, params);
  std::vector<double> sizes(rounds, 0.0);
  parallel_for(rounds, threads, 64, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      RngStream rng = RngStream::child(rng_seed, kTagInfluenceRound, r);
      Cascade c = simulate_ic_aligned(g, probs, seeds, rng, "mc");
      sizes[r] = static_cast<double>(c.events.size());
    }
  });
  double mean = std::accumulate(sizes.begin(), sizes.end(), 0.0) / rounds;
  double ss = 0.0;
  for (double x : sizes) ss += (x - mean) * (x - mean);
  InfluenceEstimate est;
  est.mean = mean;
  est.std_error = rounds > 1 ? std::sqrt(ss / (rounds - 1) / rounds) : 0.0;
  est.rounds = rounds;
  return est;
}

std::vector<NodeId> SeedDistribution::sample(const DirectedGraph& g, RngStream& rng) const {
  std::size_t n = g.node_count();
  if (n == 0) throw std::invalid_argument("seed distribution over an empty graph");
  if (mode == Mode::kExplicit) {
    if (explicit_seeds.empty()) throw std::invalid_argument("explicit seed list is empty");
    return explicit_seeds;
  }
  std::size_t cap = max_size == 0 ? n : std::min(max_size, n);
  std::size_t size = 1;
  if (mode == Mode::kPowerLawSize) {
    if (!(exponent > 1.0)) throw std::invalid_argument("seed size exponent must be > 1");
    // Pareto(exponent) with xmin = 1, floored and truncated to [1, cap].
    double u = rng.uniform();
    double x = std::pow(1.0 - u, -1.0 / (exponent - 1.0));
    size = std::min<std::size_t>(cap, static_cast<std::size_t>(std::max(1.0, std::floor(x))));
  }
  // Distinct uniform nodes via partial Fisher-Yates over an index array.
  std::vector<NodeId> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<NodeId> seeds;
  seeds.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(pool[i], pool[j]);
    seeds.push_back(pool[i]);
  }
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

CascadeSet sample_mixture_cascades(const DirectedGraph& g, const MixtureParams& mix,
                                   const SeedDistribution& seed_dist, std::size_t n,
                                   std::uint64_t rng_seed) {
  if (n < 1) throw std::invalid_argument("sample_mixture_cascades: n must be >= 1");
  mix.validate();
  std::vector<std::vector<double>> probs;
  probs.reserve(mix.k());
  for (const auto& comp : mix.components) probs.push_back(align_edge_probabilities(g, comp));

  CascadeSet set;
  set.users = g.nodes();
  set.cascades.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream seed_rng = RngStream::child(rng_seed, kTagMixSeeds, i);
    std::vector<NodeId> seeds = seed_dist.sample(g, seed_rng);

    RngStream comp_rng = RngStream::child(rng_seed, kTagMixComponent, i);
    std::size_t m = 0;
    double u = comp_rng.uniform();
    double acc = 0.0;
    for (; m + 1 < mix.k(); ++m) {
      acc += mix.pi[m];
      if (u < acc) break;
    }

    RngStream sim_rng = RngStream::child(rng_seed, kTagMixSim, i);
    Cascade c = simulate_ic_aligned(g, probs[m], seeds, sim_rng, "c" + std::to_string(i));
    c.label = m == 0 ? CascadeLabel::kTrue : CascadeLabel::kFake;
    set.cascades.push_back(std::move(c));
  }
  return set;
}

MixtureParams BenchmarkBundle::truth_model(std::size_t block) const {
  MixtureParams truth;
  truth.pi = {blocks.at(block).pi[0], blocks.at(block).pi[1]};
  truth.components = {theta_true, theta_fake};
  truth.component_names = MixtureParams::default_names(2);
  truth.window = WindowSpec::events(10);
  return truth;
}

BenchmarkBundle generate_synthetic_benchmark(const BenchmarkSpec& spec) {
  if (spec.n_nodes < 2) throw std::invalid_argument("benchmark needs >= 2 nodes");
  std::uint64_t max_edges =
      static_cast<std::uint64_t>(spec.n_nodes) * (spec.n_nodes - 1);
  if (spec.n_edges > max_edges) {
    throw std::invalid_argument("benchmark: n_edges exceeds n*(n-1) distinct ordered pairs");
  }

  BenchmarkBundle bundle;
  for (std::uint32_t i = 0; i < spec.n_nodes; ++i) {
    bundle.graph.add_node(std::to_string(i));
  }
  // n_edges distinct ordered pairs sampled uniformly without replacement.
  RngStream graph_rng = RngStream::child(spec.rng_seed, kTagBenchGraph);
  std::unordered_set<std::uint64_t> seen;
  while (bundle.graph.edge_count() < spec.n_edges) {
    NodeId u = static_cast<NodeId>(graph_rng.uniform_index(spec.n_nodes));
    NodeId v = static_cast<NodeId>(graph_rng.uniform_index(spec.n_nodes));
    if (u == v) continue;
    std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | v;
    if (!seen.insert(key).second) continue;
    bundle.graph.add_edge(u, v);
  }

  RngStream theta_true_rng = RngStream::child(spec.rng_seed, kTagBenchTheta, 0);
  RngStream theta_fake_rng = RngStream::child(spec.rng_seed, kTagBenchTheta, 1);
  for (const GraphEdge& e : bundle.graph.edges()) {
    bundle.theta_true.set(e.src, e.dst, theta_true_rng.uniform());
    bundle.theta_fake.set(e.src, e.dst, theta_fake_rng.uniform());
  }

  SeedDistribution seed_dist;
  seed_dist.mode = SeedDistribution::Mode::kPowerLawSize;
  seed_dist.exponent = spec.seed_exponent;

  for (std::size_t mi = 0; mi < spec.mixtures.size(); ++mi) {
    MixtureParams mix;
    mix.pi = {spec.mixtures[mi][0], spec.mixtures[mi][1]};
    mix.components = {bundle.theta_true, bundle.theta_fake};
    mix.component_names = MixtureParams::default_names(2);
    for (std::size_t size : spec.sample_sizes) {
      BenchmarkBundle::Block block;
      block.pi = spec.mixtures[mi];
      block.sample_size = size;
      std::uint64_t block_seed = mix64(spec.rng_seed ^ mix64((mi << 32) | size));
      block.cascades = sample_mixture_cascades(bundle.graph, mix, seed_dist, size, block_seed);
      bundle.blocks.push_back(std::move(block));
    }
  }
  return bundle;
}

std::vector<std::string> save_benchmark_bundle(const BenchmarkBundle& bundle,
                                               const std::filesystem::path& dir) {
  std::vector<std::string> written;
  {
    std::ofstream out(dir / "graph.tsv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "graph.tsv").string());
    save_edge_list(bundle.graph, out);
    written.push_back("graph.tsv");
  }
  // One truth model per distinct mixture, plus one cascade file per block.
  std::vector<std::array<double, 2>> mixtures;
  for (const auto& block : bundle.blocks) {
    if (std::find(mixtures.begin(), mixtures.end(), block.pi) == mixtures.end()) {
      mixtures.push_back(block.pi);
    }
  }
  for (std::size_t mi = 0; mi < mixtures.size(); ++mi) {
    MixtureParams truth;
    truth.pi = {mixtures[mi][0], mixtures[mi][1]};
    truth.components = {bundle.theta_true, bundle.theta_fake};
    truth.component_names = MixtureParams::default_names(2);
    truth.window = WindowSpec::events(10);
    std::string name = "truth_model_m" + std::to_string(mi) + ".json";
    save_model(truth, bundle.graph.nodes(), dir / name);
    written.push_back(name);
  }
  for (const auto& block : bundle.blocks) {
    std::size_t mi = std::find(mixtures.begin(), mixtures.end(), block.pi) - mixtures.begin();
    std::string name =
        "cascades_m" + std::to_string(mi) + "_n" + std::to_string(block.sample_size) + ".jsonl";
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    dump_cascades(block.cascades, out);
    written.push_back(name);
  }
  return written;
}

}  // namespace cascademix
