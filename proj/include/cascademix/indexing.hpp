#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "cascademix/cascade.hpp"
#include "cascademix/common.hpp"

namespace cascademix {

enum class WindowMode : std::uint8_t { kEvents, kTime };

// Lookback window: a prior activation is a potential parent of v when it
// falls within the last `size` events before v (event mode) or within
// [t(v) - size, t(v)) (time mode). Only strictly earlier timestamps count;
// simultaneous activations never parent each other.
struct WindowSpec {
  WindowMode mode = WindowMode::kEvents;
  double size = 10.0;

  static WindowSpec events(double n) { return {WindowMode::kEvents, n}; }
  static WindowSpec time(double w) { return {WindowMode::kTime, w}; }

  // Parses "events:10" or "time:80".
  static WindowSpec parse(const std::string& text);
  std::string to_text() const;
};

// Continuous-time analog of the "v not activated up to and including t+1"
// failure condition. kWindowAfterParent: v in B when it does not activate
// within the window after u (activating later, or never). kNeverInCascade:
// v in B only when it never activates in the cascade.
enum class FailureMode : std::uint8_t { kWindowAfterParent, kNeverInCascade };

// Per-cascade potential-parent ranges. Events are sorted by time, so the
// parents of the event at position i are always a contiguous position range
// [lo, hi) with hi = first event sharing v's timestamp.
struct ActivationIndex {
  struct PerCascade {
    std::uint32_t seed_count = 0;  // events [0, seed_count) are seeds
    std::vector<std::uint32_t> parent_lo;  // per event position
    std::vector<std::uint32_t> parent_hi;
  };

  WindowSpec window;
  std::vector<PerCascade> cascades;

  bool is_seed(std::size_t cascade, std::size_t pos) const {
    return pos < cascades[cascade].seed_count;
  }
};

ActivationIndex index_cascades(const CascadeSet& set, WindowSpec window);

// Candidate edges E_c = ordered pairs (u, v) where u is a potential parent
// of v's activation in at least one cascade; the unobserved graph G is
// replaced by E_c. For each candidate edge, A holds the cascades (and v's
// event position) where the pair is a success, B the cascades where u
// activated but v did not follow within the window.
struct CandidateEdgeIndex {
  struct EdgeLists {
    NodeId u = 0;
    NodeId v = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> a;  // (cascade, event pos of v)
    std::vector<std::uint32_t> b;                            // cascade ids
  };

  WindowSpec window;
  FailureMode failure_mode = FailureMode::kWindowAfterParent;
  std::vector<EdgeLists> edges;                       // sorted by (u, v)
  std::unordered_map<std::uint64_t, std::size_t> by_pair;  // pack(u,v) -> index

  static std::uint64_t pack(NodeId u, NodeId v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
  }

  std::size_t edge_count() const { return edges.size(); }
  const EdgeLists* find(NodeId u, NodeId v) const {
    auto it = by_pair.find(pack(u, v));
    return it == by_pair.end() ? nullptr : &edges[it->second];
  }
};

CandidateEdgeIndex derive_candidate_edges(
    const CascadeSet& set, const ActivationIndex& index,
    FailureMode failure_mode = FailureMode::kWindowAfterParent);

}  // namespace cascademix
