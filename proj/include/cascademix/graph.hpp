#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cascademix/common.hpp"
#include "cascademix/interner.hpp"

namespace cascademix {

struct Cascade;

struct GraphEdge {
  NodeId src = 0;
  NodeId dst = 0;
  std::optional<double> weight;  // probability in [0,1] when present
};

// Directed graph over interned node ids. Doubles as the follower graph
// (edge A->B means A follows B) and as an inferred diffusion skeleton with
// per-edge weights. No duplicate edges, no self-loops; immutable once built.
class DirectedGraph {
 public:
  NodeId add_node(std::string_view name) { return nodes_.intern(name); }

  // Returns the edge id, or nullopt if (u, v) was already present (the
  // first insertion wins). Throws on self-loops, unregistered endpoints and
  // weights outside [0, 1].
  std::optional<std::size_t> add_edge(NodeId u, NodeId v,
                                      std::optional<double> weight = std::nullopt);

  NodeId node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  bool has_edge(NodeId u, NodeId v) const { return edge_id(u, v).has_value(); }
  std::optional<std::size_t> edge_id(NodeId u, NodeId v) const;
  const GraphEdge& edge(std::size_t id) const { return edges_[id]; }
  const std::vector<GraphEdge>& edges() const { return edges_; }

  // Out-edges of u as (target, edge id) pairs in insertion order.
  std::span<const std::pair<NodeId, std::size_t>> out_edges(NodeId u) const;

  const Interner& nodes() const { return nodes_; }
  Interner& nodes() { return nodes_; }

 private:
  static std::uint64_t pack(NodeId u, NodeId v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
  }

  Interner nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<std::pair<NodeId, std::size_t>>> out_adj_;
  std::unordered_map<std::uint64_t, std::size_t> edge_index_;
};

// Per-cascade forest attributing each engagement to the latest earlier
// poster the engaging user follows. Edges are (parent, child) in the
// cascade's user-id space; a child has at most one parent.
struct RetweetGraph {
  std::string cascade_id;
  std::vector<NodeId> engaged;                     // distinct engaged users
  std::vector<std::pair<NodeId, NodeId>> edges;    // (parent, child)
};

struct ComponentStats {
  std::size_t cc_count = 0;
  double proportion = 0.0;  // cc_count / n_engagements, in (0, 1]
};

// Reads `follower<TAB>followee` lines (any whitespace accepted, optional
// third weight column, `#` comments). With directed=false each line also
// registers the reverse edge. Duplicate edges collapse to the first.
DirectedGraph load_edge_list(std::istream& in, bool directed = true);

// Writes one `src<TAB>dst[<TAB>weight]` line per edge in insertion order.
void save_edge_list(const DirectedGraph& g, std::ostream& out);

// The follower edge (A, B) means A follows B; B becomes A's parent when B
// is the latest user A follows that engaged strictly before A. Ties in
// engagement time are broken by event order (earlier event is earlier).
RetweetGraph build_retweet_graph(const Cascade& cascade, const Interner& cascade_users,
                                 const DirectedGraph& followers);

// Weakly connected components over the retweet forest, counting isolated
// engaged users. n_engagements must be >= 1.
ComponentStats weak_component_stats(const RetweetGraph& g, std::size_t n_engagements);

}  // namespace cascademix
