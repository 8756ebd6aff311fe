#include "cascademix/graph.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "cascademix/cascade.hpp"

namespace cascademix {

std::optional<std::size_t> DirectedGraph::add_edge(NodeId u, NodeId v,
                                                   std::optional<double> weight) {
  if (u == v) {
    throw std::invalid_argument("self-loop rejected: node '" + nodes_.name(u) + "'");
  }
  if (u >= nodes_.size() || v >= nodes_.size()) {
    throw std::invalid_argument("edge endpoint is not a registered node");
  }
  if (weight && (*weight < 0.0 || *weight > 1.0)) {
    throw std::invalid_argument("edge weight outside [0,1]: " + std::to_string(*weight));
  }
  auto [it, inserted] = edge_index_.emplace(pack(u, v), edges_.size());
  if (!inserted) return std::nullopt;
  std::size_t id = edges_.size();
  edges_.push_back(GraphEdge{u, v, weight});
  if (out_adj_.size() < nodes_.size()) out_adj_.resize(nodes_.size());
  out_adj_[u].emplace_back(v, id);
  return id;
}

std::optional<std::size_t> DirectedGraph::edge_id(NodeId u, NodeId v) const {
  auto it = edge_index_.find(pack(u, v));
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

std::span<const std::pair<NodeId, std::size_t>> DirectedGraph::out_edges(NodeId u) const {
  if (u >= out_adj_.size()) return {};
  return out_adj_[u];
}

namespace {

bool parse_weight(const std::string& token, double& out) {
  const char* first = token.data();
  const char* last = first + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

DirectedGraph load_edge_list(std::istream& in, bool directed) {
  DirectedGraph g;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string u_name, v_name, w_token, extra;
    fields >> u_name >> v_name;
    if (u_name.empty() || v_name.empty()) {
      throw ParseError("edge list line " + std::to_string(line_no) +
                       ": expected 2-3 whitespace-separated columns");
    }
    bool has_weight = static_cast<bool>(fields >> w_token);
    if (fields >> extra) {
      throw ParseError("edge list line " + std::to_string(line_no) +
                       ": expected 2-3 whitespace-separated columns");
    }
    std::optional<double> weight;
    if (has_weight) {
      double w = 0.0;
      if (!parse_weight(w_token, w)) {
        throw ParseError("edge list line " + std::to_string(line_no) +
                         ": malformed weight '" + w_token + "'");
      }
      if (w < 0.0 || w > 1.0) {
        throw std::invalid_argument("edge list line " + std::to_string(line_no) +
                                    ": weight outside [0,1]");
      }
      weight = w;
    }
    NodeId u = g.add_node(u_name);
    NodeId v = g.add_node(v_name);
    try {
      g.add_edge(u, v, weight);
      if (!directed) g.add_edge(v, u, weight);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("edge list line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return g;
}

void save_edge_list(const DirectedGraph& g, std::ostream& out) {
  for (const GraphEdge& e : g.edges()) {
    out << g.nodes().name(e.src) << '\t' << g.nodes().name(e.dst);
    if (e.weight) {
      char buf[32];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *e.weight);
      out << '\t' << std::string_view(buf, ptr - buf);
      (void)ec;
    }
    out << '\n';
  }
}

RetweetGraph build_retweet_graph(const Cascade& cascade, const Interner& cascade_users,
                                 const DirectedGraph& followers) {
  RetweetGraph rg;
  rg.cascade_id = cascade.id;
  rg.engaged.reserve(cascade.events.size());

  // Engagement order (time, position) per follower-graph node, so the
  // latest-parent rule has a strict order to compare against.
  std::unordered_map<NodeId, std::size_t> position_of;  // follower node -> event pos
  std::vector<std::optional<NodeId>> follower_node(cascade.events.size());
  for (std::size_t i = 0; i < cascade.events.size(); ++i) {
    rg.engaged.push_back(cascade.events[i].user);
    auto fn = followers.nodes().find(cascade_users.name(cascade.events[i].user));
    if (fn) {
      follower_node[i] = *fn;
      position_of.emplace(*fn, i);
    }
  }

  for (std::size_t i = 0; i < cascade.events.size(); ++i) {
    if (!follower_node[i]) continue;  // user absent from follower graph: root
    std::optional<std::size_t> best;  // event position of the latest parent
    for (auto [followee, eid] : followers.out_edges(*follower_node[i])) {
      (void)eid;
      auto it = position_of.find(followee);
      if (it == position_of.end()) continue;
      std::size_t j = it->second;
      if (j >= i) continue;  // must post strictly before (ties by event order)
      if (!best || j > *best) best = j;
    }
    if (best) {
      rg.edges.emplace_back(cascade.events[*best].user, cascade.events[i].user);
    }
  }
  return rg;
}

ComponentStats weak_component_stats(const RetweetGraph& g, std::size_t n_engagements) {
  if (n_engagements == 0) {
    throw std::invalid_argument("weak_component_stats: n_engagements must be >= 1");
  }
  // Union-find over engaged users.
  std::unordered_map<NodeId, std::size_t> slot;
  slot.reserve(g.engaged.size());
  for (NodeId u : g.engaged) slot.emplace(u, slot.size());
  std::vector<std::size_t> parent(slot.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = slot.size();
  for (auto [u, v] : g.edges) {
    std::size_t a = find(slot.at(u)), b = find(slot.at(v));
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  ComponentStats stats;
  stats.cc_count = components;
  stats.proportion = static_cast<double>(components) / static_cast<double>(n_engagements);
  return stats;
}

}  // namespace cascademix
