#include "cascademix/indexing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cascademix {

WindowSpec WindowSpec::parse(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("window spec must be 'events:N' or 'time:W', got '" + text + "'");
  }
  std::string mode = text.substr(0, colon);
  double size = 0.0;
  try {
    size = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("window spec has a malformed size: '" + text + "'");
  }
  if (!(size > 0.0)) throw std::invalid_argument("window size must be > 0");
  if (mode == "events") return WindowSpec::events(size);
  if (mode == "time") return WindowSpec::time(size);
  throw std::invalid_argument("window mode must be 'events' or 'time', got '" + mode + "'");
}

std::string WindowSpec::to_text() const {
  std::string prefix = mode == WindowMode::kEvents ? "events:" : "time:";
  if (std::isinf(size)) return prefix + "inf";
  if (size == std::floor(size) && std::abs(size) < 1e15) {
    return prefix + std::to_string(static_cast<long long>(size));
  }
  return prefix + std::to_string(size);
}

ActivationIndex index_cascades(const CascadeSet& set, WindowSpec window) {
  if (!(window.size > 0.0)) throw std::invalid_argument("window size must be > 0");
  ActivationIndex index;
  index.window = window;
  index.cascades.resize(set.cascades.size());
  for (std::size_t s = 0; s < set.cascades.size(); ++s) {
    const Cascade& c = set.cascades[s];
    auto& per = index.cascades[s];
    per.seed_count = static_cast<std::uint32_t>(c.seed_count());
    per.parent_lo.assign(c.events.size(), 0);
    per.parent_hi.assign(c.events.size(), 0);
    // first_same[i]: first position sharing events[i]'s timestamp. Events
    // are time-sorted, so parents of i form the contiguous range [lo, hi)
    // with hi = first_same[i].
    std::size_t block_start = 0;
    for (std::size_t i = 0; i < c.events.size(); ++i) {
      if (c.events[i].time != c.events[block_start].time) block_start = i;
      std::uint32_t hi = static_cast<std::uint32_t>(block_start);
      std::uint32_t lo = 0;
      if (window.mode == WindowMode::kEvents) {
        // W most recent strictly-earlier activations; fractional sizes floor.
        double count = std::floor(window.size);
        lo = count >= static_cast<double>(hi)
                 ? 0
                 : hi - static_cast<std::uint32_t>(count);
      } else {
        double cutoff = c.events[i].time - window.size;
        // lower_bound over prefix [0, hi): first event with t >= cutoff
        std::uint32_t a = 0, b = hi;
        while (a < b) {
          std::uint32_t mid = (a + b) / 2;
          if (c.events[mid].time < cutoff)
            a = mid + 1;
          else
            b = mid;
        }
        lo = a;
      }
      per.parent_lo[i] = lo;
      per.parent_hi[i] = hi;
    }
    // Seeds have no potential parents by definition.
    for (std::uint32_t i = 0; i < per.seed_count; ++i) {
      per.parent_lo[i] = per.parent_hi[i] = 0;
    }
  }
  return index;
}

CandidateEdgeIndex derive_candidate_edges(const CascadeSet& set, const ActivationIndex& index,
                                          FailureMode failure_mode) {
  if (index.cascades.size() != set.cascades.size()) {
    throw std::invalid_argument("activation index does not match the cascade set");
  }
  CandidateEdgeIndex out;
  out.window = index.window;
  out.failure_mode = failure_mode;

  // Pass 1: successes. Every (potential parent, child) pair becomes a
  // candidate edge with the cascade recorded in A.
  for (std::size_t s = 0; s < set.cascades.size(); ++s) {
    const Cascade& c = set.cascades[s];
    const auto& per = index.cascades[s];
    for (std::size_t i = per.seed_count; i < c.events.size(); ++i) {
      NodeId v = c.events[i].user;
      for (std::uint32_t j = per.parent_lo[i]; j < per.parent_hi[i]; ++j) {
        NodeId u = c.events[j].user;
        auto key = CandidateEdgeIndex::pack(u, v);
        auto [it, inserted] = out.by_pair.emplace(key, out.edges.size());
        if (inserted) {
          out.edges.push_back({u, v, {}, {}});
        }
        out.edges[it->second].a.emplace_back(static_cast<std::uint32_t>(s),
                                             static_cast<std::uint32_t>(i));
      }
    }
  }

  // Children of u over the candidate set, for the failure pass.
  std::unordered_map<NodeId, std::vector<std::size_t>> children;
  for (std::size_t e = 0; e < out.edges.size(); ++e) {
    children[out.edges[e].u].push_back(e);
  }

  // Pass 2: failures. Cascade s lands in B_{u,v} when u activated and v did
  // not activate within the window after u. A v activated at-or-before u is
  // already active and belongs to neither set.
  for (std::size_t s = 0; s < set.cascades.size(); ++s) {
    const Cascade& c = set.cascades[s];
    const auto& per = index.cascades[s];
    std::unordered_map<NodeId, std::uint32_t> pos_of;
    pos_of.reserve(c.events.size());
    for (std::size_t i = 0; i < c.events.size(); ++i) {
      pos_of.emplace(c.events[i].user, static_cast<std::uint32_t>(i));
    }
    for (std::size_t j = 0; j < c.events.size(); ++j) {
      auto it = children.find(c.events[j].user);
      if (it == children.end()) continue;
      for (std::size_t e : it->second) {
        NodeId v = out.edges[e].v;
        auto vp = pos_of.find(v);
        if (vp == pos_of.end()) {
          out.edges[e].b.push_back(static_cast<std::uint32_t>(s));
          continue;
        }
        if (failure_mode == FailureMode::kNeverInCascade) continue;
        std::uint32_t i = vp->second;
        // In-window success iff j lies in v's parent range.
        bool in_window = j >= per.parent_lo[i] && j < per.parent_hi[i];
        if (in_window) continue;
        bool v_after_u = c.events[i].time > c.events[j].time;
        if (v_after_u) out.edges[e].b.push_back(static_cast<std::uint32_t>(s));
      }
    }
  }

  // Canonical edge order: sort by (u, v) and rebuild the pair lookup.
  std::vector<std::size_t> order(out.edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = out.edges[a];
    const auto& eb = out.edges[b];
    return ea.u != eb.u ? ea.u < eb.u : ea.v < eb.v;
  });
  std::vector<CandidateEdgeIndex::EdgeLists> sorted;
  sorted.reserve(out.edges.size());
  out.by_pair.clear();
  for (std::size_t i : order) {
    out.by_pair.emplace(CandidateEdgeIndex::pack(out.edges[i].u, out.edges[i].v), sorted.size());
    sorted.push_back(std::move(out.edges[i]));
  }
  out.edges = std::move(sorted);
  return out;
}

}  // namespace cascademix
