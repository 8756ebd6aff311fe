#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cascademix/common.hpp"
#include "cascademix/indexing.hpp"
#include "cascademix/interner.hpp"

namespace cascademix {

// Edge-probability map for one diffusion component: (u, v) -> p in [0, 1].
class ComponentParams {
 public:
  void set(NodeId u, NodeId v, double p);
  std::optional<double> get(NodeId u, NodeId v) const;
  double get_or(NodeId u, NodeId v, double fallback) const;

  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }

  // Entries sorted by (u, v); the deterministic iteration order.
  struct Entry {
    NodeId u;
    NodeId v;
    double p;
  };
  std::vector<Entry> sorted_entries() const;

 private:
  static std::uint64_t pack(NodeId u, NodeId v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
  }
  std::unordered_map<std::uint64_t, double> map_;
};

// Mixture of k independent-cascade components over a shared candidate edge
// set: mixing weights pi (sum 1) plus one edge map per component. k = 2
// with components {true, fake} is the default; all operations accept
// general k.
struct MixtureParams {
  std::vector<double> pi;
  std::vector<ComponentParams> components;
  std::vector<std::string> component_names;
  WindowSpec window;

  std::size_t k() const { return components.size(); }

  const ComponentParams& theta_true() const { return components.at(0); }
  const ComponentParams& theta_fake() const { return components.at(1); }

  // Enforces: pi is a distribution within 1e-12, components and names match
  // pi's size, all component edge maps share one key set. Throws otherwise.
  void validate() const;

  static std::vector<std::string> default_names(std::size_t k);
};

// Model JSON schema: {"pi": [...], "components": [{"name", "edges":
// [{"u","v","p"}]}], "window": {"mode","size"}, "converged", "nll_trace"}.
// Node ids are written as strings from `names`; doubles round-trip exactly
// (shortest-representation emission).
void save_model(const MixtureParams& params, const Interner& names,
                const std::filesystem::path& path, bool converged = true,
                const std::vector<double>& nll_trace = {});

struct LoadedModel {
  MixtureParams params;
  bool converged = true;
  std::vector<double> nll_trace;
};

// Node id strings are interned into `names` (extending it when unseen).
// Throws ParseError naming the offending field on schema violations.
LoadedModel load_model(const std::filesystem::path& path, Interner& names);

}  // namespace cascademix
