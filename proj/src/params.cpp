#include "cascademix/params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace cascademix {

using nlohmann::json;

void ComponentParams::set(NodeId u, NodeId v, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("edge probability outside [0,1]: " + std::to_string(p));
  }
  map_[pack(u, v)] = p;
}

std::optional<double> ComponentParams::get(NodeId u, NodeId v) const {
  auto it = map_.find(pack(u, v));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

double ComponentParams::get_or(NodeId u, NodeId v, double fallback) const {
  auto it = map_.find(pack(u, v));
  return it == map_.end() ? fallback : it->second;
}

std::vector<ComponentParams::Entry> ComponentParams::sorted_entries() const {
  std::vector<Entry> entries;
  entries.reserve(map_.size());
  for (auto [key, p] : map_) {
    entries.push_back({static_cast<NodeId>(key >> 32), static_cast<NodeId>(key & 0xffffffffu), p});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  return entries;
}

std::vector<std::string> MixtureParams::default_names(std::size_t k) {
  if (k == 2) return {"true", "fake"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < k; ++i) names.push_back("c" + std::to_string(i));
  return names;
}

void MixtureParams::validate() const {
  if (components.empty() || pi.size() != components.size() ||
      component_names.size() != components.size()) {
    throw std::invalid_argument("mixture: pi, components and names must have equal size >= 1");
  }
  double total = 0.0;
  for (double w : pi) {
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("mixture: pi entries must be in [0,1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture: pi must sum to 1 within 1e-12");
  }
  auto keys = [](const ComponentParams& c) {
    std::vector<std::pair<NodeId, NodeId>> ks;
    for (const auto& e : c.sorted_entries()) ks.emplace_back(e.u, e.v);
    return ks;
  };
  auto first = keys(components.front());
  for (std::size_t i = 1; i < components.size(); ++i) {
    if (keys(components[i]) != first) {
      throw std::invalid_argument("mixture: components must share one edge key set");
    }
  }
}

void save_model(const MixtureParams& params, const Interner& names,
                const std::filesystem::path& path, bool converged,
                const std::vector<double>& nll_trace) {
  params.validate();
  json doc;
  doc["pi"] = params.pi;
  json components = json::array();
  for (std::size_t i = 0; i < params.components.size(); ++i) {
    json comp;
    comp["name"] = params.component_names[i];
    json edges = json::array();
    // Name-sorted canonical order so files are interner-independent.
    auto entries = params.components[i].sorted_entries();
    std::sort(entries.begin(), entries.end(),
              [&](const ComponentParams::Entry& a, const ComponentParams::Entry& b) {
                const std::string& au = names.name(a.u);
                const std::string& bu = names.name(b.u);
                if (au != bu) return au < bu;
                return names.name(a.v) < names.name(b.v);
              });
    for (const auto& e : entries) {
      edges.push_back({{"p", e.p}, {"u", names.name(e.u)}, {"v", names.name(e.v)}});
    }
    comp["edges"] = std::move(edges);
    components.push_back(std::move(comp));
  }
  doc["components"] = std::move(components);
  doc["window"] = {{"mode", params.window.mode == WindowMode::kEvents ? "events" : "time"},
                   {"size", params.window.size}};
  doc["converged"] = converged;
  doc["nll_trace"] = nll_trace;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + path.string());
  out << doc.dump(2) << '\n';
}

namespace {

const json& require_field(const json& obj, const char* field, const char* where) {
  if (!obj.is_object() || !obj.contains(field)) {
    throw ParseError(std::string("model file: missing field '") + field + "' in " + where);
  }
  return obj.at(field);
}

}  // namespace

LoadedModel load_model(const std::filesystem::path& path, Interner& names) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ParseError("model file: " + std::string(e.what()));
  }

  LoadedModel loaded;
  MixtureParams& params = loaded.params;
  try {
    params.pi = require_field(doc, "pi", "root").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ParseError("model file: field 'pi' must be an array of numbers");
  }
  const json& components = require_field(doc, "components", "root");
  if (!components.is_array() || components.empty()) {
    throw ParseError("model file: field 'components' must be a non-empty array");
  }
  for (const json& comp : components) {
    ComponentParams cp;
    std::string name;
    try {
      name = require_field(comp, "name", "components[]").get<std::string>();
    } catch (const json::exception&) {
      throw ParseError("model file: component field 'name' must be a string");
    }
    const json& edges = require_field(comp, "edges", "components[]");
    if (!edges.is_array()) throw ParseError("model file: component field 'edges' must be an array");
    for (const json& e : edges) {
      try {
        NodeId u = names.intern(require_field(e, "u", "edges[]").get<std::string>());
        NodeId v = names.intern(require_field(e, "v", "edges[]").get<std::string>());
        cp.set(u, v, require_field(e, "p", "edges[]").get<double>());
      } catch (const json::exception&) {
        throw ParseError("model file: edge fields 'u'/'v' must be strings and 'p' a number");
      } catch (const std::invalid_argument& err) {
        throw ParseError(std::string("model file: field 'p' invalid: ") + err.what());
      }
    }
    params.components.push_back(std::move(cp));
    params.component_names.push_back(std::move(name));
  }
  const json& window = require_field(doc, "window", "root");
  std::string mode;
  try {
    mode = require_field(window, "mode", "window").get<std::string>();
    params.window.size = require_field(window, "size", "window").get<double>();
  } catch (const json::exception&) {
    throw ParseError("model file: window 'mode' must be a string and 'size' a number");
  }
  if (mode == "events")
    params.window.mode = WindowMode::kEvents;
  else if (mode == "time")
    params.window.mode = WindowMode::kTime;
  else
    throw ParseError("model file: field 'window.mode' must be 'events' or 'time'");
  if (doc.contains("converged")) loaded.converged = doc.at("converged").get<bool>();
  if (doc.contains("nll_trace")) {
    try {
      loaded.nll_trace = doc.at("nll_trace").get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ParseError("model file: field 'nll_trace' must be an array of numbers");
    }
  }
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  return loaded;
}

}  // namespace cascademix
