#include "cascademix/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace cascademix {

using nlohmann::json;

const char* to_string(CascadeLabel label) {
  switch (label) {
    case CascadeLabel::kTrue:
      return "true";
    case CascadeLabel::kFake:
      return "fake";
    default:
      return "unknown";
  }
}

std::size_t Cascade::seed_count() const {
  if (events.empty()) return 0;
  double t0 = events.front().time;
  std::size_t n = 0;
  while (n < events.size() && events[n].time == t0) ++n;
  return n;
}

namespace {

CascadeLabel parse_label(const json& j, std::size_t record_no) {
  std::string s = j.get<std::string>();
  if (s == "true") return CascadeLabel::kTrue;
  if (s == "fake") return CascadeLabel::kFake;
  throw ParseError("cascade record " + std::to_string(record_no) + ": label must be 'true' or 'fake', got '" + s + "'");
}

}  // namespace

CascadeSet parse_cascades(std::istream& in, double time_scale) {
  CascadeSet set;
  std::string line;
  std::size_t record_no = 0;
  while (std::getline(in, line)) {
    ++record_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("cascade record " + std::to_string(record_no) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec.contains("events")) {
      throw ParseError("cascade record " + std::to_string(record_no) +
                       ": missing required field 'id' or 'events'");
    }
    Cascade c;
    c.id = rec.at("id").get<std::string>();
    if (rec.contains("label") && !rec.at("label").is_null()) {
      c.label = parse_label(rec.at("label"), record_no);
    }
    const json& events = rec.at("events");
    if (!events.is_array() || events.empty()) {
      throw ParseError("cascade record " + std::to_string(record_no) +
                       ": 'events' must be a non-empty array");
    }
    c.events.reserve(events.size());
    for (const json& ev : events) {
      if (!ev.is_object() || !ev.contains("u") || !ev.contains("t")) {
        throw ParseError("cascade record " + std::to_string(record_no) +
                         ": event missing 'u' or 't'");
      }
      double t = ev.at("t").get<double>() / time_scale;
      if (t < 0.0 || !std::isfinite(t)) {
        throw std::invalid_argument("cascade record " + std::to_string(record_no) +
                                    ": negative or non-finite timestamp");
      }
      c.events.push_back({set.users.intern(ev.at("u").get<std::string>()), t});
    }
    // Sort by time keeping ingestion order on ties, then keep each user's
    // first engagement only (IC activates a node once).
    std::stable_sort(c.events.begin(), c.events.end(),
                     [](const CascadeEvent& a, const CascadeEvent& b) { return a.time < b.time; });
    std::unordered_set<NodeId> seen;
    std::vector<CascadeEvent> unique;
    unique.reserve(c.events.size());
    for (const CascadeEvent& ev : c.events) {
      if (seen.insert(ev.user).second) unique.push_back(ev);
    }
    c.events = std::move(unique);
    set.cascades.push_back(std::move(c));
  }
  return set;
}

void dump_cascades(const CascadeSet& set, std::ostream& out) {
  for (const Cascade& c : set.cascades) {
    json rec;
    rec["id"] = c.id;
    if (c.label != CascadeLabel::kUnknown) rec["label"] = to_string(c.label);
    json events = json::array();
    for (const CascadeEvent& ev : c.events) {
      events.push_back({{"t", ev.time}, {"u", set.users.name(ev.user)}});
    }
    rec["events"] = std::move(events);
    out << rec.dump() << '\n';
  }
}

FilterResult filter_min_engagements(const CascadeSet& set, std::size_t k_min) {
  if (k_min < 1) throw std::invalid_argument("filter_min_engagements: k_min must be >= 1");
  std::vector<std::size_t> appearances(set.users.size(), 0);
  for (const Cascade& c : set.cascades) {
    for (const CascadeEvent& ev : c.events) ++appearances[ev.user];
  }
  FilterResult result;
  result.set.users = set.users;
  for (NodeId u = 0; u < set.users.size(); ++u) {
    if (appearances[u] >= k_min) result.retained_users.push_back(u);
  }
  for (const Cascade& c : set.cascades) {
    Cascade kept;
    kept.id = c.id;
    kept.label = c.label;
    for (const CascadeEvent& ev : c.events) {
      if (appearances[ev.user] >= k_min) kept.events.push_back(ev);
    }
    if (!kept.events.empty()) result.set.cascades.push_back(std::move(kept));
  }
  return result;
}

}  // namespace cascademix
