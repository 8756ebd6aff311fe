#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "cascademix/common.hpp"
#include "cascademix/interner.hpp"

namespace cascademix {

enum class CascadeLabel : std::uint8_t { kUnknown, kTrue, kFake };

const char* to_string(CascadeLabel label);

struct CascadeEvent {
  NodeId user = 0;
  double time = 0.0;  // hours
};

// Time-ordered user engagements with one content item. Events are sorted by
// timestamp with ties kept in ingestion order; a user appears at most once
// (first engagement wins). Labels ride along for evaluation only and are
// never consumed by inference.
struct Cascade {
  std::string id;
  CascadeLabel label = CascadeLabel::kUnknown;
  std::vector<CascadeEvent> events;

  std::size_t size() const { return events.size(); }

  // Seeds are all events sharing the earliest timestamp.
  std::size_t seed_count() const;
};

struct CascadeSet {
  Interner users;
  std::vector<Cascade> cascades;
};

// Reads line-delimited records {"id": str, "label": "true"|"fake"?,
// "events": [{"u": str, "t": number}]}. Events are sorted and per-user
// deduplicated; the `time_scale` factor divides raw timestamps (e.g. 3600
// for input in seconds when hours are wanted).
CascadeSet parse_cascades(std::istream& in, double time_scale = 1.0);

// Canonical JSONL emission; parse -> dump is bit-exact on its own output.
void dump_cascades(const CascadeSet& set, std::ostream& out);

struct FilterResult {
  CascadeSet set;
  std::vector<NodeId> retained_users;  // ids valid in set.users
};

// Drops users appearing in fewer than k_min cascades, then drops cascades
// left empty. k_min = 1 is the identity.
FilterResult filter_min_engagements(const CascadeSet& set, std::size_t k_min = 5);

}  // namespace cascademix
