#pragma once

#include <string>

#include "dwre/lattice.hpp"

namespace dwre {

enum class EventKind {
  tail,        // X_n . l >= n k
  hit,         // T_{nk} <= n
  hit_noback,  // T_{nk} <= n and T_{nk} <= D_1
  nonneg,      // X_n . l >= 0
};

struct Event {
  EventKind kind = EventKind::tail;
  Direction l;
  double k = 0.0;

  double level(std::size_t n) const { return kind == EventKind::nonneg ? 0.0 : k * static_cast<double>(n); }
};

std::string to_string(EventKind kind);
/// Accepts tail, hit, hit_noback, nonneg; throws std::invalid_argument otherwise.
EventKind parse_event_kind(const std::string& s);

}  // namespace dwre
