#include "dwre/event.hpp"

#include <stdexcept>

namespace dwre {

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::tail: return "tail";
    case EventKind::hit: return "hit";
    case EventKind::hit_noback: return "hit_noback";
    case EventKind::nonneg: return "nonneg";
  }
  return "?";
}

EventKind parse_event_kind(const std::string& s) {
  if (s == "tail") return EventKind::tail;
  if (s == "hit") return EventKind::hit;
  if (s == "hit_noback") return EventKind::hit_noback;
  if (s == "nonneg") return EventKind::nonneg;
  throw std::invalid_argument("unknown event kind '" + s + "' (expected tail, hit, hit_noback or nonneg)");
}

}  // namespace dwre
