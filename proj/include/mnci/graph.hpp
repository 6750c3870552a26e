#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mnci/common.hpp"

namespace mnci {

/// One timestamped interaction. Self-loops are rejected at parse time.
struct Event {
  NodeId src = 0;
  NodeId dst = 0;
  double time = 0.0;
};

struct HistoryEntry {
  NodeId neighbor = 0;
  double time = 0.0;
};

/// Fixed-capacity record of a node's most recent interactions, oldest first.
class NeighborHistory {
 public:
  explicit NeighborHistory(int cap = 10) : cap_(cap) {
    if (cap < 1) throw std::invalid_argument("history cap must be >= 1");
  }

  /// Appends an entry; evicts the oldest when the cap is exceeded.
  void push(NodeId neighbor, double time) {
    if (!entries_.empty() && time < entries_.back().time) {
      throw DataError("history push out of time order");
    }
    entries_.push_back({neighbor, time});
    if (static_cast<int>(entries_.size()) > cap_) {
      entries_.erase(entries_.begin());
    }
  }

  const std::vector<HistoryEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  int size() const { return static_cast<int>(entries_.size()); }
  int cap() const { return cap_; }

 private:
  std::vector<HistoryEntry> entries_;
  int cap_;
};

inline NeighborHistory push_history(NeighborHistory h, NodeId neighbor, double time) {
  h.push(neighbor, time);
  return h;
}

/// Time-ordered event stream with first-appearance node indexing. Immutable
/// after construction; safe to share read-only across threads.
class TemporalGraph {
 public:
  /// Stable-sorts events by time and assigns node indices by first occurrence
  /// in the sorted stream (src scanned before dst within an event).
  static TemporalGraph from_events(std::vector<Event> events) {
    if (events.empty()) throw DataError("no events");
    for (const Event& e : events) {
      if (!std::isfinite(e.time) || e.time < 0.0) throw DataError("event time must be finite and >= 0");
      if (e.src < 0 || e.dst < 0) throw DataError("node ids must be non-negative");
      if (e.src == e.dst) throw DataError("self-loop event");
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
    TemporalGraph g;
    g.events_ = std::move(events);
    for (const Event& e : g.events_) {
      for (NodeId id : {e.src, e.dst}) {
        if (g.first_seen_.emplace(id, static_cast<int>(g.node_ids_.size())).second) {
          g.node_ids_.push_back(id);
        }
      }
    }
    return g;
  }

  const std::vector<Event>& events() const { return events_; }
  int node_count() const { return static_cast<int>(node_ids_.size()); }

  int index_of(NodeId id) const {
    auto it = first_seen_.find(id);
    if (it == first_seen_.end()) throw DataError("unknown node id " + std::to_string(id));
    return it->second;
  }

  bool has_node(NodeId id) const { return first_seen_.count(id) != 0; }

  const std::unordered_map<NodeId, int>& first_seen() const { return first_seen_; }

  /// Position -> external id; the first-appearance node sequence.
  const std::vector<NodeId>& node_ids() const { return node_ids_; }

  /// Events each node participates in (multi-edges counted), by node index.
  std::vector<double> event_degrees() const {
    std::vector<double> deg(node_ids_.size(), 0.0);
    for (const Event& e : events_) {
      deg[first_seen_.at(e.src)] += 1.0;
      deg[first_seen_.at(e.dst)] += 1.0;
    }
    return deg;
  }

  /// Median of the positive gaps between consecutive events in the sorted
  /// stream; empty when every event shares one timestamp.
  std::optional<double> median_positive_gap() const {
    std::vector<double> gaps;
    gaps.reserve(events_.size());
    for (std::size_t i = 1; i < events_.size(); ++i) {
      const double gap = events_[i].time - events_[i - 1].time;
      if (gap > 0.0) gaps.push_back(gap);
    }
    if (gaps.empty()) return std::nullopt;
    const std::size_t mid = gaps.size() / 2;
    std::nth_element(gaps.begin(), gaps.begin() + mid, gaps.end());
    double m = gaps[mid];
    if (gaps.size() % 2 == 0) {
      const double lo = *std::max_element(gaps.begin(), gaps.begin() + mid);
      m = 0.5 * (lo + m);
    }
    return m;
  }

 private:
  std::vector<Event> events_;
  std::unordered_map<NodeId, int> first_seen_;
  std::vector<NodeId> node_ids_;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_int(std::string_view tok, std::int64_t& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

inline bool parse_real(std::string_view tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

inline std::string at_line(int line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

}  // namespace detail

/// Parses `src dst time` triples, one per line. `#`-prefixed lines and empty
/// lines are ignored. Throws DataError with a line number on malformed input,
/// self-loops, or an empty stream.
inline TemporalGraph parse_edge_list(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks[0][0] == '#') continue;
    if (toks.size() != 3) {
      throw DataError(detail::at_line(line_no, "expected `src dst time`"));
    }
    Event e;
    if (!detail::parse_int(toks[0], e.src) || e.src < 0) {
      throw DataError(detail::at_line(line_no, "bad source node id"));
    }
    if (!detail::parse_int(toks[1], e.dst) || e.dst < 0) {
      throw DataError(detail::at_line(line_no, "bad destination node id"));
    }
    if (!detail::parse_real(toks[2], e.time) || !std::isfinite(e.time) || e.time < 0.0) {
      throw DataError(detail::at_line(line_no, "bad timestamp"));
    }
    if (e.src == e.dst) {
      throw DataError(detail::at_line(line_no, "self-loop rejected"));
    }
    events.push_back(e);
  }
  if (events.empty()) throw DataError("no events");
  return TemporalGraph::from_events(std::move(events));
}

inline TemporalGraph parse_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list: " + path);
  return parse_edge_list(in);
}

/// Writes the sorted event stream back out; re-parsing reproduces the graph.
inline void write_edge_list(const TemporalGraph& g, std::ostream& out) {
  char buf[64];
  for (const Event& e : g.events()) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.time);
    out << e.src << ' ' << e.dst << ' ' << buf << '\n';
  }
}

using LabelMap = std::unordered_map<NodeId, int>;

/// Parses `node_id label` lines. Duplicate identical entries are allowed;
/// conflicting duplicates are an error.
inline LabelMap parse_labels(std::istream& in) {
  LabelMap labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks[0][0] == '#') continue;
    if (toks.size() != 2) {
      throw DataError(detail::at_line(line_no, "expected `node_id label`"));
    }
    NodeId id;
    std::int64_t label;
    if (!detail::parse_int(toks[0], id) || id < 0) {
      throw DataError(detail::at_line(line_no, "bad node id"));
    }
    if (!detail::parse_int(toks[1], label)) {
      throw DataError(detail::at_line(line_no, "bad label"));
    }
    auto [it, inserted] = labels.emplace(id, static_cast<int>(label));
    if (!inserted && it->second != static_cast<int>(label)) {
      throw DataError(detail::at_line(line_no, "conflicting label for node " + std::to_string(id)));
    }
  }
  return labels;
}

inline LabelMap parse_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file: " + path);
  return parse_labels(in);
}

}  // namespace mnci
