#pragma once

#include <vector>

#include "mnci/common.hpp"
#include "mnci/graph.hpp"

namespace mnci {

struct SynthConfig {
  int nodes_per_community = 100;
  int communities = 2;
  double intra_p = 0.9;
  int events_per_node = 20;
  std::uint64_t seed = 1;
};

struct SynthData {
  std::vector<Event> stream;  // generation order
  TemporalGraph graph;        // same events, time-sorted
  LabelMap labels;
};

/// Planted-community interaction stream: every node emits events at uniform
/// random times in [0, 1); each partner is drawn from the node's own
/// community with probability intra_p, otherwise uniformly from the others.
/// Labels are the community ids. Node u belongs to community u / n.
inline SynthData synth_planted_graph(const SynthConfig& cfg) {
  const int n = cfg.nodes_per_community;
  const int m = cfg.communities;
  if (n < 2) throw DataError("need at least two nodes per community");
  if (m < 1) throw DataError("need at least one community");
  if (cfg.events_per_node < 1) throw DataError("need at least one event per node");
  if (!(cfg.intra_p > 0.5) || cfg.intra_p > 1.0) {
    throw DataError("intra-community probability must be in (0.5, 1]");
  }

  Rng rng(cfg.seed, 11);
  std::vector<Event> stream;
  stream.reserve(static_cast<std::size_t>(n) * m * cfg.events_per_node);
  const NodeId total = static_cast<NodeId>(n) * m;
  for (NodeId u = 0; u < total; ++u) {
    const NodeId community = u / n;
    for (int j = 0; j < cfg.events_per_node; ++j) {
      const double t = rng.uniform();
      // Draw order is fixed (time, coin, partner) so files reproduce exactly.
      const bool intra = m == 1 || rng.uniform() < cfg.intra_p;
      NodeId partner;
      if (intra) {
        partner = community * n + static_cast<NodeId>(rng.below(n - 1));
        if (partner >= u) ++partner;
      } else {
        partner = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n) * (m - 1)));
        if (partner >= community * n) partner += n;
      }
      stream.push_back({u, partner, t});
    }
  }

  SynthData data;
  data.stream = std::move(stream);
  data.graph = TemporalGraph::from_events(data.stream);
  for (NodeId u = 0; u < total; ++u) data.labels[u] = static_cast<int>(u / n);
  return data;
}

}  // namespace mnci
