#pragma once

#include <algorithm>
#include <vector>

#include "mnci/common.hpp"
#include "mnci/encoders.hpp"
#include "mnci/graph.hpp"

namespace mnci {

/// Per-node training state: current embedding, truncated interaction history,
/// and the two learnable influence scalars.
struct NodeState {
  Vec embedding;
  double last_update = 0.0;
  NeighborHistory history;
  double delta_ne = 1.0;
  double delta_co = 1.0;
};

/// K community embeddings plus the current hard assignment of nodes.
class CommunityModel {
 public:
  CommunityModel(int k, int dim, int node_count)
      : embeddings_(Mat::Zero(k, dim)), assignment_(node_count, 0) {
    if (k < 1) throw std::invalid_argument("community count must be >= 1");
  }

  int k() const { return static_cast<int>(embeddings_.rows()); }
  int dim() const { return static_cast<int>(embeddings_.cols()); }

  Mat& embeddings() { return embeddings_; }
  const Mat& embeddings() const { return embeddings_; }

  std::vector<int>& assignment() { return assignment_; }
  const std::vector<int>& assignment() const { return assignment_; }

 private:
  Mat embeddings_;
  std::vector<int> assignment_;
};

namespace detail {

/// Normalized sigmoid(-d2) weights from squared distances. Factors out the
/// smallest distance so the ratios survive exp underflow at large distances.
inline Vec weights_from_sq_dists(const std::vector<double>& d2) {
  const double d_min = *std::min_element(d2.begin(), d2.end());
  Vec w(static_cast<int>(d2.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < d2.size(); ++i) {
    const double r = std::exp(-(d2[i] - d_min)) / (1.0 + std::exp(-d2[i]));
    w[static_cast<int>(i)] = r;
    total += r;
  }
  return w / total;
}

}  // namespace detail

/// Affinity of z_u to each candidate embedding: sigmoid of negative squared
/// distance, normalized over the list. Entries may repeat (one per history
/// entry, not per distinct neighbor).
inline Vec affinity_weights(const Vec& z_u, const std::vector<Vec>& neighbors) {
  if (neighbors.empty()) throw std::invalid_argument("empty neighbor list");
  std::vector<double> d2(neighbors.size());
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    if (neighbors[i].size() != z_u.size()) throw std::invalid_argument("neighbor dimension mismatch");
    d2[i] = (z_u - neighbors[i]).squaredNorm();
  }
  return detail::weights_from_sq_dists(d2);
}

inline Vec community_weights(const Vec& z_u, const CommunityModel& com) {
  if (z_u.size() != com.dim()) throw std::invalid_argument("community dimension mismatch");
  std::vector<double> d2(com.k());
  for (int k = 0; k < com.k(); ++k) {
    d2[k] = (z_u - com.embeddings().row(k).transpose()).squaredNorm();
  }
  return detail::weights_from_sq_dists(d2);
}

/// Forward intermediates kept for the trainer's backward pass.
struct NeighborhoodTape {
  Vec value;                   ///< delta_ne * sum
  Vec sum;                     ///< sum_i a_i F(dt_i) (x) z_i, before the delta scaling
  Vec weights;                 ///< affinity weight per history entry
  std::vector<double> deltas;  ///< raw time delta per entry
};

/// Influence of a node's historical neighbors: affinity-weighted, time-feature
/// modulated aggregation of their embeddings, scaled by delta_ne.
/// neighbor_embeddings[i] must correspond to u.history.entries()[i] and hold
/// that neighbor's latest stored embedding.
inline NeighborhoodTape neighborhood_influence_tape(const NodeState& u,
                                                    const std::vector<Vec>& neighbor_embeddings,
                                                    double event_time, const TimeEncoder& enc) {
  const auto& entries = u.history.entries();
  if (entries.empty()) throw std::invalid_argument("empty history");
  if (neighbor_embeddings.size() != entries.size()) {
    throw std::invalid_argument("history/embedding count mismatch");
  }
  NeighborhoodTape tape;
  tape.weights = affinity_weights(u.embedding, neighbor_embeddings);
  tape.deltas.resize(entries.size());
  tape.sum = Vec::Zero(u.embedding.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double dt = event_time - entries[i].time;
    if (dt < 0.0) throw DataError("history entry in the future of the event");
    tape.deltas[i] = dt;
    tape.sum += tape.weights[static_cast<int>(i)] *
                enc.encode(dt).cwiseProduct(neighbor_embeddings[i]);
  }
  tape.value = u.delta_ne * tape.sum;
  return tape;
}

inline Vec neighborhood_influence(const NodeState& u, const std::vector<Vec>& neighbor_embeddings,
                                  double event_time, const TimeEncoder& enc) {
  return neighborhood_influence_tape(u, neighbor_embeddings, event_time, enc).value;
}

struct CommunityTape {
  Vec value;    ///< delta_co * sum
  Vec sum;      ///< sum_k a_k z_ck
  Vec weights;  ///< community affinity weights
};

/// Community influence: affinity-weighted sum of community embeddings scaled
/// by delta_co.
inline CommunityTape community_influence_tape(const NodeState& u, const CommunityModel& com) {
  CommunityTape tape;
  tape.weights = community_weights(u.embedding, com);
  tape.sum = com.embeddings().transpose() * tape.weights;
  tape.value = u.delta_co * tape.sum;
  return tape;
}

inline Vec community_influence(const NodeState& u, const CommunityModel& com) {
  return community_influence_tape(u, com).value;
}

/// Index of the largest weight; ties resolve to the lowest index.
inline int argmax_weight(const Vec& w) {
  int best = 0;
  for (int k = 1; k < w.size(); ++k) {
    if (w[k] > w[best]) best = k;
  }
  return best;
}

/// Moves the node's embedding delta into its highest-affinity community
/// (affinity measured against the post-update embedding) and records the
/// assignment. Returns the chosen community index.
inline int community_update(CommunityModel& com, int node, const Vec& z_old, const Vec& z_new) {
  if (node < 0 || node >= static_cast<int>(com.assignment().size())) {
    throw std::invalid_argument("node index out of range");
  }
  const int best = argmax_weight(community_weights(z_new, com));
  com.embeddings().row(best) += (z_new - z_old).transpose();
  com.assignment()[node] = best;
  return best;
}

}  // namespace mnci
