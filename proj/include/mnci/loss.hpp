#pragma once

#include <vector>

#include "mnci/common.hpp"
#include "mnci/influence.hpp"

namespace mnci {

struct PairTerm {
  double value = 0.0;
  Vec grad_u, grad_v;
  std::vector<Vec> grad_negatives;
};

/// Attraction/repulsion term for one interaction: log sigmoid of the negative
/// squared distance to the partner, minus the same quantity summed over the
/// drawn negatives (the noise expectation estimated by the empirical mean, so
/// the Q factor cancels against it).
inline PairTerm pair_term(const Vec& z_u, const Vec& z_v, const std::vector<Vec>& negatives,
                          int expected_count = -1) {
  if (z_v.size() != z_u.size()) throw std::invalid_argument("pair dimension mismatch");
  if (expected_count >= 0 && static_cast<int>(negatives.size()) != expected_count) {
    throw std::invalid_argument("negative sample count mismatch");
  }
  PairTerm r;
  const Vec diff = z_u - z_v;
  const double d2 = diff.squaredNorm();
  r.value = log_sigmoid_neg(d2);
  // d/dD of log sigmoid(-D) is -sigmoid(D)
  r.grad_u = -sigmoid(d2) * 2.0 * diff;
  r.grad_v = sigmoid(d2) * 2.0 * diff;
  r.grad_negatives.reserve(negatives.size());
  for (const Vec& z_n : negatives) {
    if (z_n.size() != z_u.size()) throw std::invalid_argument("negative dimension mismatch");
    const Vec ndiff = z_u - z_n;
    const double nd2 = ndiff.squaredNorm();
    r.value -= log_sigmoid_neg(nd2);
    r.grad_u += sigmoid(nd2) * 2.0 * ndiff;
    r.grad_negatives.push_back(-sigmoid(nd2) * 2.0 * ndiff);
  }
  return r;
}

struct CommunityTerm {
  double value = 0.0;
  Vec grad_node;
  Mat grad_communities;  // one row per community
  int best = 0;
};

/// Log of the largest normalized community affinity. The max picks the
/// community; the normalization couples the gradient to every community
/// embedding.
inline CommunityTerm community_term(const Vec& z_u, const CommunityModel& com) {
  if (z_u.size() != com.dim()) throw std::invalid_argument("community dimension mismatch");
  const int k = com.k();
  std::vector<double> d2(k);
  for (int j = 0; j < k; ++j) {
    d2[j] = (z_u - com.embeddings().row(j).transpose()).squaredNorm();
  }
  const Vec a = detail::weights_from_sq_dists(d2);

  CommunityTerm r;
  r.best = argmax_weight(a);
  // The max normalized weight is at least (1/2)/K, so its log never
  // underflows no matter how far the communities sit.
  r.value = std::log(a[r.best]);

  // s_j = sigmoid(-d2_j) stays in (0, 1/2]; 1 - s_j is well conditioned.
  r.grad_node = Vec::Zero(z_u.size());
  r.grad_communities = Mat::Zero(k, z_u.size());
  for (int j = 0; j < k; ++j) {
    const double s_j = sigmoid(-d2[j]);
    const Vec diff = z_u - com.embeddings().row(j).transpose();
    r.grad_node += 2.0 * a[j] * (1.0 - s_j) * diff;
    r.grad_communities.row(j) = (-2.0 * a[j] * (1.0 - s_j) * diff).transpose();
  }
  const double s_best = sigmoid(-d2[r.best]);
  const Vec best_diff = z_u - com.embeddings().row(r.best).transpose();
  r.grad_node += -2.0 * (1.0 - s_best) * best_diff;
  r.grad_communities.row(r.best) += (2.0 * (1.0 - s_best) * best_diff).transpose();
  return r;
}

}  // namespace mnci
