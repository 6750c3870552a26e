// Scalar-loop reference implementations used as independent oracles. These
// deliberately avoid the library's vectorized code paths and its stabilized
// weight formulas: everything is plain double arithmetic over std::vector.
#pragma once

#include <cmath>
#include <vector>

#include "mnci/mnci.hpp"

namespace ref {

using dvec = std::vector<double>;
using dmat = std::vector<std::vector<double>>;

inline dvec to_vec(const mnci::Vec& v) {
  dvec out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

inline dmat to_mat(const mnci::Mat& m) {
  dmat out(m.rows(), dvec(m.cols()));
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double sq_dist(const dvec& a, const dvec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Normalized sigmoid(-|z_u - z_i|^2) weights, naive formula.
inline dvec affinity_weights(const dvec& z_u, const std::vector<dvec>& others) {
  dvec w(others.size());
  double total = 0.0;
  for (std::size_t i = 0; i < others.size(); ++i) {
    w[i] = sigmoid(-sq_dist(z_u, others[i]));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

inline dvec time_features(const dvec& omega, double scaled_dt) {
  dvec f(2 * omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k) {
    f[2 * k] = std::cos(omega[k] * scaled_dt);
    f[2 * k + 1] = std::sin(omega[k] * scaled_dt);
  }
  return f;
}

// delta * sum_i a_i F(t_n - t_i) (x) z_i with every loop written out.
inline dvec neighborhood_influence(const dvec& z_u, const std::vector<dvec>& neighbor_embeddings,
                                   const dvec& entry_times, double event_time, const dvec& omega,
                                   double time_scale, double delta_ne) {
  const std::size_t d = z_u.size();
  const dvec a = affinity_weights(z_u, neighbor_embeddings);
  dvec out(d, 0.0);
  for (std::size_t i = 0; i < neighbor_embeddings.size(); ++i) {
    const dvec f = time_features(omega, (event_time - entry_times[i]) / time_scale);
    for (std::size_t j = 0; j < d; ++j) {
      out[j] += a[i] * f[j] * neighbor_embeddings[i][j];
    }
  }
  for (std::size_t j = 0; j < d; ++j) out[j] *= delta_ne;
  return out;
}

// delta * sum_k a_k z_ck.
inline dvec community_influence(const dvec& z_u, const std::vector<dvec>& communities,
                                double delta_co) {
  const std::size_t d = z_u.size();
  const dvec a = affinity_weights(z_u, communities);
  dvec out(d, 0.0);
  for (std::size_t k = 0; k < communities.size(); ++k) {
    for (std::size_t j = 0; j < d; ++j) out[j] += a[k] * communities[k][j];
  }
  for (std::size_t j = 0; j < d; ++j) out[j] *= delta_co;
  return out;
}

inline dvec affine_sigmoid(const dmat& w, const dvec& b, const dvec& x) {
  dvec out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < x.size(); ++j) s += w[i][j] * x[j];
    out[i] = sigmoid(s);
  }
  return out;
}

// The three-gate cell, evaluated dimension by dimension.
inline dvec cell_forward(const dvec& z_prev, const dvec& ne, const dvec& co, const dmat& w_update,
                         const dmat& w_reset_ne, const dmat& w_reset_co, const dmat& w_cand,
                         const dvec& b_update, const dvec& b_reset_ne, const dvec& b_reset_co,
                         const dvec& b_cand) {
  const std::size_t d = z_prev.size();
  dvec x(3 * d);
  for (std::size_t j = 0; j < d; ++j) {
    x[j] = z_prev[j];
    x[d + j] = ne[j];
    x[2 * d + j] = co[j];
  }
  const dvec ug = affine_sigmoid(w_update, b_update, x);
  const dvec ng = affine_sigmoid(w_reset_ne, b_reset_ne, x);
  const dvec cg = affine_sigmoid(w_reset_co, b_reset_co, x);
  dvec xc(3 * d);
  for (std::size_t j = 0; j < d; ++j) {
    xc[j] = z_prev[j];
    xc[d + j] = ng[j] * ne[j];
    xc[2 * d + j] = cg[j] * co[j];
  }
  dvec out(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = b_cand[i];
    for (std::size_t j = 0; j < 3 * d; ++j) s += w_cand[i][j] * xc[j];
    const double cand = std::tanh(s);
    out[i] = (1.0 - ug[i]) * z_prev[i] + ug[i] * cand;
  }
  return out;
}

// One bias-corrected Adam step for a single scalar, from the textbook update.
inline double adam_scalar_step(double param, double grad, double& m, double& v, long& t, double lr,
                               double beta1, double beta2, double eps) {
  t += 1;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double mhat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
  const double vhat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
  return param - lr * mhat / (std::sqrt(vhat) + eps);
}

}  // namespace ref
