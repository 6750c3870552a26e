#pragma once

#include <cmath>
#include <stdexcept>

#include "mnci/common.hpp"

namespace mnci {

/// Gate and candidate parameters of the three-gate recurrent cell. Each matrix
/// maps the 3d concatenation [z_prev | ne | co] to d outputs.
struct AggregatorParams {
  Mat w_update, w_reset_ne, w_reset_co, w_cand;  // d x 3d
  Vec b_update, b_reset_ne, b_reset_co, b_cand;  // d

  int dim() const { return static_cast<int>(b_update.size()); }

  /// Fan-based uniform init: entries in [-a, a] with a = sqrt(6 / (d + 3d)).
  /// Biases start at zero.
  static AggregatorParams init(int dim, Rng& rng) {
    if (dim <= 0) throw std::invalid_argument("dim must be positive");
    const double a = std::sqrt(6.0 / (4.0 * dim));
    AggregatorParams p;
    for (Mat* w : {&p.w_update, &p.w_reset_ne, &p.w_reset_co, &p.w_cand}) {
      w->resize(dim, 3 * dim);
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < 3 * dim; ++j) (*w)(i, j) = rng.uniform(-a, a);
      }
    }
    p.b_update = Vec::Zero(dim);
    p.b_reset_ne = Vec::Zero(dim);
    p.b_reset_co = Vec::Zero(dim);
    p.b_cand = Vec::Zero(dim);
    return p;
  }

  static AggregatorParams zeros(int dim) {
    AggregatorParams p;
    for (Mat* w : {&p.w_update, &p.w_reset_ne, &p.w_reset_co, &p.w_cand}) {
      *w = Mat::Zero(dim, 3 * dim);
    }
    for (Vec* b : {&p.b_update, &p.b_reset_ne, &p.b_reset_co, &p.b_cand}) {
      *b = Vec::Zero(dim);
    }
    return p;
  }

  bool all_finite() const {
    return w_update.allFinite() && w_reset_ne.allFinite() && w_reset_co.allFinite() &&
           w_cand.allFinite() && b_update.allFinite() && b_reset_ne.allFinite() &&
           b_reset_co.allFinite() && b_cand.allFinite();
  }
};

using AggregatorGrads = AggregatorParams;

/// Activations of one forward pass, kept for the exact backward pass.
struct CellTape {
  Vec input;       ///< [z_prev | ne | co]
  Vec update_gate; ///< components in (0, 1)
  Vec reset_ne;    ///< components in (0, 1)
  Vec reset_co;    ///< components in (0, 1)
  Vec cand_input;  ///< [z_prev | reset_ne (x) ne | reset_co (x) co]
  Vec candidate;   ///< components in (-1, 1)
};

struct CellResult {
  Vec output;
  CellTape tape;
};

/// One step of the modified recurrent cell: the update gate blends the
/// previous embedding with a candidate state built from gate-filtered
/// neighborhood and community influences. Output components lie between the
/// corresponding components of z_prev and the candidate.
inline CellResult cell_forward(const Vec& z_prev, const Vec& ne, const Vec& co,
                               const AggregatorParams& p) {
  const int d = p.dim();
  if (z_prev.size() != d || ne.size() != d || co.size() != d) {
    throw std::invalid_argument("cell input dimension mismatch");
  }
  if (!z_prev.allFinite() || !ne.allFinite() || !co.allFinite()) {
    throw NumericError("non-finite cell input");
  }
  CellResult r;
  CellTape& t = r.tape;
  t.input.resize(3 * d);
  t.input << z_prev, ne, co;

  auto sig = [](double x) { return sigmoid(x); };
  t.update_gate = (p.w_update * t.input + p.b_update).unaryExpr(sig);
  t.reset_ne = (p.w_reset_ne * t.input + p.b_reset_ne).unaryExpr(sig);
  t.reset_co = (p.w_reset_co * t.input + p.b_reset_co).unaryExpr(sig);

  t.cand_input.resize(3 * d);
  t.cand_input << z_prev, t.reset_ne.cwiseProduct(ne), t.reset_co.cwiseProduct(co);
  t.candidate = (p.w_cand * t.cand_input + p.b_cand).array().tanh();

  r.output = (Vec::Ones(d) - t.update_gate).cwiseProduct(z_prev) +
             t.update_gate.cwiseProduct(t.candidate);
  return r;
}

struct CellInputGrads {
  Vec z_prev, ne, co;
};

/// Exact analytic backward pass for cell_forward. Parameter gradients are
/// accumulated into `acc`; gradients for the three inputs are returned.
inline CellInputGrads cell_backward(const AggregatorParams& p, const CellTape& t,
                                    const Vec& upstream, AggregatorGrads& acc) {
  const int d = p.dim();
  if (upstream.size() != d || t.input.size() != 3 * d) {
    throw std::invalid_argument("cell backward dimension mismatch");
  }
  const auto z_prev = t.input.head(d);
  const auto ne = t.input.segment(d, d);
  const auto co = t.input.tail(d);

  CellInputGrads g;
  g.z_prev = upstream.cwiseProduct(Vec::Ones(d) - t.update_gate);
  g.ne = Vec::Zero(d);
  g.co = Vec::Zero(d);

  const Vec d_candidate = upstream.cwiseProduct(t.update_gate);
  const Vec d_update = upstream.cwiseProduct(t.candidate - z_prev);

  // candidate = tanh(w_cand * cand_input + b_cand)
  const Vec ds_cand =
      d_candidate.cwiseProduct(Vec::Ones(d) - t.candidate.cwiseProduct(t.candidate));
  acc.w_cand.noalias() += ds_cand * t.cand_input.transpose();
  acc.b_cand += ds_cand;
  const Vec d_cand_input = p.w_cand.transpose() * ds_cand;
  g.z_prev += d_cand_input.head(d);
  const Vec d_reset_ne = d_cand_input.segment(d, d).cwiseProduct(ne);
  const Vec d_reset_co = d_cand_input.tail(d).cwiseProduct(co);
  g.ne += d_cand_input.segment(d, d).cwiseProduct(t.reset_ne);
  g.co += d_cand_input.tail(d).cwiseProduct(t.reset_co);

  auto sigmoid_back = [d](const Vec& dgate, const Vec& gate) {
    return Vec(dgate.cwiseProduct(gate).cwiseProduct(Vec::Ones(d) - gate));
  };
  const Vec ds_update = sigmoid_back(d_update, t.update_gate);
  const Vec ds_reset_ne = sigmoid_back(d_reset_ne, t.reset_ne);
  const Vec ds_reset_co = sigmoid_back(d_reset_co, t.reset_co);

  acc.w_update.noalias() += ds_update * t.input.transpose();
  acc.w_reset_ne.noalias() += ds_reset_ne * t.input.transpose();
  acc.w_reset_co.noalias() += ds_reset_co * t.input.transpose();
  acc.b_update += ds_update;
  acc.b_reset_ne += ds_reset_ne;
  acc.b_reset_co += ds_reset_co;

  const Vec d_input = p.w_update.transpose() * ds_update +
                      p.w_reset_ne.transpose() * ds_reset_ne +
                      p.w_reset_co.transpose() * ds_reset_co;
  g.z_prev += d_input.head(d);
  g.ne += d_input.segment(d, d);
  g.co += d_input.tail(d);
  return g;
}

}  // namespace mnci
