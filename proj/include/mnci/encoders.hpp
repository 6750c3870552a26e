#pragma once

#include <cmath>
#include <stdexcept>

#include "mnci/common.hpp"

namespace mnci {

/// Sinusoidal encoding of a node's rank in the first-appearance order.
/// Component 2i holds sin(pos / 10000^(2i/d)), component 2i+1 the cosine.
inline Vec positional_encode(std::int64_t position, int dim) {
  if (dim <= 0 || dim % 2 != 0) throw std::invalid_argument("dim must be even and positive");
  if (position < 0) throw std::invalid_argument("position must be >= 0");
  Vec out(dim);
  const double p = static_cast<double>(position);
  for (int i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / dim);
    out[2 * i] = std::sin(p * freq);
    out[2 * i + 1] = std::cos(p * freq);
  }
  return out;
}

struct PositionalEncoder {
  int dim;

  explicit PositionalEncoder(int d) : dim(d) {
    if (d <= 0 || d % 2 != 0) throw std::invalid_argument("dim must be even and positive");
  }

  Vec encode(std::int64_t position) const { return positional_encode(position, dim); }
};

/// Fourier time features with learnable frequencies: for elapsed time t the
/// output interleaves [cos(w_k t), sin(w_k t)] over the d/2 frequencies.
/// Raw deltas are divided by time_scale before encoding.
class TimeEncoder {
 public:
  explicit TimeEncoder(Vec omega, double time_scale = 1.0)
      : omega_(std::move(omega)), time_scale_(time_scale) {
    if (omega_.size() < 1) throw std::invalid_argument("omega must be non-empty");
    if (!omega_.allFinite()) throw NumericError("non-finite frequency in time encoder");
    if (!(time_scale > 0.0)) throw std::invalid_argument("time_scale must be > 0");
  }

  /// Frequencies drawn i.i.d. from N(0, sigma^2).
  static TimeEncoder init(int dim, double sigma, Rng& rng, double time_scale = 1.0) {
    if (dim <= 0 || dim % 2 != 0) throw std::invalid_argument("dim must be even and positive");
    Vec omega(dim / 2);
    for (int k = 0; k < dim / 2; ++k) omega[k] = sigma * rng.normal();
    return TimeEncoder(std::move(omega), time_scale);
  }

  int dim() const { return 2 * static_cast<int>(omega_.size()); }
  const Vec& omega() const { return omega_; }
  Vec& omega() { return omega_; }
  double time_scale() const { return time_scale_; }

  Vec encode(double delta_t) const {
    if (delta_t < 0.0) throw DataError("negative time delta");
    const double s = delta_t / time_scale_;
    Vec out(dim());
    for (int k = 0; k < omega_.size(); ++k) {
      out[2 * k] = std::cos(omega_[k] * s);
      out[2 * k + 1] = std::sin(omega_[k] * s);
    }
    return out;
  }

  /// Gradient of <upstream, encode(delta_t)> with respect to omega.
  Vec backward(double delta_t, const Vec& upstream) const {
    if (delta_t < 0.0) throw DataError("negative time delta");
    if (upstream.size() != dim()) throw std::invalid_argument("upstream size mismatch");
    const double s = delta_t / time_scale_;
    Vec grad(omega_.size());
    for (int k = 0; k < omega_.size(); ++k) {
      const double c = std::cos(omega_[k] * s);
      const double n = std::sin(omega_[k] * s);
      grad[k] = upstream[2 * k] * (-s * n) + upstream[2 * k + 1] * (s * c);
    }
    return grad;
  }

 private:
  Vec omega_;
  double time_scale_;
};

inline Vec time_encode(double delta_t, const TimeEncoder& enc) { return enc.encode(delta_t); }

inline Vec time_encode_backward(double delta_t, const TimeEncoder& enc, const Vec& upstream) {
  return enc.backward(delta_t, upstream);
}

}  // namespace mnci
