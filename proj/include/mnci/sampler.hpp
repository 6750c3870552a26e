#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mnci/common.hpp"

namespace mnci {

/// Draws noise nodes with probability proportional to degree^power
/// (the 3/4-power unigram convention). Deterministic given the seed.
class NegativeSampler {
 public:
  NegativeSampler(const std::vector<double>& degrees, std::uint64_t seed, double power = 0.75)
      : rng_(seed, /*stream=*/4) {
    if (degrees.empty()) throw std::invalid_argument("empty degree vector");
    cum_.resize(degrees.size());
    prob_.resize(degrees.size());
    double total = 0.0;
    for (std::size_t i = 0; i < degrees.size(); ++i) {
      if (degrees[i] < 0.0) throw std::invalid_argument("negative degree");
      const double mass = degrees[i] > 0.0 ? std::pow(degrees[i], power) : 0.0;
      total += mass;
      cum_[i] = total;
      prob_[i] = mass;
      if (mass > 0.0) ++positive_count_;
    }
    if (total <= 0.0) throw std::invalid_argument("all degrees are zero");
    for (double& p : prob_) p /= total;
    total_ = total;
  }

  /// Normalized sampling probabilities, by node index.
  const std::vector<double>& probabilities() const { return prob_; }

  int draw_one() {
    const double u = rng_.uniform() * total_;
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    if (it == cum_.end()) --it;
    return static_cast<int>(it - cum_.begin());
  }

  /// `count` i.i.d. draws with the excluded ids rejected. Errors when no node
  /// with positive mass remains eligible.
  std::vector<int> draw(int count, const std::vector<int>& exclude) {
    if (count < 0) throw std::invalid_argument("negative draw count");
    int excluded_mass = 0;
    for (std::size_t i = 0; i < exclude.size(); ++i) {
      const int id = exclude[i];
      if (std::find(exclude.begin(), exclude.begin() + i, id) != exclude.begin() + i) continue;
      if (id >= 0 && id < static_cast<int>(prob_.size()) && prob_[id] > 0.0) ++excluded_mass;
    }
    if (positive_count_ - excluded_mass <= 0) {
      throw DataError("no eligible negative-sample nodes");
    }
    std::vector<int> out;
    out.reserve(count);
    while (static_cast<int>(out.size()) < count) {
      const int cand = draw_one();
      if (std::find(exclude.begin(), exclude.end(), cand) != exclude.end()) continue;
      out.push_back(cand);
    }
    return out;
  }

  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  std::vector<double> cum_;
  std::vector<double> prob_;
  Rng rng_;
  double total_ = 0.0;
  int positive_count_ = 0;
};

inline std::vector<int> draw_negatives(NegativeSampler& sampler, int count,
                                       const std::vector<int>& exclude) {
  return sampler.draw(count, exclude);
}

}  // namespace mnci
