#include "ucbqrl/finite_dist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ucbqrl {

namespace {

constexpr double kMassSumTol = 1e-9;

}  // namespace

FiniteDist FiniteDist::build(std::vector<std::pair<double, double>> points) {
  std::sort(points.begin(), points.end());

  FiniteDist d;
  d.support_.reserve(points.size());
  d.masses_.reserve(points.size());
  for (const auto& [value, mass] : points) {
    if (!d.support_.empty() && value - d.support_.back() < kValueTol) {
      d.masses_.back() += mass;
    } else {
      d.support_.push_back(value);
      d.masses_.push_back(mass);
    }
  }

  const double total = std::accumulate(d.masses_.begin(), d.masses_.end(), 0.0);
  for (double& m : d.masses_) m /= total;
  // Nudge the largest atom so the float sum is exactly 1; the largest atom
  // has mass >= 1/n, so the ulp-scale adjustment cannot flip its sign.
  const double sum = std::accumulate(d.masses_.begin(), d.masses_.end(), 0.0);
  auto largest = std::max_element(d.masses_.begin(), d.masses_.end());
  *largest += 1.0 - sum;

  d.cum_.resize(d.masses_.size());
  std::partial_sum(d.masses_.begin(), d.masses_.end(), d.cum_.begin());
  d.cum_.back() = 1.0;
  return d;
}

FiniteDist FiniteDist::from_points(std::span<const std::pair<double, double>> points) {
  if (points.empty()) {
    throw std::invalid_argument("FiniteDist: empty point list");
  }
  double total = 0.0;
  for (const auto& [value, mass] : points) {
    if (!(mass > 0.0)) {
      throw std::invalid_argument("FiniteDist: non-positive mass " +
                                  std::to_string(mass) + " at value " +
                                  std::to_string(value));
    }
    total += mass;
  }
  if (std::abs(total - 1.0) > kMassSumTol) {
    throw std::invalid_argument("FiniteDist: masses sum to " +
                                std::to_string(total) + ", expected 1 within 1e-9");
  }
  return build({points.begin(), points.end()});
}

FiniteDist FiniteDist::dirac(double value) {
  FiniteDist d;
  d.support_ = {value};
  d.masses_ = {1.0};
  d.cum_ = {1.0};
  return d;
}

double FiniteDist::quantile(double q) const {
  if (!(q > 0.0) || q > 1.0) {
    throw std::invalid_argument("FiniteDist::quantile: level " + std::to_string(q) +
                                " outside (0, 1]");
  }
  // At exactly 1 the answer is the maximum support value even when the last
  // atom's mass is below the comparison tolerance.
  if (q == 1.0) return support_.back();
  const auto it = std::lower_bound(cum_.begin(), cum_.end(), q - kProbTol);
  return support_[static_cast<std::size_t>(it - cum_.begin())];
}

double FiniteDist::cdf(double x) const {
  const auto it = std::upper_bound(support_.begin(), support_.end(), x + kValueTol);
  const auto n = static_cast<std::size_t>(it - support_.begin());
  return n == 0 ? 0.0 : cum_[n - 1];
}

double FiniteDist::cdf_left(double x) const {
  const auto it = std::lower_bound(support_.begin(), support_.end(), x - kValueTol);
  const auto n = static_cast<std::size_t>(it - support_.begin());
  return n == 0 ? 0.0 : cum_[n - 1];
}

double FiniteDist::jump(double x) const { return cdf(x) - cdf_left(x); }

FiniteDist FiniteDist::shifted(double r) const {
  FiniteDist d;
  d.support_.reserve(support_.size());
  for (double v : support_) d.support_.push_back(v + r);
  d.masses_ = masses_;
  d.cum_ = cum_;
  return d;
}

FiniteDist mix(std::span<const double> weights, std::span<const FiniteDist> dists) {
  if (weights.size() != dists.size()) {
    throw std::invalid_argument("mix: " + std::to_string(weights.size()) +
                                " weights vs " + std::to_string(dists.size()) +
                                " distributions");
  }
  if (weights.empty()) {
    throw std::invalid_argument("mix: empty mixture");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < -FiniteDist::kProbTol) {
      throw std::invalid_argument("mix: negative weight " + std::to_string(w));
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kMassSumTol) {
    throw std::invalid_argument("mix: weights sum to " + std::to_string(total) +
                                ", expected 1 within 1e-9");
  }

  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    const auto& d = dists[i];
    for (std::size_t k = 0; k < d.size(); ++k) {
      points.emplace_back(d.support()[k], weights[i] * d.masses()[k]);
    }
  }
  return FiniteDist::build(std::move(points));
}

FiniteDist upper_envelope(std::span<const FiniteDist> dists) {
  if (dists.empty()) {
    throw std::invalid_argument("upper_envelope: empty list");
  }
  if (dists.size() == 1) return dists[0];

  std::vector<double> grid;
  for (const auto& d : dists) {
    grid.insert(grid.end(), d.support().begin(), d.support().end());
  }
  std::sort(grid.begin(), grid.end());
  std::vector<double> candidates;
  for (double x : grid) {
    if (candidates.empty() || x - candidates.back() >= FiniteDist::kValueTol) {
      candidates.push_back(x);
    }
  }

  std::vector<std::size_t> pos(dists.size(), 0);
  std::vector<std::pair<double, double>> points;
  double prev = 0.0;
  for (double x : candidates) {
    double lo = 1.0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
      const auto& sup = dists[i].support();
      while (pos[i] < sup.size() && sup[pos[i]] <= x + FiniteDist::kValueTol) ++pos[i];
      const double f = pos[i] == 0 ? 0.0 : dists[i].cum()[pos[i] - 1];
      lo = std::min(lo, f);
    }
    if (lo - prev > 0.0) {
      points.emplace_back(x, lo - prev);
      prev = lo;
    }
  }
  return FiniteDist::build(std::move(points));
}

double w1(const FiniteDist& a, const FiniteDist& b) {
  const auto& ca = a.cum();
  const auto& cb = b.cum();
  std::vector<double> grid;
  grid.reserve(ca.size() + cb.size());
  std::merge(ca.begin(), ca.end(), cb.begin(), cb.end(), std::back_inserter(grid));

  double acc = 0.0;
  double prev = 0.0;
  for (double u : grid) {
    const double width = u - prev;
    if (width > 0.0) {
      // Both quantile curves are constant on (prev, u], so the right
      // endpoint evaluates the integrand exactly.
      acc += width * std::abs(a.quantile(u) - b.quantile(u));
      prev = u;
    }
  }
  return acc;
}

double tv(const FiniteDist& a, const FiniteDist& b) {
  const auto& va = a.support();
  const auto& vb = b.support();
  std::size_t i = 0;
  std::size_t j = 0;
  double acc = 0.0;
  while (i < va.size() && j < vb.size()) {
    if (va[i] < vb[j] - FiniteDist::kValueTol) {
      acc += a.masses()[i++];
    } else if (vb[j] < va[i] - FiniteDist::kValueTol) {
      acc += b.masses()[j++];
    } else {
      acc += std::abs(a.masses()[i++] - b.masses()[j++]);
    }
  }
  while (i < va.size()) acc += a.masses()[i++];
  while (j < vb.size()) acc += b.masses()[j++];
  return std::min(1.0, 0.5 * acc);
}

}  // namespace ucbqrl
