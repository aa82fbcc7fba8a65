#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace ucbqrl {

/// Probability distribution with finite support on the real line.
///
/// Stores a strictly increasing support, positive atom masses, and the
/// cumulative mass curve; the same object read through quantile() is a
/// left-continuous quantile curve. Support values closer than kValueTol are
/// fused at construction so round-off from repeated shift/mix cannot split a
/// true atom, and masses are renormalized so the CDF terminates at exactly 1.
/// Instances are immutable; every operation returns a new value, so
/// concurrent reads are safe.
class FiniteDist {
 public:
  /// Merge window for support values, and the equality window used when
  /// matching a query point against an atom in cdf/cdf_left/jump.
  static constexpr double kValueTol = 1e-12;
  /// Tolerance for probability-level comparisons (quantile levels, budgets).
  static constexpr double kProbTol = 1e-12;

  /// Builds a distribution from (value, mass) points, in any order.
  /// Throws std::invalid_argument if the list is empty, any mass is
  /// non-positive, or the masses do not sum to 1 within 1e-9.
  static FiniteDist from_points(std::span<const std::pair<double, double>> points);

  static FiniteDist dirac(double value);

  /// Left-continuous quantile: smallest support value x with cdf(x) >= q.
  /// Requires q in (0, 1]; quantile(1) is the maximum support value.
  double quantile(double q) const;

  /// P(X <= x), right-continuous, reaching 1 at the maximum support value.
  double cdf(double x) const;

  /// P(X < x).
  double cdf_left(double x) const;

  /// cdf(x) - cdf_left(x): the atom mass at x, 0 away from the support.
  double jump(double x) const;

  /// Support translated by r, masses unchanged.
  FiniteDist shifted(double r) const;

  /// Inverse-transform sample: quantile(u) for u in (0, 1]. Feeding
  /// independent uniforms reproduces the distribution in law.
  double inv_sample(double u) const { return quantile(u); }

  std::size_t size() const { return support_.size(); }
  double min_value() const { return support_.front(); }
  double max_value() const { return support_.back(); }
  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& masses() const { return masses_; }
  /// Cumulative masses; back() is exactly 1.
  const std::vector<double>& cum() const { return cum_; }

 private:
  FiniteDist() = default;

  // Sorts, merges values within kValueTol, renormalizes to exact unit mass.
  // Callers guarantee positive masses summing to ~1.
  static FiniteDist build(std::vector<std::pair<double, double>> points);

  std::vector<double> support_;
  std::vector<double> masses_;
  std::vector<double> cum_;

  friend FiniteDist mix(std::span<const double>, std::span<const FiniteDist>);
  friend FiniteDist upper_envelope(std::span<const FiniteDist>);
};

/// Mixture: CDF(x) = sum_i weights[i] * dists[i].cdf(x). Zero-weight
/// components are dropped; coincident support points are merged. Weights
/// must lie on the simplex within 1e-9 and match dists in length.
FiniteDist mix(std::span<const double> weights, std::span<const FiniteDist> dists);

/// Distribution whose CDF at every x is min_i dists[i].cdf(x); equivalently
/// its quantile curve is the pointwise maximum of the input quantile curves.
/// The list must be non-empty.
FiniteDist upper_envelope(std::span<const FiniteDist> dists);

/// 1-Wasserstein distance: the integral over u in (0,1] of
/// |quantile_a(u) - quantile_b(u)|, evaluated exactly on the merged grid of
/// cumulative-probability breakpoints.
double w1(const FiniteDist& a, const FiniteDist& b);

/// Total variation: half the l1 distance between atom masses on the union
/// support. Always in [0, 1].
double tv(const FiniteDist& a, const FiniteDist& b);

}  // namespace ucbqrl
