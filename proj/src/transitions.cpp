#include "lramp/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lramp {

namespace {

constexpr Eigen::Index kPairBlock = 4096;

using Arr = Eigen::ArrayXd;
using ArrMat = Eigen::ArrayXXd;

void check_scalar_args(int r, const QuadratureSpec& quad) {
  if (r < 2) throw std::invalid_argument("m_r: r must be >= 2");
  if (quad.method != QuadratureSpec::Method::monte_carlo)
    throw std::invalid_argument("m_r: only monte carlo quadrature is supported");
  if (quad.samples < 2) throw std::invalid_argument("m_r: needs >= 2 samples");
}

void fill_block(ArrMat& z, const QuadratureSpec& quad, Eigen::Index block_index) {
  RngStream rng(derive_seed(quad.seed, RngUse::quadrature, block_index));
  double* data = z.data();
  const Eigen::Index count = z.size();
  for (Eigen::Index i = 0; i < count; ++i) data[i] = rng.normal();
}

// Share of posterior weight lost by the planted group, per sample. Computed
// in log space so values near 0 keep full relative precision.
void losing_share(const ArrMat& u, double shift, Arr& eps, Arr& work_max, Arr& work_t) {
  const Eigen::Index r = u.cols();
  work_max = u.rightCols(r - 1).rowwise().maxCoeff();
  work_t = (u.rightCols(r - 1).colwise() - work_max).exp().rowwise().sum().log() + work_max;
  work_t = shift + u.col(0) - work_t;  // log of winning-to-losing odds
  eps = (-work_t.abs()).exp();
  eps = (work_t >= 0.0).select(eps / (1.0 + eps), 1.0 / (1.0 + eps));
}

struct CurveAccumulator {
  std::vector<double> sum, sum_sq;
  explicit CurveAccumulator(std::size_t points) : sum(points, 0.0), sum_sq(points, 0.0) {}
};

}  // namespace

std::vector<double> default_x_grid(int r, int points) {
  if (r < 2) throw std::invalid_argument("default_x_grid: r must be >= 2");
  if (points < 2) throw std::invalid_argument("default_x_grid: needs >= 2 points");
  const double lo = 1e-3 * r * r;
  const double hi = 10.0 * r * r * std::log(std::max(2, r));
  std::vector<double> xs(points);
  const double step = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) xs[i] = lo * std::exp(step * i);
  return xs;
}

ScalarSeCurve scalar_se_curve(int r, const std::vector<double>& xs,
                              const QuadratureSpec& quad) {
  check_scalar_args(r, quad);
  for (double x : xs)
    if (!(x >= 0.0)) throw std::invalid_argument("scalar_se_curve: x must be >= 0");

  const Eigen::Index pairs = (quad.samples + 1) / 2;
  const Eigen::Index blocks = (pairs + kPairBlock - 1) / kPairBlock;
  const std::size_t points = xs.size();
  std::vector<CurveAccumulator> acc(blocks, CurveAccumulator(points));

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index lo = blk * kPairBlock;
    const Eigen::Index count = std::min(pairs - lo, kPairBlock);
    ArrMat z(count, r);
    fill_block(z, quad, blk);
    ArrMat u(count, r);
    Arr eps_plus(count), eps_minus(count), work_max(count), work_t(count), pair(count);
    for (std::size_t k = 0; k < points; ++k) {
      const double x = xs[k];
      if (x == 0.0) continue;  // exactly zero by symmetry
      const double sigma = std::sqrt(x / r);
      u = sigma * z;
      losing_share(u, x / r, eps_plus, work_max, work_t);
      u = -u;
      losing_share(u, x / r, eps_minus, work_max, work_t);
      pair = 0.5 * (eps_plus + eps_minus);
      acc[blk].sum[k] = pair.sum();
      acc[blk].sum_sq[k] = pair.square().sum();
    }
  }

  ScalarSeCurve curve;
  curve.r = r;
  curve.xs = xs;
  curve.quad = quad;
  curve.values.resize(points);
  curve.std_errors.resize(points);
  const double affine = static_cast<double>(r) / (r - 1);
  for (std::size_t k = 0; k < points; ++k) {
    double total = 0.0, total_sq = 0.0;
    for (Eigen::Index blk = 0; blk < blocks; ++blk) {
      total += acc[blk].sum[k];
      total_sq += acc[blk].sum_sq[k];
    }
    const double c = static_cast<double>(pairs);
    const double mean = total / c;
    double var = total_sq / c - mean * mean;
    var = std::max(0.0, var) * (c / std::max(1.0, c - 1.0));
    curve.values[k] = xs[k] == 0.0 ? 0.0 : 1.0 - affine * mean;
    curve.std_errors[k] = xs[k] == 0.0 ? 0.0 : affine * std::sqrt(var / c);
  }
  return curve;
}

MrEstimate m_r(int r, double x, const QuadratureSpec& quad) {
  check_scalar_args(r, quad);
  if (!(x >= 0.0)) throw std::invalid_argument("m_r: x must be >= 0");
  if (x == 0.0) return {0.0, 0.0};
  const ScalarSeCurve curve = scalar_se_curve(r, {x}, quad);
  return {curve.values[0], curve.std_errors[0]};
}

BIterationResult iterate_b(int r, double delta, double b0, const QuadratureSpec& quad,
                           double tol, int t_max) {
  check_scalar_args(r, quad);
  if (!(delta > 0.0)) throw std::invalid_argument("iterate_b: delta must be > 0");
  if (!(b0 >= 0.0 && b0 <= 1.0)) throw std::invalid_argument("iterate_b: b0 must be in [0,1]");
  BIterationResult result;
  double b = b0;
  for (int it = 0; it < t_max; ++it) {
    double next = m_r(r, b / delta, quad).value;
    next = std::clamp(next, 0.0, 1.0);
    result.iterations = it + 1;
    const bool done = std::abs(next - b) < tol;
    b = next;
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.b = b;
  result.branch = b > 1e-3 ? SeBranch::far : SeBranch::uniform;
  return result;
}

double delta_c(int r) {
  if (r < 2) throw std::invalid_argument("delta_c: r must be >= 2");
  return 1.0 / (static_cast<double>(r) * r);
}

double sbm_detection_gap(int r, double p_out, double n) {
  if (!(p_out > 0.0 && p_out < 1.0))
    throw std::invalid_argument("sbm_detection_gap: p_out must lie inside (0,1)");
  if (!(n > 0.0)) throw std::invalid_argument("sbm_detection_gap: n must be positive");
  return r * std::sqrt(p_out * (1.0 - p_out)) / std::sqrt(n);
}

double community_mse_from_b(int r, double b) {
  return (1.0 - 1.0 / r) * (1.0 - b);
}

namespace {

double ratio_objective(int r, double x, const QuadratureSpec& quad) {
  return m_r(r, x, quad).value / x;
}

}  // namespace

SpinodalResult find_spinodal(const ScalarSeCurve& curve, double rel_tol) {
  const int r = curve.r;
  if (r <= 4) return {delta_c(r), TransitionOrder::second};
  const std::size_t points = curve.xs.size();
  if (points < 3) throw std::invalid_argument("find_spinodal: grid too small");
  std::size_t best = 0;
  double best_ratio = -1.0;
  for (std::size_t k = 0; k < points; ++k) {
    if (curve.xs[k] <= 0.0) continue;
    const double ratio = curve.values[k] / curve.xs[k];
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
  }
  double lo = curve.xs[best > 0 ? best - 1 : best];
  double hi = curve.xs[std::min(points - 1, best + 1)];
  // Golden-section on the common-random-number objective, smooth in x.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double f1 = ratio_objective(r, x1, curve.quad);
  double f2 = ratio_objective(r, x2, curve.quad);
  while ((hi - lo) > rel_tol * lo) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = ratio_objective(r, x2, curve.quad);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = ratio_objective(r, x1, curve.quad);
    }
  }
  return {std::max({best_ratio, f1, f2}), TransitionOrder::first};
}

SpinodalResult find_spinodal(int r, const QuadratureSpec& quad,
                             const std::vector<double>& xs, double rel_tol) {
  if (r <= 4) return {delta_c(r), TransitionOrder::second};
  const ScalarSeCurve curve =
      scalar_se_curve(r, xs.empty() ? default_x_grid(r) : xs, quad);
  return find_spinodal(curve, rel_tol);
}

double find_static(const ScalarSeCurve& curve, double rel_tol) {
  const int r = curve.r;
  if (r <= 4)
    throw std::invalid_argument("find_static: equal-area rule needs the first-order regime");
  const std::size_t points = curve.xs.size();
  if (points < 3) throw std::invalid_argument("find_static: grid too small");

  // Cumulative trapezoid of the curve, anchored at (0, 0).
  std::vector<double> cumulative(points);
  cumulative[0] = 0.5 * curve.xs[0] * curve.values[0];
  for (std::size_t k = 1; k < points; ++k)
    cumulative[k] = cumulative[k - 1] + 0.5 * (curve.xs[k] - curve.xs[k - 1]) *
                                            (curve.values[k] + curve.values[k - 1]);
  auto area_gap = [&](std::size_t k) {
    return cumulative[k] - 0.5 * curve.xs[k] * curve.values[k];
  };

  // The gap dips negative in the convex region and recovers as the curve
  // saturates; locate the last upward crossing.
  std::size_t cross = points;
  for (std::size_t k = points - 1; k >= 1; --k) {
    if (area_gap(k - 1) < 0.0 && area_gap(k) >= 0.0) {
      cross = k;
      break;
    }
  }
  if (cross == points)
    throw std::runtime_error(
        "find_static: no sign change of the area gap on the grid; widen the x grid "
        "(r = " + std::to_string(r) + ")");

  const double base_x = curve.xs[cross - 1];
  const double base_m = curve.values[cross - 1];
  const double base_c = cumulative[cross - 1];
  double lo = base_x, hi = curve.xs[cross];
  double x_mid = hi, m_mid = curve.values[cross];
  while ((hi - lo) > rel_tol * lo) {
    x_mid = 0.5 * (lo + hi);
    m_mid = m_r(r, x_mid, curve.quad).value;
    const double cum_mid = base_c + 0.5 * (x_mid - base_x) * (base_m + m_mid);
    if (cum_mid - 0.5 * x_mid * m_mid < 0.0)
      lo = x_mid;
    else
      hi = x_mid;
  }
  return m_mid / x_mid;
}

double find_static(int r, const QuadratureSpec& quad, const std::vector<double>& xs,
                   double rel_tol) {
  const ScalarSeCurve curve =
      scalar_se_curve(r, xs.empty() ? default_x_grid(r) : xs, quad);
  return find_static(curve, rel_tol);
}

AsymptoticReference asymptotic_reference(int r) {
  if (r < 2) throw std::invalid_argument("asymptotic_reference: r must be >= 2");
  const double rlog = r * std::log(static_cast<double>(r));
  return {1.0 / (2.0 * rlog), 1.0 / (4.0 * rlog)};
}

TransitionReport transition_report(int r, const QuadratureSpec& quad,
                                   const std::vector<double>& xs, double refine_rel_tol) {
  TransitionReport report;
  report.r = r;
  report.delta_c = delta_c(r);
  report.refine_rel_tol = refine_rel_tol;
  if (r <= 4) {
    report.order = TransitionOrder::second;
    return report;
  }
  const ScalarSeCurve curve =
      scalar_se_curve(r, xs.empty() ? default_x_grid(r) : xs, quad);
  report.order = TransitionOrder::first;
  report.delta_spinodal = find_spinodal(curve, refine_rel_tol).delta;
  report.delta_static = find_static(curve, refine_rel_tol);
  return report;
}

QuadratureSpec default_transition_quad(int r, std::uint64_t seed) {
  return QuadratureSpec::monte_carlo(r <= 32 ? 200000 : 1000000, seed);
}

}  // namespace lramp
