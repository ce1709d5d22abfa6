#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lramp/transitions.hpp"

using namespace lramp;

TEST_CASE("scalar map boundary values") {
  const QuadratureSpec quad = QuadratureSpec::monte_carlo(100000, 3);
  const MrEstimate at_zero = m_r(3, 0.0, quad);
  CHECK(at_zero.value == 0.0);
  CHECK(at_zero.std_error == 0.0);
  CHECK(m_r(2, 200.0, quad).value > 0.999);
  CHECK_THROWS_AS(m_r(2, -1.0, quad), std::invalid_argument);
  CHECK_THROWS_AS(m_r(1, 1.0, quad), std::invalid_argument);
}

TEST_CASE("curve evaluation matches pointwise calls and stays monotone") {
  const int r = 5;
  const QuadratureSpec quad = QuadratureSpec::monte_carlo(200000, 5);
  const std::vector<double> xs = {0.5, 1.0, 2.0, 5.0, 12.0, 30.0, 75.0, 180.0};
  const ScalarSeCurve curve = scalar_se_curve(r, xs, quad);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const MrEstimate single = m_r(r, xs[k], quad);
    CHECK(curve.values[k] == single.value);
    CHECK(curve.values[k] >= -3.0 * curve.std_errors[k]);
    CHECK(curve.values[k] <= 1.0);
    if (k > 0) {
      const double band =
          3.0 * (curve.std_errors[k] + curve.std_errors[k - 1]);
      CHECK(curve.values[k] >= curve.values[k - 1] - band);
    }
  }
}

TEST_CASE("iteration around the stability threshold") {
  const QuadratureSpec quad = QuadratureSpec::monte_carlo(200000, 7);
  SUBCASE("contracts to the uniform point above threshold") {
    const BIterationResult res = iterate_b(2, 0.30, 1e-6, quad);
    CHECK(res.converged);
    CHECK(res.branch == SeBranch::uniform);
    CHECK(res.b <= 1e-6);
  }
  SUBCASE("escapes below threshold") {
    const BIterationResult res = iterate_b(2, 0.15, 1e-6, quad);
    CHECK(res.converged);
    CHECK(res.branch == SeBranch::far);
    CHECK(res.b > 0.4);
  }
  SUBCASE("leading-order value near the threshold") {
    // The quadratic coefficient of the map forces the continuous branch to
    // open as b_far ~ 2 r^4 delta (delta_c - delta) / (4 - r); at r = 2,
    // delta = 0.24 that is 0.0384 to leading order.
    const BIterationResult res = iterate_b(2, 0.24, 1e-6, quad);
    CHECK(res.branch == SeBranch::far);
    const double leading = 2.0 * 16.0 * 0.24 * (0.25 - 0.24) / 2.0;
    CHECK(std::abs(res.b - leading) <= 0.3 * leading);
    // Closer to the threshold the relative gap to the leading order shrinks.
    const BIterationResult closer = iterate_b(2, 0.2475, 1e-7, quad, 1e-10, 6000);
    const double leading_closer = 2.0 * 16.0 * 0.2475 * (0.25 - 0.2475) / 2.0;
    CHECK(std::abs(closer.b - leading_closer) <= 0.12 * leading_closer);
  }
  SUBCASE("deterministic for a fixed seed") {
    const BIterationResult a = iterate_b(3, 0.1, 1e-6, quad);
    const BIterationResult b = iterate_b(3, 0.1, 1e-6, quad);
    CHECK(a.b == b.b);
    CHECK(a.iterations == b.iterations);
  }
}

TEST_CASE("threshold constants and translations") {
  CHECK(delta_c(2) == doctest::Approx(0.25));
  CHECK(delta_c(10) == doctest::Approx(0.01));
  CHECK(sbm_detection_gap(2, 0.5, 1e4) == doctest::Approx(0.01));
  const AsymptoticReference ref10 = asymptotic_reference(10);
  CHECK(ref10.statics == doctest::Approx(1.0 / (40.0 * std::log(10.0))));
  const AsymptoticReference ref100 = asymptotic_reference(100);
  CHECK(ref100.spinodal / ref100.statics == doctest::Approx(2.0).epsilon(1e-12));
  // The reference lines sit exactly on the rescaled axes at any rank.
  const AsymptoticReference huge = asymptotic_reference(10000);
  CHECK(huge.spinodal * 2.0 * 10000.0 * std::log(10000.0) == doctest::Approx(1.0));
  CHECK(huge.statics * 4.0 * 10000.0 * std::log(10000.0) == doctest::Approx(1.0));
}

#ifdef _OPENMP
TEST_CASE("curve values do not depend on the worker count") {
  const QuadratureSpec quad = QuadratureSpec::monte_carlo(60000, 13);
  const std::vector<double> xs = {0.5, 4.0, 40.0};
  const int before = omp_get_max_threads();
  omp_set_num_threads(1);
  const ScalarSeCurve single = scalar_se_curve(4, xs, quad);
  omp_set_num_threads(std::max(2, before));
  const ScalarSeCurve multi = scalar_se_curve(4, xs, quad);
  omp_set_num_threads(before);
  for (std::size_t k = 0; k < xs.size(); ++k) CHECK(single.values[k] == multi.values[k]);
}
#endif

TEST_CASE("transition report below the first-order regime") {
  const QuadratureSpec quad = default_transition_quad(3, 9);
  const TransitionReport report = transition_report(3, quad);
  CHECK(report.order == TransitionOrder::second);
  CHECK(report.delta_c == doctest::Approx(1.0 / 9.0));
  const SpinodalResult sp = find_spinodal(3, quad);
  CHECK(sp.order == TransitionOrder::second);
  CHECK(sp.delta == doctest::Approx(1.0 / 9.0));
  CHECK_THROWS_AS(find_static(3, quad), std::invalid_argument);
}

TEST_CASE("transition report in the first-order regime") {
  const QuadratureSpec quad = default_transition_quad(10, 9);
  const TransitionReport report = transition_report(10, quad, {}, 1e-4);
  CHECK(report.order == TransitionOrder::first);
  CHECK(report.delta_c == doctest::Approx(0.01));
  CHECK(report.delta_c < report.delta_static);
  CHECK(report.delta_static < report.delta_spinodal);
  // Both transitions sit well inside the bracket set by the asymptotics.
  CHECK(report.delta_spinodal < 2.0 * asymptotic_reference(10).spinodal);

  // The uniform branch survives between the thresholds; the far branch
  // exists just below the spinodal and vanishes just above it.
  const double just_below = 0.985 * report.delta_spinodal;
  const double just_above = 1.015 * report.delta_spinodal;
  CHECK(iterate_b(10, just_below, 1.0, quad).branch == SeBranch::far);
  CHECK(iterate_b(10, just_above, 1.0, quad).branch == SeBranch::uniform);
  CHECK(iterate_b(10, just_below, 1e-6, quad).branch == SeBranch::uniform);
}

TEST_CASE("equal-area point sits where the two branches exchange stability") {
  // Consistency: at the static point the free-energy difference of the two
  // branches, integrated from the scalar curve, crosses zero.
  const int r = 6;
  const QuadratureSpec quad = default_transition_quad(r, 11);
  const ScalarSeCurve curve = scalar_se_curve(r, default_x_grid(r), quad);
  const double d_static = find_static(curve, 1e-4);
  const double d_spin = find_spinodal(curve, 1e-4).delta;
  CHECK(delta_c(r) < d_static);
  CHECK(d_static < d_spin);

  auto area_difference = [&](double delta) {
    const double b2 = iterate_b(r, delta, 1.0, quad).b;
    const int steps = 400;
    double integral = 0.0;
    double prev = m_r(r, 0.0, quad).value - 0.0;
    for (int s = 1; s <= steps; ++s) {
      const double u = b2 * s / steps;
      const double cur = m_r(r, u / delta, quad).value - u;
      integral += 0.5 * (prev + cur) * (b2 / steps);
      prev = cur;
    }
    return integral;
  };
  CHECK(area_difference(0.995 * d_static) > 0.0);
  CHECK(area_difference(1.005 * d_static) < 0.0);
}

TEST_CASE("default grid spans both asymptotic regimes") {
  const std::vector<double> xs = default_x_grid(10);
  CHECK(xs.size() == 400);
  CHECK(xs.front() == doctest::Approx(0.1));
  CHECK(xs.back() == doctest::Approx(1000.0 * std::log(10.0)));
  // The spinodal argument scale sits inside the grid.
  const double spinodal_x = 2.0 * 10.0 * std::log(10.0);
  CHECK(xs.front() < spinodal_x);
  CHECK(xs.back() > 4.0 * spinodal_x);
}
