#ifndef LRAMP_TRANSITIONS_HPP
#define LRAMP_TRANSITIONS_HPP

#include <cstdint>
#include <vector>

#include "lramp/state_evolution.hpp"

namespace lramp {

struct MrEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Scalar community map: the expected share of posterior weight the planted
// group wins against r-1 Gaussian competitors, mapped affinely to [0, 1].
// Monte Carlo with common random numbers per seed and antithetic pairs;
// deterministic for a fixed (seed, samples).
MrEstimate m_r(int r, double x, const QuadratureSpec& quad);

struct ScalarSeCurve {
  int r = 0;
  std::vector<double> xs;
  std::vector<double> values;
  std::vector<double> std_errors;
  QuadratureSpec quad;
};

// 400 log-spaced points spanning the linear regime through the saturated
// regime; both transition arguments fall well inside.
std::vector<double> default_x_grid(int r, int points = 400);

// Evaluates the whole grid from one pass over the frozen sample bank;
// values coincide exactly with per-point m_r calls at the same seed.
ScalarSeCurve scalar_se_curve(int r, const std::vector<double>& xs,
                              const QuadratureSpec& quad);

enum class SeBranch { uniform, far };

struct BIterationResult {
  double b = 0.0;
  SeBranch branch = SeBranch::uniform;
  bool converged = false;
  int iterations = 0;
};

// Fixed-point iteration of b <- Mr(b/delta) with a frozen sample bank.
BIterationResult iterate_b(int r, double delta, double b0, const QuadratureSpec& quad,
                           double tol = 1e-9, int t_max = 2000);

// Instability threshold of the uniform fixed point.
double delta_c(int r);

// The same threshold translated to block-model parameters: detection needs
// |p_in - p_out| above this gap.
double sbm_detection_gap(int r, double p_out, double n);

// Asymptotic error of the community state at overlap parameter b.
double community_mse_from_b(int r, double b);

enum class TransitionOrder { second, first };

struct SpinodalResult {
  double delta = 0.0;
  TransitionOrder order = TransitionOrder::first;
};

// Largest delta at which the far fixed point exists: max over x of Mr(x)/x,
// grid scan plus golden-section refinement. For r <= 4 the map has no
// first-order structure and the result degenerates to delta_c.
SpinodalResult find_spinodal(const ScalarSeCurve& curve, double rel_tol = 1e-3);
SpinodalResult find_spinodal(int r, const QuadratureSpec& quad,
                             const std::vector<double>& xs = {}, double rel_tol = 1e-3);

// Equal-area rule: the x where the integral of Mr matches half the chord
// rectangle, refined by bisection; requires the first-order regime (r > 4).
double find_static(const ScalarSeCurve& curve, double rel_tol = 1e-3);
double find_static(int r, const QuadratureSpec& quad, const std::vector<double>& xs = {},
                   double rel_tol = 1e-3);

struct AsymptoticReference {
  double spinodal = 0.0;  // 1 / (2 r ln r)
  double statics = 0.0;   // 1 / (4 r ln r)
};
AsymptoticReference asymptotic_reference(int r);

struct TransitionReport {
  int r = 0;
  double delta_c = 0.0;
  TransitionOrder order = TransitionOrder::second;
  double delta_static = 0.0;    // first order only
  double delta_spinodal = 0.0;  // first order only
  double refine_rel_tol = 0.0;
};

TransitionReport transition_report(int r, const QuadratureSpec& quad,
                                   const std::vector<double>& xs = {},
                                   double refine_rel_tol = 1e-3);

// Sample-count default: resolving the rare competitor maxima at large rank
// needs more draws.
QuadratureSpec default_transition_quad(int r, std::uint64_t seed);

}  // namespace lramp

#endif
