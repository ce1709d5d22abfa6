#ifndef LRAMP_STATE_EVOLUTION_HPP
#define LRAMP_STATE_EVOLUTION_HPP

#include <cstdint>
#include <utility>

#include "lramp/priors.hpp"

namespace lramp {

struct QuadratureSpec {
  enum class Method { monte_carlo, gauss_hermite };
  Method method = Method::monte_carlo;
  int samples = 100000;      // Monte Carlo draws (antithetic halves share a pair)
  int nodes = 20;            // Gauss-Hermite nodes per dimension
  std::uint64_t seed = 0;

  static QuadratureSpec monte_carlo(int samples, std::uint64_t seed) {
    QuadratureSpec q;
    q.method = Method::monte_carlo;
    q.samples = samples;
    q.seed = seed;
    return q;
  }
  static QuadratureSpec gauss_hermite(int nodes) {
    QuadratureSpec q;
    q.method = Method::gauss_hermite;
    q.nodes = nodes;
    return q;
  }
};

// Order parameters: q tracks the self overlap, m the overlap with the
// planted factors. When nishimori_locked is set the two are kept equal by
// construction.
struct SeState {
  Mat q;
  Mat m;
  int t = 0;
  bool nishimori_locked = false;
};

struct SeStepEstimate {
  SeState state;
  Mat q_stderr;        // entrywise standard error of q
  Mat m_stderr;        // entrywise standard error of m
  Mat qm_diff_stderr;  // standard error of the (q - m) estimate
};

struct SeFixedPoint {
  SeState state;
  bool converged = false;
  int iterations = 0;
};

struct FreeEnergyEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Throws with the offending eigenvalue when m is not PSD within tolerance;
// eigenvalues in (-tol, 0) are clamped to zero.
Mat symmetric_sqrt_psd(const Mat& m, double tol = 1e-10);

// Asymptotic squared error implied by an order-parameter state.
double se_mse(const PriorModel& prior, const SeState& state);

// Symmetric-family state of the community prior: q = m = (a/r^2) J + (b/r) I
// with a = 1 - b.
SeState community_symmetric_state(int r, double b, bool locked = true);

struct CommunityProjection {
  double a = 0.0;
  double b = 0.0;
  double residual = 0.0;  // max-norm distance from the symmetric family
};
CommunityProjection project_community(const Mat& q);

// Asymptotic evolution for the symmetric model. The sample bank is drawn
// once at construction and reused across iterations so the fixed-point map
// is deterministic; the noise uses antithetic pairs.
class SeEvaluator {
 public:
  SeEvaluator(PriorModel prior, Mat k_coupling, double delta, QuadratureSpec quad);

  SeStepEstimate step(const SeState& state) const;
  SeFixedPoint fixed_point(SeState init, double tol, int t_max) const;
  FreeEnergyEstimate free_energy(const SeState& state) const;

  const PriorModel& prior() const { return prior_; }
  double delta() const { return delta_; }

 private:
  PriorModel prior_;
  Mat k_;
  double delta_;
  QuadratureSpec quad_;
  Mat x_bank_;  // pairs x r prior draws
  Mat z_bank_;  // pairs x r standard normals
  Vec gh_nodes_;
  Vec gh_weights_;
};

struct SeUvState {
  Mat q_u, m_u, q_v, m_v;
  int t = 0;
  bool nishimori_locked = false;
};

struct SeUvStepEstimate {
  SeUvState state;
  Mat q_u_stderr, m_u_stderr, q_v_stderr, m_v_stderr;
};

struct SeUvFixedPoint {
  SeUvState state;
  bool converged = false;
  int iterations = 0;
};

// Two-sided evolution for the rectangular model with aspect ratio alpha.
class SeUvEvaluator {
 public:
  SeUvEvaluator(PriorModel prior_u, PriorModel prior_v, double alpha, double delta,
                QuadratureSpec quad);

  SeUvStepEstimate step(const SeUvState& state) const;
  SeUvFixedPoint fixed_point(SeUvState init, double tol, int t_max) const;
  FreeEnergyEstimate free_energy(const SeUvState& state) const;

  SeUvState zero_state() const;
  SeUvState informative_state() const;

 private:
  PriorModel prior_u_, prior_v_;
  double alpha_, delta_;
  QuadratureSpec quad_;
  Mat u_bank_, zv_bank_;  // u-side update: planted u draws + noise
  Mat v_bank_, zu_bank_;  // v-side update
};

}  // namespace lramp

#endif
