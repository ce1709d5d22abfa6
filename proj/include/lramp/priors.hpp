#ifndef LRAMP_PRIORS_HPP
#define LRAMP_PRIORS_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "lramp/rng.hpp"

namespace lramp {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class PriorKind { gaussian, community, rademacher };

// Row prior over r-dimensional factors.
//  - gaussian:   N(mean, cov); defaults to zero mean, identity covariance.
//  - community:  uniform over the r one-hot vectors.
//  - rademacher: scalar +-1 with equal weight (r = 1).
struct PriorModel {
  PriorKind kind = PriorKind::gaussian;
  int rank = 1;
  Vec mean;  // gaussian only
  Mat cov;   // gaussian only

  static PriorModel make_gaussian(int rank);
  static PriorModel make_gaussian(Vec mean, Mat cov);
  static PriorModel make_community(int groups);
  static PriorModel make_rademacher();

  // E||x||^2 under the prior; the natural normalization for squared error.
  double second_moment() const;
  // E[x x^T] under the prior.
  Mat second_moment_matrix() const;
};

void validate(const PriorModel& prior);

Vec sample_prior(const PriorModel& prior, RngStream& rng);

// Mean, covariance and log-normalizer of the prior tilted by
// exp(B.x - x.A.x/2).
struct DenoiserResult {
  Vec mean;
  Mat cov;
  double log_z = 0.0;
};

// The quadratic tilt A is shared across many B evaluations in every sweep,
// so its preprocessing (Cholesky for the gaussian prior, the diagonal shift
// for the community prior) is hoisted into a plan.
class DenoiserPlan {
 public:
  DenoiserPlan(const PriorModel& prior, const Mat& a_tilt);

  void apply(const Vec& b, Vec& mean, Mat& cov, double& log_z) const;
  DenoiserResult apply(const Vec& b) const;

  int rank() const { return rank_; }

 private:
  PriorKind kind_;
  int rank_;
  Vec half_diag_;        // community: A_kk / 2
  Eigen::LLT<Mat> llt_;  // gaussian: factor of (prior precision + A)
  Vec prec_mean_;        // gaussian: prior precision * prior mean
  double log_z_const_ = 0.0;
  double rademacher_half_a_ = 0.0;
};

// One-shot convenience wrapper around DenoiserPlan.
DenoiserResult denoise(const PriorModel& prior, const Mat& a_tilt, const Vec& b);

// Max absolute difference between the returned covariance and a central
// finite difference of the mean in B. Diagnostic for the calculus identity
// cov = d mean / d B.
double denoise_jacobian_check(const PriorModel& prior, const Mat& a_tilt, const Vec& b,
                              double step);

const char* to_string(PriorKind kind);

}  // namespace lramp

#endif
