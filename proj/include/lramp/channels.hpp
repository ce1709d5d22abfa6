#ifndef LRAMP_CHANNELS_HPP
#define LRAMP_CHANNELS_HPP

#include <Eigen/Core>
#include <cstdint>

#include "lramp/rng.hpp"

namespace lramp {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class ChannelKind { gaussian, sbm, exponential };

// An element-wise output channel. Each channel enters the solvers only
// through its score function at w = 0 and the scalar noise level delta
// (the reciprocal of the expected squared score).
struct ChannelModel {
  ChannelKind kind = ChannelKind::gaussian;
  double variance = 1.0;  // gaussian: noise variance
  double p_out = 0.5;     // sbm: base edge probability, strictly inside (0,1)
  double mu = 1.0;        // sbm: signal strength
  double scale = 1.0;     // exponential: two-sided decay scale

  static ChannelModel make_gaussian(double variance);
  static ChannelModel make_sbm(double p_out, double mu);
  static ChannelModel make_exponential(double scale);

  // SBM channel with base probability p_out whose noise level equals delta.
  static ChannelModel make_sbm_with_delta(double p_out, double delta);
};

// Throws std::invalid_argument naming the offending parameter.
void validate(const ChannelModel& channel);

// One draw of y given the planted element w.
double sample_observation(const ChannelModel& channel, double w, RngStream& rng);

// d/dw log P(y|w) at w = 0. The exponential channel returns 0 at its kink
// y = 0 so the score stays odd.
double score_value(const ChannelModel& channel, double y);

// Effective noise level delta = 1 / E[score^2] at w = 0, in closed form.
double inverse_fisher(const ChannelModel& channel);

// Element-wise score of a full observation matrix.
Mat score_matrix(const ChannelModel& channel, const Mat& y);

const char* to_string(ChannelKind kind);

}  // namespace lramp

#endif
