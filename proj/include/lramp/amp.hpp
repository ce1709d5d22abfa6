#ifndef LRAMP_AMP_HPP
#define LRAMP_AMP_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lramp/instance.hpp"
#include "lramp/priors.hpp"

namespace lramp {

// Raised when a sweep produces non-finite values.
struct divergence_error : std::runtime_error {
  explicit divergence_error(int iteration_index, const std::string& what)
      : std::runtime_error(what), iteration(iteration_index) {}
  int iteration = 0;
};

enum class AmpInit { uninformative, informative };

struct AmpState;
struct AmpUvState;

struct AmpOptions {
  double damping = 0.0;  // convex mixing weight on the previous iterate, in [0, 1)
  int t_min = 10;
  int t_max = 1000;
  double tol = 1e-6;
  // Called after every sweep, e.g. to record a trace.
  std::function<void(const AmpState&)> on_iteration;
  std::function<void(const AmpUvState&)> on_iteration_uv;
};

// Iterate state for the symmetric model. v_sum holds the r x r sum of the
// per-row posterior covariances; per-row covariances exist only inside a
// sweep.
struct AmpState {
  Mat a;      // n x r means
  Mat a_old;  // means one sweep earlier (memory term)
  Mat v_sum;  // r x r
  Mat a_tilt; // shared quadratic tilt of the last sweep
  Mat b;      // n x r linear tilts of the last sweep
  int t = 0;
  double diff = 1.0;  // ||a - a_old||_F^2 / n after the last sweep
};

AmpState init_amp_xkx(const PlantedInstance& instance, const PriorModel& prior,
                      AmpInit init, std::uint64_t seed);

// One synchronous sweep: tilts from the current means (memory term from the
// previous ones), denoise every row, damp, roll the history.
void amp_step_xkx(AmpState& state, const Mat& s, const Mat& k_coupling, double delta,
                  const PriorModel& prior, double damping);

// Log-likelihood density of a (near) fixed point.
double bethe_free_energy_xkx(const AmpState& state, const Mat& s, const Mat& k_coupling,
                             double delta, const PriorModel& prior);

struct AmpReport {
  bool converged = false;
  bool diverged = false;
  int iterations = 0;
  double final_diff = 0.0;
  std::vector<double> diff_trace;
  double free_energy = 0.0;
  // Metrics against the planted truth (NaN when unavailable). mse_aligned
  // resolves the label permutation for the community prior and the global
  // sign for rank-1 priors; mse_value is the raw frame.
  double mse_value = 0.0;
  double mse_aligned = 0.0;
  double overlap = 0.0;
  bool overlap_greedy = false;
  Mat q_hat;  // (1/n) sum a_i a_i^T
  Mat m_hat;  // (1/n) sum a_i x_i^T, alignment applied when available
  std::string note;
};

AmpReport run_amp_xkx(const PlantedInstance& instance, const PriorModel& prior,
                      AmpInit init, const AmpOptions& options);

// Two-sided state for the rectangular model.
struct AmpUvState {
  Mat u, u_old;
  Mat v, v_old;
  Mat sigma_u_sum;  // r x r
  Mat sigma_v_sum;  // r x r
  Mat a_u, a_v;
  Mat b_u, b_v;
  int t = 0;
  double diff = 1.0;  // (||du||^2 + ||dv||^2) / (n + m)
};

AmpUvState init_amp_uv(const PlantedInstance& instance, const PriorModel& prior_u,
                       const PriorModel& prior_v, AmpInit init, std::uint64_t seed);

void amp_step_uv(AmpUvState& state, const Mat& s, double delta, const PriorModel& prior_u,
                 const PriorModel& prior_v, double damping);

double bethe_free_energy_uv(const AmpUvState& state, const Mat& s, double delta,
                            const PriorModel& prior_u, const PriorModel& prior_v);

struct AmpUvReport {
  bool converged = false;
  bool diverged = false;
  int iterations = 0;
  double final_diff = 0.0;
  std::vector<double> diff_trace;
  double free_energy = 0.0;
  double mse_u = 0.0;  // sign-aligned jointly with the v side
  double mse_v = 0.0;
  Mat q_u_hat, m_u_hat, q_v_hat, m_v_hat;
  std::string note;
};

AmpUvReport run_amp_uv(const PlantedInstance& instance, const PriorModel& prior_u,
                       const PriorModel& prior_v, AmpInit init, const AmpOptions& options);

}  // namespace lramp

#endif
