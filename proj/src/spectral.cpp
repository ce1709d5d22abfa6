#include "lramp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lramp/rng.hpp"

namespace lramp {

std::vector<EigenPair> top_eigvecs(const Mat& matrix, int k, double tol, int max_iter,
                                   std::uint64_t seed) {
  const Eigen::Index n = matrix.rows();
  if (matrix.cols() != n) throw std::invalid_argument("top_eigvecs: matrix must be square");
  if (k < 1 || k > 10) throw std::invalid_argument("top_eigvecs: k must lie in [1, 10]");
  if (k > n) throw std::invalid_argument("top_eigvecs: k exceeds the matrix dimension");

  std::vector<EigenPair> pairs;
  pairs.reserve(k);
  for (int j = 0; j < k; ++j) {
    RngStream rng(derive_seed(seed, RngUse::spectral_start, j));
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    for (const auto& found : pairs) v -= found.vector.dot(v) * found.vector;
    v.normalize();

    EigenPair pair;
    double rayleigh_prev = 0.0;
    Vec w(n);
    Vec resid(n);
    for (int it = 0; it < max_iter; ++it) {
      w.noalias() = matrix * v;
      const double rayleigh = v.dot(w);
      resid = w - rayleigh * v;
      // Deflate each sweep so rounding cannot reintroduce found directions.
      for (const auto& found : pairs) w -= found.vector.dot(w) * found.vector;
      const double norm = w.norm();
      if (norm == 0.0) {
        pair.value = 0.0;
        pair.iterations = it + 1;
        break;
      }
      // Scale-invariant thresholds: matrices that differ by a constant
      // factor stop at the same sweep with the same vector.
      const double scale = std::abs(rayleigh) > 1e-200 ? std::abs(rayleigh) : 1.0;
      v = w / norm;
      pair.iterations = it + 1;
      if (it > 0 && std::abs(rayleigh - rayleigh_prev) < tol * scale &&
          resid.norm() <= 10.0 * tol * scale) {
        pair.converged = true;
        pair.value = rayleigh;
        break;
      }
      rayleigh_prev = rayleigh;
      pair.value = rayleigh;
    }
    // Refresh the quotient with the final vector.
    w.noalias() = matrix * v;
    pair.value = v.dot(w);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
    pair.vector = v;
    pairs.push_back(std::move(pair));
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const EigenPair& a, const EigenPair& b) {
    return std::abs(a.value) > std::abs(b.value);
  });
  return pairs;
}

std::vector<SpectralOverlapRow> spectral_compare(const PlantedInstance& instance, int k,
                                                 double tol, int max_iter) {
  if (instance.model != ModelKind::xkx)
    throw std::invalid_argument("spectral_compare: needs the symmetric model");
  if (!instance.has_truth())
    throw std::invalid_argument("spectral_compare: instance carries no ground truth");

  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(instance.n));
  std::vector<SpectralOverlapRow> rows;
  const Mat& truth = instance.x_truth;

  auto run = [&](const Mat& matrix, char kind) {
    const Mat scaled = matrix * inv_sqrt_n;
    const std::vector<EigenPair> pairs = top_eigvecs(scaled, k, tol, max_iter);
    for (int j = 0; j < static_cast<int>(pairs.size()); ++j) {
      SpectralOverlapRow row;
      row.matrix_kind = kind;
      row.index = j;
      row.eigenvalue = pairs[j].value;
      double best = 0.0;
      for (int c = 0; c < instance.r; ++c) {
        const double denom = pairs[j].vector.norm() * truth.col(c).norm();
        if (denom > 0.0)
          best = std::max(best, std::abs(pairs[j].vector.dot(truth.col(c))) / denom);
      }
      row.overlap = best;
      rows.push_back(row);
    }
  };
  run(instance.s, 'S');
  run(instance.y, 'Y');
  return rows;
}

}  // namespace lramp
