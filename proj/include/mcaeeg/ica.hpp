#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mcaeeg/error.hpp"
#include "mcaeeg/random.hpp"
#include "mcaeeg/tensor.hpp"

namespace mcaeeg {

struct IcaOptions {
  std::size_t max_iterations = 500;
  double tolerance = 1e-6;
  /// Eigenvalues below rank_tolerance * largest are treated as zero.
  double rank_tolerance = 1e-10;
};

/// Fitted symmetric FastICA decomposition of a [channels x samples] matrix.
///
/// Sources are S = unmixing * whitener * (X - mean); X is recovered as
/// mixing * S + mean. `whitener` is the full PCA whitening matrix with rows
/// ordered by decreasing variance, and `unmixing` only uses its first
/// `components` rows.
struct IcaModel {
  Tensor mean;        // [channels]
  Tensor whitener;    // [channels x channels]
  Tensor unmixing;    // [components x channels]
  Tensor mixing;      // [channels x components]
  std::vector<double> component_scores;  // excess kurtosis per component
  std::set<std::size_t> rejected;
  std::size_t iterations = 0;

  std::size_t channels() const { return mixing.dim(0); }
  std::size_t components() const { return mixing.dim(1); }
};

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::MatrixXd to_eigen(const Tensor& t) {
  return Eigen::Map<const RowMatrix>(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                                     static_cast<Eigen::Index>(t.dim(1)));
}

inline Tensor from_eigen(const Eigen::MatrixXd& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  Eigen::Map<RowMatrix>(t.data().data(), m.rows(), m.cols()) = m;
  return t;
}

/// W <- (W W^T)^{-1/2} W
inline Eigen::MatrixXd symmetric_decorrelate(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

inline Eigen::MatrixXd source_transform(const IcaModel& m) {
  return to_eigen(m.unmixing) * to_eigen(m.whitener);
}

}  // namespace detail

/// Symmetric FastICA with the tanh (logcosh) contrast.
///
/// Throws RankError when the data do not span `n_components` independent
/// directions, and ConvergenceError after max_iterations without the
/// largest weight-vector change dropping below tolerance.
inline IcaModel fast_ica(const Tensor& x, std::size_t n_components, std::uint64_t seed,
                         const IcaOptions& opt = {}) {
  detail::require_rank(x, 2, "fast_ica");
  const std::size_t channels = x.dim(0), samples = x.dim(1);
  if (n_components == 0 || n_components > channels) {
    throw InvalidArgument("fast_ica: n_components must be in [1, " + std::to_string(channels) + "]");
  }
  if (samples < 10 * channels) {
    throw InvalidArgument("fast_ica: need at least " + std::to_string(10 * channels) +
                          " samples, got " + std::to_string(samples));
  }
  const auto nc = static_cast<Eigen::Index>(n_components);
  const double inv_n = 1.0 / static_cast<double>(samples);

  Eigen::MatrixXd data = detail::to_eigen(x);
  const Eigen::VectorXd mean = data.rowwise().mean();
  data.colwise() -= mean;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pca(data * data.transpose() * inv_n);
  // Eigen sorts ascending; whitener rows go in descending-variance order.
  const Eigen::VectorXd evals = pca.eigenvalues().reverse();
  const Eigen::MatrixXd evecs = pca.eigenvectors().rowwise().reverse();
  const double floor = opt.rank_tolerance * std::max(evals(0), 0.0);
  if (!(evals(nc - 1) > floor)) {
    throw RankError("fast_ica: input has fewer than " + std::to_string(n_components) +
                    " linearly independent channels");
  }
  const Eigen::VectorXd scales = evals.cwiseMax(floor > 0.0 ? floor : 1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd whitener = scales.asDiagonal() * evecs.transpose();
  const Eigen::MatrixXd z = whitener.topRows(nc) * data;

  Rng rng(seed);
  Eigen::MatrixXd w(nc, nc);
  for (Eigen::Index i = 0; i < nc; ++i)
    for (Eigen::Index j = 0; j < nc; ++j) w(i, j) = rng.normal();
  w = detail::symmetric_decorrelate(w);

  std::size_t iter = 0;
  bool converged = false;
  while (iter < opt.max_iterations) {
    ++iter;
    const Eigen::MatrixXd g = (w * z).array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).rowwise().mean();
    Eigen::MatrixXd w_new = g * z.transpose() * inv_n - g_prime_mean.asDiagonal() * w;
    w_new = detail::symmetric_decorrelate(w_new);
    const double change = ((w_new * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = w_new;
    if (change < opt.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("fast_ica: no convergence after " + std::to_string(iter) + " iterations",
                           iter);
  }

  IcaModel model;
  model.iterations = iter;
  model.mean = Tensor({channels}, std::vector<double>(mean.data(), mean.data() + mean.size()));
  model.whitener = detail::from_eigen(whitener);
  Eigen::MatrixXd unmixing = Eigen::MatrixXd::Zero(nc, static_cast<Eigen::Index>(channels));
  unmixing.leftCols(nc) = w;
  model.unmixing = detail::from_eigen(unmixing);
  const Eigen::MatrixXd transform = unmixing * whitener;
  model.mixing = detail::from_eigen(transform.completeOrthogonalDecomposition().pseudoInverse());

  const Eigen::MatrixXd sources = transform * data;
  for (Eigen::Index c = 0; c < nc; ++c) {
    const double m2 = sources.row(c).array().square().mean();
    const double m4 = sources.row(c).array().square().square().mean();
    model.component_scores.push_back(m4 / (m2 * m2) - 3.0);
  }
  return model;
}

/// Source activations [components x samples] for data x.
inline Tensor ica_sources(const Tensor& x, const IcaModel& model) {
  detail::require_rank(x, 2, "ica_sources");
  if (x.dim(0) != model.channels()) throw ShapeError("ica_sources: channel count mismatch");
  Eigen::MatrixXd data = detail::to_eigen(x);
  data.colwise() -= detail::to_eigen(reshape(model.mean, {model.channels(), 1})).col(0);
  return detail::from_eigen(detail::source_transform(model) * data);
}

/// Components whose |excess kurtosis| exceeds the threshold.
inline std::set<std::size_t> auto_reject(const IcaModel& model, double threshold = 8.0) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < model.component_scores.size(); ++i) {
    if (std::abs(model.component_scores[i]) > threshold) out.insert(i);
  }
  return out;
}

/// Rebuild x from every component not listed in `rejected`.
inline Tensor remove_components(const Tensor& x, const IcaModel& model,
                                const std::set<std::size_t>& rejected) {
  for (std::size_t r : rejected) {
    if (r >= model.components()) {
      throw InvalidArgument("remove_components: component index " + std::to_string(r) +
                            " out of range [0, " + std::to_string(model.components()) + ")");
    }
  }
  Eigen::MatrixXd sources = detail::to_eigen(ica_sources(x, model));
  for (std::size_t r : rejected) sources.row(static_cast<Eigen::Index>(r)).setZero();
  Eigen::MatrixXd out = detail::to_eigen(model.mixing) * sources;
  out.colwise() += detail::to_eigen(reshape(model.mean, {model.channels(), 1})).col(0);
  return detail::from_eigen(out);
}

}  // namespace mcaeeg
