#include "prefixtune/gp.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "prefixtune/errors.hpp"

namespace prefixtune {
namespace {

constexpr double kLogBound = 8.0;  // |log hyperparameter| box for the optimiser

Eigen::MatrixXd gram(const Eigen::MatrixXd& x, const GpHyperparameters& h) {
  const auto n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = se_kernel(x.row(i).transpose(), x.row(j).transpose(), h);
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) += h.noise_variance;
  }
  return k;
}

// Factorises K, adding jitter on failure. Returns false if hopeless.
bool factorise(Eigen::MatrixXd k, Eigen::LLT<Eigen::MatrixXd>& chol) {
  double jitter = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    if (jitter > 0.0) k.diagonal().array() += jitter;
    chol.compute(k);
    if (chol.info() == Eigen::Success) return true;
    jitter = jitter == 0.0 ? 1e-10 : jitter * 100.0;
  }
  return false;
}

struct OptimisationData {
  const Eigen::MatrixXd* inputs;
  const Eigen::VectorXd* targets;
};

GpHyperparameters unpack(const gsl_vector* v, std::size_t dims) {
  GpHyperparameters h;
  h.length_scales.resize(dims);
  for (std::size_t d = 0; d < dims; ++d)
    h.length_scales[d] = std::exp(std::clamp(gsl_vector_get(v, d), -kLogBound, kLogBound));
  h.signal_variance = std::exp(std::clamp(gsl_vector_get(v, dims), -kLogBound, kLogBound));
  h.noise_variance = kNoiseFloor;
  return h;
}

double negative_lml(const gsl_vector* v, void* params) {
  const auto* data = static_cast<const OptimisationData*>(params);
  const std::size_t dims = static_cast<std::size_t>(data->inputs->cols());
  // Soft walls keep the simplex inside the box.
  double wall = 0.0;
  for (std::size_t i = 0; i < dims + 1; ++i) {
    const double e = std::abs(gsl_vector_get(v, i)) - kLogBound;
    if (e > 0) wall += 1e3 * e * e;
  }
  const double lml =
      GaussianProcess::log_marginal_likelihood(*data->inputs, *data->targets, unpack(v, dims));
  if (!std::isfinite(lml)) return std::numeric_limits<double>::max() / 4;
  return -lml + wall;
}

}  // namespace

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyperparameters& h) {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double z = (a[d] - b[d]) / h.length_scales[static_cast<std::size_t>(d)];
    r2 += z * z;
  }
  return h.signal_variance * std::exp(-0.5 * r2);
}

double GaussianProcess::log_marginal_likelihood(const Eigen::MatrixXd& inputs,
                                                const Eigen::VectorXd& targets,
                                                const GpHyperparameters& hyper) {
  Eigen::LLT<Eigen::MatrixXd> chol;
  if (!factorise(gram(inputs, hyper), chol)) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = chol.solve(targets);
  const Eigen::MatrixXd l = chol.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double n = static_cast<double>(targets.size());
  return -0.5 * targets.dot(alpha) - 0.5 * log_det - 0.5 * n * std::log(2.0 * M_PI);
}

void GaussianProcess::fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                          const GpHyperparameters& hyper) {
  if (inputs.rows() == 0 || inputs.rows() != targets.size())
    throw ValidationError("GP needs matching, non-empty inputs and targets");
  if (hyper.length_scales.size() != static_cast<std::size_t>(inputs.cols()))
    throw ValidationError("one length scale per input dimension is required");
  if (hyper.noise_variance < kNoiseFloor) throw ValidationError("noise below the floor");
  if (!factorise(gram(inputs, hyper), chol_)) throw SingularError("GP kernel matrix is singular");
  inputs_ = inputs;
  hyper_ = hyper;
  alpha_ = chol_.solve(targets);
  const Eigen::MatrixXd l = chol_.matrixL();
  log_likelihood_ = -0.5 * targets.dot(alpha_) - l.diagonal().array().log().sum() -
                    0.5 * static_cast<double>(targets.size()) * std::log(2.0 * M_PI);
}

void GaussianProcess::fit_optimized(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  if (inputs.rows() == 0 || inputs.rows() != targets.size())
    throw ValidationError("GP needs matching, non-empty inputs and targets");
  const std::size_t dims = static_cast<std::size_t>(inputs.cols());
  const std::size_t nparams = dims + 1;

  // Starts: length scales at fractions of each dimension's spread.
  std::vector<double> spread(dims, 1.0);
  for (std::size_t d = 0; d < dims; ++d) {
    const auto col = inputs.col(static_cast<Eigen::Index>(d));
    spread[d] = std::max(col.maxCoeff() - col.minCoeff(), 1.0);
  }
  const double target_var = std::max(
      (targets.array() - targets.mean()).square().sum() / std::max<double>(targets.size(), 1), 1e-6);

  OptimisationData data{&inputs, &targets};
  gsl_multimin_function fn{&negative_lml, nparams, &data};
  gsl_vector* x = gsl_vector_alloc(nparams);
  gsl_vector* step = gsl_vector_alloc(nparams);
  gsl_multimin_fminimizer* solver =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, nparams);
  gsl_error_handler_t* old_handler = gsl_set_error_handler_off();

  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> best(nparams, 0.0);
  for (double scale : {0.5, 1.0, 2.0}) {
    for (std::size_t d = 0; d < dims; ++d) gsl_vector_set(x, d, std::log(scale * spread[d]));
    gsl_vector_set(x, dims, std::log(target_var));
    gsl_vector_set_all(step, 1.0);
    gsl_multimin_fminimizer_set(solver, &fn, x, step);
    for (int iter = 0; iter < 400; ++iter) {
      if (gsl_multimin_fminimizer_iterate(solver) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver), 1e-4) == GSL_SUCCESS) break;
    }
    const double value = gsl_multimin_fminimizer_minimum(solver);
    if (value < best_value) {
      best_value = value;
      for (std::size_t i = 0; i < nparams; ++i) best[i] = gsl_vector_get(solver->x, i);
    }
  }
  for (std::size_t i = 0; i < nparams; ++i) gsl_vector_set(x, i, best[i]);
  const GpHyperparameters hyper = unpack(x, dims);

  gsl_set_error_handler(old_handler);
  gsl_multimin_fminimizer_free(solver);
  gsl_vector_free(step);
  gsl_vector_free(x);
  fit(inputs, targets, hyper);
}

GpPrediction GaussianProcess::predict(const Eigen::VectorXd& x) const {
  if (!trained()) throw ValidationError("GP is not trained");
  const auto n = inputs_.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k[i] = se_kernel(inputs_.row(i).transpose(), x, hyper_);
  GpPrediction p;
  p.mean = k.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(k);
  p.variance = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  return p;
}

}  // namespace prefixtune
