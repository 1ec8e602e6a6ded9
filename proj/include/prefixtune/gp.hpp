#pragma once

// Gaussian-process regression with an anisotropic squared-exponential kernel.

#include <vector>

#include <Eigen/Dense>

namespace prefixtune {

struct GpHyperparameters {
  std::vector<double> length_scales;  // one per input dimension
  double signal_variance = 1.0;
  double noise_variance = 1e-8;
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

inline constexpr double kNoiseFloor = 1e-8;

class GaussianProcess {
 public:
  // Zero prior mean, raw targets. Throws ValidationError on shape errors and
  // SingularError if the kernel matrix cannot be factorised.
  void fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
           const GpHyperparameters& hyper);

  // Maximises the log marginal likelihood over length scales and signal
  // variance from several deterministic starts, then fits. Observations are
  // treated as noise-free up to kNoiseFloor.
  void fit_optimized(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets);

  GpPrediction predict(const Eigen::VectorXd& x) const;
  double log_marginal_likelihood() const { return log_likelihood_; }
  const GpHyperparameters& hyperparameters() const { return hyper_; }
  bool trained() const { return inputs_.rows() > 0; }

  static double log_marginal_likelihood(const Eigen::MatrixXd& inputs,
                                        const Eigen::VectorXd& targets,
                                        const GpHyperparameters& hyper);

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  GpHyperparameters hyper_;
  double log_likelihood_ = 0.0;
};

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyperparameters& h);

}  // namespace prefixtune
