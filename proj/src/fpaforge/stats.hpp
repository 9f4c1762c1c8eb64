#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fpaforge::stats {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

double cosine(const Vector& u, const Vector& v);
double pearson(const Vector& u, const Vector& v);
double euclidean(const Vector& u, const Vector& v);

struct ReferenceDistribution {
  Vector mean;
  Matrix covariance;
  Matrix inverse_covariance;
  double regularization_epsilon = 0.0;

  // Rows are samples. With `regularize`, ε·I (ε = 1e-6·trace/dim) is added
  // before inversion; without it a singular covariance is an error.
  static ReferenceDistribution fit(const Matrix& samples, bool regularize = true);
  static ReferenceDistribution from_moments(const Vector& mean, const Matrix& covariance, bool regularize = true);
};

double mahalanobis_squared(const Vector& x, const ReferenceDistribution& ref);
double mahalanobis(const Vector& x, const ReferenceDistribution& ref);

enum class BandwidthRule { Scott, Silverman, Fixed };

// Gaussian product kernel with one bandwidth per dimension.
class KernelDensity {
 public:
  KernelDensity(const Matrix& samples, BandwidthRule rule, double fixed_bandwidth = 0.0);
  KernelDensity(const Vector& samples_1d, BandwidthRule rule, double fixed_bandwidth = 0.0);

  double pdf(const Vector& x) const;
  double pdf(double x) const;
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(samples_.cols()); }
  const Vector& bandwidths() const noexcept { return h_; }
  const Matrix& samples() const noexcept { return samples_; }

 private:
  Matrix samples_;
  Vector h_;
};

struct GridSpec {
  std::size_t points_per_dim = 0;  // 0: 1024 / 160 / 48 for 1 / 2 / 3 dimensions
  double padding_bandwidths = 4.0;
  double density_floor = 1e-12;
  BandwidthRule rule = BandwidthRule::Scott;
  double fixed_bandwidth = 0.0;
};

// KL(p̂‖q̂) of KDEs fitted to the two sample sets, on a shared grid. Both
// densities are floored and normalised over the grid. At most 3 dimensions.
double kl_divergence(const Matrix& p_samples, const Matrix& q_samples, const GridSpec& grid = {});
double kl_divergence(const Vector& p_samples, const Vector& q_samples, const GridSpec& grid = {});
double kl_discrete(std::span<const double> p, std::span<const double> q, double floor = 1e-12);

struct KlReport {
  std::vector<double> per_feature;       // NaN where either side is constant
  std::vector<std::size_t> skipped;      // column indices with NaN
  double per_feature_mean = 0.0;         // over non-skipped columns
  double pca_joint = 0.0;                // NaN when not computable
  std::size_t pca_dims = 0;
};

// Per-column 1-D KL and a KL on the leading principal components of the
// pooled, reference-standardised data.
KlReport kl_report(const Matrix& p_samples, const Matrix& q_samples, std::size_t pca_dims = 2,
                   const GridSpec& grid = {});

// Leading `k` principal directions (columns) of the sample covariance.
Matrix principal_components(const Matrix& samples, std::size_t k);

struct ConfidenceEntropy {
  double confidence = 0.0;
  double entropy = 0.0;
  bool high_confidence = false;  // confidence > 0.9
  bool low_entropy = false;      // entropy < 0.5
  bool high_entropy = false;     // entropy > 1.5
  bool overconfident = false;    // high_confidence and low_entropy
};

inline constexpr double kHighConfidence = 0.9;
inline constexpr double kLowEntropy = 0.5;
inline constexpr double kHighEntropy = 1.5;

// Throws InvalidArgument unless entries are ≥ 0 and sum to 1 within 1e-9.
void validate_prob_vector(std::span<const double> p);
ConfidenceEntropy confidence_entropy(std::span<const double> p);

double attack_success_rate(std::size_t misclassified, std::size_t n_attack);
double attack_success_rate(std::span<const std::string> predictions, std::string_view benign_label,
                           std::size_t n_attack);

double arithmetic_mean(std::span<const double> xs);
// exp(mean(log x)); 0 if any value is 0.
double geometric_mean(std::span<const double> xs);

}  // namespace fpaforge::stats
