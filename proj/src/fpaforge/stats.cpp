#include "fpaforge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "fpaforge/error.hpp"

namespace fpaforge::stats {

namespace {

void require_same_dim(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) fail(ErrorCode::DimMismatch, fmt::format("dimensions {} and {} differ", u.size(), v.size()));
}

double sample_sd(const Eigen::Ref<const Vector>& x) {
  if (x.size() < 2) return 0.0;
  const double m = x.mean();
  return std::sqrt((x.array() - m).square().sum() / static_cast<double>(x.size() - 1));
}

constexpr double kInvSqrt2Pi = 0.3989422804014327;

}  // namespace

double cosine(const Vector& u, const Vector& v) {
  require_same_dim(u, v);
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) fail(ErrorCode::ZeroVector, "cosine of a zero vector is undefined");
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

double pearson(const Vector& u, const Vector& v) {
  require_same_dim(u, v);
  const Vector cu = u.array() - u.mean();
  const Vector cv = v.array() - v.mean();
  if (cu.norm() == 0.0 || cv.norm() == 0.0) fail(ErrorCode::ZeroVariance, "pearson of a constant vector is undefined");
  return std::clamp(cu.dot(cv) / (cu.norm() * cv.norm()), -1.0, 1.0);
}

double euclidean(const Vector& u, const Vector& v) {
  require_same_dim(u, v);
  return (u - v).norm();
}

ReferenceDistribution ReferenceDistribution::from_moments(const Vector& mean, const Matrix& covariance, bool regularize) {
  if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size())
    fail(ErrorCode::DimMismatch, "covariance shape does not match the mean");
  ReferenceDistribution ref;
  ref.mean = mean;
  ref.covariance = 0.5 * (covariance + covariance.transpose());
  const auto d = static_cast<double>(mean.size());
  Matrix work = ref.covariance;
  if (regularize) {
    ref.regularization_epsilon = 1e-6 * ref.covariance.trace() / d;
    if (!(ref.regularization_epsilon > 0.0)) ref.regularization_epsilon = 1e-6;
    work += ref.regularization_epsilon * Matrix::Identity(mean.size(), mean.size());
  }
  Eigen::LDLT<Matrix> ldlt(work);
  const double scale = std::max(1.0, work.diagonal().cwiseAbs().maxCoeff());
  const Vector dvals = ldlt.vectorD();
  const bool singular = ldlt.info() != Eigen::Success || dvals.minCoeff() <= 1e-12 * scale;
  if (singular) {
    fail(regularize ? ErrorCode::Internal : ErrorCode::SingularCovariance,
         regularize ? "regularised covariance could not be inverted" : "covariance is singular");
  }
  ref.inverse_covariance = ldlt.solve(Matrix::Identity(mean.size(), mean.size()));
  ref.inverse_covariance = 0.5 * (ref.inverse_covariance + ref.inverse_covariance.transpose());
  return ref;
}

ReferenceDistribution ReferenceDistribution::fit(const Matrix& samples, bool regularize) {
  if (samples.rows() < 2) fail(ErrorCode::DegenerateSamples, "need at least two samples to fit a covariance");
  const Vector mean = samples.colwise().mean();
  const Matrix centered = samples.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  return from_moments(mean, cov, regularize);
}

double mahalanobis_squared(const Vector& x, const ReferenceDistribution& ref) {
  require_same_dim(x, ref.mean);
  const Vector d = x - ref.mean;
  return std::max(0.0, d.dot(ref.inverse_covariance * d));
}

double mahalanobis(const Vector& x, const ReferenceDistribution& ref) { return std::sqrt(mahalanobis_squared(x, ref)); }

KernelDensity::KernelDensity(const Matrix& samples, BandwidthRule rule, double fixed_bandwidth) : samples_(samples) {
  const auto n = samples_.rows();
  const auto d = samples_.cols();
  if (d == 0) fail(ErrorCode::DegenerateSamples, "samples have no dimensions");
  if (rule == BandwidthRule::Fixed) {
    if (!(fixed_bandwidth > 0.0)) fail(ErrorCode::InvalidArgument, "bandwidth must be positive");
    if (n < 1) fail(ErrorCode::DegenerateSamples, "no samples");
    h_ = Vector::Constant(d, fixed_bandwidth);
    return;
  }
  if (n < 2) fail(ErrorCode::DegenerateSamples, "bandwidth rules need at least two samples");
  const double nd = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  const double factor = rule == BandwidthRule::Scott ? std::pow(nd, -1.0 / (dd + 4.0))
                                                     : std::pow(nd * (dd + 2.0) / 4.0, -1.0 / (dd + 4.0));
  h_.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = sample_sd(samples_.col(j));
    if (!(sd > 0.0)) fail(ErrorCode::DegenerateSamples, fmt::format("dimension {} has zero variance", j));
    h_[j] = factor * sd;
  }
}

KernelDensity::KernelDensity(const Vector& samples_1d, BandwidthRule rule, double fixed_bandwidth)
    : KernelDensity(Matrix(samples_1d), rule, fixed_bandwidth) {}

double KernelDensity::pdf(const Vector& x) const {
  if (x.size() != samples_.cols()) fail(ErrorCode::DimMismatch, "query dimension does not match the samples");
  const auto n = samples_.rows();
  const auto d = samples_.cols();
  double norm = 1.0;
  for (Eigen::Index j = 0; j < d; ++j) norm *= kInvSqrt2Pi / h_[j];
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double q = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double z = (x[j] - samples_(i, j)) / h_[j];
      q += z * z;
    }
    sum += std::exp(-0.5 * q);
  }
  return norm * sum / static_cast<double>(n);
}

double KernelDensity::pdf(double x) const {
  Vector v(1);
  v[0] = x;
  return pdf(v);
}

namespace {

std::size_t default_points(std::size_t d) { return d == 1 ? 1024 : d == 2 ? 160 : 48; }

double grid_kl(const KernelDensity& p, const KernelDensity& q, const GridSpec& grid) {
  const std::size_t d = p.dimension();
  const std::size_t g = grid.points_per_dim ? grid.points_per_dim : default_points(d);
  if (g < 2) fail(ErrorCode::InvalidArgument, "grid needs at least two points per dimension");
  std::vector<double> lo(d), step(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double pad = grid.padding_bandwidths * std::max(p.bandwidths()[jj], q.bandwidths()[jj]);
    const double mn = std::min(p.samples().col(jj).minCoeff(), q.samples().col(jj).minCoeff()) - pad;
    const double mx = std::max(p.samples().col(jj).maxCoeff(), q.samples().col(jj).maxCoeff()) + pad;
    lo[j] = mn;
    step[j] = (mx - mn) / static_cast<double>(g - 1);
  }
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) total *= g;

  std::vector<double> pv(total), qv(total);
  Vector x(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    for (std::size_t j = 0; j < d; ++j) {
      x[static_cast<Eigen::Index>(j)] = lo[j] + step[j] * static_cast<double>(rem % g);
      rem /= g;
    }
    pv[k] = std::max(p.pdf(x), grid.density_floor);
    qv[k] = std::max(q.pdf(x), grid.density_floor);
  }
  double zp = 0.0, zq = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    zp += pv[k];
    zq += qv[k];
  }
  double kl = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    const double a = pv[k] / zp;
    const double b = qv[k] / zq;
    kl += a * std::log(a / b);
  }
  return std::max(0.0, kl);
}

}  // namespace

double kl_divergence(const Matrix& p_samples, const Matrix& q_samples, const GridSpec& grid) {
  if (p_samples.cols() != q_samples.cols()) fail(ErrorCode::DimMismatch, "sample sets differ in dimension");
  if (p_samples.cols() > 3) fail(ErrorCode::InvalidArgument, "grid KL supports at most 3 dimensions");
  KernelDensity p(p_samples, grid.rule, grid.fixed_bandwidth);
  KernelDensity q(q_samples, grid.rule, grid.fixed_bandwidth);
  return grid_kl(p, q, grid);
}

double kl_divergence(const Vector& p_samples, const Vector& q_samples, const GridSpec& grid) {
  return kl_divergence(Matrix(p_samples), Matrix(q_samples), grid);
}

double kl_discrete(std::span<const double> p, std::span<const double> q, double floor) {
  if (p.size() != q.size()) fail(ErrorCode::DimMismatch, "distributions differ in length");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) fail(ErrorCode::InvalidArgument, "probabilities must be non-negative");
    if (p[i] == 0.0) continue;
    kl += p[i] * std::log(p[i] / std::max(q[i], floor));
  }
  return kl;
}

Matrix principal_components(const Matrix& samples, std::size_t k) {
  if (samples.rows() < 2) fail(ErrorCode::DegenerateSamples, "PCA needs at least two samples");
  k = std::min<std::size_t>(k, static_cast<std::size_t>(samples.cols()));
  const Vector mean = samples.colwise().mean();
  const Matrix centered = samples.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) fail(ErrorCode::Internal, "eigen decomposition failed");
  const auto d = cov.cols();
  Matrix out(d, static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) {
    Vector v = es.eigenvectors().col(d - 1 - static_cast<Eigen::Index>(c));
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;  // deterministic sign
    out.col(static_cast<Eigen::Index>(c)) = v;
  }
  return out;
}

KlReport kl_report(const Matrix& p_samples, const Matrix& q_samples, std::size_t pca_dims, const GridSpec& grid) {
  if (p_samples.cols() != q_samples.cols()) fail(ErrorCode::DimMismatch, "sample sets differ in dimension");
  KlReport rep;
  const auto d = p_samples.cols();
  double sum = 0.0;
  std::size_t used = 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index j = 0; j < d; ++j) {
    double v = nan;
    if (sample_sd(p_samples.col(j)) > 0.0 && sample_sd(q_samples.col(j)) > 0.0) {
      try {
        v = kl_divergence(Vector(p_samples.col(j)), Vector(q_samples.col(j)), grid);
      } catch (const Error&) {
        v = nan;
      }
    }
    rep.per_feature.push_back(v);
    if (std::isnan(v)) {
      rep.skipped.push_back(static_cast<std::size_t>(j));
    } else {
      sum += v;
      ++used;
    }
  }
  rep.per_feature_mean = used ? sum / static_cast<double>(used) : nan;

  rep.pca_joint = nan;
  rep.pca_dims = std::min<std::size_t>(std::min<std::size_t>(pca_dims, 3), static_cast<std::size_t>(d));
  if (rep.pca_dims > 0 && p_samples.rows() >= 2 && q_samples.rows() >= 2) {
    const Vector mean = p_samples.colwise().mean();
    Vector sd(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double s = sample_sd(p_samples.col(j));
      sd[j] = s > 0.0 ? s : 1.0;
    }
    auto standardize = [&](const Matrix& m) {
      return Matrix(((m.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array()).matrix());
    };
    const Matrix sp = standardize(p_samples);
    const Matrix sq = standardize(q_samples);
    Matrix pooled(sp.rows() + sq.rows(), d);
    pooled << sp, sq;
    try {
      const Matrix pcs = principal_components(pooled, rep.pca_dims);
      rep.pca_joint = kl_divergence(Matrix(sp * pcs), Matrix(sq * pcs), grid);
    } catch (const Error&) {
      rep.pca_joint = nan;
    }
  }
  return rep;
}

void validate_prob_vector(std::span<const double> p) {
  if (p.empty()) fail(ErrorCode::InvalidArgument, "probability vector is empty");
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) fail(ErrorCode::InvalidArgument, "probabilities must be finite and >= 0");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, fmt::format("probabilities sum to {}", sum));
}

ConfidenceEntropy confidence_entropy(std::span<const double> p) {
  validate_prob_vector(p);
  ConfidenceEntropy r;
  r.confidence = *std::max_element(p.begin(), p.end());
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  r.entropy = std::max(0.0, h);
  r.high_confidence = r.confidence > kHighConfidence;
  r.low_entropy = r.entropy < kLowEntropy;
  r.high_entropy = r.entropy > kHighEntropy;
  r.overconfident = r.high_confidence && r.low_entropy;
  return r;
}

double attack_success_rate(std::size_t misclassified, std::size_t n_attack) {
  if (n_attack == 0) fail(ErrorCode::InvalidArgument, "attack sample count must be positive");
  if (misclassified > n_attack) fail(ErrorCode::InvalidArgument, "more misclassified samples than attack samples");
  return 100.0 * static_cast<double>(misclassified) / static_cast<double>(n_attack);
}

double attack_success_rate(std::span<const std::string> predictions, std::string_view benign_label,
                           std::size_t n_attack) {
  const auto mis = static_cast<std::size_t>(
      std::count_if(predictions.begin(), predictions.end(), [&](const std::string& s) { return s != benign_label; }));
  return attack_success_rate(mis, n_attack);
}

double arithmetic_mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double geometric_mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) {
    if (x < 0.0) fail(ErrorCode::InvalidArgument, "geometric mean needs non-negative values");
    if (x == 0.0) return 0.0;
    s += std::log(x);
  }
  return std::exp(s / static_cast<double>(xs.size()));
}

}  // namespace fpaforge::stats
