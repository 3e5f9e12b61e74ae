/** stats — special functions and small statistical helpers. */
#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace driftlab {

// regularized incomplete beta I_x(a, b), Lentz continued fraction
double betainc(double a, double b, double x);

// regularized lower incomplete gamma P(a, x)
double gammainc_lower(double a, double x);

// CDF of the F distribution with (d1, d2) degrees of freedom
double f_cdf(double x, double d1, double d2);

// CDF of the chi-square distribution with k degrees of freedom
double chi2_cdf(double x, double k);

// standard normal CDF
double normal_cdf(double z);

// Least squares fit of y on columns of X (X includes any intercept column).
// Returns the residual sum of squares; beta_out may be null.
double ols_rss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
               Eigen::VectorXd* beta_out = nullptr);

// running mean/variance accumulator
struct Welford {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n) : 0.0; }
  double stddev() const;
  void reset() { n = 0; mean = 0.0; m2 = 0.0; }
};

// exponentially weighted mean/variance with fixed decay
struct EwMoments {
  double decay = 0.99;
  double mean = 0.0;
  double var = 0.0;
  bool started = false;

  void add(double x) {
    if (!started) {
      mean = x;
      var = 0.0;
      started = true;
      return;
    }
    double d = x - mean;
    double incr = 1.0 - decay;
    mean += incr * d;
    var = decay * (var + incr * d * d);
  }
};

}  // namespace driftlab
