#include "driftlab/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace driftlab {

namespace {

double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-15;
  constexpr double kTiny = 1e-300;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double betainc(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("betainc: shape parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double gammainc_lower(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("gammainc_lower: a must be positive");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) {
    // series expansion
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 3e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // continued fraction for the upper tail
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 3e-15) break;
  }
  double upper = std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  return 1.0 - upper;
}

double f_cdf(double x, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw std::invalid_argument("f_cdf: degrees of freedom must be positive");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  double t = d1 * x / (d1 * x + d2);
  return betainc(d1 / 2.0, d2 / 2.0, t);
}

double chi2_cdf(double x, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("chi2_cdf: degrees of freedom must be positive");
  if (x <= 0.0) return 0.0;
  return gammainc_lower(k / 2.0, x / 2.0);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ols_rss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::VectorXd* beta_out) {
  if (X.rows() != y.size()) throw std::invalid_argument("ols_rss: row count mismatch");
  Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  Eigen::VectorXd resid = y - X * beta;
  if (beta_out) *beta_out = beta;
  return resid.squaredNorm();
}

double Welford::stddev() const { return std::sqrt(variance()); }

}  // namespace driftlab
