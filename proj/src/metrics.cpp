#include "drivetraits/metrics.hpp"

#include <cmath>

#include "drivetraits/errors.hpp"

namespace drivetraits {

double pearson_r(const Eigen::Ref<const Eigen::VectorXd>& a,
                 const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size() || a.size() == 0) {
    throw ValidationError("pearson_r needs two equal-length nonempty vectors");
  }
  if (a.size() < 2) {
    throw UndefinedValueError("pearson_r is undefined for a single sample");
  }
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double va = da.square().sum();
  const double vb = db.square().sum();
  if (va <= 0 || vb <= 0) {
    throw UndefinedValueError("pearson_r is undefined for zero-variance input");
  }
  return (da * db).sum() / std::sqrt(va * vb);
}

double rmse(const Eigen::Ref<const Eigen::VectorXd>& pred,
            const Eigen::Ref<const Eigen::VectorXd>& truth) {
  if (pred.size() != truth.size() || pred.size() == 0) {
    throw ValidationError("rmse needs two equal-length nonempty vectors");
  }
  return std::sqrt((pred - truth).squaredNorm() /
                   static_cast<double>(pred.size()));
}

double macro_f1(const Eigen::Ref<const Eigen::VectorXd>& pred,
                const Eigen::Ref<const Eigen::VectorXd>& truth) {
  if (pred.size() != truth.size() || pred.size() == 0) {
    throw ValidationError("macro_f1 needs two equal-length nonempty vectors");
  }
  double f1_sum = 0;
  for (double cls : {0.0, 1.0}) {
    double tp = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
      const bool p = pred[i] == cls;
      const bool t = truth[i] == cls;
      if (p && t) tp++;
      else if (p && !t) fp++;
      else if (!p && t) fn++;
    }
    const double denom = 2 * tp + fp + fn;
    f1_sum += denom > 0 ? 2 * tp / denom : 0.0;  // undefined per-class F1 -> 0
  }
  return f1_sum / 2.0;
}

namespace {

// Continued-fraction evaluation of the regularized incomplete beta function.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_beta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(ln_beta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double pearson_p_value(double r, int n) {
  if (n < 3) throw UndefinedValueError("correlation t-test needs n >= 3");
  const double df = static_cast<double>(n - 2);
  r = std::clamp(r, -1.0, 1.0);
  if (std::abs(r) >= 1.0) return 0.0;
  const double t2 = r * r * df / (1.0 - r * r);
  // Two-sided: P(|T| > t) for T ~ Student-t(df).
  return reg_inc_beta(df / 2.0, 0.5, df / (df + t2));
}

}  // namespace drivetraits
