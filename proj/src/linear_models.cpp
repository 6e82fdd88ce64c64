#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "drivetraits/models.hpp"

namespace drivetraits {

Standardizer Standardizer::fit(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  Standardizer s;
  if (x.rows() == 0) {
    s.center = Eigen::VectorXd::Zero(x.cols());
    s.scale = Eigen::VectorXd::Ones(x.cols());
    return s;
  }
  const double n = static_cast<double>(x.rows());
  s.center = x.colwise().mean();
  Eigen::VectorXd var =
      ((x.rowwise() - s.center.transpose()).array().square().colwise().sum() / n)
          .transpose();
  s.scale = var.array().sqrt().max(kScaleFloor);
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.cols() != center.size()) {
    throw SchemaError("standardizer fitted on " + std::to_string(center.size()) +
                      " columns, applied to " + std::to_string(x.cols()));
  }
  return (x.rowwise() - center.transpose()).array().rowwise() /
         scale.transpose().array();
}

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::ridge: return "ridge";
    case ModelKind::lasso: return "lasso";
    case ModelKind::logistic_l2: return "logistic_l2";
    case ModelKind::linear_svm: return "linear_svm";
    case ModelKind::random_forest_reg: return "random_forest_reg";
    case ModelKind::random_forest_clf: return "random_forest_clf";
  }
  return "unknown";
}

std::optional<ModelKind> model_kind_from_name(std::string_view name) {
  for (ModelKind k : {ModelKind::ridge, ModelKind::lasso, ModelKind::logistic_l2,
                      ModelKind::linear_svm, ModelKind::random_forest_reg,
                      ModelKind::random_forest_clf}) {
    if (model_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

bool is_linear_kind(ModelKind kind) {
  return kind == ModelKind::ridge || kind == ModelKind::lasso ||
         kind == ModelKind::logistic_l2 || kind == ModelKind::linear_svm;
}

bool is_classifier_kind(ModelKind kind) {
  return kind == ModelKind::logistic_l2 || kind == ModelKind::linear_svm ||
         kind == ModelKind::random_forest_clf;
}

const std::vector<double>& default_reg_grid() {
  static const std::vector<double> grid = {0.001, 0.01, 0.1, 1, 10, 100};
  return grid;
}

const std::vector<int>& default_depth_grid() {
  static const std::vector<int> grid = {3, 5, 7, 9, 11};
  return grid;
}

namespace {

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (!x.allFinite() || !y.allFinite()) {
    throw ValidationError("non-finite values in model inputs");
  }
  if (x.rows() != y.size()) {
    throw ConsistencyError("design has " + std::to_string(x.rows()) +
                           " rows but " + std::to_string(y.size()) + " targets");
  }
  if (x.rows() < 1) throw ValidationError("empty training set");
}

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

inline double softplus(double v) {
  return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}

// --- ridge core -------------------------------------------------------------

// Solves the standardized penalized normal equations; `gram` is X'X (primal,
// p <= n or lambda == 0) or XX' (dual).
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& xs, const Eigen::VectorXd& yc,
                            const Eigen::MatrixXd& gram, bool primal,
                            double lambda) {
  Eigen::MatrixXd sys = gram;
  sys.diagonal().array() += lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sys);
  if (primal) {
    const Eigen::VectorXd rhs = xs.transpose() * yc;
    Eigen::VectorXd beta = ldlt.solve(rhs);
    const double rhs_scale = std::max(1.0, rhs.norm());
    for (int refine = 0; refine < 3; ++refine) {
      const Eigen::VectorXd resid = rhs - sys * beta;
      if (resid.norm() <= 1e-8 * rhs_scale) break;
      beta += ldlt.solve(resid);
    }
    if (lambda <= 0 &&
        !((sys * beta - rhs).norm() <= 1e-6 * rhs_scale)) {
      // Singular unpenalized system: minimum-norm least squares instead.
      beta = xs.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(yc);
    }
    return beta;
  }
  Eigen::VectorXd alpha = ldlt.solve(yc);
  const double rhs_scale = std::max(1.0, yc.norm());
  for (int refine = 0; refine < 3; ++refine) {
    const Eigen::VectorXd resid = yc - sys * alpha;
    if (resid.norm() <= 1e-10 * rhs_scale) break;
    alpha += ldlt.solve(resid);
  }
  return xs.transpose() * alpha;
}

// --- lasso core -------------------------------------------------------------

// Coordinate descent with exact refinement of the active set: full sweeps
// activate/deactivate coordinates, then the restricted problem (fixed signs)
// is solved directly, stepping back to the first sign crossing when needed.
// Converged when a full sweep changes no coefficient by 1e-7 or more and the
// KKT conditions hold to 1e-5 per coordinate.
Eigen::VectorXd lasso_solve(const Eigen::MatrixXd& xs, const Eigen::VectorXd& yc,
                            double lambda, const Eigen::VectorXd& col_sq,
                            Eigen::VectorXd beta, FitInfo* info) {
  const double nn = static_cast<double>(xs.rows());
  const Eigen::Index p = xs.cols();
  Eigen::VectorXd r = yc - xs * beta;

  constexpr double kTol = 1e-7;
  constexpr double kKktTol = 1e-5;
  constexpr int kMaxSweeps = 10000;
  int sweeps = 0;

  auto objective = [&]() {
    return r.squaredNorm() / (2.0 * nn) + lambda * beta.cwiseAbs().sum();
  };

  auto full_sweep = [&]() {
    double max_change = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq[j] <= 0.0) continue;
      const double rho = xs.col(j).dot(r) / nn + col_sq[j] * beta[j];
      const double next = soft_threshold(rho, lambda) / col_sq[j];
      const double change = next - beta[j];
      if (change != 0.0) {
        r -= xs.col(j) * change;
        beta[j] = next;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    ++sweeps;
    if (info) info->objective_trace.push_back(objective());
    return max_change;
  };

  // Solves the problem restricted to the current nonzero set with their
  // current signs; backtracks to the first sign crossing if one flips.
  auto refine_active = [&]() {
    for (int round = 0; round < 64; ++round) {
      std::vector<Eigen::Index> active;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (beta[j] != 0.0) active.push_back(j);
      }
      if (active.empty()) return;
      const Eigen::Index m = static_cast<Eigen::Index>(active.size());
      Eigen::MatrixXd xa(xs.rows(), m);
      Eigen::VectorXd sign(m), cur(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        xa.col(k) = xs.col(active[static_cast<std::size_t>(k)]);
        cur[k] = beta[active[static_cast<std::size_t>(k)]];
        sign[k] = cur[k] > 0 ? 1.0 : -1.0;
      }
      Eigen::MatrixXd gram = xa.transpose() * xa / nn;
      gram.diagonal().array() += 1e-12 * std::max(1.0, gram.trace());
      const Eigen::VectorXd rhs = xa.transpose() * yc / nn - lambda * sign;
      const Eigen::VectorXd solved = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(rhs);
      if (!solved.allFinite()) return;

      // First sign crossing along the segment cur -> solved.
      double t_cross = 1.0;
      Eigen::Index crossing = -1;
      for (Eigen::Index k = 0; k < m; ++k) {
        if (solved[k] * sign[k] < 0) {
          const double t = cur[k] / (cur[k] - solved[k]);
          if (t >= 0 && t < t_cross) {
            t_cross = t;
            crossing = k;
          }
        }
      }
      const Eigen::VectorXd target =
          crossing < 0 ? solved : Eigen::VectorXd(cur + t_cross * (solved - cur));
      for (Eigen::Index k = 0; k < m; ++k) {
        beta[active[static_cast<std::size_t>(k)]] = target[k];
      }
      if (crossing >= 0) beta[active[static_cast<std::size_t>(crossing)]] = 0.0;
      r = yc - xs * beta;
      if (info) info->objective_trace.push_back(objective());
      if (crossing < 0) return;  // signs consistent: face optimum reached
    }
  };

  auto kkt_violation = [&]() {
    const Eigen::VectorXd g = xs.transpose() * r / nn;
    double worst = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq[j] <= 0.0) continue;
      const double v = beta[j] == 0.0
                           ? std::max(0.0, std::abs(g[j]) - lambda)
                           : std::abs(g[j] - lambda * (beta[j] > 0 ? 1.0 : -1.0));
      worst = std::max(worst, v);
    }
    return worst;
  };

  while (true) {
    const double change = full_sweep();
    if (change < kTol) {
      r = yc - xs * beta;  // drop accumulated update error before certifying
      if (kkt_violation() <= kKktTol) break;
    } else {
      refine_active();
    }
    if (sweeps >= kMaxSweeps) {
      throw LassoNonConvergence(
          "lasso coordinate descent did not converge after " +
              std::to_string(sweeps) + " sweeps (lambda=" +
              std::to_string(lambda) + ")",
          beta);
    }
  }
  if (info) info->iterations = sweeps;
  return beta;
}

// --- logistic core ----------------------------------------------------------

struct LinearSolution {
  Eigen::VectorXd beta;
  double intercept = 0;
  FitInfo info;
};

LinearSolution logistic_solve(const Eigen::MatrixXd& xs,
                              const Eigen::VectorXd& y01,
                              const Eigen::MatrixXd& kernel, double c) {
  const Eigen::Index n = xs.rows();
  const double nn = static_cast<double>(n);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  double b = 0;

  auto objective = [&](const Eigen::VectorXd& a, double b0) {
    const Eigen::VectorXd z = kernel * a + Eigen::VectorXd::Constant(n, b0);
    double loss = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      loss += softplus(-(2.0 * y01[i] - 1.0) * z[i]);
    }
    return loss / nn + a.dot(kernel * a) / (2.0 * c);
  };

  constexpr int kMaxIter = 500;
  constexpr double kGradTol = 1e-6;
  LinearSolution sol;
  double current = objective(alpha, b);
  sol.info.objective_trace.push_back(current);

  int iter = 0;
  bool converged = false;
  for (; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd z = kernel * alpha + Eigen::VectorXd::Constant(n, b);
    const Eigen::VectorXd prob = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    const Eigen::VectorXd d = (prob - y01) / nn + alpha / c;

    // Convergence is certified in coefficient space.
    const Eigen::VectorXd grad_beta = xs.transpose() * d;
    const double grad_b = (prob - y01).sum() / nn;
    if (std::sqrt(grad_beta.squaredNorm() + grad_b * grad_b) < kGradTol) {
      converged = true;
      break;
    }

    const Eigen::VectorXd w = (prob.array() * (1.0 - prob.array())).matrix();
    Eigen::VectorXd g(n + 1);
    g.head(n) = kernel * d;
    g[n] = grad_b;

    Eigen::MatrixXd hess(n + 1, n + 1);
    const Eigen::VectorXd kw = kernel * w / nn;
    hess.topLeftCorner(n, n) =
        kernel * w.asDiagonal() * kernel / nn + kernel / c;
    hess.block(0, n, n, 1) = kw;
    hess.block(n, 0, 1, n) = kw.transpose();
    hess(n, n) = w.sum() / nn;

    double mu = 1e-12 * (1.0 + hess.trace());
    Eigen::VectorXd step;
    bool have_step = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd damped = hess;
      damped.diagonal().array() += mu;
      step = Eigen::LDLT<Eigen::MatrixXd>(damped).solve(-g);
      if (step.allFinite() && g.dot(step) < 0) {
        have_step = true;
        break;
      }
      mu *= 100;
    }
    if (!have_step) step = -g;

    const double slope = g.dot(step);
    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd a_try = alpha + t * step.head(n);
      const double b_try = b + t * step[n];
      const double next = objective(a_try, b_try);
      if (next <= current + 1e-4 * t * slope) {
        alpha = a_try;
        b = b_try;
        current = next;
        improved = true;
        break;
      }
      t /= 2;
    }
    sol.info.objective_trace.push_back(current);
    if (!improved) break;  // stalled at numerical precision
  }

  if (!converged) {
    // Re-check the certificate at the final iterate.
    const Eigen::VectorXd z = kernel * alpha + Eigen::VectorXd::Constant(n, b);
    const Eigen::VectorXd prob = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    const Eigen::VectorXd d = (prob - y01) / nn + alpha / c;
    const Eigen::VectorXd grad_beta = xs.transpose() * d;
    const double grad_b = (prob - y01).sum() / nn;
    if (std::sqrt(grad_beta.squaredNorm() + grad_b * grad_b) >= kGradTol) {
      throw ConvergenceError("logistic solver did not reach gradient tolerance");
    }
  }

  sol.beta = xs.transpose() * alpha;
  sol.intercept = b;
  sol.info.iterations = iter;
  return sol;
}

// --- svm core -----------------------------------------------------------------

LinearSolution svm_solve(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ypm,
                         const Eigen::MatrixXd& kernel, double c) {
  const Eigen::Index n = xs.rows();
  const double box = c / static_cast<double>(n);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q a - 1 at a = 0

  const double scale = std::max(1.0, box * kernel.diagonal().maxCoeff());
  const double tol = 1e-10 * scale;
  const long max_iter = 2000000;
  constexpr double kTau = 1e-12;

  LinearSolution sol;
  std::vector<double>& trace = sol.info.objective_trace;
  trace.push_back(0.0);

  long iter = 0;
  double m_up = 0, m_low = 0;
  for (; iter < max_iter; ++iter) {
    int i = -1, j = -1;
    m_up = -std::numeric_limits<double>::infinity();
    m_low = std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) {
      const bool up = (ypm[t] > 0 && alpha[t] < box) || (ypm[t] < 0 && alpha[t] > 0);
      const bool low = (ypm[t] > 0 && alpha[t] > 0) || (ypm[t] < 0 && alpha[t] < box);
      const double v = -ypm[t] * grad[t];
      if (up && v > m_up) {
        m_up = v;
        i = t;
      }
      if (low && v < m_low) {
        m_low = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || m_up - m_low < tol) break;

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    if (ypm[i] != ypm[j]) {
      double quad = kernel(i, i) + kernel(j, j) + 2 * kernel(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
        if (alpha[i] > box) {
          alpha[i] = box;
          alpha[j] = box - diff;
        }
      } else {
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = -diff;
        }
        if (alpha[j] > box) {
          alpha[j] = box;
          alpha[i] = box + diff;
        }
      }
    } else {
      double quad = kernel(i, i) + kernel(j, j) - 2 * kernel(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > box) {
        if (alpha[i] > box) {
          alpha[i] = box;
          alpha[j] = sum - box;
        }
        if (alpha[j] > box) {
          alpha[j] = box;
          alpha[i] = sum - box;
        }
      } else {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = sum;
        }
      }
    }

    const double di = ypm[i] * (alpha[i] - old_ai);
    const double dj = ypm[j] * (alpha[j] - old_aj);
    grad += kernel.col(i).cwiseProduct(ypm) * di +
            kernel.col(j).cwiseProduct(ypm) * dj;
    // Dual objective via a.Qa = a.(grad + 1).
    trace.push_back(0.5 * alpha.dot(grad) - 0.5 * alpha.sum());
  }
  if (iter >= max_iter) {
    throw ConvergenceError("svm SMO did not converge in " +
                           std::to_string(max_iter) + " iterations");
  }

  sol.beta = xs.transpose() * alpha.cwiseProduct(ypm);

  // Intercept from free support vectors, else the violating-pair midpoint.
  double b_sum = 0;
  int b_count = 0;
  for (int t = 0; t < n; ++t) {
    if (alpha[t] > kTau && alpha[t] < box - kTau) {
      b_sum += -ypm[t] * grad[t];
      b_count++;
    }
  }
  sol.intercept = b_count > 0 ? b_sum / b_count : 0.5 * (m_up + m_low);
  sol.info.iterations = static_cast<int>(iter);
  return sol;
}

void check_binary_01(const Eigen::Ref<const Eigen::VectorXd>& y) {
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) has0 = true;
    else if (y[i] == 1.0) has1 = true;
    else throw ValidationError("labels must be 0 or 1");
  }
  if (!has0 || !has1) throw DegenerateError("both classes must be present");
}

void check_binary_pm(const Eigen::Ref<const Eigen::VectorXd>& y) {
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) pos = true;
    else if (y[i] == -1.0) neg = true;
    else throw ValidationError("labels must be -1 or +1");
  }
  if (!pos || !neg) throw DegenerateError("both classes must be present");
}

}  // namespace

// --- public fits ------------------------------------------------------------

FittedModel ridge_fit(const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y, double lambda) {
  require_finite(x, y);
  if (lambda < 0) throw ConfigError("ridge lambda must be nonnegative");

  FittedModel model;
  model.kind = ModelKind::ridge;
  model.reg = lambda;
  model.standardizer = Standardizer::fit(x);
  const Eigen::MatrixXd xs = model.standardizer.apply(x);
  const double ymean = y.mean();
  const Eigen::VectorXd yc = y.array() - ymean;

  const bool primal = xs.cols() <= xs.rows() || lambda <= 0;
  const Eigen::MatrixXd gram =
      primal ? Eigen::MatrixXd(xs.transpose() * xs) : Eigen::MatrixXd(xs * xs.transpose());
  model.beta = ridge_solve(xs, yc, gram, primal, lambda);
  model.intercept = ymean;
  model.info.iterations = 1;
  model.info.objective_trace = {(yc - xs * model.beta).squaredNorm() +
                                lambda * model.beta.squaredNorm()};
  return model;
}

double lasso_objective(const Eigen::Ref<const Eigen::MatrixXd>& x_std,
                       const Eigen::Ref<const Eigen::VectorXd>& y_centered,
                       double lambda,
                       const Eigen::Ref<const Eigen::VectorXd>& beta) {
  const double n = static_cast<double>(x_std.rows());
  return (y_centered - x_std * beta).squaredNorm() / (2.0 * n) +
         lambda * beta.cwiseAbs().sum();
}

double lasso_kkt_max_violation(const Eigen::Ref<const Eigen::MatrixXd>& x_std,
                               const Eigen::Ref<const Eigen::VectorXd>& y_centered,
                               double lambda,
                               const Eigen::Ref<const Eigen::VectorXd>& beta) {
  const double n = static_cast<double>(x_std.rows());
  const Eigen::VectorXd r = y_centered - x_std * beta;
  const Eigen::VectorXd g = x_std.transpose() * r / n;
  double worst = 0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    double v;
    if (beta[j] == 0.0) {
      v = std::max(0.0, std::abs(g[j]) - lambda);
    } else {
      v = std::abs(g[j] - lambda * (beta[j] > 0 ? 1.0 : -1.0));
    }
    worst = std::max(worst, v);
  }
  return worst;
}

FittedModel lasso_fit(const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y, double lambda,
                      const Eigen::VectorXd* warm_start) {
  require_finite(x, y);
  if (lambda < 0) throw ConfigError("lasso lambda must be nonnegative");

  FittedModel model;
  model.kind = ModelKind::lasso;
  model.reg = lambda;
  model.standardizer = Standardizer::fit(x);
  const Eigen::MatrixXd xs = model.standardizer.apply(x);
  const double ymean = y.mean();
  const Eigen::VectorXd yc = y.array() - ymean;
  const double nn = static_cast<double>(xs.rows());

  Eigen::VectorXd col_sq(xs.cols());
  for (Eigen::Index j = 0; j < xs.cols(); ++j) {
    col_sq[j] = xs.col(j).squaredNorm() / nn;
  }
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(xs.cols());
  if (warm_start && warm_start->size() == xs.cols()) beta0 = *warm_start;

  model.beta = lasso_solve(xs, yc, lambda, col_sq, std::move(beta0), &model.info);
  model.intercept = ymean;
  return model;
}

FittedModel logistic_fit(const Eigen::Ref<const Eigen::MatrixXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y01, double c) {
  require_finite(x, y01);
  if (c <= 0) throw ConfigError("logistic C must be positive");
  check_binary_01(y01);

  FittedModel model;
  model.kind = ModelKind::logistic_l2;
  model.reg = c;
  model.standardizer = Standardizer::fit(x);
  const Eigen::MatrixXd xs = model.standardizer.apply(x);
  const Eigen::MatrixXd kernel = xs * xs.transpose();
  LinearSolution sol = logistic_solve(xs, y01, kernel, c);
  model.beta = std::move(sol.beta);
  model.intercept = sol.intercept;
  model.info = std::move(sol.info);
  return model;
}

FittedModel svm_fit(const Eigen::Ref<const Eigen::MatrixXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& ypm, double c) {
  require_finite(x, ypm);
  if (c <= 0) throw ConfigError("svm C must be positive");
  check_binary_pm(ypm);

  FittedModel model;
  model.kind = ModelKind::linear_svm;
  model.reg = c;
  model.standardizer = Standardizer::fit(x);
  const Eigen::MatrixXd xs = model.standardizer.apply(x);
  const Eigen::MatrixXd kernel = xs * xs.transpose();
  LinearSolution sol = svm_solve(xs, ypm, kernel, c);
  model.beta = std::move(sol.beta);
  model.intercept = sol.intercept;
  model.info = std::move(sol.info);
  return model;
}

double logistic_objective(const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y01, double c,
                          const Eigen::Ref<const Eigen::VectorXd>& beta,
                          double intercept) {
  const Eigen::Index n = x.rows();
  const Eigen::VectorXd z = (x * beta).array() + intercept;
  double loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss += softplus(-(2.0 * y01[i] - 1.0) * z[i]);
  }
  return loss / static_cast<double>(n) + beta.squaredNorm() / (2.0 * c);
}

Eigen::VectorXd logistic_gradient(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& y01,
                                  double c,
                                  const Eigen::Ref<const Eigen::VectorXd>& beta,
                                  double intercept) {
  const Eigen::Index n = x.rows();
  const Eigen::VectorXd z = (x * beta).array() + intercept;
  const Eigen::VectorXd prob = (1.0 / (1.0 + (-z.array()).exp())).matrix();
  const Eigen::VectorXd d = (prob - y01) / static_cast<double>(n);
  Eigen::VectorXd g(beta.size() + 1);
  g.head(beta.size()) = x.transpose() * d + beta / c;
  g[beta.size()] = d.sum();
  return g;
}

double svm_objective(const Eigen::Ref<const Eigen::MatrixXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& ypm, double c,
                     const Eigen::Ref<const Eigen::VectorXd>& beta,
                     double intercept) {
  const Eigen::Index n = x.rows();
  const Eigen::VectorXd z = (x * beta).array() + intercept;
  double hinge = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    hinge += std::max(0.0, 1.0 - ypm[i] * z[i]);
  }
  return 0.5 * beta.squaredNorm() + c * hinge / static_cast<double>(n);
}

Eigen::VectorXd svm_gradient(const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& ypm, double c,
                             const Eigen::Ref<const Eigen::VectorXd>& beta,
                             double intercept) {
  const Eigen::Index n = x.rows();
  const Eigen::VectorXd z = (x * beta).array() + intercept;
  Eigen::VectorXd g(beta.size() + 1);
  g.head(beta.size()) = beta;
  g[beta.size()] = 0;
  const double scale = c / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ypm[i] * z[i] < 1.0) {
      g.head(beta.size()) -= scale * ypm[i] * x.row(i).transpose();
      g[beta.size()] -= scale * ypm[i];
    }
  }
  return g;
}

std::vector<FittedModel> fit_linear_path(ModelKind kind,
                                         const Eigen::Ref<const Eigen::MatrixXd>& x,
                                         const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const std::vector<double>& regs) {
  require_finite(x, y);
  if (regs.empty()) throw ConfigError("empty regularization grid");

  const Standardizer standardizer = Standardizer::fit(x);
  const Eigen::MatrixXd xs = standardizer.apply(x);
  std::vector<FittedModel> out(regs.size());
  for (auto& m : out) {
    m.kind = kind;
    m.standardizer = standardizer;
  }

  switch (kind) {
    case ModelKind::ridge: {
      const double ymean = y.mean();
      const Eigen::VectorXd yc = y.array() - ymean;
      const bool primal = xs.cols() <= xs.rows();
      const Eigen::MatrixXd gram = primal
                                       ? Eigen::MatrixXd(xs.transpose() * xs)
                                       : Eigen::MatrixXd(xs * xs.transpose());
      Eigen::MatrixXd primal_gram;  // only needed for an unpenalized dual entry
      for (std::size_t i = 0; i < regs.size(); ++i) {
        out[i].reg = regs[i];
        if (!primal && regs[i] <= 0) {
          if (primal_gram.size() == 0) primal_gram = xs.transpose() * xs;
          out[i].beta = ridge_solve(xs, yc, primal_gram, true, regs[i]);
        } else {
          out[i].beta = ridge_solve(xs, yc, gram, primal, regs[i]);
        }
        out[i].intercept = ymean;
        out[i].info.iterations = 1;
      }
      break;
    }
    case ModelKind::lasso: {
      const double ymean = y.mean();
      const Eigen::VectorXd yc = y.array() - ymean;
      const double nn = static_cast<double>(xs.rows());
      Eigen::VectorXd col_sq(xs.cols());
      for (Eigen::Index j = 0; j < xs.cols(); ++j) {
        col_sq[j] = xs.col(j).squaredNorm() / nn;
      }
      // Descending lambda with warm starts.
      std::vector<std::size_t> order(regs.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return regs[a] > regs[b]; });
      Eigen::VectorXd warm = Eigen::VectorXd::Zero(xs.cols());
      for (std::size_t oi : order) {
        out[oi].reg = regs[oi];
        out[oi].beta = lasso_solve(xs, yc, regs[oi], col_sq, warm, &out[oi].info);
        out[oi].intercept = ymean;
        warm = out[oi].beta;
      }
      break;
    }
    case ModelKind::logistic_l2: {
      check_binary_01(y);
      const Eigen::MatrixXd kernel = xs * xs.transpose();
      for (std::size_t i = 0; i < regs.size(); ++i) {
        if (regs[i] <= 0) throw ConfigError("logistic C must be positive");
        LinearSolution sol = logistic_solve(xs, y, kernel, regs[i]);
        out[i].reg = regs[i];
        out[i].beta = std::move(sol.beta);
        out[i].intercept = sol.intercept;
        out[i].info = std::move(sol.info);
      }
      break;
    }
    case ModelKind::linear_svm: {
      check_binary_pm(y);
      const Eigen::MatrixXd kernel = xs * xs.transpose();
      for (std::size_t i = 0; i < regs.size(); ++i) {
        if (regs[i] <= 0) throw ConfigError("svm C must be positive");
        LinearSolution sol = svm_solve(xs, y, kernel, regs[i]);
        out[i].reg = regs[i];
        out[i].beta = std::move(sol.beta);
        out[i].intercept = sol.intercept;
        out[i].info = std::move(sol.info);
      }
      break;
    }
    default:
      throw UnsupportedKindError("fit_linear_path expects a linear model kind");
  }
  return out;
}

}  // namespace drivetraits
