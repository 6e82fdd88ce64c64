#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drivetraits/errors.hpp"

namespace drivetraits {

struct FeatureMatrix;  // features.hpp

// --- feature standardization --------------------------------------------------

// Per-column affine map fitted on training rows only; scale is floored so
// constant columns map to zero instead of blowing up.
struct Standardizer {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;

  static constexpr double kScaleFloor = 1e-12;

  static Standardizer fit(const Eigen::Ref<const Eigen::MatrixXd>& x);
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

// --- model specification -------------------------------------------------------

enum class ModelKind {
  ridge,
  lasso,
  logistic_l2,
  linear_svm,
  random_forest_reg,
  random_forest_clf,
};

std::string_view model_kind_name(ModelKind kind);
std::optional<ModelKind> model_kind_from_name(std::string_view name);
bool is_linear_kind(ModelKind kind);
bool is_classifier_kind(ModelKind kind);

// Regularization grid shared by ridge/lasso (lambda) and logistic/SVM (C),
// and the forest depth grid.
const std::vector<double>& default_reg_grid();    // 0.001 .. 100
const std::vector<int>& default_depth_grid();     // 3, 5, 7, 9, 11

struct ForestOptions {
  int n_trees = 200;
  int max_depth = 11;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct ModelSpec {
  ModelKind kind = ModelKind::ridge;
  double reg = 1.0;  // lambda (ridge/lasso) or C (logistic/svm)
  ForestOptions forest;
};

// --- fit diagnostics -----------------------------------------------------------

struct FitInfo {
  std::vector<double> objective_trace;  // optimizer objective per sweep/iteration
  int iterations = 0;
  std::string note;
};

// Thrown when coordinate descent fails to converge; carries the last iterate
// (standardized coefficients).
struct LassoNonConvergence : ConvergenceError {
  LassoNonConvergence(const std::string& msg, Eigen::VectorXd beta)
      : ConvergenceError(msg), last_beta(std::move(beta)) {}
  Eigen::VectorXd last_beta;
};

// --- decision trees ------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;
  int right = -1;
  double value = 0;  // leaf prediction (class id for classification)
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

struct Forest {
  std::vector<Tree> trees;
  bool classification = false;
};

// --- fitted model --------------------------------------------------------------

// A fitted predictor: the training standardizer plus either linear
// coefficients (in standardized units) or a tree ensemble. Immutable and
// safe to share across threads.
struct FittedModel {
  ModelKind kind = ModelKind::ridge;
  Standardizer standardizer;
  std::vector<std::string> feature_names;

  // linear kinds
  Eigen::VectorXd beta;  // standardized units
  double intercept = 0;

  // forest kinds
  Forest forest;
  ForestOptions forest_options;

  double reg = 0;  // hyperparameter the model was fitted with
  FitInfo info;

  // Predictions on raw (unstandardized) feature rows whose columns are
  // aligned with the training columns. Regression: predicted value.
  // Classification: hard label (0/1 for logistic/forest, -1/+1 for svm).
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  // Real-valued classification score; the decision boundary is 0.
  Eigen::VectorXd decision_score(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  // Validates the column names of `x` against the training columns first.
  Eigen::VectorXd predict_checked(const FeatureMatrix& x) const;

  // Linear coefficients mapped back to raw feature units.
  Eigen::VectorXd raw_coefficients() const;

  nlohmann::ordered_json to_json() const;
  static FittedModel from_json(const nlohmann::json& j);
};

// --- fitting -------------------------------------------------------------------

// Ridge: min ||y - X b||^2 + lambda ||b||^2 over standardized columns, with
// an unpenalized intercept. Solved via the normal equations (dual form when
// p > n) with iterative refinement to residual tolerance 1e-8.
FittedModel ridge_fit(const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y, double lambda);

// Lasso: coordinate descent on (1/2n)||y - X b||^2 + lambda ||b||_1 over
// standardized columns. Converged when the largest coefficient change in a
// full sweep is below 1e-7; at most 1e4 sweeps.
FittedModel lasso_fit(const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y, double lambda,
                      const Eigen::VectorXd* warm_start = nullptr);

// Largest KKT violation of a lasso iterate on the standardized problem.
double lasso_kkt_max_violation(const Eigen::Ref<const Eigen::MatrixXd>& x_std,
                               const Eigen::Ref<const Eigen::VectorXd>& y_centered,
                               double lambda,
                               const Eigen::Ref<const Eigen::VectorXd>& beta);

// L2 logistic regression: min mean log-loss + (1/2C)||b||^2, intercept
// unpenalized. Newton iterations in the sample span; gradient norm at the
// solution < 1e-6.
FittedModel logistic_fit(const Eigen::Ref<const Eigen::MatrixXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y01, double c);

// Linear SVM: min (1/2)||b||^2 + (C/n) sum hinge(y_i (x_i.b + b0)) via SMO on
// the dual with an unpenalized intercept. Labels in {-1,+1}.
FittedModel svm_fit(const Eigen::Ref<const Eigen::MatrixXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& ypm, double c);

// Random forest of CART trees on bootstrap samples; variance-reduction or
// Gini splits over ceil(sqrt(p)) candidate features per node. Classification
// labels in {0,1}; vote ties break to the smaller label.
FittedModel forest_fit(const Eigen::Ref<const Eigen::MatrixXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       const ForestOptions& options, bool classification);

FittedModel fit_model(const ModelSpec& spec,
                      const Eigen::Ref<const Eigen::MatrixXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y);

// One fit per grid value, sharing the standardization and Gram/kernel setup
// across the grid (lasso fits are warm-started along a descending path).
// Results are in grid order and identical to individual fits up to solver
// tolerance.
std::vector<FittedModel> fit_linear_path(ModelKind kind,
                                         const Eigen::Ref<const Eigen::MatrixXd>& x,
                                         const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const std::vector<double>& regs);

// --- objectives for verification -----------------------------------------------

double logistic_objective(const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y01, double c,
                          const Eigen::Ref<const Eigen::VectorXd>& beta,
                          double intercept);
// Returns the gradient wrt (beta, intercept); intercept slope in the last slot.
Eigen::VectorXd logistic_gradient(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& y01,
                                  double c,
                                  const Eigen::Ref<const Eigen::VectorXd>& beta,
                                  double intercept);

double svm_objective(const Eigen::Ref<const Eigen::MatrixXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& ypm, double c,
                     const Eigen::Ref<const Eigen::VectorXd>& beta,
                     double intercept);
// Subgradient surrogate (exact gradient away from hinge kinks).
Eigen::VectorXd svm_gradient(const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& ypm, double c,
                             const Eigen::Ref<const Eigen::VectorXd>& beta,
                             double intercept);

double lasso_objective(const Eigen::Ref<const Eigen::MatrixXd>& x_std,
                       const Eigen::Ref<const Eigen::VectorXd>& y_centered,
                       double lambda,
                       const Eigen::Ref<const Eigen::VectorXd>& beta);

}  // namespace drivetraits
