#pragma once

#include <Eigen/Core>

namespace drivetraits {

// Pearson correlation; throws UndefinedValueError when either input has zero
// variance or fewer than 2 samples.
double pearson_r(const Eigen::Ref<const Eigen::VectorXd>& a,
                 const Eigen::Ref<const Eigen::VectorXd>& b);

double rmse(const Eigen::Ref<const Eigen::VectorXd>& pred,
            const Eigen::Ref<const Eigen::VectorXd>& truth);

// Unweighted mean of per-class F1 over the label set {0, 1}; a class with an
// undefined F1 contributes 0.
double macro_f1(const Eigen::Ref<const Eigen::VectorXd>& pred,
                const Eigen::Ref<const Eigen::VectorXd>& truth);

// Two-sided p-value of the t-test for zero correlation with n samples.
double pearson_p_value(double r, int n);

}  // namespace drivetraits
