#ifndef CARATE_GRAM_HPP
#define CARATE_GRAM_HPP

#include <Eigen/Core>

#include "carate/common.hpp"

namespace carate {

inline constexpr double kDefaultRcond = 1e-10;

// A stratum Gram matrix together with its (pseudo-)inverse. `pseudo` records
// that the matrix was rank deficient at the given tolerance and a
// Moore-Penrose inverse was substituted; every downstream report carries the
// flag because the variance guarantees need a genuine inverse.
struct GramPair {
    Eigen::MatrixXd matrix;   // p x p, symmetric PSD
    Eigen::MatrixXd inverse;  // p x p
    bool oracle = false;      // population matrix supplied, not estimated
    bool pseudo = false;
    double rcond = kDefaultRcond;
};

// (1/n_k) sum_i x_i x_i^T for the rows of one stratum.
Eigen::MatrixXd sample_gram(const Eigen::Ref<const Eigen::MatrixXd>& rows);

// Exact inverse when the smallest eigenvalue exceeds rcond * largest,
// otherwise the Moore-Penrose pseudo-inverse with the pseudo flag set.
// Both paths go through one symmetric eigendecomposition so the cutoff
// decision and the inverse are consistent with each other.
GramPair invert_or_pseudo(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                          double rcond = kDefaultRcond);

// Sherman-Morrison downdate: (G - c u u^T)^{-1} from Ginv.
// Throws NumericError when 1 - c u^T Ginv u is within 1e-12 of zero.
Eigen::MatrixXd rank_one_downdate(const Eigen::Ref<const Eigen::MatrixXd>& ginv,
                                  const Eigen::Ref<const Eigen::VectorXd>& u, double c);

// sum_{i != j} w_i v_j x_i^T M x_j, evaluated as
// (sum w_i x_i)^T M (sum v_j x_j) - sum_i w_i v_i x_i^T M x_i.
double bilinear_offdiag_sum(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& w,
                            const Eigen::Ref<const Eigen::VectorXd>& v,
                            const Eigen::Ref<const Eigen::MatrixXd>& m);

// sum_{i != j} w_i v_j (x_i^T M x_j)^2, evaluated as
// tr(M B_v M^T B_w) - sum_i w_i v_i (x_i^T M x_i)^2 with
// B_w = sum_i w_i x_i x_i^T.
double squared_kernel_offdiag_sum(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& w,
                                  const Eigen::Ref<const Eigen::VectorXd>& v,
                                  const Eigen::Ref<const Eigen::MatrixXd>& m);

} // namespace carate

#endif
