#include "carate/gram.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace carate {

Eigen::MatrixXd sample_gram(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
    if (rows.rows() < 1) {
        throw ValidationError("sample_gram: need at least one row");
    }
    if (rows.cols() < 1) {
        throw ValidationError("sample_gram: need at least one column");
    }
    Eigen::MatrixXd gram = (rows.transpose() * rows) / static_cast<double>(rows.rows());
    // X'X is symmetric up to roundoff; make it exact so the eigensolver and
    // the symmetry invariant see the same matrix.
    gram = ((gram + gram.transpose()) * 0.5).eval();
    return gram;
}

GramPair invert_or_pseudo(const Eigen::Ref<const Eigen::MatrixXd>& gram, double rcond) {
    GramPair out;
    out.rcond = rcond;
    if (gram.rows() != gram.cols()) {
        throw ValidationError("invert_or_pseudo: matrix must be square");
    }
    const Eigen::Index dim = gram.rows();
    if (dim == 0) {
        out.matrix.resize(0, 0);
        out.inverse.resize(0, 0);
        return out;
    }
    if (!gram.allFinite()) {
        throw NumericError("invert_or_pseudo: non-finite entry");
    }
    const double scale = gram.cwiseAbs().maxCoeff();
    const double asym = (gram - gram.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(1.0, scale)) {
        throw NumericError("invert_or_pseudo: matrix is not symmetric");
    }
    out.matrix = (gram + gram.transpose()) * 0.5;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(out.matrix);
    if (eigen.info() != Eigen::Success) {
        throw NumericError("invert_or_pseudo: eigendecomposition failed");
    }
    const Eigen::VectorXd& values = eigen.eigenvalues();
    const double largest = values.cwiseAbs().maxCoeff();
    const double cutoff = rcond * largest;

    Eigen::VectorXd inverted(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        if (values[i] > cutoff && values[i] > 0.0) {
            inverted[i] = 1.0 / values[i];
        } else {
            inverted[i] = 0.0;
            out.pseudo = true;
        }
    }
    out.inverse = eigen.eigenvectors() * inverted.asDiagonal() * eigen.eigenvectors().transpose();
    out.inverse = ((out.inverse + out.inverse.transpose()) * 0.5).eval();
    return out;
}

Eigen::MatrixXd rank_one_downdate(const Eigen::Ref<const Eigen::MatrixXd>& ginv,
                                  const Eigen::Ref<const Eigen::VectorXd>& u, double c) {
    if (ginv.rows() != ginv.cols() || ginv.rows() != u.size()) {
        throw ValidationError("rank_one_downdate: dimension mismatch");
    }
    if (c == 0.0) return ginv;
    const Eigen::VectorXd gu = ginv * u;
    const double denom = 1.0 - c * u.dot(gu);
    if (std::abs(denom) < 1e-12) {
        throw NumericError("rank_one_downdate: singular downdate");
    }
    return ginv + (c / denom) * (gu * gu.transpose());
}

double bilinear_offdiag_sum(const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& w,
                            const Eigen::Ref<const Eigen::VectorXd>& v,
                            const Eigen::Ref<const Eigen::MatrixXd>& m) {
    const Eigen::Index count = x.rows();
    const Eigen::Index dim = x.cols();
    if (w.size() != count || v.size() != count || m.rows() != dim || m.cols() != dim) {
        throw ValidationError("bilinear_offdiag_sum: dimension mismatch");
    }
    if (dim == 0) return 0.0;
    const Eigen::VectorXd sw = x.transpose() * w;
    const Eigen::VectorXd sv = x.transpose() * v;
    const double full = sw.dot(m * sv);
    const Eigen::MatrixXd xm = x * m;            // row i = x_i' M
    const double diag = (xm.cwiseProduct(x).rowwise().sum().array() * w.array() * v.array()).sum();
    return full - diag;
}

double squared_kernel_offdiag_sum(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& w,
                                  const Eigen::Ref<const Eigen::VectorXd>& v,
                                  const Eigen::Ref<const Eigen::MatrixXd>& m) {
    const Eigen::Index count = x.rows();
    const Eigen::Index dim = x.cols();
    if (w.size() != count || v.size() != count || m.rows() != dim || m.cols() != dim) {
        throw ValidationError("squared_kernel_offdiag_sum: dimension mismatch");
    }
    if (dim == 0) return 0.0;
    const Eigen::MatrixXd bw = x.transpose() * w.asDiagonal() * x;
    const Eigen::MatrixXd bv = x.transpose() * v.asDiagonal() * x;
    // tr(M B_v M' B_w) = <M B_v, B_w M> since B_w is symmetric; exact for
    // asymmetric M too.
    const double full = (m * bv).cwiseProduct(bw * m).sum();
    const Eigen::VectorXd quad = (x * m).cwiseProduct(x).rowwise().sum();
    const double diag = (quad.array().square() * w.array() * v.array()).sum();
    return full - diag;
}

} // namespace carate
