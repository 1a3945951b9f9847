#include "eiglab/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <sstream>

namespace eiglab {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using cplx = std::complex<double>;

std::string dim_str(const Matrix& M) {
    std::ostringstream os;
    os << M.rows() << "x" << M.cols();
    return os.str();
}

// Complex Schur form with the stable eigenvalues (Re < 0) moved to the
// leading diagonal positions. Adjacent diagonal entries are swapped with
// Givens rotations acting on the eigenvector of the trailing entry.
void ordered_complex_schur(const Matrix& B, MatrixXcd& T, MatrixXcd& U, int& n_stable) {
    Eigen::ComplexSchur<MatrixXcd> schur(B.cast<cplx>());
    if (schur.info() != Eigen::Success)
        throw ConvergenceError("complex Schur decomposition failed");
    T = schur.matrixT();
    U = schur.matrixU();
    const Eigen::Index n = B.rows();

    auto is_stable = [](cplx z) { return z.real() < 0.0; };
    bool moved = true;
    while (moved) {
        moved = false;
        for (Eigen::Index k = 0; k + 1 < n; ++k) {
            if (!is_stable(T(k, k)) && is_stable(T(k + 1, k + 1))) {
                const cplx a = T(k, k);
                const cplx b = T(k, k + 1);
                const cplx d = T(k + 1, k + 1);
                // (b, d-a) spans the eigenvector of [[a,b],[0,d]] for d.
                Eigen::JacobiRotation<cplx> G;
                cplx r;
                G.makeGivens(b, d - a, &r);
                T.applyOnTheLeft(k, k + 1, G.adjoint());
                T.applyOnTheRight(k, k + 1, G);
                U.applyOnTheRight(k, k + 1, G);
                T(k + 1, k) = cplx(0.0, 0.0);
                moved = true;
            }
        }
    }
    n_stable = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (is_stable(T(i, i))) ++n_stable;
}

// Orthonormal real basis of the column span of a complex matrix whose span
// is invariant under conjugation. rank is known a priori.
Matrix real_span_basis(const MatrixXcd& V, int rank) {
    Matrix cand(V.rows(), 2 * V.cols());
    cand << V.real(), V.imag();
    Eigen::ColPivHouseholderQR<Matrix> qr(cand);
    Matrix Q = qr.householderQ();
    return Q.leftCols(rank);
}

void require_spectrum_side(const Matrix& B, bool want_stable, const char* what) {
    if (B.rows() == 0) return;
    Eigen::EigenSolver<Matrix> es(B, false);
    for (Eigen::Index i = 0; i < B.rows(); ++i) {
        const double re = es.eigenvalues()(i).real();
        if (want_stable ? (re >= 0.0) : (re <= 0.0)) {
            std::ostringstream os;
            os << what << ": eigenvalue with Re = " << re
               << " makes the Gramian integral divergent";
            throw DivergentIntegralError(os.str());
        }
    }
}

} // namespace

void require_square_finite(const Matrix& M, const char* what) {
    if (M.rows() != M.cols())
        throw InvalidArgumentError(std::string(what) + ": matrix must be square, got " + dim_str(M));
    if (M.rows() < 1)
        throw InvalidArgumentError(std::string(what) + ": matrix dimension must be at least 1");
    if (!M.allFinite())
        throw InvalidArgumentError(std::string(what) + ": matrix has non-finite entries");
}

double spectral_norm(const Matrix& M) {
    if (M.rows() == 0 || M.cols() == 0) return 0.0;
    return M.jacobiSvd().singularValues()(0);
}

Matrix mat_exp(const Matrix& B, double t) {
    if (B.rows() == 0 && B.cols() == 0) return Matrix(0, 0);
    require_square_finite(B, "mat_exp");
    if (!std::isfinite(t))
        throw InvalidArgumentError("mat_exp: time must be finite");
    Matrix tB = t * B;
    const double norm = tB.norm();
    if (norm > defaults::exp_norm_cap) {
        std::ostringstream os;
        os << "mat_exp: ||tB|| = " << norm << " exceeds cap " << defaults::exp_norm_cap;
        throw InvalidArgumentError(os.str());
    }
    return tB.exp();
}

HyperbolicSplitting spectral_split(const Matrix& B, double floor, double ortho_tol) {
    require_square_finite(B, "spectral_split");
    const int n = static_cast<int>(B.rows());

    MatrixXcd T, U;
    int ms = 0;
    ordered_complex_schur(B, T, U, ms);
    for (int i = 0; i < n; ++i) {
        if (std::abs(T(i, i).real()) < floor) {
            std::ostringstream os;
            os << "spectral_split: eigenvalue " << T(i, i).real()
               << (T(i, i).imag() >= 0 ? "+" : "") << T(i, i).imag()
               << "i violates hyperbolicity floor " << floor;
            throw HyperbolicityError(os.str());
        }
    }
    const int mu = n - ms;

    HyperbolicSplitting split;
    split.stable_dim = ms;
    split.unstable_dim = mu;
    if (ms == n || mu == n) {
        split.basis = Matrix::Identity(n, n);
        split.stable_block = (ms == n) ? B : Matrix(0, 0);
        split.unstable_block = (mu == n) ? B : Matrix(0, 0);
        return split;
    }

    Matrix Vs = real_span_basis(U.leftCols(ms), ms);
    Matrix Vu = real_span_basis(U.rightCols(mu), mu);
    const double coupling = spectral_norm(Vs.transpose() * Vu);
    if (coupling > ortho_tol) {
        std::ostringstream os;
        os << "spectral_split: stable/unstable subspaces are not orthogonal, "
           << "max principal cosine " << coupling << " > " << ortho_tol;
        throw OrthogonalityError(os.str());
    }

    // Joint re-orthonormalization; leading columns keep the stable span.
    Matrix both(n, n);
    both << Vs, Vu;
    Eigen::HouseholderQR<Matrix> qr(both);
    Matrix basis = qr.householderQ();

    split.basis = basis;
    split.stable_block = basis.leftCols(ms).transpose() * B * basis.leftCols(ms);
    split.unstable_block = basis.rightCols(mu).transpose() * B * basis.rightCols(mu);

    const double block_tol = ortho_tol * (1.0 + B.norm());
    const double c12 = (basis.leftCols(ms).transpose() * B * basis.rightCols(mu)).norm();
    const double c21 = (basis.rightCols(mu).transpose() * B * basis.leftCols(ms)).norm();
    if (std::max(c12, c21) > block_tol) {
        std::ostringstream os;
        os << "spectral_split: residual coupling " << std::max(c12, c21)
           << " exceeds tolerance " << block_tol;
        throw OrthogonalityError(os.str());
    }
    return split;
}

Matrix finite_gramian(const Matrix& B, double t) {
    if (B.rows() == 0 && B.cols() == 0) return Matrix(0, 0);
    require_square_finite(B, "finite_gramian");
    if (!(t >= 0.0))
        throw InvalidArgumentError("finite_gramian: time must be nonnegative");
    const Eigen::Index n = B.rows();
    if (t == 0.0) return Matrix::Zero(n, n);

    // Block-exponential trick: exp(t[[B, I],[0, -B^T]]) has upper-right block
    // G = int_0^t e^{(t-s)B} e^{-sB^T} ds and lower-right block e^{-tB^T};
    // Q_t = (e^{-tB^T})^T G.
    Matrix C = Matrix::Zero(2 * n, 2 * n);
    C.topLeftCorner(n, n) = B;
    C.topRightCorner(n, n) = Matrix::Identity(n, n);
    C.bottomRightCorner(n, n) = -B.transpose();
    Matrix E = mat_exp(C, t);
    Matrix G = E.topRightCorner(n, n);
    Matrix F3 = E.bottomRightCorner(n, n);
    Matrix Q = F3.transpose() * G;
    return 0.5 * (Q + Q.transpose());
}

Matrix solve_lyapunov(const Matrix& B, const Matrix& C) {
    if (B.rows() == 0 && B.cols() == 0) return Matrix(0, 0);
    require_square_finite(B, "solve_lyapunov");
    require_square_finite(C, "solve_lyapunov rhs");
    if (B.rows() != C.rows())
        throw InvalidArgumentError("solve_lyapunov: dimension mismatch");
    const Eigen::Index n = B.rows();

    // Bartels-Stewart on the complex Schur form: with B = U T U*, the
    // equation B X + X B^T = -C becomes T Y + Y T* = -U* C U and the columns
    // of Y decouple from the last one backwards.
    Eigen::ComplexSchur<MatrixXcd> schur(B.cast<cplx>());
    if (schur.info() != Eigen::Success)
        throw ConvergenceError("solve_lyapunov: Schur decomposition failed");
    const MatrixXcd& T = schur.matrixT();
    const MatrixXcd& U = schur.matrixU();
    MatrixXcd Ct = U.adjoint() * C.cast<cplx>() * U;

    MatrixXcd Y = MatrixXcd::Zero(n, n);
    MatrixXcd Tshift(n, n);
    for (Eigen::Index j = n - 1; j >= 0; --j) {
        VectorXcd rhs = -Ct.col(j);
        for (Eigen::Index k = j + 1; k < n; ++k)
            rhs -= std::conj(T(j, k)) * Y.col(k);
        Tshift = T;
        Tshift.diagonal().array() += std::conj(T(j, j));
        Y.col(j) = Tshift.triangularView<Eigen::Upper>().solve(rhs);
    }
    Matrix X = (U * Y * U.adjoint()).real();
    return 0.5 * (X + X.transpose());
}

Matrix infinite_gramian(const Matrix& B_stable_side) {
    if (B_stable_side.rows() == 0 && B_stable_side.cols() == 0) return Matrix(0, 0);
    require_square_finite(B_stable_side, "infinite_gramian");
    require_spectrum_side(B_stable_side, true, "infinite_gramian");
    const Eigen::Index n = B_stable_side.rows();
    Matrix M = solve_lyapunov(B_stable_side, Matrix::Identity(n, n));
    const double resid = (B_stable_side * M + M * B_stable_side.transpose()
                          + Matrix::Identity(n, n)).norm() / std::max(1.0, M.norm());
    if (resid > defaults::lyapunov_residual_tol) {
        std::ostringstream os;
        os << "infinite_gramian: Lyapunov residual " << resid << " exceeds tolerance";
        throw ConvergenceError(os.str());
    }
    return M;
}

Matrix weighted_infinite_gramian(const Matrix& B_block, const Matrix& Pi, Side side) {
    if (B_block.rows() == 0 && B_block.cols() == 0) return Matrix(0, 0);
    require_square_finite(B_block, "weighted_infinite_gramian");
    require_square_finite(Pi, "weighted_infinite_gramian weight");
    if (Pi.rows() != B_block.rows())
        throw InvalidArgumentError("weighted_infinite_gramian: dimension mismatch");
    if ((Pi - Pi.transpose()).norm() > 1e-10 * (1.0 + Pi.norm()))
        throw InvalidArgumentError("weighted_infinite_gramian: weight matrix must be symmetric");
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(Pi - 2.0 * Matrix::Identity(Pi.rows(), Pi.cols()));
        if (es.eigenvalues().minCoeff() <= 0.0)
            throw ConstraintError("weighted_infinite_gramian: weight matrix minus 2*Id "
                                  "must be positive definite");
    }

    const bool stable = (side == Side::Stable);
    require_spectrum_side(B_block, stable, "weighted_infinite_gramian");
    // G_s = int e^{tB} Pi e^{tB^T} dt solves B G + G B^T = -Pi;
    // G_u = int e^{-tB} Pi e^{-tB^T} dt solves (-B) G + G (-B)^T = -Pi.
    Matrix Bs = stable ? B_block : Matrix(-B_block);
    Matrix G = solve_lyapunov(Bs, Pi);
    Matrix A = G.inverse();
    if (stable) A = -A;
    A = 0.5 * (A + A.transpose());

    const Eigen::Index n = B_block.rows();
    const double inv_resid = (A * (stable ? Matrix(-G) : G) - Matrix::Identity(n, n)).norm()
                             / std::sqrt(static_cast<double>(n));
    const double lyap_resid = (Bs * G + G * Bs.transpose() + Pi).norm() / std::max(1.0, G.norm());
    if (inv_resid > defaults::lyapunov_residual_tol || lyap_resid > defaults::lyapunov_residual_tol) {
        std::ostringstream os;
        os << "weighted_infinite_gramian: residual " << std::max(inv_resid, lyap_resid)
           << " exceeds tolerance";
        throw ConvergenceError(os.str());
    }
    return A;
}

Matrix pd_sqrt(const Matrix& M) {
    if (M.rows() == 0 && M.cols() == 0) return Matrix(0, 0);
    require_square_finite(M, "pd_sqrt");
    if ((M - M.transpose()).norm() > 1e-10 * (1.0 + M.norm()))
        throw InvalidArgumentError("pd_sqrt: matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw NotPositiveDefiniteError("pd_sqrt: matrix is not positive definite");
    Matrix S = es.eigenvectors()
               * es.eigenvalues().cwiseSqrt().asDiagonal()
               * es.eigenvectors().transpose();
    S = 0.5 * (S + S.transpose());
    const double resid = (S * S - M).norm() / M.norm();
    if (resid > defaults::sqrt_residual_tol)
        throw ConvergenceError("pd_sqrt: residual exceeds tolerance");
    return S;
}

} // namespace eiglab
