#pragma once

#include <Eigen/Dense>

#include "eiglab/errors.hpp"

namespace eiglab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Side { Stable, Unstable };

// Stable/unstable decomposition of a hyperbolic transverse linearization.
// The first stable_dim columns of basis span the stable invariant subspace,
// the remaining unstable_dim columns the unstable one. basis is orthogonal;
// the decomposition is rejected when the two subspaces fail to be mutually
// orthogonal within tolerance.
struct HyperbolicSplitting {
    Matrix stable_block;
    Matrix unstable_block;
    Matrix basis;
    int stable_dim = 0;
    int unstable_dim = 0;
};

namespace defaults {
inline constexpr double hyperbolicity_floor = 1e-6;
inline constexpr double orthogonality_tol = 1e-8;
inline constexpr double lyapunov_residual_tol = 1e-10;
inline constexpr double sqrt_residual_tol = 1e-12;
// mat_exp refuses inputs with ||tB||_F beyond this instead of degrading.
inline constexpr double exp_norm_cap = 1e4;
}

// Throws InvalidArgumentError unless M is square, nonempty and finite.
void require_square_finite(const Matrix& M, const char* what);

// e^{tB} by scaling-and-squaring Pade approximation.
Matrix mat_exp(const Matrix& B, double t);

// Splits B into spectral blocks across the imaginary axis. Eigenvalues with
// |Re| < floor raise HyperbolicityError; non-orthogonal invariant subspaces
// raise OrthogonalityError.
HyperbolicSplitting spectral_split(const Matrix& B,
                                   double floor = defaults::hyperbolicity_floor,
                                   double ortho_tol = defaults::orthogonality_tol);

// Q_t = int_0^t e^{-sB} e^{-sB^T} ds, computed from one block exponential.
Matrix finite_gramian(const Matrix& B, double t);

// M = int_0^infty e^{tB} e^{tB^T} dt for B with spectrum in Re < 0, i.e. the
// solution of B M + M B^T = -I. Raises DivergentIntegralError otherwise.
Matrix infinite_gramian(const Matrix& B_stable_side);

// Solves B X + X B^T + C = 0 for symmetric C, spectrum of B in Re < 0.
Matrix solve_lyapunov(const Matrix& B, const Matrix& C);

// Lyapunov block data: side Stable returns A_s (negative definite) with
// A_s^{-1} = -int_0^infty e^{tB} Pi e^{tB^T} dt; side Unstable returns A_u
// (positive definite) with A_u^{-1} = int_0^infty e^{-tB} Pi e^{-tB^T} dt.
// Requires Pi symmetric with Pi - 2 Id positive definite.
Matrix weighted_infinite_gramian(const Matrix& B_block, const Matrix& Pi, Side side);

// Unique symmetric positive definite square root.
Matrix pd_sqrt(const Matrix& M);

// Largest singular value; zero for empty matrices.
double spectral_norm(const Matrix& M);

} // namespace eiglab
