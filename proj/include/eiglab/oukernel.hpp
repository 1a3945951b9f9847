#pragma once

#include "eiglab/linalg.hpp"
#include "eiglab/pressure.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace eiglab {

namespace defaults {
inline constexpr int quad_degree = 80;
inline constexpr int quad_max_degree = 320;
inline constexpr double quad_tol = 1e-8;
} // namespace defaults

// Time-t operator family of the linearized transition kernel, assembled per
// hyperbolic block in splitting coordinates.
struct OUOperatorFamily {
    double t = 0.0;
    Matrix Q_s, Q_u; // covariance blocks, integral of e^{-sB} e^{-sB^T}
    Matrix R_s, R_u; // positive square roots of Q^{-1} - 2A
    Matrix P_s, P_u; // R^{-1} Q^{-1} e^{-tB}
    Matrix U_s, U_u; // e^{-tB^T} (Q^{-1} - Q^{-1} R^{-2} Q^{-1}) e^{-tB}
};

struct QuadratureSpec {
    int degree = defaults::quad_degree;
    int max_degree = defaults::quad_max_degree;
    double tol = defaults::quad_tol;
};

// Relative deviations of each operator from its short-time expansion and its
// long-time limit, plus the measured signs of the U blocks.
struct AsymptoticsReport {
    double t_small = 0.0;
    double t_large = 0.0;
    std::vector<std::pair<std::string, double>> small_time;
    std::vector<std::pair<std::string, double>> large_time;
    double det_product_deviation = 0.0; // e^{2t tr B_s} det Q_s against det M_s
    double u_stable_min_eig = 0.0;      // at t_large
    double u_unstable_max_eig = 0.0;    // at t_large
};

// Assembles Q, R, P, U for one time; the stable U block goes through the
// algebraically equivalent bounded form (G_t + e^{tB} (-2A)^{-1} e^{tB^T})^{-1}
// so large times stay well conditioned.
OUOperatorFamily ou_operators(const HyperbolicSplitting& split, const LyapunovData& lyap,
                              double t);

// Exponent of the kernel acting on the gauge-transformed profile:
// <U x, x>/4 + |R_s y_s - P_s x_s|^2/4 + |R_u y_u - P_u x_u|^2/4.
double ou_quadratic_form(const OUOperatorFamily& fam, const Vector& x, const Vector& y);

// Evaluates the transition semigroup applied to z at the given points with
// tensor Gauss-Hermite quadrature centered on the kernel Gaussian; the degree
// doubles until successive values agree to quad.tol.
std::vector<double> kolmogorov_apply(const std::function<double(const Vector&)>& z,
                                     const std::vector<Vector>& points,
                                     const HyperbolicSplitting& split,
                                     const LyapunovData& lyap, double t,
                                     QuadratureSpec quad = {});

// Measures every expansion and limit of the operator family at one small and
// one large time and reports relative deviations.
AsymptoticsReport asymptotics_suite(const HyperbolicSplitting& split,
                                    const LyapunovData& lyap, double t_small,
                                    double t_large);

} // namespace eiglab
