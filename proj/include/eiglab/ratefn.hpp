#pragma once

#include "eiglab/linalg.hpp"
#include "eiglab/model.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace eiglab {

namespace defaults {
inline constexpr double flow_dt = 1e-3;
inline constexpr double flow_drift_tol = 1e-8;   // per unit time
inline constexpr double shoot_tol = 1e-10;
inline constexpr int shoot_max_iter = 60;
inline constexpr double shoot_horizon_cap = 0.5; // small-time well-posedness bound
inline constexpr int minimize_max_iter = 20000;
inline constexpr double minimize_grad_tol = 1e-7;
inline constexpr double mc_dt_cap = 1e-3;
inline constexpr long long mc_min_paths = 1000;
inline constexpr long long mc_block = 1024;
} // namespace defaults

struct PhasePoint {
    Vector x;
    Vector p;
};

struct FlowSample {
    double t = 0.0;
    Vector x;
    Vector p;
};
using Trajectory = std::vector<FlowSample>;

struct ExtremalResult {
    Trajectory path;
    double action = 0.0;
    double boundary_residual = 0.0;      // |p(T)|
    double terminal_velocity_gap = 0.0;  // |x'(T) + Omega(x(T))|
    double hamiltonian_drift = 0.0;      // max |H(z_i) - H(z_0)|
};

struct ActionPath {
    double action = 0.0;
    std::vector<Vector> nodes; // gamma_0 .. gamma_N, gamma_0 fixed
    bool certified = true;     // gradient tolerance reached
    double grad_norm = 0.0;
    int iterations = 0;
};

struct QuadraticBound {
    double C_fit = 0.0;     // least-squares coefficient of I on |x'|^2
    double min_ratio = 0.0; // min over samples of I / |x'|^2
    bool pass = false;
    std::vector<double> ratios;
};

struct MCEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    long long n_paths = 0;
    double t = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    int threads = 1;
};

// H(x, p) = -<Omega(x), p> + |p|^2 / 2 - Psi(x) in the flat metric.
double hamiltonian(const FieldModel& field, const PhasePoint& z);

// Fourth-order Gauss collocation (symplectic) for x' = -Omega + p,
// p' = (DOmega)^T p + grad Psi; dt is a target step, subdivided on rejection.
Trajectory hamiltonian_flow(const FieldModel& field, const PhasePoint& z0, double T,
                            double dt = defaults::flow_dt);

// Newton shooting on p0 -> p(T) with the endpoint x(0) = x fixed; returns the
// minimizing curve, its action, and the conservation diagnostics.
ExtremalResult extremal_shoot(const FieldModel& field, const Vector& x, double T);

// Direct descent on the piecewise-linear action with gamma(0) = x fixed and
// every other node free; independent of the shooting route.
ActionPath action_minimize(const FieldModel& field, const Vector& x, double T, int N,
                           int max_iter = defaults::minimize_max_iter);

// Shoots from transverse offsets around a component and reports the smallest
// action-to-squared-offset ratio; zero offsets are skipped.
QuadraticBound quadratic_bound_fit(const FieldModel& field, const RecurrentComponent& comp,
                                   double T, const std::vector<Vector>& offsets);

// Euler-Maruyama estimate of E_x[v(X_t) exp(-int (c - lap(L)/2 + Psi/eps))]
// for dX = -Omega dt + sqrt(2 eps) dW with periodic wrapping; the exponent is
// the gauge-transformed killing rate, accumulated by the trapezoidal rule.
// Paths are grouped in fixed blocks with per-block generators derived from
// the seed, so the result is bit-identical for any thread count.
MCEstimate feynman_kac_mc(const FieldModel& field, const Vector& x, double t,
                          double epsilon, long long n_paths, std::uint64_t seed,
                          const std::function<double(const Vector&)>& v);

} // namespace eiglab
