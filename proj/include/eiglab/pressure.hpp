#pragma once

#include <string>
#include <vector>

#include "eiglab/model.hpp"

namespace eiglab {

// Quadratic data of the special Lyapunov construction in the splitting
// basis: A_s negative definite, A_u positive definite, block matrix A, and
// psi2 = (B^T A + A B - 2 A^2)/2, certified positive definite.
struct LyapunovData {
    Matrix A_s;
    Matrix A_u;
    Matrix A;
    Matrix psi2;
    Matrix Pi_s;
    Matrix Pi_u;
};

enum class Convention { Stable, Unstable };

// Per-component pressures under both sign conventions plus the selection
// sets computed under the requested convention.
struct PressureReport {
    Convention convention = Convention::Stable;
    std::vector<std::string> labels;
    std::vector<int> dimensions;          // 0 point, 1 cycle, 2 torus
    std::vector<double> stable_values;
    std::vector<double> unstable_values;
    double global_stable = 0.0;
    double global_unstable = 0.0;
    double global = 0.0;                  // under `convention`
    std::vector<int> argmax;              // indices into the component list
    std::vector<int> eligible;            // argmax filtered by the dimension rule
};

namespace defaults {
inline constexpr double pressure_tie_tol = 1e-12;
}

// Assembles the Lyapunov block data from the weight matrices. Both weights
// must dominate 2*Id on their block; psi2 and the combined stable decay form
// M_s^{-1}/4 + A_s/2 are certified positive definite.
LyapunovData build_lyapunov(const HyperbolicSplitting& split,
                            const Matrix& Pi_s, const Matrix& Pi_u);

// R(omega) - Tr(B_s) under the stable convention, R(omega) - Tr(B_u) under
// the unstable one; R is c(P) for points, the theta-average of c for cycles,
// and the normalized double average for tori.
double component_pressure(const RecurrentComponent& comp, Convention convention);

// Killing-term average R(omega) entering the pressure.
double component_killing_average(const RecurrentComponent& comp);

// Global maximum with argmax ties at 1e-12 and the support-selection
// dimension rule: tori shadow cycles shadow points among the argmax.
PressureReport global_pressure(const std::vector<RecurrentComponent>& comps,
                               Convention convention);

} // namespace eiglab
