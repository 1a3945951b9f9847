#include "eiglab/pressure.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace eiglab {

namespace {

void require_pd(const Matrix& M, const char* what) {
    if (M.size() == 0) return;
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    if (es.eigenvalues().minCoeff() <= 0.0) {
        std::ostringstream os;
        os << what << ": minimum eigenvalue " << es.eigenvalues().minCoeff()
           << " is not positive";
        throw ConstraintError(os.str());
    }
}

Matrix block_psi2(const Matrix& B, const Matrix& A) {
    if (B.size() == 0) return Matrix(0, 0);
    Matrix P = 0.5 * (B.transpose() * A + A * B - 2.0 * A * A);
    return 0.5 * (P + P.transpose());
}

} // namespace

LyapunovData build_lyapunov(const HyperbolicSplitting& split,
                            const Matrix& Pi_s, const Matrix& Pi_u) {
    const int ms = split.stable_dim;
    const int mu = split.unstable_dim;
    if (Pi_s.rows() != ms || Pi_s.cols() != ms)
        throw InvalidArgumentError("build_lyapunov: stable weight dimension mismatch");
    if (Pi_u.rows() != mu || Pi_u.cols() != mu)
        throw InvalidArgumentError("build_lyapunov: unstable weight dimension mismatch");

    LyapunovData lyap;
    lyap.Pi_s = Pi_s;
    lyap.Pi_u = Pi_u;
    lyap.A_s = (ms > 0)
                   ? weighted_infinite_gramian(split.stable_block, Pi_s, Side::Stable)
                   : Matrix(0, 0);
    lyap.A_u = (mu > 0)
                   ? weighted_infinite_gramian(split.unstable_block, Pi_u, Side::Unstable)
                   : Matrix(0, 0);

    lyap.A = Matrix::Zero(ms + mu, ms + mu);
    lyap.A.topLeftCorner(ms, ms) = lyap.A_s;
    lyap.A.bottomRightCorner(mu, mu) = lyap.A_u;

    Matrix psi2_s = block_psi2(split.stable_block, lyap.A_s);
    Matrix psi2_u = block_psi2(split.unstable_block, lyap.A_u);
    lyap.psi2 = Matrix::Zero(ms + mu, ms + mu);
    lyap.psi2.topLeftCorner(ms, ms) = psi2_s;
    lyap.psi2.bottomRightCorner(mu, mu) = psi2_u;

    require_pd(lyap.psi2, "build_lyapunov: psi2 construction failed");
    if (ms > 0) {
        Matrix Ms = infinite_gramian(split.stable_block);
        Matrix decay = 0.25 * Ms.inverse() + 0.5 * lyap.A_s;
        decay = 0.5 * (decay + decay.transpose());
        require_pd(decay, "build_lyapunov: stable decay form M_s^{-1}/4 + A_s/2 failed");
    }
    require_pd(Matrix(-lyap.A_s), "build_lyapunov: A_s must be negative definite");
    require_pd(lyap.A_u, "build_lyapunov: A_u must be positive definite");
    return lyap;
}

double component_killing_average(const RecurrentComponent& comp) {
    switch (comp.kind) {
    case RecurrentComponent::Kind::Point:
        return comp.point_c;
    case RecurrentComponent::Kind::Cycle:
        return comp.cycle_c_modes[comp.truncation].real();
    case RecurrentComponent::Kind::Torus:
        return comp.torus_c_modes(comp.truncation, comp.truncation).real();
    }
    throw InvalidArgumentError("component_killing_average: unknown component kind");
}

double component_pressure(const RecurrentComponent& comp, Convention convention) {
    const double R = component_killing_average(comp);
    const Matrix& block = (convention == Convention::Stable) ? comp.split.stable_block
                                                             : comp.split.unstable_block;
    const double tr = block.size() > 0 ? block.trace() : 0.0;
    return R - tr;
}

PressureReport global_pressure(const std::vector<RecurrentComponent>& comps,
                               Convention convention) {
    if (comps.empty())
        throw InvalidArgumentError("global_pressure: component list is empty");

    PressureReport report;
    report.convention = convention;
    for (const auto& comp : comps) {
        report.labels.push_back(comp.label);
        report.dimensions.push_back(comp.dimension());
        report.stable_values.push_back(component_pressure(comp, Convention::Stable));
        report.unstable_values.push_back(component_pressure(comp, Convention::Unstable));
    }
    report.global_stable = *std::max_element(report.stable_values.begin(),
                                             report.stable_values.end());
    report.global_unstable = *std::max_element(report.unstable_values.begin(),
                                               report.unstable_values.end());
    const auto& values = (convention == Convention::Stable) ? report.stable_values
                                                            : report.unstable_values;
    report.global = (convention == Convention::Stable) ? report.global_stable
                                                       : report.global_unstable;

    for (int i = 0; i < static_cast<int>(values.size()); ++i)
        if (values[i] >= report.global - defaults::pressure_tie_tol)
            report.argmax.push_back(i);

    // Dimension rule: the highest-dimensional kind among the argmax shadows
    // the lower-dimensional ones.
    int top_dim = 0;
    for (int i : report.argmax) top_dim = std::max(top_dim, report.dimensions[i]);
    for (int i : report.argmax)
        if (report.dimensions[i] == top_dim) report.eligible.push_back(i);
    return report;
}

} // namespace eiglab
