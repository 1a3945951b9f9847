#pragma once

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "eiglab/linalg.hpp"

namespace eiglab {

// Fourier data for periodic killing terms, indexed m = -K..K (offset by K).
using Modes1d = std::vector<std::complex<double>>;
using Modes2d = Eigen::MatrixXcd;

// One component of the recurrent set of the drift field together with its
// transverse linearization and the killing term restricted to it.
struct RecurrentComponent {
    enum class Kind { Point, Cycle, Torus };

    Kind kind = Kind::Point;
    std::string label;
    Vector anchor;                 // manifold coordinates of a base point
    Matrix transverse_B;           // may be 0x0 (torus on T^2)
    HyperbolicSplitting split;     // cached; trivial for 0x0

    double point_c = 0.0;          // Point: c at the point

    double period_T = 0.0;                      // Cycle: minimal period
    std::function<double(double)> cycle_c;      // Cycle: c(theta), theta in [0,T)
    Modes1d cycle_c_modes;                      // Fourier modes of cycle_c

    double k1 = 0.0, k2 = 0.0;                  // Torus: frequency vector
    std::function<double(double, double)> torus_c; // period-one coordinates
    Modes2d torus_c_modes;

    int truncation = 64;

    int dimension() const {
        return kind == Kind::Point ? 0 : (kind == Kind::Cycle ? 1 : 2);
    }
};

// Declarative description consumed by build_component.
struct ComponentSpec {
    RecurrentComponent::Kind kind = RecurrentComponent::Kind::Point;
    std::string label;
    Vector anchor;
    Matrix transverse_B;
    double point_c = 0.0;
    double period_T = 0.0;
    std::function<double(double)> cycle_c;
    double k1 = 0.0, k2 = 0.0;
    std::function<double(double, double)> torus_c;
    int truncation = 64;
    double hyperbolicity_floor = defaults::hyperbolicity_floor;
};

// Flat model manifold with the drift decomposition b = Omega + grad(L).
// Psi_L = (|grad L|^2 + 2 <grad L, Omega>) / 4 is nonnegative and vanishes
// exactly on the declared components.
struct FieldModel {
    enum class Manifold { Circle, Torus2 };

    Manifold manifold = Manifold::Circle;
    int dim = 1;
    std::array<double, 2> period = {1.0, 1.0};
    std::string name;

    std::function<Vector(const Vector&)> drift;          // b
    std::function<Vector(const Vector&)> rotation;       // Omega
    std::function<double(const Vector&)> lyapunov;       // L
    std::function<Vector(const Vector&)> lyapunov_grad;  // grad L (closed form)
    std::function<double(const Vector&)> killing;        // c

    std::vector<RecurrentComponent> components;

    double psi(const Vector& x) const {
        Vector g = lyapunov_grad(x);
        Vector om = rotation(x);
        return 0.25 * (g.squaredNorm() + 2.0 * g.dot(om));
    }
};

struct DiophantineReport {
    double min_divisor = 0.0;
    long long m1 = 0, m2 = 0;   // canonical sign: m1 > 0, or m1 == 0 and m2 > 0
    bool pass = false;
    double alpha = 1.0;
    double constant = 0.0;
    int cutoff = 0;
};

namespace defaults {
inline constexpr int diophantine_cutoff = 100;
inline constexpr double diophantine_alpha = 1.0;
inline constexpr double diophantine_constant = 1e-3;
inline constexpr int fourier_truncation = 64;
inline constexpr double fourier_agreement_tol = 1e-10;
inline constexpr double psi_zero_tol = 1e-10;
}

// Scans integer pairs 0 < m1^2 + m2^2 <= M^2 (both signs) and reports the
// minimum of |m1 k1 + m2 k2| (m1^2 + m2^2)^alpha; pass iff >= C.
DiophantineReport diophantine_check(double k1, double k2, int M, double alpha, double C);

// Validates a component description: hyperbolic transverse part (cached
// splitting), positive cycle period, irrational Diophantine torus frequency,
// killing term resolved by its Fourier truncation to 1e-10 at sample points.
RecurrentComponent build_component(const ComponentSpec& spec);

// Killing-term parameters shared by the catalog fields:
// c(x) = c_const + c_cos1 * cos(2 pi x_1) + c_cos2 * cos(2 pi x_2).
struct BenchmarkParams {
    double c_const = 0.0;
    double c_cos1 = 0.0;
    double c_cos2 = 0.0;   // second-axis term, ignored on the circle
    double k1 = 1.0;
    double k2 = 1.618033988749894848; // golden ratio, badly approximable
    int truncation = defaults::fourier_truncation;
};

// Catalog keys: "circle_sink_source", "torus_shear_cycles",
// "torus_irrational_flow", "torus_gradient_points".
FieldModel benchmark_field(const std::string& name, const BenchmarkParams& params = {});

// Grid validation of the model invariants: Psi >= -tol everywhere, its zero
// set (<= tol) within one cell of declared components and touching each of
// them, and grad L consistent with b - Omega. Throws ConstraintError.
void validate_field(const FieldModel& model, int n_per_axis = 128,
                    double tol = defaults::psi_zero_tol);

// Trigonometric interpolation helpers for periodic killing terms.
Modes1d fourier_modes_1d(const std::function<double(double)>& f, double period, int K);
double fourier_eval_1d(const Modes1d& modes, double period, double theta);
Modes2d fourier_modes_2d(const std::function<double(double, double)>& f, int K);
double fourier_eval_2d(const Modes2d& modes, double t1, double t2);

// Shortest signed displacement from a to b on a circle of given period.
double periodic_delta(double a, double b, double period);

} // namespace eiglab
