#pragma once

#include "eiglab/model.hpp"
#include "eiglab/profiles.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace eiglab {

namespace defaults {
inline constexpr double peclet_central_max = 2.0;
inline constexpr double eigen_tol = 1e-10;
inline constexpr int eigen_max_iter = 20000;
inline constexpr int grid_min = 64;
inline constexpr int grid_cap = 1024;
inline constexpr double tube_radius_factor = 10.0;
inline constexpr double charged_threshold = 0.05;
} // namespace defaults

// Options for the operator assembly; fitting may be disabled to expose the
// resolution limit of the central scheme.
struct DiscretizeOptions {
    bool allow_fitting = true;
    double peclet_cap = defaults::peclet_central_max;
};

// Finite-difference operator -eps lap_h + b . grad_h + c on a cell-centered
// periodic grid (nodes at (i + 1/2) h per axis).
struct DiscreteOperator {
    int dim = 1;
    int n = 0;                           // points per axis
    std::array<double, 2> period = {1.0, 1.0};
    double epsilon = 0.0;
    double peclet = 0.0;                 // max |b_d| h_d / eps over the grid
    bool fitted = false;                 // exponential fitting engaged
    double cell_weight = 0.0;            // grid measure of one cell
    Eigen::SparseMatrix<double> matrix;

    long long size() const { return matrix.rows(); }
    Vector point(long long index) const; // cell-center coordinates
};

struct EigenPair {
    double lambda = 0.0;
    Vector u;                // positive, unit norm in the grid measure
    double residual = 0.0;   // |L u - lambda u| in the grid norm
    int iterations = 0;
};

// Normalized measure u^2 e^{-L/eps} and the gauged function v = e^{-L/2eps} u,
// both computed in log space; v is reported relative to its maximum.
struct GridMeasure {
    Vector mass;             // sums to one
    Vector v_over_vmax;      // in (0, 1]
    double log_v_max = 0.0;  // log of max v under the eigenpair normalization
};

struct StudyRow {
    double epsilon = 0.0;
    int n = 0;
    double lambda = 0.0;
    double dmax = 0.0;                 // distance of argmax v to the recurrent set
    std::vector<double> tube_mass;     // per component, radius factor * sqrt(eps)
    std::vector<double> gamma_hat;     // max of v/vmax inside each tube
};

struct StudyTable {
    std::vector<std::string> labels;
    std::vector<StudyRow> rows;
    double d_slope = 0.0;              // log-log slope of dmax against eps
};

// Blow-up comparison of the measured eigenfunction against the predicted
// profile around one component.
struct BlowupComparison {
    bool charged = false;
    double gamma_hat = 0.0;
    double rel_l2 = 0.0;                    // relative L2 profile distance
    std::vector<double> second_moment_ratio; // per transverse axis, vs 1/(4S)
    std::string notice;                      // set when the component is skipped
};

// Assembles the periodic finite-difference operator; central differences when
// the grid Peclet number max |b| h / eps stays at or below the cap, otherwise
// exponentially fitted diffusion (rows stay exact on constants and keep the
// M-matrix sign pattern at any Peclet number).
DiscreteOperator discretize(const FieldModel& field, double epsilon, int n,
                            const DiscretizeOptions& options = {});

// Principal eigenpair by shifted inverse power iteration; the shift sits below
// the Gershgorin lower bound, the sparse factorization is reused, and the
// eigenvector is normalized positive in the grid measure.
EigenPair leading_eigenpair(const DiscreteOperator& op,
                            double tol = defaults::eigen_tol,
                            int max_iter = defaults::eigen_max_iter);

// Weighted measure u^2 e^{-L/eps} (normalized) and the gauged eigenfunction.
GridMeasure weighted_measure(const EigenPair& pair, const DiscreteOperator& op,
                             const FieldModel& field);

// Periodic multilinear interpolation of a per-node grid function at an
// arbitrary manifold point.
double grid_interpolate(const DiscreteOperator& op, const Vector& values,
                        const Vector& x);

// Distance from a point to the recurrent component (periodic metric); cycles
// run along the second axis of the torus, so only the first coordinate is
// transverse for them.
double component_distance(const RecurrentComponent& comp, const Vector& x,
                          const std::array<double, 2>& period, int dim);

// Default grid rule: about eight cells per sqrt(eps), clamped and even.
int default_grid_rule(double epsilon);

// Sweeps the epsilon list, extracting lambda, the argmax displacement, tube
// masses, and modulation ratios per component; fits the displacement slope.
StudyTable convergence_study(const FieldModel& field,
                             const std::vector<double>& eps_list,
                             const std::function<int(double)>& n_rule =
                                 default_grid_rule,
                             double tol = 1e-8);

// Interpolates v on a sqrt(eps)-scaled stencil around the component and
// compares with the predicted profile (transverse Gaussian times the
// longitudinal density); weights Pi = pi_weight I build the prediction.
BlowupComparison blowup_extract(const EigenPair& pair, const DiscreteOperator& op,
                                const FieldModel& field,
                                const RecurrentComponent& comp,
                                double pi_weight = 4.0);

} // namespace eiglab
