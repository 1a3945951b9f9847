#pragma once

#include "eiglab/linalg.hpp"
#include "eiglab/model.hpp"
#include "eiglab/pressure.hpp"

#include <functional>
#include <string>
#include <vector>

namespace eiglab {

namespace defaults {
inline constexpr double density_periodicity_tol = 1e-8;
inline constexpr double divisor_floor = 1e-9;
inline constexpr int profile_cycle_grid = 512;
} // namespace defaults

// Longitudinal density along a periodic orbit, sampled on a uniform grid over
// one period and normalized so its maximum equals one.
struct CycleDensity {
    double period = 0.0;
    double mean_c = 0.0;          // orbit average of the killing rate
    std::vector<double> samples;  // f(theta_j), theta_j = period * j / N
    std::vector<double> c_samples;

    int grid_size() const { return static_cast<int>(samples.size()); }
    double squared_mass() const; // integral of f^2 over one period
};

// Log-linear density on the 2-torus carried by a constant irrational rotation,
// normalized so its maximum equals one.
struct TorusDensity {
    double k1 = 0.0;
    double k2 = 0.0;
    double mu2 = 0.0;    // mean killing rate, the transport eigenvalue
    Modes2d log_modes;   // Fourier table of log f
    Matrix samples;      // f on an N x N grid over the unit square
    DiophantineReport divisors;

    int grid_size() const { return static_cast<int>(samples.rows()); }
    double squared_mass() const; // mean of f^2 over the unit square
};

// Gaussian transverse profile exp(-<S x, x>) in splitting coordinates,
// together with the longitudinal density for cycles and tori.
struct BlowupProfile {
    RecurrentComponent component;
    Matrix S;
    double lambda_profile = 0.0;
    CycleDensity cycle; // populated when the component is a cycle
    TorusDensity torus; // populated when the component is a torus

    double longitudinal_squared_mass() const; // 1 for points
};

// Weighted sum of component measures with weights that add to one.
struct LimitMeasure {
    struct Atom {
        RecurrentComponent component;
        BlowupProfile profile;
        double gamma = 0.0;
        double weight = 0.0;
    };
    std::vector<Atom> atoms;
    double normalizer = 0.0; // reciprocal of the un-normalized total mass
};

// Builds the positive periodic density solving f' + (c - <c>) f = 0 over one
// period, using the spectral antiderivative of the zero-mean part of c.
CycleDensity cycle_density(const std::function<double(double)>& c, double T, int N);

// Builds the positive torus density whose log has Fourier modes
// -c_m / (2 pi i (m1 k1 + m2 k2)); requires the frequency pair to pass the
// small-divisor test at the given truncation.
TorusDensity torus_density(const Modes2d& c_coeffs, double k1, double k2, int truncation);

// Assembles the transverse Gaussian exponent (stable block M_s^{-1}/4 + A_s/2,
// unstable block A_u/2) and the profile growth rate.
BlowupProfile blowup_profile(const RecurrentComponent& comp, const LyapunovData& lyap);

// Integral over R^m of exp(-power <S x, x>); the empty matrix yields 1.
double gaussian_mass(const Matrix& S, int power);

// Normalizes gamma^2-weighted squared profile masses into measure weights.
// All components must be of the same kind.
LimitMeasure assemble_limit_measure(const std::vector<RecurrentComponent>& eligible,
                                    const std::vector<double>& gamma,
                                    const std::vector<BlowupProfile>& profiles);

// Integrates a test function that is constant on each atom of the measure.
double integrate(const LimitMeasure& mu,
                 const std::function<double(const RecurrentComponent&)>& h);

} // namespace eiglab
