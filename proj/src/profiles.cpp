#include "eiglab/profiles.hpp"

#include "eiglab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace eiglab {

namespace {

constexpr double tau = 2.0 * std::numbers::pi;
using Complex = std::complex<double>;

// Sums h(theta) = sum_m table(m1+K, m2+K) e^{i tau (m1 t1 + m2 t2)} on an
// N x N grid, one axis at a time.
Matrix eval_modes_on_grid(const Modes2d& table, int N) {
    const int side = static_cast<int>(table.rows());
    const int K = (side - 1) / 2;
    Modes2d partial(side, N); // partial(m1+K, j2) = sum over m2
    for (int a = 0; a < side; ++a) {
        for (int j2 = 0; j2 < N; ++j2) {
            Complex acc = 0.0;
            for (int b = 0; b < side; ++b) {
                const double phase = tau * (b - K) * j2 / N;
                acc += table(a, b) * Complex(std::cos(phase), std::sin(phase));
            }
            partial(a, j2) = acc;
        }
    }
    Matrix out(N, N);
    double worst_imag = 0.0;
    for (int j1 = 0; j1 < N; ++j1) {
        for (int j2 = 0; j2 < N; ++j2) {
            Complex acc = 0.0;
            for (int a = 0; a < side; ++a) {
                const double phase = tau * (a - K) * j1 / N;
                acc += partial(a, j2) * Complex(std::cos(phase), std::sin(phase));
            }
            out(j1, j2) = acc.real();
            worst_imag = std::max(worst_imag, std::abs(acc.imag()));
        }
    }
    if (worst_imag > 1e-9 * (1.0 + out.cwiseAbs().maxCoeff()))
        throw ConstraintError("eval_modes_on_grid: mode table does not describe a real field");
    return out;
}

Matrix block_diag(const Matrix& top, const Matrix& bottom) {
    Matrix out = Matrix::Zero(top.rows() + bottom.rows(), top.cols() + bottom.cols());
    out.topLeftCorner(top.rows(), top.cols()) = top;
    out.bottomRightCorner(bottom.rows(), bottom.cols()) = bottom;
    return out;
}

void require_pd_block(const Matrix& M, const char* what) {
    if (M.rows() == 0) return;
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(0.5 * (M + M.transpose())));
    if (es.eigenvalues().minCoeff() <= 0.0) throw ConstraintError(what);
}

} // namespace

double CycleDensity::squared_mass() const {
    double acc = 0.0;
    for (double v : samples) acc += v * v;
    return period * acc / static_cast<double>(samples.size());
}

double TorusDensity::squared_mass() const {
    return samples.array().square().mean();
}

double BlowupProfile::longitudinal_squared_mass() const {
    switch (component.kind) {
    case RecurrentComponent::Kind::Point: return 1.0;
    case RecurrentComponent::Kind::Cycle: return cycle.squared_mass();
    case RecurrentComponent::Kind::Torus: return torus.squared_mass();
    }
    throw InvalidArgumentError("longitudinal_squared_mass: unknown component kind");
}

CycleDensity cycle_density(const std::function<double(double)>& c, double T, int N) {
    if (!c) throw InvalidArgumentError("cycle_density: missing killing rate");
    if (!(T > 0.0)) throw InvalidArgumentError("cycle_density: period must be positive");
    if (N < 8) throw InvalidArgumentError("cycle_density: need at least 8 grid points");

    CycleDensity out;
    out.period = T;
    out.c_samples.resize(N);
    double scale = 1.0;
    for (int j = 0; j < N; ++j) {
        out.c_samples[j] = c(T * j / N);
        if (!std::isfinite(out.c_samples[j]))
            throw InvalidArgumentError("cycle_density: killing rate is not finite");
        scale = std::max(scale, std::abs(out.c_samples[j]));
    }
    if (std::abs(c(T) - c(0.0)) > defaults::density_periodicity_tol * scale)
        throw InvalidArgumentError("cycle_density: input does not close up over the period");

    // Fourier modes of c up to just below the Nyquist index.
    const int K = N / 2 - 1;
    std::vector<Complex> modes(2 * K + 1);
    for (int m = -K; m <= K; ++m) {
        Complex acc = 0.0;
        for (int j = 0; j < N; ++j) {
            const double phase = -tau * m * j / N;
            acc += out.c_samples[j] * Complex(std::cos(phase), std::sin(phase));
        }
        modes[m + K] = acc / static_cast<double>(N);
    }
    out.mean_c = modes[K].real();

    // Antiderivative of the zero-mean part; the additive constant drops out
    // in the max-one normalization.
    out.samples.resize(N);
    double peak = 0.0;
    for (int j = 0; j < N; ++j) {
        Complex acc = 0.0;
        for (int m = -K; m <= K; ++m) {
            if (m == 0) continue;
            const double phase = tau * m * j / N;
            acc += modes[m + K] * T / Complex(0.0, tau * m)
                   * Complex(std::cos(phase), std::sin(phase));
        }
        out.samples[j] = std::exp(-acc.real());
        peak = std::max(peak, out.samples[j]);
    }
    for (double& v : out.samples) v /= peak;
    return out;
}

TorusDensity torus_density(const Modes2d& c_coeffs, double k1, double k2, int truncation) {
    const int side = static_cast<int>(c_coeffs.rows());
    if (c_coeffs.cols() != side || side != 2 * truncation + 1 || truncation < 1)
        throw InvalidArgumentError("torus_density: coefficient table must be square with "
                                   "side 2*truncation+1");
    const int K = truncation;
    const double scale = 1.0 + c_coeffs.cwiseAbs().maxCoeff();
    for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b)
            if (std::abs(c_coeffs(a, b) - std::conj(c_coeffs(side - 1 - a, side - 1 - b)))
                > 1e-10 * scale)
                throw InvalidArgumentError("torus_density: coefficients lack the conjugate "
                                           "symmetry of a real field");

    TorusDensity out;
    out.k1 = k1;
    out.k2 = k2;
    out.divisors = diophantine_check(k1, k2, truncation, defaults::diophantine_alpha,
                                     defaults::diophantine_constant);
    if (out.divisors.min_divisor <= defaults::divisor_floor)
        throw RationalityError("torus_density: frequencies admit an integer relation");
    if (!out.divisors.pass)
        throw RationalityError("torus_density: frequencies fail the small-divisor bound at "
                               "the requested truncation");

    out.mu2 = c_coeffs(K, K).real();
    out.log_modes = Modes2d::Zero(side, side);
    for (int a = 0; a < side; ++a) {
        for (int b = 0; b < side; ++b) {
            const int m1 = a - K;
            const int m2 = b - K;
            if (m1 == 0 && m2 == 0) continue;
            const double divisor = m1 * k1 + m2 * k2;
            if (std::abs(divisor) < defaults::divisor_floor) {
                std::ostringstream msg;
                msg << "torus_density: divisor below floor at mode (" << m1 << ", " << m2
                    << ")";
                throw RationalityError(msg.str());
            }
            out.log_modes(a, b) = -c_coeffs(a, b) / Complex(0.0, tau * divisor);
        }
    }

    const int N = std::max(4 * truncation, 8);
    Matrix logf = eval_modes_on_grid(out.log_modes, N);
    out.samples = (logf.array() - logf.maxCoeff()).exp();
    return out;
}

BlowupProfile blowup_profile(const RecurrentComponent& comp, const LyapunovData& lyap) {
    const auto& split = comp.split;
    if (lyap.A_s.rows() != split.stable_dim || lyap.A_u.rows() != split.unstable_dim)
        throw InvalidArgumentError("blowup_profile: splitting and Lyapunov data disagree");

    BlowupProfile out;
    out.component = comp;

    Matrix S_s;
    if (split.stable_dim > 0) {
        const Matrix Ms = infinite_gramian(split.stable_block);
        S_s = 0.25 * Ms.inverse() + 0.5 * lyap.A_s;
        S_s = 0.5 * (S_s + S_s.transpose()).eval();
    } else {
        S_s = Matrix(0, 0);
    }
    const Matrix S_u = 0.5 * lyap.A_u;
    require_pd_block(S_s, "blowup_profile: stable profile block is not decaying; the "
                          "weight matrix is too close to twice the identity");
    require_pd_block(S_u, "blowup_profile: unstable profile block is not positive");
    out.S = block_diag(S_s, S_u);
    out.lambda_profile = component_pressure(comp, Convention::Stable);

    if (comp.kind == RecurrentComponent::Kind::Cycle)
        out.cycle = cycle_density(comp.cycle_c, comp.period_T, defaults::profile_cycle_grid);
    if (comp.kind == RecurrentComponent::Kind::Torus)
        out.torus = torus_density(comp.torus_c_modes, comp.k1, comp.k2, comp.truncation);
    return out;
}

double gaussian_mass(const Matrix& S, int power) {
    if (power != 1 && power != 2)
        throw InvalidArgumentError("gaussian_mass: power must be 1 or 2");
    const int m = static_cast<int>(S.rows());
    if (m == 0 && S.cols() == 0) return 1.0;
    require_square_finite(S, "gaussian_mass");
    if ((S - S.transpose()).norm() > 1e-10 * (1.0 + S.norm()))
        throw InvalidArgumentError("gaussian_mass: exponent matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw NotPositiveDefiniteError("gaussian_mass: exponent matrix must be positive "
                                       "definite");
    double log_det = 0.0;
    for (int i = 0; i < m; ++i) log_det += std::log(power * es.eigenvalues()[i]);
    return std::exp(0.5 * m * std::log(std::numbers::pi) - 0.5 * log_det);
}

LimitMeasure assemble_limit_measure(const std::vector<RecurrentComponent>& eligible,
                                    const std::vector<double>& gamma,
                                    const std::vector<BlowupProfile>& profiles) {
    const size_t n = eligible.size();
    if (n == 0) throw InvalidArgumentError("assemble_limit_measure: no components");
    if (gamma.size() != n || profiles.size() != n)
        throw InvalidArgumentError("assemble_limit_measure: mismatched input lengths");
    for (size_t i = 1; i < n; ++i)
        if (eligible[i].kind != eligible[0].kind)
            throw ConstraintError("assemble_limit_measure: support mixes component kinds");
    bool any_positive = false;
    for (double g : gamma) {
        if (!(g >= 0.0))
            throw InvalidArgumentError("assemble_limit_measure: coefficients must be "
                                       "nonnegative");
        any_positive = any_positive || g > 0.0;
    }
    if (!any_positive)
        throw InvalidArgumentError("assemble_limit_measure: all coefficients vanish");

    LimitMeasure mu;
    mu.atoms.resize(n);
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (profiles[i].component.label != eligible[i].label)
            throw InvalidArgumentError("assemble_limit_measure: profile order does not "
                                       "match component order");
        auto& atom = mu.atoms[i];
        atom.component = eligible[i];
        atom.profile = profiles[i];
        atom.gamma = gamma[i];
        atom.weight = gamma[i] * gamma[i] * gaussian_mass(profiles[i].S, 2)
                      * profiles[i].longitudinal_squared_mass();
        total += atom.weight;
    }
    mu.normalizer = 1.0 / total;
    for (auto& atom : mu.atoms) atom.weight *= mu.normalizer;
    return mu;
}

double integrate(const LimitMeasure& mu,
                 const std::function<double(const RecurrentComponent&)>& h) {
    if (!h) throw InvalidArgumentError("integrate: missing test function");
    double acc = 0.0;
    for (const auto& atom : mu.atoms) acc += atom.weight * h(atom.component);
    return acc;
}

} // namespace eiglab
