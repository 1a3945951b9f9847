#include "eiglab/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace eiglab {

namespace {

constexpr double tau = 2.0 * std::numbers::pi;

Vector vec1(double a) {
    Vector v(1);
    v << a;
    return v;
}

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

Matrix mat1(double a) {
    Matrix m(1, 1);
    m << a;
    return m;
}

HyperbolicSplitting trivial_split() {
    HyperbolicSplitting s;
    s.stable_block = Matrix(0, 0);
    s.unstable_block = Matrix(0, 0);
    s.basis = Matrix(0, 0);
    return s;
}

} // namespace

double periodic_delta(double a, double b, double period) {
    double d = std::fmod(b - a, period);
    if (d > 0.5 * period) d -= period;
    if (d <= -0.5 * period) d += period;
    return d;
}

Modes1d fourier_modes_1d(const std::function<double(double)>& f, double period, int K) {
    if (K < 1) throw InvalidArgumentError("fourier_modes_1d: truncation must be positive");
    if (!(period > 0.0)) throw InvalidArgumentError("fourier_modes_1d: period must be positive");
    const int N = std::max(4 * K, 8);
    Modes1d modes(2 * K + 1);
    for (int m = -K; m <= K; ++m) {
        std::complex<double> acc(0.0, 0.0);
        for (int j = 0; j < N; ++j) {
            const double theta = period * j / N;
            acc += f(theta) * std::polar(1.0, -tau * m * j / static_cast<double>(N));
        }
        modes[m + K] = acc / static_cast<double>(N);
    }
    return modes;
}

double fourier_eval_1d(const Modes1d& modes, double period, double theta) {
    const int K = (static_cast<int>(modes.size()) - 1) / 2;
    std::complex<double> acc(0.0, 0.0);
    for (int m = -K; m <= K; ++m)
        acc += modes[m + K] * std::polar(1.0, tau * m * theta / period);
    return acc.real();
}

Modes2d fourier_modes_2d(const std::function<double(double, double)>& f, int K) {
    if (K < 1) throw InvalidArgumentError("fourier_modes_2d: truncation must be positive");
    const int N = std::max(4 * K, 8);
    // Separable DFT through an intermediate transform in the first variable.
    Eigen::MatrixXcd partial(2 * K + 1, N);
    Eigen::MatrixXd samples(N, N);
    for (int j1 = 0; j1 < N; ++j1)
        for (int j2 = 0; j2 < N; ++j2)
            samples(j1, j2) = f(static_cast<double>(j1) / N, static_cast<double>(j2) / N);
    for (int m1 = -K; m1 <= K; ++m1)
        for (int j2 = 0; j2 < N; ++j2) {
            std::complex<double> acc(0.0, 0.0);
            for (int j1 = 0; j1 < N; ++j1)
                acc += samples(j1, j2) * std::polar(1.0, -tau * m1 * j1 / static_cast<double>(N));
            partial(m1 + K, j2) = acc / static_cast<double>(N);
        }
    Modes2d modes(2 * K + 1, 2 * K + 1);
    for (int m1 = -K; m1 <= K; ++m1)
        for (int m2 = -K; m2 <= K; ++m2) {
            std::complex<double> acc(0.0, 0.0);
            for (int j2 = 0; j2 < N; ++j2)
                acc += partial(m1 + K, j2) * std::polar(1.0, -tau * m2 * j2 / static_cast<double>(N));
            modes(m1 + K, m2 + K) = acc / static_cast<double>(N);
        }
    return modes;
}

double fourier_eval_2d(const Modes2d& modes, double t1, double t2) {
    const int K = (static_cast<int>(modes.rows()) - 1) / 2;
    Eigen::VectorXcd e1(2 * K + 1), e2(2 * K + 1);
    for (int m = -K; m <= K; ++m) {
        e1(m + K) = std::polar(1.0, tau * m * t1);
        e2(m + K) = std::polar(1.0, tau * m * t2);
    }
    return (e1.transpose() * modes * e2)(0, 0).real();
}

DiophantineReport diophantine_check(double k1, double k2, int M, double alpha, double C) {
    if (M < 1) throw InvalidArgumentError("diophantine_check: cutoff must be at least 1");
    if (!(k1 * k1 + k2 * k2 > 0.0))
        throw InvalidArgumentError("diophantine_check: frequency vector must be nonzero");
    if (!std::isfinite(k1) || !std::isfinite(k2) || !std::isfinite(alpha) || !std::isfinite(C))
        throw InvalidArgumentError("diophantine_check: non-finite input");

    DiophantineReport report;
    report.alpha = alpha;
    report.constant = C;
    report.cutoff = M;
    report.min_divisor = std::numeric_limits<double>::infinity();
    const long long M2 = static_cast<long long>(M) * M;
    long long best_norm2 = 0;
    for (long long m1 = -M; m1 <= M; ++m1)
        for (long long m2 = -M; m2 <= M; ++m2) {
            const long long norm2 = m1 * m1 + m2 * m2;
            if (norm2 == 0 || norm2 > M2) continue;
            const double q = std::abs(m1 * k1 + m2 * k2)
                             * std::pow(static_cast<double>(norm2), alpha);
            // Ties resolve toward the primitive (smallest-norm) pair.
            if (q < report.min_divisor
                || (q == report.min_divisor && norm2 < best_norm2)) {
                report.min_divisor = q;
                report.m1 = m1;
                report.m2 = m2;
                best_norm2 = norm2;
            }
        }
    if (report.m1 < 0 || (report.m1 == 0 && report.m2 < 0)) {
        report.m1 = -report.m1;
        report.m2 = -report.m2;
    }
    report.pass = report.min_divisor >= C;
    return report;
}

RecurrentComponent build_component(const ComponentSpec& spec) {
    RecurrentComponent comp;
    comp.kind = spec.kind;
    comp.label = spec.label;
    comp.anchor = spec.anchor;
    comp.truncation = spec.truncation;
    comp.transverse_B = spec.transverse_B;

    if (spec.transverse_B.size() > 0) {
        require_square_finite(spec.transverse_B, "build_component");
        comp.split = spectral_split(spec.transverse_B, spec.hyperbolicity_floor);
    } else {
        comp.split = trivial_split();
    }

    switch (spec.kind) {
    case RecurrentComponent::Kind::Point:
        comp.point_c = spec.point_c;
        break;
    case RecurrentComponent::Kind::Cycle: {
        if (!(spec.period_T > 0.0))
            throw InvalidArgumentError("build_component: cycle period must be positive");
        comp.period_T = spec.period_T;
        comp.cycle_c = spec.cycle_c ? spec.cycle_c : [](double) { return 0.0; };
        comp.cycle_c_modes = fourier_modes_1d(comp.cycle_c, comp.period_T, spec.truncation);
        const int N = std::max(4 * spec.truncation, 8);
        double worst = 0.0, scale = 1.0;
        for (int j = 0; j < N; ++j) {
            const double theta = comp.period_T * j / N;
            const double direct = comp.cycle_c(theta);
            worst = std::max(worst,
                             std::abs(direct - fourier_eval_1d(comp.cycle_c_modes,
                                                               comp.period_T, theta)));
            scale = std::max(scale, std::abs(direct));
        }
        if (worst > defaults::fourier_agreement_tol * scale)
            throw InvalidArgumentError(
                "build_component: cycle killing term is not resolved by the Fourier "
                "truncation (sample/series mismatch " + std::to_string(worst) + ")");
        break;
    }
    case RecurrentComponent::Kind::Torus: {
        comp.k1 = spec.k1;
        comp.k2 = spec.k2;
        auto report = diophantine_check(spec.k1, spec.k2, defaults::diophantine_cutoff,
                                        defaults::diophantine_alpha,
                                        defaults::diophantine_constant);
        if (report.min_divisor <= 1e-9) {
            std::ostringstream os;
            os << "build_component: torus frequencies admit the integer relation ("
               << report.m1 << ", " << report.m2 << ")";
            throw RationalityError(os.str());
        }
        if (!report.pass) {
            std::ostringstream os;
            os << "build_component: torus frequencies fail the small-divisor bound, min "
               << report.min_divisor << " < " << report.constant << " at ("
               << report.m1 << ", " << report.m2 << ")";
            throw RationalityError(os.str());
        }
        comp.torus_c = spec.torus_c ? spec.torus_c : [](double, double) { return 0.0; };
        comp.torus_c_modes = fourier_modes_2d(comp.torus_c, spec.truncation);
        const int N = std::max(4 * spec.truncation, 8);
        const int stride = std::max(1, N / 32);
        double worst = 0.0, scale = 1.0;
        for (int j1 = 0; j1 < N; j1 += stride)
            for (int j2 = 0; j2 < N; j2 += stride) {
                const double t1 = static_cast<double>(j1) / N;
                const double t2 = static_cast<double>(j2) / N;
                const double direct = comp.torus_c(t1, t2);
                worst = std::max(worst, std::abs(direct - fourier_eval_2d(comp.torus_c_modes,
                                                                          t1, t2)));
                scale = std::max(scale, std::abs(direct));
            }
        if (worst > defaults::fourier_agreement_tol * scale)
            throw InvalidArgumentError(
                "build_component: torus killing term is not resolved by the Fourier "
                "truncation (sample/series mismatch " + std::to_string(worst) + ")");
        break;
    }
    }
    return comp;
}

FieldModel benchmark_field(const std::string& name, const BenchmarkParams& params) {
    if (params.truncation < 1)
        throw InvalidArgumentError("benchmark_field: truncation must be positive");
    FieldModel model;
    model.name = name;
    const double c0 = params.c_const, a1 = params.c_cos1, a2 = params.c_cos2;

    if (name == "circle_sink_source") {
        model.manifold = FieldModel::Manifold::Circle;
        model.dim = 1;
        model.drift = [](const Vector& x) { return vec1(std::sin(tau * x(0))); };
        model.rotation = [](const Vector& x) { return vec1(0.0 * x(0)); };
        model.lyapunov = [](const Vector& x) { return -std::cos(tau * x(0)) / tau; };
        model.lyapunov_grad = [](const Vector& x) { return vec1(std::sin(tau * x(0))); };
        model.killing = [=](const Vector& x) { return c0 + a1 * std::cos(tau * x(0)); };

        ComponentSpec source;
        source.kind = RecurrentComponent::Kind::Point;
        source.label = "source";
        source.anchor = vec1(0.0);
        source.transverse_B = mat1(tau);
        source.point_c = c0 + a1;
        ComponentSpec sink;
        sink.kind = RecurrentComponent::Kind::Point;
        sink.label = "sink";
        sink.anchor = vec1(0.5);
        sink.transverse_B = mat1(-tau);
        sink.point_c = c0 - a1;
        model.components.push_back(build_component(source));
        model.components.push_back(build_component(sink));
    } else if (name == "torus_shear_cycles") {
        model.manifold = FieldModel::Manifold::Torus2;
        model.dim = 2;
        model.drift = [](const Vector& x) { return vec2(-std::sin(tau * x(0)), 1.0); };
        model.rotation = [](const Vector& x) { return vec2(0.0 * x(0), 1.0); };
        model.lyapunov = [](const Vector& x) { return std::cos(tau * x(0)) / tau; };
        model.lyapunov_grad = [](const Vector& x) { return vec2(-std::sin(tau * x(0)), 0.0); };
        model.killing = [=](const Vector& x) {
            return c0 + a1 * std::cos(tau * x(0)) + a2 * std::cos(tau * x(1));
        };
        auto killing = model.killing;

        ComponentSpec stable;
        stable.kind = RecurrentComponent::Kind::Cycle;
        stable.label = "stable_cycle";
        stable.anchor = vec2(0.0, 0.0);
        stable.transverse_B = mat1(-tau);
        stable.period_T = 1.0;
        stable.cycle_c = [killing](double theta) { return killing(vec2(0.0, theta)); };
        stable.truncation = params.truncation;
        ComponentSpec unstable;
        unstable.kind = RecurrentComponent::Kind::Cycle;
        unstable.label = "unstable_cycle";
        unstable.anchor = vec2(0.5, 0.0);
        unstable.transverse_B = mat1(tau);
        unstable.period_T = 1.0;
        unstable.cycle_c = [killing](double theta) { return killing(vec2(0.5, theta)); };
        unstable.truncation = params.truncation;
        model.components.push_back(build_component(stable));
        model.components.push_back(build_component(unstable));
    } else if (name == "torus_irrational_flow") {
        if (params.k1 * params.k1 + params.k2 * params.k2 <= 0.0)
            throw InvalidArgumentError("benchmark_field: frequency vector must be nonzero");
        model.manifold = FieldModel::Manifold::Torus2;
        model.dim = 2;
        const double k1 = params.k1, k2 = params.k2;
        model.drift = [k1, k2](const Vector&) { return vec2(k1, k2); };
        model.rotation = model.drift;
        model.lyapunov = [](const Vector&) { return 0.0; };
        model.lyapunov_grad = [](const Vector&) { return vec2(0.0, 0.0); };
        model.killing = [=](const Vector& x) {
            return c0 + a1 * std::cos(tau * x(0)) + a2 * std::cos(tau * x(1));
        };
        auto killing = model.killing;

        ComponentSpec torus;
        torus.kind = RecurrentComponent::Kind::Torus;
        torus.label = "torus";
        torus.anchor = vec2(0.0, 0.0);
        torus.transverse_B = Matrix(0, 0);
        torus.k1 = k1;
        torus.k2 = k2;
        torus.torus_c = [killing](double t1, double t2) { return killing(vec2(t1, t2)); };
        torus.truncation = params.truncation;
        model.components.push_back(build_component(torus));
    } else if (name == "torus_gradient_points") {
        model.manifold = FieldModel::Manifold::Torus2;
        model.dim = 2;
        model.drift = [](const Vector& x) {
            return vec2(-std::sin(tau * x(0)), -std::sin(tau * x(1)));
        };
        model.rotation = [](const Vector& x) { return vec2(0.0 * x(0), 0.0); };
        model.lyapunov = [](const Vector& x) {
            return (std::cos(tau * x(0)) + std::cos(tau * x(1))) / tau;
        };
        model.lyapunov_grad = [](const Vector& x) {
            return vec2(-std::sin(tau * x(0)), -std::sin(tau * x(1)));
        };
        model.killing = [=](const Vector& x) {
            return c0 + a1 * std::cos(tau * x(0)) + a2 * std::cos(tau * x(1));
        };
        auto killing = model.killing;

        struct P { const char* label; double x, y, bx, by; };
        const P pts[4] = {{"sink_00", 0.0, 0.0, -tau, -tau},
                          {"source_hh", 0.5, 0.5, tau, tau},
                          {"saddle_0h", 0.0, 0.5, -tau, tau},
                          {"saddle_h0", 0.5, 0.0, tau, -tau}};
        for (const auto& p : pts) {
            ComponentSpec cs;
            cs.kind = RecurrentComponent::Kind::Point;
            cs.label = p.label;
            cs.anchor = vec2(p.x, p.y);
            Matrix B = Matrix::Zero(2, 2);
            B(0, 0) = p.bx;
            B(1, 1) = p.by;
            cs.transverse_B = B;
            cs.point_c = killing(vec2(p.x, p.y));
            model.components.push_back(build_component(cs));
        }
    } else {
        throw InvalidArgumentError("benchmark_field: unknown catalog key '" + name + "'");
    }

    validate_field(model, 128);
    return model;
}

void validate_field(const FieldModel& model, int n_per_axis, double tol) {
    if (n_per_axis < 8) throw InvalidArgumentError("validate_field: grid too coarse");
    const int N = n_per_axis;
    const double h1 = model.period[0] / N;
    const double h2 = model.dim == 2 ? model.period[1] / N : 0.0;

    auto component_distance = [&](const Vector& x) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& comp : model.components) {
            double d = 0.0;
            switch (comp.kind) {
            case RecurrentComponent::Kind::Point: {
                d = std::abs(periodic_delta(x(0), comp.anchor(0), model.period[0]));
                if (model.dim == 2)
                    d = std::max(d, std::abs(periodic_delta(x(1), comp.anchor(1),
                                                            model.period[1])));
                break;
            }
            case RecurrentComponent::Kind::Cycle:
                // Catalog cycles run along the second axis at fixed first coordinate.
                d = std::abs(periodic_delta(x(0), comp.anchor(0), model.period[0]));
                break;
            case RecurrentComponent::Kind::Torus:
                d = 0.0;
                break;
            }
            best = std::min(best, d);
        }
        return best;
    };

    const double cell = std::max(h1, h2);
    const int n2 = model.dim == 2 ? N : 1;
    for (int j1 = 0; j1 < N; ++j1)
        for (int j2 = 0; j2 < n2; ++j2) {
            Vector x = model.dim == 2 ? vec2(j1 * h1, j2 * h2) : vec1(j1 * h1);
            const double psi = model.psi(x);
            if (psi < -tol) {
                std::ostringstream os;
                os << "validate_field: Psi = " << psi << " < 0 at grid point " << j1
                   << (model.dim == 2 ? "," + std::to_string(j2) : "");
                throw ConstraintError(os.str());
            }
            if (psi <= tol && component_distance(x) > cell * (1.0 + 1e-9)) {
                std::ostringstream os;
                os << "validate_field: Psi vanishes away from declared components at ("
                   << x.transpose() << ")";
                throw ConstraintError(os.str());
            }
            Vector gap = model.drift(x) - model.rotation(x) - model.lyapunov_grad(x);
            if (gap.norm() > 1e-12)
                throw ConstraintError("validate_field: drift decomposition b = Omega + grad L "
                                      "violated on the grid");
            // Central-difference check that the declared gradient matches L.
            for (int axis = 0; axis < model.dim; ++axis) {
                const double h = axis == 0 ? h1 : h2;
                Vector xp = x, xm = x;
                xp(axis) += h;
                xm(axis) -= h;
                const double fd = (model.lyapunov(xp) - model.lyapunov(xm)) / (2 * h);
                if (std::abs(fd - model.lyapunov_grad(x)(axis)) > 100.0 * h * h)
                    throw ConstraintError("validate_field: grad L inconsistent with L "
                                          "on the grid");
            }
        }

    // Every declared component must touch the measured zero set.
    for (const auto& comp : model.components) {
        bool touched = false;
        if (comp.kind == RecurrentComponent::Kind::Torus) {
            touched = true;
        } else if (comp.kind == RecurrentComponent::Kind::Point) {
            const long j1 = std::lround(comp.anchor(0) / h1);
            Vector x = model.dim == 2
                           ? vec2(j1 * h1, std::lround(comp.anchor(1) / h2) * h2)
                           : vec1(j1 * h1);
            touched = model.psi(x) <= tol;
        } else {
            const long j1 = std::lround(comp.anchor(0) / h1);
            touched = true;
            for (int j2 = 0; j2 < n2; ++j2)
                if (model.psi(vec2(j1 * h1, j2 * h2)) > tol) touched = false;
        }
        if (!touched)
            throw ConstraintError("validate_field: component '" + comp.label +
                                  "' does not lie in the zero set of Psi");
    }
}

} // namespace eiglab
