#include "eiglab/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/SparseLU>

#include "eiglab/errors.hpp"
#include "eiglab/pressure.hpp"

namespace eiglab {

namespace {

long long wrap(long long i, long long n) { return ((i % n) + n) % n; }

// Diffusion fitting factor rho * coth(rho); keeps the row an M-matrix row at
// any Peclet number and reduces to 1 at rho = 0.
double fitting_factor(double rho) {
    if (std::abs(rho) < 1e-4) return 1.0 + rho * rho / 3.0;
    return rho / std::tanh(rho);
}

// Periodic multilinear interpolation of a grid function at an arbitrary
// point of the cell-centered grid.
double interpolate(const DiscreteOperator& op, const Vector& values, const Vector& x) {
    const long long n = op.n;
    auto locate = [&](int d, double xd, long long& lo, long long& hi, double& t) {
        const double h = op.period[static_cast<std::size_t>(d)] / static_cast<double>(n);
        const double u = xd / h - 0.5;
        const double f = std::floor(u);
        t = u - f;
        lo = wrap(static_cast<long long>(f), n);
        hi = wrap(static_cast<long long>(f) + 1, n);
    };
    long long a0 = 0, a1 = 0;
    double ta = 0.0;
    locate(0, x(0), a0, a1, ta);
    if (op.dim == 1) return (1.0 - ta) * values(a0) + ta * values(a1);
    long long b0 = 0, b1 = 0;
    double tb = 0.0;
    locate(1, x(1), b0, b1, tb);
    return (1.0 - ta) * (1.0 - tb) * values(a0 * n + b0) + (1.0 - ta) * tb * values(a0 * n + b1) +
           ta * (1.0 - tb) * values(a1 * n + b0) + ta * tb * values(a1 * n + b1);
}

} // namespace

double grid_interpolate(const DiscreteOperator& op, const Vector& values,
                        const Vector& x) {
    if (static_cast<int>(x.size()) != op.dim)
        throw InvalidArgumentError("interpolation point dimension does not match the grid");
    if (values.size() != op.size())
        throw InvalidArgumentError("interpolation values must have one entry per grid node");
    return interpolate(op, values, x);
}

Vector DiscreteOperator::point(long long index) const {
    Vector x(dim);
    const double h1 = period[0] / static_cast<double>(n);
    if (dim == 1) {
        x(0) = (static_cast<double>(index) + 0.5) * h1;
        return x;
    }
    const double h2 = period[1] / static_cast<double>(n);
    x(0) = (static_cast<double>(index / n) + 0.5) * h1;
    x(1) = (static_cast<double>(index % n) + 0.5) * h2;
    return x;
}

DiscreteOperator discretize(const FieldModel& field, double epsilon, int n,
                            const DiscretizeOptions& options) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw InvalidArgumentError("discretize: epsilon must be positive and finite");
    if (n < 4) throw InvalidArgumentError("discretize: need at least 4 points per axis");
    if (field.dim != 1 && field.dim != 2)
        throw InvalidArgumentError("discretize: grids are 1-D or 2-D periodic");
    if (!field.drift || !field.killing)
        throw InvalidArgumentError("discretize: field must supply drift and killing");
    if (!(options.peclet_cap > 0.0))
        throw InvalidArgumentError("discretize: peclet cap must be positive");

    DiscreteOperator op;
    op.dim = field.dim;
    op.n = n;
    op.period = field.period;
    op.epsilon = epsilon;
    const long long nn = n;
    const long long total = field.dim == 1 ? nn : nn * nn;
    const std::array<double, 2> h = {field.period[0] / n, field.period[1] / n};
    op.cell_weight = field.dim == 1 ? h[0] : h[0] * h[1];

    Matrix b(total, field.dim);
    Vector c(total);
    double peclet = 0.0;
    for (long long idx = 0; idx < total; ++idx) {
        const Vector x = op.point(idx);
        const Vector bx = field.drift(x);
        if (bx.size() != field.dim)
            throw InvalidArgumentError("discretize: drift dimension mismatch");
        for (int d = 0; d < field.dim; ++d) {
            if (!std::isfinite(bx(d)))
                throw InvalidArgumentError("discretize: non-finite drift value");
            b(idx, d) = bx(d);
            peclet = std::max(peclet, std::abs(bx(d)) * h[static_cast<std::size_t>(d)] / epsilon);
        }
        c(idx) = field.killing(x);
        if (!std::isfinite(c(idx)))
            throw InvalidArgumentError("discretize: non-finite killing value");
    }
    op.peclet = peclet;
    op.fitted = peclet > options.peclet_cap;
    if (op.fitted && !options.allow_fitting) {
        const long long needed =
            static_cast<long long>(std::ceil(static_cast<double>(n) * peclet / options.peclet_cap));
        std::ostringstream oss;
        oss << "discretize: grid Peclet number " << peclet << " exceeds the cap "
            << options.peclet_cap << " with fitting disabled; increase n to about " << needed;
        throw InvalidArgumentError(oss.str());
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(total * (1 + 2 * field.dim)));
    for (long long idx = 0; idx < total; ++idx) {
        double diag = c(idx);
        for (int d = 0; d < field.dim; ++d) {
            long long plus = 0, minus = 0;
            if (field.dim == 1) {
                plus = wrap(idx + 1, nn);
                minus = wrap(idx - 1, nn);
            } else if (d == 0) {
                const long long i1 = idx / nn, i2 = idx % nn;
                plus = wrap(i1 + 1, nn) * nn + i2;
                minus = wrap(i1 - 1, nn) * nn + i2;
            } else {
                const long long i1 = idx / nn, i2 = idx % nn;
                plus = i1 * nn + wrap(i2 + 1, nn);
                minus = i1 * nn + wrap(i2 - 1, nn);
            }
            const double hd = h[static_cast<std::size_t>(d)];
            const double rho = b(idx, d) * hd / (2.0 * epsilon);
            const double sigma = op.fitted ? fitting_factor(rho) : 1.0;
            const double diff = epsilon * sigma / (hd * hd);
            const double adv = b(idx, d) / (2.0 * hd);
            trips.emplace_back(idx, plus, -diff + adv);
            trips.emplace_back(idx, minus, -diff - adv);
            diag += 2.0 * diff;
        }
        trips.emplace_back(idx, idx, diag);
    }
    op.matrix.resize(total, total);
    op.matrix.setFromTriplets(trips.begin(), trips.end());
    op.matrix.makeCompressed();
    return op;
}

EigenPair leading_eigenpair(const DiscreteOperator& op, double tol, int max_iter) {
    const long long total = op.size();
    if (total == 0) throw InvalidArgumentError("leading_eigenpair: empty operator");
    if (!(tol > 0.0)) throw InvalidArgumentError("leading_eigenpair: tolerance must be positive");
    if (max_iter < 1) throw InvalidArgumentError("leading_eigenpair: need at least one iteration");
    if (!(op.cell_weight > 0.0))
        throw InvalidArgumentError("leading_eigenpair: operator has no grid measure");

    // Shift strictly below the Gershgorin lower bound so the shifted operator
    // is nonsingular and the target eigenvalue is the one closest to it.
    Vector offsum = Vector::Zero(total);
    for (int k = 0; k < op.matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, k); it; ++it)
            if (it.row() != it.col()) offsum(it.row()) += std::abs(it.value());
    const double bound = (op.matrix.diagonal() - offsum).minCoeff();
    const double shift = bound - 0.1 * (1.0 + std::abs(bound));

    Eigen::SparseMatrix<double> id(total, total);
    id.setIdentity();
    Eigen::SparseMatrix<double> shifted = op.matrix - shift * id;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success)
        throw ConvergenceError("leading_eigenpair: sparse factorization failed");

    const double root_w = std::sqrt(op.cell_weight);
    Vector u = Vector::Constant(total, 1.0);
    u /= root_w * u.norm();
    EigenPair pair;
    bool converged = false;
    for (int iter = 1; iter <= max_iter; ++iter) {
        Vector y = lu.solve(u);
        if (lu.info() != Eigen::Success)
            throw ConvergenceError("leading_eigenpair: sparse backsolve failed");
        if (y.sum() < 0.0) y = -y;
        const double norm = root_w * y.norm();
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw ConvergenceError("leading_eigenpair: iterate degenerated");
        y /= norm;
        const Vector z = op.matrix * y;
        pair.lambda = y.dot(z) / y.squaredNorm();
        pair.residual = root_w * (z - pair.lambda * y).norm();
        pair.iterations = iter;
        u = y;
        if (pair.residual <= tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream oss;
        oss << "leading_eigenpair: residual " << pair.residual << " above tolerance " << tol
            << " after " << max_iter << " iterations";
        throw ConvergenceError(oss.str());
    }
    if (u.minCoeff() <= 0.0)
        throw ConstraintError("leading_eigenpair: eigenvector changes sign, so the positive "
                              "principal mode is not resolved on this grid; refine n");
    pair.u = u;
    return pair;
}

GridMeasure weighted_measure(const EigenPair& pair, const DiscreteOperator& op,
                             const FieldModel& field) {
    const long long total = op.size();
    if (pair.u.size() != total)
        throw InvalidArgumentError("weighted_measure: eigenvector does not match the grid");
    if (!field.lyapunov)
        throw InvalidArgumentError("weighted_measure: field must supply the Lyapunov function");

    Vector logv(total);
    for (long long idx = 0; idx < total; ++idx) {
        if (!(pair.u(idx) > 0.0))
            throw InvalidArgumentError("weighted_measure: eigenvector must be positive");
        logv(idx) = std::log(pair.u(idx)) - field.lyapunov(op.point(idx)) / (2.0 * op.epsilon);
    }
    GridMeasure gm;
    gm.log_v_max = logv.maxCoeff();
    gm.v_over_vmax = (logv.array() - gm.log_v_max).exp();
    const Vector m = (2.0 * (logv.array() - gm.log_v_max)).exp();
    gm.mass = m / m.sum();
    return gm;
}

double component_distance(const RecurrentComponent& comp, const Vector& x,
                          const std::array<double, 2>& period, int dim) {
    if (x.size() != dim)
        throw InvalidArgumentError("component_distance: point dimension mismatch");
    switch (comp.kind) {
    case RecurrentComponent::Kind::Torus:
        return 0.0;
    case RecurrentComponent::Kind::Cycle:
        if (dim == 1) return 0.0;
        return std::abs(periodic_delta(x(0), comp.anchor(0), period[0]));
    case RecurrentComponent::Kind::Point:
    default: {
        double s = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double delta =
                periodic_delta(x(d), comp.anchor(d), period[static_cast<std::size_t>(d)]);
            s += delta * delta;
        }
        return std::sqrt(s);
    }
    }
}

int default_grid_rule(double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw InvalidArgumentError("default_grid_rule: epsilon must be positive and finite");
    long long n = static_cast<long long>(std::ceil(8.0 / std::sqrt(epsilon)));
    if (n % 2 != 0) ++n;
    n = std::clamp(n, static_cast<long long>(defaults::grid_min),
                   static_cast<long long>(defaults::grid_cap));
    return static_cast<int>(n);
}

StudyTable convergence_study(const FieldModel& field, const std::vector<double>& eps_list,
                             const std::function<int(double)>& n_rule, double tol) {
    if (eps_list.empty())
        throw InvalidArgumentError("convergence_study: epsilon list is empty");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0))
            throw InvalidArgumentError("convergence_study: epsilon values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw InvalidArgumentError("convergence_study: epsilon list must decrease strictly");
    }
    if (!n_rule) throw InvalidArgumentError("convergence_study: grid rule not set");

    StudyTable table;
    for (const auto& comp : field.components) table.labels.push_back(comp.label);

    for (const double eps : eps_list) {
        const int n = n_rule(eps);
        const DiscreteOperator op = discretize(field, eps, n);
        const EigenPair pair = leading_eigenpair(op, tol, defaults::eigen_max_iter);
        const GridMeasure gm = weighted_measure(pair, op, field);

        StudyRow row;
        row.epsilon = eps;
        row.n = n;
        row.lambda = pair.lambda;

        long long jmax = 0;
        gm.v_over_vmax.maxCoeff(&jmax);
        const Vector xstar = op.point(jmax);
        double dmax = std::numeric_limits<double>::infinity();
        for (const auto& comp : field.components)
            dmax = std::min(dmax, component_distance(comp, xstar, op.period, op.dim));
        row.dmax = field.components.empty() ? 0.0 : dmax;

        const double radius = defaults::tube_radius_factor * std::sqrt(eps);
        row.tube_mass.assign(field.components.size(), 0.0);
        row.gamma_hat.assign(field.components.size(), 0.0);
        for (long long idx = 0; idx < op.size(); ++idx) {
            const Vector x = op.point(idx);
            for (std::size_t k = 0; k < field.components.size(); ++k) {
                if (component_distance(field.components[k], x, op.period, op.dim) <= radius) {
                    row.tube_mass[k] += gm.mass(idx);
                    row.gamma_hat[k] = std::max(row.gamma_hat[k], gm.v_over_vmax(idx));
                }
            }
        }
        table.rows.push_back(std::move(row));
    }

    std::vector<double> lx, ly;
    for (const auto& row : table.rows) {
        if (row.dmax > 0.0) {
            lx.push_back(std::log(row.epsilon));
            ly.push_back(std::log(row.dmax));
        }
    }
    if (lx.size() < 2) {
        table.d_slope = std::numeric_limits<double>::quiet_NaN();
    } else {
        const double n = static_cast<double>(lx.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= n;
        my /= n;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        table.d_slope = sxy / sxx;
    }
    return table;
}

BlowupComparison blowup_extract(const EigenPair& pair, const DiscreteOperator& op,
                                const FieldModel& field, const RecurrentComponent& comp,
                                double pi_weight) {
    if (!(pi_weight > 0.0))
        throw InvalidArgumentError("blowup_extract: pi_weight must be positive");
    const GridMeasure gm = weighted_measure(pair, op, field);
    const double eps = op.epsilon;
    const double radius = defaults::tube_radius_factor * std::sqrt(eps);

    BlowupComparison out;
    for (long long idx = 0; idx < op.size(); ++idx)
        if (component_distance(comp, op.point(idx), op.period, op.dim) <= radius)
            out.gamma_hat = std::max(out.gamma_hat, gm.v_over_vmax(idx));
    if (out.gamma_hat < defaults::charged_threshold) {
        std::ostringstream oss;
        oss << "component '" << comp.label << "' carries no weight (gamma_hat = " << out.gamma_hat
            << " below " << defaults::charged_threshold << "); extraction skipped";
        out.notice = oss.str();
        return out;
    }
    out.charged = true;

    const int sdim = comp.split.stable_dim;
    const int udim = comp.split.unstable_dim;
    const LyapunovData lyap =
        build_lyapunov(comp.split, pi_weight * Matrix::Identity(sdim, sdim),
                       pi_weight * Matrix::Identity(udim, udim));
    const BlowupProfile profile = blowup_profile(comp, lyap);

    if (comp.kind == RecurrentComponent::Kind::Torus) {
        // The component is the whole torus; compare on the cell centers
        // directly, both sides normalized by their maxima.
        Vector logf(op.size());
        for (long long idx = 0; idx < op.size(); ++idx) {
            const Vector x = op.point(idx);
            logf(idx) = fourier_eval_2d(profile.torus.log_modes, x(0) / op.period[0],
                                        x(1) / op.period[1]);
        }
        const Vector fpred = (logf.array() - logf.maxCoeff()).exp();
        out.rel_l2 = (gm.v_over_vmax - fpred).norm() / fpred.norm();
        return out;
    }

    const Matrix basis_inv = comp.split.basis.inverse();
    const Matrix s_split = profile.S;
    const Matrix s_orig = basis_inv.transpose() * s_split * basis_inv;
    const Matrix cov_pred = 0.25 * s_orig.inverse();

    constexpr int stencil = 25;
    constexpr double xi_max = 3.0;
    auto xi_at = [&](int j) { return -xi_max + 2.0 * xi_max * j / (stencil - 1); };

    if (comp.kind == RecurrentComponent::Kind::Point) {
        const int m1 = stencil;
        const int m2 = op.dim == 2 ? stencil : 1;
        std::vector<double> meas, pred;
        std::vector<Vector> offsets;
        meas.reserve(static_cast<std::size_t>(m1 * m2));
        for (int j1 = 0; j1 < m1; ++j1) {
            for (int j2 = 0; j2 < m2; ++j2) {
                Vector xi(op.dim);
                xi(0) = xi_at(j1);
                if (op.dim == 2) xi(1) = xi_at(j2);
                Vector x = comp.anchor + std::sqrt(eps) * xi;
                meas.push_back(interpolate(op, gm.v_over_vmax, x));
                const Vector xs = basis_inv * xi;
                pred.push_back(std::exp(-xs.dot(s_split * xs)));
                offsets.push_back(xi);
            }
        }
        const double mmax = *std::max_element(meas.begin(), meas.end());
        const double pmax = *std::max_element(pred.begin(), pred.end());
        double num = 0.0, den = 0.0;
        double w2 = 0.0;
        Vector w2xi2 = Vector::Zero(op.dim);
        for (std::size_t i = 0; i < meas.size(); ++i) {
            const double wm = meas[i] / mmax;
            const double wp = pred[i] / pmax;
            num += (wm - wp) * (wm - wp);
            den += wp * wp;
            w2 += wm * wm;
            for (int d = 0; d < op.dim; ++d)
                w2xi2(d) += wm * wm * offsets[i](d) * offsets[i](d);
        }
        out.rel_l2 = std::sqrt(num / den);
        for (int d = 0; d < op.dim; ++d)
            out.second_moment_ratio.push_back((w2xi2(d) / w2) / cov_pred(d, d));
        return out;
    }

    // Cycle on the 2-torus: transverse along the first axis, longitudinal
    // samples at the cell centers of the second axis.
    if (op.dim != 2)
        throw InvalidArgumentError("blowup_extract: cycle extraction needs a 2-D grid");
    const auto& fs = profile.cycle.samples;
    const int nf = static_cast<int>(fs.size());
    const double period_T = profile.cycle.period;
    auto cycle_f = [&](double s) {
        const double u = s / period_T * nf;
        const double fl = std::floor(u);
        const double t = u - fl;
        const long long lo = wrap(static_cast<long long>(fl), nf);
        const long long hi = wrap(static_cast<long long>(fl) + 1, nf);
        return (1.0 - t) * fs[static_cast<std::size_t>(lo)] + t * fs[static_cast<std::size_t>(hi)];
    };

    double num = 0.0, den = 0.0, w2 = 0.0, w2xi2 = 0.0;
    double mmax = 0.0, pmax = 0.0;
    std::vector<double> meas, pred, xis;
    meas.reserve(static_cast<std::size_t>(stencil) * op.n);
    for (int j = 0; j < stencil; ++j) {
        const double xi = xi_at(j);
        for (int i2 = 0; i2 < op.n; ++i2) {
            const double theta = (i2 + 0.5) * op.period[1] / op.n;
            Vector x(2);
            x(0) = comp.anchor(0) + std::sqrt(eps) * xi;
            x(1) = theta;
            meas.push_back(interpolate(op, gm.v_over_vmax, x));
            pred.push_back(std::exp(-s_orig(0, 0) * xi * xi) *
                           cycle_f(theta / op.period[1] * period_T));
            xis.push_back(xi);
            mmax = std::max(mmax, meas.back());
            pmax = std::max(pmax, pred.back());
        }
    }
    for (std::size_t i = 0; i < meas.size(); ++i) {
        const double wm = meas[i] / mmax;
        const double wp = pred[i] / pmax;
        num += (wm - wp) * (wm - wp);
        den += wp * wp;
        w2 += wm * wm;
        w2xi2 += wm * wm * xis[i] * xis[i];
    }
    out.rel_l2 = std::sqrt(num / den);
    out.second_moment_ratio.push_back((w2xi2 / w2) / (0.25 / s_orig(0, 0)));
    return out;
}

} // namespace eiglab
