#include "eiglab/oukernel.hpp"

#include "eiglab/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace eiglab {

namespace {

Matrix block_diag(const Matrix& top, const Matrix& bottom) {
    Matrix out = Matrix::Zero(top.rows() + bottom.rows(), top.cols() + bottom.cols());
    out.topLeftCorner(top.rows(), top.cols()) = top;
    out.bottomRightCorner(bottom.rows(), bottom.cols()) = bottom;
    return out;
}

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

double logdet_pd(const Matrix& M, const char* what) {
    if (M.rows() == 0) return 0.0;
    Eigen::LLT<Matrix> llt(symmetrize(M));
    if (llt.info() != Eigen::Success) throw ConstraintError(what);
    double acc = 0.0;
    for (int i = 0; i < M.rows(); ++i) acc += std::log(llt.matrixL()(i, i));
    return 2.0 * acc;
}

// Nodes and weights for integrating e^{-x^2} f(x) over the line, from the
// symmetric Jacobi matrix of the Hermite recurrence.
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    Matrix J = Matrix::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double b = std::sqrt(0.5 * i);
        J(i, i - 1) = b;
        J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(J);
    nodes.resize(n);
    weights.resize(n);
    const double root_pi = std::sqrt(std::numbers::pi);
    for (int i = 0; i < n; ++i) {
        nodes[i] = es.eigenvalues()[i];
        const double v = es.eigenvectors()(0, i);
        weights[i] = root_pi * v * v;
    }
}

struct BlockFamily {
    Matrix Q, R, P, U;
};

BlockFamily assemble_block(const Matrix& B, const Matrix& A, double t, Side side) {
    BlockFamily out;
    const int m = static_cast<int>(B.rows());
    if (m == 0) {
        out.Q = out.R = out.P = out.U = Matrix(0, 0);
        return out;
    }
    out.Q = finite_gramian(B, t);
    const Matrix Qinv = out.Q.inverse();
    const Matrix R2 = symmetrize(Qinv - 2.0 * A);
    Eigen::SelfAdjointEigenSolver<Matrix> es(R2);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw ConstraintError("ou_operators: covariance minus twice the Lyapunov "
                              "Hessian lost definiteness");
    out.R = pd_sqrt(R2);
    const Matrix E = mat_exp(B, -t);
    out.P = out.R.inverse() * Qinv * E;
    if (side == Side::Stable) {
        // (G_t + e^{tB} (-2A)^{-1} e^{tB^T})^{-1} with every factor bounded.
        const Matrix G = finite_gramian(-B, t);
        const Matrix Et = mat_exp(B, t);
        const Matrix W = Et * (-0.5 * A.inverse()) * Et.transpose();
        out.U = symmetrize(Matrix(symmetrize(G + W).inverse()));
    } else {
        // Q - A^{-1}/2 is negative definite whenever R is well defined.
        const Matrix core = symmetrize(out.Q - 0.5 * A.inverse());
        out.U = symmetrize(E.transpose() * core.inverse() * E);
    }
    return out;
}

} // namespace

OUOperatorFamily ou_operators(const HyperbolicSplitting& split, const LyapunovData& lyap,
                              double t) {
    if (!(t > 0.0)) throw InvalidArgumentError("ou_operators: time must be positive");
    if (lyap.A_s.rows() != split.stable_dim || lyap.A_u.rows() != split.unstable_dim)
        throw InvalidArgumentError("ou_operators: splitting and Lyapunov data disagree");
    OUOperatorFamily fam;
    fam.t = t;
    auto s = assemble_block(split.stable_block, lyap.A_s, t, Side::Stable);
    auto u = assemble_block(split.unstable_block, lyap.A_u, t, Side::Unstable);
    fam.Q_s = std::move(s.Q);
    fam.R_s = std::move(s.R);
    fam.P_s = std::move(s.P);
    fam.U_s = std::move(s.U);
    fam.Q_u = std::move(u.Q);
    fam.R_u = std::move(u.R);
    fam.P_u = std::move(u.P);
    fam.U_u = std::move(u.U);
    return fam;
}

double ou_quadratic_form(const OUOperatorFamily& fam, const Vector& x, const Vector& y) {
    const int ms = static_cast<int>(fam.R_s.rows());
    const int mu = static_cast<int>(fam.R_u.rows());
    if (x.size() != ms + mu || y.size() != ms + mu)
        throw InvalidArgumentError("ou_quadratic_form: vector length does not match the "
                                   "splitting");
    double q = 0.0;
    if (ms > 0) {
        const Vector xs = x.head(ms);
        const Vector ys = y.head(ms);
        q += 0.25 * xs.dot(fam.U_s * xs);
        q += 0.25 * (fam.R_s * ys - fam.P_s * xs).squaredNorm();
    }
    if (mu > 0) {
        const Vector xu = x.tail(mu);
        const Vector yu = y.tail(mu);
        q += 0.25 * xu.dot(fam.U_u * xu);
        q += 0.25 * (fam.R_u * yu - fam.P_u * xu).squaredNorm();
    }
    return q;
}

std::vector<double> kolmogorov_apply(const std::function<double(const Vector&)>& z,
                                     const std::vector<Vector>& points,
                                     const HyperbolicSplitting& split,
                                     const LyapunovData& lyap, double t,
                                     QuadratureSpec quad) {
    if (!z) throw InvalidArgumentError("kolmogorov_apply: missing integrand");
    if (quad.degree < 2 || quad.max_degree < quad.degree || !(quad.tol > 0.0))
        throw InvalidArgumentError("kolmogorov_apply: bad quadrature request");
    const int m = split.stable_dim + split.unstable_dim;
    if (m == 0) {
        std::vector<double> flat(points.size(), z(Vector(0)));
        return flat;
    }
    const auto fam = ou_operators(split, lyap, t);
    const Matrix R = block_diag(fam.R_s, fam.R_u);
    const Matrix P = block_diag(fam.P_s, fam.P_u);
    const Matrix U = block_diag(fam.U_s, fam.U_u);
    const Matrix Rinv = R.inverse();
    const Matrix Q = block_diag(fam.Q_s, fam.Q_u);
    const double base_exponent = -0.5 * m * std::log(4.0 * std::numbers::pi)
                                 + m * std::log(2.0) - 0.5 * logdet_pd(Q, "kolmogorov")
                                 - 0.5 * logdet_pd(R * R, "kolmogorov");

    auto gauge = [&](const Vector& y) {
        const double v = z(y) * std::exp(-0.5 * y.dot(lyap.A * y));
        if (!std::isfinite(v))
            throw InvalidArgumentError("kolmogorov_apply: integrand left the admissible "
                                       "growth class");
        return v;
    };

    auto evaluate = [&](int degree) {
        std::vector<double> nodes, weights;
        gauss_hermite(degree, nodes, weights);
        std::vector<double> out(points.size());
        for (size_t p = 0; p < points.size(); ++p) {
            const Vector& x = points[p];
            if (x.size() != m)
                throw InvalidArgumentError("kolmogorov_apply: point dimension mismatch");
            const Vector center = Rinv * (P * x);
            const double pref = std::exp(base_exponent - 0.25 * x.dot(U * x));
            std::vector<int> idx(m, 0);
            double acc = 0.0;
            while (true) {
                double w = 1.0;
                Vector xi(m);
                for (int d = 0; d < m; ++d) {
                    w *= weights[idx[d]];
                    xi[d] = nodes[idx[d]];
                }
                acc += w * gauge(center + 2.0 * (Rinv * xi));
                int d = 0;
                while (d < m && ++idx[d] == degree) idx[d++] = 0;
                if (d == m) break;
            }
            out[p] = pref * acc;
        }
        return out;
    };

    std::vector<double> prev = evaluate(quad.degree);
    for (int degree = 2 * quad.degree; degree <= quad.max_degree; degree *= 2) {
        std::vector<double> next = evaluate(degree);
        double diff = 0.0;
        double scale = 1.0;
        for (size_t p = 0; p < prev.size(); ++p) {
            diff = std::max(diff, std::abs(next[p] - prev[p]));
            scale = std::max(scale, std::abs(next[p]));
        }
        if (diff <= quad.tol * scale) return next;
        prev = std::move(next);
    }
    throw ConvergenceError("kolmogorov_apply: quadrature did not settle before the "
                           "degree cap");
}

AsymptoticsReport asymptotics_suite(const HyperbolicSplitting& split,
                                    const LyapunovData& lyap, double t_small,
                                    double t_large) {
    if (!(0.0 < t_small && t_small < t_large))
        throw InvalidArgumentError("asymptotics_suite: need 0 < t_small < t_large");
    AsymptoticsReport rep;
    rep.t_small = t_small;
    rep.t_large = t_large;
    const int ms = split.stable_dim;
    const int mu = split.unstable_dim;
    const int m = ms + mu;
    const Matrix B = block_diag(split.stable_block, split.unstable_block);
    const Matrix A = lyap.A;
    const Matrix I = Matrix::Identity(m, m);

    {
        const double t = t_small;
        const auto fam = ou_operators(split, lyap, t);
        const Matrix Q = block_diag(fam.Q_s, fam.Q_u);
        const Matrix R = block_diag(fam.R_s, fam.R_u);
        const Matrix U = block_diag(fam.U_s, fam.U_u);
        const Matrix Qinv = Q.inverse();
        const Matrix sym_B = 0.5 * (B + B.transpose());
        rep.small_time.emplace_back("Q_over_t_vs_identity", spectral_norm(Q / t - I));
        rep.small_time.emplace_back("Qinv_expansion",
                                    t * spectral_norm(Qinv - I / t - sym_B));
        rep.small_time.emplace_back(
            "R_square_expansion",
            t * spectral_norm(R * R - (I / t + sym_B - 2.0 * A)));
        rep.small_time.emplace_back("scaled_R_vs_identity",
                                    spectral_norm(std::sqrt(t) * R - I));
        rep.small_time.emplace_back("U_vs_minus_2A",
                                    spectral_norm(U + 2.0 * A)
                                        / std::max(1.0, spectral_norm(2.0 * A)));
        rep.small_time.emplace_back(
            "whitened_transport_vs_identity",
            spectral_norm((R * R).inverse() * Qinv * mat_exp(B, -t) - I));
        rep.small_time.emplace_back(
            "logdet_Q_vs_m_log_t",
            std::abs(std::exp(logdet_pd(Q, "asymptotics") - m * std::log(t)) - 1.0));
    }

    {
        const double t = t_large;
        const auto fam = ou_operators(split, lyap, t);
        if (mu > 0) {
            const Matrix Qu_inf = infinite_gramian(-split.unstable_block);
            rep.large_time.emplace_back("Q_u_limit",
                                        spectral_norm(fam.Q_u - Qu_inf)
                                            / spectral_norm(Qu_inf));
            rep.large_time.emplace_back(
                "R_u_limit",
                spectral_norm(fam.R_u - pd_sqrt(Matrix(Qu_inf.inverse() - 2.0 * lyap.A_u))));
            rep.large_time.emplace_back("P_u_decay", spectral_norm(fam.P_u));
            rep.large_time.emplace_back("U_u_decay", spectral_norm(fam.U_u));
            Eigen::SelfAdjointEigenSolver<Matrix> es(fam.U_u);
            rep.u_unstable_max_eig = es.eigenvalues().maxCoeff();
        }
        if (ms > 0) {
            rep.large_time.emplace_back(
                "R_s_limit", spectral_norm(fam.R_s - pd_sqrt(Matrix(-2.0 * lyap.A_s))));
            rep.large_time.emplace_back(
                "whitened_stable_transport_decay",
                spectral_norm(fam.Q_s.inverse() * mat_exp(split.stable_block, -t)));
            rep.large_time.emplace_back("P_s_decay", spectral_norm(fam.P_s));
            const Matrix Ms = infinite_gramian(split.stable_block);
            const Matrix Ms_inv = Ms.inverse();
            rep.large_time.emplace_back("U_s_limit",
                                        spectral_norm(fam.U_s - Ms_inv)
                                            / spectral_norm(Ms_inv));
            const double logdet = logdet_pd(fam.Q_s, "asymptotics")
                                  + 2.0 * t * split.stable_block.trace();
            const double det_Ms = std::exp(logdet_pd(Ms, "asymptotics"));
            rep.det_product_deviation = std::abs(std::exp(logdet) - det_Ms) / det_Ms;
            Eigen::SelfAdjointEigenSolver<Matrix> es(fam.U_s);
            rep.u_stable_min_eig = es.eigenvalues().minCoeff();
        }
    }
    return rep;
}

} // namespace eiglab
