#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eiglab/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <complex>
#include <functional>
#include <random>

using eiglab::Matrix;
using eiglab::Side;

// ---------------------------------------------------------------------------
// Reference oracles. These are deliberately independent of the library
// implementations: exponentials via eigendecomposition (diagonalizable
// inputs only), integrals via composite Gauss-Legendre with panel doubling.
// ---------------------------------------------------------------------------

namespace oracle {

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
static const double gl_x[16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
     0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
     0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
static const double gl_w[16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

Matrix integrate(const std::function<Matrix(double)>& f, double a, double b,
                 double tol = 1e-12) {
    Matrix prev;
    for (int panels = 1; panels <= (1 << 14); panels *= 2) {
        const double h = (b - a) / panels;
        Matrix acc;
        for (int p = 0; p < panels; ++p) {
            const double mid = a + (p + 0.5) * h;
            for (int k = 0; k < 16; ++k) {
                Matrix term = (0.5 * h * gl_w[k]) * f(mid + 0.5 * h * gl_x[k]);
                if (acc.size() == 0) acc = term; else acc += term;
            }
        }
        if (prev.size() != 0 && (acc - prev).norm() <= tol * (1.0 + acc.norm()))
            return acc;
        prev = acc;
    }
    return prev;
}

// exp(tB) through the complex eigendecomposition; requires B diagonalizable.
Matrix expm_eig(const Matrix& B, double t) {
    Eigen::EigenSolver<Matrix> es(B);
    Eigen::MatrixXcd V = es.eigenvectors();
    Eigen::VectorXcd lam = es.eigenvalues();
    Eigen::MatrixXcd E = V * (t * lam.array()).exp().matrix().asDiagonal() * V.inverse();
    return E.real();
}

} // namespace oracle

namespace {

Matrix random_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    return Matrix(qr.householderQ());
}

// Random matrix with prescribed real eigenvalue range, optionally non-normal.
Matrix random_with_spectrum(int n, double lo, double hi, bool non_normal,
                            std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ev(lo, hi);
    Matrix D = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) D(i, i) = ev(rng);
    if (!non_normal) {
        Matrix W = random_orthogonal(n, rng);
        return W * D * W.transpose();
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix N(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) N(i, j) = gauss(rng);
    Matrix S = Matrix::Identity(n, n) + 0.3 * N;
    return S * D * S.inverse();
}

} // namespace

TEST_CASE("mat_exp closed forms") {
    Matrix Z = Matrix::Zero(1, 1);
    CHECK(eiglab::mat_exp(Z, 5.0)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

    Matrix B1(1, 1);
    B1 << -1.0;
    CHECK(eiglab::mat_exp(B1, std::log(2.0))(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

    Matrix N(2, 2);
    N << 0, 1, 0, 0;
    Matrix E = eiglab::mat_exp(N, 1.0);
    CHECK(E(0, 0) == doctest::Approx(1.0));
    CHECK(E(0, 1) == doctest::Approx(1.0));
    CHECK(E(1, 0) == doctest::Approx(0.0));
    CHECK(E(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("mat_exp agrees with eigendecomposition oracle") {
    Matrix B(2, 2);
    B << 0, 1, -2, -3;
    Matrix got = eiglab::mat_exp(B, 0.7);
    Matrix ref = oracle::expm_eig(B, 0.7);
    CHECK((got - ref).norm() <= 1e-12 * ref.norm());
}

TEST_CASE("mat_exp semigroup property") {
    std::mt19937_64 rng(2026);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix B = random_with_spectrum(4, -2.0, 1.5, true, rng);
        Matrix lhs = eiglab::mat_exp(B, 1.1);
        Matrix rhs = eiglab::mat_exp(B, 0.4) * eiglab::mat_exp(B, 0.7);
        CHECK((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    }
}

TEST_CASE("mat_exp input validation") {
    Matrix bad(1, 1);
    bad << std::nan("");
    CHECK_THROWS_AS(eiglab::mat_exp(bad, 1.0), eiglab::InvalidArgumentError);

    Matrix big(1, 1);
    big << 1.0;
    CHECK_THROWS_AS(eiglab::mat_exp(big, 2e4), eiglab::InvalidArgumentError);

    Matrix rect(1, 2);
    rect << 1.0, 2.0;
    CHECK_THROWS_AS(eiglab::require_square_finite(rect, "test"), eiglab::InvalidArgumentError);
}

TEST_CASE("spectral_split diagonal case") {
    Matrix B(2, 2);
    B << -1, 0, 0, 2;
    auto split = eiglab::spectral_split(B);
    CHECK(split.stable_dim == 1);
    CHECK(split.unstable_dim == 1);
    CHECK(split.stable_block(0, 0) == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(split.unstable_block(0, 0) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK((split.basis.cwiseAbs() - Matrix::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("spectral_split fully stable matrices") {
    Matrix B(2, 2);
    B << 0, 1, -2, -3;
    // Oracle: both eigenvalues of B have negative real part.
    Eigen::EigenSolver<Matrix> es(B);
    for (int i = 0; i < 2; ++i) CHECK(es.eigenvalues()(i).real() < 0.0);
    auto split = eiglab::spectral_split(B);
    CHECK(split.stable_dim == 2);
    CHECK(split.unstable_dim == 0);
    CHECK((split.stable_block - B).norm() <= 1e-12);

    Matrix C(2, 2);
    C << -1, 5, -5, -1;
    auto split2 = eiglab::spectral_split(C);
    CHECK(split2.stable_dim == 2);
    CHECK(split2.unstable_dim == 0);
}

TEST_CASE("spectral_split round-trip on orthogonally split matrices") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const int ms = 1 + static_cast<int>(rng() % 3);
        const int mu = 1 + static_cast<int>(rng() % 3);
        Matrix Bs = random_with_spectrum(ms, -3.0, -0.3, trial % 2 == 0, rng);
        Matrix Bu = random_with_spectrum(mu, 0.3, 3.0, trial % 2 == 1, rng);
        Matrix D = Matrix::Zero(ms + mu, ms + mu);
        D.topLeftCorner(ms, ms) = Bs;
        D.bottomRightCorner(mu, mu) = Bu;
        Matrix W = random_orthogonal(ms + mu, rng);
        Matrix B = W * D * W.transpose();

        auto split = eiglab::spectral_split(B);
        CHECK(split.stable_dim == ms);
        CHECK(split.unstable_dim == mu);
        Matrix Dr = Matrix::Zero(ms + mu, ms + mu);
        Dr.topLeftCorner(ms, ms) = split.stable_block;
        Dr.bottomRightCorner(mu, mu) = split.unstable_block;
        Matrix rec = split.basis * Dr * split.basis.transpose();
        CHECK((rec - B).norm() <= 1e-8 * (1.0 + B.norm()));
        CHECK((split.basis * split.basis.transpose() - Matrix::Identity(ms + mu, ms + mu)).norm()
              <= 1e-12);
    }
}

TEST_CASE("spectral_split rejects near-axis and skew subspaces") {
    Matrix B(2, 2);
    B << -1e-9, 0, 0, 1;
    CHECK_THROWS_AS(eiglab::spectral_split(B), eiglab::HyperbolicityError);

    // Eigenvectors e1 and (10,3)/sqrt(109) are far from orthogonal.
    Matrix C(2, 2);
    C << -1, 10, 0, 2;
    CHECK_THROWS_AS(eiglab::spectral_split(C), eiglab::OrthogonalityError);
}

TEST_CASE("finite_gramian scalar closed forms") {
    Matrix B(1, 1);
    B << 1.0;
    const double expected = (1.0 - std::exp(-2.0)) / 2.0; // 0.43233235838169365
    CHECK(eiglab::finite_gramian(B, 1.0)(0, 0) == doctest::Approx(expected).epsilon(1e-13));

    Matrix Bm(1, 1);
    Bm << -1.0;
    // Short-time expansion Q_t = t (1 + t) + O(t^3).
    const double q = eiglab::finite_gramian(Bm, 0.01)(0, 0);
    CHECK(std::abs(q - 0.01 * 1.01) <= 1e-6);

    CHECK(eiglab::finite_gramian(Bm, 0.0).norm() == 0.0);
    CHECK_THROWS_AS(eiglab::finite_gramian(Bm, -1.0), eiglab::InvalidArgumentError);
}

TEST_CASE("finite_gramian matches quadrature oracle") {
    Matrix B(2, 2);
    B << 0, 1, -2, -3;
    Matrix got = eiglab::finite_gramian(B, 2.0);
    Matrix ref = oracle::integrate(
        [&](double s) {
            Matrix E = oracle::expm_eig(B, -s);
            return Matrix(E * E.transpose());
        },
        0.0, 2.0);
    CHECK((got - ref).norm() <= 1e-10 * (1.0 + ref.norm()));
}

TEST_CASE("finite_gramian monotonicity and derivative identity") {
    std::mt19937_64 rng(7);
    Matrix B = random_with_spectrum(3, -2.5, -0.4, true, rng);
    Matrix Q1 = eiglab::finite_gramian(B, 1.0);
    Matrix Q2 = eiglab::finite_gramian(B, 2.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q2 - Q1);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);

    const double t = 0.8, h = 1e-5;
    Matrix dQ = (eiglab::finite_gramian(B, t + h) - eiglab::finite_gramian(B, t - h)) / (2 * h);
    Matrix E = eiglab::mat_exp(B, -t);
    Matrix expect = E * E.transpose();
    CHECK((dQ - expect).norm() <= 1e-8 * expect.norm());
}

TEST_CASE("infinite_gramian scalar and defective closed forms") {
    Matrix B(1, 1);
    B << -1.0;
    Matrix M = eiglab::infinite_gramian(B);
    CHECK(M(0, 0) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(std::abs((-1.0) * M(0, 0) + M(0, 0) * (-1.0) + 1.0) <= 1e-13);

    // Jordan block: e^{tB} = e^{-t} [[1, t],[0, 1]] gives
    // M = [[3/4, 1/4],[1/4, 1/2]] in closed form.
    Matrix J(2, 2);
    J << -1, 1, 0, -1;
    Matrix MJ = eiglab::infinite_gramian(J);
    CHECK(MJ(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(MJ(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(MJ(1, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(MJ(1, 1) == doctest::Approx(0.50).epsilon(1e-12));

    // The same values from the long-horizon quadrature oracle.
    Matrix ref = oracle::integrate(
        [&](double s) {
            Matrix E(2, 2);
            E << 1, s, 0, 1;
            E *= std::exp(-s);
            return Matrix(E * E.transpose());
        },
        0.0, 50.0);
    CHECK((MJ - ref).norm() <= 1e-10);
}

TEST_CASE("infinite_gramian residual over 200 random stable matrices") {
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 6);
        Matrix B = random_with_spectrum(n, -3.0, -0.2, trial % 2 == 0, rng);
        Matrix M = eiglab::infinite_gramian(B);
        const double resid = (B * M + M * B.transpose() + Matrix::Identity(n, n)).norm()
                             / M.norm();
        CHECK(resid <= 1e-10);
    }
}

TEST_CASE("infinite_gramian rejects non-stable spectra") {
    Matrix B(1, 1);
    B << 1.0;
    CHECK_THROWS_AS(eiglab::infinite_gramian(B), eiglab::DivergentIntegralError);
    Matrix Z = Matrix::Zero(1, 1);
    CHECK_THROWS_AS(eiglab::infinite_gramian(Z), eiglab::DivergentIntegralError);
}

TEST_CASE("weighted_infinite_gramian scalar cases") {
    Matrix B(1, 1), Pi(1, 1);
    B << -1.0;
    Pi << 4.0;
    CHECK(eiglab::weighted_infinite_gramian(B, Pi, Side::Stable)(0, 0)
          == doctest::Approx(-0.5).epsilon(1e-13));

    Pi << 2.5;
    CHECK(eiglab::weighted_infinite_gramian(B, Pi, Side::Stable)(0, 0)
          == doctest::Approx(-0.8).epsilon(1e-13));

    B << 2.0;
    Pi << 4.0;
    CHECK(eiglab::weighted_infinite_gramian(B, Pi, Side::Unstable)(0, 0)
          == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("weighted_infinite_gramian matches quadrature oracle") {
    Matrix B(2, 2), Pi(2, 2);
    B << -1, 0.3, 0, -2;
    Pi << 4, 1, 1, 4;
    Matrix A = eiglab::weighted_infinite_gramian(B, Pi, Side::Stable);
    Matrix Ainv_ref = oracle::integrate(
        [&](double s) {
            Matrix E = oracle::expm_eig(B, s);
            return Matrix(E * Pi * E.transpose());
        },
        0.0, 50.0);
    Ainv_ref = -Ainv_ref;
    CHECK((A.inverse() - Ainv_ref).norm() <= 1e-8 * Ainv_ref.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    CHECK(es.eigenvalues().maxCoeff() < 0.0);
}

TEST_CASE("weighted_infinite_gramian constraint checks") {
    Matrix B(1, 1), Pi(1, 1);
    B << -1.0;
    Pi << 2.0;
    CHECK_THROWS_AS(eiglab::weighted_infinite_gramian(B, Pi, Side::Stable),
                    eiglab::ConstraintError);
    Pi << 1.9;
    CHECK_THROWS_AS(eiglab::weighted_infinite_gramian(B, Pi, Side::Stable),
                    eiglab::ConstraintError);

    Matrix B2(2, 2), Pi2(2, 2);
    B2 << -1, 0, 0, -1;
    Pi2 << 4, 1, 0, 4;
    CHECK_THROWS_AS(eiglab::weighted_infinite_gramian(B2, Pi2, Side::Stable),
                    eiglab::InvalidArgumentError);

    Matrix Bu(1, 1), Piu(1, 1);
    Bu << -1.0; // wrong side for the unstable integral
    Piu << 4.0;
    CHECK_THROWS_AS(eiglab::weighted_infinite_gramian(Bu, Piu, Side::Unstable),
                    eiglab::DivergentIntegralError);
}

TEST_CASE("pd_sqrt closed forms and frozen eigen oracle values") {
    Matrix M(1, 1);
    M << 4.0;
    CHECK(eiglab::pd_sqrt(M)(0, 0) == doctest::Approx(2.0).epsilon(1e-14));

    Matrix I = Matrix::Identity(3, 3);
    CHECK((eiglab::pd_sqrt(I) - I).norm() <= 1e-13);

    // Eigendecomposition oracle for [[2,1],[1,2]]: eigenvalues 1 and 3 with
    // basis (1,-1)/sqrt2, (1,1)/sqrt2, so sqrt = [[(sqrt3+1)/2, (sqrt3-1)/2], ...].
    Matrix S2(2, 2);
    S2 << 2, 1, 1, 2;
    Matrix R = eiglab::pd_sqrt(S2);
    CHECK(R(0, 0) == doctest::Approx(1.3660254037844386).epsilon(1e-13));
    CHECK(R(0, 1) == doctest::Approx(0.36602540378443865).epsilon(1e-13));
    CHECK(R(1, 0) == doctest::Approx(0.36602540378443865).epsilon(1e-13));
    CHECK(R(1, 1) == doctest::Approx(1.3660254037844386).epsilon(1e-13));
}

TEST_CASE("pd_sqrt properties and rejection") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 4);
        Matrix W = random_orthogonal(n, rng);
        Matrix D = Matrix::Zero(n, n);
        std::uniform_real_distribution<double> ev(0.1, 5.0);
        for (int i = 0; i < n; ++i) D(i, i) = ev(rng);
        Matrix M = W * D * W.transpose();
        M = 0.5 * (M + M.transpose());
        Matrix S = eiglab::pd_sqrt(M);
        CHECK((S * S - M).norm() <= 1e-12 * M.norm());

        Matrix V = random_orthogonal(n, rng);
        Matrix lhs = eiglab::pd_sqrt(Matrix(V * M * V.transpose()));
        Matrix rhs = V * S * V.transpose();
        CHECK((lhs - rhs).norm() <= 1e-11 * rhs.norm());
    }

    Matrix bad(2, 2);
    bad << 1, 0, 0, -1;
    CHECK_THROWS_AS(eiglab::pd_sqrt(bad), eiglab::NotPositiveDefiniteError);
    Matrix nonsym(2, 2);
    nonsym << 1, 1, 0, 1;
    CHECK_THROWS_AS(eiglab::pd_sqrt(nonsym), eiglab::InvalidArgumentError);
}
