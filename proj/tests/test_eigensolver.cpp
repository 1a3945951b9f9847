#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eiglab/eigensolver.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "eiglab/errors.hpp"
#include "eiglab/model.hpp"

using eiglab::Matrix;
using eiglab::Vector;

namespace {

constexpr double tau = 2.0 * std::numbers::pi;

Vector v1(double a) {
    Vector v(1);
    v << a;
    return v;
}

Vector v2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

// Drift-free circle with constant killing; the discrete operator must keep
// the constant vector as an exact eigenvector.
eiglab::FieldModel flat_circle(double c0) {
    eiglab::FieldModel m;
    m.manifold = eiglab::FieldModel::Manifold::Circle;
    m.dim = 1;
    m.name = "flat_circle";
    m.drift = [](const Vector& x) { return v1(0.0 * x(0)); };
    m.rotation = [](const Vector& x) { return v1(0.0 * x(0)); };
    m.lyapunov = [](const Vector&) { return 0.0; };
    m.lyapunov_grad = [](const Vector& x) { return v1(0.0 * x(0)); };
    m.killing = [c0](const Vector&) { return c0; };
    return m;
}

const eiglab::RecurrentComponent& find_component(const eiglab::FieldModel& field,
                                                 const std::string& label) {
    for (const auto& comp : field.components)
        if (comp.label == label) return comp;
    throw std::runtime_error("missing component " + label);
}

// Gauge-transformed model: drift reduced to the rotation part, flat Lyapunov
// function, and killing c - lap(L)/2 + Psi/eps evaluated from the base field.
eiglab::FieldModel gauge_model(const eiglab::FieldModel& base, double eps) {
    eiglab::FieldModel g;
    g.manifold = base.manifold;
    g.dim = base.dim;
    g.period = base.period;
    g.name = base.name + "_gauged";
    g.drift = base.rotation;
    g.rotation = base.rotation;
    g.lyapunov = [](const Vector&) { return 0.0; };
    g.lyapunov_grad = [dim = base.dim](const Vector&) -> Vector { return Vector::Zero(dim); };
    g.killing = [base, eps](const Vector& x) {
        const double h = 1e-4;
        double lap = 0.0;
        for (int d = 0; d < base.dim; ++d) {
            Vector xp = x, xm = x;
            xp(d) += h;
            xm(d) -= h;
            lap += (base.lyapunov(xp) - 2.0 * base.lyapunov(x) + base.lyapunov(xm)) / (h * h);
        }
        return base.killing(x) - 0.5 * lap + base.psi(x) / eps;
    };
    return g;
}

// Residual of the transformed operator applied to v = e^{-L/2eps} u against
// lambda v, relative to the scale of v.
double gauge_residual(const eiglab::FieldModel& field, double eps, int n) {
    const auto op = eiglab::discretize(field, eps, n);
    const auto pair = eiglab::leading_eigenpair(op);
    Vector v(op.size());
    for (long long i = 0; i < op.size(); ++i)
        v(i) = pair.u(i) * std::exp(-field.lyapunov(op.point(i)) / (2.0 * eps));
    const auto gop = eiglab::discretize(gauge_model(field, eps), eps, n);
    const Vector r = gop.matrix * v - pair.lambda * v;
    return r.norm() / ((1.0 + std::abs(pair.lambda)) * v.norm());
}

} // namespace

TEST_CASE("discretize keeps constants exact and the M-matrix sign pattern") {
    const auto field = flat_circle(0.75);
    const auto op = eiglab::discretize(field, 1.0, 4);
    CHECK(op.size() == 4);
    CHECK(op.peclet == 0.0);
    CHECK_FALSE(op.fitted);
    CHECK(op.cell_weight == doctest::Approx(0.25));

    // cell centers of the 4-point grid
    CHECK(op.point(0)(0) == doctest::Approx(0.125));
    CHECK(op.point(3)(0) == doctest::Approx(0.875));

    const Vector ones = Vector::Constant(op.size(), 1.0);
    const Vector row_sums = op.matrix * ones;
    for (long long i = 0; i < op.size(); ++i)
        CHECK(row_sums(i) == doctest::Approx(0.75).epsilon(1e-14));

    for (int k = 0; k < op.matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, k); it; ++it)
            if (it.row() != it.col()) CHECK(it.value() <= 0.0);
}

TEST_CASE("flat circle eigenpair is the constant with lambda equal to the killing") {
    SUBCASE("zero killing has an exact kernel") {
        const auto op = eiglab::discretize(flat_circle(0.0), 1.0, 4);
        const auto pair = eiglab::leading_eigenpair(op);
        CHECK(std::abs(pair.lambda) <= 1e-12);
        CHECK(pair.u.minCoeff() > 0.0);
        CHECK(pair.u.maxCoeff() / pair.u.minCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant killing shifts the eigenvalue exactly") {
        const auto op = eiglab::discretize(flat_circle(0.75), 1.0, 4);
        const auto pair = eiglab::leading_eigenpair(op);
        CHECK(std::abs(pair.lambda - 0.75) <= 1e-12);
        CHECK(pair.residual <= eiglab::defaults::eigen_tol);
    }
    SUBCASE("norm against the grid measure") {
        const auto op = eiglab::discretize(flat_circle(0.3), 0.01, 64);
        const auto pair = eiglab::leading_eigenpair(op);
        CHECK(std::abs(pair.lambda - 0.3) <= 1e-12);
        CHECK(op.cell_weight * pair.u.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("sink-source circle with zero killing is exact in both schemes") {
    const auto field = eiglab::benchmark_field("circle_sink_source");
    SUBCASE("central regime") {
        const auto op = eiglab::discretize(field, 0.05, 64);
        CHECK_FALSE(op.fitted);
        const auto pair = eiglab::leading_eigenpair(op);
        CHECK(std::abs(pair.lambda) <= 1e-12);
        CHECK(pair.u.maxCoeff() / pair.u.minCoeff() == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("fitted regime stays exact on constants") {
        const auto op = eiglab::discretize(field, 1e-3, 64);
        CHECK(op.fitted);
        CHECK(op.peclet > 2.0);
        const auto pair = eiglab::leading_eigenpair(op);
        CHECK(std::abs(pair.lambda) <= 1e-12);
        CHECK(pair.u.maxCoeff() / pair.u.minCoeff() == doctest::Approx(1.0).epsilon(1e-10));
        for (int k = 0; k < op.matrix.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, k); it; ++it)
                if (it.row() != it.col()) CHECK(it.value() <= 0.0);
    }
}

TEST_CASE("killing shift moves the eigenvalue by exactly the shift") {
    eiglab::BenchmarkParams p;
    p.c_const = 0.2;
    p.c_cos1 = 0.4;
    const auto field1 = eiglab::benchmark_field("circle_sink_source", p);
    p.c_const = 0.2 + 0.37;
    const auto field2 = eiglab::benchmark_field("circle_sink_source", p);

    const auto op1 = eiglab::discretize(field1, 0.01, 128);
    const auto op2 = eiglab::discretize(field2, 0.01, 128);
    const auto pair1 = eiglab::leading_eigenpair(op1);
    const auto pair2 = eiglab::leading_eigenpair(op2);
    CHECK(std::abs((pair2.lambda - pair1.lambda) - 0.37) <= 1e-9);
    CHECK((pair1.u - pair2.u).lpNorm<Eigen::Infinity>() <= 1e-7);
}

TEST_CASE("grid refinement converges at second order in the central regime") {
    eiglab::BenchmarkParams p;
    p.c_const = 0.2;
    p.c_cos1 = 0.4;
    const auto field = eiglab::benchmark_field("circle_sink_source", p);
    const double eps = 1e-2;
    double lambda[3];
    int n = 64;
    for (int j = 0; j < 3; ++j, n *= 2) {
        const auto op = eiglab::discretize(field, eps, n);
        CHECK_FALSE(op.fitted);
        lambda[j] = eiglab::leading_eigenpair(op).lambda;
    }
    const double d1 = std::abs(lambda[0] - lambda[1]);
    const double d2 = std::abs(lambda[1] - lambda[2]);
    CHECK(d2 > 0.0);
    CHECK(d1 / d2 > 2.5);
    CHECK(d1 / d2 < 6.0);
}

TEST_CASE("adjoint operator has the same principal eigenvalue") {
    eiglab::BenchmarkParams p;
    p.c_const = 0.2;
    p.c_cos1 = 0.4;
    const auto field = eiglab::benchmark_field("circle_sink_source", p);
    const auto op = eiglab::discretize(field, 0.01, 128);
    auto opT = op;
    opT.matrix = Eigen::SparseMatrix<double>(op.matrix.transpose());
    const auto pair = eiglab::leading_eigenpair(op);
    const auto pairT = eiglab::leading_eigenpair(opT);
    CHECK(std::abs(pair.lambda - pairT.lambda) <= 1e-8);
    CHECK(pairT.u.minCoeff() > 0.0);
}

TEST_CASE("gauge identity holds at discretization order") {
    eiglab::BenchmarkParams p;
    p.c_const = 0.3;
    p.c_cos1 = 0.5;
    const auto field = eiglab::benchmark_field("torus_shear_cycles", p);
    const double r128 = gauge_residual(field, 1e-2, 128);
    const double r256 = gauge_residual(field, 1e-2, 256);
    CHECK(r256 <= 1e-2);
    CHECK(r128 / r256 > 2.5);
    CHECK(r128 / r256 < 6.0);
}

TEST_CASE("positivity guard rejects a sign-changing principal mode") {
    // 2x2 operator with eigenvalues -1 and 1; the minimal-real eigenvector
    // (2, -1) changes sign, so the solver must refuse it.
    eiglab::DiscreteOperator op;
    op.dim = 1;
    op.n = 2;
    op.epsilon = 1.0;
    op.cell_weight = 0.5;
    op.matrix.resize(2, 2);
    std::vector<Eigen::Triplet<double>> trips{{0, 1, 2.0}, {1, 0, 0.5}};
    op.matrix.setFromTriplets(trips.begin(), trips.end());
    CHECK_THROWS_AS(eiglab::leading_eigenpair(op), eiglab::ConstraintError);
}

TEST_CASE("discretize and eigenpair validation") {
    const auto field = eiglab::benchmark_field("circle_sink_source");
    CHECK_THROWS_AS(eiglab::discretize(field, 0.0, 64), eiglab::InvalidArgumentError);
    CHECK_THROWS_AS(eiglab::discretize(field, 0.01, 3), eiglab::InvalidArgumentError);
    CHECK_THROWS_AS(eiglab::discretize(eiglab::FieldModel{}, 0.01, 64),
                    eiglab::InvalidArgumentError);

    eiglab::DiscretizeOptions opts;
    opts.allow_fitting = false;
    try {
        eiglab::discretize(field, 1e-3, 64, opts);
        CHECK(false);
    } catch (const eiglab::InvalidArgumentError& e) {
        CHECK(std::string(e.what()).find("increase n") != std::string::npos);
    }

    const auto op = eiglab::discretize(field, 0.05, 64);
    CHECK_THROWS_AS(eiglab::leading_eigenpair(op, 0.0), eiglab::InvalidArgumentError);
    CHECK_THROWS_AS(eiglab::leading_eigenpair(op, 1e-10, 0), eiglab::InvalidArgumentError);

    eiglab::BenchmarkParams p;
    p.c_cos1 = 0.4;
    const auto hard = eiglab::benchmark_field("circle_sink_source", p);
    const auto hop = eiglab::discretize(hard, 0.01, 128);
    CHECK_THROWS_AS(eiglab::leading_eigenpair(hop, 1e-12, 1), eiglab::ConvergenceError);
}

TEST_CASE("component distance uses the periodic metric") {
    const auto circle = eiglab::benchmark_field("circle_sink_source");
    const auto& source = find_component(circle, "source");
    const auto& sink = find_component(circle, "sink");
    const std::array<double, 2> period = {1.0, 1.0};
    CHECK(eiglab::component_distance(source, v1(0.9), period, 1) == doctest::Approx(0.1));
    CHECK(eiglab::component_distance(sink, v1(0.1), period, 1) == doctest::Approx(0.4));

    const auto shear = eiglab::benchmark_field("torus_shear_cycles");
    const auto& stable = find_component(shear, "stable_cycle");
    CHECK(eiglab::component_distance(stable, v2(0.95, 0.3), period, 2) == doctest::Approx(0.05));
    CHECK(eiglab::component_distance(stable, v2(0.0, 0.77), period, 2) == doctest::Approx(0.0));
    // a cycle filling a 1-D manifold has no transverse direction
    CHECK(eiglab::component_distance(stable, v1(0.3), period, 1) == 0.0);

    const auto flow = eiglab::benchmark_field("torus_irrational_flow");
    CHECK(eiglab::component_distance(flow.components[0], v2(0.3, 0.8), period, 2) == 0.0);

    CHECK_THROWS_AS(eiglab::component_distance(stable, v1(0.3), period, 2),
                    eiglab::InvalidArgumentError);
}

TEST_CASE("default grid rule pins the resolution ladder") {
    CHECK(eiglab::default_grid_rule(1e-2) == 80);
    CHECK(eiglab::default_grid_rule(3e-3) == 148);
    CHECK(eiglab::default_grid_rule(1e-3) == 254);
    CHECK(eiglab::default_grid_rule(3e-4) == 462);
    CHECK(eiglab::default_grid_rule(1.0) == 64);
    CHECK(eiglab::default_grid_rule(1e-8) == 1024);
    CHECK_THROWS_AS(eiglab::default_grid_rule(0.0), eiglab::InvalidArgumentError);
}

TEST_CASE("weighted measure reduces to the squared eigenvector on flat Lyapunov") {
    eiglab::BenchmarkParams p;
    p.c_const = 0.3;
    const auto field = eiglab::benchmark_field("torus_irrational_flow", p);
    const auto op = eiglab::discretize(field, 0.01, 64);
    const auto pair = eiglab::leading_eigenpair(op);
    const auto gm = eiglab::weighted_measure(pair, op, field);

    const Vector direct = pair.u.array().square() / pair.u.squaredNorm();
    CHECK((gm.mass - direct).lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK(std::abs(gm.mass.sum() - 1.0) <= 1e-12);
    CHECK(gm.v_over_vmax.maxCoeff() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gm.v_over_vmax.minCoeff() >= 1.0 - 1e-10);
}

TEST_CASE("shear tube mass concentrates on the charged cycle") {
    eiglab::BenchmarkParams p;
    p.c_const = 0.3;
    p.c_cos1 = 0.5;
    const auto field = eiglab::benchmark_field("torus_shear_cycles", p);
    const double eps = 1e-3;
    const auto op = eiglab::discretize(field, eps, 254);
    const auto pair = eiglab::leading_eigenpair(op);
    const auto gm = eiglab::weighted_measure(pair, op, field);
    CHECK(std::abs(gm.mass.sum() - 1.0) <= 1e-12);

    const auto& unstable = find_component(field, "unstable_cycle");
    const auto& stable = find_component(field, "stable_cycle");
    const double radius = 5.0 * std::sqrt(eps);
    double tube = 0.0;
    double gamma_stable = 0.0;
    for (long long i = 0; i < op.size(); ++i) {
        const Vector x = op.point(i);
        if (eiglab::component_distance(unstable, x, op.period, 2) <= radius) tube += gm.mass(i);
        if (eiglab::component_distance(stable, x, op.period, 2) <=
            eiglab::defaults::tube_radius_factor * std::sqrt(eps))
            gamma_stable = std::max(gamma_stable, gm.v_over_vmax(i));
    }
    CHECK(tube >= 0.9);
    CHECK(gamma_stable < eiglab::defaults::charged_threshold);
}

TEST_CASE("study reports zero displacement when the maximum sits on a component") {
    SUBCASE("constant drift on the torus") {
        eiglab::BenchmarkParams p;
        p.c_const = 0.5;
        const auto field = eiglab::benchmark_field("torus_irrational_flow", p);
        const auto table = eiglab::convergence_study(field, {1e-2, 3e-3});
        REQUIRE(table.rows.size() == 2);
        CHECK(table.labels == std::vector<std::string>{"torus"});
        for (const auto& row : table.rows) {
            CHECK(row.dmax == 0.0);
            CHECK(row.lambda == doctest::Approx(0.5).epsilon(1e-10));
            CHECK(row.tube_mass[0] == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(row.gamma_hat[0] == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(std::isnan(table.d_slope));
    }
    SUBCASE("drift-free circle") {
        const auto table = eiglab::convergence_study(flat_circle(0.2), {1e-2, 3e-3});
        for (const auto& row : table.rows) {
            CHECK(row.dmax == 0.0);
            CHECK(row.lambda == doctest::Approx(0.2).epsilon(1e-12));
        }
        CHECK(std::isnan(table.d_slope));
    }
}

TEST_CASE("study validation rejects malformed epsilon lists") {
    const auto field = flat_circle(0.1);
    CHECK_THROWS_AS(eiglab::convergence_study(field, {}), eiglab::InvalidArgumentError);
    CHECK_THROWS_AS(eiglab::convergence_study(field, {1e-3, 1e-3}), eiglab::InvalidArgumentError);
    CHECK_THROWS_AS(eiglab::convergence_study(field, {1e-3, -1e-4}), eiglab::InvalidArgumentError);
    CHECK_THROWS_AS(eiglab::convergence_study(field, {1e-2, 1e-3}, nullptr),
                    eiglab::InvalidArgumentError);
}

TEST_CASE("maximum displacement follows the half-cell rule on the shear benchmark") {
    eiglab::BenchmarkParams p;
    p.c_const = 0.3;
    p.c_cos1 = 0.5;
    const auto field = eiglab::benchmark_field("torus_shear_cycles", p);
    const std::vector<double> eps = {1e-2, 3e-3, 1e-3};
    const auto table = eiglab::convergence_study(field, eps);
    REQUIRE(table.rows.size() == 3);

    // The charged cycle sits at x1 = 1/2, exactly between two cell centers,
    // so the measured displacement is half a cell at every resolution.
    for (const auto& row : table.rows)
        CHECK(row.dmax == doctest::Approx(0.5 / row.n).epsilon(1e-10));

    CHECK(table.d_slope > 0.45);
    CHECK(table.d_slope < 0.56);

    CHECK(std::abs(table.rows[2].lambda - (-0.2)) <= 0.05);
    const double d1 = std::abs(table.rows[1].lambda - table.rows[0].lambda);
    const double d2 = std::abs(table.rows[2].lambda - table.rows[1].lambda);
    CHECK(d2 < d1);

    const std::size_t iu = table.labels[0] == "unstable_cycle" ? 0 : 1;
    for (const auto& row : table.rows) {
        CHECK(row.gamma_hat[iu] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(row.tube_mass[iu] >= 0.99);
    }
    // The tubes of the two cycles overlap once 10 sqrt(eps) reaches half the
    // period, so the modulation contrast is only meaningful at the small end.
    CHECK(table.rows[2].gamma_hat[1 - iu] < eiglab::defaults::charged_threshold);
}

TEST_CASE("blowup extraction matches the Gaussian at a gradient point") {
    eiglab::BenchmarkParams p;
    p.c_const = 0.4;
    const auto field = eiglab::benchmark_field("torus_gradient_points", p);
    const auto op = eiglab::discretize(field, 1e-3, 254);
    const auto pair = eiglab::leading_eigenpair(op);
    CHECK(std::abs(pair.lambda - 0.4) <= 1e-10);

    const auto& source = find_component(field, "source_hh");
    const auto cmp = eiglab::blowup_extract(pair, op, field, source);
    CHECK(cmp.charged);
    CHECK(cmp.gamma_hat == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cmp.rel_l2 <= 0.1);
    REQUIRE(cmp.second_moment_ratio.size() == 2);
    for (const double ratio : cmp.second_moment_ratio) {
        CHECK(ratio > 0.9);
        CHECK(ratio < 1.1);
    }

    const auto& sink = find_component(field, "sink_00");
    const auto skipped = eiglab::blowup_extract(pair, op, field, sink);
    CHECK_FALSE(skipped.charged);
    CHECK(skipped.notice.find("sink_00") != std::string::npos);

    CHECK_THROWS_AS(eiglab::blowup_extract(pair, op, field, source, 0.0),
                    eiglab::InvalidArgumentError);
}

TEST_CASE("blowup extraction matches the transverse Gaussian on the charged shear cycle") {
    eiglab::BenchmarkParams p;
    p.c_const = 0.3;
    p.c_cos1 = 0.5;
    const auto field = eiglab::benchmark_field("torus_shear_cycles", p);
    const double eps = 3e-4;
    const auto op = eiglab::discretize(field, eps, eiglab::default_grid_rule(eps));
    const auto pair = eiglab::leading_eigenpair(op);

    const auto cmp = eiglab::blowup_extract(pair, op, field,
                                            find_component(field, "unstable_cycle"));
    CHECK(cmp.charged);
    REQUIRE(cmp.second_moment_ratio.size() == 1);
    CHECK(cmp.second_moment_ratio[0] > 0.9);
    CHECK(cmp.second_moment_ratio[0] < 1.1);
    CHECK(cmp.rel_l2 <= 0.25);

    const auto skipped = eiglab::blowup_extract(pair, op, field,
                                                find_component(field, "stable_cycle"));
    CHECK_FALSE(skipped.charged);
    CHECK_FALSE(skipped.notice.empty());
}

TEST_CASE("blowup on the irrational torus reproduces the transported density") {
    SUBCASE("single-mode killing") {
        eiglab::BenchmarkParams p;
        p.c_const = 2.0;
        p.c_cos1 = 1.0;
        const auto field = eiglab::benchmark_field("torus_irrational_flow", p);
        const auto op = eiglab::discretize(field, 1e-3, 128);
        CHECK(op.fitted);
        const auto pair = eiglab::leading_eigenpair(op);
        CHECK(std::abs(pair.lambda - 2.0) <= 0.05);

        const auto cmp = eiglab::blowup_extract(pair, op, field, field.components[0]);
        CHECK(cmp.charged);
        CHECK(cmp.rel_l2 <= 0.05);
        CHECK(cmp.second_moment_ratio.empty());
    }
    SUBCASE("constant killing gives the flat profile exactly") {
        eiglab::BenchmarkParams p;
        p.c_const = 2.0;
        const auto field = eiglab::benchmark_field("torus_irrational_flow", p);
        const auto op = eiglab::discretize(field, 1e-3, 64);
        const auto pair = eiglab::leading_eigenpair(op);
        const auto gm = eiglab::weighted_measure(pair, op, field);
        CHECK(gm.v_over_vmax.minCoeff() >= 1.0 - 1e-12);
        const auto cmp = eiglab::blowup_extract(pair, op, field, field.components[0]);
        CHECK(cmp.charged);
        CHECK(cmp.rel_l2 <= 1e-12);
    }
}
