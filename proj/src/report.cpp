#include "eiglab/report.hpp"

#include "eiglab/eigensolver.hpp"
#include "eiglab/errors.hpp"
#include "eiglab/oukernel.hpp"
#include "eiglab/pressure.hpp"
#include "eiglab/profiles.hpp"
#include "eiglab/ratefn.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace eiglab {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double tau = 2.0 * std::numbers::pi;

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string kind_name(RecurrentComponent::Kind kind) {
    switch (kind) {
    case RecurrentComponent::Kind::Point: return "point";
    case RecurrentComponent::Kind::Cycle: return "cycle";
    default: return "torus";
    }
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

ordered_json matrix_json(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

ordered_json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

LyapunovData component_lyapunov(const RecurrentComponent& comp, double pi_weight) {
    const Matrix Pi_s =
        pi_weight * Matrix::Identity(comp.split.stable_dim, comp.split.stable_dim);
    const Matrix Pi_u =
        pi_weight * Matrix::Identity(comp.split.unstable_dim, comp.split.unstable_dim);
    return build_lyapunov(comp.split, Pi_s, Pi_u);
}

std::vector<Vector> resolve_points(const TaskConfig& task, const FieldModel& field) {
    std::vector<Vector> pts;
    if (!task.points.empty()) {
        for (const auto& p : task.points) {
            if (static_cast<int>(p.size()) != field.dim)
                throw InvalidArgumentError(
                    "task point dimension does not match the field dimension");
            Vector v(static_cast<Eigen::Index>(p.size()));
            for (std::size_t d = 0; d < p.size(); ++d)
                v(static_cast<Eigen::Index>(d)) = p[d];
            pts.push_back(v);
        }
        return pts;
    }
    for (const auto& comp : field.components) pts.push_back(comp.anchor);
    return pts;
}

int grid_for(const TaskConfig& task, double epsilon) {
    return task.grid > 0 ? task.grid : default_grid_rule(epsilon);
}

std::vector<std::string> point_header(int dim, const std::vector<std::string>& tail) {
    std::vector<std::string> header = {"x1"};
    if (dim == 2) header.push_back("x2");
    header.insert(header.end(), tail.begin(), tail.end());
    return header;
}

// ---------------------------------------------------------------------------
// Commands.

void run_pressure(const RunConfig& cfg, ArtifactWriter& writer) {
    const auto comps = build_components(cfg.field);
    const auto rep = global_pressure(comps, task_convention(cfg.task));

    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const bool in_argmax = std::find(rep.argmax.begin(), rep.argmax.end(),
                                         static_cast<int>(i)) != rep.argmax.end();
        const bool in_eligible = std::find(rep.eligible.begin(), rep.eligible.end(),
                                           static_cast<int>(i)) != rep.eligible.end();
        rows.push_back({rep.labels[i], kind_name(comps[i].kind),
                        std::to_string(rep.dimensions[i]),
                        format_g17(component_killing_average(comps[i])),
                        format_g17(rep.stable_values[i]),
                        format_g17(rep.unstable_values[i]),
                        in_argmax ? "1" : "0", in_eligible ? "1" : "0"});
    }
    writer.write_csv("pressure.csv",
                     {"label", "kind", "dimension", "killing_average", "stable_value",
                      "unstable_value", "argmax", "eligible"},
                     rows);

    ordered_json doc;
    doc["convention"] = cfg.task.convention;
    doc["global_stable"] = rep.global_stable;
    doc["global_unstable"] = rep.global_unstable;
    doc["global"] = rep.global;
    ordered_json comps_doc = ordered_json::array();
    for (std::size_t i = 0; i < comps.size(); ++i) {
        ordered_json c;
        c["label"] = rep.labels[i];
        c["kind"] = kind_name(comps[i].kind);
        c["dimension"] = rep.dimensions[i];
        c["killing_average"] = component_killing_average(comps[i]);
        c["stable_value"] = rep.stable_values[i];
        c["unstable_value"] = rep.unstable_values[i];
        comps_doc.push_back(c);
    }
    doc["components"] = comps_doc;
    ordered_json argmax = ordered_json::array(), eligible = ordered_json::array();
    for (int i : rep.argmax) argmax.push_back(rep.labels[static_cast<std::size_t>(i)]);
    for (int i : rep.eligible) eligible.push_back(rep.labels[static_cast<std::size_t>(i)]);
    doc["argmax"] = argmax;
    doc["eligible"] = eligible;
    writer.write_json("pressure.json", doc.dump(2) + "\n");

    std::cout << "pressure: global = " << fmt6(rep.global) << " under the "
              << cfg.task.convention << " convention (stable = "
              << fmt6(rep.global_stable) << ", unstable = " << fmt6(rep.global_unstable)
              << "); eligible:";
    for (int i : rep.eligible) std::cout << " " << rep.labels[static_cast<std::size_t>(i)];
    std::cout << "\n";
}

void run_profile(const RunConfig& cfg, ArtifactWriter& writer) {
    const auto comps = build_components(cfg.field);
    const auto rep = global_pressure(comps, task_convention(cfg.task));

    std::vector<RecurrentComponent> eligible;
    std::vector<double> gammas;
    std::vector<BlowupProfile> profiles;
    for (int idx : rep.eligible) {
        const auto& comp = comps[static_cast<std::size_t>(idx)];
        eligible.push_back(comp);
        gammas.push_back(1.0);
        profiles.push_back(blowup_profile(comp, component_lyapunov(comp, cfg.task.pi_weight)));
    }
    const auto measure = assemble_limit_measure(eligible, gammas, profiles);

    ordered_json doc;
    doc["convention"] = cfg.task.convention;
    doc["global"] = rep.global;
    doc["pi_weight"] = cfg.task.pi_weight;
    doc["normalizer"] = measure.normalizer;
    ordered_json atoms = ordered_json::array();
    double weight_sum = 0.0;
    for (const auto& atom : measure.atoms) {
        ordered_json a;
        a["label"] = atom.component.label;
        a["kind"] = kind_name(atom.component.kind);
        a["gamma"] = atom.gamma;
        a["weight"] = atom.weight;
        a["lambda_profile"] = atom.profile.lambda_profile;
        a["transverse_exponent"] = matrix_json(atom.profile.S);
        a["longitudinal_squared_mass"] = atom.profile.longitudinal_squared_mass();
        atoms.push_back(a);
        weight_sum += atom.weight;
    }
    doc["atoms"] = atoms;
    doc["weight_sum"] = weight_sum;
    writer.write_json("profile.json", doc.dump(2) + "\n");

    for (const auto& atom : measure.atoms) {
        if (atom.component.kind == RecurrentComponent::Kind::Cycle) {
            const auto& d = atom.profile.cycle;
            std::vector<std::vector<std::string>> rows;
            const int n = d.grid_size();
            for (int j = 0; j < n; ++j) {
                const double theta = d.period * j / n;
                rows.push_back({format_g17(theta), format_g17(d.samples[static_cast<std::size_t>(j)]),
                                format_g17(d.c_samples[static_cast<std::size_t>(j)])});
            }
            writer.write_csv("density_" + atom.component.label + ".csv",
                             {"theta", "f", "c"}, rows);
        } else if (atom.component.kind == RecurrentComponent::Kind::Torus) {
            const auto& d = atom.profile.torus;
            const int n = d.grid_size();
            std::vector<std::vector<std::string>> rows;
            for (int j1 = 0; j1 < n; ++j1)
                for (int j2 = 0; j2 < n; ++j2)
                    rows.push_back({format_g17(static_cast<double>(j1) / n),
                                    format_g17(static_cast<double>(j2) / n),
                                    format_g17(d.samples(j1, j2))});
            writer.write_csv("density_" + atom.component.label + ".csv",
                             {"x1", "x2", "f"}, rows);
        }
    }

    std::cout << "profile: " << measure.atoms.size() << " atoms;";
    for (const auto& atom : measure.atoms)
        std::cout << " " << atom.component.label << " = " << fmt6(atom.weight);
    std::cout << "\n";
}

void append_blowup_json(ordered_json& list, const std::string& label,
                        const BlowupComparison& cmp) {
    ordered_json b;
    b["label"] = label;
    b["charged"] = cmp.charged;
    b["gamma_hat"] = cmp.gamma_hat;
    if (cmp.charged) {
        b["rel_l2"] = cmp.rel_l2;
        ordered_json ratios = ordered_json::array();
        for (double r : cmp.second_moment_ratio) ratios.push_back(r);
        b["second_moment_ratio"] = ratios;
    } else {
        b["notice"] = cmp.notice;
    }
    list.push_back(b);
}

void run_eigen(const RunConfig& cfg, ArtifactWriter& writer) {
    const auto field = build_field(cfg.field);
    const double eps = cfg.task.epsilons.front();
    const int n = grid_for(cfg.task, eps);
    const auto op = discretize(field, eps, n);
    const auto pair = leading_eigenpair(op, cfg.task.tolerance);
    const auto gm = weighted_measure(pair, op, field);

    ordered_json doc;
    doc["epsilon"] = eps;
    doc["n"] = op.n;
    doc["peclet"] = op.peclet;
    doc["fitted"] = op.fitted;
    doc["lambda"] = pair.lambda;
    doc["residual"] = pair.residual;
    doc["iterations"] = pair.iterations;
    doc["log_v_max"] = gm.log_v_max;
    ordered_json blowups = ordered_json::array();
    for (const auto& comp : field.components)
        append_blowup_json(blowups, comp.label,
                           blowup_extract(pair, op, field, comp, cfg.task.pi_weight));
    doc["components"] = blowups;
    writer.write_json("eigen.json", doc.dump(2) + "\n");

    std::vector<std::vector<std::string>> rows;
    for (long long i = 0; i < op.size(); ++i) {
        const Vector x = op.point(i);
        std::vector<std::string> row = {format_g17(x(0))};
        if (op.dim == 2) row.push_back(format_g17(x(1)));
        row.push_back(format_g17(pair.u(i)));
        row.push_back(format_g17(gm.v_over_vmax(i)));
        row.push_back(format_g17(gm.mass(i)));
        rows.push_back(row);
    }
    writer.write_csv("measure.csv", point_header(op.dim, {"u", "v_over_vmax", "mass"}),
                     rows);

    std::cout << "eigen: lambda = " << fmt6(pair.lambda) << ", residual = "
              << fmt6(pair.residual) << ", n = " << op.n << ", peclet = "
              << fmt6(op.peclet) << (op.fitted ? " (fitted)" : " (central)") << "\n";
}

void run_study(const RunConfig& cfg, ArtifactWriter& writer) {
    const auto field = build_field(cfg.field);
    std::function<int(double)> rule = default_grid_rule;
    if (cfg.task.grid > 0) rule = [n = cfg.task.grid](double) { return n; };
    const auto table = convergence_study(field, cfg.task.epsilons, rule, cfg.task.tolerance);

    std::vector<std::string> header = {"epsilon", "lambda", "dmax"};
    for (const auto& label : table.labels) header.push_back("mass_" + label);
    for (const auto& label : table.labels) header.push_back("gamma_" + label);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : table.rows) {
        std::vector<std::string> row = {format_g17(r.epsilon), format_g17(r.lambda),
                                        format_g17(r.dmax)};
        for (double m : r.tube_mass) row.push_back(format_g17(m));
        for (double g : r.gamma_hat) row.push_back(format_g17(g));
        rows.push_back(row);
    }
    writer.write_csv("study.csv", header, rows);

    ordered_json doc;
    ordered_json labels = ordered_json::array();
    for (const auto& label : table.labels) labels.push_back(label);
    doc["labels"] = labels;
    doc["d_slope"] = number_or_null(table.d_slope);
    ordered_json jrows = ordered_json::array();
    for (const auto& r : table.rows) {
        ordered_json jr;
        jr["epsilon"] = r.epsilon;
        jr["n"] = r.n;
        jr["lambda"] = r.lambda;
        jr["dmax"] = r.dmax;
        for (std::size_t i = 0; i < table.labels.size(); ++i) {
            jr["mass_" + table.labels[i]] = r.tube_mass[i];
            jr["gamma_" + table.labels[i]] = r.gamma_hat[i];
        }
        jrows.push_back(jr);
    }
    doc["rows"] = jrows;
    writer.write_json("study.json", doc.dump(2) + "\n");

    std::cout << "study: " << table.rows.size() << " epsilon values; displacement slope = "
              << fmt6(table.d_slope) << "\n";
}

void run_rate(const RunConfig& cfg, ArtifactWriter& writer) {
    const auto field = build_field(cfg.field);
    const auto points = resolve_points(cfg.task, field);
    const double T = cfg.task.horizon;

    std::vector<std::vector<std::string>> rows;
    ordered_json jrows = ordered_json::array();
    double max_gap = 0.0;
    for (const auto& x : points) {
        const auto shoot = extremal_shoot(field, x, T);
        const auto mini = action_minimize(field, x, T, cfg.task.minimize_nodes);
        const double scale = std::max({std::abs(shoot.action), std::abs(mini.action), 1e-12});
        const double gap = std::abs(shoot.action - mini.action) / scale;
        max_gap = std::max(max_gap, gap);

        std::vector<std::string> row = {format_g17(x(0))};
        if (field.dim == 2) row.push_back(format_g17(x(1)));
        row.insert(row.end(),
                   {format_g17(shoot.action), format_g17(mini.action), format_g17(gap),
                    format_g17(shoot.boundary_residual), format_g17(shoot.hamiltonian_drift),
                    format_g17(mini.grad_norm), mini.certified ? "1" : "0"});
        rows.push_back(row);

        ordered_json jr;
        jr["x"] = std::vector<double>(x.data(), x.data() + x.size());
        jr["action_shoot"] = shoot.action;
        jr["action_minimize"] = mini.action;
        jr["relative_gap"] = gap;
        jr["boundary_residual"] = shoot.boundary_residual;
        jr["hamiltonian_drift"] = shoot.hamiltonian_drift;
        jr["grad_norm"] = mini.grad_norm;
        jr["certified"] = mini.certified;
        jrows.push_back(jr);
    }
    writer.write_csv("rate.csv",
                     point_header(field.dim,
                                  {"action_shoot", "action_minimize", "relative_gap",
                                   "boundary_residual", "hamiltonian_drift", "grad_norm",
                                   "certified"}),
                     rows);
    ordered_json doc;
    doc["horizon"] = T;
    doc["minimize_nodes"] = cfg.task.minimize_nodes;
    doc["points"] = jrows;
    writer.write_json("rate.json", doc.dump(2) + "\n");

    std::cout << "rate: " << points.size() << " points; max relative gap = "
              << fmt6(max_gap) << "\n";
}

void run_mc(const RunConfig& cfg, ArtifactWriter& writer) {
    const auto field = build_field(cfg.field);
    const double eps = cfg.task.epsilons.front();
    const int n = grid_for(cfg.task, eps);
    const auto op = discretize(field, eps, n);
    const auto pair = leading_eigenpair(op, cfg.task.tolerance);
    const auto gm = weighted_measure(pair, op, field);
    const auto points = resolve_points(cfg.task, field);
    const auto payoff = [&](const Vector& p) {
        return grid_interpolate(op, gm.v_over_vmax, p);
    };

    std::vector<std::vector<std::string>> rows;
    ordered_json jrows = ordered_json::array();
    double max_z = 0.0;
    int threads_used = 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vector& x = points[i];
        const auto est = feynman_kac_mc(field, x, cfg.task.time, eps, cfg.task.paths,
                                        cfg.task.seed + i, payoff);
        const double reference = std::exp(-pair.lambda * cfg.task.time) * payoff(x);
        const double z = est.standard_error > 0.0
                             ? (est.estimate - reference) / est.standard_error
                             : 0.0;
        max_z = std::max(max_z, std::abs(z));
        threads_used = est.threads;

        std::vector<std::string> row = {format_g17(x(0))};
        if (field.dim == 2) row.push_back(format_g17(x(1)));
        row.insert(row.end(),
                   {format_g17(est.estimate), format_g17(est.standard_error),
                    format_g17(reference), format_g17(z), std::to_string(est.n_paths)});
        rows.push_back(row);

        ordered_json jr;
        jr["x"] = std::vector<double>(x.data(), x.data() + x.size());
        jr["estimate"] = est.estimate;
        jr["std_error"] = est.standard_error;
        jr["reference"] = reference;
        jr["z"] = z;
        jr["seed"] = est.seed;
        jrows.push_back(jr);
    }
    writer.write_csv("mc.csv",
                     point_header(field.dim,
                                  {"estimate", "std_error", "reference", "z", "paths"}),
                     rows);
    ordered_json doc;
    doc["epsilon"] = eps;
    doc["time"] = cfg.task.time;
    doc["lambda"] = pair.lambda;
    doc["n"] = op.n;
    doc["paths"] = cfg.task.paths;
    doc["seed"] = cfg.task.seed;
    doc["threads"] = threads_used;
    doc["points"] = jrows;
    writer.write_json("mc.json", doc.dump(2) + "\n");

    std::cout << "mc: " << points.size() << " points; max |z| = " << fmt6(max_z) << "\n";
}

void run_ou(const RunConfig& cfg, ArtifactWriter& writer) {
    const Matrix B = rows_to_matrix(cfg.task.matrix);
    const auto split = spectral_split(B);
    const Matrix Pi_s =
        cfg.task.pi_weight * Matrix::Identity(split.stable_dim, split.stable_dim);
    const Matrix Pi_u =
        cfg.task.pi_weight * Matrix::Identity(split.unstable_dim, split.unstable_dim);
    const auto lyap = build_lyapunov(split, Pi_s, Pi_u);
    const auto rep = asymptotics_suite(split, lyap, cfg.task.t_small, cfg.task.t_large);

    std::vector<std::vector<std::string>> rows;
    double max_small = 0.0, max_large = 0.0;
    for (const auto& [name, dev] : rep.small_time) {
        rows.push_back({"small_time", name, format_g17(dev)});
        max_small = std::max(max_small, dev);
    }
    for (const auto& [name, dev] : rep.large_time) {
        rows.push_back({"large_time", name, format_g17(dev)});
        max_large = std::max(max_large, dev);
    }
    rows.push_back({"limit", "det_product_deviation", format_g17(rep.det_product_deviation)});
    rows.push_back({"limit", "u_stable_min_eig", format_g17(rep.u_stable_min_eig)});
    rows.push_back({"limit", "u_unstable_max_eig", format_g17(rep.u_unstable_max_eig)});
    writer.write_csv("ou.csv", {"regime", "name", "deviation"}, rows);

    ordered_json doc;
    doc["matrix"] = matrix_json(B);
    doc["t_small"] = rep.t_small;
    doc["t_large"] = rep.t_large;
    ordered_json small = ordered_json::array(), large = ordered_json::array();
    for (const auto& [name, dev] : rep.small_time)
        small.push_back(ordered_json{{"name", name}, {"deviation", dev}});
    for (const auto& [name, dev] : rep.large_time)
        large.push_back(ordered_json{{"name", name}, {"deviation", dev}});
    doc["small_time"] = small;
    doc["large_time"] = large;
    doc["det_product_deviation"] = rep.det_product_deviation;
    doc["u_stable_min_eig"] = rep.u_stable_min_eig;
    doc["u_unstable_max_eig"] = rep.u_unstable_max_eig;
    writer.write_json("ou.json", doc.dump(2) + "\n");

    std::cout << "ou: max small-time deviation = " << fmt6(max_small)
              << ", max large-time deviation = " << fmt6(max_large) << "\n";
}

double extrapolate_intercept(const std::vector<double>& eps,
                             const std::vector<double>& lam) {
    const auto k = static_cast<double>(eps.size());
    if (eps.size() < 2) return lam.front();
    double se = 0.0, sl = 0.0, see = 0.0, sel = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        se += eps[i];
        sl += lam[i];
        see += eps[i] * eps[i];
        sel += eps[i] * lam[i];
    }
    const double denom = k * see - se * se;
    const double slope = (k * sel - se * sl) / denom;
    return (sl - slope * se) / k;
}

std::string convention_verdict(double lambda_star, double global_stable,
                               double global_unstable, double tol) {
    const bool s = std::abs(lambda_star - global_stable) <= tol;
    const bool u = std::abs(lambda_star - global_unstable) <= tol;
    if (s && u) return "both";
    if (s) return "stable";
    if (u) return "unstable";
    return "neither";
}

void run_discriminate(const RunConfig& cfg, ArtifactWriter& writer) {
    std::vector<std::vector<std::string>> rows;
    ordered_json jbench = ordered_json::array();
    for (const auto& name : cfg.task.benchmarks) {
        const auto field = benchmark_field(name, cfg.field.params);
        const auto rep = global_pressure(field.components, task_convention(cfg.task));

        std::vector<double> lambdas;
        ordered_json jlam = ordered_json::array();
        for (double eps : cfg.task.epsilons) {
            const int n = grid_for(cfg.task, eps);
            const auto op = discretize(field, eps, n);
            const auto pair = leading_eigenpair(op, cfg.task.tolerance);
            lambdas.push_back(pair.lambda);
            ordered_json jl;
            jl["epsilon"] = eps;
            jl["n"] = op.n;
            jl["lambda"] = pair.lambda;
            jlam.push_back(jl);
        }
        const double lambda_star = extrapolate_intercept(cfg.task.epsilons, lambdas);
        const double gap_s = std::abs(lambda_star - rep.global_stable);
        const double gap_u = std::abs(lambda_star - rep.global_unstable);
        const std::string verdict = convention_verdict(lambda_star, rep.global_stable,
                                                       rep.global_unstable,
                                                       cfg.task.match_tol);

        rows.push_back({name, format_g17(lambda_star), format_g17(rep.global_stable),
                        format_g17(rep.global_unstable), format_g17(gap_s),
                        format_g17(gap_u), verdict});
        ordered_json jb;
        jb["benchmark"] = name;
        jb["lambdas"] = jlam;
        jb["lambda_extrapolated"] = lambda_star;
        jb["global_stable"] = rep.global_stable;
        jb["global_unstable"] = rep.global_unstable;
        jb["gap_stable"] = gap_s;
        jb["gap_unstable"] = gap_u;
        jb["verdict"] = verdict;
        jbench.push_back(jb);

        std::cout << "discriminate " << name << ": verdict = " << verdict
                  << " (lambda* = " << fmt6(lambda_star) << ", stable = "
                  << fmt6(rep.global_stable) << ", unstable = "
                  << fmt6(rep.global_unstable) << ", tol = " << fmt6(cfg.task.match_tol)
                  << ")\n";
    }
    writer.write_csv("discriminate.csv",
                     {"benchmark", "lambda_extrapolated", "global_stable",
                      "global_unstable", "gap_stable", "gap_unstable", "verdict"},
                     rows);
    ordered_json doc;
    doc["match_tol"] = cfg.task.match_tol;
    doc["benchmarks"] = jbench;
    writer.write_json("discriminate.json", doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Property suite behind the check command.

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

Matrix random_stable(std::mt19937_64& rng, int dim) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix R(dim, dim);
    for (Eigen::Index i = 0; i < R.size(); ++i) R(i) = u(rng);
    return R - (spectral_norm(R) + 0.4) * Matrix::Identity(dim, dim);
}

Matrix random_hyperbolic(std::mt19937_64& rng, int sdim, int udim) {
    std::uniform_real_distribution<double> mag(0.3, 2.0), u(-1.0, 1.0);
    const int dim = sdim + udim;
    Matrix D = Matrix::Zero(dim, dim);
    for (int i = 0; i < sdim; ++i) D(i, i) = -mag(rng);
    for (int i = 0; i < udim; ++i) D(sdim + i, sdim + i) = mag(rng);
    Matrix R(dim, dim);
    for (Eigen::Index i = 0; i < R.size(); ++i) R(i) = u(rng);
    const Matrix Q = Eigen::HouseholderQR<Matrix>(R).householderQ();
    return Q * D * Q.transpose();
}

FieldModel flat_circle(double c0) {
    FieldModel field;
    field.manifold = FieldModel::Manifold::Circle;
    field.dim = 1;
    field.period = {1.0, 1.0};
    field.name = "flat_circle";
    field.drift = [](const Vector&) { return Vector::Zero(1); };
    field.rotation = [](const Vector&) { return Vector::Zero(1); };
    field.lyapunov = [](const Vector&) { return 0.0; };
    field.lyapunov_grad = [](const Vector&) { return Vector::Zero(1); };
    field.killing = [c0](const Vector&) { return c0; };
    return field;
}

RecurrentComponent check_point(const std::string& label, double b, double c) {
    ComponentSpec spec;
    spec.kind = RecurrentComponent::Kind::Point;
    spec.label = label;
    spec.anchor = Vector::Zero(1);
    spec.transverse_B = Matrix::Constant(1, 1, b);
    spec.point_c = c;
    return build_component(spec);
}

double blowup_value_1d(double drift, double c_minus_trA, double psi2, double S, double x,
                       double h) {
    auto w = [&](double t) { return std::exp(-S * t * t); };
    const double lap = (w(x + h) - 2.0 * w(x) + w(x - h)) / (h * h);
    const double grad = (w(x + h) - w(x - h)) / (2.0 * h);
    return (-lap + drift * x * grad + (c_minus_trA + psi2 * x * x) * w(x)) / w(x);
}

// Derivative of a periodic sample vector through its discrete Fourier series.
std::vector<double> spectral_derivative(const std::vector<double>& f, double period) {
    const int N = static_cast<int>(f.size());
    const int K = N / 2 - 1;
    std::vector<std::complex<double>> modes(static_cast<std::size_t>(2 * K + 1));
    for (int m = -K; m <= K; ++m) {
        std::complex<double> acc = 0.0;
        for (int j = 0; j < N; ++j) {
            const double phase = -tau * m * j / N;
            acc += f[static_cast<std::size_t>(j)]
                   * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        modes[static_cast<std::size_t>(m + K)] = acc / static_cast<double>(N);
    }
    std::vector<double> out(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        std::complex<double> acc = 0.0;
        for (int m = -K; m <= K; ++m) {
            const double phase = tau * m * j / N;
            acc += modes[static_cast<std::size_t>(m + K)]
                   * std::complex<double>(0.0, tau * m / period)
                   * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        out[static_cast<std::size_t>(j)] = acc.real();
    }
    return out;
}

CheckResult check_lyapunov_gramian(std::mt19937_64& rng) {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = 1 + static_cast<int>(rng() % 4);
        const Matrix B = random_stable(rng, dim);
        const Matrix M = infinite_gramian(B);
        const double res = (B * M + M * B.transpose() + Matrix::Identity(dim, dim)).norm()
                           / M.norm();
        worst = std::max(worst, res);
    }
    return {"lyapunov_gramian", worst <= 1e-10,
            "max residual " + fmt6(worst) + " over 20 random stable blocks"};
}

CheckResult check_special_lyapunov(std::mt19937_64& rng) {
    double worst_sign = 1.0;
    for (int trial = 0; trial < 12; ++trial) {
        const int sdim = 1 + static_cast<int>(rng() % 2);
        const int udim = 1 + static_cast<int>(rng() % 2);
        const auto split = spectral_split(random_hyperbolic(rng, sdim, udim));
        const Matrix Pi_s = 4.0 * Matrix::Identity(split.stable_dim, split.stable_dim);
        const Matrix Pi_u = 4.0 * Matrix::Identity(split.unstable_dim, split.unstable_dim);
        const auto lyap = build_lyapunov(split, Pi_s, Pi_u);
        const double a_s_max =
            Eigen::SelfAdjointEigenSolver<Matrix>(lyap.A_s).eigenvalues().maxCoeff();
        const double a_u_min =
            Eigen::SelfAdjointEigenSolver<Matrix>(lyap.A_u).eigenvalues().minCoeff();
        const double psi2_min =
            Eigen::SelfAdjointEigenSolver<Matrix>(lyap.psi2).eigenvalues().minCoeff();
        worst_sign = std::min({worst_sign, -a_s_max, a_u_min, psi2_min});
    }
    return {"special_lyapunov", worst_sign > 0.0,
            "definiteness margin " + fmt6(worst_sign) + " over 12 random splits"};
}

CheckResult check_ou_asymptotics() {
    Matrix B(2, 2);
    B << -1.0, 0.0, 0.0, 2.0;
    const auto split = spectral_split(B);
    const auto lyap = build_lyapunov(split, 4.0 * Matrix::Identity(1, 1),
                                     4.0 * Matrix::Identity(1, 1));
    const auto rep = asymptotics_suite(split, lyap, 1e-3, 50.0);
    double max_small = 0.0, max_large = 0.0;
    for (const auto& [name, dev] : rep.small_time) max_small = std::max(max_small, dev);
    for (const auto& [name, dev] : rep.large_time) max_large = std::max(max_large, dev);
    const bool pass = max_small <= 0.01 && max_large <= 1e-6
                      && rep.det_product_deviation <= 1e-8
                      && rep.u_stable_min_eig >= -1e-12 && rep.u_unstable_max_eig <= 1e-12;
    return {"ou_asymptotics", pass,
            "small-time " + fmt6(max_small) + ", large-time " + fmt6(max_large)};
}

CheckResult check_semigroup_identity() {
    double worst = 0.0;
    {
        const auto split = spectral_split(Matrix::Constant(1, 1, -1.0));
        const auto lyap = build_lyapunov(split, 4.0 * Matrix::Identity(1, 1), Matrix(0, 0));
        auto z = [](const Vector& y) { return std::exp(-0.5 * y[0] * y[0]); };
        std::vector<Vector> pts;
        for (double x : {-1.5, -0.75, 0.0, 0.6, 1.2}) pts.push_back(Vector::Constant(1, x));
        for (double t : {0.1, 1.0, 5.0}) {
            const auto vals = kolmogorov_apply(z, pts, split, lyap, t);
            const double factor = std::exp(t * split.stable_block.trace());
            for (std::size_t i = 0; i < pts.size(); ++i)
                worst = std::max(worst, std::abs(vals[i] / (factor * z(pts[i])) - 1.0));
        }
    }
    {
        Matrix Bs(2, 2);
        Bs << -1.0, 0.7, 0.0, -2.0;
        const auto split = spectral_split(Bs);
        const auto lyap = build_lyapunov(split, 4.0 * Matrix::Identity(2, 2), Matrix(0, 0));
        const Matrix Minv = infinite_gramian(split.stable_block).inverse();
        auto z = [&](const Vector& y) { return std::exp(-0.25 * y.dot(Minv * y)); };
        std::vector<Vector> pts;
        for (double a : {-0.8, 0.0, 0.8})
            for (double b : {-0.4, 0.4}) {
                Vector v(2);
                v << a, b;
                pts.push_back(v);
            }
        for (double t : {0.1, 1.0, 5.0}) {
            const auto vals = kolmogorov_apply(z, pts, split, lyap, t);
            const double factor = std::exp(t * split.stable_block.trace());
            for (std::size_t i = 0; i < pts.size(); ++i)
                worst = std::max(worst, std::abs(vals[i] / (factor * z(pts[i])) - 1.0));
        }
    }
    return {"semigroup_identity", worst <= 1e-6, "max relative deviation " + fmt6(worst)};
}

CheckResult check_blowup_rate() {
    double worst_rich = 0.0, worst_ratio = 0.0;
    struct Case {
        double B, Pi, c;
    };
    for (const Case& cs : {Case{-1.0, 4.0, 0.3}, Case{-1.0, 2.5, 0.3}, Case{2.0, 4.0, 0.45}}) {
        const auto comp = check_point("p", cs.B, cs.c);
        const Matrix Pi = cs.Pi * Matrix::Identity(1, 1);
        const auto lyap = build_lyapunov(comp.split,
                                         comp.split.stable_dim == 1 ? Pi : Matrix(0, 0),
                                         comp.split.unstable_dim == 1 ? Pi : Matrix(0, 0));
        const auto prof = blowup_profile(comp, lyap);
        const double A = lyap.A(0, 0);
        const double drift = cs.B - 2.0 * A;
        const double psi2 = lyap.psi2(0, 0);
        const double S = prof.S(0, 0);
        const double coarse = blowup_value_1d(drift, cs.c - A, psi2, S, 0.8, 0.04);
        const double fine = blowup_value_1d(drift, cs.c - A, psi2, S, 0.8, 0.02);
        const double ratio = std::abs(coarse - prof.lambda_profile)
                             / std::abs(fine - prof.lambda_profile);
        worst_ratio = std::max(worst_ratio, std::abs(ratio - 4.0));
        const double lam_h = blowup_value_1d(drift, cs.c - A, psi2, S, 0.0, 0.004);
        const double lam_h2 = blowup_value_1d(drift, cs.c - A, psi2, S, 0.0, 0.002);
        worst_rich = std::max(worst_rich,
                              std::abs((4.0 * lam_h2 - lam_h) / 3.0 - prof.lambda_profile));
    }
    return {"blowup_rate", worst_rich <= 1e-8 && worst_ratio <= 0.4,
            "Richardson gap " + fmt6(worst_rich) + ", order-2 ratio gap " + fmt6(worst_ratio)};
}

CheckResult check_cycle_density() {
    auto c = [](double theta) { return 1.0 + std::cos(tau * theta); };
    const auto d = cycle_density(c, 1.0, 1024);
    const double max_f = *std::max_element(d.samples.begin(), d.samples.end());
    // Differentiating log f keeps the oracle at the killing term's bandwidth,
    // so spectral roundoff stays far below the residual budget.
    std::vector<double> logf(d.samples.size());
    for (std::size_t j = 0; j < d.samples.size(); ++j) logf[j] = std::log(d.samples[j]);
    const auto dlog = spectral_derivative(logf, d.period);
    double residual = 0.0;
    for (std::size_t j = 0; j < d.samples.size(); ++j)
        residual = std::max(residual, std::abs((dlog[j] + d.c_samples[j] - d.mean_c)
                                               * d.samples[j]));
    const bool pass = std::abs(max_f - 1.0) <= 1e-12 && std::abs(d.mean_c - 1.0) <= 1e-12
                      && residual <= 1e-10;
    return {"cycle_density", pass,
            "max " + fmt6(max_f) + ", transport residual " + fmt6(residual)};
}

CheckResult check_torus_transport() {
    const int K = 64;
    Modes2d modes = Modes2d::Zero(2 * K + 1, 2 * K + 1);
    modes(K, K) = 2.0;
    modes(K + 1, K) = 0.5;
    modes(K - 1, K) = 0.5;
    const double golden = 1.618033988749894848;
    const auto d = torus_density(modes, 1.0, golden, K);
    const int N = d.grid_size();
    double residual = 0.0;
    std::vector<double> line(static_cast<std::size_t>(N));
    Matrix d1(N, N), d2(N, N);
    for (int fixed = 0; fixed < N; ++fixed) {
        for (int j = 0; j < N; ++j) line[static_cast<std::size_t>(j)] = d.samples(j, fixed);
        auto der = spectral_derivative(line, 1.0);
        for (int j = 0; j < N; ++j) d1(j, fixed) = der[static_cast<std::size_t>(j)];
        for (int j = 0; j < N; ++j) line[static_cast<std::size_t>(j)] = d.samples(fixed, j);
        der = spectral_derivative(line, 1.0);
        for (int j = 0; j < N; ++j) d2(fixed, j) = der[static_cast<std::size_t>(j)];
    }
    for (int j1 = 0; j1 < N; ++j1)
        for (int j2 = 0; j2 < N; ++j2) {
            const double cval = 2.0 + std::cos(tau * j1 / N);
            residual = std::max(residual,
                                std::abs(d.k1 * d1(j1, j2) + d.k2 * d2(j1, j2)
                                         + (cval - d.mu2) * d.samples(j1, j2)));
        }
    const bool pass = std::abs(d.mu2 - 2.0) <= 1e-13 && residual <= 1e-8;
    return {"torus_transport", pass,
            "mean " + fmt6(d.mu2) + ", transport residual " + fmt6(residual)};
}

CheckResult check_eigen_exactness() {
    double worst = 0.0;
    {
        const auto op = discretize(flat_circle(0.75), 1.0, 4);
        const auto pair = leading_eigenpair(op, 1e-12);
        worst = std::max(worst, std::abs(pair.lambda - 0.75) / 1e-12);
    }
    {
        const auto field = benchmark_field("circle_sink_source", {});
        const auto op = discretize(field, 0.05, 64);
        const auto pair = leading_eigenpair(op);
        worst = std::max(worst, std::abs(pair.lambda) / 1e-10);
        const double spread = pair.u.maxCoeff() - pair.u.minCoeff();
        worst = std::max(worst, spread / pair.u.maxCoeff() / 1e-10);
    }
    {
        BenchmarkParams lo, hi;
        lo.c_const = 0.2;
        lo.c_cos1 = 0.4;
        hi.c_const = 0.57;
        hi.c_cos1 = 0.4;
        const auto op_lo = discretize(benchmark_field("circle_sink_source", lo), 0.01, 64);
        const auto op_hi = discretize(benchmark_field("circle_sink_source", hi), 0.01, 64);
        const double l_lo = leading_eigenpair(op_lo).lambda;
        const double l_hi = leading_eigenpair(op_hi).lambda;
        worst = std::max(worst, std::abs(l_hi - l_lo - 0.37) / 1e-9);
    }
    return {"eigen_exactness", worst <= 1.0,
            "worst error at " + fmt6(worst) + " of its budget"};
}

CheckResult check_support_selection(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> cval(0.0, 3.0), gval(0.2, 1.0);
    const double golden = 1.618033988749894848;
    bool ok = true;
    double worst_sum = 0.0;
    for (int trial = 0; trial < 40 && ok; ++trial) {
        std::vector<RecurrentComponent> comps;
        const int m = 2 + static_cast<int>(rng() % 3);
        const bool force_tie = trial % 2 == 0;
        const double base = cval(rng);
        for (int i = 0; i < m; ++i) {
            const int kind = static_cast<int>(rng() % 3);
            ComponentSpec spec;
            spec.label = "c" + std::to_string(i);
            spec.truncation = 8;
            if (kind == 0) {
                spec.kind = RecurrentComponent::Kind::Point;
                spec.anchor = Vector::Zero(1);
                spec.transverse_B = Matrix::Constant(1, 1, -1.0);
                spec.point_c = force_tie ? base - 1.0 : cval(rng);
            } else if (kind == 1) {
                spec.kind = RecurrentComponent::Kind::Cycle;
                spec.anchor = Vector::Zero(2);
                spec.transverse_B = Matrix::Constant(1, 1, -1.0);
                spec.period_T = 1.0;
                const double v = force_tie ? base - 1.0 : cval(rng);
                spec.cycle_c = [v](double) { return v; };
            } else {
                spec.kind = RecurrentComponent::Kind::Torus;
                spec.anchor = Vector::Zero(2);
                spec.k1 = 1.0;
                spec.k2 = golden;
                const double v = force_tie ? base : cval(rng);
                spec.torus_c = [v](double, double) { return v; };
            }
            comps.push_back(build_component(spec));
        }
        const auto conv = trial % 3 == 0 ? Convention::Unstable : Convention::Stable;
        const auto rep = global_pressure(comps, conv);
        int max_dim = 0;
        for (int idx : rep.argmax)
            max_dim = std::max(max_dim, rep.dimensions[static_cast<std::size_t>(idx)]);
        std::vector<RecurrentComponent> eligible;
        std::vector<double> gammas;
        std::vector<BlowupProfile> profiles;
        for (int idx : rep.eligible) {
            const auto& comp = comps[static_cast<std::size_t>(idx)];
            if (comp.dimension() != max_dim) ok = false; // lower kind kept weight
            eligible.push_back(comp);
            gammas.push_back(gval(rng));
            profiles.push_back(blowup_profile(comp, component_lyapunov(comp, 4.0)));
        }
        const auto measure = assemble_limit_measure(eligible, gammas, profiles);
        double sum = 0.0;
        for (const auto& atom : measure.atoms) {
            sum += atom.weight;
            if (atom.component.dimension() != max_dim) ok = false;
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
    return {"support_selection", ok && worst_sum <= 1e-12,
            "max |weight sum - 1| = " + fmt6(worst_sum) + " over 40 ensembles"};
}

CheckResult check_rate_consistency() {
    const auto field = benchmark_field("circle_sink_source", {});
    const Vector x = Vector::Constant(1, 0.3);
    const double T = 0.25;
    const auto shoot = extremal_shoot(field, x, T);
    const auto mini = action_minimize(field, x, T, 64);
    const double scale = std::max({std::abs(shoot.action), std::abs(mini.action), 1e-12});
    const double gap = std::abs(shoot.action - mini.action) / scale;
    const bool pass = gap <= 1e-3 && shoot.hamiltonian_drift <= 1e-8 * T && mini.certified;
    return {"rate_consistency", pass,
            "relative gap " + fmt6(gap) + ", drift " + fmt6(shoot.hamiltonian_drift)};
}

CheckResult check_feynman_kac(std::uint64_t seed) {
    BenchmarkParams params;
    params.c_const = 0.3;
    params.c_cos1 = 0.2;
    const auto field = benchmark_field("circle_sink_source", params);
    const double eps = 0.05;
    const auto op = discretize(field, eps, 64);
    const auto pair = leading_eigenpair(op);
    const auto gm = weighted_measure(pair, op, field);
    const auto payoff = [&](const Vector& p) {
        return grid_interpolate(op, gm.v_over_vmax, p);
    };
    const Vector x = Vector::Constant(1, 0.25);
    const double t = 0.2;
    const auto est = feynman_kac_mc(field, x, t, eps, 4000, seed, payoff);
    const auto repeat = feynman_kac_mc(field, x, t, eps, 4000, seed, payoff);
    const double reference = std::exp(-pair.lambda * t) * payoff(x);
    const double z = est.standard_error > 0.0
                         ? std::abs(est.estimate - reference) / est.standard_error
                         : 0.0;
    const bool pass = z <= 5.0 && est.estimate == repeat.estimate;
    return {"feynman_kac", pass, "|z| = " + fmt6(z) + ", repeat run identical"};
}

CheckResult check_field_catalog() {
    for (const char* name : {"circle_sink_source", "torus_shear_cycles",
                             "torus_irrational_flow", "torus_gradient_points"})
        validate_field(benchmark_field(name, {}));
    return {"field_catalog", true, "all four catalog fields validate on a 128 grid"};
}

int run_check(const RunConfig& cfg, ArtifactWriter& writer) {
    std::mt19937_64 rng(cfg.task.seed);
    std::vector<CheckResult> results;
    const auto guard = [&](const std::function<CheckResult()>& fn, const char* name) {
        try {
            results.push_back(fn());
        } catch (const std::exception& e) {
            results.push_back({name, false, std::string("exception: ") + e.what()});
        }
    };
    guard([&] { return check_lyapunov_gramian(rng); }, "lyapunov_gramian");
    guard([&] { return check_special_lyapunov(rng); }, "special_lyapunov");
    guard([] { return check_ou_asymptotics(); }, "ou_asymptotics");
    guard([] { return check_semigroup_identity(); }, "semigroup_identity");
    guard([] { return check_blowup_rate(); }, "blowup_rate");
    guard([] { return check_cycle_density(); }, "cycle_density");
    guard([] { return check_torus_transport(); }, "torus_transport");
    guard([] { return check_eigen_exactness(); }, "eigen_exactness");
    guard([&] { return check_support_selection(rng); }, "support_selection");
    guard([] { return check_rate_consistency(); }, "rate_consistency");
    guard([&] { return check_feynman_kac(cfg.task.seed); }, "feynman_kac");
    guard([] { return check_field_catalog(); }, "field_catalog");

    bool all = true;
    ordered_json jresults = ordered_json::array();
    for (const auto& r : results) {
        all = all && r.pass;
        std::cout << "check " << r.name << ": " << (r.pass ? "pass" : "FAIL") << " ("
                  << r.detail << ")\n";
        ordered_json jr;
        jr["name"] = r.name;
        jr["pass"] = r.pass;
        jr["detail"] = r.detail;
        jresults.push_back(jr);
    }
    ordered_json doc;
    doc["seed"] = cfg.task.seed;
    doc["passed"] = all;
    doc["results"] = jresults;
    writer.write_json("check.json", doc.dump(2) + "\n");
    std::cout << "check: " << (all ? "all " : "FAILURES among ") << results.size()
              << " properties" << (all ? " passed" : "") << "\n";
    return all ? 0 : 1;
}

} // namespace

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string content_hash_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int resolve_threads() {
    if (const char* env = std::getenv("EIGLAB_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

ArtifactWriter::ArtifactWriter(std::string directory, bool csv_enabled, bool json_enabled)
    : directory_(std::move(directory)), csv_enabled_(csv_enabled),
      json_enabled_(json_enabled) {
    std::error_code ec;
    fs::create_directories(directory_, ec);
    if (ec) throw IoError("cannot create output directory '" + directory_ + "': "
                          + ec.message());
}

void ArtifactWriter::write_text(const std::string& name, const std::string& content) {
    const fs::path path = fs::path(directory_) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    entries_.push_back({name, content.size(), content_hash_hex(content)});
}

void ArtifactWriter::write_csv(const std::string& name,
                               const std::vector<std::string>& header,
                               const std::vector<std::vector<std::string>>& rows) {
    if (!csv_enabled_) return;
    std::string content;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j > 0) content += ',';
        content += header[j];
    }
    content += '\n';
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0) content += ',';
            content += row[j];
        }
        content += '\n';
    }
    write_text(name, content);
}

void ArtifactWriter::write_json(const std::string& name, const std::string& content) {
    if (!json_enabled_) return;
    write_text(name, content);
}

void ArtifactWriter::write_manifest(const std::string& command,
                                    const std::string& config_path,
                                    const std::string& config_hash, std::uint64_t seed,
                                    int threads) {
    ordered_json doc;
    doc["tool"] = tool_name;
    doc["version"] = tool_version;
    doc["command"] = command;
    doc["config_path"] = config_path;
    doc["config_hash"] = config_hash;
    doc["seed"] = seed;
    doc["threads"] = threads;
    ordered_json outputs = ordered_json::array();
    for (const auto& e : entries_) {
        ordered_json o;
        o["name"] = e.name;
        o["bytes"] = e.bytes;
        o["hash"] = e.hash;
        outputs.push_back(o);
    }
    doc["outputs"] = outputs;
    const std::string content = doc.dump(2) + "\n";
    const fs::path path = fs::path(directory_) / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"pressure", "profile", "eigen",
                                                   "study",    "rate",    "mc",
                                                   "ou",       "discriminate", "check"};
    return names;
}

int run_task(const std::string& command, const RunConfig& config,
             const std::string& config_path) {
    const std::string effective = serialize_config(config);
    const int threads = resolve_threads();
    std::unique_ptr<ArtifactWriter> writer;
    int code = 0;
    try {
        writer = std::make_unique<ArtifactWriter>(config.output.directory,
                                                  config.output.csv, config.output.json);
        writer->write_text("config.json", effective);
        if (command == "pressure") run_pressure(config, *writer);
        else if (command == "profile") run_profile(config, *writer);
        else if (command == "eigen") run_eigen(config, *writer);
        else if (command == "study") run_study(config, *writer);
        else if (command == "rate") run_rate(config, *writer);
        else if (command == "mc") run_mc(config, *writer);
        else if (command == "ou") run_ou(config, *writer);
        else if (command == "discriminate") run_discriminate(config, *writer);
        else if (command == "check") code = run_check(config, *writer);
        else {
            std::string names;
            for (const auto& n : command_names()) names += (names.empty() ? "" : ", ") + n;
            throw ConfigError("unknown command '" + command + "'; commands: " + names);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        code = 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = 1;
    }
    if (writer) {
        try {
            writer->write_manifest(command, config_path, content_hash_hex(effective),
                                   config.task.seed, threads);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            if (code == 0) code = 1;
        }
    }
    return code;
}

} // namespace eiglab
