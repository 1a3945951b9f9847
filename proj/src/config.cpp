#include "eiglab/config.hpp"

#include "eiglab/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace eiglab {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names = {
        "circle_sink_source", "torus_shear_cycles", "torus_irrational_flow",
        "torus_gradient_points"};
    return names;
}

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ", ";
        out += items[i];
    }
    return out;
}

std::string path_of(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

int edit_distance(const std::string& a, const std::string& b) {
    const std::size_t m = a.size(), n = b.size();
    std::vector<int> row(n + 1);
    for (std::size_t j = 0; j <= n; ++j) row[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= m; ++i) {
        int diag = row[0];
        row[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= n; ++j) {
            const int sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            diag = row[j];
            row[j] = std::min({row[j - 1] + 1, row[j] + 1, sub});
        }
    }
    return row[n];
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& allowed) {
    std::string best;
    int best_d = 4; // suggest only reasonably close names
    for (const auto& cand : allowed) {
        const int d = edit_distance(key, cand);
        if (d < best_d) {
            best_d = d;
            best = cand;
        }
    }
    return best;
}

void check_keys(const ordered_json& obj, const std::string& prefix,
                const std::vector<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) != allowed.end()) continue;
        std::string msg = "unknown key '" + path_of(prefix, it.key()) + "'";
        const std::string hint = nearest_key(it.key(), allowed);
        if (!hint.empty())
            msg += "; did you mean '" + hint + "'?";
        else
            msg += "; allowed keys: " + join(allowed);
        fail(msg);
    }
}

double as_number(const ordered_json& v, const std::string& path) {
    if (!v.is_number()) fail("key '" + path + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail("key '" + path + "' must be finite");
    return x;
}

void get_number(const ordered_json& obj, const std::string& prefix, const char* key,
                double& target) {
    if (obj.contains(key)) target = as_number(obj.at(key), path_of(prefix, key));
}

void get_integer(const ordered_json& obj, const std::string& prefix, const char* key,
                 long long& target) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail("key '" + path_of(prefix, key) + "' must be an integer");
    target = v.get<long long>();
}

void get_int(const ordered_json& obj, const std::string& prefix, const char* key,
             int& target) {
    long long wide = target;
    get_integer(obj, prefix, key, wide);
    target = static_cast<int>(wide);
}

void get_seed(const ordered_json& obj, const std::string& prefix, const char* key,
              std::uint64_t& target) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        fail("key '" + path_of(prefix, key) + "' must be a nonnegative integer");
    target = v.get<std::uint64_t>();
}

void get_string(const ordered_json& obj, const std::string& prefix, const char* key,
                std::string& target) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail("key '" + path_of(prefix, key) + "' must be a string");
    target = v.get<std::string>();
}

void get_bool(const ordered_json& obj, const std::string& prefix, const char* key,
              bool& target) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail("key '" + path_of(prefix, key) + "' must be a boolean");
    target = v.get<bool>();
}

std::vector<double> as_number_list(const ordered_json& v, const std::string& path) {
    if (!v.is_array()) fail("key '" + path + "' must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

void get_number_list(const ordered_json& obj, const std::string& prefix, const char* key,
                     std::vector<double>& target) {
    if (obj.contains(key)) target = as_number_list(obj.at(key), path_of(prefix, key));
}

void get_point_list(const ordered_json& obj, const std::string& prefix, const char* key,
                    std::vector<std::vector<double>>& target) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string path = path_of(prefix, key);
    if (!v.is_array()) fail("key '" + path + "' must be an array of coordinate arrays");
    target.clear();
    for (std::size_t i = 0; i < v.size(); ++i)
        target.push_back(as_number_list(v[i], path + "[" + std::to_string(i) + "]"));
}

void get_string_list(const ordered_json& obj, const std::string& prefix, const char* key,
                     std::vector<std::string>& target) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string path = path_of(prefix, key);
    if (!v.is_array()) fail("key '" + path + "' must be an array of strings");
    target.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string())
            fail("key '" + path + "[" + std::to_string(i) + "]' must be a string");
        target.push_back(v[i].get<std::string>());
    }
}

std::array<double, 2> as_pair(const ordered_json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2)
        fail("key '" + path + "' must be a [re, im] pair");
    return {as_number(v[0], path + "[0]"), as_number(v[1], path + "[1]")};
}

ComponentConfig parse_component(const ordered_json& obj, const std::string& prefix) {
    if (!obj.is_object()) fail("key '" + prefix + "' must be an object");
    static const std::vector<std::string> all = {
        "kind",       "label",  "anchor",      "transverse_b", "truncation", "c",
        "period",     "cycle_modes", "k1",     "k2",           "torus_modes"};
    check_keys(obj, prefix, all);

    ComponentConfig cc;
    get_string(obj, prefix, "kind", cc.kind);
    get_string(obj, prefix, "label", cc.label);
    if (cc.kind != "point" && cc.kind != "cycle" && cc.kind != "torus")
        fail("key '" + path_of(prefix, "kind") +
             "' must be one of: point, cycle, torus");
    if (cc.label.empty()) fail("key '" + path_of(prefix, "label") + "' is required");

    std::vector<std::string> scoped = {"kind", "label", "anchor", "transverse_b",
                                       "truncation"};
    if (cc.kind == "point") scoped.push_back("c");
    if (cc.kind == "cycle") {
        scoped.push_back("period");
        scoped.push_back("cycle_modes");
    }
    if (cc.kind == "torus") {
        scoped.push_back("k1");
        scoped.push_back("k2");
        scoped.push_back("torus_modes");
    }
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (std::find(scoped.begin(), scoped.end(), it.key()) == scoped.end())
            fail("key '" + path_of(prefix, it.key()) + "' does not apply to kind '" +
                 cc.kind + "'");

    get_number_list(obj, prefix, "anchor", cc.anchor);
    get_point_list(obj, prefix, "transverse_b", cc.transverse_b);
    get_int(obj, prefix, "truncation", cc.truncation);
    get_number(obj, prefix, "c", cc.c);
    get_number(obj, prefix, "period", cc.period);
    get_number(obj, prefix, "k1", cc.k1);
    get_number(obj, prefix, "k2", cc.k2);
    if (obj.contains("cycle_modes")) {
        const auto& v = obj.at("cycle_modes");
        const std::string path = path_of(prefix, "cycle_modes");
        if (!v.is_array() || v.empty() || v.size() % 2 == 0)
            fail("key '" + path + "' must be an odd-length array of [re, im] pairs");
        for (std::size_t i = 0; i < v.size(); ++i)
            cc.cycle_modes.push_back(as_pair(v[i], path + "[" + std::to_string(i) + "]"));
    }
    if (obj.contains("torus_modes")) {
        const auto& v = obj.at("torus_modes");
        const std::string path = path_of(prefix, "torus_modes");
        if (!v.is_array() || v.empty() || v.size() % 2 == 0)
            fail("key '" + path + "' must be an odd-size square table of [re, im] pairs");
        for (std::size_t i = 0; i < v.size(); ++i) {
            const auto& row = v[i];
            const std::string rpath = path + "[" + std::to_string(i) + "]";
            if (!row.is_array() || row.size() != v.size())
                fail("key '" + rpath + "' must be a row of the same odd size");
            std::vector<std::array<double, 2>> out_row;
            for (std::size_t j = 0; j < row.size(); ++j)
                out_row.push_back(as_pair(row[j], rpath + "[" + std::to_string(j) + "]"));
            cc.torus_modes.push_back(out_row);
        }
    }
    if (cc.kind == "cycle") {
        if (cc.period <= 0.0)
            fail("component '" + cc.label + "': cycles need a positive 'period'");
        if (cc.cycle_modes.empty())
            fail("component '" + cc.label + "': cycles need 'cycle_modes'");
    }
    if (cc.kind == "torus" && cc.torus_modes.empty())
        fail("component '" + cc.label + "': tori need 'torus_modes'");
    if (cc.truncation < 1)
        fail("component '" + cc.label + "': 'truncation' must be at least 1");
    return cc;
}

void parse_field(const ordered_json& obj, FieldConfig& field) {
    if (!obj.is_object()) fail("key 'field' must be an object");
    check_keys(obj, "field",
               {"catalog", "c_const", "c_cos1", "c_cos2", "k1", "k2", "truncation",
                "components"});
    const bool has_catalog = obj.contains("catalog");
    const bool has_components = obj.contains("components");
    if (has_catalog && has_components)
        fail("'field.catalog' and 'field.components' are mutually exclusive");
    if (has_catalog) get_string(obj, "field", "catalog", field.catalog);
    get_number(obj, "field", "c_const", field.params.c_const);
    get_number(obj, "field", "c_cos1", field.params.c_cos1);
    get_number(obj, "field", "c_cos2", field.params.c_cos2);
    get_number(obj, "field", "k1", field.params.k1);
    get_number(obj, "field", "k2", field.params.k2);
    get_int(obj, "field", "truncation", field.params.truncation);
    if (has_components) {
        field.catalog.clear();
        const auto& list = obj.at("components");
        if (!list.is_array() || list.empty())
            fail("key 'field.components' must be a nonempty array");
        for (std::size_t i = 0; i < list.size(); ++i)
            field.components.push_back(
                parse_component(list[i], "field.components[" + std::to_string(i) + "]"));
    }
}

void parse_task(const ordered_json& obj, TaskConfig& task) {
    if (!obj.is_object()) fail("key 'task' must be an object");
    const std::string p = "task";
    check_keys(obj, p,
               {"epsilons", "grid", "tolerance", "seed", "pi_weight", "convention",
                "time", "horizon", "paths", "minimize_nodes", "points", "matrix",
                "t_small", "t_large", "benchmarks", "match_tol"});
    get_number_list(obj, p, "epsilons", task.epsilons);
    get_int(obj, p, "grid", task.grid);
    get_number(obj, p, "tolerance", task.tolerance);
    get_seed(obj, p, "seed", task.seed);
    get_number(obj, p, "pi_weight", task.pi_weight);
    get_string(obj, p, "convention", task.convention);
    get_number(obj, p, "time", task.time);
    get_number(obj, p, "horizon", task.horizon);
    long long paths = task.paths;
    get_integer(obj, p, "paths", paths);
    task.paths = paths;
    get_int(obj, p, "minimize_nodes", task.minimize_nodes);
    get_point_list(obj, p, "points", task.points);
    get_point_list(obj, p, "matrix", task.matrix);
    get_number(obj, p, "t_small", task.t_small);
    get_number(obj, p, "t_large", task.t_large);
    get_string_list(obj, p, "benchmarks", task.benchmarks);
    get_number(obj, p, "match_tol", task.match_tol);
}

void parse_output(const ordered_json& obj, OutputConfig& output) {
    if (!obj.is_object()) fail("key 'output' must be an object");
    check_keys(obj, "output", {"directory", "csv", "json"});
    get_string(obj, "output", "directory", output.directory);
    get_bool(obj, "output", "csv", output.csv);
    get_bool(obj, "output", "json", output.json);
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows, const std::string& what) {
    if (rows.empty()) return Matrix(0, 0);
    const std::size_t n_cols = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != n_cols) fail(what + " must be rectangular");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_cols));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < n_cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

Modes1d to_modes_1d(const std::vector<std::array<double, 2>>& pairs) {
    Modes1d modes(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        modes[i] = std::complex<double>(pairs[i][0], pairs[i][1]);
    return modes;
}

Modes2d to_modes_2d(const std::vector<std::vector<std::array<double, 2>>>& table) {
    const auto n = static_cast<Eigen::Index>(table.size());
    Modes2d modes(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            modes(i, j) = std::complex<double>(table[static_cast<std::size_t>(i)]
                                                    [static_cast<std::size_t>(j)][0],
                                               table[static_cast<std::size_t>(i)]
                                                    [static_cast<std::size_t>(j)][1]);
    return modes;
}

RecurrentComponent build_explicit(const ComponentConfig& cc) {
    ComponentSpec spec;
    spec.label = cc.label;
    spec.truncation = cc.truncation;
    spec.anchor = Vector::Zero(static_cast<Eigen::Index>(cc.anchor.size()));
    for (std::size_t i = 0; i < cc.anchor.size(); ++i)
        spec.anchor(static_cast<Eigen::Index>(i)) = cc.anchor[i];
    spec.transverse_B = to_matrix(cc.transverse_b,
                                  "component '" + cc.label + "': 'transverse_b'");
    if (spec.transverse_B.size() > 0 && spec.transverse_B.rows() != spec.transverse_B.cols())
        fail("component '" + cc.label + "': 'transverse_b' must be square");
    if (cc.kind == "point") {
        spec.kind = RecurrentComponent::Kind::Point;
        spec.point_c = cc.c;
    } else if (cc.kind == "cycle") {
        spec.kind = RecurrentComponent::Kind::Cycle;
        spec.period_T = cc.period;
        const Modes1d modes = to_modes_1d(cc.cycle_modes);
        const double period = cc.period;
        spec.cycle_c = [modes, period](double theta) {
            return fourier_eval_1d(modes, period, theta);
        };
        spec.truncation =
            std::max(cc.truncation, static_cast<int>(cc.cycle_modes.size() / 2));
    } else {
        spec.kind = RecurrentComponent::Kind::Torus;
        spec.k1 = cc.k1;
        spec.k2 = cc.k2;
        const Modes2d modes = to_modes_2d(cc.torus_modes);
        spec.torus_c = [modes](double t1, double t2) {
            return fourier_eval_2d(modes, t1, t2);
        };
        spec.truncation =
            std::max(cc.truncation, static_cast<int>(cc.torus_modes.size() / 2));
    }
    try {
        return build_component(spec);
    } catch (const Error& e) {
        fail("component '" + cc.label + "': " + e.what());
    }
}

void validate(const RunConfig& cfg) {
    const FieldConfig& field = cfg.field;
    if (!field.catalog.empty()) {
        const auto& names = catalog_names();
        if (std::find(names.begin(), names.end(), field.catalog) == names.end())
            fail("unknown catalog '" + field.catalog + "'; known catalogs: " + join(names));
    } else if (field.components.empty()) {
        fail("the field section needs either 'catalog' or 'components'");
    }
    if (field.params.truncation < 1) fail("'field.truncation' must be at least 1");

    const TaskConfig& task = cfg.task;
    if (task.epsilons.empty()) fail("'task.epsilons' must be nonempty");
    for (double e : task.epsilons)
        if (!(e > 0.0)) fail("'task.epsilons' entries must be positive");
    for (std::size_t i = 1; i < task.epsilons.size(); ++i)
        if (task.epsilons[i] >= task.epsilons[i - 1])
            fail("'task.epsilons' must be strictly decreasing");
    if (task.grid != 0 && (task.grid < 4 || task.grid > 4096))
        fail("'task.grid' must be 0 (resolution rule) or between 4 and 4096");
    if (!(task.tolerance > 0.0)) fail("'task.tolerance' must be positive");
    if (!(task.pi_weight > 2.0))
        fail("'task.pi_weight' must exceed 2 so the weights dominate twice the identity");
    if (task.convention != "stable" && task.convention != "unstable")
        fail("'task.convention' must be 'stable' or 'unstable'");
    if (!(task.time > 0.0)) fail("'task.time' must be positive");
    if (!(task.horizon > 0.0)) fail("'task.horizon' must be positive");
    if (task.paths < 1) fail("'task.paths' must be at least 1");
    if (task.minimize_nodes < 2) fail("'task.minimize_nodes' must be at least 2");
    for (std::size_t i = 0; i < task.points.size(); ++i)
        if (task.points[i].empty() || task.points[i].size() > 2)
            fail("'task.points[" + std::to_string(i) + "]' must have one or two coordinates");
    if (!task.matrix.empty()) {
        const Matrix m = to_matrix(task.matrix, "'task.matrix'");
        if (m.rows() != m.cols()) fail("'task.matrix' must be square");
        try {
            spectral_split(m);
        } catch (const Error& e) {
            fail(std::string("'task.matrix': ") + e.what());
        }
    }
    if (!(task.t_small > 0.0)) fail("'task.t_small' must be positive");
    if (!(task.t_large > task.t_small))
        fail("'task.t_large' must exceed 'task.t_small'");
    if (task.benchmarks.empty()) fail("'task.benchmarks' must be nonempty");
    for (const auto& b : task.benchmarks) {
        const auto& names = catalog_names();
        if (std::find(names.begin(), names.end(), b) == names.end())
            fail("unknown benchmark '" + b + "'; known catalogs: " + join(names));
    }
    if (!(task.match_tol > 0.0)) fail("'task.match_tol' must be positive");

    if (cfg.output.directory.empty()) fail("'output.directory' must be nonempty");

    // Surface field problems (bad frequencies, non-hyperbolic blocks) now.
    if (!field.catalog.empty()) {
        try {
            benchmark_field(field.catalog, field.params);
        } catch (const Error& e) {
            fail("field '" + field.catalog + "': " + e.what());
        }
    } else {
        for (const auto& cc : field.components) build_explicit(cc);
    }
}

ordered_json pair_json(const std::array<double, 2>& p) {
    return ordered_json::array({p[0], p[1]});
}

} // namespace

RunConfig parse_config(const std::string& text) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) fail("config root must be an object");
    check_keys(root, "", {"field", "task", "output"});
    RunConfig cfg;
    if (root.contains("field")) parse_field(root.at("field"), cfg.field);
    if (root.contains("task")) parse_task(root.at("task"), cfg.task);
    if (root.contains("output")) parse_output(root.at("output"), cfg.output);
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot read config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const RunConfig& cfg) {
    ordered_json root;
    ordered_json field;
    if (!cfg.field.catalog.empty()) field["catalog"] = cfg.field.catalog;
    field["c_const"] = cfg.field.params.c_const;
    field["c_cos1"] = cfg.field.params.c_cos1;
    field["c_cos2"] = cfg.field.params.c_cos2;
    field["k1"] = cfg.field.params.k1;
    field["k2"] = cfg.field.params.k2;
    field["truncation"] = cfg.field.params.truncation;
    if (!cfg.field.components.empty()) {
        ordered_json list = ordered_json::array();
        for (const auto& cc : cfg.field.components) {
            ordered_json c;
            c["kind"] = cc.kind;
            c["label"] = cc.label;
            c["anchor"] = cc.anchor;
            c["transverse_b"] = cc.transverse_b;
            c["truncation"] = cc.truncation;
            if (cc.kind == "point") c["c"] = cc.c;
            if (cc.kind == "cycle") {
                c["period"] = cc.period;
                ordered_json modes = ordered_json::array();
                for (const auto& m : cc.cycle_modes) modes.push_back(pair_json(m));
                c["cycle_modes"] = modes;
            }
            if (cc.kind == "torus") {
                c["k1"] = cc.k1;
                c["k2"] = cc.k2;
                ordered_json table = ordered_json::array();
                for (const auto& row : cc.torus_modes) {
                    ordered_json r = ordered_json::array();
                    for (const auto& m : row) r.push_back(pair_json(m));
                    table.push_back(r);
                }
                c["torus_modes"] = table;
            }
            list.push_back(c);
        }
        field["components"] = list;
    }
    root["field"] = field;

    ordered_json task;
    task["epsilons"] = cfg.task.epsilons;
    task["grid"] = cfg.task.grid;
    task["tolerance"] = cfg.task.tolerance;
    task["seed"] = cfg.task.seed;
    task["pi_weight"] = cfg.task.pi_weight;
    task["convention"] = cfg.task.convention;
    task["time"] = cfg.task.time;
    task["horizon"] = cfg.task.horizon;
    task["paths"] = cfg.task.paths;
    task["minimize_nodes"] = cfg.task.minimize_nodes;
    task["points"] = cfg.task.points;
    task["matrix"] = cfg.task.matrix;
    task["t_small"] = cfg.task.t_small;
    task["t_large"] = cfg.task.t_large;
    task["benchmarks"] = cfg.task.benchmarks;
    task["match_tol"] = cfg.task.match_tol;
    root["task"] = task;

    ordered_json output;
    output["directory"] = cfg.output.directory;
    output["csv"] = cfg.output.csv;
    output["json"] = cfg.output.json;
    root["output"] = output;

    return root.dump(2) + "\n";
}

std::vector<RecurrentComponent> build_components(const FieldConfig& field) {
    if (!field.catalog.empty()) return benchmark_field(field.catalog, field.params).components;
    std::vector<RecurrentComponent> comps;
    comps.reserve(field.components.size());
    for (const auto& cc : field.components) comps.push_back(build_explicit(cc));
    return comps;
}

FieldModel build_field(const FieldConfig& field) {
    if (field.catalog.empty())
        fail("this command integrates the drift, which explicit component lists do not "
             "carry; set 'field.catalog'");
    return benchmark_field(field.catalog, field.params);
}

Convention task_convention(const TaskConfig& task) {
    return task.convention == "unstable" ? Convention::Unstable : Convention::Stable;
}

} // namespace eiglab
