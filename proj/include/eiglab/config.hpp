#pragma once

#include "eiglab/eigensolver.hpp"
#include "eiglab/model.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace eiglab {

// Serializable description of one explicit recurrent component. Complex
// Fourier coefficients are stored as [re, im] pairs indexed m = -K..K.
struct ComponentConfig {
    std::string kind;   // "point", "cycle", or "torus"
    std::string label;
    std::vector<double> anchor;
    std::vector<std::vector<double>> transverse_b; // row-major, may be empty
    double c = 0.0;                                // point killing value
    double period = 0.0;                           // cycle period
    std::vector<std::array<double, 2>> cycle_modes;
    double k1 = 1.0;
    double k2 = 1.618033988749894848;
    std::vector<std::vector<std::array<double, 2>>> torus_modes;
    int truncation = defaults::fourier_truncation;
};

// Drift field description: either a catalog name with killing-term parameters
// or an explicit component list (which carries no drift, so it only supports
// the pressure and profile commands).
struct FieldConfig {
    std::string catalog = "torus_shear_cycles";
    BenchmarkParams params;
    std::vector<ComponentConfig> components;
};

struct TaskConfig {
    std::vector<double> epsilons{1e-2, 3e-3, 1e-3};
    int grid = 0; // 0 selects the resolution rule, otherwise cells per axis
    double tolerance = defaults::eigen_tol;
    std::uint64_t seed = 1;
    double pi_weight = 4.0;
    std::string convention = "stable";
    double time = 0.5;     // diffusion horizon for the Monte Carlo command
    double horizon = 0.25; // action horizon for the rate command
    long long paths = 100000;
    int minimize_nodes = 128;
    std::vector<std::vector<double>> points; // empty: component anchors
    std::vector<std::vector<double>> matrix{{-1.0, 0.0}, {0.0, 1.0}};
    double t_small = 1e-3;
    double t_large = 50.0;
    std::vector<std::string> benchmarks{"circle_sink_source", "torus_shear_cycles",
                                        "torus_gradient_points"};
    double match_tol = 0.1;
};

struct OutputConfig {
    std::string directory = "out";
    bool csv = true;
    bool json = true;
};

struct RunConfig {
    FieldConfig field;
    TaskConfig task;
    OutputConfig output;
};

// Parses and validates the JSON text of a run configuration. Unknown keys are
// rejected with their full path and a nearest-key suggestion; all numeric
// ranges are checked and explicit components are built once to surface
// hyperbolicity or Fourier problems at load time.
RunConfig parse_config(const std::string& text);

// Reads and parses a configuration file.
RunConfig load_config(const std::string& path);

// Emits every key explicitly, so parse(serialize(parse(text))) reproduces the
// same values and the same bytes.
std::string serialize_config(const RunConfig& config);

// Recurrent components described by the field section (catalog or explicit).
std::vector<RecurrentComponent> build_components(const FieldConfig& field);

// Full drift field; only catalog entries carry one.
FieldModel build_field(const FieldConfig& field);

// Convention named by the task section ("stable" or "unstable").
Convention task_convention(const TaskConfig& task);

} // namespace eiglab
