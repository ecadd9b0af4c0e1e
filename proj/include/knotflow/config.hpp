#pragma once

// Run configuration for the command-line driver: a TOML file (JSON accepted
// as a fallback for generated configs) selecting the energy family, the flow
// settings, optional norm overrides, io paths, and the seed feeding every
// generated perturbation or shape.

#include <optional>
#include <string>
#include <vector>

#include "knotflow/flow.hpp"

namespace knotflow {

struct EnergySection {
    AnyEnergyParams params{OharaParams{2.5, 1.0}};
    double kappa = 2.0;
    double epsilon = 0.1;
};

// Diagnostic overrides for the derived penalty and ambient spaces. The
// defaults computed by TotalEnergyConfig::make are the theory-matched
// choices; overriding them is for sensitivity experiments only.
struct NormOverrides {
    std::optional<double> penalty_s;
    std::optional<double> penalty_rho;
    std::optional<double> ambient_s;
    std::optional<double> ambient_rho;

    bool any() const { return penalty_s || penalty_rho || ambient_s || ambient_rho; }
};

struct IoSection {
    std::string curve;           // input curve path; empty means "use [shape]"
    std::string out_dir = "out"; // directory for flow and sweep outputs
    int curve_stride = 10;       // inline the curve every k-th trajectory sample
};

struct ShapeSection {
    ShapeSpec spec;
    int nodes = 128;
    int dim = 2;
};

struct GradcheckSection {
    int directions = 8;   // smooth random directions per gradient suite
    int pairs = 40;       // random (i, j) pairs for the pointwise suite
    double h = 1e-5;      // base step for the Richardson difference pair
    double tol_gradient = 1e-7;
    double tol_pointwise = 1e-5;
};

struct RunConfig {
    EnergySection energy;
    FlowConfig flow;
    NormOverrides norms;
    IoSection io;
    ShapeSection shape;
    GradcheckSection gradcheck;
    std::vector<double> eps_list{0.2, 0.1, 0.05};
    unsigned seed = 1;

    // Assembles the total-energy configuration, applying norm overrides and
    // re-checking the coupled inequalities they may break.
    TotalEnergyConfig energy_config() const; // throws ValidationError

    // The flow subcommands additionally pin the parameters to the windows
    // under which the continuous flow theory operates; plain energy
    // evaluation only needs the energies to be defined. Each violation is
    // reported by quoting the offended inequality.
    void validate_flow_windows() const; // throws ValidationError
};

// Parses a config file. Content starting with '{' (or a .json extension) is
// read as JSON; everything else as TOML. Parse errors carry the location.
RunConfig parse_run_config(const std::string& path); // throws ValidationError
RunConfig run_config_from_toml_text(const std::string& text);
RunConfig run_config_from_json_text(const std::string& text);

} // namespace knotflow
