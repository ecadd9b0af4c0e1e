#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "knotflow/config.hpp"
#include "knotflow/sobolev.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace knotflow;

// the harness passes the command-line binary as the trailing argument
static std::string g_cli;
static fs::path g_scratch;

int main(int argc, char** argv) {
    int dt_argc = argc;
    if (argc > 1 && fs::exists(argv[argc - 1])) {
        g_cli = argv[argc - 1];
        dt_argc = argc - 1;
    }
    g_scratch = fs::temp_directory_path() / "knotflow_test_config";
    fs::remove_all(g_scratch);
    fs::create_directories(g_scratch);
    doctest::Context ctx;
    ctx.applyCommandLine(dt_argc, argv);
    return ctx.run();
}

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = g_scratch / name;
    std::ofstream f(p);
    f << text;
    return p;
}

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args) {
    REQUIRE_FALSE(g_cli.empty());
    static int counter = 0;
    const fs::path so = g_scratch / ("stdout." + std::to_string(counter));
    const fs::path se = g_scratch / ("stderr." + std::to_string(counter));
    ++counter;
    const std::string cmd = "\"" + g_cli + "\" " + args + " > \"" + so.string() +
                            "\" 2> \"" + se.string() + "\"";
    const int rc = std::system(cmd.c_str());
    CliResult res;
    res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    res.out = slurp(so);
    res.err = slurp(se);
    return res;
}

int line_count(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

const char* kFullToml = R"cfg(# every section in one document
seed = 42

[energy]
family = "menger"
p = 3.1
q = 3.0
kappa = 1.5
epsilon = 0.05

[flow]
scheme = "minimizing_movement"
theta = 2.5
tau = 0.004
max_steps = 17
stop_grad_tol = 1e-6

[flow.inner]
max_iters = 55
tol = 2e-6
shrink = 0.4
armijo = 1e-3
max_backtracks = 12
stall_patience = 4

[flow.monitors]
bilip_floor_fraction = 0.2
speed_floor_fraction = 0.15

[norms]
penalty_s = 0.45  # inline comment after a value
penalty_rho = 2.5
ambient_s = 0.6
ambient_rho = 3.0

[io]
curve = "in/knot #5.json"
out_dir = "runs/a"
curve_stride = 3

[shape]
kind = "perturbed"
base = "ellipse"
mode = 5
amplitude = 0.02
phase = 0.25
semi_axis_a = 0.3
semi_axis_b = 0.2
nodes = 40
dim = 2

[gradcheck]
directions = 3
pairs = 11
h = 2e-5
tol_gradient = 5e-7
tol_pointwise = 2e-5

[sweep]
eps = [0.3, 0.15, 0.075]
)cfg";

void check_full_config(const RunConfig& cfg) {
    const auto* mp = std::get_if<MengerParams>(&cfg.energy.params);
    REQUIRE(mp != nullptr);
    CHECK(mp->p == 3.1);
    CHECK(mp->q == 3.0);
    CHECK(cfg.energy.kappa == 1.5);
    CHECK(cfg.energy.epsilon == 0.05);

    CHECK(cfg.flow.scheme == FlowScheme::minimizing_movement);
    CHECK(cfg.flow.theta == 2.5);
    CHECK(cfg.flow.tau == 0.004);
    CHECK(cfg.flow.max_steps == 17);
    CHECK(cfg.flow.stop_grad_tol == 1e-6);
    CHECK(cfg.flow.inner.max_iters == 55);
    CHECK(cfg.flow.inner.tol == 2e-6);
    CHECK(cfg.flow.inner.shrink == 0.4);
    CHECK(cfg.flow.inner.armijo == 1e-3);
    CHECK(cfg.flow.inner.max_backtracks == 12);
    CHECK(cfg.flow.inner.stall_patience == 4);
    CHECK(cfg.flow.monitors.bilip_floor_fraction == 0.2);
    CHECK(cfg.flow.monitors.speed_floor_fraction == 0.15);

    REQUIRE(cfg.norms.any());
    CHECK(*cfg.norms.penalty_s == 0.45);
    CHECK(*cfg.norms.penalty_rho == 2.5);
    CHECK(*cfg.norms.ambient_s == 0.6);
    CHECK(*cfg.norms.ambient_rho == 3.0);

    CHECK(cfg.io.curve == "in/knot #5.json");
    CHECK(cfg.io.out_dir == "runs/a");
    CHECK(cfg.io.curve_stride == 3);

    CHECK(cfg.shape.spec.kind == ShapeSpec::Kind::perturbed);
    CHECK(cfg.shape.spec.base == ShapeSpec::Kind::ellipse);
    CHECK(cfg.shape.spec.mode == 5);
    CHECK(cfg.shape.spec.amplitude == 0.02);
    CHECK(cfg.shape.spec.phase == 0.25);
    CHECK(cfg.shape.spec.semi_axis_a == 0.3);
    CHECK(cfg.shape.spec.semi_axis_b == 0.2);
    CHECK(cfg.shape.nodes == 40);
    CHECK(cfg.shape.dim == 2);

    CHECK(cfg.gradcheck.directions == 3);
    CHECK(cfg.gradcheck.pairs == 11);
    CHECK(cfg.gradcheck.h == 2e-5);
    CHECK(cfg.gradcheck.tol_gradient == 5e-7);
    CHECK(cfg.gradcheck.tol_pointwise == 2e-5);

    REQUIRE(cfg.eps_list.size() == 3);
    CHECK(cfg.eps_list[0] == 0.3);
    CHECK(cfg.eps_list[1] == 0.15);
    CHECK(cfg.eps_list[2] == 0.075);

    CHECK(cfg.seed == 42u);
}

} // namespace

TEST_CASE("a toml document binds every section of the run configuration") {
    check_full_config(run_config_from_toml_text(kFullToml));
}

TEST_CASE("an equivalent json document binds identically") {
    json doc;
    doc["seed"] = 42;
    doc["energy"] = {{"family", "menger"}, {"p", 3.1},       {"q", 3.0},
                     {"kappa", 1.5},       {"epsilon", 0.05}};
    doc["flow"] = {{"scheme", "minimizing_movement"},
                   {"theta", 2.5},
                   {"tau", 0.004},
                   {"max_steps", 17},
                   {"stop_grad_tol", 1e-6},
                   {"inner",
                    {{"max_iters", 55},
                     {"tol", 2e-6},
                     {"shrink", 0.4},
                     {"armijo", 1e-3},
                     {"max_backtracks", 12},
                     {"stall_patience", 4}}},
                   {"monitors", {{"bilip_floor_fraction", 0.2}, {"speed_floor_fraction", 0.15}}}};
    doc["norms"] = {{"penalty_s", 0.45},
                    {"penalty_rho", 2.5},
                    {"ambient_s", 0.6},
                    {"ambient_rho", 3.0}};
    doc["io"] = {{"curve", "in/knot #5.json"}, {"out_dir", "runs/a"}, {"curve_stride", 3}};
    doc["shape"] = {{"kind", "perturbed"},   {"base", "ellipse"}, {"mode", 5},
                    {"amplitude", 0.02},     {"phase", 0.25},     {"semi_axis_a", 0.3},
                    {"semi_axis_b", 0.2},    {"nodes", 40},       {"dim", 2}};
    doc["gradcheck"] = {{"directions", 3},
                        {"pairs", 11},
                        {"h", 2e-5},
                        {"tol_gradient", 5e-7},
                        {"tol_pointwise", 2e-5}};
    doc["sweep"] = {{"eps", {0.3, 0.15, 0.075}}};
    check_full_config(run_config_from_json_text(doc.dump()));
}

TEST_CASE("string values keep escapes and embedded comment characters") {
    const RunConfig cfg = run_config_from_toml_text(
        "[io]\ncurve = \"a\\\"b\\\\c\\td # not a comment\"\n");
    CHECK(cfg.io.curve == "a\"b\\c\td # not a comment");
}

TEST_CASE("parse and schema errors name the offending line or key") {
    auto parse = [](const std::string& text) { return run_config_from_toml_text(text); };

    CHECK_THROWS_WITH_AS(parse("alpha == 2\n"),
                         doctest::Contains("config parse error at line 1"), ValidationError);
    CHECK_THROWS_WITH_AS(parse("[energy]\n\nalpha = \n"),
                         doctest::Contains("at line 3"), ValidationError);
    CHECK_THROWS_WITH_AS(parse("[flow]\nxyz = 1\n"), "unknown config key 'flow.xyz'",
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse("[flow]\n[flow.inner]\nwarp = 2\n"),
                         "unknown config key 'flow.inner.warp'", ValidationError);
    CHECK_THROWS_WITH_AS(parse("[energy]\nfamily = \"spiral\"\n"),
                         "energy.family must be one of 'ohara', 'menger', 'tangent_point'",
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse("[flow]\nscheme = \"banana\"\n"),
                         "flow.scheme must be 'hilbert' or 'minimizing_movement'",
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse("[energy]\nalpha = \"two\"\n"),
                         "config key 'energy.alpha' must be a number", ValidationError);
    CHECK_THROWS_WITH_AS(parse("[shape]\nnodes = 2.5\n"),
                         "config key 'shape.nodes' must be an integer", ValidationError);
    CHECK_THROWS_WITH_AS(parse("[shape]\nkind = \"square\"\n"),
                         doctest::Contains("'circle', 'ellipse', 'torus_knot', 'perturbed'"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse("[io]\ncurve = 7\n"),
                         "config key 'io.curve' must be a string", ValidationError);
    CHECK_THROWS_WITH_AS(parse("[io]\ncurve_stride = 0\n"),
                         "config key 'io.curve_stride' must be >= 1", ValidationError);
    CHECK_THROWS_WITH_AS(parse("seed = -2\n"), "config key 'seed' must be nonnegative",
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse("x = 1\n[x]\ny = 2\n"), doctest::Contains("collides"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse("[sweep]\neps = 0.2\n"),
                         "config key 'sweep.eps' must be an array", ValidationError);
    CHECK_THROWS_WITH_AS(run_config_from_json_text("{ \"energy\": "),
                         doctest::Contains("config file is not valid JSON"), ValidationError);
}

TEST_CASE("flow windows reject boundary parameters with the violated inequality named") {
    RunConfig cfg; // defaults: ohara 2.5/1, kappa 2, epsilon 0.1, hilbert scheme
    CHECK_NOTHROW(cfg.validate_flow_windows());

    auto expect = [&](const char* msg) {
        CHECK_THROWS_WITH_AS(cfg.validate_flow_windows(), msg, ValidationError);
    };

    cfg.energy.params = OharaParams{-1.0, 1.0};
    expect("flow window requires alpha > 0");
    cfg.energy.params = OharaParams{2.5, 0.5};
    expect("flow window requires p >= 1");
    cfg.energy.params = OharaParams{2.0, 1.0}; // the definitional boundary alpha p = 2
    expect("flow window requires 2 < alpha p");
    cfg.energy.params = OharaParams{3.0, 1.0}; // alpha p = 2p + 1
    expect("flow window requires alpha p < 2p + 1");

    cfg.energy.params = MengerParams{3.2, 0.9};
    expect("flow window requires q > 1");
    cfg.energy.params = MengerParams{3.0, 3.0}; // p = 2q/3 + 1
    expect("flow window requires 2q/3 + 1 < p");
    cfg.energy.params = MengerParams{3.7, 3.0};
    expect("flow window requires p < q + 2/3");

    cfg.energy.params = TangentPointParams{4.0, 0.5};
    expect("flow window requires q > 1");
    cfg.energy.params = TangentPointParams{4.0, 2.0}; // p = q + 2
    expect("flow window requires q + 2 < p");
    cfg.energy.params = TangentPointParams{5.0, 2.0}; // p = 2q + 1
    expect("flow window requires p < 2q + 1");

    cfg.energy.params = OharaParams{2.5, 1.0};
    cfg.energy.epsilon = 0.0;
    expect("flow window requires epsilon > 0");
    cfg.energy.epsilon = 0.1;

    cfg.energy.kappa = 1.0;
    expect("flow window requires kappa > 1");
    cfg.flow.scheme = FlowScheme::minimizing_movement; // the implicit scheme allows kappa = 1
    CHECK_NOTHROW(cfg.validate_flow_windows());
}

TEST_CASE("norm overrides are applied and rechecked against the strain constraints") {
    RunConfig cfg; // ohara 2.5/1: derived s = (alpha p - 1) / (2p), rho = 2p
    const TotalEnergyConfig base = cfg.energy_config();
    CHECK(base.ambient_space.s == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(base.ambient_space.rho == 2.0);
    CHECK(base.hilbert());

    cfg.norms.ambient_rho = 2.5;
    const TotalEnergyConfig over = cfg.energy_config();
    CHECK(over.ambient_space.rho == 2.5);
    CHECK_FALSE(over.hilbert());

    cfg.norms.ambient_s = 0.95; // s + epsilon = 1.05
    CHECK_THROWS_WITH_AS(cfg.energy_config(), "total energy config requires s + epsilon < 1",
                         ValidationError);

    cfg.norms.ambient_s = 0.3;
    cfg.norms.ambient_rho = 2.0;
    cfg.energy.epsilon = 0.15; // (s + epsilon) rho = 0.9
    CHECK_THROWS_WITH_AS(cfg.energy_config(),
                         "total energy config requires (s + epsilon) * rho > 1",
                         ValidationError);

    cfg.norms.ambient_s = 1.2;
    CHECK_THROWS_WITH_AS(cfg.energy_config(), "norm spec requires 0 < s < 1", ValidationError);
}

namespace {

const char* kFlagshipToml = R"cfg(
[energy]
family = "ohara"
alpha = 2.0
p = 1.0
kappa = 2.0
epsilon = 0.1

[shape]
kind = "circle"
nodes = 512
)cfg";

std::string flow_toml(const std::string& out_dir, int max_steps,
                      const std::string& extra = "") {
    std::ostringstream ss;
    ss << "seed = 7\n"
       << "[energy]\nfamily = \"ohara\"\nalpha = 2.5\np = 1.0\nkappa = 2.0\nepsilon = 0.1\n"
       << "[flow]\nscheme = \"hilbert\"\ntheta = 2.0\ntau = 0.05\nmax_steps = " << max_steps
       << "\n" << extra << "[io]\nout_dir = \"" << out_dir << "\"\ncurve_stride = 3\n"
       << "[shape]\nkind = \"perturbed\"\nbase = \"circle\"\nmode = 3\namplitude = 0.1\n"
       << "phase = 0.8125\nnodes = 64\ndim = 2\n";
    return ss.str();
}

} // namespace

TEST_CASE("the energy subcommand evaluates the flagship circle") {
    const fs::path cfg = write_file("flagship.toml", kFlagshipToml);
    const CliResult res = run_cli("energy --config \"" + cfg.string() + "\"");
    REQUIRE(res.code == 0);
    const json out = json::parse(res.out);
    CHECK(out["family"] == "ohara");
    CHECK(double(out["value"]) == doctest::Approx(3.947582824925392).epsilon(1e-9));
    CHECK(out["n_terms"].get<long long>() == 512ll * 511ll);
    CHECK(out["excluded"].get<long long>() == 1590);
    CHECK(double(out["bilip"]) == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
    CHECK(double(out["length"]) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(double(out["penalty"]) >= 0.0);
    const double recombined = double(out["value"]) + double(out["penalty"]);
    CHECK(double(out["phi"]) == doctest::Approx(recombined).epsilon(1e-15));
}

TEST_CASE("the energy subcommand rejects malformed curve files with a parse location") {
    const fs::path cfg = write_file("flagship2.toml", kFlagshipToml);
    const fs::path bad = write_file("bad_curve.json", "{\"dim\": 2, \"nodes\": [[0,0],\n");
    const CliResult res =
        run_cli("energy --config \"" + cfg.string() + "\" --curve \"" + bad.string() + "\"");
    CHECK(res.code == 2);
    CHECK(res.err.find("curve file is not valid JSON") != std::string::npos);
    CHECK(res.err.find("parse error at line") != std::string::npos);
}

TEST_CASE("the flow subcommand enforces the strict window the energy subcommand does not") {
    const std::string text = std::string(kFlagshipToml) + "[io]\nout_dir = \"" +
                             (g_scratch / "strict_out").string() + "\"\n";
    const fs::path cfg = write_file("strict.toml", text);
    const CliResult ok = run_cli("energy --config \"" + cfg.string() + "\"");
    CHECK(ok.code == 0);
    const CliResult rejected = run_cli("flow --config \"" + cfg.string() + "\"");
    CHECK(rejected.code == 2);
    CHECK(rejected.err.find("flow window requires 2 < alpha p") != std::string::npos);
}

TEST_CASE("the flow subcommand writes trajectory, ledger, final curve, and summary") {
    const fs::path out = g_scratch / "flow_out";
    const fs::path cfg = write_file("flow8.toml", flow_toml(out.string(), 8));
    const CliResult res = run_cli("flow --config \"" + cfg.string() + "\"");
    REQUIRE(res.code == 0);

    REQUIRE(fs::exists(out / "trajectory.jsonl"));
    REQUIRE(fs::exists(out / "ledger.csv"));
    REQUIRE(fs::exists(out / "final_curve.json"));
    REQUIRE(fs::exists(out / "summary.json"));

    const json summary = json::parse(slurp(out / "summary.json"));
    CHECK(summary["status"] == "reached_max_steps");
    CHECK(summary["scheme"] == "hilbert_explicit");
    CHECK(int(summary["samples"]) == 9);
    CHECK(int(summary["steps_accepted"]) == 8);
    CHECK(double(summary["phi_end"]) < double(summary["phi_start"]));

    const std::string traj = slurp(out / "trajectory.jsonl");
    CHECK(line_count(traj) == 9);
    std::istringstream lines(traj);
    std::string line;
    int idx = 0;
    while (std::getline(lines, line)) {
        const json sample = json::parse(line);
        const bool want_curve = idx % 3 == 0 || idx == 8;
        CHECK(sample.contains("curve") == want_curve);
        ++idx;
    }

    const std::string ledger = slurp(out / "ledger.csv");
    CHECK(ledger.rfind("t_start,t_end,dphi,int_g_beta,int_speed_theta,residual\n", 0) == 0);
    CHECK(line_count(ledger) == 9); // header plus eight steps

    // reloading the final curve must reproduce the reported energy value
    const RunConfig parsed = parse_run_config(cfg.string());
    const ClosedCurve final_curve = read_curve_json((out / "final_curve.json").string());
    const double phi = total_energy(final_curve, parsed.energy_config());
    const double phi_end = double(summary["phi_end"]);
    CHECK(std::abs(phi - phi_end) <= 1e-12 * std::abs(phi_end));
}

TEST_CASE("flow outputs are deterministic and thread-count independent") {
    const fs::path out_a = g_scratch / "det_a";
    const fs::path out_b = g_scratch / "det_b";
    const fs::path out_c = g_scratch / "det_c";
    const fs::path cfg = write_file("flow_det.toml", flow_toml(out_a.string(), 6));
    REQUIRE(run_cli("flow --config \"" + cfg.string() + "\"").code == 0);
    REQUIRE(run_cli("flow --config \"" + cfg.string() + "\" --out \"" + out_b.string() + "\"")
                .code == 0);
    REQUIRE(run_cli("flow --config \"" + cfg.string() + "\" --out \"" + out_c.string() +
                    "\" --threads 3")
                .code == 0);
    for (const char* name : {"summary.json", "final_curve.json", "trajectory.jsonl",
                             "ledger.csv"}) {
        const std::string a = slurp(out_a / name);
        CHECK(a == slurp(out_b / name));
        CHECK(a == slurp(out_c / name));
    }
}

TEST_CASE("a zero-step flow emits exactly the initial sample") {
    const fs::path out = g_scratch / "flow_zero";
    const fs::path cfg = write_file("flow0.toml", flow_toml(out.string(), 0));
    const CliResult res = run_cli("flow --config \"" + cfg.string() + "\"");
    REQUIRE(res.code == 0);
    const json summary = json::parse(slurp(out / "summary.json"));
    CHECK(int(summary["samples"]) == 1);
    CHECK(int(summary["steps_accepted"]) == 0);
    CHECK(line_count(slurp(out / "trajectory.jsonl")) == 1);
}

TEST_CASE("inflated monitor floors trip immediately with partial outputs flushed") {
    const fs::path out = g_scratch / "flow_trip";
    const fs::path cfg = write_file(
        "flow_trip.toml",
        flow_toml(out.string(), 8, "[flow.monitors]\nbilip_floor_fraction = 10.0\n"));
    const CliResult res = run_cli("flow --config \"" + cfg.string() + "\"");
    CHECK(res.code == 4);
    REQUIRE(fs::exists(out / "summary.json"));
    const json summary = json::parse(slurp(out / "summary.json"));
    CHECK(summary["status"] == "monitor_tripped");
    CHECK(summary["message"].get<std::string>().find("floor") != std::string::npos);
    CHECK(fs::exists(out / "trajectory.jsonl"));
}

TEST_CASE("gradcheck passes on a smooth loop and flags coincident nodes") {
    const fs::path cfg = write_file("gradcheck.toml",
                                    "seed = 3\n"
                                    "[energy]\nfamily = \"ohara\"\nalpha = 2.5\np = 1.0\n"
                                    "[gradcheck]\ndirections = 4\npairs = 20\n"
                                    "[shape]\nkind = \"perturbed\"\nbase = \"circle\"\n"
                                    "mode = 3\namplitude = 0.1\nphase = 0.8125\n"
                                    "nodes = 96\ndim = 2\n");
    const CliResult res = run_cli("gradcheck --config \"" + cfg.string() + "\"");
    REQUIRE(res.code == 0);
    const json report = json::parse(res.out);
    CHECK(report["pass"] == true);
    CHECK(double(report["gradient"]["worst_rel_err"]) < 1e-7);
    CHECK(report["pointwise"]["pass"] == true);

    // a loop revisiting one of its nodes must be refused as a geometry error
    json curve;
    curve["dim"] = 2;
    auto& nodes = curve["nodes"];
    for (int k = 0; k < 32; ++k) {
        const double t = 2.0 * M_PI * k / 32.0;
        nodes.push_back({std::cos(t), std::sin(t)});
    }
    nodes[20] = nodes[5];
    const fs::path bad = write_file("pinched.json", curve.dump());
    const CliResult refused =
        run_cli("gradcheck --config \"" + cfg.string() + "\" --curve \"" + bad.string() + "\"");
    CHECK(refused.code == 3);
    CHECK(refused.err.find("closer than") != std::string::npos);
}

TEST_CASE("eps sweep validates its list and reports pairwise distances") {
    const fs::path out = g_scratch / "sweep_out";
    const fs::path cfg = write_file(
        "sweep.toml",
        "seed = 5\n"
        "[energy]\nfamily = \"ohara\"\nalpha = 2.5\np = 1.0\nkappa = 2.0\nepsilon = 0.2\n"
        "[flow]\nscheme = \"hilbert\"\ntheta = 2.0\ntau = 0.05\nmax_steps = 5\n"
        "[io]\nout_dir = \"" + out.string() + "\"\n"
        "[shape]\nkind = \"perturbed\"\nbase = \"circle\"\nmode = 3\namplitude = 0.1\n"
        "phase = 0.8125\nnodes = 48\ndim = 2\n"
        "[sweep]\neps = [0.2, 0.1]\n");

    const CliResult bad = run_cli("eps-sweep --config \"" + cfg.string() + "\" --eps \"\"");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("--eps must be a comma-separated list") != std::string::npos);

    const CliResult res = run_cli("eps-sweep --config \"" + cfg.string() + "\"");
    REQUIRE(res.code == 0);
    REQUIRE(fs::exists(out / "sweep_report.json"));
    const json report = json::parse(slurp(out / "sweep_report.json"));
    CHECK(report["phi_bound_ok"] == true);
    REQUIRE(report["entries"].size() == 2);
    CHECK(double(report["entries"][0]["eps"]) == 0.2);
    CHECK(double(report["entries"][1]["eps"]) == 0.1);
    REQUIRE(report["distances"].size() == 1);
    CHECK(double(report["distances"][0]["first_eps"]) == 0.2);
    CHECK(double(report["distances"][0]["second_eps"]) == 0.1);
    CHECK(fs::exists(out / "eps_0.2" / "summary.json"));
    CHECK(fs::exists(out / "eps_0.1" / "summary.json"));
}

TEST_CASE("generate writes the configured shape as a curve file") {
    const fs::path cfg = write_file("gen.toml",
                                    "[shape]\nkind = \"torus_knot\"\nknot_p = 2\nknot_q = 3\n"
                                    "nodes = 60\ndim = 3\n");
    const fs::path target = g_scratch / "gen" / "trefoil.json";
    const CliResult res =
        run_cli("generate --config \"" + cfg.string() + "\" --out \"" + target.string() + "\"");
    REQUIRE(res.code == 0);
    const json info = json::parse(res.out);
    CHECK(int(info["n"]) == 60);
    CHECK(int(info["dim"]) == 3);
    CHECK(double(info["length"]) > 0.0);
    REQUIRE(fs::exists(target));
    const ClosedCurve curve = read_curve_json(target.string());
    CHECK(curve.n() == 60);
    CHECK(curve.dim() == 3);
}

TEST_CASE("unknown subcommands and missing config files exit with the validation code") {
    CHECK(run_cli("warp").code == 2);
    CHECK(run_cli("energy --config /nonexistent/nowhere.toml").code == 2);
}
