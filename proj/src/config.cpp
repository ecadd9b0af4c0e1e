#include "knotflow/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>

#include <json.hpp>

#include "knotflow/errors.hpp"

namespace knotflow {
namespace {

using nlohmann::json;

[[noreturn]] void toml_fail(int line, const std::string& what) {
    throw ValidationError("config parse error at line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\'))
            in_string = !in_string;
        else if (c == '#' && !in_string)
            return line.substr(0, i);
    }
    return line;
}

json parse_toml_value(const std::string& raw, int line);

std::vector<std::string> split_array_items(const std::string& body, int line) {
    std::vector<std::string> parts;
    int depth = 0;
    bool in_string = false;
    std::string cur;
    for (size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_string = !in_string;
        if (!in_string) {
            if (c == '[') ++depth;
            if (c == ']') --depth;
            if (c == ',' && depth == 0) {
                parts.push_back(cur);
                cur.clear();
                continue;
            }
        }
        cur += c;
    }
    if (in_string || depth != 0) toml_fail(line, "unbalanced array or string");
    if (!trim(cur).empty()) parts.push_back(cur);
    return parts;
}

json parse_toml_value(const std::string& raw, int line) {
    const std::string v = trim(raw);
    if (v.empty()) toml_fail(line, "missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') toml_fail(line, "unterminated string");
        std::string out;
        for (size_t i = 1; i + 1 < v.size(); ++i) {
            const char c = v[i];
            if (c == '\\') {
                if (i + 2 >= v.size()) toml_fail(line, "dangling escape");
                const char n = v[++i];
                if (n == 'n')
                    out += '\n';
                else if (n == 't')
                    out += '\t';
                else if (n == '"')
                    out += '"';
                else if (n == '\\')
                    out += '\\';
                else
                    toml_fail(line, "unsupported escape");
            } else {
                out += c;
            }
        }
        return json(out);
    }
    if (v == "true") return json(true);
    if (v == "false") return json(false);
    if (v.front() == '[') {
        if (v.back() != ']') toml_fail(line, "unterminated array");
        json arr = json::array();
        for (const std::string& part : split_array_items(v.substr(1, v.size() - 2), line))
            arr.push_back(parse_toml_value(part, line));
        return arr;
    }
    errno = 0;
    char* end = nullptr;
    const double num = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(num))
        toml_fail(line, "cannot parse value '" + v + "'");
    if (v.find_first_of(".eE") == std::string::npos)
        return json(static_cast<long long>(num));
    return json(num);
}

json toml_to_json(const std::string& text) {
    json root = json::object();
    json* current = &root;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') toml_fail(lineno, "malformed section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            current = &root;
            std::istringstream dotted(name);
            std::string part;
            bool seen = false;
            while (std::getline(dotted, part, '.')) {
                part = trim(part);
                if (part.empty()) toml_fail(lineno, "empty section name");
                seen = true;
                json& next = (*current)[part];
                if (next.is_null()) next = json::object();
                if (!next.is_object()) toml_fail(lineno, "section name collides with a key");
                current = &next;
            }
            if (!seen) toml_fail(lineno, "empty section name");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) toml_fail(lineno, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) toml_fail(lineno, "empty key");
        (*current)[key] = parse_toml_value(line.substr(eq + 1), lineno);
    }
    return root;
}

std::string joined(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
}

void expect_keys(const json& obj, const std::string& section,
                 std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ValidationError("unknown config key '" + joined(section, it.key()) + "'");
    }
}

const json* subsection(const json& obj, const std::string& section, const char* key) {
    if (!obj.contains(key)) return nullptr;
    const json& v = obj.at(key);
    if (!v.is_object())
        throw ValidationError("config section '" + joined(section, key) + "' must be a table");
    return &v;
}

double get_num(const json& obj, const std::string& section, const char* key, double dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ValidationError("config key '" + joined(section, key) + "' must be a number");
    return v.get<double>();
}

int get_int(const json& obj, const std::string& section, const char* key, int dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    const double num = v.is_number() ? v.get<double>() : std::nan("");
    if (!(num == std::floor(num)) || std::abs(num) > 2147483647.0)
        throw ValidationError("config key '" + joined(section, key) + "' must be an integer");
    return static_cast<int>(num);
}

std::string get_str(const json& obj, const std::string& section, const char* key,
                    const std::string& dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_string())
        throw ValidationError("config key '" + joined(section, key) + "' must be a string");
    return v.get<std::string>();
}

ShapeSpec::Kind shape_kind(const std::string& name, const std::string& where) {
    if (name == "circle") return ShapeSpec::Kind::circle;
    if (name == "ellipse") return ShapeSpec::Kind::ellipse;
    if (name == "torus_knot") return ShapeSpec::Kind::torus_knot;
    if (name == "perturbed") return ShapeSpec::Kind::perturbed;
    throw ValidationError("config key '" + where +
                          "' must be one of 'circle', 'ellipse', 'torus_knot', 'perturbed'");
}

void bind_energy(const json& e, RunConfig& cfg) {
    const std::string family = get_str(e, "energy", "family", "ohara");
    if (family == "ohara") {
        expect_keys(e, "energy", {"family", "alpha", "p", "kappa", "epsilon"});
        OharaParams prm;
        prm.alpha = get_num(e, "energy", "alpha", 2.5);
        prm.p = get_num(e, "energy", "p", 1.0);
        cfg.energy.params = prm;
    } else if (family == "menger") {
        expect_keys(e, "energy", {"family", "p", "q", "kappa", "epsilon"});
        MengerParams prm;
        prm.p = get_num(e, "energy", "p", 3.2);
        prm.q = get_num(e, "energy", "q", 3.0);
        cfg.energy.params = prm;
    } else if (family == "tangent_point") {
        expect_keys(e, "energy", {"family", "p", "q", "kappa", "epsilon"});
        TangentPointParams prm;
        prm.p = get_num(e, "energy", "p", 4.5);
        prm.q = get_num(e, "energy", "q", 2.0);
        cfg.energy.params = prm;
    } else {
        throw ValidationError(
            "energy.family must be one of 'ohara', 'menger', 'tangent_point'");
    }
    cfg.energy.kappa = get_num(e, "energy", "kappa", cfg.energy.kappa);
    cfg.energy.epsilon = get_num(e, "energy", "epsilon", cfg.energy.epsilon);
}

void bind_flow(const json& f, RunConfig& cfg) {
    expect_keys(f, "flow",
                {"scheme", "theta", "tau", "max_steps", "stop_grad_tol", "inner", "monitors"});
    const std::string scheme = get_str(f, "flow", "scheme", "hilbert");
    if (scheme == "hilbert")
        cfg.flow.scheme = FlowScheme::hilbert_explicit;
    else if (scheme == "minimizing_movement")
        cfg.flow.scheme = FlowScheme::minimizing_movement;
    else
        throw ValidationError("flow.scheme must be 'hilbert' or 'minimizing_movement'");
    cfg.flow.theta = get_num(f, "flow", "theta", cfg.flow.theta);
    cfg.flow.tau = get_num(f, "flow", "tau", cfg.flow.tau);
    cfg.flow.max_steps = get_int(f, "flow", "max_steps", cfg.flow.max_steps);
    cfg.flow.stop_grad_tol = get_num(f, "flow", "stop_grad_tol", cfg.flow.stop_grad_tol);
    if (const json* inner = subsection(f, "flow", "inner")) {
        expect_keys(*inner, "flow.inner",
                    {"max_iters", "tol", "shrink", "armijo", "max_backtracks", "stall_patience"});
        InnerControl& ic = cfg.flow.inner;
        ic.max_iters = get_int(*inner, "flow.inner", "max_iters", ic.max_iters);
        ic.tol = get_num(*inner, "flow.inner", "tol", ic.tol);
        ic.shrink = get_num(*inner, "flow.inner", "shrink", ic.shrink);
        ic.armijo = get_num(*inner, "flow.inner", "armijo", ic.armijo);
        ic.max_backtracks = get_int(*inner, "flow.inner", "max_backtracks", ic.max_backtracks);
        ic.stall_patience = get_int(*inner, "flow.inner", "stall_patience", ic.stall_patience);
    }
    if (const json* mon = subsection(f, "flow", "monitors")) {
        expect_keys(*mon, "flow.monitors", {"bilip_floor_fraction", "speed_floor_fraction"});
        cfg.flow.monitors.bilip_floor_fraction = get_num(
            *mon, "flow.monitors", "bilip_floor_fraction", cfg.flow.monitors.bilip_floor_fraction);
        cfg.flow.monitors.speed_floor_fraction = get_num(
            *mon, "flow.monitors", "speed_floor_fraction", cfg.flow.monitors.speed_floor_fraction);
    }
}

void bind_shape(const json& s, RunConfig& cfg) {
    expect_keys(s, "shape",
                {"kind", "nodes", "dim", "radius", "semi_axis_a", "semi_axis_b", "knot_p",
                 "knot_q", "torus_R", "torus_r", "base", "mode", "amplitude", "phase"});
    ShapeSpec& spec = cfg.shape.spec;
    spec.kind = shape_kind(get_str(s, "shape", "kind", "circle"), "shape.kind");
    cfg.shape.nodes = get_int(s, "shape", "nodes", cfg.shape.nodes);
    cfg.shape.dim = get_int(s, "shape", "dim", cfg.shape.dim);
    spec.radius = get_num(s, "shape", "radius", spec.radius);
    spec.semi_axis_a = get_num(s, "shape", "semi_axis_a", spec.semi_axis_a);
    spec.semi_axis_b = get_num(s, "shape", "semi_axis_b", spec.semi_axis_b);
    spec.knot_p = get_int(s, "shape", "knot_p", spec.knot_p);
    spec.knot_q = get_int(s, "shape", "knot_q", spec.knot_q);
    spec.torus_R = get_num(s, "shape", "torus_R", spec.torus_R);
    spec.torus_r = get_num(s, "shape", "torus_r", spec.torus_r);
    spec.base = shape_kind(get_str(s, "shape", "base", "circle"), "shape.base");
    spec.mode = get_int(s, "shape", "mode", spec.mode);
    spec.amplitude = get_num(s, "shape", "amplitude", spec.amplitude);
    spec.phase = get_num(s, "shape", "phase", spec.phase);
}

RunConfig bind_run_config(const json& doc) {
    if (!doc.is_object()) throw ValidationError("config root must be a table of sections");
    expect_keys(doc, "", {"seed", "energy", "flow", "norms", "io", "shape", "gradcheck", "sweep"});

    RunConfig cfg;
    const int seed = get_int(doc, "", "seed", 1);
    if (seed < 0) throw ValidationError("config key 'seed' must be nonnegative");
    cfg.seed = static_cast<unsigned>(seed);

    if (const json* e = subsection(doc, "", "energy")) bind_energy(*e, cfg);
    if (const json* f = subsection(doc, "", "flow")) bind_flow(*f, cfg);

    if (const json* n = subsection(doc, "", "norms")) {
        expect_keys(*n, "norms", {"penalty_s", "penalty_rho", "ambient_s", "ambient_rho"});
        if (n->contains("penalty_s")) cfg.norms.penalty_s = get_num(*n, "norms", "penalty_s", 0.0);
        if (n->contains("penalty_rho"))
            cfg.norms.penalty_rho = get_num(*n, "norms", "penalty_rho", 0.0);
        if (n->contains("ambient_s")) cfg.norms.ambient_s = get_num(*n, "norms", "ambient_s", 0.0);
        if (n->contains("ambient_rho"))
            cfg.norms.ambient_rho = get_num(*n, "norms", "ambient_rho", 0.0);
    }

    if (const json* io = subsection(doc, "", "io")) {
        expect_keys(*io, "io", {"curve", "out_dir", "curve_stride"});
        cfg.io.curve = get_str(*io, "io", "curve", cfg.io.curve);
        cfg.io.out_dir = get_str(*io, "io", "out_dir", cfg.io.out_dir);
        cfg.io.curve_stride = get_int(*io, "io", "curve_stride", cfg.io.curve_stride);
        if (cfg.io.curve_stride < 1)
            throw ValidationError("config key 'io.curve_stride' must be >= 1");
    }

    if (const json* s = subsection(doc, "", "shape")) bind_shape(*s, cfg);

    if (const json* g = subsection(doc, "", "gradcheck")) {
        expect_keys(*g, "gradcheck", {"directions", "pairs", "h", "tol_gradient", "tol_pointwise"});
        GradcheckSection& gc = cfg.gradcheck;
        gc.directions = get_int(*g, "gradcheck", "directions", gc.directions);
        gc.pairs = get_int(*g, "gradcheck", "pairs", gc.pairs);
        gc.h = get_num(*g, "gradcheck", "h", gc.h);
        gc.tol_gradient = get_num(*g, "gradcheck", "tol_gradient", gc.tol_gradient);
        gc.tol_pointwise = get_num(*g, "gradcheck", "tol_pointwise", gc.tol_pointwise);
        if (gc.directions < 1 || gc.pairs < 1)
            throw ValidationError("config keys 'gradcheck.directions' and 'gradcheck.pairs' must be >= 1");
        if (!(gc.h > 0.0) || !(gc.tol_gradient > 0.0) || !(gc.tol_pointwise > 0.0))
            throw ValidationError("gradcheck step and tolerances must be positive");
    }

    if (const json* sw = subsection(doc, "", "sweep")) {
        expect_keys(*sw, "sweep", {"eps"});
        if (sw->contains("eps")) {
            const json& arr = sw->at("eps");
            if (!arr.is_array()) throw ValidationError("config key 'sweep.eps' must be an array");
            cfg.eps_list.clear();
            for (const json& v : arr) {
                if (!v.is_number())
                    throw ValidationError("config key 'sweep.eps' must hold numbers");
                cfg.eps_list.push_back(v.get<double>());
            }
        }
    }
    return cfg;
}

} // namespace

TotalEnergyConfig RunConfig::energy_config() const {
    TotalEnergyConfig cfg = TotalEnergyConfig::make(energy.params, energy.kappa, energy.epsilon);
    if (norms.any()) {
        if (norms.penalty_s) cfg.penalty_space.s = *norms.penalty_s;
        if (norms.penalty_rho) cfg.penalty_space.rho = *norms.penalty_rho;
        if (norms.ambient_s) cfg.ambient_space.s = *norms.ambient_s;
        if (norms.ambient_rho) cfg.ambient_space.rho = *norms.ambient_rho;
        cfg.penalty_space.validate();
        cfg.ambient_space.validate();
        if (!(cfg.ambient_space.s + cfg.epsilon < 1.0))
            throw ValidationError("total energy config requires s + epsilon < 1");
        if (!((cfg.ambient_space.s + cfg.epsilon) * cfg.ambient_space.rho > 1.0))
            throw ValidationError("total energy config requires (s + epsilon) * rho > 1");
    }
    return cfg;
}

void RunConfig::validate_flow_windows() const {
    std::visit(
        [](const auto& prm) {
            using T = std::decay_t<decltype(prm)>;
            if constexpr (std::is_same_v<T, OharaParams>) {
                if (!(prm.alpha > 0.0)) throw ValidationError("flow window requires alpha > 0");
                if (!(prm.p >= 1.0)) throw ValidationError("flow window requires p >= 1");
                if (!(2.0 < prm.alpha * prm.p))
                    throw ValidationError("flow window requires 2 < alpha p");
                if (!(prm.alpha * prm.p < 2.0 * prm.p + 1.0))
                    throw ValidationError("flow window requires alpha p < 2p + 1");
            } else if constexpr (std::is_same_v<T, MengerParams>) {
                if (!(prm.q > 1.0)) throw ValidationError("flow window requires q > 1");
                if (!(2.0 * prm.q / 3.0 + 1.0 < prm.p))
                    throw ValidationError("flow window requires 2q/3 + 1 < p");
                if (!(prm.p < prm.q + 2.0 / 3.0))
                    throw ValidationError("flow window requires p < q + 2/3");
            } else {
                if (!(prm.q > 1.0)) throw ValidationError("flow window requires q > 1");
                if (!(prm.q + 2.0 < prm.p))
                    throw ValidationError("flow window requires q + 2 < p");
                if (!(prm.p < 2.0 * prm.q + 1.0))
                    throw ValidationError("flow window requires p < 2q + 1");
            }
        },
        energy.params);
    if (!(energy.epsilon > 0.0)) throw ValidationError("flow window requires epsilon > 0");
    if (flow.scheme == FlowScheme::hilbert_explicit && !(energy.kappa > 1.0))
        throw ValidationError("flow window requires kappa > 1");
}

RunConfig run_config_from_toml_text(const std::string& text) {
    return bind_run_config(toml_to_json(text));
}

RunConfig run_config_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config file is not valid JSON: ") + e.what());
    }
    return bind_run_config(doc);
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const size_t first = text.find_first_not_of(" \t\r\n");
    const bool looks_json = first != std::string::npos && text[first] == '{';
    if (looks_json || path.ends_with(".json")) return run_config_from_json_text(text);
    return run_config_from_toml_text(text);
}

} // namespace knotflow
