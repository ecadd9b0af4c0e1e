#include "knotflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "knotflow/detail/reduce.hpp"

namespace knotflow {

namespace {

constexpr double kPi = std::numbers::pi;

} // namespace

ClosedCurve::ClosedCurve(int dim, NodeField nodes) : dim_(dim), nodes_(std::move(nodes)) {
    if (dim_ != 2 && dim_ != 3)
        throw ValidationError("curve dim must be 2 or 3");
    const int N = n();
    if (N < 8)
        throw ValidationError("curve must satisfy n_nodes >= 8");
    for (const Vec3& p : nodes_) {
        if (!p.allFinite())
            throw ValidationError("curve nodes must be finite");
    }
    if (dim_ == 2) {
        for (Vec3& p : nodes_) p.z() = 0.0;
    }

    speeds_.resize(static_cast<size_t>(N));
    tangents_.resize(static_cast<size_t>(N));
    double sum = 0.0;
    min_speed_ = std::numeric_limits<double>::infinity();
    max_speed_ = 0.0;
    for (int i = 0; i < N; ++i) {
        const Vec3 diff = nodes_[static_cast<size_t>(wrap(i + 1))] - nodes_[static_cast<size_t>(wrap(i - 1))];
        const double norm = diff.norm();
        const double sp = norm * static_cast<double>(N) / 2.0;
        speeds_[static_cast<size_t>(i)] = sp;
        tangents_[static_cast<size_t>(i)] = norm > 0.0 ? Vec3(diff / norm) : Vec3(Vec3::Zero());
        sum += sp;
        min_speed_ = std::min(min_speed_, sp);
        max_speed_ = std::max(max_speed_, sp);
    }
    mean_speed_ = sum / static_cast<double>(N);

    prefix_.resize(static_cast<size_t>(N) + 1);
    prefix_[0] = 0.0;
    detail::KahanSum acc;
    for (int m = 0; m < N; ++m) {
        acc.add((speeds_[static_cast<size_t>(m)] + speeds_[static_cast<size_t>(wrap(m + 1))]) /
                (2.0 * static_cast<double>(N)));
        prefix_[static_cast<size_t>(m) + 1] = acc.get();
    }
}

bool ClosedCurve::is_regular() const {
    return mean_speed_ > 0.0 && min_speed_ >= speed_floor();
}

void ClosedCurve::require_regular() const {
    if (!is_regular())
        throw ZeroSpeed("node speed below regularity floor (1e-8 x mean speed)");
}

std::vector<double> node_speeds(const ClosedCurve& curve) {
    curve.require_regular();
    return curve.speeds();
}

ArclengthTable arclength_table(const ClosedCurve& curve) {
    curve.require_regular();
    ArclengthTable table;
    table.prefix = curve.prefix();
    table.total_length = curve.length();
    return table;
}

ArcChoice intrinsic_distance(const ArclengthTable& table, int i, int j) {
    const int N = table.n();
    if (i < 0 || i >= N || j < 0 || j >= N)
        throw ValidationError("node index out of range");
    if (i == j)
        return ArcChoice{0.0, i, i};
    const int a = std::min(i, j);
    const int b = std::max(i, j);
    const double fwd = table.prefix[static_cast<size_t>(b)] - table.prefix[static_cast<size_t>(a)];
    const double back = table.total_length - fwd;
    // ties go to the arc leaving the lower index in the forward direction
    if (fwd <= back)
        return ArcChoice{fwd, a, b};
    return ArcChoice{back, b, a};
}

double bilipschitz_constant(const ClosedCurve& curve) {
    const int N = curve.n();
    const NodeField& x = curve.nodes();
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
            const int k = std::min(j - i, N - (j - i));
            const double w = static_cast<double>(k) / static_cast<double>(N);
            const double chord = (x[static_cast<size_t>(i)] - x[static_cast<size_t>(j)]).norm();
            best = std::min(best, chord / w);
        }
    }
    return best;
}

std::vector<double> log_strain(const ClosedCurve& curve) {
    curve.require_regular();
    std::vector<double> out(curve.speeds().size());
    std::transform(curve.speeds().begin(), curve.speeds().end(), out.begin(),
                   [](double sp) { return std::log(sp); });
    return out;
}

NodeField unit_tangents(const ClosedCurve& curve) {
    curve.require_regular();
    return curve.tangents();
}

ClosedCurve resample_arclength(const ClosedCurve& curve, int n_out) {
    if (n_out < 8)
        throw ValidationError("resample target must satisfy n_nodes >= 8");
    curve.require_regular();

    const int N = curve.n();
    const std::vector<double>& ell = curve.prefix();
    const double L = curve.length();
    const NodeField& x = curve.nodes();

    // closed-up value sequence over the abscissa ell[0..N]
    auto value = [&](int m) -> const Vec3& { return x[static_cast<size_t>(curve.wrap(m))]; };

    std::vector<double> h(static_cast<size_t>(N));
    NodeField secant(static_cast<size_t>(N));
    for (int m = 0; m < N; ++m) {
        h[static_cast<size_t>(m)] = ell[static_cast<size_t>(m) + 1] - ell[static_cast<size_t>(m)];
        if (h[static_cast<size_t>(m)] <= 0.0)
            throw ZeroSpeed("arclength table is not strictly increasing");
        secant[static_cast<size_t>(m)] = (value(m + 1) - value(m)) / h[static_cast<size_t>(m)];
    }

    const bool pchip = N >= 16;
    NodeField slope(static_cast<size_t>(N), Vec3::Zero());
    if (pchip) {
        // Fritsch-Carlson slopes, applied per coordinate on the periodic data
        for (int m = 0; m < N; ++m) {
            const int mm = curve.wrap(m - 1);
            const double h0 = h[static_cast<size_t>(mm)];
            const double h1 = h[static_cast<size_t>(m)];
            const double w1 = 2.0 * h1 + h0;
            const double w2 = h1 + 2.0 * h0;
            for (int c = 0; c < 3; ++c) {
                const double d0 = secant[static_cast<size_t>(mm)][c];
                const double d1 = secant[static_cast<size_t>(m)][c];
                if (d0 * d1 > 0.0)
                    slope[static_cast<size_t>(m)][c] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
    }

    NodeField out(static_cast<size_t>(n_out));
    int seg = 0;
    for (int k = 0; k < n_out; ++k) {
        const double t = static_cast<double>(k) * L / static_cast<double>(n_out);
        while (seg + 1 < N && ell[static_cast<size_t>(seg) + 1] <= t) ++seg;
        const double hs = h[static_cast<size_t>(seg)];
        const double s = (t - ell[static_cast<size_t>(seg)]) / hs;
        if (pchip) {
            const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
            const double h10 = s * (1.0 - s) * (1.0 - s);
            const double h01 = s * s * (3.0 - 2.0 * s);
            const double h11 = s * s * (s - 1.0);
            out[static_cast<size_t>(k)] = h00 * value(seg) + h01 * value(seg + 1) +
                                          hs * (h10 * slope[static_cast<size_t>(seg)] +
                                                h11 * slope[static_cast<size_t>(curve.wrap(seg + 1))]);
        } else {
            out[static_cast<size_t>(k)] = value(seg) + s * (value(seg + 1) - value(seg));
        }
    }
    return ClosedCurve(curve.dim(), std::move(out));
}

GeometryReport geometry_report(const ClosedCurve& curve) {
    GeometryReport rep;
    rep.min_speed = curve.min_speed();
    rep.max_speed = curve.max_speed();
    rep.bilip = bilipschitz_constant(curve);

    const int N = curve.n();
    const NodeField& x = curve.nodes();
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) {
        for (int j = i + 2; j < N; ++j) {
            if (i == 0 && j == N - 1) continue; // adjacent across the seam
            gap = std::min(gap, (x[static_cast<size_t>(i)] - x[static_cast<size_t>(j)]).norm());
        }
    }
    rep.min_gap = gap;

    if (curve.is_regular()) {
        double sup = 0.0;
        for (double sp : curve.speeds()) sup = std::max(sup, std::abs(std::log(sp)));
        rep.log_strain_sup = sup;
    } else {
        rep.log_strain_sup = std::numeric_limits<double>::infinity();
    }
    return rep;
}

namespace {

Vec3 planar_base_point(const ShapeSpec& shape, ShapeSpec::Kind kind, double t) {
    const double ang = 2.0 * kPi * t;
    if (kind == ShapeSpec::Kind::circle)
        return Vec3(shape.radius * std::cos(ang), shape.radius * std::sin(ang), 0.0);
    return Vec3(shape.semi_axis_a * std::cos(ang), shape.semi_axis_b * std::sin(ang), 0.0);
}

} // namespace

ClosedCurve generate_curve(const ShapeSpec& shape, int n_nodes, int dim) {
    if (n_nodes < 8)
        throw ValidationError("curve must satisfy n_nodes >= 8");
    if (dim != 2 && dim != 3)
        throw ValidationError("curve dim must be 2 or 3");

    switch (shape.kind) {
    case ShapeSpec::Kind::circle:
        if (!(shape.radius > 0.0))
            throw BadShapeParams("circle radius must be positive");
        break;
    case ShapeSpec::Kind::ellipse:
        if (!(shape.semi_axis_a > 0.0) || !(shape.semi_axis_b > 0.0))
            throw BadShapeParams("ellipse semi-axes must be positive");
        break;
    case ShapeSpec::Kind::torus_knot:
        if (dim != 3)
            throw BadShapeParams("torus knot requires dim = 3");
        if (shape.knot_p < 1 || shape.knot_q < 1)
            throw BadShapeParams("torus knot winding numbers must be positive");
        if (std::gcd(shape.knot_p, shape.knot_q) != 1)
            throw BadShapeParams("torus knot winding numbers must be coprime");
        if (!(shape.torus_R > shape.torus_r) || !(shape.torus_r > 0.0))
            throw BadShapeParams("torus radii must satisfy R > r > 0");
        break;
    case ShapeSpec::Kind::perturbed:
        if (shape.base != ShapeSpec::Kind::circle && shape.base != ShapeSpec::Kind::ellipse)
            throw BadShapeParams("perturbation base must be circle or ellipse");
        if (shape.mode < 1)
            throw BadShapeParams("perturbation mode must be a positive integer");
        if (!(std::abs(shape.amplitude) < 1.0))
            throw BadShapeParams("perturbation amplitude must lie in (-1, 1)");
        break;
    }

    NodeField nodes(static_cast<size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n_nodes);
        switch (shape.kind) {
        case ShapeSpec::Kind::circle:
        case ShapeSpec::Kind::ellipse:
            nodes[static_cast<size_t>(i)] = planar_base_point(shape, shape.kind, t);
            break;
        case ShapeSpec::Kind::torus_knot: {
            const double ang = 2.0 * kPi * t;
            const double ring = shape.torus_R + shape.torus_r * std::cos(static_cast<double>(shape.knot_q) * ang);
            nodes[static_cast<size_t>(i)] =
                Vec3(ring * std::cos(static_cast<double>(shape.knot_p) * ang),
                     ring * std::sin(static_cast<double>(shape.knot_p) * ang),
                     shape.torus_r * std::sin(static_cast<double>(shape.knot_q) * ang));
            break;
        }
        case ShapeSpec::Kind::perturbed: {
            const double factor =
                1.0 + shape.amplitude *
                          std::cos(2.0 * kPi * static_cast<double>(shape.mode) * t + shape.phase);
            nodes[static_cast<size_t>(i)] = factor * planar_base_point(shape, shape.base, t);
            break;
        }
        }
    }
    return ClosedCurve(dim, std::move(nodes));
}

ClosedCurve curve_from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("curve file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("dim") || !doc.contains("nodes"))
        throw ValidationError("curve file must be an object with 'dim' and 'nodes'");
    if (!doc["dim"].is_number_integer())
        throw ValidationError("curve 'dim' must be an integer");
    const int dim = doc["dim"].get<int>();
    if (dim != 2 && dim != 3)
        throw ValidationError("curve dim must be 2 or 3");
    if (!doc["nodes"].is_array())
        throw ValidationError("curve 'nodes' must be an array");
    const auto& rows = doc["nodes"];
    if (rows.size() < 8)
        throw ValidationError("curve must satisfy n_nodes >= 8");

    NodeField nodes(rows.size(), Vec3::Zero());
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
            throw ValidationError("each curve node must be an array of 'dim' numbers");
        for (int c = 0; c < dim; ++c) {
            if (!row[static_cast<size_t>(c)].is_number())
                throw ValidationError("each curve node must be an array of 'dim' numbers");
            nodes[i][c] = row[static_cast<size_t>(c)].get<double>();
        }
    }
    return ClosedCurve(dim, std::move(nodes));
}

std::string curve_to_json_text(const ClosedCurve& curve) {
    nlohmann::json rows = nlohmann::json::array();
    for (const Vec3& p : curve.nodes()) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < curve.dim(); ++c) row.push_back(p[c]);
        rows.push_back(std::move(row));
    }
    nlohmann::json doc;
    doc["dim"] = curve.dim();
    doc["nodes"] = std::move(rows);
    return doc.dump();
}

ClosedCurve read_curve_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open curve file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return curve_from_json_text(buf.str());
}

void write_curve_json(const ClosedCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot open output file: " + path);
    out << curve_to_json_text(curve) << "\n";
}

} // namespace knotflow
