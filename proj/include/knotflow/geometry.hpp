#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "knotflow/errors.hpp"

namespace knotflow {

using Vec3 = Eigen::Vector3d;

// One R^3 value per node. Planar curves keep z identically zero, so the same
// storage serves dim 2 and dim 3.
using NodeField = std::vector<Vec3>;

// Discrete closed curve gamma: R/Z -> R^dim sampled at the uniform grid
// x_i = i/N. Immutable; the derived quantities every operation needs (speeds
// from periodic central differences, unit tangents, trapezoidal arclength
// prefix sums) are filled once at construction.
class ClosedCurve {
public:
    ClosedCurve(int dim, NodeField nodes);

    int dim() const { return dim_; }
    int n() const { return static_cast<int>(nodes_.size()); }
    const NodeField& nodes() const { return nodes_; }
    const Vec3& node(int i) const { return nodes_[static_cast<size_t>(i)]; }

    // speeds[i] = |gamma(x_{i+1}) - gamma(x_{i-1})| * N/2
    const std::vector<double>& speeds() const { return speeds_; }
    // unit tangents from the same central differences; zero rows where the
    // difference degenerates (callers that need tangents must check is_regular)
    const NodeField& tangents() const { return tangents_; }
    // trapezoidal cumulative arclength, prefix[0] = 0, prefix[N] = length
    const std::vector<double>& prefix() const { return prefix_; }

    double length() const { return prefix_.back(); }
    double min_speed() const { return min_speed_; }
    double max_speed() const { return max_speed_; }
    double mean_speed() const { return mean_speed_; }

    // Regularity floor: speeds below 1e-8 times the mean speed count as zero.
    double speed_floor() const { return 1e-8 * mean_speed_; }
    bool is_regular() const;
    void require_regular() const; // throws ZeroSpeed

    int wrap(int i) const {
        const int N = n();
        return ((i % N) + N) % N;
    }

private:
    int dim_;
    NodeField nodes_;
    std::vector<double> speeds_;
    NodeField tangents_;
    std::vector<double> prefix_;
    double min_speed_ = 0.0, max_speed_ = 0.0, mean_speed_ = 0.0;
};

struct ArclengthTable {
    std::vector<double> prefix; // length N+1, nondecreasing, prefix[0] = 0
    double total_length = 0.0;

    int n() const { return static_cast<int>(prefix.size()) - 1; }
};

// Shorter of the two arcs between nodes i and j, together with the arc that
// realizes it: walk forward from node `from` to node `to` (indices mod N).
struct ArcChoice {
    double dist = 0.0;
    int from = 0;
    int to = 0;
};

struct GeometryReport {
    double min_speed = 0.0;
    double max_speed = 0.0;
    double bilip = 0.0;
    double min_gap = 0.0;       // min chord over non-adjacent node pairs
    double log_strain_sup = 0.0;
};

std::vector<double> node_speeds(const ClosedCurve& curve); // throws ZeroSpeed
ArclengthTable arclength_table(const ClosedCurve& curve);  // throws ZeroSpeed

// d_gamma(i, j) = min(|prefix[j]-prefix[i]|, L - |prefix[j]-prefix[i]|).
// Ties (exactly L/2) resolve to the arc leaving the lower index forward.
ArcChoice intrinsic_distance(const ArclengthTable& table, int i, int j);

// min over node pairs of chord length / periodic parameter distance
double bilipschitz_constant(const ClosedCurve& curve);

std::vector<double> log_strain(const ClosedCurve& curve); // throws ZeroSpeed
NodeField unit_tangents(const ClosedCurve& curve);        // throws ZeroSpeed

// Nodes redistributed to equal arclength spacing via shape-preserving cubic
// interpolation of each coordinate against the arclength table (linear for
// N < 16).
ClosedCurve resample_arclength(const ClosedCurve& curve, int n_out);

GeometryReport geometry_report(const ClosedCurve& curve);

struct ShapeSpec {
    enum class Kind { circle, ellipse, torus_knot, perturbed };

    Kind kind = Kind::circle;
    // circle: unit circumference unless overridden
    double radius = 0.15915494309189535; // 1/(2 pi)
    // ellipse semi-axes
    double semi_axis_a = 0.25;
    double semi_axis_b = 0.15;
    // torus knot winding numbers and torus radii (dim 3, coprime p,q)
    int knot_p = 2;
    int knot_q = 3;
    double torus_R = 2.0;
    double torus_r = 1.0;
    // perturbed: radial cosine perturbation of a planar base shape. A
    // nonzero phase keeps the perturbation's mirror axis off the node
    // lattice, which kills the exact antipodal arc ties an axis-aligned
    // cosine produces at even node counts.
    Kind base = Kind::circle;
    int mode = 3;
    double amplitude = 0.1;
    double phase = 0.0;
};

ClosedCurve generate_curve(const ShapeSpec& shape, int n_nodes, int dim); // throws BadShapeParams

// Curve file format: {"dim": n, "nodes": [[x, y(, z)], ...]}
ClosedCurve read_curve_json(const std::string& path);
void write_curve_json(const ClosedCurve& curve, const std::string& path);
ClosedCurve curve_from_json_text(const std::string& text);
std::string curve_to_json_text(const ClosedCurve& curve);

} // namespace knotflow
