#pragma once

#include <string>
#include <variant>

#include "knotflow/geometry.hpp"

namespace knotflow {

// Parameter ranges follow the admissible windows of the three energy
// families. validate() throws ValidationError naming the violated inequality.

struct OharaParams {
    double alpha = 2.0;
    double p = 1.0;
    void validate() const; // alpha > 0, p >= 1, 2 <= alpha*p, alpha*p < 2*p + 1
};

struct MengerParams {
    double p = 3.2;
    double q = 3.0;
    void validate() const; // q > 1, p > 2*q/3 + 1, p < q + 2/3
};

struct TangentPointParams {
    double p = 4.5;
    double q = 2.0;
    void validate() const; // q > 1, p > q + 2, p < 2*q + 1
};

struct EnergyValue {
    double value = 0.0;
    long long n_terms = 0;  // quadrature tuples summed (ordered)
    long long excluded = 0; // tuples zeroed by a degeneracy guard or clamp
};

// throws CoincidentPoints when any chord falls below 1e-10 x length
void require_embedded(const ClosedCurve& curve);

// e^alpha(gamma; x_i, x_j) = |chord|^-alpha - d_gamma^-alpha, clamped at 0
double ohara_integrand(const ClosedCurve& curve, const ArclengthTable& table, int i, int j,
                       const OharaParams& params);

// E = sum_{i != j} e^alpha(i,j)^p sp_i sp_j / N^2
EnergyValue ohara_energy(const ClosedCurve& curve, const OharaParams& params);

// |u ^ v| = sqrt(|u|^2 |v|^2 - <u,v>^2), clamped at 0
double wedge_norm(const Vec3& u, const Vec3& v);

// |(b-a)^(c-a)|^q / (|b-c||b-a||c-a|)^p; collinear triples give 0
double menger_kernel(const Vec3& a, const Vec3& b, const Vec3& c, const MengerParams& params);

// triple sum over pairwise-distinct nodes of kernel x three line elements / N^3
EnergyValue menger_energy(const ClosedCurve& curve, const MengerParams& params);

// dist(line through node i along tau_i, node j)^q / |chord|^p. Not symmetric
// in (i, j).
double tangent_point_kernel(const ClosedCurve& curve, int i, int j,
                            const TangentPointParams& params);

// double sum over ordered pairs i != j of kernel x two line elements / N^2
EnergyValue tangent_point_energy(const ClosedCurve& curve, const TangentPointParams& params);

using AnyEnergyParams = std::variant<OharaParams, MengerParams, TangentPointParams>;

EnergyValue energy(const ClosedCurve& curve, const AnyEnergyParams& params);
void validate_params(const AnyEnergyParams& params);

// scaling exponent d with E(lambda gamma) = lambda^d E(gamma):
// 2 - alpha p, 3 + 2q - 3p, q - p + 2
double homogeneity_degree(const AnyEnergyParams& params);

std::string family_name(const AnyEnergyParams& params); // ohara | menger | tangent_point

} // namespace knotflow
