#include "knotflow/energies.hpp"

#include <algorithm>
#include <cmath>

#include "knotflow/detail/reduce.hpp"

namespace knotflow {

namespace {

// chords shorter than this fraction of the total length count as a crossing
constexpr double kChordFloorFrac = 1e-10;
// relative wedge floor below which a triple counts as collinear (squared scale)
constexpr double kCollinearFrac = 1e-30;

void require_regular_curve(const ClosedCurve& curve) {
    if (!curve.is_regular())
        throw NonRegular("node speed below regularity floor (1e-8 x mean speed)");
}

struct PartialSum {
    detail::KahanSum sum;
    long long excluded = 0;
};

} // namespace

// serial pairwise scan so the parallel quadrature loops never have to throw
void require_embedded(const ClosedCurve& curve) {
    const int N = curve.n();
    const double floor2 = kChordFloorFrac * curve.length() * kChordFloorFrac * curve.length();
    const NodeField& x = curve.nodes();
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j)
            if ((x[static_cast<size_t>(i)] - x[static_cast<size_t>(j)]).squaredNorm() < floor2)
                throw CoincidentPoints("curve nodes closer than 1e-10 x length");
}

void OharaParams::validate() const {
    if (!(alpha > 0.0))
        throw ValidationError("ohara params require alpha > 0");
    if (!(p >= 1.0))
        throw ValidationError("ohara params require p >= 1");
    if (!(2.0 <= alpha * p))
        throw ValidationError("ohara params require 2 <= alpha*p");
    if (!(alpha * p < 2.0 * p + 1.0))
        throw ValidationError("ohara params require alpha*p < 2*p + 1");
}

void MengerParams::validate() const {
    if (!(q > 1.0))
        throw ValidationError("menger params require q > 1");
    if (!(p > 2.0 * q / 3.0 + 1.0))
        throw ValidationError("menger params require p > 2*q/3 + 1");
    if (!(p < q + 2.0 / 3.0))
        throw ValidationError("menger params require p < q + 2/3");
}

void TangentPointParams::validate() const {
    if (!(q > 1.0))
        throw ValidationError("tangent_point params require q > 1");
    if (!(p > q + 2.0))
        throw ValidationError("tangent_point params require p > q + 2");
    if (!(p < 2.0 * q + 1.0))
        throw ValidationError("tangent_point params require p < 2*q + 1");
}

double ohara_integrand(const ClosedCurve& curve, const ArclengthTable& table, int i, int j,
                       const OharaParams& params) {
    if (i == j)
        throw ValidationError("ohara integrand needs i != j");
    const double chord = (curve.node(i) - curve.node(j)).norm();
    if (chord < kChordFloorFrac * table.total_length)
        throw CoincidentPoints("curve nodes closer than 1e-10 x length");
    const double d = intrinsic_distance(table, i, j).dist;
    const double a = params.alpha;
    double e;
    if (a == 2.0)
        e = 1.0 / (chord * chord) - 1.0 / (d * d);
    else
        e = std::pow(chord, -a) - std::pow(d, -a);
    return std::max(e, 0.0);
}

EnergyValue ohara_energy(const ClosedCurve& curve, const OharaParams& params) {
    params.validate();
    require_regular_curve(curve);
    require_embedded(curve);

    const int N = curve.n();
    const ArclengthTable table = arclength_table(curve);
    const std::vector<double>& sp = curve.speeds();
    const bool p_one = params.p == 1.0;

    PartialSum total;
    detail::chunked_rows(
        N, PartialSum{},
        [&](int i, PartialSum& acc) {
            for (int j = 0; j < N; ++j) {
                if (j == i) continue;
                const double e = ohara_integrand(curve, table, i, j, params);
                if (e == 0.0) {
                    ++acc.excluded;
                    continue;
                }
                const double ep = p_one ? e : std::pow(e, params.p);
                acc.sum.add(ep * sp[static_cast<size_t>(i)] * sp[static_cast<size_t>(j)]);
            }
        },
        [&](PartialSum& part) {
            total.sum.add(part.sum.get());
            total.excluded += part.excluded;
        });

    EnergyValue out;
    out.value = total.sum.get() / (static_cast<double>(N) * static_cast<double>(N));
    out.n_terms = static_cast<long long>(N) * (N - 1);
    out.excluded = total.excluded;
    return out;
}

double wedge_norm(const Vec3& u, const Vec3& v) {
    const double g = u.squaredNorm() * v.squaredNorm() - u.dot(v) * u.dot(v);
    return std::sqrt(std::max(g, 0.0));
}

double menger_kernel(const Vec3& a, const Vec3& b, const Vec3& c, const MengerParams& params) {
    const Vec3 u = b - a;
    const Vec3 v = c - a;
    const double A2 = (c - b).squaredNorm();
    const double B2 = u.squaredNorm();
    const double C2 = v.squaredNorm();
    if (A2 == 0.0 || B2 == 0.0 || C2 == 0.0)
        throw CoincidentPoints("menger kernel needs pairwise distinct points");
    const double dot = u.dot(v);
    const double W2 = std::max(B2 * C2 - dot * dot, 0.0);
    if (W2 <= kCollinearFrac * B2 * C2)
        return 0.0;
    return std::pow(W2, params.q / 2.0) / std::pow(A2 * B2 * C2, params.p / 2.0);
}

EnergyValue menger_energy(const ClosedCurve& curve, const MengerParams& params) {
    params.validate();
    require_regular_curve(curve);
    require_embedded(curve);

    const int N = curve.n();
    const NodeField& x = curve.nodes();
    const std::vector<double>& sp = curve.speeds();
    const double qh = params.q / 2.0;
    const double ph = params.p / 2.0;

    PartialSum total;
    detail::chunked_rows(
        N, PartialSum{},
        [&](int i, PartialSum& acc) {
            const Vec3& a = x[static_cast<size_t>(i)];
            for (int j = i + 1; j < N; ++j) {
                const Vec3 u = x[static_cast<size_t>(j)] - a;
                const double B2 = u.squaredNorm();
                const double spij = sp[static_cast<size_t>(i)] * sp[static_cast<size_t>(j)];
                for (int k = j + 1; k < N; ++k) {
                    const Vec3 v = x[static_cast<size_t>(k)] - a;
                    const double C2 = v.squaredNorm();
                    const double A2 = (v - u).squaredNorm();
                    const double dot = u.dot(v);
                    const double W2 = std::max(B2 * C2 - dot * dot, 0.0);
                    if (W2 <= kCollinearFrac * B2 * C2) {
                        acc.excluded += 6;
                        continue;
                    }
                    const double kernel = std::pow(W2, qh) / std::pow(A2 * B2 * C2, ph);
                    acc.sum.add(kernel * spij * sp[static_cast<size_t>(k)]);
                }
            }
        },
        [&](PartialSum& part) {
            total.sum.add(part.sum.get());
            total.excluded += part.excluded;
        });

    const double N3 = static_cast<double>(N) * static_cast<double>(N) * static_cast<double>(N);
    EnergyValue out;
    out.value = 6.0 * total.sum.get() / N3;
    out.n_terms = static_cast<long long>(N) * (N - 1) * (N - 2);
    out.excluded = total.excluded;
    return out;
}

double tangent_point_kernel(const ClosedCurve& curve, int i, int j,
                            const TangentPointParams& params) {
    if (i == j)
        throw ValidationError("tangent-point kernel needs i != j");
    const Vec3 delta = curve.node(j) - curve.node(i);
    const double d2 = delta.squaredNorm();
    const double L = curve.length();
    if (d2 < kChordFloorFrac * L * kChordFloorFrac * L)
        throw CoincidentPoints("curve nodes closer than 1e-10 x length");
    const Vec3& tau = curve.tangents()[static_cast<size_t>(i)];
    const double dot = tau.dot(delta);
    const double w2 = std::max(d2 - dot * dot, 0.0); // tau is unit
    if (w2 <= kCollinearFrac * d2)
        return 0.0;
    return std::pow(w2, params.q / 2.0) / std::pow(d2, params.p / 2.0);
}

EnergyValue tangent_point_energy(const ClosedCurve& curve, const TangentPointParams& params) {
    params.validate();
    require_regular_curve(curve);
    require_embedded(curve);

    const int N = curve.n();
    const NodeField& x = curve.nodes();
    const NodeField& tau = curve.tangents();
    const std::vector<double>& sp = curve.speeds();
    const double qh = params.q / 2.0;
    const double ph = params.p / 2.0;

    PartialSum total;
    detail::chunked_rows(
        N, PartialSum{},
        [&](int i, PartialSum& acc) {
            const Vec3& xi = x[static_cast<size_t>(i)];
            const Vec3& ti = tau[static_cast<size_t>(i)];
            for (int j = 0; j < N; ++j) {
                if (j == i) continue;
                const Vec3 delta = x[static_cast<size_t>(j)] - xi;
                const double d2 = delta.squaredNorm();
                const double dot = ti.dot(delta);
                const double w2 = std::max(d2 - dot * dot, 0.0);
                if (w2 <= kCollinearFrac * d2) {
                    ++acc.excluded;
                    continue;
                }
                const double kernel = std::pow(w2, qh) / std::pow(d2, ph);
                acc.sum.add(kernel * sp[static_cast<size_t>(i)] * sp[static_cast<size_t>(j)]);
            }
        },
        [&](PartialSum& part) {
            total.sum.add(part.sum.get());
            total.excluded += part.excluded;
        });

    EnergyValue out;
    out.value = total.sum.get() / (static_cast<double>(N) * static_cast<double>(N));
    out.n_terms = static_cast<long long>(N) * (N - 1);
    out.excluded = total.excluded;
    return out;
}

EnergyValue energy(const ClosedCurve& curve, const AnyEnergyParams& params) {
    return std::visit(
        [&](const auto& p) -> EnergyValue {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, OharaParams>)
                return ohara_energy(curve, p);
            else if constexpr (std::is_same_v<T, MengerParams>)
                return menger_energy(curve, p);
            else
                return tangent_point_energy(curve, p);
        },
        params);
}

void validate_params(const AnyEnergyParams& params) {
    std::visit([](const auto& p) { p.validate(); }, params);
}

double homogeneity_degree(const AnyEnergyParams& params) {
    return std::visit(
        [](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, OharaParams>)
                return 2.0 - p.alpha * p.p;
            else if constexpr (std::is_same_v<T, MengerParams>)
                return 3.0 + 2.0 * p.q - 3.0 * p.p;
            else
                return p.q - p.p + 2.0;
        },
        params);
}

std::string family_name(const AnyEnergyParams& params) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, OharaParams>)
                return "ohara";
            else if constexpr (std::is_same_v<T, MengerParams>)
                return "menger";
            else
                return "tangent_point";
        },
        params);
}

} // namespace knotflow
