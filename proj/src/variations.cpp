#include "knotflow/variations.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "knotflow/detail/reduce.hpp"

namespace knotflow {

namespace {

constexpr double kChordFloorFrac = 1e-10;
constexpr double kCollinearFrac = 1e-30;

void check_match(const ClosedCurve& curve, const Perturbation& pert) {
    if (static_cast<int>(pert.values.size()) != curve.n())
        throw ValidationError("perturbation size must match the curve");
}

Vec3 central_diff(const ClosedCurve& curve, const NodeField& f, int i) {
    const int N = curve.n();
    return (f[static_cast<size_t>(curve.wrap(i + 1))] - f[static_cast<size_t>(curve.wrap(i - 1))]) *
           (static_cast<double>(N) / 2.0);
}

// trapezoid sum of a node integrand over the arc realizing d(i, j)
template <class Integrand>
double arc_quadrature(const ClosedCurve& curve, const ArcChoice& arc, Integrand&& f) {
    const int N = curve.n();
    const int steps = curve.wrap(arc.to - arc.from);
    detail::KahanSum acc;
    for (int s = 0; s <= steps; ++s) {
        const int m = curve.wrap(arc.from + s);
        const double w = (s == 0 || s == steps) ? 0.5 : 1.0;
        acc.add(w * f(m));
    }
    return acc.get() / static_cast<double>(N);
}

} // namespace

double l2_pairing(const GradientField& grad, const Perturbation& pert) {
    if (grad.values.size() != pert.values.size())
        throw ValidationError("pairing requires equal sizes");
    detail::KahanSum acc;
    for (size_t i = 0; i < grad.values.size(); ++i) acc.add(grad.values[i].dot(pert.values[i]));
    return acc.get() / static_cast<double>(grad.values.size());
}

Perturbation random_smooth_perturbation(int n_nodes, int dim, int max_mode, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int nc = dim == 2 ? 2 : 3;
    std::vector<double> ca(static_cast<size_t>(3 * max_mode), 0.0);
    std::vector<double> cb(static_cast<size_t>(3 * max_mode), 0.0);
    for (int c = 0; c < nc; ++c)
        for (int m = 1; m <= max_mode; ++m) {
            const double decay = 1.0 / (static_cast<double>(m) * m);
            ca[static_cast<size_t>(c * max_mode + m - 1)] = gauss(rng) * decay;
            cb[static_cast<size_t>(c * max_mode + m - 1)] = gauss(rng) * decay;
        }
    Perturbation out;
    out.values.assign(static_cast<size_t>(n_nodes), Vec3::Zero());
    for (int i = 0; i < n_nodes; ++i) {
        const double x = static_cast<double>(i) / n_nodes;
        for (int c = 0; c < nc; ++c)
            for (int m = 1; m <= max_mode; ++m) {
                const double ang = 2.0 * std::numbers::pi * m * x;
                out.values[static_cast<size_t>(i)][c] +=
                    ca[static_cast<size_t>(c * max_mode + m - 1)] * std::cos(ang) +
                    cb[static_cast<size_t>(c * max_mode + m - 1)] * std::sin(ang);
            }
    }
    return out;
}

Vec3 arclength_derivative(const ClosedCurve& curve, const Perturbation& pert, int i) {
    check_match(curve, pert);
    curve.require_regular();
    return central_diff(curve, pert.values, i) / curve.speeds()[static_cast<size_t>(curve.wrap(i))];
}

double G1(const ClosedCurve& curve, const ArclengthTable& table, int i, int j,
          const Perturbation& pert) {
    check_match(curve, pert);
    if (i == j)
        throw ValidationError("G1 needs i != j");
    curve.require_regular();
    const ArcChoice arc = intrinsic_distance(table, i, j);
    const NodeField& tau = curve.tangents();
    return arc_quadrature(curve, arc, [&](int m) {
        return tau[static_cast<size_t>(m)].dot(central_diff(curve, pert.values, m));
    });
}

double G2(const ClosedCurve& curve, const ArclengthTable& table, int i, int j,
          const Perturbation& pert1, const Perturbation& pert2) {
    check_match(curve, pert1);
    check_match(curve, pert2);
    if (i == j)
        throw ValidationError("G2 needs i != j");
    curve.require_regular();
    const ArcChoice arc = intrinsic_distance(table, i, j);
    const NodeField& tau = curve.tangents();
    const std::vector<double>& sp = curve.speeds();
    return arc_quadrature(curve, arc, [&](int m) {
        const Vec3 d1 = central_diff(curve, pert1.values, m);
        const Vec3 d2 = central_diff(curve, pert2.values, m);
        const Vec3& t = tau[static_cast<size_t>(m)];
        return (d1.dot(d2) - t.dot(d1) * t.dot(d2)) / sp[static_cast<size_t>(m)];
    });
}

double F1(const ClosedCurve& curve, const ArclengthTable& table, int i, int j,
          const Perturbation& pert, double alpha) {
    check_match(curve, pert);
    if (i == j)
        throw ValidationError("F1 needs i != j");
    const Vec3 delta = curve.node(j) - curve.node(i);
    const double chord = delta.norm();
    if (chord < kChordFloorFrac * table.total_length)
        throw CoincidentPoints("curve nodes closer than 1e-10 x length");
    const Vec3 deta = pert.values[static_cast<size_t>(j)] - pert.values[static_cast<size_t>(i)];
    const double d = intrinsic_distance(table, i, j).dist;
    const double g1 = G1(curve, table, i, j, pert);
    return alpha * (std::pow(d, -alpha - 1.0) * g1 -
                    std::pow(chord, -alpha - 2.0) * delta.dot(deta));
}

double F2(const ClosedCurve& curve, const ArclengthTable& table, int i, int j,
          const Perturbation& pert1, const Perturbation& pert2, double alpha) {
    check_match(curve, pert1);
    check_match(curve, pert2);
    if (i == j)
        throw ValidationError("F2 needs i != j");
    const Vec3 delta = curve.node(j) - curve.node(i);
    const double chord = delta.norm();
    if (chord < kChordFloorFrac * table.total_length)
        throw CoincidentPoints("curve nodes closer than 1e-10 x length");
    const Vec3 d1 = pert1.values[static_cast<size_t>(j)] - pert1.values[static_cast<size_t>(i)];
    const Vec3 d2 = pert2.values[static_cast<size_t>(j)] - pert2.values[static_cast<size_t>(i)];
    const double d = intrinsic_distance(table, i, j).dist;
    const double g1a = G1(curve, table, i, j, pert1);
    const double g1b = G1(curve, table, i, j, pert2);
    const double g2 = G2(curve, table, i, j, pert1, pert2);
    return alpha * (alpha + 2.0) * std::pow(chord, -alpha - 4.0) * delta.dot(d1) * delta.dot(d2) -
           alpha * std::pow(chord, -alpha - 2.0) * d1.dot(d2) -
           alpha * (alpha + 1.0) * std::pow(d, -alpha - 2.0) * g1a * g1b +
           alpha * std::pow(d, -alpha - 1.0) * g2;
}

double ohara_first_variation(const ClosedCurve& curve, const OharaParams& params,
                             const Perturbation& pert) {
    params.validate();
    check_match(curve, pert);
    curve.require_regular();
    const int N = curve.n();
    const ArclengthTable table = arclength_table(curve);
    const std::vector<double>& sp = curve.speeds();
    const NodeField& tau = curve.tangents();

    // derivative of each node speed along the perturbation
    std::vector<double> dsp(static_cast<size_t>(N));
    for (int m = 0; m < N; ++m)
        dsp[static_cast<size_t>(m)] =
            tau[static_cast<size_t>(m)].dot(central_diff(curve, pert.values, m));

    const bool p_one = params.p == 1.0;
    detail::KahanSum total;
    detail::chunked_rows(
        N, detail::KahanSum{},
        [&](int i, detail::KahanSum& acc) {
            for (int j = 0; j < N; ++j) {
                if (j == i) continue;
                const double e = ohara_integrand(curve, table, i, j, params);
                if (e == 0.0) continue; // clamped pairs are locally constant
                const double f1 = F1(curve, table, i, j, pert, params.alpha);
                const double ep = p_one ? e : std::pow(e, params.p);
                const double ep1 = p_one ? 1.0 : std::pow(e, params.p - 1.0);
                acc.add(params.p * ep1 * f1 * sp[static_cast<size_t>(i)] * sp[static_cast<size_t>(j)] +
                        ep * (dsp[static_cast<size_t>(i)] * sp[static_cast<size_t>(j)] +
                              sp[static_cast<size_t>(i)] * dsp[static_cast<size_t>(j)]));
            }
        },
        [&](detail::KahanSum& part) { total.add(part.get()); });
    return total.get() / (static_cast<double>(N) * static_cast<double>(N));
}

namespace {

// scalar per-node speed sensitivities are converted to node gradients at the
// end: sp_m depends on gamma_{m+1} and gamma_{m-1} only
void fold_speed_sensitivity(const ClosedCurve& curve, const std::vector<double>& Q,
                            NodeField& grad) {
    const int N = curve.n();
    const NodeField& tau = curve.tangents();
    for (int l = 0; l < N; ++l) {
        const int lm = curve.wrap(l - 1);
        const int lp = curve.wrap(l + 1);
        grad[static_cast<size_t>(l)] +=
            (static_cast<double>(N) / 2.0) * (Q[static_cast<size_t>(lm)] * tau[static_cast<size_t>(lm)] -
                                              Q[static_cast<size_t>(lp)] * tau[static_cast<size_t>(lp)]);
    }
}

struct OharaScratch {
    std::vector<double> diff;  // difference array for arc range adds
    std::vector<double> corr;  // trapezoid endpoint corrections
    std::vector<double> qsp;   // direct speed-factor sensitivities
    NodeField grad;            // chord-channel vector parts
};

GradientField ohara_gradient(const ClosedCurve& curve, const OharaParams& params) {
    const int N = curve.n();
    const ArclengthTable table = arclength_table(curve);
    const std::vector<double>& sp = curve.speeds();
    const double alpha = params.alpha;
    const bool p_one = params.p == 1.0;

    OharaScratch proto;
    proto.diff.assign(static_cast<size_t>(N) + 1, 0.0);
    proto.corr.assign(static_cast<size_t>(N), 0.0);
    proto.qsp.assign(static_cast<size_t>(N), 0.0);
    proto.grad.assign(static_cast<size_t>(N), Vec3::Zero());

    OharaScratch total = proto;
    detail::chunked_rows(
        N, proto,
        [&](int i, OharaScratch& s) {
            for (int j = i + 1; j < N; ++j) {
                const Vec3 delta = curve.node(j) - curve.node(i);
                const double chord = delta.norm();
                const ArcChoice arc = intrinsic_distance(table, i, j);
                const double d = arc.dist;
                double e;
                if (alpha == 2.0)
                    e = 1.0 / (chord * chord) - 1.0 / (d * d);
                else
                    e = std::pow(chord, -alpha) - std::pow(d, -alpha);
                if (e <= 0.0) continue; // clamped: no contribution
                const double ep1 = p_one ? 1.0 : std::pow(e, params.p - 1.0);
                const double ep = p_one ? e : ep1 * e;
                const double spij = sp[static_cast<size_t>(i)] * sp[static_cast<size_t>(j)];
                const double A = 2.0 * params.p * ep1 * spij; // both orders of (i,j)

                // chord channel
                const double cchord = A * alpha * std::pow(chord, -alpha - 2.0);
                s.grad[static_cast<size_t>(i)] += cchord * delta;
                s.grad[static_cast<size_t>(j)] -= cchord * delta;

                // intrinsic-distance channel: trapezoid weights over the arc
                const double carc = A * alpha * std::pow(d, -alpha - 1.0) / N;
                if (arc.from <= arc.to) {
                    s.diff[static_cast<size_t>(arc.from)] += carc;
                    s.diff[static_cast<size_t>(arc.to) + 1] -= carc;
                } else {
                    s.diff[static_cast<size_t>(arc.from)] += carc;
                    s.diff[0] += carc;
                    s.diff[static_cast<size_t>(arc.to) + 1] -= carc;
                }
                s.corr[static_cast<size_t>(arc.from)] -= 0.5 * carc;
                s.corr[static_cast<size_t>(arc.to)] -= 0.5 * carc;

                // line-element factors
                s.qsp[static_cast<size_t>(i)] += 2.0 * ep * sp[static_cast<size_t>(j)];
                s.qsp[static_cast<size_t>(j)] += 2.0 * ep * sp[static_cast<size_t>(i)];
            }
        },
        [&](OharaScratch& part) {
            for (size_t m = 0; m <= static_cast<size_t>(N); ++m) total.diff[m] += part.diff[m];
            for (size_t m = 0; m < static_cast<size_t>(N); ++m) {
                total.corr[m] += part.corr[m];
                total.qsp[m] += part.qsp[m];
                total.grad[m] += part.grad[m];
            }
        });

    // sweep the difference array into per-node arc sensitivities
    std::vector<double> Q(static_cast<size_t>(N));
    double run = 0.0;
    for (int m = 0; m < N; ++m) {
        run += total.diff[static_cast<size_t>(m)];
        Q[static_cast<size_t>(m)] =
            run + total.corr[static_cast<size_t>(m)] + total.qsp[static_cast<size_t>(m)];
    }

    NodeField grad = std::move(total.grad);
    fold_speed_sensitivity(curve, Q, grad);

    GradientField out;
    out.values.assign(static_cast<size_t>(N), Vec3::Zero());
    for (int l = 0; l < N; ++l)
        out.values[static_cast<size_t>(l)] = grad[static_cast<size_t>(l)] / static_cast<double>(N);
    return out;
}

struct TupleScratch {
    std::vector<double> qsp;
    NodeField grad;
};

GradientField menger_gradient(const ClosedCurve& curve, const MengerParams& params) {
    const int N = curve.n();
    const NodeField& x = curve.nodes();
    const std::vector<double>& sp = curve.speeds();
    const double qh = params.q / 2.0;
    const double ph = params.p / 2.0;

    TupleScratch proto;
    proto.qsp.assign(static_cast<size_t>(N), 0.0);
    proto.grad.assign(static_cast<size_t>(N), Vec3::Zero());

    TupleScratch total = proto;
    detail::chunked_rows(
        N, proto,
        [&](int i, TupleScratch& s) {
            const Vec3& a = x[static_cast<size_t>(i)];
            for (int j = i + 1; j < N; ++j) {
                const Vec3 u = x[static_cast<size_t>(j)] - a;
                const double B2 = u.squaredNorm();
                for (int k = j + 1; k < N; ++k) {
                    const Vec3 v = x[static_cast<size_t>(k)] - a;
                    const double C2 = v.squaredNorm();
                    const Vec3 w = v - u; // c - b
                    const double A2 = w.squaredNorm();
                    const double dot = u.dot(v);
                    const double W2 = std::max(B2 * C2 - dot * dot, 0.0);
                    if (W2 <= kCollinearFrac * B2 * C2) continue;
                    const double K = std::pow(W2, qh) / std::pow(A2 * B2 * C2, ph);
                    const double spf = sp[static_cast<size_t>(i)] * sp[static_cast<size_t>(j)] *
                                       sp[static_cast<size_t>(k)];
                    const double cW = qh * K / W2 * spf;
                    const double cA = -ph * K / A2 * spf;
                    const double cB = -ph * K / B2 * spf;
                    const double cC = -ph * K / C2 * spf;

                    const Vec3 dWb = 2.0 * (C2 * u - dot * v);
                    const Vec3 dWc = 2.0 * (B2 * v - dot * u);

                    s.grad[static_cast<size_t>(i)] +=
                        cW * (-dWb - dWc) + cB * (-2.0 * u) + cC * (-2.0 * v);
                    s.grad[static_cast<size_t>(j)] += cW * dWb + cA * (-2.0 * w) + cB * (2.0 * u);
                    s.grad[static_cast<size_t>(k)] += cW * dWc + cA * (2.0 * w) + cC * (2.0 * v);

                    s.qsp[static_cast<size_t>(i)] +=
                        K * sp[static_cast<size_t>(j)] * sp[static_cast<size_t>(k)];
                    s.qsp[static_cast<size_t>(j)] +=
                        K * sp[static_cast<size_t>(i)] * sp[static_cast<size_t>(k)];
                    s.qsp[static_cast<size_t>(k)] +=
                        K * sp[static_cast<size_t>(i)] * sp[static_cast<size_t>(j)];
                }
            }
        },
        [&](TupleScratch& part) {
            for (size_t m = 0; m < static_cast<size_t>(N); ++m) {
                total.qsp[m] += part.qsp[m];
                total.grad[m] += part.grad[m];
            }
        });

    NodeField grad = std::move(total.grad);
    fold_speed_sensitivity(curve, total.qsp, grad);

    const double N2 = static_cast<double>(N) * static_cast<double>(N);
    GradientField out;
    out.values.assign(static_cast<size_t>(N), Vec3::Zero());
    for (int l = 0; l < N; ++l)
        out.values[static_cast<size_t>(l)] = 6.0 * grad[static_cast<size_t>(l)] / N2;
    return out;
}

GradientField tangent_point_gradient(const ClosedCurve& curve, const TangentPointParams& params) {
    const int N = curve.n();
    const NodeField& x = curve.nodes();
    const NodeField& tau = curve.tangents();
    const std::vector<double>& sp = curve.speeds();
    const double qh = params.q / 2.0;
    const double ph = params.p / 2.0;

    TupleScratch proto;
    proto.qsp.assign(static_cast<size_t>(N), 0.0);
    proto.grad.assign(static_cast<size_t>(N), Vec3::Zero());

    TupleScratch total = proto;
    detail::chunked_rows(
        N, proto,
        [&](int i, TupleScratch& s) {
            const Vec3& xi = x[static_cast<size_t>(i)];
            const Vec3& ti = tau[static_cast<size_t>(i)];
            const int im = curve.wrap(i - 1);
            const int ip = curve.wrap(i + 1);
            for (int j = 0; j < N; ++j) {
                if (j == i) continue;
                const Vec3 delta = x[static_cast<size_t>(j)] - xi;
                const double d2 = delta.squaredNorm();
                const double dot = ti.dot(delta);
                const double w2 = std::max(d2 - dot * dot, 0.0);
                if (w2 <= kCollinearFrac * d2) continue;
                const double K = std::pow(w2, qh) / std::pow(d2, ph);
                const double spf = sp[static_cast<size_t>(i)] * sp[static_cast<size_t>(j)];
                const double Kd2 = K * (qh / w2 - ph / d2);
                const double Kdot = -K * params.q * dot / w2;

                const Vec3 pair_part = spf * (2.0 * Kd2 * delta + Kdot * ti);
                s.grad[static_cast<size_t>(j)] += pair_part;
                s.grad[static_cast<size_t>(i)] -= pair_part;

                // tangent channel: tau_i depends on the neighbours of i
                const Vec3 tchan = (spf * Kdot * static_cast<double>(N) /
                                    (2.0 * sp[static_cast<size_t>(i)])) *
                                   (delta - dot * ti);
                s.grad[static_cast<size_t>(ip)] += tchan;
                s.grad[static_cast<size_t>(im)] -= tchan;

                s.qsp[static_cast<size_t>(i)] += K * sp[static_cast<size_t>(j)];
                s.qsp[static_cast<size_t>(j)] += K * sp[static_cast<size_t>(i)];
            }
        },
        [&](TupleScratch& part) {
            for (size_t m = 0; m < static_cast<size_t>(N); ++m) {
                total.qsp[m] += part.qsp[m];
                total.grad[m] += part.grad[m];
            }
        });

    NodeField grad = std::move(total.grad);
    fold_speed_sensitivity(curve, total.qsp, grad);

    GradientField out;
    out.values.assign(static_cast<size_t>(N), Vec3::Zero());
    for (int l = 0; l < N; ++l)
        out.values[static_cast<size_t>(l)] = grad[static_cast<size_t>(l)] / static_cast<double>(N);
    return out;
}

} // namespace

GradientField discrete_gradient(const ClosedCurve& curve, const AnyEnergyParams& params) {
    validate_params(params);
    if (!curve.is_regular())
        throw NonRegular("node speed below regularity floor (1e-8 x mean speed)");
    require_embedded(curve);
    return std::visit(
        [&](const auto& p) -> GradientField {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, OharaParams>)
                return ohara_gradient(curve, p);
            else if constexpr (std::is_same_v<T, MengerParams>)
                return menger_gradient(curve, p);
            else
                return tangent_point_gradient(curve, p);
        },
        params);
}

double fd_directional(const ClosedCurve& curve, const AnyEnergyParams& params,
                      const Perturbation& pert, double h) {
    check_match(curve, pert);
    if (!(h > 0.0))
        throw ValidationError("finite-difference step must satisfy h > 0");
    NodeField plus = curve.nodes();
    NodeField minus = curve.nodes();
    for (size_t m = 0; m < plus.size(); ++m) {
        plus[m] += h * pert.values[m];
        minus[m] -= h * pert.values[m];
    }
    const double ep = energy(ClosedCurve(curve.dim(), std::move(plus)), params).value;
    const double em = energy(ClosedCurve(curve.dim(), std::move(minus)), params).value;
    return (ep - em) / (2.0 * h);
}

bool fd_probe_is_clean(const ClosedCurve& curve, const AnyEnergyParams& params,
                       const Perturbation& pert, double h) {
    check_match(curve, pert);
    if (!(h > 0.0))
        throw ValidationError("finite-difference step must satisfy h > 0");
    const OharaParams* prm = std::get_if<OharaParams>(&params);
    if (prm == nullptr) return true;

    NodeField plus = curve.nodes();
    NodeField minus = curve.nodes();
    for (size_t m = 0; m < plus.size(); ++m) {
        plus[m] += h * pert.values[m];
        minus[m] -= h * pert.values[m];
    }
    const ClosedCurve cp(curve.dim(), std::move(plus));
    const ClosedCurve cm(curve.dim(), std::move(minus));
    const ArclengthTable t0 = arclength_table(curve);
    const ArclengthTable tp = arclength_table(cp);
    const ArclengthTable tm = arclength_table(cm);
    const int n = curve.n();

    auto tie_sign = [](const ArclengthTable& t, int a, int b) {
        const double gap =
            2.0 * (t.prefix[static_cast<size_t>(b)] - t.prefix[static_cast<size_t>(a)]) -
            t.total_length;
        return gap > 0.0 ? 1 : (gap < 0.0 ? -1 : 0);
    };
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const int s0 = tie_sign(t0, i, j);
            if (s0 == 0 || s0 != tie_sign(tp, i, j) || s0 != tie_sign(tm, i, j)) return false;
            const bool z0 = ohara_integrand(curve, t0, i, j, *prm) == 0.0;
            if (z0 != (ohara_integrand(cp, tp, i, j, *prm) == 0.0)) return false;
            if (z0 != (ohara_integrand(cm, tm, i, j, *prm) == 0.0)) return false;
        }
    }
    return true;
}

} // namespace knotflow
