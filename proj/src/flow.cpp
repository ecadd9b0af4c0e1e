#include "knotflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "knotflow/detail/reduce.hpp"

namespace knotflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// quadrature pairing (1/N) sum <a_i, b_i> between two node fields
double field_pairing(const NodeField& a, const NodeField& b) {
    detail::KahanSum sum;
    for (size_t i = 0; i < a.size(); ++i) sum.add(a[i].dot(b[i]));
    return sum.get() / static_cast<double>(a.size());
}

struct PhiParts {
    double energy = 0.0;
    double penalty = 0.0;
    double phi = 0.0;
};

// parts of a phi value already known to be finite; exceptions propagate
// because the caller's acceptance test has already priced this curve
PhiParts phi_parts(const ClosedCurve& curve, const TotalEnergyConfig& cfg) {
    PhiParts parts;
    parts.energy = energy(curve, cfg.params).value;
    parts.penalty = strain_penalty(curve, cfg);
    parts.phi = parts.energy + parts.penalty;
    return parts;
}

// computes the bilipschitz constant as a side effect so samples reuse it
double check_monitors(const ClosedCurve& curve, const MonitorFloors& floors) {
    const double bilip = bilipschitz_constant(curve);
    if (bilip < floors.bilip) {
        std::ostringstream msg;
        msg << "bilipschitz constant " << bilip << " fell below its floor " << floors.bilip;
        throw MonitorTripped(msg.str());
    }
    if (curve.min_speed() < floors.min_speed) {
        std::ostringstream msg;
        msg << "minimum node speed " << curve.min_speed() << " fell below its floor "
            << floors.min_speed;
        throw MonitorTripped(msg.str());
    }
    return bilip;
}

DissipationLedger ledger_from_series(const std::vector<double>& t, const std::vector<double>& phi,
                                     const std::vector<double>& slope,
                                     const std::vector<double>& speed, double theta) {
    const double beta = theta / (theta - 1.0);
    DissipationLedger ledger;
    detail::KahanSum cum, cum_abs;
    for (size_t k = 0; k + 1 < t.size(); ++k) {
        const double dt = t[k + 1] - t[k];
        const double g_beta = std::pow(slope[k], beta);
        const double v_theta = std::pow(speed[k + 1], theta);
        LedgerRow row;
        row.t0 = t[k];
        row.t1 = t[k + 1];
        row.dphi = phi[k + 1] - phi[k];
        row.int_g_beta = g_beta * dt / beta;
        row.int_speed_theta = v_theta * dt / theta;
        row.residual = row.dphi + row.int_g_beta + row.int_speed_theta;
        row.ratio = v_theta > 0.0 ? g_beta / v_theta : 0.0;
        cum.add(row.residual);
        cum_abs.add(std::abs(row.residual));
        ledger.rows.push_back(row);
    }
    ledger.cumulative_residual = cum.get();
    ledger.cumulative_abs_residual = cum_abs.get();
    return ledger;
}

double hilbert_slope(const GradientField& dphi, const SpectralMetric& metric) {
    const Perturbation h = riesz_solve(dphi, metric);
    return std::sqrt(std::max(0.0, l2_pairing(dphi, h)));
}

} // namespace

void FlowConfig::validate() const {
    if (!(theta > 1.0)) throw ValidationError("flow config requires theta > 1");
    if (!(tau > 0.0)) throw ValidationError("flow config requires tau > 0");
    if (max_steps < 0) throw ValidationError("flow config requires max_steps >= 0");
    if (stop_grad_tol < 0.0) throw ValidationError("flow config requires stop_grad_tol >= 0");
    if (inner.max_iters < 1) throw ValidationError("inner solver requires max_iters >= 1");
    if (!(inner.tol > 0.0)) throw ValidationError("inner solver requires tol > 0");
    if (!(inner.shrink > 0.0 && inner.shrink < 1.0))
        throw ValidationError("inner solver requires shrink in (0, 1)");
    if (!(inner.armijo > 0.0 && inner.armijo < 1.0))
        throw ValidationError("inner solver requires armijo in (0, 1)");
    if (inner.max_backtracks < 1) throw ValidationError("inner solver requires max_backtracks >= 1");
    if (inner.stall_patience < 1) throw ValidationError("inner solver requires stall_patience >= 1");
    if (monitors.bilip_floor_fraction < 0.0 || monitors.speed_floor_fraction < 0.0)
        throw ValidationError("monitor floor fractions must be nonnegative");
}

MonitorFloors monitor_floors(const ClosedCurve& initial, const MonitorControl& monitors) {
    MonitorFloors floors;
    floors.bilip = monitors.bilip_floor_fraction * bilipschitz_constant(initial);
    floors.min_speed = monitors.speed_floor_fraction * initial.min_speed();
    return floors;
}

DissipationLedger dissipation_report(const std::vector<TrajectorySample>& trajectory,
                                     const FlowConfig& cfg) {
    std::vector<double> t, phi, slope, speed;
    for (const TrajectorySample& s : trajectory) {
        t.push_back(s.t);
        phi.push_back(s.phi);
        slope.push_back(s.slope_dual_norm);
        speed.push_back(s.metric_speed);
    }
    return ledger_from_series(t, phi, slope, speed, cfg.theta);
}

TrajectorySample hilbert_flow_step(const ClosedCurve& curve, double t_now,
                                   const TotalEnergyConfig& energy_cfg,
                                   const FlowConfig& flow_cfg, const SpectralMetric& metric,
                                   const MonitorFloors& floors) {
    if (!energy_cfg.hilbert())
        throw ValidationError("explicit duality-map flow requires rho == 2");
    if (!energy_cfg.differentiable_penalty())
        throw ValidationError("explicit duality-map flow requires kappa > 1");
    if (metric.n() != curve.n())
        throw ValidationError("metric resolution must match the curve");

    const double phi0 = total_energy(curve, energy_cfg);
    if (!std::isfinite(phi0)) throw ValidationError("flow step requires a finite energy");

    const GradientField dphi = total_energy_gradient(curve, energy_cfg);
    const Perturbation h = riesz_solve(dphi, metric);
    const double g = std::sqrt(std::max(0.0, l2_pairing(dphi, h)));
    const double beta = flow_cfg.beta();
    const double g_beta = std::pow(g, beta);

    // descent direction w = J^{-1}(D phi) = g^{beta-2} h; exactly stationary
    // points step nowhere
    NodeField w(static_cast<size_t>(curve.n()), Vec3::Zero());
    if (g > 0.0) {
        const double scale = std::pow(g, beta - 2.0);
        for (size_t i = 0; i < w.size(); ++i) w[i] = scale * h.values[i];
    }

    double tau_eff = flow_cfg.tau;
    for (int halving = 0;; ++halving) {
        NodeField nodes = curve.nodes();
        for (size_t i = 0; i < nodes.size(); ++i) nodes[i] -= tau_eff * w[i];
        ClosedCurve candidate(curve.dim(), std::move(nodes));
        const double phi1 = total_energy(candidate, energy_cfg);
        if (phi1 <= phi0 - 0.1 * tau_eff * g_beta) {
            const double bilip = check_monitors(candidate, floors);
            const PhiParts parts = phi_parts(candidate, energy_cfg);
            TrajectorySample sample{t_now + tau_eff,
                                    std::move(candidate),
                                    parts.phi,
                                    parts.energy,
                                    parts.penalty,
                                    0.0,
                                    0.0,
                                    bilip,
                                    0.0,
                                    true,
                                    false};
            sample.min_speed = sample.curve.min_speed();
            sample.slope_dual_norm =
                hilbert_slope(total_energy_gradient(sample.curve, energy_cfg), metric);
            // the displacement is tau_eff w exactly, so the metric speed is
            // the metric norm of w itself
            sample.metric_speed = metric_norm(Perturbation{w}, metric);
            return sample;
        }
        if (halving >= flow_cfg.inner.max_backtracks) {
            std::ostringstream msg;
            msg << "no sufficient decrease after " << flow_cfg.inner.max_backtracks
                << " step halvings (tau " << flow_cfg.tau << " down to " << tau_eff << ")";
            throw StepFailure(msg.str());
        }
        tau_eff *= 0.5;
    }
}

TrajectorySample minimizing_movement_step(const ClosedCurve& curve, double t_now,
                                          const TotalEnergyConfig& energy_cfg,
                                          const FlowConfig& flow_cfg, const MonitorFloors& floors) {
    const NormSpec flow_spec = energy_cfg.flow_space();
    const double theta = flow_cfg.theta;
    const double tau = flow_cfg.tau;
    const double tau_pow = std::pow(tau, 1.0 - theta);
    const InnerControl& inner = flow_cfg.inner;
    const int n = curve.n();

    const double phi0 = total_energy(curve, energy_cfg);
    if (!std::isfinite(phi0)) throw ValidationError("flow step requires a finite energy");

    const NodeField& u = curve.nodes();
    auto movement_value = [&](const NodeField& disp) {
        return tau_pow / theta * std::pow(sobolev_norm(disp, flow_spec), theta);
    };
    auto objective_gradient = [&](const ClosedCurve& vcurve, const NodeField& disp) {
        GradientField grad = total_energy_gradient(vcurve, energy_cfg);
        const GradientField move = norm_power_gradient(disp, flow_spec, theta);
        for (size_t i = 0; i < grad.values.size(); ++i)
            grad.values[i] += tau_pow / theta * move.values[i];
        return grad;
    };

    // descent on psi(v) = phi(v) + movement, warm started at v = u where the
    // movement term and its gradient both vanish
    ClosedCurve vcurve = curve;
    NodeField disp(static_cast<size_t>(n), Vec3::Zero());
    double psi = phi0;
    GradientField grad = objective_gradient(vcurve, disp);
    const double g0 = std::sqrt(std::max(0.0, field_pairing(grad.values, grad.values)));
    double gnorm = g0;
    double lambda = 0.01 * curve.length() / std::max(g0, 1e-300);
    int stall_count = 0;
    bool stalled = false;

    for (int iter = 0; iter < inner.max_iters; ++iter) {
        if (gnorm <= inner.tol * std::max(1.0, g0)) break;

        const double gg = field_pairing(grad.values, grad.values);
        double lam = lambda;
        bool accepted = false;
        NodeField trial_nodes;
        double psi_trial = kInf;
        for (int bt = 0; bt <= inner.max_backtracks; ++bt) {
            trial_nodes = vcurve.nodes();
            for (size_t i = 0; i < trial_nodes.size(); ++i) trial_nodes[i] -= lam * grad.values[i];
            ClosedCurve trial(curve.dim(), trial_nodes);
            NodeField trial_disp(static_cast<size_t>(n));
            for (size_t i = 0; i < trial_disp.size(); ++i) trial_disp[i] = trial_nodes[i] - u[i];
            psi_trial = total_energy(trial, energy_cfg) + movement_value(trial_disp);
            if (std::isfinite(psi_trial) && psi_trial <= psi - inner.armijo * lam * gg) {
                accepted = true;
                vcurve = std::move(trial);
                disp = std::move(trial_disp);
                break;
            }
            lam *= inner.shrink;
        }
        if (!accepted) {
            stalled = true;
            break;
        }

        const double decrease = psi - psi_trial;
        psi = psi_trial;
        GradientField grad_new = objective_gradient(vcurve, disp);

        // Barzilai-Borwein step guess from the last move
        NodeField s(static_cast<size_t>(n)), y(static_cast<size_t>(n));
        for (size_t i = 0; i < s.size(); ++i) {
            s[i] = -lam * grad.values[i];
            y[i] = grad_new.values[i] - grad.values[i];
        }
        const double sts = field_pairing(s, s);
        const double sty = field_pairing(s, y);
        lambda = sty > 0.0 ? std::clamp(sts / sty, 1e-18, 1e18) : lam * 2.0;

        grad = std::move(grad_new);
        gnorm = std::sqrt(std::max(0.0, field_pairing(grad.values, grad.values)));

        if (decrease <= 1e-15 * std::max(1.0, std::abs(psi))) {
            if (++stall_count >= inner.stall_patience) {
                stalled = true;
                break;
            }
        } else {
            stall_count = 0;
        }
    }

    bool moved = false;
    for (const Vec3& d : disp)
        if (d.squaredNorm() > 0.0) {
            moved = true;
            break;
        }

    const double bilip = check_monitors(vcurve, floors);
    const PhiParts parts = phi_parts(vcurve, energy_cfg);
    TrajectorySample sample{t_now + tau,
                            std::move(vcurve),
                            parts.phi,
                            parts.energy,
                            parts.penalty,
                            0.0,
                            0.0,
                            bilip,
                            0.0,
                            moved,
                            stalled};
    sample.min_speed = sample.curve.min_speed();
    sample.metric_speed = moved ? sobolev_norm(disp, flow_spec) / tau : 0.0;
    sample.slope_dual_norm =
        dual_norm_estimate(total_energy_gradient(sample.curve, energy_cfg), flow_spec).value;
    return sample;
}

std::string flow_status_name(FlowStatus status) {
    switch (status) {
    case FlowStatus::converged: return "converged";
    case FlowStatus::reached_max_steps: return "reached_max_steps";
    case FlowStatus::step_failure: return "step_failure";
    case FlowStatus::monitor_tripped: return "monitor_tripped";
    case FlowStatus::inner_stall: return "inner_stall";
    }
    return "unknown";
}

FlowResult run_flow(const ClosedCurve& initial, const TotalEnergyConfig& energy_cfg,
                    const FlowConfig& flow_cfg) {
    flow_cfg.validate();
    validate_params(energy_cfg.params);
    if (flow_cfg.scheme == FlowScheme::hilbert_explicit) {
        if (!energy_cfg.hilbert())
            throw ValidationError("explicit duality-map flow requires rho == 2");
        if (!energy_cfg.differentiable_penalty())
            throw ValidationError("explicit duality-map flow requires kappa > 1");
    }

    const MonitorFloors floors = monitor_floors(initial, flow_cfg.monitors);
    const SpectralMetric metric = SpectralMetric::make(initial.n(), energy_cfg.flow_sigma());

    FlowResult result;
    const PhiParts parts0 = phi_parts(initial, energy_cfg);
    if (!std::isfinite(parts0.phi)) throw ValidationError("flow requires a finite initial energy");

    TrajectorySample first{0.0,   initial, parts0.phi, parts0.energy, parts0.penalty, 0.0,
                           0.0,   bilipschitz_constant(initial), initial.min_speed(),
                           true,  false};
    if (flow_cfg.scheme == FlowScheme::hilbert_explicit) {
        first.slope_dual_norm =
            hilbert_slope(total_energy_gradient(initial, energy_cfg), metric);
    } else {
        first.slope_dual_norm =
            dual_norm_estimate(total_energy_gradient(initial, energy_cfg), energy_cfg.flow_space())
                .value;
    }
    result.samples.push_back(std::move(first));

    result.status = FlowStatus::reached_max_steps;
    try {
        check_monitors(result.samples.back().curve, floors);
        for (int k = 0; k < flow_cfg.max_steps; ++k) {
            if (flow_cfg.stop_grad_tol > 0.0 &&
                result.samples.back().slope_dual_norm <= flow_cfg.stop_grad_tol) {
                result.status = FlowStatus::converged;
                break;
            }
            const TrajectorySample& at = result.samples.back();
            TrajectorySample next =
                flow_cfg.scheme == FlowScheme::hilbert_explicit
                    ? hilbert_flow_step(at.curve, at.t, energy_cfg, flow_cfg, metric, floors)
                    : minimizing_movement_step(at.curve, at.t, energy_cfg, flow_cfg, floors);
            result.samples.push_back(std::move(next));
            if (!result.samples.back().step_accepted) {
                result.status = result.samples.back().inner_stalled ? FlowStatus::inner_stall
                                                                    : FlowStatus::converged;
                result.message = result.samples.back().inner_stalled
                                     ? "inner solver made no progress"
                                     : "";
                break;
            }
        }
    } catch (const MonitorTripped& e) {
        result.status = FlowStatus::monitor_tripped;
        result.message = e.what();
    } catch (const StepFailure& e) {
        result.status = FlowStatus::step_failure;
        result.message = e.what();
    }

    if (result.status == FlowStatus::reached_max_steps && flow_cfg.stop_grad_tol > 0.0 &&
        result.samples.back().slope_dual_norm <= flow_cfg.stop_grad_tol)
        result.status = FlowStatus::converged;

    result.ledger = dissipation_report(result.samples, flow_cfg);
    return result;
}

namespace {

double quad_phi(const std::vector<double>& a, const std::vector<double>& u) {
    detail::KahanSum sum;
    for (size_t i = 0; i < a.size(); ++i) sum.add(a[i] * u[i] * u[i]);
    return 0.5 * sum.get();
}

double quad_slope(const std::vector<double>& a, const std::vector<double>& u) {
    detail::KahanSum sum;
    for (size_t i = 0; i < a.size(); ++i) sum.add(a[i] * u[i] * a[i] * u[i]);
    return std::sqrt(sum.get());
}

// proximal step for the diagonal quadratic: the optimality condition
// a_i v_i + c (v_i - u_i) = 0 with c = tau^{1-theta} r^{theta-2} and
// r = |v - u| reduces to one scalar equation for r, bisected on (0, |Au|]
std::vector<double> quad_proximal(const std::vector<double>& a, const std::vector<double>& u,
                                  double theta, double tau) {
    const double big_r = quad_slope(a, u);
    if (big_r == 0.0) return u;

    auto radius_given_c = [&](double c) {
        detail::KahanSum sum;
        for (size_t i = 0; i < a.size(); ++i) {
            const double d = u[i] * a[i] / (a[i] + c);
            sum.add(d * d);
        }
        return std::sqrt(sum.get());
    };
    double c = 0.0;
    if (theta == 2.0) {
        c = 1.0 / tau;
    } else {
        auto gap = [&](double r) {
            return radius_given_c(std::pow(tau, 1.0 - theta) * std::pow(r, theta - 2.0)) - r;
        };
        double lo = big_r * 1e-12, hi = big_r;
        if (gap(lo) <= 0.0) return u; // displacement below resolvable scale
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (gap(mid) > 0.0 ? lo : hi) = mid;
        }
        c = std::pow(tau, 1.0 - theta) * std::pow(0.5 * (lo + hi), theta - 2.0);
    }
    std::vector<double> v(u.size());
    for (size_t i = 0; i < u.size(); ++i) v[i] = u[i] - u[i] * a[i] / (a[i] + c);
    return v;
}

} // namespace

QuadraticModelRun quadratic_model_flow(const std::vector<double>& diag_a,
                                       const std::vector<double>& u0, double theta, double tau,
                                       int steps, QuadraticScheme scheme) {
    if (diag_a.size() != u0.size() || diag_a.empty())
        throw ValidationError("quadratic model requires matching nonempty coefficient vectors");
    for (double a : diag_a)
        if (a < 0.0) throw ValidationError("quadratic model requires nonnegative coefficients");
    if (!(theta > 1.0)) throw ValidationError("quadratic model requires theta > 1");
    if (!(tau > 0.0)) throw ValidationError("quadratic model requires tau > 0");
    if (steps < 0) throw ValidationError("quadratic model requires steps >= 0");
    if (scheme == QuadraticScheme::exact && theta != 2.0)
        throw ValidationError("the closed-form flow exists only for theta == 2");

    const double beta = theta / (theta - 1.0);
    QuadraticModelRun run;
    std::vector<double> u = u0;
    run.samples.push_back({0.0, u, quad_phi(diag_a, u), quad_slope(diag_a, u), 0.0});

    for (int k = 1; k <= steps; ++k) {
        const double t = k * tau;
        std::vector<double> next(u.size());
        switch (scheme) {
        case QuadraticScheme::exact:
            // sampled from u0 directly so roundoff never compounds
            for (size_t i = 0; i < u.size(); ++i) next[i] = u0[i] * std::exp(-diag_a[i] * t);
            break;
        case QuadraticScheme::explicit_euler: {
            const double g = quad_slope(diag_a, u);
            const double scale = g > 0.0 ? std::pow(g, beta - 2.0) : 0.0;
            for (size_t i = 0; i < u.size(); ++i) next[i] = u[i] - tau * scale * diag_a[i] * u[i];
            break;
        }
        case QuadraticScheme::proximal:
            next = quad_proximal(diag_a, u, theta, tau);
            break;
        }
        detail::KahanSum move;
        for (size_t i = 0; i < u.size(); ++i) {
            const double d = next[i] - u[i];
            move.add(d * d);
        }
        u = std::move(next);
        run.samples.push_back({t, u, quad_phi(diag_a, u), quad_slope(diag_a, u),
                               std::sqrt(move.get()) / tau});
    }

    std::vector<double> t, phi, slope, speed;
    for (const QuadraticSample& s : run.samples) {
        t.push_back(s.t);
        phi.push_back(s.phi);
        slope.push_back(s.slope);
        speed.push_back(s.speed);
    }
    run.ledger = ledger_from_series(t, phi, slope, speed, theta);
    return run;
}

EpsSweepReport eps_sweep(const ClosedCurve& initial, const TotalEnergyConfig& base_cfg,
                         const std::vector<double>& eps_list, const FlowConfig& flow_cfg,
                         double phi_slack) {
    if (eps_list.empty())
        throw ValidationError("eps sweep requires a nonempty list of epsilons");
    for (size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0))
            throw ValidationError("eps sweep requires positive epsilons");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw ValidationError("eps sweep requires strictly decreasing epsilons");
    }

    EpsSweepReport report;
    report.phi_slack = phi_slack;
    report.phi_initial = total_energy(initial, base_cfg);
    if (!std::isfinite(report.phi_initial))
        throw ValidationError("eps sweep requires a finite initial energy");

    for (double eps : eps_list) {
        EpsSweepEntry entry;
        entry.eps = eps;
        try {
            const TotalEnergyConfig cfg =
                TotalEnergyConfig::make(base_cfg.params, base_cfg.kappa, eps);
            entry.result = run_flow(initial, cfg, flow_cfg);
            if (entry.result.status == FlowStatus::step_failure ||
                entry.result.status == FlowStatus::monitor_tripped) {
                entry.quarantined = true;
                entry.failure = flow_status_name(entry.result.status) + ": " + entry.result.message;
            }
        } catch (const Error& e) {
            entry.quarantined = true;
            entry.failure = e.what();
        }
        report.entries.push_back(std::move(entry));
    }

    double worst = -kInf;
    bool any_sample = false;
    for (const EpsSweepEntry& entry : report.entries)
        for (const TrajectorySample& s : entry.result.samples) {
            worst = std::max(worst, s.phi - report.phi_initial);
            any_sample = true;
        }
    report.worst_phi_excess = any_sample ? worst : 0.0;
    report.phi_bound_holds = report.worst_phi_excess <= phi_slack;

    // pairwise trajectory distances in the ambient norm over the shared
    // prefix of step indices
    std::vector<size_t> usable;
    size_t shared = std::numeric_limits<size_t>::max();
    for (size_t i = 0; i < report.entries.size(); ++i) {
        if (report.entries[i].quarantined || report.entries[i].result.samples.empty()) continue;
        usable.push_back(i);
        shared = std::min(shared, report.entries[i].result.samples.size());
    }
    for (size_t ai = 0; ai < usable.size(); ++ai) {
        for (size_t bi = ai + 1; bi < usable.size(); ++bi) {
            PairwiseDistance pd;
            pd.first = static_cast<int>(usable[ai]);
            pd.second = static_cast<int>(usable[bi]);
            for (size_t k = 0; k < shared; ++k) {
                const NodeField& x =
                    report.entries[usable[ai]].result.samples[k].curve.nodes();
                const NodeField& y =
                    report.entries[usable[bi]].result.samples[k].curve.nodes();
                NodeField diff(x.size());
                for (size_t m = 0; m < x.size(); ++m) diff[m] = x[m] - y[m];
                pd.dist.push_back(sobolev_norm(diff, base_cfg.ambient_space));
            }
            report.distances.push_back(std::move(pd));
        }
    }
    return report;
}

void write_trajectory_jsonl(const std::vector<TrajectorySample>& trajectory,
                            const std::string& path, int curve_stride) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    const int stride = std::max(1, curve_stride);
    for (size_t i = 0; i < trajectory.size(); ++i) {
        const TrajectorySample& s = trajectory[i];
        nlohmann::json j;
        j["t"] = s.t;
        j["phi"] = s.phi;
        j["energy"] = s.energy;
        j["penalty"] = s.penalty;
        j["slope_dual_norm"] = s.slope_dual_norm;
        j["metric_speed"] = s.metric_speed;
        j["bilip"] = s.bilip;
        j["min_speed"] = s.min_speed;
        j["step_accepted"] = s.step_accepted;
        j["inner_stalled"] = s.inner_stalled;
        if (i % static_cast<size_t>(stride) == 0 || i + 1 == trajectory.size())
            j["curve"] = nlohmann::json::parse(curve_to_json_text(s.curve));
        out << j.dump() << '\n';
    }
    if (!out) throw ValidationError("failed writing " + path);
}

void write_ledger_csv(const DissipationLedger& ledger, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << "t_start,t_end,dphi,int_g_beta,int_speed_theta,residual\n";
    char line[256];
    for (const LedgerRow& row : ledger.rows) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.t0, row.t1,
                      row.dphi, row.int_g_beta, row.int_speed_theta, row.residual);
        out << line;
    }
    if (!out) throw ValidationError("failed writing " + path);
}

} // namespace knotflow
