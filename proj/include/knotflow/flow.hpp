#pragma once

// Time evolution of the penalized energies. Two schemes: an explicit Euler
// discretization of the duality-map flow u' = -J^{-1}(D phi) for the Hilbert
// exponent rho = 2, and a minimizing-movement scheme for general rho that
// solves the proximal problem
//
//     u_{k+1} = argmin_v  phi(v) + (1/theta) tau^{1-theta} ||v - u_k||^theta
//
// by warm-started descent. Both guarantee a nonincreasing phi: the explicit
// scheme by backtracking on a sufficient-decrease test, the proximal scheme
// because v = u_k is always feasible. A dissipation ledger records how far
// each interval sits from the energy dissipation equality
// d phi = -(1/beta) g^beta - (1/theta) |u'|^theta, and runtime monitors abort
// a run whose bi-Lipschitz constant or minimum speed collapses, since every
// statement the flow is built on assumes uniform control of both.

#include <string>
#include <vector>

#include "knotflow/sobolev.hpp"

namespace knotflow {

enum class FlowScheme { hilbert_explicit, minimizing_movement };

// Controls for the proximal inner solver and for the line searches. The
// explicit scheme reuses max_backtracks as its cap on step halvings.
struct InnerControl {
    int max_iters = 200;
    double tol = 1e-7;       // relative gradient-pairing stopping threshold
    double shrink = 0.5;     // backtracking factor
    double armijo = 1e-4;    // sufficient-decrease fraction for the inner descent
    int max_backtracks = 40;
    int stall_patience = 10; // machine-level non-decreases tolerated before stalling
};

// Floors are fractions of the initial curve's values. Fractions above 1 trip
// immediately, which is occasionally useful to force an abort path.
struct MonitorControl {
    double bilip_floor_fraction = 0.1;
    double speed_floor_fraction = 0.1;
};

struct FlowConfig {
    double theta = 2.0;
    double tau = 1e-2;
    FlowScheme scheme = FlowScheme::hilbert_explicit;
    int max_steps = 200;        // 0 records the initial state and stops
    double stop_grad_tol = 0.0; // 0 disables early termination on the slope
    InnerControl inner;
    MonitorControl monitors;

    // conjugate exponent, recomputed so 1/theta + 1/beta = 1 can never drift
    double beta() const { return theta / (theta - 1.0); }
    void validate() const; // throws ValidationError
};

// Absolute monitor floors, frozen from the initial curve of a run.
struct MonitorFloors {
    double bilip = 0.0;
    double min_speed = 0.0;
};
MonitorFloors monitor_floors(const ClosedCurve& initial, const MonitorControl& monitors);

struct TrajectorySample {
    double t = 0.0;
    ClosedCurve curve;
    double phi = 0.0;     // energy + penalty
    double energy = 0.0;
    double penalty = 0.0;
    double slope_dual_norm = 0.0; // g = ||D phi||_* at this curve
    double metric_speed = 0.0;    // ||u_k - u_{k-1}|| / dt in the scheme metric, 0 at t = 0
    double bilip = 0.0;
    double min_speed = 0.0;
    bool step_accepted = true;
    bool inner_stalled = false; // proximal solver hit its stall patience
};

// One row per trajectory interval. The integrals are left-endpoint rectangle
// quadratures; residual = dphi + int_g_beta + int_speed_theta is reported,
// not asserted, and tends to zero at first order in the step size. ratio is
// the pointwise diagnostic g^beta / v^theta, which the continuum flow makes
// identically 1.
struct LedgerRow {
    double t0 = 0.0;
    double t1 = 0.0;
    double dphi = 0.0;
    double int_g_beta = 0.0;
    double int_speed_theta = 0.0;
    double residual = 0.0;
    double ratio = 0.0;
};

struct DissipationLedger {
    std::vector<LedgerRow> rows;
    double cumulative_residual = 0.0;
    double cumulative_abs_residual = 0.0;
};

// Rebuilds the ledger from recorded samples; fewer than two samples give an
// empty ledger.
DissipationLedger dissipation_report(const std::vector<TrajectorySample>& trajectory,
                                     const FlowConfig& cfg);

// One explicit step u+ = u - tau_eff J^{-1}(D phi(u)), halving tau_eff until
//
//     phi(u+) <= phi(u) - 0.1 tau_eff ||D phi||_*^beta.
//
// The returned sample carries the advanced curve and the time t + tau_eff.
// Requires rho = 2 and kappa > 1. Throws StepFailure when max_backtracks
// halvings never reach sufficient decrease, MonitorTripped when the accepted
// curve violates the floors.
TrajectorySample hilbert_flow_step(const ClosedCurve& curve, double t_now,
                                   const TotalEnergyConfig& energy_cfg,
                                   const FlowConfig& flow_cfg, const SpectralMetric& metric,
                                   const MonitorFloors& floors);

// One proximal step. The inner problem is solved by descent on
// psi(v) = phi(v) + (1/theta) tau^{1-theta} ||v - u||^theta with the
// Gagliardo-based flow norm, Barzilai-Borwein step guesses and backtracking;
// +infinity values of phi act as a barrier. Feasibility of v = u makes phi
// nonincreasing for every tau. A solver that stalls returns its best iterate
// with inner_stalled set; step_accepted reports whether the iterate actually
// moved. Time advances by the full tau.
TrajectorySample minimizing_movement_step(const ClosedCurve& curve, double t_now,
                                          const TotalEnergyConfig& energy_cfg,
                                          const FlowConfig& flow_cfg, const MonitorFloors& floors);

enum class FlowStatus {
    converged,         // slope fell below stop_grad_tol
    reached_max_steps,
    step_failure,      // explicit scheme exhausted its halvings
    monitor_tripped,
    inner_stall        // proximal solver could not move at all
};
std::string flow_status_name(FlowStatus status);

struct FlowResult {
    std::vector<TrajectorySample> samples;
    DissipationLedger ledger;
    FlowStatus status = FlowStatus::reached_max_steps;
    std::string message; // failure detail, empty on clean termination
};

// Iterates the configured scheme from the initial curve. The trajectory up
// to a failure is always returned; step exceptions become the result status
// rather than escaping. The slope recorded per sample (and tested against
// stop_grad_tol) is the exact Riesz dual norm for the Hilbert scheme and the
// ball-ascent estimate in the flow norm for minimizing movements.
FlowResult run_flow(const ClosedCurve& initial, const TotalEnergyConfig& energy_cfg,
                    const FlowConfig& flow_cfg);

// Diagonal quadratic model phi(u) = 1/2 <Au, u> on R^n with the Euclidean
// metric, the one setting where every scheme has a closed form to compare
// against: the theta = 2 flow is u(t) = exp(-At) u0, the explicit step is
// u - tau |Au|^{beta-2} Au, and the proximal step solves a scalar secular
// equation (reducing to (I + tau A)^{-1} u at theta = 2). `exact` samples the
// continuum solution, so its ledger residual isolates the quadrature error.
enum class QuadraticScheme { exact, explicit_euler, proximal };

struct QuadraticSample {
    double t = 0.0;
    std::vector<double> u;
    double phi = 0.0;
    double slope = 0.0;
    double speed = 0.0;
};

struct QuadraticModelRun {
    std::vector<QuadraticSample> samples;
    DissipationLedger ledger;
};

QuadraticModelRun quadratic_model_flow(const std::vector<double>& diag_a,
                                       const std::vector<double>& u0, double theta, double tau,
                                       int steps, QuadraticScheme scheme);

// Runs the flow once per epsilon (strictly decreasing, positive), keeping
// everything else fixed. epsilon only enters the flow metric, so phi itself
// is shared across runs and the bound phi <= phi(initial) + slack is checked
// over every recorded sample. Distances between runs are measured in the
// ambient Gagliardo norm at matching step indices. Failures are quarantined
// per entry, never propagated.
struct EpsSweepEntry {
    double eps = 0.0;
    FlowResult result;
    bool quarantined = false;
    std::string failure;
};

struct PairwiseDistance {
    int first = 0;  // indices into entries
    int second = 0;
    std::vector<double> dist; // by shared step index
};

struct EpsSweepReport {
    double phi_initial = 0.0;
    double phi_slack = 0.0;
    bool phi_bound_holds = true;
    double worst_phi_excess = 0.0; // max over samples of phi - phi_initial
    std::vector<EpsSweepEntry> entries;
    std::vector<PairwiseDistance> distances;
};

EpsSweepReport eps_sweep(const ClosedCurve& initial, const TotalEnergyConfig& base_cfg,
                         const std::vector<double>& eps_list, const FlowConfig& flow_cfg,
                         double phi_slack = 1e-8);

// One JSON object per sample; curves are inlined every curve_stride samples
// and always on the final one.
void write_trajectory_jsonl(const std::vector<TrajectorySample>& trajectory,
                            const std::string& path, int curve_stride = 10);
// Columns: t_start,t_end,dphi,int_g_beta,int_speed_theta,residual
void write_ledger_csv(const DissipationLedger& ledger, const std::string& path);

} // namespace knotflow
