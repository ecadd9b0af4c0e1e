#pragma once

// Fractional Sobolev machinery on periodic node samples: Gagliardo
// seminorms, W^{k+s,rho} norms, the log-strain penalized total energy, and
// a spectral Fourier metric with exact Riesz solves and the theta-duality
// map for the Hilbert subcase.

#include <vector>

#include "knotflow/energies.hpp"
#include "knotflow/variations.hpp"

namespace knotflow {

struct NormSpec {
    int k = 0;        // whole derivatives, 0 or 1
    double s = 0.5;   // fractional order in (0,1)
    double rho = 2.0; // integrability exponent, > 1

    void validate() const; // throws ValidationError
    double order() const { return k + s; }
};

// phi(gamma) = E(gamma) + ||log|gamma'| ||_A^kappa. The strain space A is
// one derivative below the ambient space B in which the curve itself lives;
// epsilon is the extra smoothness carried by the flow metric.
struct TotalEnergyConfig {
    AnyEnergyParams params;
    double kappa = 2.0;
    double epsilon = 0.1;
    NormSpec penalty_space; // A, k = 0
    NormSpec ambient_space; // B, k = 1

    // penalty differentiable only for kappa > 1; kappa = 1 runs are
    // restricted to the minimizing-movement scheme
    bool differentiable_penalty() const { return kappa > 1.0; }
    // exact duality maps are available when the exponent is Hilbert
    bool hilbert() const { return ambient_space.rho == 2.0; }
    // smoothness order of the flow metric space
    double flow_sigma() const { return 1.0 + ambient_space.s + epsilon; }
    NormSpec flow_space() const {
        return NormSpec{1, ambient_space.s + epsilon, ambient_space.rho};
    }

    static TotalEnergyConfig make(const AnyEnergyParams& params, double kappa, double epsilon);
};

// Diagonal Fourier metric with symbol m_k = (1 + (2 pi k)^2)^sigma over
// integer frequencies k in (-N/2, N/2]. Equivalent to the Gagliardo norm of
// the same order; chosen as the flow metric because the Riesz map and its
// inverse are exact diagonal operations.
struct SpectralMetric {
    double sigma = 0.0;
    std::vector<double> symbol;

    int n() const { return static_cast<int>(symbol.size()); }
    static SpectralMetric make(int n, double sigma);
};

// seminorms and norms on uniform periodic samples; vector samples measure
// differences in the Euclidean norm
double lp_norm(const std::vector<double>& f, double rho);
double lp_norm(const NodeField& f, double rho);
double gagliardo_seminorm(const std::vector<double>& f, double s, double rho);
double gagliardo_seminorm(const NodeField& f, double s, double rho);
double sobolev_norm(const std::vector<double>& f, const NormSpec& spec);
double sobolev_norm(const NodeField& f, const NormSpec& spec);

// exact gradient of sobolev_norm(f, spec)^theta with respect to the node
// samples, in the same pairing convention as discrete_gradient. theta > 1
// keeps the power differentiable through f = 0. This is the movement-term
// derivative the proximal scheme descends on.
GradientField norm_power_gradient(const NodeField& f, const NormSpec& spec, double theta);

// spectral inner products and Riesz maps; all identities are exact up to
// roundoff because the metric is diagonal in frequency
double metric_inner(const Perturbation& u, const Perturbation& v, const SpectralMetric& metric);
double metric_norm(const Perturbation& u, const SpectralMetric& metric);
GradientField riesz_apply(const Perturbation& u, const SpectralMetric& metric);
Perturbation riesz_solve(const GradientField& xi, const SpectralMetric& metric);

// J(x) = ||x||^{theta-2} R x and its inverse; J(0) = 0 by continuity
GradientField duality_map_hilbert(const Perturbation& x, double theta,
                                  const SpectralMetric& metric);
Perturbation duality_map_hilbert_inverse(const GradientField& xi, double theta,
                                         const SpectralMetric& metric);

struct DualNormEstimate {
    double value = 0.0;
    bool converged = true;
    int iterations = 0;
};
enum class DualNormMethod { riesz_exact, ball_max };

// riesz_exact: sqrt(<xi, solve(xi)>), the exact dual norm of the metric.
// ball_max: projected-gradient ascent of the pairing over the unit ball,
// a certified lower bound; converged reports whether the improvement fell
// below tolerance before the iteration cap.
DualNormEstimate dual_norm_estimate(const GradientField& xi, const SpectralMetric& metric,
                                    DualNormMethod method);
// ball-max ascent over the unit ball of sobolev_norm(., spec) on node fields
DualNormEstimate dual_norm_estimate(const GradientField& xi, const NormSpec& spec);

// log-strain penalty ||log|gamma'| ||_A^kappa and the total energy; curves
// that fail the regularity or injectivity gates price at +infinity
double strain_penalty(const ClosedCurve& curve, const TotalEnergyConfig& cfg);
double total_energy(const ClosedCurve& curve, const TotalEnergyConfig& cfg);

// node gradient of total_energy, same pairing convention as
// discrete_gradient; throws where the energy is infinite
GradientField total_energy_gradient(const ClosedCurve& curve, const TotalEnergyConfig& cfg);

} // namespace knotflow
