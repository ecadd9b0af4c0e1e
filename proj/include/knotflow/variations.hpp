#pragma once

#include "knotflow/energies.hpp"

namespace knotflow {

// Direction field eta: one vector per node, same N and dim as the host curve.
struct Perturbation {
    NodeField values;
};

// Node representative of the energy differential: entry i is N times the
// partial derivative of the discrete energy with respect to node i, so the
// L2 quadrature pairing (1/N) sum_i <values[i], eta[i]> equals the
// directional derivative along eta.
struct GradientField {
    NodeField values;
};

double l2_pairing(const GradientField& grad, const Perturbation& pert);

// deterministic band-limited test direction; coefficients decay like 1/m^2
Perturbation random_smooth_perturbation(int n_nodes, int dim, int max_mode, unsigned seed);

// D_gamma eta at node i: central-difference eta' divided by the node speed
Vec3 arclength_derivative(const ClosedCurve& curve, const Perturbation& pert, int i);

// G1 = int_{I(i,j)} <tau, D_gamma eta> |gamma'| dt over the arc realizing the
// intrinsic distance; equals the exact h-derivative of the discrete arclength
// of that arc under gamma + h eta
double G1(const ClosedCurve& curve, const ArclengthTable& table, int i, int j,
          const Perturbation& pert);

// G2 = int_{I(i,j)} (<D eta1, D eta2> - <tau, D eta1><tau, D eta2>) |gamma'| dt,
// the exact mixed second derivative of the same discrete arclength
double G2(const ClosedCurve& curve, const ArclengthTable& table, int i, int j,
          const Perturbation& pert1, const Perturbation& pert2);

// F1 = alpha (d^{-alpha-1} G1 - |chord|^{-alpha-2} <chord, eta_j - eta_i>),
// the first variation of the two-point integrand
double F1(const ClosedCurve& curve, const ArclengthTable& table, int i, int j,
          const Perturbation& pert, double alpha);

// second variation of the two-point integrand; symmetric in (pert1, pert2)
double F2(const ClosedCurve& curve, const ArclengthTable& table, int i, int j,
          const Perturbation& pert1, const Perturbation& pert2, double alpha);

// full directional derivative of the discrete O'Hara energy assembled from F1
// plus the speed-factor terms
double ohara_first_variation(const ClosedCurve& curve, const OharaParams& params,
                             const Perturbation& pert);

// exact derivative of the discrete quadrature sum with respect to every node,
// for any of the three families
GradientField discrete_gradient(const ClosedCurve& curve, const AnyEnergyParams& params);

// centered difference (E(gamma + h eta) - E(gamma - h eta)) / (2h)
double fd_directional(const ClosedCurve& curve, const AnyEnergyParams& params,
                      const Perturbation& pert, double h);

// A centered difference along pert only probes a derivative when no branch
// choice changes between gamma - h pert and gamma + h pert: every intrinsic
// arc-distance tie must keep its sign and every clamped two-point integrand
// must stay on its side of zero. A straddled kink makes the centered
// quotient average two one-sided slopes, which no step size cures. The
// triple-sum and tangent-point kernels carry no such branches (t^q stays
// C^1 at their clamps for q > 1), so they always report clean.
bool fd_probe_is_clean(const ClosedCurve& curve, const AnyEnergyParams& params,
                       const Perturbation& pert, double h);

} // namespace knotflow
