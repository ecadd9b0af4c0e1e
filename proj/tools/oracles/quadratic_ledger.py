#!/usr/bin/env python3
"""Reference numbers for the dissipation ledger on the diagonal quadratic model.

phi(u) = 1/2 <Au, u> with A = diag(a) on R^n under the theta = 2 metric
gradient flow u' = -Au has the closed form u(t) = exp(-At) u0.  Sampling that
exact solution on a uniform grid and filling the ledger with left-endpoint
rectangle quadratures leaves a residual per interval

    r_k = phi_{k+1} - phi_k + (1/beta) g_k^beta tau + (1/theta) v_k^theta tau

with g_k = |A u_k| and v_k = |u_{k+1} - u_k| / tau.  The cumulative residual
is first order in tau, so halving tau at fixed horizon should halve it.  The
frozen values below pin the C++ ledger arithmetic.
"""

import math

A = (1.0, 3.0)
U0 = (1.0, 0.5)
THETA = 2.0
BETA = THETA / (THETA - 1.0)
HORIZON = 1.0


def exact(t):
    return tuple(u * math.exp(-a * t) for a, u in zip(A, U0))


def phi(u):
    return 0.5 * sum(a * x * x for a, x in zip(A, u))


def slope(u):
    return math.sqrt(sum((a * x) ** 2 for a, x in zip(A, u)))


def cumulative_residual(tau, steps):
    total = 0.0
    for k in range(steps):
        u = exact(k * tau)
        u_next = exact((k + 1) * tau)
        g = slope(u)
        v = math.sqrt(sum((y - x) ** 2 for x, y in zip(u, u_next))) / tau
        r = (phi(u_next) - phi(u)
             + (1.0 / BETA) * g ** BETA * tau
             + (1.0 / THETA) * v ** THETA * tau)
        total += r
    return total


if __name__ == "__main__":
    coarse = cumulative_residual(0.1, 10)
    fine = cumulative_residual(0.05, 20)
    print(f"tau = 0.10, 10 steps: cumulative residual = {coarse:.17g}")
    print(f"tau = 0.05, 20 steps: cumulative residual = {fine:.17g}")
    print(f"refinement ratio = {coarse / fine:.17g}")
