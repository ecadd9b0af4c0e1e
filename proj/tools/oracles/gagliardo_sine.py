#!/usr/bin/env python3
"""Exact (s, rho) = (0.5, 2) Gagliardo seminorm of sin(2 pi x) on the circle.

The seminorm squared is the double integral of |f(x) - f(y)|^2 / d(x, y)^2
over the unit torus with the periodic distance d.  For f = sin(2 pi x) the
difference factors as 2 cos(pi (x + y)) sin(pi (x - y)); averaging the
squared cosine over a period leaves, with u = x - y,

    [f]^2 = int_0^1 2 sin(pi u)^2 / min(u, 1 - u)^2 du
          = 4 pi (Si(pi) - 2 / pi),

using int_0^a sin(v)^2 / v^2 dv = Si(2a) - sin(a)^2 / a at a = pi / 2.
The discrete Riemann-sum seminorm converges to this like 1/N.
"""

import math

from scipy.special import sici


def exact() -> float:
    si_pi = sici(math.pi)[0]
    return math.sqrt(4.0 * math.pi * (si_pi - 2.0 / math.pi))


def discrete(n: int) -> float:
    f = [math.sin(2.0 * math.pi * i / n) for i in range(n)]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            gap = abs(i - j) / n
            d = min(gap, 1.0 - gap)
            total += (f[i] - f[j]) ** 2 / d ** 2
    return math.sqrt(total / (n * n))


if __name__ == "__main__":
    ref = exact()
    print(f"exact seminorm = {ref:.16f}")
    for n in (256, 1024, 2048):
        v = discrete(n)
        print(f"N = {n:4d}: {v:.12f}  (deviation {abs(v - ref):.2e})")
