"""Integer-relation probing for rational-independence checks.

Floating point cannot certify rational independence, so we settle for a
lattice-reduction heuristic: embed the numbers in an integer lattice, reduce
it, and reject when a short vector encodes a relation sum(a_i * x_i) ~ 0
whose residual sits at the double-precision noise floor.  Genuine irrationals
leave residuals orders of magnitude above that floor for coefficients within
the probe bound.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import IndependenceHeuristicFailed

COEFF_BOUND = 10**6
SCALE = 10**12
# Residuals below NOISE_FACTOR * (1 + |a|_1) * max|x| are indistinguishable
# from an exact relation at double precision.
NOISE_FACTOR = 32 * np.finfo(float).eps


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _round_half(f: Fraction) -> int:
    return math.floor(f + Fraction(1, 2))


def lll_reduce(rows, delta=Fraction(99, 100)):
    """LLL-reduce integer row vectors in exact (Fraction) arithmetic.

    Meant for the tiny lattices used by the relation probe (dimension <= 5);
    the full Gram-Schmidt recompute per step is cheap at that size.
    """
    b = [[Fraction(int(v)) for v in row] for row in rows]
    n = len(b)

    def gram_schmidt():
        mu = [[Fraction(0)] * n for _ in range(n)]
        bstar = []
        norms = []
        for i in range(n):
            v = list(b[i])
            for j in range(i):
                if norms[j] == 0:
                    continue
                mu[i][j] = _dot(b[i], bstar[j]) / norms[j]
                v = [vi - mu[i][j] * wj for vi, wj in zip(v, bstar[j])]
            bstar.append(v)
            norms.append(_dot(v, v))
        return mu, norms

    mu, norms = gram_schmidt()
    k = 1
    while k < n:
        changed = False
        for j in range(k - 1, -1, -1):
            if abs(mu[k][j]) > Fraction(1, 2):
                r = _round_half(mu[k][j])
                b[k] = [vk - r * vj for vk, vj in zip(b[k], b[j])]
                changed = True
        if changed:
            mu, norms = gram_schmidt()
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            mu, norms = gram_schmidt()
            k = max(k - 1, 1)
    return [[int(v) for v in row] for row in b]


def find_integer_relation(values, coeff_bound=COEFF_BOUND, scale=SCALE):
    """Search for small integer coefficients a with sum(a_i * values_i) ~ 0.

    Returns the coefficient list, or None when every reduced vector within
    the coefficient bound has a residual above the float-noise ceiling.
    """
    xs = [float(v) for v in values]
    if not xs:
        return None
    if not all(math.isfinite(x) for x in xs):
        raise ValueError("relation probe requires finite values")
    n = len(xs)
    rows = []
    for i in range(n):
        row = [0] * n + [int(round(scale * xs[i]))]
        row[i] = 1
        rows.append(row)
    reduced = lll_reduce(rows)
    xmax = max(1.0, max(abs(x) for x in xs))
    for row in reduced:
        a = row[:n]
        if not any(a):
            continue
        if max(abs(c) for c in a) > coeff_bound:
            continue
        residual = abs(math.fsum(c * x for c, x in zip(a, xs)))
        l1 = sum(abs(c) for c in a)
        if residual <= NOISE_FACTOR * (1 + l1) * xmax:
            return list(a)
    return None


def assert_rationally_independent(values, label):
    """Raise IndependenceHeuristicFailed if the probe finds a relation."""
    relation = find_integer_relation(values)
    if relation is not None:
        raise IndependenceHeuristicFailed(
            f"integer relation found for {label}: coefficients {relation}",
            relation=relation,
            values=[float(v) for v in values],
        )
