"""Shared test utilities: random expression corpus and brute-force oracles."""

from __future__ import annotations

import math

import numpy as np

from sepenv.expr import (
    Binary,
    Const,
    Expr,
    Extremum,
    Unary,
    Var,
    eval_array,
)
from sepenv.intervals import Box, Interval, from_bounds


def dense_grid_max(e: Expr, box: Box, per_axis: int = 200) -> float:
    """Brute-force maximum over an inclusive tensor grid."""
    axes = [np.linspace(ivl.lo, ivl.hi, per_axis) for ivl in box.intervals]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    nt = len(box.t)
    return float(eval_array(e, pts[:, :nt], pts[:, nt:]).max())


def hermite_step_coefficients(order: int) -> np.ndarray:
    """Smoothstep polynomial coefficients by direct linear solve.

    Solves for p of degree 2k+1 with p(0)=0, p(1)=1 and derivatives
    1..k vanishing at both endpoints.  The endpoint-0 conditions force
    the coefficients of u^0..u^k to zero, leaving a (k+1)x(k+1) system
    from the endpoint-1 conditions.  Returns coefficients of
    u^(k+1)..u^(2k+1).
    """
    k = order
    degrees = list(range(k + 1, 2 * k + 2))
    rows = []
    rhs = []
    rows.append([1.0] * len(degrees))
    rhs.append(1.0)
    for j in range(1, k + 1):
        rows.append([math.perm(d, j) for d in degrees])
        rhs.append(0.0)
    return np.linalg.solve(np.array(rows), np.array(rhs))


def _stencil(order: int, points: int) -> np.ndarray:
    """Weights w_r with sum w_r f(u0 + r h) / h^order -> f^(order)(u0+)."""
    rows = np.array([[r**s for r in range(points)] for s in range(points)], dtype=float)
    rhs = np.zeros(points)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(rows, rhs)


def one_sided_derivative(f, u0: float, order: int, h: float, side: int,
                         points: int) -> float:
    """One-sided finite-difference estimate of f^(order) at u0.

    side +1 uses points to the right, -1 to the left.  With `points`
    nodes the stencil is exact on polynomials of degree < points, so it
    resolves vanishing derivatives without first-order truncation bias.
    """
    w = _stencil(order, points)
    vals = np.array([f(u0 + side * r * h) for r in range(points)])
    est = float(w @ vals) / h**order
    return est * (side**order)


def seam_gap(pou, i: int, order: int, h: float, points: int) -> tuple[float, float]:
    """Largest derivative mismatch across both seams of g_i, and its scale."""
    worst, scale = 0.0, 1.0
    for u0 in pou.transition(i):
        left = one_sided_derivative(lambda u: pou.cutoff(i, u), u0, order, h, -1, points)
        right = one_sided_derivative(lambda u: pou.cutoff(i, u), u0, order, h, +1, points)
        worst = max(worst, abs(left - right))
        scale = max(scale, abs(left), abs(right))
    return worst, scale


def random_total_expr(rng: np.random.Generator, m: int, n: int,
                      depth: int = 3) -> Expr:
    """Random expression from the operator catalog, total on any box.

    Partial operations are only emitted in guarded shapes (positive
    denominators and log/sqrt arguments), so both point and interval
    evaluation succeed on every box.
    """

    def leaf():
        if rng.random() < 0.55:
            if n == 0 or (m > 0 and rng.random() < 0.5):
                return Var("t", int(rng.integers(1, m + 1)))
            return Var("x", int(rng.integers(1, n + 1)))
        return Const(round(float(rng.uniform(-2.0, 2.0)), 3))

    def build(d: int):
        if d <= 0:
            return leaf()
        pick = rng.random()
        if pick < 0.18:
            return Unary(str(rng.choice(["neg", "abs", "sin", "cos"])), build(d - 1))
        if pick < 0.26:
            # scaled exp keeps magnitudes sane for grid comparisons
            return Unary("exp", Binary("*", Const(0.5), build(d - 1)))
        if pick < 0.34:
            return Unary("sqrt", Binary("+", Const(0.5), Unary("abs", build(d - 1))))
        if pick < 0.42:
            return Unary("log", Binary("+", Const(1.0), Unary("abs", build(d - 1))))
        if pick < 0.52:
            return Binary("/", build(d - 1),
                          Binary("+", Const(1.0), Unary("abs", build(d - 1))))
        if pick < 0.60:
            return Binary("^", build(d - 1), Const(float(rng.integers(2, 4))))
        if pick < 0.72:
            return Extremum(str(rng.choice(["max", "min"])),
                            (build(d - 1), build(d - 1)))
        op = str(rng.choice(["+", "-", "*"]))
        return Binary(op, build(d - 1), build(d - 1))

    return Expr(build(depth), m, n)


def random_box(rng: np.random.Generator, m: int, n: int, radius: float) -> Box:
    def bounds(k):
        out = []
        for _ in range(k):
            lo = float(rng.uniform(-radius, radius))
            hi = float(rng.uniform(lo, radius))
            out.append((lo, hi))
        return out

    return from_bounds(bounds(m), bounds(n))


def random_point_in(rng: np.random.Generator, box: Box) -> tuple[tuple, tuple]:
    t = tuple(float(rng.uniform(ivl.lo, ivl.hi)) for ivl in box.t)
    x = tuple(float(rng.uniform(ivl.lo, ivl.hi)) for ivl in box.x)
    return t, x


def shrink_box(rng: np.random.Generator, box: Box) -> Box:
    """A random sub-box of `box`."""
    new_t, new_x = [], []
    for target, ivs in ((new_t, box.t), (new_x, box.x)):
        for ivl in ivs:
            lo = float(rng.uniform(ivl.lo, ivl.hi))
            hi = float(rng.uniform(lo, ivl.hi))
            target.append(Interval(lo, hi))
    return Box(tuple(new_t), tuple(new_x))
