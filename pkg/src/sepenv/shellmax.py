"""Certified upper bounds for shell maxima of the clamped function.

A_i bounds max of f+ = max(f, 0) over the i-th product shell from above.
The interval backend runs best-first branch-and-bound on boxes: the top
of the heap (largest enclosure upper bound) is a sound global upper bound
at every step, midpoint samples push the lower bound up, and the search
stops when the gap closes to the tolerance, to floating-point resolution,
or the subdivision budget runs out.  Budget exhaustion keeps the result
certified, just with a wider reported gap.

The sampled-Lipschitz backend is the cheap alternative: grid maximum plus
L times half the grid cell sup-norm diameter.  It is certified only when
L was supplied by the caller rather than estimated.
"""

from __future__ import annotations

import heapq
import itertools
import math
import threading
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import EvalDomainError
from .expr import Const, Expr, Extremum, eval_array, eval_interval, eval_point
from .geometry import ProductExhaustion
from .intervals import Box

__all__ = [
    "IntervalBB",
    "SampledLipschitz",
    "MaxResult",
    "ShellMaxima",
    "certified_max",
    "clamp_nonnegative",
    "estimate_lipschitz",
    "backend_from_config",
]


@dataclass(frozen=True)
class IntervalBB:
    """Branch-and-bound backend config."""

    tol: float = 1e-6
    max_subdiv: int = 100_000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_subdiv < 1:
            raise ValueError("subdivision budget must be >= 1")

    def to_config(self) -> dict:
        return {"kind": "interval", "tol": self.tol, "max_subdiv": self.max_subdiv}


@dataclass(frozen=True)
class SampledLipschitz:
    """Grid-sampling backend config.

    `lipschitz` is the sup-norm Lipschitz constant; pass None to have it
    estimated from sampled pairs (the result is then merely heuristic).
    """

    grid: int = 64
    lipschitz: float | None = None
    estimate_samples: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError("grid density must be >= 2 per axis")
        if self.lipschitz is not None and self.lipschitz < 0:
            raise ValueError("Lipschitz constant must be >= 0")

    def to_config(self) -> dict:
        return {"kind": "lipschitz", "grid": self.grid, "L": self.lipschitz}


Backend = Union[IntervalBB, SampledLipschitz]


def backend_from_config(cfg: dict) -> Backend:
    if cfg.get("kind") == "lipschitz":
        return SampledLipschitz(grid=int(cfg.get("grid", 64)), lipschitz=cfg.get("L"))
    return IntervalBB(
        tol=float(cfg.get("tol", 1e-6)),
        max_subdiv=int(cfg.get("max_subdiv", 100_000)),
    )


@dataclass(frozen=True)
class MaxResult:
    """Outcome of a maximization: lower <= max <= upper when certified."""

    upper: float
    lower: float
    certified: bool
    subdivisions: int
    budget_exhausted: bool


def clamp_nonnegative(e: Expr) -> Expr:
    """max(e, 0) as an expression; evaluation never goes negative."""
    return Expr(Extremum("max", (e.root, Const(0.0))), e.m, e.n)


def _grid_points(box: Box, per_axis: int) -> tuple[np.ndarray, np.ndarray]:
    axes = [np.linspace(ivl.lo, ivl.hi, per_axis) for ivl in box.intervals]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    nt = len(box.t)
    return flat[:, :nt], flat[:, nt:]


def estimate_lipschitz(e: Expr, box: Box, samples: int = 128, seed: int = 0) -> float:
    """Heuristic sup-norm Lipschitz constant from sampled pairs, inflated 2x."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    widths = [ivl.width for ivl in box.intervals]
    if max(widths) == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    lows = np.array([ivl.lo for ivl in box.intervals])
    highs = np.array([ivl.hi for ivl in box.intervals])
    pts = rng.uniform(lows, highs, size=(samples, box.dim))
    nt = len(box.t)
    vals = eval_array(e, pts[:, :nt], pts[:, nt:])
    dist = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2)
    diff = np.abs(vals[:, None] - vals[None, :])
    mask = dist > 0.0
    if not mask.any():
        return 0.0
    return 2.0 * float((diff[mask] / dist[mask]).max())


def _lipschitz_max(e: Expr, box: Box, backend: SampledLipschitz) -> MaxResult:
    t, x = _grid_points(box, backend.grid)
    best = float(eval_array(e, t, x).max())
    spacing = max(ivl.width for ivl in box.intervals) / (backend.grid - 1)
    if backend.lipschitz is None:
        lip = estimate_lipschitz(e, box, backend.estimate_samples, backend.seed)
        certified = False
    else:
        lip = backend.lipschitz
        certified = True
    return MaxResult(
        upper=best + lip * spacing / 2.0,
        lower=best,
        certified=certified,
        subdivisions=0,
        budget_exhausted=False,
    )


def _resolution_floor(upper: float, lower: float) -> float:
    scale = max(abs(upper), abs(lower), 1.0)
    return 4.0 * math.ulp(scale)


def _interval_max(e: Expr, box: Box, backend: IntervalBB) -> MaxResult:
    counter = itertools.count()
    root = eval_interval(e, box)
    lower = eval_point(e, *box.midpoint())
    heap = [(-root.hi, next(counter), box)]
    settled = -math.inf
    subdiv = 0
    exhausted = False
    while heap:
        upper = max(-heap[0][0], settled)
        gap = upper - lower
        if math.isnan(gap) or gap <= backend.tol or gap <= _resolution_floor(upper, lower):
            break
        if settled >= -heap[0][0]:
            break  # the bound is pinned by an unsplittable box
        if subdiv >= backend.max_subdiv:
            exhausted = True
            break
        neg_hi, _, b = heapq.heappop(heap)
        axis = b.widest_axis()
        piece = b.intervals[axis]
        if not piece.lo < piece.mid < piece.hi:
            settled = max(settled, -neg_hi)
            continue
        subdiv += 1
        for child in b.split(axis):
            enc = eval_interval(e, child)
            heapq.heappush(heap, (-enc.hi, next(counter), child))
            lower = max(lower, eval_point(e, *child.midpoint()))
    upper = max(settled, -heap[0][0] if heap else -math.inf)
    return MaxResult(
        upper=upper,
        lower=lower,
        certified=True,
        subdivisions=subdiv,
        budget_exhausted=exhausted,
    )


def certified_max(e: Expr, box: Box, backend: Backend) -> MaxResult:
    """Bracket the maximum of e over the box.

    With the interval backend, upper is a rigorous bound on every value of
    e in the box (including floating-point evaluation of e at any point),
    and lower is the best sampled point value.  Domain-ambiguity errors
    from enclosure evaluation propagate; running out of budget does not.
    """
    if len(box.t) != e.m or len(box.x) != e.n:
        raise EvalDomainError(
            f"box dimensions ({len(box.t)}, {len(box.x)}) do not match "
            f"expression dimensions ({e.m}, {e.n})"
        )
    if isinstance(backend, SampledLipschitz):
        return _lipschitz_max(e, box, backend)
    return _interval_max(e, box, backend)


@dataclass(frozen=True)
class ShellEntry:
    index: int
    value: float
    certified: bool
    budget_exhausted: bool


class ShellMaxima:
    """Lazily computed, monotone table A_1 <= A_2 <= ... of shell bounds.

    A_i = max(A_{i-1}, certified upper bound of f+ over K_i x L_i), with
    A_0 = 0 (the clamp floor is the maximum over the empty shell).  The
    table is memoized; concurrent fills are serialized and idempotent.
    """

    def __init__(self, f: Expr, exhaustion: ProductExhaustion, backend: Backend):
        if (f.m, f.n) != (exhaustion.m, exhaustion.n):
            raise EvalDomainError(
                f"expression dimensions ({f.m}, {f.n}) do not match the "
                f"exhaustion ({exhaustion.m}, {exhaustion.n})"
            )
        self.f = f
        self.f_plus = clamp_nonnegative(f)
        self.exhaustion = exhaustion
        self.backend = backend
        self._entries: list[ShellEntry] = [ShellEntry(0, 0.0, True, False)]
        self._lock = threading.Lock()

    def computed_through(self) -> int:
        return len(self._entries) - 1

    def shell_max(self, i: int) -> float:
        if i < 0:
            raise ValueError("shell index must be nonnegative")
        self._fill(i)
        return self._entries[i].value

    def entry(self, i: int) -> ShellEntry:
        self._fill(i)
        return self._entries[i]

    def entries(self) -> list[ShellEntry]:
        return list(self._entries[1:])

    def _fill(self, i: int) -> None:
        if i < len(self._entries):
            return
        with self._lock:
            while len(self._entries) <= i:
                j = len(self._entries)
                res = certified_max(
                    self.f_plus, self.exhaustion.product_box(j), self.backend
                )
                value = max(self._entries[j - 1].value, res.upper)
                self._entries.append(
                    ShellEntry(j, value, res.certified, res.budget_exhausted)
                )
