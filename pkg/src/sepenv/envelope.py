"""Separable bounds assembled from shell maxima and partitions of unity.

Additive form: F(t) = sum_i phi_i(t) A_i and G(x) = sum_i chi_i(x) A_i,
where the A_i are certified monotone upper bounds for the clamped
function over the product shells.  At any point at most two terms are
active, and every active index is at least the point's shell index, so
F(t) + G(x) >= A_m + A_n >= f(t, x).

Multiplicative form: exponentiate the additive envelope of f for the
upper pair, and take reciprocals of the exponentiated additive envelope
of 1/f for the lower pair.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    PositivityError,
    ShellCeilingError,
)
from .expr import Binary, Const, Expr, eval_interval, parse, pointwise_max
from .geometry import Exhaustion, ProductExhaustion, Schedule, unit_product_exhaustion
from .intervals import Box, Interval
from .pou import PartitionOfUnity, SmoothstepProfile
from .shellmax import (
    Backend,
    IntervalBB,
    ShellEntry,
    ShellMaxima,
    backend_from_config,
    certified_max,
)

__all__ = [
    "AdditiveEnvelope",
    "MultiplicativeEnvelope",
    "CompactFactorBound",
    "build_additive",
    "build_additive_family",
    "build_multiplicative",
    "compact_factor_bound",
    "load_descriptor",
]

DESCRIPTOR_FORMAT = "sepenv-envelope/1"


class FrozenShellTable:
    """Shell table restored from a descriptor; never recomputes."""

    def __init__(self, entries: Sequence[ShellEntry]):
        self._entries = [ShellEntry(0, 0.0, True, False), *entries]

    def computed_through(self) -> int:
        return len(self._entries) - 1

    def shell_max(self, i: int) -> float:
        if i >= len(self._entries):
            raise ShellCeilingError(i, len(self._entries) - 1)
        return self._entries[i].value

    def entry(self, i: int) -> ShellEntry:
        if i >= len(self._entries):
            raise ShellCeilingError(i, len(self._entries) - 1)
        return self._entries[i]

    def entries(self) -> list[ShellEntry]:
        return list(self._entries[1:])


@dataclass
class AdditiveEnvelope:
    """Callable pair (F, G) with f(t, x) <= F(t) + G(x) pointwise."""

    f: Expr
    exhaustion: ProductExhaustion
    pou_m: PartitionOfUnity
    pou_n: PartitionOfUnity
    maxima: ShellMaxima | FrozenShellTable
    backend_config: dict
    strict_ceiling: int | None = None

    # -- shell plumbing --------------------------------------------------------

    def shell_value(self, i: int) -> float:
        if self.strict_ceiling is not None and i > self.strict_ceiling:
            raise ShellCeilingError(i, self.strict_ceiling)
        return self.maxima.shell_max(i)

    def precompute(self, i_max: int) -> None:
        self.shell_value(i_max)

    def table(self) -> list[ShellEntry]:
        return self.maxima.entries()

    # -- scalar evaluation ------------------------------------------------------

    def _radial_value(self, pou: PartitionOfUnity, u: float) -> float:
        k = pou._lead_index(u)
        g = pou.cutoff(k, u)
        if g == 1.0:
            return self.shell_value(k)
        if g == 0.0:
            return self.shell_value(k + 1)
        a_hi = self.shell_value(k + 1)
        return a_hi - g * (a_hi - self.shell_value(k))

    def eval_F(self, t: Sequence[float]) -> float:
        if len(t) != self.f.m:
            raise DimensionMismatchError(
                f"t has dimension {len(t)}, expected {self.f.m}"
            )
        return self._radial_value(self.pou_m, self.pou_m.radial(t))

    def eval_G(self, x: Sequence[float]) -> float:
        if len(x) != self.f.n:
            raise DimensionMismatchError(
                f"x has dimension {len(x)}, expected {self.f.n}"
            )
        return self._radial_value(self.pou_n, self.pou_n.radial(x))

    def __call__(self, t: Sequence[float], x: Sequence[float]) -> float:
        return self.eval_F(t) + self.eval_G(x)

    # -- vectorized evaluation ----------------------------------------------------

    def _radial_values(self, pou: PartitionOfUnity, us: np.ndarray) -> np.ndarray:
        k, g = pou.weights_array(us)
        if k.size == 0:
            return np.zeros(0)
        # plateau rows only need shell k; transition rows need k+1 as well
        top = int(np.max(np.where(g == 1.0, k, k + 1)))
        self.shell_value(top)
        table = np.array([self.maxima.shell_max(i) for i in range(top + 1)])
        a_lo = table[k]
        a_hi = table[np.minimum(k + 1, top)]
        return np.where(g == 1.0, a_lo, a_hi - g * (a_hi - a_lo))

    def F_many(self, T: np.ndarray) -> np.ndarray:
        T = np.atleast_2d(np.asarray(T, dtype=float))
        if T.shape[1] != self.f.m:
            raise DimensionMismatchError(
                f"t array has {T.shape[1]} columns, expected {self.f.m}"
            )
        return self._radial_values(self.pou_m, self.pou_m.radial_array(T))

    def G_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.f.n:
            raise DimensionMismatchError(
                f"x array has {X.shape[1]} columns, expected {self.f.n}"
            )
        return self._radial_values(self.pou_n, self.pou_n.radial_array(X))

    # -- lead indices (used by the multiplicative wrapper) ------------------------

    def lead_index_t(self, t: Sequence[float]) -> int:
        return self.pou_m._lead_index(self.pou_m.radial(t))

    def lead_index_x(self, x: Sequence[float]) -> int:
        return self.pou_n._lead_index(self.pou_n.radial(x))

    # -- covered radius under a ceiling -------------------------------------------

    def covered_radius_t(self) -> float:
        return self._covered(self.pou_m)

    def covered_radius_x(self) -> float:
        return self._covered(self.pou_n)

    def _covered(self, pou: PartitionOfUnity) -> float:
        ceiling = self.strict_ceiling
        if ceiling is None and isinstance(self.maxima, FrozenShellTable):
            ceiling = self.maxima.computed_through()
        if ceiling is None:
            return math.inf
        return pou.transition(ceiling - 1)[1] if ceiling >= 2 else 0.0

    # -- descriptor ----------------------------------------------------------------

    def descriptor(self) -> dict:
        entries = self.table()
        top = len(entries)
        return {
            "format": DESCRIPTOR_FORMAT,
            "kind": "additive",
            "f": str(self.f),
            "m": self.f.m,
            "n": self.f.n,
            "schedule_m": self.exhaustion.m_side.schedule.to_config(),
            "schedule_n": self.exhaustion.n_side.schedule.to_config(),
            "profile": self.pou_m.profile.to_config(),
            "margin": self.pou_m.margin,
            "lift": self.pou_m.lift,
            "backend": self.backend_config,
            "radii_m": [self.exhaustion.m_side.radius(i) for i in range(1, top + 1)],
            "radii_n": [self.exhaustion.n_side.radius(i) for i in range(1, top + 1)],
            "table": [
                {
                    "i": s.index,
                    "A": s.value,
                    "certified": s.certified,
                    "budget_exhausted": s.budget_exhausted,
                }
                for s in entries
            ],
        }


def _make_pous(
    exhaustion: ProductExhaustion,
    profile: SmoothstepProfile,
    margin: float,
    lift: str,
) -> tuple[PartitionOfUnity, PartitionOfUnity]:
    return (
        PartitionOfUnity(exhaustion.m_side, profile, margin, lift),
        PartitionOfUnity(exhaustion.n_side, profile, margin, lift),
    )


def build_additive(
    f: Expr,
    exhaustion: ProductExhaustion | None = None,
    profile: SmoothstepProfile | None = None,
    backend: Backend | None = None,
    *,
    margin: float = 0.1,
    lift: str = "linf",
    strict_ceiling: int | None = None,
) -> AdditiveEnvelope:
    """Additive envelope of f; shell maxima are computed lazily on demand."""
    exhaustion = exhaustion or unit_product_exhaustion(f.m, f.n)
    profile = profile or SmoothstepProfile("poly", 3)
    backend = backend or IntervalBB()
    pou_m, pou_n = _make_pous(exhaustion, profile, margin, lift)
    maxima = ShellMaxima(f, exhaustion, backend)
    return AdditiveEnvelope(
        f=f,
        exhaustion=exhaustion,
        pou_m=pou_m,
        pou_n=pou_n,
        maxima=maxima,
        backend_config=backend.to_config(),
        strict_ceiling=strict_ceiling,
    )


def build_additive_family(fs: Sequence[Expr], *args, **kwargs) -> AdditiveEnvelope:
    """Envelope dominating every member of a finite family."""
    if not fs:
        raise ValueError("family must be nonempty")
    return build_additive(pointwise_max(fs), *args, **kwargs)


def load_descriptor(desc: dict) -> AdditiveEnvelope:
    """Rebuild a frozen, re-evaluable envelope from its JSON descriptor."""
    if desc.get("format") != DESCRIPTOR_FORMAT:
        raise ValueError(f"unrecognized descriptor format {desc.get('format')!r}")
    f = parse(desc["f"], int(desc["m"]), int(desc["n"]))
    exhaustion = ProductExhaustion(
        Exhaustion(Schedule.from_config(desc["schedule_m"]), f.m, "M"),
        Exhaustion(Schedule.from_config(desc["schedule_n"]), f.n, "N"),
    )
    profile = SmoothstepProfile.from_config(desc["profile"])
    pou_m, pou_n = _make_pous(exhaustion, profile, desc["margin"], desc["lift"])
    entries = [
        ShellEntry(
            int(row["i"]),
            float(row["A"]),
            bool(row["certified"]),
            bool(row.get("budget_exhausted", False)),
        )
        for row in desc["table"]
    ]
    return AdditiveEnvelope(
        f=f,
        exhaustion=exhaustion,
        pou_m=pou_m,
        pou_n=pou_n,
        maxima=FrozenShellTable(entries),
        backend_config=dict(desc["backend"]),
    )


# ---------------------------------------------------------------------------
# Multiplicative (two-sided) envelopes
# ---------------------------------------------------------------------------


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


class MultiplicativeEnvelope:
    """Two-sided multiplicative bounds phi(t) psi(x) <= f <= F(t) G(x).

    The upper pair exponentiates the additive envelope of f; the lower
    pair is the reciprocal of the exponentiated additive envelope of 1/f.
    Positivity of f is certified shell by shell (interval lower bound
    strictly above zero) before any shell is used.
    """

    def __init__(self, f: Expr, upper: AdditiveEnvelope, lower: AdditiveEnvelope):
        self.f = f
        self.upper = upper
        self.lower = lower
        self._checked = 0
        self._lock = threading.Lock()

    def _ensure_positive(self, i: int) -> None:
        if i <= self._checked:
            return
        with self._lock:
            while self._checked < i:
                j = self._checked + 1
                enc = eval_interval(self.f, self.upper.exhaustion.product_box(j))
                if not enc.lo > 0.0:
                    raise PositivityError(j, enc.lo)
                self._checked = j

    def eval_F(self, t: Sequence[float]) -> float:
        self._ensure_positive(self.upper.lead_index_t(t) + 1)
        return _exp(self.upper.eval_F(t))

    def eval_G(self, x: Sequence[float]) -> float:
        self._ensure_positive(self.upper.lead_index_x(x) + 1)
        return _exp(self.upper.eval_G(x))

    def eval_phi(self, t: Sequence[float]) -> float:
        self._ensure_positive(self.lower.lead_index_t(t) + 1)
        return 1.0 / _exp(self.lower.eval_F(t))

    def eval_psi(self, x: Sequence[float]) -> float:
        self._ensure_positive(self.lower.lead_index_x(x) + 1)
        return 1.0 / _exp(self.lower.eval_G(x))

    def _ensure_for_array(self, env: AdditiveEnvelope, pou, pts: np.ndarray) -> None:
        us = pou.radial_array(np.atleast_2d(np.asarray(pts, dtype=float)))
        k, _ = pou.weights_array(us)
        self._ensure_positive(int(k.max()) + 1 if k.size else 1)

    def F_many(self, T: np.ndarray) -> np.ndarray:
        self._ensure_for_array(self.upper, self.upper.pou_m, T)
        with np.errstate(over="ignore"):
            return np.exp(self.upper.F_many(T))

    def G_many(self, X: np.ndarray) -> np.ndarray:
        self._ensure_for_array(self.upper, self.upper.pou_n, X)
        with np.errstate(over="ignore"):
            return np.exp(self.upper.G_many(X))

    def phi_many(self, T: np.ndarray) -> np.ndarray:
        self._ensure_for_array(self.lower, self.lower.pou_m, T)
        with np.errstate(over="ignore"):
            return 1.0 / np.exp(self.lower.F_many(T))

    def psi_many(self, X: np.ndarray) -> np.ndarray:
        self._ensure_for_array(self.lower, self.lower.pou_n, X)
        with np.errstate(over="ignore"):
            return 1.0 / np.exp(self.lower.G_many(X))


def build_multiplicative(
    f: Expr,
    exhaustion: ProductExhaustion | None = None,
    profile: SmoothstepProfile | None = None,
    backend: Backend | None = None,
    *,
    margin: float = 0.1,
    lift: str = "linf",
    strict_ceiling: int | None = None,
) -> MultiplicativeEnvelope:
    """Two-sided envelope of a strictly positive function."""
    exhaustion = exhaustion or unit_product_exhaustion(f.m, f.n)
    recip = Expr(Binary("/", Const(1.0), f.root), f.m, f.n)
    upper = build_additive(
        f, exhaustion, profile, backend,
        margin=margin, lift=lift, strict_ceiling=strict_ceiling,
    )
    lower = build_additive(
        recip, exhaustion, profile, backend,
        margin=margin, lift=lift, strict_ceiling=strict_ceiling,
    )
    env = MultiplicativeEnvelope(f, upper, lower)
    env._ensure_positive(1)
    return env


# ---------------------------------------------------------------------------
# Compact-factor shortcut
# ---------------------------------------------------------------------------


class CompactFactorBound:
    """One-variable bound when one factor is a fixed compact box.

    For compact side "M": G(x) certifiably dominates t -> f(t, x) over the
    box, so f(t, x) <= G(x) for every t in it.  Values are cached per
    evaluation point.
    """

    def __init__(self, f: Expr, compact_side: str, box: Box, backend: Backend):
        if compact_side not in ("M", "N"):
            raise ValueError("compact_side must be 'M' or 'N'")
        expected = f.m if compact_side == "M" else f.n
        if box.side != compact_side or box.dim != expected:
            raise DimensionMismatchError(
                f"compact box must be the {compact_side}-side box of dimension "
                f"{expected}, got side {box.side} of dimension {box.dim}"
            )
        self.f = f
        self.compact_side = compact_side
        self.box = box
        self.backend = backend
        self._cache: dict[tuple[float, ...], float] = {}

    def __call__(self, point: Sequence[float]) -> float:
        key = tuple(float(v) for v in point)
        if key in self._cache:
            return self._cache[key]
        fixed = tuple(Interval.point(v) for v in key)
        if self.compact_side == "M":
            if len(key) != self.f.n:
                raise DimensionMismatchError(
                    f"point has dimension {len(key)}, expected {self.f.n}"
                )
            full = Box(self.box.t, fixed)
        else:
            if len(key) != self.f.m:
                raise DimensionMismatchError(
                    f"point has dimension {len(key)}, expected {self.f.m}"
                )
            full = Box(fixed, self.box.x)
        value = certified_max(self.f, full, self.backend).upper
        self._cache[key] = value
        return value


def compact_factor_bound(
    f: Expr, compact_side: str, box: Box, backend: Backend | None = None
) -> CompactFactorBound:
    return CompactFactorBound(f, compact_side, box, backend or IntervalBB())
