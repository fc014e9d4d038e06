"""Outward-rounded interval arithmetic over boxes.

Every operation returns an interval that encloses the exact real range of
the operation over its input intervals, *and* every value the floating-point
point evaluator can produce from points inside those inputs.  Directed
rounding is not portably available, so each inexact endpoint is widened by
one unit in the last place; exact lattice operations (neg, abs, min, max)
are not widened.

The upper endpoint may be +inf as an overflow sentinel.  A lower endpoint
that would overflow to -inf raises EnclosureOverflowError instead, since
such an enclosure cannot be represented soundly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    DimensionMismatchError,
    DomainAmbiguityError,
    EnclosureOverflowError,
)

_INF = math.inf

# Largest double with exp(x) finite; exp(709.79) overflows.
_EXP_OVERFLOW = 709.782712893384


def _up(v: float) -> float:
    """Next float toward +inf (identity on +inf)."""
    return math.nextafter(v, _INF) if v != _INF else _INF


def _down(v: float) -> float:
    """Next float toward -inf; raises if that leaves the finite range."""
    if v == _INF:
        return math.nextafter(v, -_INF)
    out = math.nextafter(v, -_INF)
    if out == -_INF:
        raise EnclosureOverflowError("lower endpoint underflowed to -inf")
    return out


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; lo finite, hi finite or +inf."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoint is NaN")
        if self.lo == -_INF or self.lo == _INF:
            raise EnclosureOverflowError("lower endpoint must be finite")
        if not self.lo <= self.hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    def __contains__(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        if self.hi == _INF:
            return self.lo
        m = 0.5 * (self.lo + self.hi)
        if not math.isfinite(m):
            m = self.lo + 0.5 * (self.hi - self.lo)
        return m

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    @staticmethod
    def point(v: float) -> "Interval":
        return Interval(v, v)


def _finite_hi(v: float) -> float:
    return _INF if v == _INF or math.isnan(v) else v


def iadd(a: Interval, b: Interval) -> Interval:
    return Interval(_down(a.lo + b.lo), _up(_finite_hi(a.hi + b.hi)))


def isub(a: Interval, b: Interval) -> Interval:
    if b.hi == _INF:
        raise EnclosureOverflowError("subtracting an interval with +inf endpoint")
    return Interval(_down(a.lo - b.hi), _up(a.hi - b.lo))


def ineg(a: Interval) -> Interval:
    if a.hi == _INF:
        raise EnclosureOverflowError("negating an interval with +inf endpoint")
    return Interval(-a.hi, -a.lo)


def _prod(x: float, y: float) -> float:
    # 0 * inf is 0 here: the exact range of products over {0} x [c, inf) is {0}.
    if x == 0.0 or y == 0.0:
        return 0.0
    return x * y


def imul(a: Interval, b: Interval) -> Interval:
    cands = (
        _prod(a.lo, b.lo),
        _prod(a.lo, b.hi),
        _prod(a.hi, b.lo),
        _prod(a.hi, b.hi),
    )
    lo = min(cands)
    hi = max(cands)
    return Interval(_down(lo), _up(_finite_hi(hi)))


def idiv(a: Interval, b: Interval) -> Interval:
    if b.lo <= 0.0 <= b.hi:
        raise DomainAmbiguityError(
            f"division by interval [{b.lo}, {b.hi}] containing zero"
        )
    cands = []
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            if y == _INF:
                cands.append(0.0 if x != _INF else _INF)
            elif x == _INF:
                cands.append(_INF if y > 0 else -_INF)
            else:
                cands.append(x / y)
    lo = min(cands)
    hi = max(cands)
    if lo == -_INF:
        raise EnclosureOverflowError("quotient lower bound overflowed")
    return Interval(_down(lo), _up(_finite_hi(hi)))


def iabs(a: Interval) -> Interval:
    if a.lo >= 0.0:
        return a
    if a.hi <= 0.0:
        return Interval(-a.hi, -a.lo)
    return Interval(0.0, max(-a.lo, _finite_hi(a.hi)))


def iexp(a: Interval) -> Interval:
    lo = 0.0 if a.lo < -_EXP_OVERFLOW else max(0.0, _down(math.exp(a.lo)))
    if a.hi == _INF or a.hi > _EXP_OVERFLOW:
        hi = _INF
    else:
        hi = _up(math.exp(a.hi))
    return Interval(lo, hi)


def ilog(a: Interval) -> Interval:
    if a.lo <= 0.0:
        raise DomainAmbiguityError(
            f"log over interval [{a.lo}, {a.hi}] touching the nonpositive axis"
        )
    hi = _INF if a.hi == _INF else _up(math.log(a.hi))
    return Interval(_down(math.log(a.lo)), hi)


def isqrt(a: Interval) -> Interval:
    if a.lo < 0.0:
        raise DomainAmbiguityError(
            f"sqrt over interval [{a.lo}, {a.hi}] extending below zero"
        )
    hi = _INF if a.hi == _INF else _up(math.sqrt(a.hi))
    return Interval(max(0.0, _down(math.sqrt(a.lo))), hi)


_TWO_PI = 2.0 * math.pi


def _has_critical_point(lo: float, hi: float, phase: float) -> bool:
    """Conservatively decide whether phase + 2*pi*k lies in [lo, hi].

    The containment test is widened proportionally to the magnitude of the
    endpoints, so borderline cases are *included* (which can only widen the
    resulting enclosure, never shrink it).
    """
    slack = 1e-9 * max(1.0, abs(lo), abs(hi))
    k_min = math.floor((lo - slack - phase) / _TWO_PI)
    for k in range(k_min, k_min + max(2, math.ceil((hi - lo) / _TWO_PI) + 2)):
        c = phase + _TWO_PI * k
        if lo - slack <= c <= hi + slack:
            return True
    return False


def _trig(a: Interval, fn, max_phase: float, min_phase: float) -> Interval:
    if a.hi == _INF or a.hi - a.lo >= _TWO_PI:
        return Interval(-1.0, 1.0)
    va, vb = fn(a.lo), fn(a.hi)
    hi = 1.0 if _has_critical_point(a.lo, a.hi, max_phase) else min(1.0, _up(max(va, vb)))
    lo = -1.0 if _has_critical_point(a.lo, a.hi, min_phase) else max(-1.0, _down(min(va, vb)))
    return Interval(lo, hi)


def isin(a: Interval) -> Interval:
    return _trig(a, math.sin, 0.5 * math.pi, -0.5 * math.pi)


def icos(a: Interval) -> Interval:
    return _trig(a, math.cos, 0.0, math.pi)


def _pow_endpoint(x: float, k: int) -> float:
    if x == _INF:
        return _INF if k > 0 else 0.0
    try:
        return math.pow(x, k)
    except OverflowError:
        return math.copysign(_INF, math.pow(math.copysign(1.0, x), k))


def ipow_int(a: Interval, k: int) -> Interval:
    """Tight integer power with the even/odd rule."""
    if k == 0:
        return Interval(1.0, 1.0)
    if k < 0:
        return idiv(Interval(1.0, 1.0), ipow_int(a, -k))
    plo = _pow_endpoint(a.lo, k)
    phi = _pow_endpoint(a.hi, k)
    if k % 2 == 1:
        lo, hi = plo, phi
    elif a.lo >= 0.0:
        lo, hi = plo, phi
    elif a.hi <= 0.0:
        lo, hi = phi, plo
    else:
        lo, hi = 0.0, max(plo, phi)
    if lo == -_INF:
        raise EnclosureOverflowError("power lower bound overflowed")
    if k == 1:
        return Interval(lo, _finite_hi(hi))
    return Interval(_down(lo) if lo != 0.0 else 0.0, _up(_finite_hi(hi)))


def ipow_general(base: Interval, expo: Interval) -> Interval:
    """Real power x^y for nonnegative base enclosures.

    x^y = exp(y*log x) is monotone in each argument separately for positive
    base, so the range is spanned by the four corner values.  Base
    enclosures dipping below zero are ambiguous (complex/undefined branch).
    """
    if base.lo < 0.0:
        raise DomainAmbiguityError(
            f"power with non-integer exponent needs base >= 0, got base lower "
            f"bound {base.lo}"
        )
    if base.lo == 0.0 and expo.lo <= 0.0:
        raise DomainAmbiguityError(
            "power 0^y with exponent interval touching y <= 0"
        )
    cands = []
    for x in (base.lo, base.hi):
        for y in (expo.lo, expo.hi):
            if x == _INF:
                cands.append(_INF if y > 0 else (0.0 if y < 0 else 1.0))
                continue
            try:
                cands.append(math.pow(x, y))
            except OverflowError:
                cands.append(_INF)
    lo = min(cands)
    hi = max(cands)
    return Interval(max(0.0, _down(lo)) if lo != 0.0 else 0.0, _up(_finite_hi(hi)))


def imax(items: Sequence[Interval]) -> Interval:
    return Interval(max(i.lo for i in items), max(i.hi for i in items))


def imin(items: Sequence[Interval]) -> Interval:
    his = [i.hi for i in items]
    return Interval(min(i.lo for i in items), min(his))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box over the t-factor, the x-factor, or their product.

    `t` holds the intervals of the t-side coordinates, `x` those of the
    x-side; either may be empty but not both.
    """

    t: tuple[Interval, ...]
    x: tuple[Interval, ...]

    def __post_init__(self):
        if not self.t and not self.x:
            raise ValueError("box must have at least one coordinate")

    @property
    def side(self) -> str:
        if self.t and self.x:
            return "product"
        return "M" if self.t else "N"

    @property
    def dim(self) -> int:
        return len(self.t) + len(self.x)

    @property
    def intervals(self) -> tuple[Interval, ...]:
        return self.t + self.x

    def coordinate(self, factor: str, index: int) -> Interval:
        """Interval of variable t<index> or x<index> (1-based)."""
        seq = self.t if factor == "t" else self.x
        if not 1 <= index <= len(seq):
            raise DimensionMismatchError(
                f"box has no coordinate {factor}{index} (t-dim {len(self.t)}, "
                f"x-dim {len(self.x)})"
            )
        return seq[index - 1]

    def replace(self, axis: int, interval: Interval) -> "Box":
        """New box with the flat coordinate `axis` replaced."""
        items = list(self.intervals)
        items[axis] = interval
        nt = len(self.t)
        return Box(tuple(items[:nt]), tuple(items[nt:]))

    def split(self, axis: int) -> tuple["Box", "Box"]:
        iv = self.intervals[axis]
        m = iv.mid
        return self.replace(axis, Interval(iv.lo, m)), self.replace(axis, Interval(m, iv.hi))

    def widest_axis(self) -> int:
        widths = [iv.width for iv in self.intervals]
        return max(range(len(widths)), key=widths.__getitem__)

    def midpoint(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        return tuple(iv.mid for iv in self.t), tuple(iv.mid for iv in self.x)

    def contains_point(self, t: Sequence[float], x: Sequence[float]) -> bool:
        if len(t) != len(self.t) or len(x) != len(self.x):
            return False
        return all(v in iv for v, iv in zip(tuple(t) + tuple(x), self.intervals))

    @staticmethod
    def cube(radius: float, t_dim: int, x_dim: int = 0) -> "Box":
        iv = Interval(-radius, radius)
        return Box((iv,) * t_dim, (iv,) * x_dim)

    @staticmethod
    def product(m_box: "Box", n_box: "Box") -> "Box":
        if m_box.side != "M" or n_box.side != "N":
            raise DimensionMismatchError(
                f"product needs an M-side and an N-side box, got "
                f"{m_box.side} and {n_box.side}"
            )
        return Box(m_box.t, n_box.x)


def from_bounds(t_bounds: Iterable[tuple[float, float]],
                x_bounds: Iterable[tuple[float, float]] = ()) -> Box:
    return Box(
        tuple(Interval(lo, hi) for lo, hi in t_bounds),
        tuple(Interval(lo, hi) for lo, hi in x_bounds),
    )
