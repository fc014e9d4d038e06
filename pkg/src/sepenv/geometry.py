"""Nested box exhaustions of Euclidean factors and shell membership.

An exhaustion is the family of closed sup-norm balls K_i = [-r_i, r_i]^d
for a strictly increasing, unbounded radius schedule, with K_0 the empty
set.  Each K_i sits in the interior of K_{i+1}, so the open balls
U_i = int(K_i) cover the whole factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DimensionMismatchError
from .intervals import Box, Interval


class _EmptyShell:
    """Marker for K_0 (the empty set).  Never a Box."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EMPTY_SHELL"


EMPTY_SHELL = _EmptyShell()


@dataclass(frozen=True)
class Schedule:
    """Radius schedule r_i, i >= 1.

    linear:    r_i = scale * i
    geometric: r_i = scale * ratio**i   (ratio > 1)
    """

    kind: str = "linear"
    scale: float = 1.0
    ratio: float = 2.0

    def __post_init__(self):
        if self.kind not in ("linear", "geometric"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError("schedule scale must be positive and finite")
        if self.kind == "geometric" and not (math.isfinite(self.ratio) and self.ratio > 1):
            raise ValueError("geometric schedule needs ratio > 1")

    def radius(self, i: int) -> float:
        if i < 0:
            raise ValueError("shell index must be nonnegative")
        if i == 0:
            return 0.0
        if self.kind == "linear":
            return self.scale * i
        return self.scale * self.ratio**i

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "scale": self.scale}
        if self.kind == "geometric":
            cfg["ratio"] = self.ratio
        return cfg

    @staticmethod
    def from_config(cfg: dict) -> "Schedule":
        return Schedule(
            kind=cfg.get("kind", "linear"),
            scale=cfg.get("scale", 1.0),
            ratio=cfg.get("ratio", 2.0),
        )


def sup_norm(p: Sequence[float]) -> float:
    out = 0.0
    for v in p:
        fv = float(v)
        if not math.isfinite(fv):
            raise ValueError(f"non-finite coordinate {v!r}")
        out = max(out, abs(fv))
    return out


@dataclass(frozen=True)
class Exhaustion:
    """Shells of one factor: side "M" (t variables) or "N" (x variables)."""

    schedule: Schedule
    dim: int
    side: str = "M"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("factor dimension must be >= 1")
        if self.side not in ("M", "N"):
            raise ValueError(f"side must be 'M' or 'N', got {self.side!r}")

    def radius(self, i: int) -> float:
        return self.schedule.radius(i)

    def shell_index(self, p: Sequence[float]) -> int:
        """Least i >= 1 with sup-norm(p) strictly below r_i."""
        if len(p) != self.dim:
            raise DimensionMismatchError(
                f"point of dimension {len(p)} in exhaustion of dimension {self.dim}"
            )
        return self.shell_index_of_norm(sup_norm(p))

    def shell_index_of_norm(self, u: float) -> int:
        if not math.isfinite(u) or u < 0:
            raise ValueError(f"invalid radial coordinate {u!r}")
        s = self.schedule
        if s.kind == "linear":
            i = int(u / s.scale) + 1
        else:
            i = max(1, int(math.log(max(u / s.scale, 1.0), s.ratio)) + 1)
        # Closed-form guess, then exact float comparisons against the radii.
        while i > 1 and u < s.radius(i - 1):
            i -= 1
        while u >= s.radius(i):
            i += 1
        return i

    def shell_box(self, i: int):
        """K_i as a Box; K_0 is the empty-set marker."""
        if i < 0:
            raise ValueError("shell index must be nonnegative")
        if i == 0:
            return EMPTY_SHELL
        r = self.radius(i)
        ivs = (Interval(-r, r),) * self.dim
        return Box(ivs, ()) if self.side == "M" else Box((), ivs)


@dataclass(frozen=True)
class ProductExhaustion:
    """Paired exhaustions sharing one index set: shell i is K_i x L_i."""

    m_side: Exhaustion
    n_side: Exhaustion

    def __post_init__(self):
        if self.m_side.side != "M" or self.n_side.side != "N":
            raise ValueError("product needs an M-side and an N-side exhaustion")

    @property
    def m(self) -> int:
        return self.m_side.dim

    @property
    def n(self) -> int:
        return self.n_side.dim

    def product_box(self, i: int):
        if i == 0:
            return EMPTY_SHELL
        return Box.product(self.m_side.shell_box(i), self.n_side.shell_box(i))


def unit_product_exhaustion(m: int, n: int,
                            schedule_m: Schedule | None = None,
                            schedule_n: Schedule | None = None) -> ProductExhaustion:
    """Default product exhaustion: unit-step linear radii on both factors."""
    return ProductExhaustion(
        Exhaustion(schedule_m or Schedule(), m, "M"),
        Exhaustion(schedule_n or Schedule(), n, "N"),
    )
