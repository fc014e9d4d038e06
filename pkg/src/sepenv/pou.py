"""Locally finite radial partitions of unity subordinate to shell interiors.

The family is built by telescoping nested cutoffs: g_i is 1 on
[0, r_{i-1}], descends through a smoothstep profile on
[r_{i-1}, r_i - margin*(r_i - r_{i-1})], and is 0 beyond; phi_i = g_i -
g_{i-1} with g_0 = 0.  The transition zones of consecutive cutoffs are
disjoint, so at most two phi_i are nonzero at any point and their values
sum to exactly one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Exhaustion, sup_norm

__all__ = ["SmoothstepProfile", "PartitionOfUnity", "make_profile"]


def _poly_coefficients(order: int) -> list[int]:
    """Coefficients c_j of s(u) = u^(order+1) * sum_j c_j u^j.

    s is the unique degree-(2*order+1) polynomial with s(0)=0, s(1)=1 and
    derivatives through `order` vanishing at both endpoints.
    """
    k = order
    return [
        (-1) ** j * math.comb(k + j, j) * math.comb(2 * k + 1, k - j)
        for j in range(k + 1)
    ]


@dataclass(frozen=True)
class SmoothstepProfile:
    """Monotone map of [0, 1] onto [0, 1] with flat endpoints.

    kind "poly" with order k is C^k when extended by constants; kind
    "exp" is C-infinity.  Inputs outside [0, 1] are clamped.
    """

    kind: str = "poly"
    order: int = 3

    def __post_init__(self):
        if self.kind not in ("poly", "exp"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "poly" and self.order < 1:
            raise ValueError("polynomial profile order must be >= 1")

    def __call__(self, u: float) -> float:
        if u <= 0.0:
            return 0.0
        if u >= 1.0:
            return 1.0
        if self.kind == "poly":
            coeffs = _poly_coefficients(self.order)
            acc = 0.0
            for c in reversed(coeffs):
                acc = acc * u + c
            return acc * u ** (self.order + 1)
        a = math.exp(-1.0 / u)
        b = math.exp(-1.0 / (1.0 - u))
        return a / (a + b)

    def many(self, u: np.ndarray) -> np.ndarray:
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        if self.kind == "poly":
            coeffs = _poly_coefficients(self.order)
            acc = np.zeros_like(u)
            for c in reversed(coeffs):
                acc = acc * u + c
            return acc * u ** (self.order + 1)
        out = np.empty_like(u)
        inner = (u > 0.0) & (u < 1.0)
        out[u <= 0.0] = 0.0
        out[u >= 1.0] = 1.0
        ui = u[inner]
        a = np.exp(-1.0 / ui)
        b = np.exp(-1.0 / (1.0 - ui))
        out[inner] = a / (a + b)
        return out

    def to_config(self) -> dict:
        if self.kind == "poly":
            return {"kind": "poly", "order": self.order}
        return {"kind": "exp"}

    @staticmethod
    def from_config(cfg: dict) -> "SmoothstepProfile":
        if cfg.get("kind") == "exp":
            return SmoothstepProfile("exp")
        return SmoothstepProfile("poly", int(cfg.get("order", 3)))


def make_profile(kind: str, order: int = 3) -> SmoothstepProfile:
    return SmoothstepProfile(kind, order) if kind == "poly" else SmoothstepProfile("exp")


@dataclass(frozen=True)
class PartitionOfUnity:
    """Telescoped radial cutoff family over one exhaustion.

    margin is the fraction of each shell gap kept free of support, so
    supp(phi_i) stays strictly inside the open shell U_i.  lift chooses
    the radial coordinate: "linf" matches the box exhaustion, "l2" gives
    smoothness away from the origin in every direction.
    """

    exhaustion: Exhaustion
    profile: SmoothstepProfile = SmoothstepProfile("poly", 3)
    margin: float = 0.1
    lift: str = "linf"

    def __post_init__(self):
        if not 0.0 < self.margin < 1.0:
            raise ValueError("margin must lie strictly between 0 and 1")
        if self.lift not in ("linf", "l2"):
            raise ValueError(f"unknown lift {self.lift!r}")

    # -- radial coordinate ---------------------------------------------------

    def radial(self, p: Sequence[float]) -> float:
        if self.lift == "linf":
            return sup_norm(p)
        return math.sqrt(math.fsum(float(v) ** 2 for v in p))

    def radial_array(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.lift == "linf":
            return np.abs(pts).max(axis=1)
        return np.sqrt((pts * pts).sum(axis=1))

    # -- cutoffs ---------------------------------------------------------------

    def transition(self, i: int) -> tuple[float, float]:
        """Start and end of the descent of g_i (start = r_{i-1})."""
        r_prev = self.exhaustion.radius(i - 1)
        r_i = self.exhaustion.radius(i)
        return r_prev, r_i - self.margin * (r_i - r_prev)

    def cutoff(self, i: int, u: float) -> float:
        """g_i at radial coordinate u; g_0 is identically 0."""
        if i == 0:
            return 0.0
        start, end = self.transition(i)
        if u <= start:
            return 1.0
        if u >= end:
            return 0.0
        return 1.0 - self.profile((u - start) / (end - start))

    # -- the family -----------------------------------------------------------

    def phi(self, i: int, p: Sequence[float]) -> float:
        if i < 1:
            raise ValueError("partition index must be >= 1")
        u = self.radial(p)
        return self.cutoff(i, u) - self.cutoff(i - 1, u)

    def weights(self, p: Sequence[float]) -> list[tuple[int, float]]:
        """Nonzero members at p as (index, value) pairs; values sum to 1."""
        return self.weights_of_radius(self.radial(p))

    def weights_of_radius(self, u: float) -> list[tuple[int, float]]:
        k = self._lead_index(u)
        g = self.cutoff(k, u)
        if g == 1.0:
            return [(k, 1.0)]
        if g == 0.0:
            return [(k + 1, 1.0)]
        return [(k, g), (k + 1, 1.0 - g)]

    def active_indices(self, p: Sequence[float]) -> range:
        """Minimal contiguous index range covering all nonzero phi_i at p."""
        w = self.weights(p)
        return range(w[0][0], w[-1][0] + 1)

    def _lead_index(self, u: float) -> int:
        """Least i with u strictly inside the support of g_i."""
        s = self.exhaustion.shell_index_of_norm(u)
        return s if u < self.transition(s)[1] else s + 1

    # -- vectorized weights (for envelope evaluation over samples) ------------

    def lead_table(self, max_index: int) -> tuple[np.ndarray, np.ndarray]:
        """Arrays of transition starts r_{i-1} and ends for i = 1..max_index."""
        starts = np.array([self.transition(i)[0] for i in range(1, max_index + 1)])
        ends = np.array([self.transition(i)[1] for i in range(1, max_index + 1)])
        return starts, ends

    def weights_array(self, us: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Lead index k and weight phi_k for each radial value.

        The complementary weight on k+1 is 1 - phi_k; on plateaus phi_k
        is exactly 1.
        """
        us = np.asarray(us, dtype=float)
        if us.size == 0:
            return np.zeros(0, dtype=int), np.zeros(0)
        max_i = self.exhaustion.shell_index_of_norm(float(us.max())) + 1
        starts, ends = self.lead_table(max_i)
        k = np.searchsorted(ends, us, side="right") + 1
        start_k = starts[k - 1]
        end_k = ends[k - 1]
        g = np.ones_like(us)
        mid = us > start_k
        tau = (us[mid] - start_k[mid]) / (end_k[mid] - start_k[mid])
        g[mid] = 1.0 - self.profile.many(tau)
        return k, g
