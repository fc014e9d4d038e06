"""Estimator-style front end for envelope construction.

SeparableEnvelope follows the scikit-learn contract: hyperparameters in
__init__, construction in fit, vectorized prediction on (n_samples,
m + n) arrays.  predict returns certified upper bounds, so for an
interval backend `predict(P) >= f(P)` holds at every row; that makes the
estimator usable as a drop-in guard model anywhere a fitted regressor
would go (clone, get_params, and pipelines all work).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .envelope import build_additive, build_multiplicative
from .expr import Expr, parse
from .geometry import Exhaustion, ProductExhaustion, Schedule
from .pou import SmoothstepProfile
from .shellmax import IntervalBB, SampledLipschitz

__all__ = ["SeparableEnvelope"]


class SeparableEnvelope(BaseEstimator):
    """Fit a separable upper bound to a scalar expression.

    Parameters
    ----------
    m, n : factor dimensions (t-side and x-side).
    mode : "additive" for F(t) + G(x), "multiplicative" for the two-sided
        phi(t) psi(x) <= f <= F(t) G(x) form (requires f > 0).
    schedule, scale, ratio : shell radius schedule for both factors.
    profile, order : smoothstep profile of the partition of unity;
        "poly" with order k gives a C^k envelope, "exp" gives C-infinity.
    margin : support margin fraction inside each shell gap.
    lift : radial coordinate, "linf" or "l2".
    backend : "interval" (certified) or "lipschitz" (sampled).
    tol, max_subdiv : interval branch-and-bound settings.
    grid, lipschitz : sampled backend settings.
    shells : optional strict ceiling on shell indices.
    """

    def __init__(
        self,
        m: int = 1,
        n: int = 1,
        mode: str = "additive",
        schedule: str = "linear",
        scale: float = 1.0,
        ratio: float = 2.0,
        profile: str = "poly",
        order: int = 3,
        margin: float = 0.1,
        lift: str = "linf",
        backend: str = "interval",
        tol: float = 1e-6,
        max_subdiv: int = 100_000,
        grid: int = 64,
        lipschitz: float | None = None,
        shells: int | None = None,
    ):
        self.m = m
        self.n = n
        self.mode = mode
        self.schedule = schedule
        self.scale = scale
        self.ratio = ratio
        self.profile = profile
        self.order = order
        self.margin = margin
        self.lift = lift
        self.backend = backend
        self.tol = tol
        self.max_subdiv = max_subdiv
        self.grid = grid
        self.lipschitz = lipschitz
        self.shells = shells

    def _build_backend(self):
        if self.backend == "interval":
            return IntervalBB(tol=self.tol, max_subdiv=self.max_subdiv)
        if self.backend == "lipschitz":
            return SampledLipschitz(grid=self.grid, lipschitz=self.lipschitz)
        raise ValueError(f"unknown backend {self.backend!r}")

    def fit(self, f: str | Expr, y=None):
        """Build the envelope for the expression f (string or parsed)."""
        if self.mode not in ("additive", "multiplicative"):
            raise ValueError(f"unknown mode {self.mode!r}")
        expr = parse(f, self.m, self.n) if isinstance(f, str) else f
        if (expr.m, expr.n) != (self.m, self.n):
            raise ValueError(
                f"expression dimensions ({expr.m}, {expr.n}) do not match "
                f"estimator dimensions ({self.m}, {self.n})"
            )
        sched = Schedule(self.schedule, self.scale, self.ratio)
        exhaustion = ProductExhaustion(
            Exhaustion(sched, self.m, "M"), Exhaustion(sched, self.n, "N")
        )
        prof = SmoothstepProfile(self.profile, self.order)
        build = build_additive if self.mode == "additive" else build_multiplicative
        self.envelope_ = build(
            expr,
            exhaustion,
            prof,
            self._build_backend(),
            margin=self.margin,
            lift=self.lift,
            strict_ceiling=self.shells,
        )
        self.f_ = expr
        self.n_features_in_ = self.m + self.n
        return self

    def _check_fitted(self):
        if not hasattr(self, "envelope_"):
            raise NotFittedError("call fit before predict")

    def _split(self, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        P = check_array(P, ensure_2d=True, dtype=float)
        if P.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} columns (m + n), got {P.shape[1]}"
            )
        return P[:, : self.m], P[:, self.m:]

    def predict(self, P) -> np.ndarray:
        """Certified upper bound at each row [t1..tm, x1..xn]."""
        self._check_fitted()
        T, X = self._split(P)
        env = self.envelope_
        if self.mode == "additive":
            return env.F_many(T) + env.G_many(X)
        with np.errstate(over="ignore"):
            return env.F_many(T) * env.G_many(X)

    def predict_lower(self, P) -> np.ndarray:
        """Certified lower bound phi(t) psi(x); multiplicative mode only."""
        self._check_fitted()
        if self.mode != "multiplicative":
            raise ValueError("lower bounds exist only in multiplicative mode")
        T, X = self._split(P)
        return self.envelope_.phi_many(T) * self.envelope_.psi_many(X)

    def target_values(self, P) -> np.ndarray:
        """The fitted expression evaluated at each row (for slack studies)."""
        self._check_fitted()
        from .expr import eval_array

        T, X = self._split(P)
        return eval_array(self.f_, T, X)
