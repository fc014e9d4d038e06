"""Desk-scale demonstrations of the boundary cases.

Two constructions where no separable bound of the required kind exists:

* the L1 demo: f(t, x) = rho((t - x) / rho(x)) for a positive integrable
  density rho integrates to 1 over the plane, yet admits no integrable
  g, h with f(t, x) <= g(t) + h(x); `find_violation` exhibits concrete
  points beating candidate pairs.

* the evaluation-map demo: f(phi, y) = phi(y) on continuous functions is
  continuous but cannot be dominated by F(phi) + G(y); the falsifier
  refutes any supplied bound oracle F with two test functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import OracleError
from .expr import Binary, Expr, Var, eval_array, eval_interval, parse, substitute
from .intervals import Box, Interval, from_bounds

__all__ = [
    "L1Demo",
    "SearchConfig",
    "ViolationWitness",
    "ScanOutcome",
    "l1_integral",
    "find_violation",
    "EvalMapDemo",
    "TabulatedFunction",
    "FalsifyOutcome",
    "eval_map_falsify",
    "gaussian_density",
    "sup_on_unit_interval",
    "EVAL_MAP_FAMILY",
]

GAUSSIAN_SOURCE = "exp(-(t1^2)/2) / sqrt(2*pi)"


def gaussian_density() -> Expr:
    """Standard Gaussian: positive, continuous, integrable, unit mass."""
    return parse(GAUSSIAN_SOURCE, 1, 0)


def _induced_kernel(rho: Expr) -> tuple[Expr, Expr]:
    """f(t, x) = rho((t - x) / rho(x)) and its sheared form rho(s / rho(x)).

    The sheared form takes (s, x) = (t - x, x) as its two variables; the
    change of coordinates has unit Jacobian.
    """
    t_var = Expr(Var("t", 1), 1, 1)
    x_var = Expr(Var("x", 1), 1, 1)
    rho_at_x = substitute(rho, [x_var], [])
    arg = Expr(Binary("/", Binary("-", t_var.root, x_var.root), rho_at_x.root), 1, 1)
    shear_arg = Expr(Binary("/", t_var.root, rho_at_x.root), 1, 1)
    return substitute(rho, [arg], []), substitute(rho, [shear_arg], [])


@dataclass
class L1Demo:
    """Quadrature and violation-search config for the integrable kernel."""

    rho: Expr = field(default_factory=gaussian_density)
    radius: float = 8.0
    panels: int = 400

    def __post_init__(self):
        if (self.rho.m, self.rho.n) != (1, 0):
            raise ValueError("rho must be a one-variable expression in t1")
        if self.panels < 100:
            raise ValueError("quadrature needs at least 100 panels per axis")
        if not self.radius > 0:
            raise ValueError("truncation radius must be positive")
        enc = eval_interval(self.rho, from_bounds([(-self.radius, self.radius)]))
        if not enc.lo > 0.0:
            # the enclosure may touch zero purely through deep-tail
            # underflow; fall back to a dense pointwise check that rejects
            # genuine sign changes but tolerates underflowed tails (the
            # quadrature skips those panels)
            grid = np.linspace(-self.radius, self.radius, 4001)
            vals = eval_array(self.rho, grid[:, None])
            if (vals < 0.0).any() or not (vals > 0.0).any():
                raise ValueError(
                    f"rho must be positive on the truncated domain, "
                    f"interval lower bound is {enc.lo!r}"
                )
        self.f, self.f_sheared = _induced_kernel(self.rho)

    def rho_at_zero(self) -> float:
        return float(eval_array(self.rho, np.zeros((1, 1)))[0])


def _gauss_panels(edges: np.ndarray, order: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on consecutive panels."""
    gl_x, gl_w = np.polynomial.legendre.leggauss(order)
    lo = edges[:-1, None]
    hi = edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half) + half * gl_x[None, :]
    weights = half * gl_w[None, :]
    return nodes.ravel(), weights.ravel()


def _graded_edges(radius: float, panels_per_side: int) -> np.ndarray:
    """Symmetric panel edges concentrated geometrically toward zero.

    The smallest edge sits around 1e-13 of the radius, so spikes of any
    width above that scale are resolved.
    """
    ratio = (1e-13) ** (1.0 / panels_per_side)
    positive = radius * ratio ** np.arange(panels_per_side, -1, -1)
    return np.concatenate([-positive[::-1], positive])


def l1_integral(demo: L1Demo) -> float:
    """Tensor-product quadrature of f over the truncated plane.

    Integration runs in sheared coordinates (s, x) = (t - x, x): the
    kernel concentrates in a band of width about rho(x) around the
    diagonal, so in these coordinates the narrow direction is always
    s ~ 0, where the graded panels concentrate.  The outer x-axis uses
    uniform panels.  Panels whose density value underflows to zero are
    skipped with a warning.
    """
    R = demo.radius
    x_edges = np.linspace(-R, R, demo.panels + 1)
    x_nodes, x_weights = _gauss_panels(x_edges)
    s_edges = _graded_edges(R, max(demo.panels // 2, 50))
    s_nodes, s_weights = _gauss_panels(s_edges)

    rho_x = eval_array(demo.rho, x_nodes[:, None])
    alive = rho_x > 0.0
    if not alive.all():
        warnings.warn(
            f"density underflowed to zero on {int((~alive).sum())} outer "
            f"panels; they were skipped",
            RuntimeWarning,
        )
    x_nodes, x_weights = x_nodes[alive], x_weights[alive]

    total = 0.0
    chunk = 256
    for lo in range(0, x_nodes.size, chunk):
        xs = x_nodes[lo:lo + chunk]
        ws = x_weights[lo:lo + chunk]
        T = (s_nodes[:, None] + xs[None, :]).ravel()
        X = np.broadcast_to(xs[None, :], (s_nodes.size, xs.size)).ravel()
        vals = eval_array(demo.f, T[:, None], X[:, None])
        inner = s_weights @ vals.reshape(s_nodes.size, xs.size)
        total += float(ws @ inner)
    return total


@dataclass(frozen=True)
class SearchConfig:
    """Diagonal-band scan plan; band half-width defaults to the region
    where the kernel certifiably exceeds half its diagonal value."""

    window: float = 4.0
    x_count: int = 801
    band: float | None = None
    s_count: int = 41
    margin: float = 1e-9


@dataclass(frozen=True)
class ViolationWitness:
    """Point with f(x, y) > g(x) + h(y); x is the first argument of f."""

    x: float
    y: float
    f_value: float
    bound: float
    excess: float

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "f": self.f_value,
            "g+h": self.bound,
            "excess": self.excess,
        }


@dataclass(frozen=True)
class ScanOutcome:
    witness: ViolationWitness | None
    scanned: int

    @property
    def found(self) -> bool:
        return self.witness is not None


def _default_band(demo: L1Demo, window: float) -> float:
    """Halve the band until f >= rho(0)/2 is certified on it."""
    from .errors import DomainAmbiguityError, EnclosureOverflowError

    target = demo.rho_at_zero() / 2.0
    band = 1.0
    for _ in range(80):
        box = Box((Interval(-band, band),), (Interval(-window, window),))
        try:
            if eval_interval(demo.f_sheared, box).lo >= target:
                return band
        except (DomainAmbiguityError, EnclosureOverflowError):
            pass
        band /= 2.0
    return band


def find_violation(
    demo: L1Demo,
    g: Expr,
    h: Expr,
    search: SearchConfig = SearchConfig(),
) -> ScanOutcome:
    """Scan a band around the diagonal for a point with f > g + h + margin.

    g and h are one-variable expressions, certified nonnegative on the
    scanned window by interval lower bound.  The scan order is fixed
    (x ascending, then the diagonal offset ascending), and the returned
    witness is the first point attaining the maximal excess.  A not-found
    outcome reports the scanned budget and proves nothing.
    """
    for name, e in (("g", g), ("h", h)):
        if (e.m, e.n) != (1, 0):
            raise ValueError(f"{name} must be a one-variable expression in t1")
    band = search.band if search.band is not None else _default_band(demo, search.window)
    reach = search.window + band
    for name, e in (("g", g), ("h", h)):
        enc = eval_interval(e, from_bounds([(-reach, reach)]))
        if enc.lo < 0.0:
            raise ValueError(
                f"{name} must be nonnegative on the window; interval lower "
                f"bound is {enc.lo!r}"
            )

    xs = np.linspace(-search.window, search.window, search.x_count)
    ss = np.linspace(-band, band, search.s_count)
    X = np.repeat(xs, ss.size)
    T = X + np.tile(ss, xs.size)
    fv = eval_array(demo.f, T[:, None], X[:, None])
    gv = eval_array(g, T[:, None])
    hv = eval_array(h, X[:, None])
    bound = gv + hv
    excess = fv - bound
    best = int(np.argmax(excess))  # first index attaining the maximum
    scanned = int(T.size)
    if excess[best] <= search.margin:
        return ScanOutcome(None, scanned)
    return ScanOutcome(
        ViolationWitness(
            x=float(T[best]),
            y=float(X[best]),
            f_value=float(fv[best]),
            bound=float(bound[best]),
            excess=float(excess[best]),
        ),
        scanned,
    )


# ---------------------------------------------------------------------------
# Evaluation-map falsifier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TabulatedFunction:
    """A test function tabulated on the search grid."""

    ys: np.ndarray
    values: np.ndarray


def sup_on_unit_interval(tab: TabulatedFunction) -> float:
    """Packaged bound oracle: the sup of the tabulated values on [-1, 1].

    A plausible-looking candidate for F (it is continuous in the
    compact-open topology), which the falsifier nevertheless refutes.
    """
    mask = np.abs(tab.ys) <= 1.0
    if not mask.any():
        raise ValueError("grid does not meet [-1, 1]")
    return float(tab.values[mask].max())


@dataclass
class EvalMapDemo:
    """Candidate G, a bound oracle standing in for F, and a search window."""

    g: Expr
    oracle: Callable[[TabulatedFunction], float] = sup_on_unit_interval
    window: float = 4.0
    grid: int = 0

    def __post_init__(self):
        if (self.g.m, self.g.n) != (1, 0):
            raise ValueError("candidate G must be a one-variable expression in t1")
        if not self.window > 0:
            raise ValueError("window must be nonempty")
        if self.grid <= 1:
            self.grid = int(40 * self.window) + 1


@dataclass(frozen=True)
class FalsifyWitness:
    stage: int
    y: float
    lhs: float
    rhs: float

    def to_dict(self) -> dict:
        return {"stage": self.stage, "y": self.y, "lhs": self.lhs, "rhs": self.rhs}


@dataclass(frozen=True)
class FalsifyOutcome:
    witness: FalsifyWitness | None
    c0: float
    c1: float
    scanned: int

    @property
    def found(self) -> bool:
        return self.witness is not None


def eval_map_falsify(demo: EvalMapDemo) -> FalsifyOutcome:
    """Refute f(phi, y) = phi(y) <= F(phi) + G(y) for the supplied oracle F.

    Stage 1 feeds the oracle phi_0 = exp(G) and searches for y with
    exp(G(y)) > c0 + G(y); stage 2 feeds phi_1 = abs and searches for
    abs(y) > c1 + G(y).  Any continuous G loses one of the two stages
    once the window is large enough; a not-found outcome only means the
    window was too small.
    """
    ys = np.linspace(-demo.window, demo.window, demo.grid)
    gv = eval_array(demo.g, ys[:, None])
    with np.errstate(over="ignore"):
        phi0 = np.exp(gv)
    phi1 = np.abs(ys)

    def ask(values: np.ndarray) -> float:
        try:
            return float(demo.oracle(TabulatedFunction(ys, values)))
        except Exception as exc:
            raise OracleError(f"bound oracle failed: {exc}") from exc

    c0 = ask(phi0)
    c1 = ask(phi1)
    scanned = 2 * ys.size
    stage1 = phi0 > c0 + gv
    if stage1.any():
        i = int(np.argmax(stage1))
        return FalsifyOutcome(
            FalsifyWitness(1, float(ys[i]), float(phi0[i]), float(c0 + gv[i])),
            c0, c1, scanned,
        )
    stage2 = phi1 > c1 + gv
    if stage2.any():
        i = int(np.argmax(stage2))
        return FalsifyOutcome(
            FalsifyWitness(2, float(ys[i]), float(phi1[i]), float(c1 + gv[i])),
            c0, c1, scanned,
        )
    return FalsifyOutcome(None, c0, c1, scanned)


# Family members for the packaged falsifier, each with a window size known
# to contain a witness against the sup-on-[-1,1] oracle.
EVAL_MAP_FAMILY: tuple[tuple[str, float], ...] = (
    ("t1", 2.0),
    ("0", 2.0),
    ("-t1^2", 2.0),
    ("5 - t1^2", 14.0),
    ("sin(t1)", 3.0),
    ("abs(t1)", 2.0),
    ("log(1 + abs(t1))", 3.0),
    ("t1/2 - 3", 2.0),
    ("2*cos(t1)", 3.0),
    ("sqrt(1 + t1^2)", 2.0),
)
