"""Randomized property checks with machine-readable, reproducible reports.

Every check samples deterministically from a seeded generator, counts
violations, and records the worst one.  Reports serialize to a canonical
JSON payload that is byte-identical across reruns with the same seed and
config; wall-clock timing lives in a separate metadata section.

Domination and sandwich checks compare exactly (zero tolerance) by
default: the shell bounds are outward-rounded upper bounds, so the
envelope construction absorbs floating-point noise.  A ulp-slack knob
exists for the l2 radial lift, whose evaluation is not covered by that
argument.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .envelope import (
    AdditiveEnvelope,
    FrozenShellTable,
    MultiplicativeEnvelope,
    load_descriptor,
)
from .expr import Expr, eval_array
from .intervals import Box
from .pou import PartitionOfUnity
from .shellmax import Backend, ShellEntry, certified_max

__all__ = [
    "SamplerConfig",
    "VerificationReport",
    "check_domination",
    "check_partition",
    "check_multiplicative",
    "check_oracle_equivalence",
    "dense_grid_max",
    "scaled_table_copy",
    "constant_table_copy",
    "corrupted_multiplicative",
]


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling plan: uniform box samples plus shell-boundary oversampling."""

    samples: int = 100_000
    radius: float | None = None  # default: the 10th shell radius
    boundary_fraction: float = 0.2
    max_shell: int = 10
    seed: int = 0
    slack_ulps: int = 0

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "radius": self.radius,
            "boundary_fraction": self.boundary_fraction,
            "max_shell": self.max_shell,
            "seed": self.seed,
            "slack_ulps": self.slack_ulps,
        }


@dataclass
class VerificationReport:
    name: str
    samples: int
    violations: int
    worst: dict | None
    seed: int
    elapsed_s: float
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def payload(self) -> dict:
        """Deterministic section: byte-identical across reruns."""
        return {
            "check": self.name,
            "samples": self.samples,
            "violations": self.violations,
            "worst": self.worst,
            "seed": self.seed,
            "stats": self.stats,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, separators=(",", ":"))

    def to_dict(self) -> dict:
        return {"report": self.payload(), "meta": {"elapsed_s": self.elapsed_s}}


def _sample_points(
    rng: np.random.Generator,
    pou: PartitionOfUnity,
    count: int,
    radius: float,
    boundary_fraction: float,
    max_shell: int,
) -> np.ndarray:
    """Uniform points with a fraction rescaled into shell-boundary bands.

    Band targets are clipped to the sampling radius, so the stated radius
    bound holds for every sample.
    """
    dim = pou.exhaustion.dim
    pts = rng.uniform(-radius, radius, size=(count, dim))
    n_boundary = int(boundary_fraction * count)
    if n_boundary == 0:
        return pts
    ex = pou.exhaustion
    shells = rng.integers(1, max_shell + 1, size=n_boundary)
    offsets = rng.uniform(-1.0, 1.0, size=n_boundary)
    radii = np.array([ex.radius(int(i)) for i in shells])
    gaps = radii - np.array([ex.radius(int(i) - 1) for i in shells])
    target = np.clip(radii + offsets * pou.margin * gaps, 0.0, radius)
    block = pts[:n_boundary]
    norms = np.abs(block).max(axis=1)
    norms[norms == 0.0] = 1.0
    pts[:n_boundary] = block * (target / norms)[:, None]
    return pts


def _worst_dict(point_t: np.ndarray, point_x: np.ndarray | None, magnitude: float) -> dict:
    out = {"t": [float(v) for v in np.atleast_1d(point_t)], "magnitude": float(magnitude)}
    if point_x is not None:
        out["x"] = [float(v) for v in np.atleast_1d(point_x)]
    return out


def _apply_slack(bound: np.ndarray, ulps: int) -> np.ndarray:
    for _ in range(ulps):
        bound = np.nextafter(bound, np.inf)
    return bound


def check_domination(
    env: AdditiveEnvelope,
    f: Expr | None = None,
    config: SamplerConfig = SamplerConfig(),
) -> VerificationReport:
    """Count points with f(t, x) > F(t) + G(x); exact comparison."""
    start = time.perf_counter()
    f = f if f is not None else env.f
    rng = np.random.default_rng(config.seed)
    r_t = config.radius or env.exhaustion.m_side.radius(config.max_shell)
    r_x = config.radius or env.exhaustion.n_side.radius(config.max_shell)
    T = _sample_points(rng, env.pou_m, config.samples, r_t,
                       config.boundary_fraction, config.max_shell)
    X = _sample_points(rng, env.pou_n, config.samples, r_x,
                       config.boundary_fraction, config.max_shell)
    fv = eval_array(f, T, X)
    bound = env.F_many(T) + env.G_many(X)
    bound = _apply_slack(bound, config.slack_ulps)
    excess = fv - bound
    mask = excess > 0.0
    violations = int(mask.sum())
    worst = None
    if violations:
        idx = int(np.argmax(np.where(mask, excess, -np.inf)))
        worst = _worst_dict(T[idx], X[idx], excess[idx])
    stats = {
        "min_margin": float(-excess.max()),
        "median_margin": float(np.median(-excess)),
    }
    return VerificationReport(
        "domination", config.samples, violations, worst, config.seed,
        time.perf_counter() - start, stats,
    )


def check_partition(
    pou: PartitionOfUnity,
    config: SamplerConfig = SamplerConfig(),
    tolerance: float = 1e-12,
    max_shell: int = 20,
) -> VerificationReport:
    """Sums-to-one, strict-interior support, and exact vanishing below the
    shell index, on random radii up to the max_shell radius."""
    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    ex = pou.exhaustion
    us = rng.uniform(0.0, ex.radius(max_shell), size=config.samples)
    k, g = pou.weights_array(us)
    total = g + np.where(g == 1.0, 0.0, 1.0 - g)
    defect = np.abs(total - 1.0)
    sum_violations = int((defect > tolerance).sum())

    # support strictly inside the open shell, with half the margin to spare
    radii = np.array([ex.radius(i) for i in range(0, int(k.max()) + 2)])

    def support_edge(idx):
        return radii[idx] - pou.margin * (radii[idx] - radii[idx - 1]) / 2.0

    lead_ok = us < support_edge(k)
    next_active = g < 1.0
    next_ok = ~next_active | (us < support_edge(k + 1))
    support_violations = int((~lead_ok).sum() + (~next_ok).sum())

    # phi_i vanishes exactly for i below the shell index: the lead active
    # index may never fall below it
    shell_idx = np.searchsorted(radii, us, side="right")
    vanish_violations = int((k < shell_idx).sum())

    violations = sum_violations + support_violations + vanish_violations
    worst = None
    if violations:
        idx = int(np.argmax(defect))
        worst = _worst_dict(np.array([us[idx]]), None, defect[idx])
    stats = {
        "max_partition_defect": float(defect.max()),
        "sum_violations": sum_violations,
        "support_violations": support_violations,
        "vanishing_violations": vanish_violations,
    }
    return VerificationReport(
        "partition", config.samples, violations, worst, config.seed,
        time.perf_counter() - start, stats,
    )


def check_multiplicative(
    menv: MultiplicativeEnvelope,
    f: Expr | None = None,
    config: SamplerConfig = SamplerConfig(samples=10_000),
) -> VerificationReport:
    """Sample the sandwich phi*psi <= f <= F*G; both sides exact."""
    start = time.perf_counter()
    f = f if f is not None else menv.f
    env = menv.upper
    rng = np.random.default_rng(config.seed)
    r_t = config.radius or env.exhaustion.m_side.radius(config.max_shell)
    r_x = config.radius or env.exhaustion.n_side.radius(config.max_shell)
    T = _sample_points(rng, env.pou_m, config.samples, r_t,
                       config.boundary_fraction, config.max_shell)
    X = _sample_points(rng, env.pou_n, config.samples, r_x,
                       config.boundary_fraction, config.max_shell)
    fv = eval_array(f, T, X)
    with np.errstate(over="ignore"):
        upper = menv.F_many(T) * menv.G_many(X)
        lower = menv.phi_many(T) * menv.psi_many(X)
    upper = _apply_slack(upper, config.slack_ulps)
    upper_excess = fv - upper
    lower_excess = lower - fv
    mask = (upper_excess > 0.0) | (lower_excess > 0.0)
    violations = int(mask.sum())
    worst = None
    if violations:
        excess = np.maximum(upper_excess, lower_excess)
        idx = int(np.argmax(np.where(mask, excess, -np.inf)))
        worst = _worst_dict(T[idx], X[idx], excess[idx])
    stats = {
        "min_upper_margin": float(-upper_excess.max()),
        "min_lower_margin": float(-lower_excess.max()),
    }
    return VerificationReport(
        "multiplicative", config.samples, violations, worst, config.seed,
        time.perf_counter() - start, stats,
    )


def dense_grid_max(e: Expr, box: Box, per_axis: int = 200) -> float:
    """Brute-force tensor-grid maximum (the oracle side of soundness checks)."""
    axes = [np.linspace(ivl.lo, ivl.hi, per_axis) for ivl in box.intervals]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    nt = len(box.t)
    return float(eval_array(e, pts[:, :nt], pts[:, nt:]).max())


def check_oracle_equivalence(
    backend: Backend,
    corpus: Sequence[tuple[Expr, Box]],
    per_axis: int = 200,
    tight_gap: float = 1e-3,
) -> VerificationReport:
    """Certified upper bound vs dense-grid maximum for every corpus item."""
    start = time.perf_counter()
    violations = 0
    worst = None
    gaps = []
    exhausted = 0
    for e, box in corpus:
        res = certified_max(e, box, backend)
        brute = dense_grid_max(e, box, per_axis)
        gap = res.upper - brute
        if res.budget_exhausted:
            exhausted += 1
        else:
            gaps.append(gap)
        if res.upper < brute or (not res.budget_exhausted and gap > tight_gap):
            violations += 1
            if worst is None or gap > worst["magnitude"]:
                worst = {"expr": str(e), "magnitude": float(brute - res.upper)}
    stats = {
        "corpus_size": len(corpus),
        "budget_exhausted": exhausted,
        "max_gap": float(max(gaps)) if gaps else None,
        "median_gap": float(np.median(gaps)) if gaps else None,
    }
    return VerificationReport(
        "oracle-equivalence", len(corpus), violations, worst, 0,
        time.perf_counter() - start, stats,
    )


# ---------------------------------------------------------------------------
# Harness sensitivity controls: deliberately corrupted envelopes
# ---------------------------------------------------------------------------


def _modified_copy(env: AdditiveEnvelope, transform) -> AdditiveEnvelope:
    desc = env.descriptor()
    desc["table"] = [
        {**row, "A": transform(row["A"]), "certified": False} for row in desc["table"]
    ]
    return load_descriptor(desc)


def scaled_table_copy(env: AdditiveEnvelope, factor: float) -> AdditiveEnvelope:
    """Frozen copy with every shell bound scaled; for harness self-tests."""
    return _modified_copy(env, lambda a: a * factor)


def constant_table_copy(env: AdditiveEnvelope, value: float) -> AdditiveEnvelope:
    """Frozen copy with every shell bound replaced by a constant."""
    return _modified_copy(env, lambda a: value)


def corrupted_multiplicative(
    menv: MultiplicativeEnvelope, lower_value: float = -1.0, shells: int = 11
) -> MultiplicativeEnvelope:
    """Copy whose lower pair was inflated by forcing its shell table negative.

    exp of a negative table makes phi*psi exceed what the reciprocal
    envelope supports, so a correct sandwich checker must flag it.
    """
    menv.upper.precompute(shells)
    menv.lower.precompute(shells)
    bad_lower = constant_table_copy(menv.lower, lower_value)
    frozen_upper = load_descriptor(menv.upper.descriptor())
    return MultiplicativeEnvelope(menv.f, frozen_upper, bad_lower)
