"""Command-line frontend: build, sample, verify, and demo workflows.

Every command is driven by a self-describing JSON config; flags override
individual fields.  Artifacts (descriptors, CSVs, reports) are emitted
deterministically, so a rerun with the same config and seed reproduces
them byte for byte; the only varying values (wall-clock timings) live in
a separate "meta" section of report files.

Exit codes: 0 ok, 1 verification failure, 2 user error, 3 backend budget
exhausted in strict mode (including evaluation past the shell ceiling).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .counterexamples import (
    EvalMapDemo,
    L1Demo,
    SearchConfig,
    eval_map_falsify,
    find_violation,
    l1_integral,
)
from .envelope import (
    AdditiveEnvelope,
    build_additive,
    build_multiplicative,
    load_descriptor,
)
from .errors import ParseError, SepenvError, ShellCeilingError
from .expr import eval_array, parse
from .geometry import Exhaustion, ProductExhaustion, Schedule
from .pou import SmoothstepProfile
from .shellmax import backend_from_config
from .verify import (
    SamplerConfig,
    check_domination,
    check_multiplicative,
    check_partition,
)

__all__ = ["RunConfig", "main"]

EXIT_OK = 0
EXIT_VERIFICATION_FAILURE = 1
EXIT_USER_ERROR = 2
EXIT_BUDGET_STRICT = 3


@dataclass
class RunConfig:
    """One reproducible run: function, construction knobs, sampling plan."""

    function: str = "abs(t1)*abs(x1)"
    m: int = 1
    n: int = 1
    schedule_m: dict = field(default_factory=lambda: {"kind": "linear", "scale": 1.0})
    schedule_n: dict = field(default_factory=lambda: {"kind": "linear", "scale": 1.0})
    profile: dict = field(default_factory=lambda: {"kind": "poly", "order": 3})
    margin: float = 0.1
    lift: str = "linf"
    backend: dict = field(
        default_factory=lambda: {"kind": "interval", "tol": 1e-6, "max_subdiv": 100000}
    )
    shells: int = 6
    strict: bool = False
    multiplicative: bool = False
    seed: int = 0
    samples: int = 100_000
    mult_samples: int = 10_000
    boundary_fraction: float = 0.2
    max_shell: int = 10
    grid: int = 201
    out: str = "out"
    demo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return RunConfig(**data)

    @staticmethod
    def load(path: str | Path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return RunConfig.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    # -- construction ---------------------------------------------------------

    def expression(self):
        return parse(self.function, self.m, self.n)

    def exhaustion(self) -> ProductExhaustion:
        return ProductExhaustion(
            Exhaustion(Schedule.from_config(self.schedule_m), self.m, "M"),
            Exhaustion(Schedule.from_config(self.schedule_n), self.n, "N"),
        )

    def build(self) -> AdditiveEnvelope:
        return build_additive(
            self.expression(),
            self.exhaustion(),
            SmoothstepProfile.from_config(self.profile),
            backend_from_config(self.backend),
            margin=self.margin,
            lift=self.lift,
            strict_ceiling=self.shells if self.strict else None,
        )

    def build_multiplicative(self):
        return build_multiplicative(
            self.expression(),
            self.exhaustion(),
            SmoothstepProfile.from_config(self.profile),
            backend_from_config(self.backend),
            margin=self.margin,
            lift=self.lift,
            strict_ceiling=self.shells if self.strict else None,
        )

    def sampler(self, samples: int | None = None) -> SamplerConfig:
        return SamplerConfig(
            samples=samples or self.samples,
            boundary_fraction=self.boundary_fraction,
            max_shell=self.max_shell,
            seed=self.seed,
            slack_ulps=4 if self.lift == "l2" else 0,
        )


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "out", None) is not None:
        config.out = args.out
    if getattr(args, "shells", None) is not None:
        config.shells = args.shells
    if getattr(args, "tol", None) is not None:
        config.backend = {**config.backend, "tol": args.tol}
    if getattr(args, "lift", None) is not None:
        config.lift = args.lift
    if getattr(args, "profile", None) is not None:
        text = args.profile
        if text == "exp":
            config.profile = {"kind": "exp"}
        elif text.startswith("poly:"):
            config.profile = {"kind": "poly", "order": int(text.split(":", 1)[1])}
        else:
            raise ValueError(f"profile must be poly:K or exp, got {text!r}")
    return config


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------


def cmd_build(config: RunConfig) -> int:
    env = config.build()
    env.precompute(config.shells)
    desc = env.descriptor()
    desc["config"] = config.to_dict()
    out = _out_dir(config)
    _write_json(out / "envelope.json", desc)

    print(f"function   : {config.function}   (m={config.m}, n={config.n})")
    print(f"profile    : {config.profile}  margin={config.margin}  lift={config.lift}")
    print(f"backend    : {config.backend}")
    print("shell table:")
    for row, r_m, r_n in zip(desc["table"], desc["radii_m"], desc["radii_n"]):
        tag = "certified" if row["certified"] else "heuristic"
        extra = "  (budget exhausted)" if row["budget_exhausted"] else ""
        print(
            f"  A_{row['i']:<2d} = {row['A']:<24.17g} "
            f"K_i radius {r_m:g}, L_i radius {r_n:g}  [{tag}]{extra}"
        )
    print(f"descriptor : {out / 'envelope.json'}")
    if config.strict and any(row["budget_exhausted"] for row in desc["table"]):
        print("strict mode: subdivision budget exhausted", file=sys.stderr)
        return EXIT_BUDGET_STRICT
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def cmd_sample(config: RunConfig, axis: str) -> int:
    out = _out_dir(config)
    desc_path = out / "envelope.json"
    if not desc_path.exists():
        print(f"descriptor not found: {desc_path} (run build first)", file=sys.stderr)
        return EXIT_USER_ERROR
    env = load_descriptor(json.loads(desc_path.read_text(encoding="utf-8")))

    if axis in ("F", "G"):
        covered = env.covered_radius_t() if axis == "F" else env.covered_radius_x()
        limit = math.nextafter(covered, 0.0)
        us = np.linspace(-limit, limit, config.grid)
        dim = env.f.m if axis == "F" else env.f.n
        pts = np.zeros((config.grid, dim))
        pts[:, 0] = us
        vals = env.F_many(pts) if axis == "F" else env.G_many(pts)
        _write_csv(out / f"{axis}.csv", ["u", axis], [us, vals])
        print(f"wrote {out / (axis + '.csv')} ({config.grid} rows)")
        return EXIT_OK

    if axis == "slice":
        if env.f.m != 1 or env.f.n != 1:
            print("slice sampling needs m = n = 1", file=sys.stderr)
            return EXIT_USER_ERROR
        lim_t = math.nextafter(env.covered_radius_t(), 0.0)
        lim_x = math.nextafter(env.covered_radius_x(), 0.0)
        ts = np.linspace(-lim_t, lim_t, config.grid)
        xs = np.linspace(-lim_x, lim_x, config.grid)
        T, X = np.meshgrid(ts, xs, indexing="ij")
        tcol, xcol = T.ravel(), X.ravel()
        fv = eval_array(env.f, tcol[:, None], xcol[:, None])
        bound = env.F_many(tcol[:, None]) + env.G_many(xcol[:, None])
        _write_csv(
            out / "slice.csv",
            ["t", "x", "f", "F_plus_G", "slack"],
            [tcol, xcol, fv, bound, bound - fv],
        )
        print(f"wrote {out / 'slice.csv'} ({tcol.size} rows)")
        return EXIT_OK

    print(f"unknown axis {axis!r} (use F, G or slice)", file=sys.stderr)
    return EXIT_USER_ERROR


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(config: RunConfig) -> int:
    out = _out_dir(config)
    env = config.build()
    reports = [
        check_domination(env, config=config.sampler()),
        check_partition(env.pou_m, config.sampler()),
    ]
    if config.multiplicative:
        menv = config.build_multiplicative()
        reports.append(
            check_multiplicative(menv, config=config.sampler(config.mult_samples))
        )
    all_green = True
    for report in reports:
        _write_json(out / f"report_{report.name}.json", report.to_dict())
        status = "PASS" if report.passed else "FAIL"
        all_green &= report.passed
        print(
            f"{status}  {report.name}: {report.violations} violations "
            f"in {report.samples} samples"
        )
    return EXIT_OK if all_green else EXIT_VERIFICATION_FAILURE


# ---------------------------------------------------------------------------
# demo
# ---------------------------------------------------------------------------


def cmd_demo(config: RunConfig, which: str) -> int:
    out = _out_dir(config)
    opts = dict(config.demo)

    if which == "l1":
        demo = L1Demo(
            radius=float(opts.get("radius", 8.0)),
            panels=int(opts.get("panels", 400)),
        )
        integral = l1_integral(demo)
        search = SearchConfig(
            window=float(opts.get("window", 4.0)),
            band=opts.get("band"),
            margin=float(opts.get("margin", 1e-9)),
        )
        g = parse(str(opts.get("g", "0")), 1, 0)
        h = parse(str(opts.get("h", "0")), 1, 0)
        outcome = find_violation(demo, g, h, search)
        payload = {
            "integral": integral,
            "witness": outcome.witness.to_dict() if outcome.witness else None,
            "budget": outcome.scanned,
            "config": {
                "radius": demo.radius,
                "panels": demo.panels,
                "g": str(g),
                "h": str(h),
                "window": search.window,
            },
        }
        _write_json(out / "l1_report.json", payload)
        print(f"integral over the truncated plane: {integral!r}")
        if outcome.witness:
            w = outcome.witness
            print(
                f"violation witness: f({w.x:g}, {w.y:g}) = {w.f_value:g} "
                f"> g+h = {w.bound:g} (excess {w.excess:g})"
            )
        else:
            print(f"no violation found in {outcome.scanned} scanned points")
        return EXIT_OK

    if which == "evalmap":
        demo = EvalMapDemo(
            g=parse(str(opts.get("candidate", "t1")), 1, 0),
            window=float(opts.get("window", 4.0)),
        )
        outcome = eval_map_falsify(demo)
        payload = {
            "witness": outcome.witness.to_dict() if outcome.witness else None,
            "c0": outcome.c0,
            "c1": outcome.c1,
            "budget": outcome.scanned,
            "config": {"candidate": str(demo.g), "window": demo.window},
        }
        _write_json(out / "evalmap_report.json", payload)
        if outcome.witness:
            w = outcome.witness
            print(
                f"stage {w.stage} witness at y = {w.y:g}: "
                f"{w.lhs:g} > {w.rhs:g}"
            )
        else:
            print(
                f"no witness in window {demo.window} "
                f"({outcome.scanned} evaluations); try a larger window"
            )
        return EXIT_OK

    print(f"unknown demo {which!r} (use l1 or evalmap)", file=sys.stderr)
    return EXIT_USER_ERROR


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sepenv",
        description="Separable envelopes F(t)+G(x) >= f(t,x) with certified "
        "shell maxima, plus boundary-case demos.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--shells", type=int, help="shells to precompute / ceiling")
        p.add_argument("--tol", type=float, help="interval backend tolerance")
        p.add_argument("--profile", help="poly:K or exp")
        p.add_argument("--lift", choices=["linf", "l2"], help="radial lift")
        p.add_argument("--function", help="override the function source")

    p_build = sub.add_parser("build", help="build an envelope descriptor")
    common(p_build)

    p_sample = sub.add_parser("sample", help="emit CSV samples of F, G or a slice")
    common(p_sample)
    p_sample.add_argument("--axis", choices=["F", "G", "slice"], default="F")

    p_verify = sub.add_parser("verify", help="run property checks, write reports")
    common(p_verify)

    p_demo = sub.add_parser("demo", help="run a packaged demonstration")
    common(p_demo)
    p_demo.add_argument("which", choices=["l1", "evalmap"])

    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = RunConfig.load(args.config) if args.config else RunConfig()
        if getattr(args, "function", None):
            config.function = args.function
        config = _apply_overrides(config, args)

        if args.command == "build":
            return cmd_build(config)
        if args.command == "sample":
            return cmd_sample(config, args.axis)
        if args.command == "verify":
            return cmd_verify(config)
        return cmd_demo(config, args.which)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    except ShellCeilingError as exc:
        print(f"strict shell ceiling: {exc}", file=sys.stderr)
        return EXIT_BUDGET_STRICT
    except (OSError, ValueError, KeyError, json.JSONDecodeError, SepenvError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR


if __name__ == "__main__":
    sys.exit(main())
