"""Command-line front end: JSON configs in, JSON/CSV reports out.

Exit codes: 0 pass, 1 error, 2 inconclusive or budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .analytic import plan_theorem1, verify_hybrid, zero_hunt
from .assignment import UnimodularAssignment
from .exceptions import ConfigError, UniversalityError
from .primes import DEFAULT_CEILING, set_default_ceiling
from .series import (
    CoefficientSource,
    StandardTypeSeries,
    estimate_order,
    estimate_orthogonality,
    quadratic_character,
)
from .shifts import density_estimate, find_shift, shift_predicate
from .steering import DEFAULT_SLACK, SteeringProblem, steer_function
from .targets import CompactDomain, LaplaceTarget, fit_target, laplace_eval

__all__ = ["RunConfig", "COMMANDS", "main", "run_command", "dumps_report"]

COMMANDS = ("order-estimate", "orthogonality", "steer", "find-shift", "verify", "plan-th1", "zeros", "fit-target")
EXIT_PASS, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2

SECTIONS = ("command", "seed", "series", "targets", "domain", "tolerances", "budgets", "params", "outputs")
TOLERANCE_KEYS = ("eps", "eps2", "slack")
BUDGET_KEYS = ("prime_limit", "T", "t_budget", "samples")
OUTPUT_KEYS = ("report", "csv", "assignment")


# --------------------------------------------------------------------------
# JSON helpers


def _plain(obj: Any) -> Any:
    """Convert numpy and complex values to JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(float(obj.real)), _plain(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps_report(obj: Any) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Parsed configuration; ``emit`` and ``parse`` round-trip byte for byte."""

    command: str
    seed: int = 0
    series: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    domain: dict | None = None
    tolerances: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    # ---- parsing
    @classmethod
    def parse(cls, text: str, base_dir=".") -> "RunConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", exc.msg, exc.lineno) from None
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a JSON object", 1)

        def fail(key: str, msg: str, line_key: str | None = None):
            raise ConfigError(key, msg, _line_of(text, line_key or key.split(".")[-1].split("[")[0]))

        for key in raw:
            if key not in SECTIONS:
                fail(key, f"unknown section (expected one of {', '.join(SECTIONS)})")
        if "command" not in raw:
            raise ConfigError("command", "missing required field", None)
        if raw["command"] not in COMMANDS:
            fail("command", f"unknown command {raw['command']!r}")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            fail("seed", "must be a non-negative integer")
        for name, keys in (("tolerances", TOLERANCE_KEYS), ("budgets", BUDGET_KEYS), ("outputs", OUTPUT_KEYS)):
            sec = raw.get(name, {})
            if not isinstance(sec, dict):
                fail(name, "must be an object")
            for k, v in sec.items():
                if k not in keys:
                    fail(f"{name}.{k}", f"unknown key (expected one of {', '.join(keys)})", k)
                if name == "outputs":
                    if not isinstance(v, str) or not v or "/" in v:
                        fail(f"{name}.{k}", "must be a plain file name", k)
                elif not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
                    fail(f"{name}.{k}", "must be a positive number", k)
        if not isinstance(raw.get("params", {}), dict):
            fail("params", "must be an object")
        cfg = cls(
            command=raw["command"], seed=seed,
            series=raw.get("series", []), targets=raw.get("targets", []),
            domain=raw.get("domain"), tolerances=raw.get("tolerances", {}),
            budgets=raw.get("budgets", {}), params=raw.get("params", {}),
            outputs=raw.get("outputs", {}), base_dir=Path(base_dir),
        )
        # build everything once so bad values surface at parse time
        try:
            cfg.build_series()
            cfg.build_targets()
            cfg.build_domain()
        except ConfigError as exc:
            if exc.line is None:
                exc = ConfigError(exc.field, exc.message, _line_of(text, exc.field.split(".")[-1].split("[")[0]))
            raise exc from None
        for key, path in cfg.referenced_files().items():
            if not path.exists():
                fail(key, f"referenced file {str(path)!r} does not exist", key.split(".")[-1])
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError("--config", str(exc), None) from None
        return cls.parse(text, path.parent)

    def to_dict(self) -> dict:
        out = {"command": self.command, "seed": self.seed}
        for name in ("series", "targets", "tolerances", "budgets", "params", "outputs"):
            val = getattr(self, name)
            if val:
                out[name] = val
        if self.domain is not None:
            out["domain"] = self.domain
        return out

    def emit(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    # ---- typed views
    def referenced_files(self) -> dict:
        refs = {}
        for i, spec in enumerate(self.series):
            if isinstance(spec, dict) and spec.get("kind") == "file":
                refs[f"series[{i}].path"] = self.base_dir / spec["path"]
        for i, spec in enumerate(self.targets):
            if isinstance(spec, dict) and spec.get("kind") == "table-file":
                refs[f"targets[{i}].path"] = self.base_dir / spec["path"]
        if "omega" in self.params:
            refs["params.omega"] = self.base_dir / self.params["omega"]
        return refs

    def build_series(self) -> list[StandardTypeSeries]:
        out = []
        for i, spec in enumerate(self.series):
            where = f"series[{i}]"
            if not isinstance(spec, dict) or "kind" not in spec:
                raise ConfigError(where, "each series needs a 'kind'")
            extra = set(spec) - {"kind", "shift", "modulus", "table", "d", "path", "majorant",
                                 "multiplier", "additive"}
            if extra:
                raise ConfigError(f"{where}.{sorted(extra)[0]}", "unknown series key")
            kind = spec["kind"]
            try:
                if kind == "zeta":
                    src = CoefficientSource.zeta()
                elif kind == "shifted-zeta":
                    src = CoefficientSource.shifted_zeta(float(spec["shift"]))
                elif kind == "character":
                    src = CoefficientSource.character(int(spec["modulus"]), [_cx(v) for v in spec["table"]])
                elif kind == "quadratic":
                    src = quadratic_character(int(spec["d"]))
                elif kind == "zero":
                    src = CoefficientSource.zero()
                elif kind == "file":
                    path = self.base_dir / spec["path"]
                    if not path.exists():
                        raise ConfigError(f"{where}.path", f"referenced file {str(path)!r} does not exist")
                    src = CoefficientSource.from_file(path, spec.get("majorant"))
                else:
                    raise ConfigError(f"{where}.kind", f"unknown series kind {kind!r}")
                mult = tuple(_cx(v) for v in spec.get("multiplier", []))
                add = tuple(_cx(v) for v in spec.get("additive", []))
                out.append(StandardTypeSeries(src, mult, add))
            except KeyError as exc:
                raise ConfigError(f"{where}.{exc.args[0]}", "missing required field") from None
            except (TypeError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(where, str(exc)) from None
        return out

    def build_targets(self) -> list[LaplaceTarget]:
        out = []
        for i, spec in enumerate(self.targets):
            where = f"targets[{i}]"
            if not isinstance(spec, dict) or "kind" not in spec:
                raise ConfigError(where, "each target needs a 'kind'")
            kind = spec["kind"]
            try:
                C = _cx(spec.get("C", 0.0))
                if kind == "constant":
                    t = LaplaceTarget.constant(C)
                elif kind == "flat":
                    t = LaplaceTarget.flat(_cx(spec["value"]), float(spec["A"]), float(spec["B"]), C)
                elif kind == "exp-decay":
                    t = LaplaceTarget.exp_decay(float(spec["rate"]), float(spec["A"]), float(spec["B"]), C)
                    if "scale" in spec:
                        t = t.scaled(_cx(spec["scale"]))
                elif kind == "table":
                    t = LaplaceTarget(C, float(spec["A"]), float(spec["B"]),
                                      np.array([_cx(v) for v in spec["samples"]]))
                elif kind == "table-file":
                    path = self.base_dir / spec["path"]
                    if not path.exists():
                        raise ConfigError(f"{where}.path", f"referenced file {str(path)!r} does not exist")
                    t = LaplaceTarget.from_table(path, C)
                else:
                    raise ConfigError(f"{where}.kind", f"unknown target kind {kind!r}")
                out.append(t)
            except KeyError as exc:
                raise ConfigError(f"{where}.{exc.args[0]}", "missing required field") from None
            except (TypeError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(where, str(exc)) from None
        return out

    def build_domain(self) -> CompactDomain | None:
        d = self.domain
        if d is None:
            return None
        if not isinstance(d, dict) or "shape" not in d:
            raise ConfigError("domain", "domain needs a 'shape'")
        try:
            if d["shape"] == "rectangle":
                return CompactDomain.rectangle(*map(float, d["sigma"]), *map(float, d["tau"]), float(d["h"]))
            if d["shape"] == "disk":
                return CompactDomain.disk(_cx(d["center"]), float(d["radius"]), float(d["h"]))
        except KeyError as exc:
            raise ConfigError(f"domain.{exc.args[0]}", "missing required field") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError("domain", str(exc)) from None
        raise ConfigError("domain.shape", f"unknown shape {d['shape']!r}")

    def pins(self) -> dict:
        raw = self.params.get("pins", {})
        try:
            return {int(p): _cx(v) for p, v in raw.items()}
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError("params.pins", f"pins must map primes to [re, im]: {exc}") from None

    def require(self, section: str, key: str):
        sec = getattr(self, section)
        if key not in sec:
            raise ConfigError(f"{section}.{key}", f"required by {self.command}")
        return sec[key]


def _cx(v) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ValueError(f"expected a number or [re, im], got {v!r}")


# --------------------------------------------------------------------------
# subcommands


def _euler_sources(series: list[StandardTypeSeries], command: str) -> list[CoefficientSource]:
    if any(not s.is_pure_euler for s in series):
        raise ConfigError("series", f"{command} works on Euler products; use plan-th1 for multiplier/additive parts")
    return [s.euler_part for s in series]


def _problem(cfg: RunConfig, prime_limit: int) -> SteeringProblem:
    series = cfg.build_series()
    targets = cfg.build_targets()
    K = cfg.build_domain()
    if K is None:
        raise ConfigError("domain", f"required by {cfg.command}")
    p = cfg.params
    return SteeringProblem(
        _euler_sources(series, cfg.command), targets, K,
        delta=float(cfg.require("params", "delta")), eps=float(cfg.require("tolerances", "eps")),
        lam=float(p.get("lambda", 1.0)), Lam=float(p.get("Lambda", 1.0)), pins=cfg.pins(),
        M=int(p.get("M", 4)), seed=cfg.seed, mode=p.get("mode", "log"), prime_limit=prime_limit,
        slack=float(cfg.tolerances.get("slack", DEFAULT_SLACK)), restarts=int(p.get("restarts", 16)),
    )


def _cmd_order_estimate(cfg, ctx):
    bands = [tuple(b) for b in cfg.params.get("bands", [[10**3, 10**6], [10**4, 10**8]])]
    _check_bands(bands, ctx["prime_limit"])
    results = [estimate_order(s.euler_part, bands, tail_cutoff=int(cfg.params.get("tail_cutoff", 10**5))).as_dict()
               for s in cfg.build_series()]
    code = EXIT_INCONCLUSIVE if any(r["degenerate"] for r in results) else EXIT_PASS
    return {"estimates": results}, {}, code


def _check_bands(bands, limit):
    for lo, hi in bands:
        if not (2 <= lo < hi):
            raise ConfigError("params.bands", f"band [{lo}, {hi}) must satisfy 2 <= lo < hi")


def _cmd_orthogonality(cfg, ctx):
    series = cfg.build_series()
    if len(series) != 2:
        raise ConfigError("series", "orthogonality needs exactly two series")
    bands = [tuple(b) for b in cfg.require("params", "bands")]
    _check_bands(bands, ctx["prime_limit"])
    prof = estimate_orthogonality(series[0].euler_part, series[1].euler_part, bands)
    expect = cfg.params.get("expect")
    code = EXIT_PASS
    if expect == "decay" and prof.decay_ratio > 0.5:
        code = EXIT_INCONCLUSIVE
    if expect == "no-decay" and prof.trend != "non-decaying":
        code = EXIT_INCONCLUSIVE
    return {"profile": prof.as_dict(), "expect": expect}, {}, code


def _cmd_steer(cfg, ctx):
    problem = _problem(cfg, ctx["prime_limit"])
    rep = steer_function(problem)
    files = {"assignment": ("assignment", rep.omega.dumps())}
    return ({"problem": problem.describe(), "steering": rep.as_dict()}, files,
            EXIT_PASS if rep.passed else EXIT_INCONCLUSIVE, rep.ledger)


def _cmd_find_shift(cfg, ctx):
    eps = float(cfg.require("tolerances", "eps"))
    p = cfg.params
    targets = cfg.pins()
    if not targets:
        primes = [int(q) for q in cfg.require("params", "primes")]
        om = UnimodularAssignment.random(cfg.seed)
        targets = {q: om(q) for q in primes}
    window = find_shift(targets, eps, float(p.get("T_lo", 0.0)), float(p.get("T_hi", 1e5)),
                        max_hits=int(p.get("max_hits", 16)))
    out = {"targets": {str(q): v for q, v in sorted(targets.items())}, "window": window.as_dict()}
    if "T" in cfg.budgets:
        dens = density_estimate(shift_predicate(targets, eps), float(cfg.budgets["T"]),
                                int(cfg.budgets.get("samples", 10**5)), cfg.seed)
        out["density"] = dens.as_dict()
    rows = ["t,max_deviation"] + [f"{t!r},{d!r}" for t, d in zip(window.hits, window.deviations)]
    files = {"csv": ("hits", "\n".join(rows) + "\n")}
    return out, files, EXIT_PASS if window.found else EXIT_INCONCLUSIVE


def _cmd_verify(cfg, ctx):
    problem = _problem(cfg, ctx["prime_limit"])
    p = cfg.params
    omega = UnimodularAssignment.load(cfg.base_dir / p["omega"]) if "omega" in p else None
    t = float(p["t"]) if "t" in p else None
    if omega is None and t is None:
        raise ConfigError("params", "verify needs params.omega (assignment file) or params.t")
    target_values = None
    if p.get("self_consistent"):
        # targets sampled from the evaluator itself
        first = verify_hybrid(problem, omega, t, N1=int(p.get("N1", 1000)))
        target_values = first.log_values
    rep = verify_hybrid(problem, omega, t, target_values=target_values, N1=int(p.get("N1", 1000)))
    return ({"problem": problem.describe(), "verification": rep.as_dict()}, {},
            EXIT_PASS if rep.passed else EXIT_INCONCLUSIVE, rep.ledger)


def _cmd_plan_th1(cfg, ctx):
    series = cfg.build_series()
    targets = cfg.build_targets()
    K = cfg.build_domain()
    if K is None:
        raise ConfigError("domain", "required by plan-th1")
    p = cfg.params
    consts = [_cx(c) for c in p["constants"]] if "constants" in p else None
    plan = plan_theorem1(series, targets, K, float(cfg.require("tolerances", "eps")),
                         lam=float(p.get("lambda", 1.0)), Lam=float(p.get("Lambda", 1.0)),
                         t_window=tuple(p.get("t_window", (0.0, 100.0))),
                         scan_points=int(p.get("scan_points", 20001)), constants=consts)
    d = plan.as_dict()
    ok = all(c["within"] for c in d["checks"]["ab11"]) and all(d["checks"]["floor_met"])
    return {"plan": d}, {}, EXIT_PASS if ok else EXIT_INCONCLUSIVE


def _cmd_zeros(cfg, ctx):
    series = cfg.build_series()
    p = cfg.params
    a = [_cx(v) for v in cfg.require("params", "a")]
    res = zero_hunt(a, series, float(p.get("delta", 0.1)), float(cfg.budgets.get("t_budget", 1e4)),
                    t_lo=float(p.get("t_lo", 0.0)), cutoff=int(p.get("cutoff", 1000)))
    rows = ["re_lo,re_hi,im_lo,im_hi,winding,residual"] + [",".join(t.row()) for t in res.hits]
    files = {"csv": ("tiles", "\n".join(rows) + "\n")}
    return {"zeros": res.as_dict()}, files, EXIT_INCONCLUSIVE if res.exhausted else EXIT_PASS


def _cmd_fit_target(cfg, ctx):
    K = cfg.build_domain()
    if K is None:
        raise ConfigError("domain", "required by fit-target")
    p = cfg.params
    if "values" in p:
        f = np.array([_cx(v) for v in p["values"]])
        if f.size != len(K):
            raise ConfigError("params.values", f"need {len(K)} values, one per grid point of K")
    else:
        targets = cfg.build_targets()
        idx = int(p.get("from_target", 0))
        if not 0 <= idx < len(targets):
            raise ConfigError("params.from_target", "no such target")
        f = laplace_eval(targets[idx], K.points)
    fit = fit_target(f, K.points, float(p.get("A", 0.0)), float(cfg.require("params", "B")),
                     int(p.get("M", 32)), float(p.get("ridge", 1e-10)))
    eps = float(cfg.tolerances.get("eps", 1e-3))
    out = {"fit": {"target": fit.target.describe(), "residual": fit.residual, "rms": fit.rms,
                   "condition": fit.condition,
                   "samples": fit.target.samples.tolist()}}
    return out, {}, EXIT_PASS if fit.residual < eps else EXIT_INCONCLUSIVE


HANDLERS = {
    "order-estimate": _cmd_order_estimate,
    "orthogonality": _cmd_orthogonality,
    "steer": _cmd_steer,
    "find-shift": _cmd_find_shift,
    "verify": _cmd_verify,
    "plan-th1": _cmd_plan_th1,
    "zeros": _cmd_zeros,
    "fit-target": _cmd_fit_target,
}


# --------------------------------------------------------------------------
# entry points


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="universality", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--prime-ceiling", type=int, default=None, help="largest prime the sieve may reach")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=None, help="numba thread count")
    return parser


def _set_threads(n: int | None) -> int | None:
    if n is None:
        return None
    import numba

    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def run_command(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = Path(args.out)
    try:
        cfg = RunConfig.load(args.config)
        if cfg.command != args.command:
            raise ConfigError("command", f"config is for {cfg.command!r}, not {args.command!r}", None)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", "must be non-negative", None)
            cfg.seed = args.seed
        ceiling = args.prime_ceiling or DEFAULT_CEILING
        prime_limit = int(cfg.budgets.get("prime_limit", min(10**8, ceiling)))
        if prime_limit > ceiling:
            raise ConfigError("budgets.prime_limit", f"{prime_limit} exceeds the prime ceiling {ceiling}", None)
        previous = set_default_ceiling(ceiling)
        threads = _set_threads(args.threads)
        try:
            result = HANDLERS[cfg.command](cfg, {"prime_limit": prime_limit})
        finally:
            set_default_ceiling(previous)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (UniversalityError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    body, files, code = result[:3]
    ledger = result[3] if len(result) > 3 else {}
    report = {
        "command": cfg.command,
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "prime_ceiling": ceiling,
        "prime_limit": prime_limit,
        "threads": threads,
        "tolerances": {"eps": cfg.tolerances.get("eps"), "eps2": cfg.tolerances.get("eps2"),
                       "slack": cfg.tolerances.get("slack", DEFAULT_SLACK)},
        "ledger": ledger,
        "result": body,
        "exit_code": code,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.command.replace("-", "_")
    (out_dir / cfg.outputs.get("report", f"{stem}_report.json")).write_text(dumps_report(report))
    for key, (suffix, text) in files.items():
        default = f"{stem}_{suffix}.{'csv' if key == 'csv' else 'txt'}"
        (out_dir / cfg.outputs.get(key, default)).write_text(text)
    status = {EXIT_PASS: "pass", EXIT_INCONCLUSIVE: "inconclusive"}[code]
    print(f"{cfg.command}: {status} (report in {out_dir})")
    return code


def main(argv=None) -> None:
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
