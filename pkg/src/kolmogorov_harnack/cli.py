"""Command-line harness: ``constants``, ``verify <suite>`` and ``experiment <which>``.

Reports are JSON on stdout (or ``--out``). Exit codes: 0 pass, 1 configuration
error, 2 hypothesis violation, 3 infeasible discretization, 4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .constants import ConstantsReport, pipeline
from .errors import ConfigError, HypothesisViolation, InfeasibleDiscretization, VerificationFailure
from .fields import CoefficientField, field_from_json, random_h1_fields
from .group import BlockStructure, Point, prototype
from .potentials import QuadratureError
from .solver import (gamma0_convergence, growth_experiment, harnack_campaign,
                     oscillation_experiment, write_csv, solve, window)
from .verification import SUITES, run_suite

DEFAULT_SEED = 0x5EED
EXPERIMENTS = ("growth", "oscillation", "harnack", "convergence")
_TOP_KEYS = {"structure", "hypothesis", "lambda", "Lambda", "field", "experiments", "seed",
             "samples", "s0", "eps0"}


@dataclass
class RunConfig:
    structure: BlockStructure
    hypothesis: str = "H1"
    lam: float = 1.0
    Lam: float = 1.2
    field: dict = dc_field(default_factory=dict)
    experiments: dict = dc_field(default_factory=dict)
    seed: int = DEFAULT_SEED
    samples: int | None = None
    s0: float | None = None
    eps0: float | None = None

    def make_field(self, seed: int | None = None) -> CoefficientField:
        desc = dict(self.field)
        desc.setdefault("kind", "constant" if self.hypothesis == "H1" else "smooth-oscillatory")
        desc.setdefault("lambda", self.lam)
        desc.setdefault("Lambda", self.Lam)
        if seed is not None:
            desc["seed"] = seed
        desc.setdefault("seed", self.seed)
        return field_from_json(self.structure, desc, require_h1=self.hypothesis == "H1")


def _number(obj, key, default, kind=float):
    v = obj.get(key, default)
    if v is None:
        return None
    try:
        return kind(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config entry {key!r} must be a number, got {v!r}") from exc


def parse_config(obj) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config entries: {', '.join(sorted(unknown))}")
    s = BlockStructure.from_json(obj["structure"]) if "structure" in obj else prototype()
    hyp = obj.get("hypothesis", "H1")
    if hyp not in ("H1", "H2"):
        raise ConfigError(f"hypothesis must be H1 or H2, got {hyp!r}")
    lam = _number(obj, "lambda", 1.0)
    Lam = _number(obj, "Lambda", 1.2)
    if not (lam > 0 and Lam >= lam):
        raise ConfigError(f"need 0 < lambda <= Lambda, got {lam}, {Lam}")
    if hyp == "H1" and not Lam / lam < 1 + 2 / s.Q:
        raise HypothesisViolation(
            f"hypothesis H1 requires Lambda/lambda < 1 + 2/Q = {1 + 2 / s.Q:.6g}, "
            f"got {Lam / lam:.6g}")
    fld = obj.get("field", {})
    exps = obj.get("experiments", {})
    if not isinstance(fld, dict) or not isinstance(exps, dict):
        raise ConfigError("'field' and 'experiments' must be JSON objects")
    bad = set(exps) - set(EXPERIMENTS)
    if bad:
        raise ConfigError(f"unknown experiments: {', '.join(sorted(bad))}")
    return RunConfig(s, hyp, lam, Lam, fld, exps, _number(obj, "seed", DEFAULT_SEED, int),
                     _number(obj, "samples", None, int), _number(obj, "s0", None),
                     _number(obj, "eps0", None))


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return parse_config({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(obj)


def constants_for(cfg: RunConfig) -> ConstantsReport:
    """Pipeline run for the config; under H2 the field's modulus fixes ``eps0``."""
    eps0 = None
    if cfg.hypothesis == "H2":
        eps0 = cfg.eps0
        if eps0 is None:
            s0 = 1.0 / cfg.structure.Q if cfg.s0 is None else cfg.s0
            f = cfg.make_field()
            eps0 = min(f.eps0(s0 * f.lam / (2 + s0)), 1 - 1e-12)
    return pipeline(cfg.structure, cfg.hypothesis, cfg.lam, cfg.Lam, eps0)


# -- commands -------------------------------------------------------------------------

def cmd_constants(cfg: RunConfig, args) -> tuple[dict, bool]:
    rep = constants_for(cfg)
    inv = rep.invariants(cfg.structure)
    return {"command": "constants", "report": rep.to_json(), "invariants": inv}, all(inv.values())


def cmd_verify(cfg: RunConfig, args) -> tuple[dict, bool]:
    names = list(args.suite)
    if not names:
        raise ConfigError(f"no suite given; choose from {', '.join(SUITES)} or 'all'")
    if names == ["all"]:
        names = list(SUITES)
    for n in names:
        if n not in SUITES:
            raise ConfigError(f"unknown suite {n!r}; choose from {', '.join(SUITES)} or 'all'")
    consts = None
    if any(n in ("bounds", "geometry", "kernels", "potentials") for n in names):
        consts = constants_for(cfg)
    samples = args.samples if args.samples is not None else cfg.samples
    out = []
    for n in names:
        rep = run_suite(n, cfg.structure, consts, cfg.lam, cfg.Lam, samples,
                        cfg.seed if args.seed is None else args.seed, args.adversarial)
        out.append(rep.to_json())
    passed = all(r["passed"] for r in out)
    return {"command": "verify", "adversarial": bool(args.adversarial), "suites": out,
            "passed": passed}, passed


def _h2_fields(cfg: RunConfig, count: int, seed: int) -> list:
    seeds = [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(count)]
    return [cfg.make_field(sd) for sd in seeds]


def cmd_experiment(cfg: RunConfig, args) -> tuple[dict, bool]:
    which = args.which
    params = dict(cfg.experiments.get(which, {}))
    seed = cfg.seed if args.seed is None else args.seed
    resolution = args.resolution if args.resolution is not None else params.get("resolution")
    if resolution is not None and not isinstance(resolution, int):
        resolution = tuple(int(v) for v in resolution)
    s = cfg.structure
    if which == "convergence":
        res = params.get("resolutions", [32, 64, 128])
        if args.resolution is not None:
            res = [args.resolution, 2 * args.resolution]
        rep = gamma0_convergence(s, tuple(int(v) for v in res))
        passed = all(o >= 0.9 for o in rep["orders"])
        rep.update(experiment="convergence", passed=passed)
        return rep, passed
    consts = constants_for(cfg)
    r = float(params.get("r", 1.0 if cfg.hypothesis == "H1" else consts.r0))
    if which == "growth":
        rep = growth_experiment(cfg.make_field(), consts, r, params.get("selector", "half"),
                                resolution)
    elif which == "oscillation":
        rep = oscillation_experiment(cfg.make_field(), consts, r, int(params.get("levels", 4)),
                                     resolution)
    else:
        nf = int(params.get("fields", 1))
        nd = int(params.get("data", 1))
        if cfg.hypothesis == "H1":
            fields = [cfg.make_field()] if nf == 1 else random_h1_fields(
                s, cfg.lam, cfg.Lam, nf, seed)
        else:
            fields = _h2_fields(cfg, nf, seed)
        z0 = Point.from_json(params["z0"]) if "z0" in params else None
        rep = harnack_campaign(fields, consts, nd, r, z0, resolution, seed)
    rep["constants"] = {k: consts.to_json()[k] for k in
                        ("eta", "P", "alpha", "C_harnack", "K", "r0")}
    if args.csv:
        _slab_csv(cfg, consts, r, resolution, args.csv)
    return rep, bool(rep["passed"])


def _slab_csv(cfg: RunConfig, consts, r, resolution, path):
    """Slab time series of a plain solve on the experiment window."""
    from .geometry import named_cylinders
    from .solver import level_resolution, random_nonnegative_data

    s = cfg.structure
    box = window(s, consts, r, spread=1.25)
    cyl = named_cylinders(consts, r, N=s.N)
    if resolution is None:
        resolution = level_resolution(s, box, 0.5 * consts.sigma0 * r)
    res = solve(cfg.make_field(), box, random_nonnegative_data(s, box, cfg.seed), resolution,
                regions={"Qminus": cyl.Qminus, "Qplus": cyl.Qplus}, record_history=True)
    write_csv(res, path)


# -- entry point ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--samples", type=int, help="override sample counts")
    common.add_argument("--resolution", type=int, help="solver nodes per axis")
    common.add_argument("--adversarial", action="store_true",
                        help="enable the deliberate-failure modes of the suites")
    p = _Parser(prog="kolmogorov-harnack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("constants", parents=[common], help="structural constants report")
    v = sub.add_parser("verify", parents=[common], help="run sampling and quadrature suites")
    v.add_argument("suite", nargs="*", help=f"one or more of {', '.join(SUITES)}, or 'all'")
    e = sub.add_parser("experiment", parents=[common], help="solver experiments")
    e.add_argument("which", choices=EXPERIMENTS)
    e.add_argument("--csv", help="also write a slab time series of the window solve")
    return p


COMMANDS = {"constants": cmd_constants, "verify": cmd_verify, "experiment": cmd_experiment}


def _emit(obj, path):
    text = json.dumps(obj, indent=2, default=_default) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        out = args.out
        cfg = load_config(args.config)
        report, passed = COMMANDS[args.command](cfg, args)
        report["exit_code"] = 0 if passed else VerificationFailure.exit_code
        _emit(report, out)
        return report["exit_code"]
    except (ConfigError, HypothesisViolation, InfeasibleDiscretization,
            VerificationFailure) as exc:
        return _fail(exc, exc.exit_code)
    except QuadratureError as exc:
        return _fail(exc, VerificationFailure.exit_code)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


def _fail(exc, code: int) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(err) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
