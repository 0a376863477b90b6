"""Command-line front end: ``bounds``, ``run``, ``alpha0`` and ``budget``.

``run`` reads a JSON experiment config::

    {
      "instance": {"family": "bernoulli", "d": 128, "p": 2, "B": 1.0,
                   "D": 1.0, "delta": 0.1, "alpha_seed": 1},
      "quantizer": {"family": "simqplus", "k": null},
      "algo": "psgd", "T": 10000, "seeds": [0, 1, 2],
      "step_c": 1.0, "out": "runs.csv"
    }

``p`` may be the string ``"inf"``. For ``smd`` an optional
``"mirror_exponent"`` overrides the default ``p'``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import bounds
from .exceptions import ConfigurationError, ContractError
from .optimizers import Domain, default_mirror_exponent, psgd_run, smd_run
from .oracles import make_oracle
from .quantizers import bit_budget, make_quantizer

GENERATOR_ID = "numpy Philox4x32-10, SeedSequence(seed).spawn(2) -> (oracle, quantizer)"


@dataclass
class RunRecord:
    config_hash: str
    seed: int
    T: int
    bits_per_step: int
    total_bits: int
    suboptimality: float
    wall_time: float


RECORD_FIELDS = [f.name for f in fields(RunRecord)]


def _parse_p(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        return float(value)
    return float(value)


def validate_config(cfg: dict) -> dict:
    """Check an experiment config, returning a normalized copy.

    Raises :class:`ConfigurationError` naming every violated constraint.
    """
    problems = []
    out = dict(cfg)
    inst = dict(cfg.get("instance") or {})
    quant = dict(cfg.get("quantizer") or {"family": "none"})
    if not inst:
        problems.append("missing 'instance' section")
    for key in ("family", "d", "p", "B", "D", "delta"):
        if key not in inst:
            problems.append(f"instance.{key} is required")
    p = None
    if "p" in inst:
        try:
            p = _parse_p(inst["p"])
            inst["p"] = p
            if p < 1:
                problems.append("instance.p must be >= 1")
        except (TypeError, ValueError):
            problems.append(f"instance.p={inst['p']!r} is not a number")
            p = None
    if inst.get("family") not in (None, "bernoulli", "paninski"):
        problems.append(f"instance.family {inst['family']!r} is not 'bernoulli' or 'paninski'")
    d = inst.get("d")
    if d is not None and (not isinstance(d, int) or d < 1):
        problems.append("instance.d must be a positive integer")
        d = None
    for key in ("B", "D"):
        if key in inst and not (isinstance(inst[key], (int, float)) and inst[key] > 0):
            problems.append(f"instance.{key} must be positive")
    if "delta" in inst and not (isinstance(inst["delta"], (int, float)) and 0 < inst["delta"] <= 0.5):
        problems.append("instance.delta must lie in (0, 1/2]")
    algo = cfg.get("algo")
    if algo not in ("psgd", "smd"):
        problems.append(f"algo must be 'psgd' or 'smd', got {algo!r}")
    if p is not None:
        if algo == "psgd" and p < 2:
            problems.append(f"psgd needs p >= 2, instance has p={p}")
        if algo == "smd" and p >= 2:
            problems.append(f"smd needs p in [1, 2), instance has p={p}")
    fam = str(quant.get("family", "none")).lower()
    quant["family"] = fam
    if fam not in ("none", "simq", "simqplus", "split"):
        problems.append(f"quantizer.family {fam!r} is not none/simq/simqplus/split")
    elif p is not None:
        if fam == "simq" and not math.isinf(p):
            problems.append("quantizer simq needs p = inf")
        if fam == "simqplus" and p < 2:
            problems.append("quantizer simqplus needs p >= 2")
        if fam == "split" and p >= 2:
            problems.append("quantizer split needs p in [1, 2)")
    k = quant.get("k")
    if k is not None and (not isinstance(k, int) or k < 1):
        problems.append("quantizer.k must be a positive integer")
    T = cfg.get("T")
    if not isinstance(T, int) or T < 1:
        problems.append("T must be a positive integer")
    seeds = cfg.get("seeds")
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        problems.append("seeds must be a nonempty list of nonnegative integers")
    step_c = cfg.get("step_c", 1.0)
    if not isinstance(step_c, (int, float)) or step_c <= 0:
        problems.append("step_c must be positive")
    if problems:
        raise ConfigurationError(problems)
    out.update(instance=inst, quantizer=quant, step_c=float(step_c))
    return out


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k != "out"}
    text = json.dumps(body, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def build(cfg: dict):
    """Oracle, quantizer and runner described by a validated config."""
    inst = cfg["instance"]
    oracle = make_oracle(inst["family"], inst["d"], inst["p"], inst["B"], inst["D"],
                         inst["delta"], alpha=inst.get("alpha"),
                         alpha_seed=inst.get("alpha_seed", 0))
    q = cfg["quantizer"]
    quantizer = make_quantizer(q["family"], inst["d"], inst["p"], inst["B"], k=q.get("k"))
    if cfg["algo"] == "psgd":
        def runner(seed, T):
            return psgd_run(oracle, quantizer, T, step_c=cfg["step_c"], seed=seed)
    else:
        pp = cfg.get("mirror_exponent") or default_mirror_exponent(oracle.p, oracle.d)
        domain = Domain.with_diameter(oracle.d, oracle.D, oracle.p, pp)

        def runner(seed, T):
            return smd_run(oracle, quantizer, T, domain=domain, step_c=cfg["step_c"], seed=seed)
    return oracle, quantizer, runner


def _run_one(args):
    cfg, seed = args
    _, quantizer, runner = build(cfg)
    res = runner(seed, cfg["T"])
    return RunRecord(
        config_hash=config_hash(cfg),
        seed=seed,
        T=res.T,
        bits_per_step=res.bits_per_step,
        total_bits=res.total_bits,
        suboptimality=res.suboptimality,
        wall_time=res.wall_time,
    )


def run_experiment(cfg: dict, jobs: int = 1) -> list:
    """One :class:`RunRecord` per seed, in the order the seeds are listed."""
    cfg = validate_config(cfg)
    tasks = [(cfg, s) for s in cfg["seeds"]]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, tasks))
    return [_run_one(t) for t in tasks]


def write_csv(records, path_or_file) -> None:
    def _write(fh):
        fh.write(f"# generator: {GENERATOR_ID}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow([r.config_hash, r.seed, r.T, r.bits_per_step, r.total_bits,
                             repr(float(r.suboptimality)), f"{r.wall_time:.6f}"])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            _write(fh)


# -- subcommands ------------------------------------------------------------


def cmd_bounds(args) -> int:
    d, p = args.d, args.p
    pb = bounds.precision_bounds(d, p, args.rho)
    print(f"d = {d}, p = {p:g}, T = {args.T}, D = {args.D:g}, B = {args.B:g}, rho = {args.rho:g}")
    print(f"r* upper (bits)   {pb.upper_bits:.4f}")
    print(f"r* lower (bits)   {pb.lower_bits:.4f}")
    print(f"U(T, p)           {bounds.benchmark_u(args.T, p, d, args.D, args.B):.6g}")
    lo, hi = bounds.baseline_rate(args.T, p, d, args.D, args.B)
    print(f"unquantized rate  [{lo:.6g}, {hi:.6g}]")
    print("r\terror_lower")
    r = 1
    while r <= max(2 * d, 2):
        print(f"{r}\t{bounds.error_lower(args.T, r, p, d, args.D, args.B, args.rho):.6g}")
        r *= 2
    return 0


def cmd_run(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    try:
        records = run_experiment(cfg, jobs=args.jobs)
    except ConfigurationError as exc:
        print("configuration error:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return 2
    out = args.out or cfg.get("out")
    if out:
        write_csv(records, out)
    else:
        write_csv(records, sys.stdout)
    return 0


def _quantizer_from_args(args):
    q = make_quantizer(args.family, args.d, args.p, args.B, k=args.k)
    if q is None:
        raise ContractError("family 'none' has no quantizer")
    return q


def cmd_alpha0(args) -> int:
    q = _quantizer_from_args(args)
    rng = np.random.Generator(np.random.Philox(args.seed))
    est = bounds.alpha0_estimate(q, args.p, args.trials, rng)
    print(f"{q.family}: alpha0 estimate {est.value:.6g} +- {est.stderr:.2g}, "
          f"analytic bound {q.alpha0:.6g}")
    return 0


def cmd_budget(args) -> int:
    q = _quantizer_from_args(args)
    print(bit_budget(q))
    return 0


def _add_quantizer_args(sub):
    sub.add_argument("--family", required=True, choices=["simq", "simqplus", "split"])
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--p", type=_parse_p, required=True)
    sub.add_argument("--B", type=float, default=1.0)
    sub.add_argument("--k", type=int, default=None)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpquant", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    b = subs.add_parser("bounds", help="precision and error bounds")
    b.add_argument("--d", type=int, required=True)
    b.add_argument("--p", type=_parse_p, required=True)
    b.add_argument("--T", type=int, default=10_000)
    b.add_argument("--D", type=float, default=1.0)
    b.add_argument("--B", type=float, default=1.0)
    b.add_argument("--rho", type=float, default=1.0)
    b.set_defaults(func=cmd_bounds)

    r = subs.add_parser("run", help="run an experiment config, emit CSV")
    r.add_argument("config")
    r.add_argument("--out", default=None)
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    a = subs.add_parser("alpha0", help="Monte Carlo alpha_0 estimate")
    _add_quantizer_args(a)
    a.add_argument("--trials", type=int, default=2000)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_alpha0)

    g = subs.add_parser("budget", help="message width in bits")
    _add_quantizer_args(g)
    g.set_defaults(func=cmd_budget)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContractError as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
