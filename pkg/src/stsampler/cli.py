"""Command-line interface: gen, sample, count, enumerate, evaluate, replay.

Exit codes: 0 on success (an unsatisfiable input is a valid answer), 1 on
usage or parse errors, 2 when a resource cap is exceeded.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone

from . import __version__
from .baselines import BoltzmannParams, gibbs_sample, hybrid_sample, sa_sample
from .cnf import DimacsError, Formula, assignment_to_bits, parse_dimacs, serialize_dimacs
from .counter import estimate_count, exact_count_enumerate
from .instances import (
    embed_barrier,
    gen_asym_xor_barrier,
    gen_plateau,
    gen_rand3sat,
    gen_xor_barrier,
    select_balanced_variable,
    solution_marginals,
)
from .oracle import Oracle
from .rng import RNG_VERSION
from .sampler import SamplerConfig, draw_samples
from .stats import chi_squared, tally

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_CAP = 0, 1, 2

log = logging.getLogger("stsampler")


class UsageError(Exception):
    pass


class CapExceeded(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: str | None, stream=None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        (stream or sys.stdout).write(text)


def _positive(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg(value: str) -> int:
    v = int(value)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _seed(value: str) -> int:
    v = int(value)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _read_cnf(path: str) -> tuple[Formula, str]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        return parse_dimacs(raw.decode("utf-8")), hashlib.sha256(raw).hexdigest()
    except (DimacsError, UnicodeDecodeError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _instance_name(f: Formula, path: str) -> str:
    for c in f.comments:
        if c.startswith("t "):
            return c[2:]
    return os.path.basename(path)


# -- commands --------------------------------------------------------------------


def cmd_gen(args, ctx) -> int:
    fam = args.family
    if fam == "plateau":
        f = gen_plateau(args.b)
    elif fam == "xorbarrier":
        f = gen_xor_barrier(args.b)
    elif fam == "asymxor":
        f = gen_asym_xor_barrier(args.b, args.l)
    elif fam == "rand3sat":
        f = gen_rand3sat(args.n, args.m, args.seed)
        ctx["seed"] = args.seed
    else:
        host, digest = _read_cnf(args.cnf)
        ctx["input_digest"] = digest
        z = args.z
        extra = []
        if z is None:
            result = exact_count_enumerate(host, Oracle(host), args.enum_cap)
            if result.exceeded:
                raise CapExceeded(f"more than {args.enum_cap} solutions; pass --z explicitly")
            if not result.solutions:
                raise UsageError("host formula is unsatisfiable; no variable to balance")
            z = select_balanced_variable(host, result.solutions)
            ones = solution_marginals(result.solutions, host.num_vars)[z - 1]
            extra.append(f"selected z={z} marginal={ones}/{len(result.solutions)}")
        elif not 1 <= z <= host.num_vars:
            raise UsageError(f"--z {z} out of range 1..{host.num_vars}")
        f = embed_barrier(host, z, args.b)
        f = f.with_comments(f.comments + tuple(extra))
    _emit(serialize_dimacs(f), args.out)
    return EXIT_OK


def cmd_sample(args, ctx) -> int:
    f, digest = _read_cnf(args.cnf)
    ctx["input_digest"] = digest
    P = args.samples if args.samples is not None else args.k
    cfg = SamplerConfig(k=args.k, level_bits=args.level_bits, seed=args.seed)
    t0 = time.perf_counter()
    batch = draw_samples(f, cfg, P, jobs=args.jobs)
    elapsed = time.perf_counter() - t0
    ctx["run_seeds"] = batch.run_seeds
    for r, s in enumerate(batch.run_seeds[:10]):
        log.debug("run %d seed %d", r, s)
    summary = {
        "satisfiable": batch.satisfiable,
        "samples": len(batch.samples),
        "requested": P,
        "runs": batch.runs,
        "k": args.k,
        "level_bits": args.level_bits,
        "seed": args.seed,
        "num_vars": f.num_vars,
        "oracle_calls": batch.oracle_calls,
        "oracle_call_bound_per_run": cfg.call_bound(f.num_vars),
        "runtime_seconds": round(elapsed, 6) if args.timing else None,
    }
    _emit(batch.jsonl(), args.out)
    _emit(_dump(summary), args.summary, sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def cmd_count(args, ctx) -> int:
    f, digest = _read_cnf(args.cnf)
    ctx["input_digest"] = digest
    cfg = SamplerConfig(k=args.k, level_bits=args.level_bits, seed=args.seed)
    est = estimate_count(f, cfg, args.runs, jobs=args.jobs)
    ctx["run_seeds"] = [cfg.seed]
    report = est.to_json(args.k, args.level_bits)
    report["seed"] = args.seed
    _emit(_dump(report), args.out)
    return EXIT_OK


def cmd_enumerate(args, ctx) -> int:
    f, digest = _read_cnf(args.cnf)
    ctx["input_digest"] = digest
    result = exact_count_enumerate(f, Oracle(f), args.max)
    report = {
        "count": result.count,
        "exceeded": result.exceeded,
        "max": args.max,
        "solutions": [assignment_to_bits(s) for s in result.solutions],
        "oracle_calls": result.oracle_calls,
    }
    _emit(_dump(report), args.out)
    return EXIT_CAP if result.exceeded else EXIT_OK


def _run_sampler(f: Formula, args) -> tuple[list, int, dict]:
    P = args.samples
    if args.sampler == "sts":
        if args.k is None:
            raise UsageError("--k is required for --sampler sts")
        cfg = SamplerConfig(k=args.k, level_bits=args.level_bits, seed=args.seed)
        batch = draw_samples(f, cfg, P, jobs=args.jobs)
        return batch.assignments(), batch.oracle_calls, {"k": args.k, "level_bits": args.level_bits, "runs": batch.runs}
    if args.sampler in ("sa", "gibbs"):
        p = BoltzmannParams(args.temp, args.burn_in, args.thinning, args.max_steps)
        chain = (sa_sample if args.sampler == "sa" else gibbs_sample)(f, p, P, args.seed)
        params = {"temperature": args.temp, "burn_in": args.burn_in, "thinning": p.resolved(f.num_vars)[0]}
    else:
        chain = hybrid_sample(
            f, P, args.seed,
            walk_prob=args.walk_prob, noise=args.noise, restart_every=args.restart_every,
            temperature=args.temp, max_steps=args.max_steps or 10**9,
        )
        params = {"walk_prob": args.walk_prob, "noise": args.noise, "temperature": args.temp,
                  "restart_every": args.restart_every}
    params["diagnostics"] = chain.diagnostics()
    return chain.samples, 0, params


def cmd_evaluate(args, ctx) -> int:
    f, digest = _read_cnf(args.cnf)
    ctx["input_digest"] = digest
    enum = exact_count_enumerate(f, Oracle(f), args.enum_cap)
    if enum.exceeded:
        raise CapExceeded(f"solution set larger than --enum-cap {args.enum_cap}")
    if not enum.solutions:
        raise UsageError("formula is unsatisfiable; nothing to evaluate")
    t0 = time.perf_counter()
    samples, calls, params = _run_sampler(f, args)
    elapsed = time.perf_counter() - t0
    table = tally(samples, enum.solutions)
    report = {
        "sampler": args.sampler,
        "instance": _instance_name(f, args.cnf),
        "P": table.total,
        "requested": args.samples,
        "Z": len(enum.solutions),
        "seed": args.seed,
        "params": params,
        "frequencies": table.counts,
        "solutions": [assignment_to_bits(s) for s in table.solutions],
        "oracle_calls": calls,
        "runtime_seconds": round(elapsed, 6) if args.timing else None,
    }
    if table.total > 0 and len(table.counts) >= 2:
        chi = chi_squared(table)
        report.update(chi2=chi.statistic, dof=chi.dof, p_value=chi.p_value, reject_at_05=chi.reject_at_05)
        log.info("chi2=%.2f dof=%d p=%s", chi.statistic, chi.dof, chi.p_value_text())
    elif table.total > 0:
        report.update(chi2=0.0, dof=0, p_value=1.0, reject_at_05=False)
    else:
        report.update(chi2=None, dof=len(table.counts) - 1, p_value=None, reject_at_05=None)
    _emit(_dump(report), args.out)
    return EXIT_OK


def cmd_replay(args, ctx) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    argv = manifest["argv"]
    cnf = manifest.get("params", {}).get("cnf")
    digest = manifest.get("input_digest")
    if cnf and digest:
        _, now = _read_cnf(cnf)
        if now != digest:
            raise UsageError(f"input {cnf} changed since the manifest was written")
    return main(argv)


# -- parser ----------------------------------------------------------------------


def _common(p, seed=True, jobs=False):
    if seed:
        p.add_argument("--seed", type=_seed, default=0)
    if jobs:
        p.add_argument("--jobs", type=_positive, default=1, help="worker processes; output does not depend on it")
    p.add_argument("--manifest", help="write a replay manifest (JSON) to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stsampler", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version",
        version=f"stsampler {__version__} (schema {SCHEMA_VERSION}, rng {RNG_VERSION})",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a benchmark instance as DIMACS")
    gsub = g.add_subparsers(dest="family", required=True, parser_class=_Parser)
    for name in ("plateau", "xorbarrier"):
        q = gsub.add_parser(name)
        q.add_argument("--b", type=_positive, required=True)
    q = gsub.add_parser("asymxor")
    q.add_argument("--b", type=_positive, required=True)
    q.add_argument("--l", type=_positive, required=True)
    q = gsub.add_parser("embed")
    q.add_argument("--cnf", required=True)
    q.add_argument("--b", type=_positive, default=40)
    q.add_argument("--z", type=int, help="barrier variable; chosen by solution balance when omitted")
    q.add_argument("--enum-cap", type=_positive, default=100_000)
    q = gsub.add_parser("rand3sat")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=_nonneg, required=True)
    q.add_argument("--seed", type=_seed, default=0)
    for q in gsub.choices.values():
        q.add_argument("--out")
        q.add_argument("--manifest")

    s = sub.add_parser("sample", help="draw samples with the search-tree sampler")
    s.add_argument("--cnf", required=True)
    s.add_argument("--k", type=_positive, required=True)
    s.add_argument("--level-bits", type=_positive, default=1)
    s.add_argument("--samples", type=_positive)
    s.add_argument("--out", help="JSON Lines samples (default stdout)")
    s.add_argument("--summary", help="summary JSON path")
    s.add_argument("--timing", action="store_true", help="include wall-clock runtime in the summary")
    _common(s, jobs=True)

    c = sub.add_parser("count", help="estimate the model count")
    c.add_argument("--cnf", required=True)
    c.add_argument("--k", type=_positive, required=True)
    c.add_argument("--runs", type=_positive, default=1)
    c.add_argument("--level-bits", type=_positive, default=1)
    c.add_argument("--out")
    _common(c, jobs=True)

    e = sub.add_parser("enumerate", help="enumerate all solutions by solve-and-block")
    e.add_argument("--cnf", required=True)
    e.add_argument("--max", type=_positive, default=100_000)
    e.add_argument("--out")
    _common(e, seed=False)

    v = sub.add_parser("evaluate", help="chi-squared uniformity test of a sampler")
    v.add_argument("--cnf", required=True)
    v.add_argument("--sampler", choices=("sts", "sa", "gibbs", "hybrid"), required=True)
    v.add_argument("--samples", type=_positive, required=True)
    v.add_argument("--k", type=_positive)
    v.add_argument("--level-bits", type=_positive, default=1)
    v.add_argument("--temp", type=float, default=0.5)
    v.add_argument("--burn-in", type=_nonneg, default=10**7)
    v.add_argument("--thinning", type=_positive)
    v.add_argument("--max-steps", type=_positive)
    v.add_argument("--walk-prob", type=float, default=0.5)
    v.add_argument("--noise", type=float, default=0.5)
    v.add_argument("--restart-every", type=_positive, default=10**5)
    v.add_argument("--enum-cap", type=_positive, default=100_000)
    v.add_argument("--timing", action="store_true")
    v.add_argument("--out")
    _common(v, jobs=True)

    r = sub.add_parser("replay", help="re-run a command from its manifest")
    r.add_argument("manifest")
    return parser


COMMANDS = {
    "gen": cmd_gen,
    "sample": cmd_sample,
    "count": cmd_count,
    "enumerate": cmd_enumerate,
    "evaluate": cmd_evaluate,
    "replay": cmd_replay,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(name)s: %(message)s")
    ctx: dict = {}
    started = datetime.now(timezone.utc).isoformat()
    try:
        code = COMMANDS[args.command](args, ctx)
    except UsageError as exc:
        print(f"stsampler: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"stsampler: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as exc:
        print(f"stsampler: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest_path = getattr(args, "manifest", None)
    if manifest_path and args.command != "replay":
        params = {k: v for k, v in vars(args).items() if k not in ("manifest", "verbose")}
        manifest = {
            "command": args.command,
            "argv": [a for i, a in enumerate(argv) if not _is_manifest_arg(argv, i)],
            "params": params,
            "seed": params.get("seed"),
            "input_digest": ctx.get("input_digest"),
            "run_seeds": ctx.get("run_seeds"),
            "tool_version": __version__,
            "schema_version": SCHEMA_VERSION,
            "rng_version": RNG_VERSION,
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "exit_code": code,
        }
        with open(manifest_path, "w", encoding="utf-8") as fh:
            fh.write(_dump(manifest))
    return code


def _is_manifest_arg(argv: list[str], i: int) -> bool:
    a = argv[i]
    if a == "--manifest" or a.startswith("--manifest="):
        return True
    return i > 0 and argv[i - 1] == "--manifest"


if __name__ == "__main__":
    sys.exit(main())
