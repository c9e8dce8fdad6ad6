"""Batch command line: ``sphparisi {solve,finite-m,simulate} --config RUN.json --out DIR``.

Exit codes: 0 ok, 1 config error, 2 resource guard or non-convergence,
3 sampler-health warning escalated by ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from .errors import (
    DomainError,
    InsufficientReplicasError,
    ResourceGuardError,
    SamplerHealthWarning,
)
from .finite_m import FiniteMConfig, pm_value
from .mixture import Mixture
from .optimizer import OptimizeOptions, optimize
from .parisi import infimum_over_b
from .rsb import FunctionalOrderParameter
from .simulator import (
    PerturbationSpec,
    PhiSpec,
    Row,
    SamplerOptions,
    ass_bracket_estimate,
    cavity_decompose,
    disorder_seed,
    dump_chain,
    free_energy_mc,
    overlap_statistics,
    run_chains,
    sample_disorder,
    write_csv,
)
from .sphere import ShellSpec, ass_correction, sample_sphere

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_HEALTH = 0, 1, 2, 3

log = logging.getLogger("sphparisi")

_MIXTURE = {
    "type": "array",
    "items": {
        "type": "object",
        "properties": {"p": {"type": "integer", "minimum": 1}, "beta": {"type": "number", "minimum": 0}},
        "required": ["p", "beta"],
        "additionalProperties": False,
    },
}
_ORDER = {
    "type": "object",
    "properties": {
        "k": {"type": "integer", "minimum": 1},
        "m": {"type": "array", "items": {"type": "number"}},
        "q": {"type": "array", "items": {"type": "number"}},
    },
    "required": ["k", "m", "q"],
    "additionalProperties": False,
}
_SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}
_POS = {"type": "integer", "minimum": 1}

SCHEMAS = {
    "solve": {
        "type": "object",
        "properties": {
            "mixture": _MIXTURE,
            "k_max": _POS,
            "order_parameter": _ORDER,
            "seed": _SEED,
            "restarts": {"type": "integer", "minimum": 0},
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "max_iter": _POS,
            "early_stop": {"type": "boolean"},
        },
        "required": ["mixture", "k_max"],
        "additionalProperties": False,
    },
    "finite-m": {
        "type": "object",
        "properties": {
            "mixture": _MIXTURE,
            "order_parameter": _ORDER,
            "M": {"type": "array", "items": _POS, "minItems": 1},
            "seed": _SEED,
            "r_grid_size": _POS,
            "r_max_sigmas": {"type": "number"},
            "kernel_nodes": _POS,
            "chi_nodes": _POS,
            "max_levels": _POS,
        },
        "required": ["mixture", "order_parameter", "M"],
        "additionalProperties": False,
    },
    "simulate": {
        "type": "object",
        "properties": {
            "task": {"enum": ["free-energy", "gg-stats", "ass-bracket", "cavity-check"]},
            "mixture": _MIXTURE,
            "N": _POS,
            "M": {"type": "integer", "minimum": 0},
            "seed": _SEED,
            "n_config": _POS,
            "n_disorder": _POS,
            "n_chains": _POS,
            "steps": _POS,
            "burn_in": {"type": "integer", "minimum": 0},
            "thin": _POS,
            "eta": {"type": "number", "minimum": 0},
            "specs": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "p": _POS,
                        "n": {"type": "integer", "minimum": 2},
                        "f": {
                            "type": "array",
                            "items": {"type": "array", "items": {"type": "integer"}, "minItems": 3, "maxItems": 3},
                        },
                    },
                    "required": ["p", "n"],
                    "additionalProperties": False,
                },
            },
            "perturbation": {
                "type": "object",
                "properties": {
                    "u": {"type": "array", "items": {"type": "number", "minimum": 1, "maximum": 2}},
                    "p_max": _POS,
                    "enabled": {"type": "boolean"},
                    "seed": _SEED,
                },
                "additionalProperties": False,
            },
            "n_rep": {"type": "integer", "minimum": 2},
            "n_gauss": _POS,
            "delta": {"type": "number", "exclusiveMinimum": 0},
            "dump_chains": {"type": "boolean"},
        },
        "required": ["task", "mixture", "N"],
        "additionalProperties": False,
    },
}


class ConfigError(Exception):
    pass


def load_config(path: str, command: str, seed_override: int | None) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{path}: field {where}: {e.message}")
    if seed_override is not None:
        cfg["seed"] = seed_override
    return cfg


def _mixture(cfg) -> Mixture:
    return Mixture.from_config(cfg["mixture"])


def _order_parameter(data) -> FunctionalOrderParameter:
    return FunctionalOrderParameter.from_config(data).checked()


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def cmd_solve(cfg: dict, out: Path, threads: int) -> int:
    mix = _mixture(cfg)
    given = _order_parameter(cfg["order_parameter"]) if "order_parameter" in cfg else None
    opts = OptimizeOptions(
        restarts=cfg.get("restarts", 8),
        tol=cfg.get("tol", 1e-9),
        max_iter=cfg.get("max_iter"),
        seed=cfg.get("seed", 0),
        threads=threads,
        early_stop=cfg.get("early_stop", True),
    )
    res = optimize(mix, cfg["k_max"], opts)
    result = {
        "value": res.value,
        "order_parameter": res.best.to_config(),
        "per_k": [{"k": k, "value": v} for k, v in res.per_k_values],
        "converged": res.converged,
        "restarts_used": res.restarts_used,
    }
    if given is not None:
        result["given_order_parameter_value"] = infimum_over_b(mix, given).value
    # pretty-printed JSON keeps the timestamp on a line of its own
    payload = dict(result, timestamp=_timestamp())
    (out / "solve.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    lines = [
        f"mixture: {mix.to_config()}",
        f"value: {res.value:.12g}",
        f"k: {res.best.k}",
        f"m: {list(res.best.m)}",
        f"q: {list(res.best.q)}",
        "per_k: " + ", ".join(f"k={k} {v:.12g}" for k, v in res.per_k_values),
        f"converged: {res.converged}",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print(f"value {res.value:.12g} (k={res.best.k}, converged={res.converged})")
    return EXIT_OK if res.converged else EXIT_RESOURCE


def cmd_finite_m(cfg: dict, out: Path, threads: int) -> int:
    mix = _mixture(cfg)
    f = _order_parameter(cfg["order_parameter"])
    extra = {k: cfg[k] for k in ("r_grid_size", "r_max_sigmas", "kernel_nodes", "chi_nodes", "max_levels") if k in cfg}
    seed = cfg.get("seed", 0)
    reference = infimum_over_b(mix, f).value
    rows = [Row("parisi_value", reference, "exact", "", "", seed, 0.0)]
    for M in cfg["M"]:
        t0 = time.perf_counter()
        r = pm_value(mix, f, FiniteMConfig(M=M, **extra))
        rows.append(Row("pm", r.pm, r.error_estimate, "", M, seed, time.perf_counter() - t0))
        rows.append(Row("abs_gap", abs(r.pm - reference), r.error_estimate, "", M, seed, 0.0))
    with open(out / "finite_m.csv", "w", newline="") as fh:
        write_csv(rows, fh)
    return EXIT_OK


def _perturbation(cfg) -> PerturbationSpec:
    p = cfg.get("perturbation", {})
    if not p:
        return PerturbationSpec()
    p_max = p.get("p_max", len(p["u"]) if "u" in p else 4)
    return PerturbationSpec(tuple(p.get("u", ())), p_max, p.get("enabled", True), p.get("seed", 1))


def _simulate_rows(cfg: dict, out: Path) -> list[Row]:
    mix = _mixture(cfg)
    task = cfg["task"]
    N = cfg["N"]
    M = cfg.get("M", 0)
    seed = cfg.get("seed", 0)
    t0 = time.perf_counter()
    wall = lambda: time.perf_counter() - t0

    if task == "free-energy":
        fe = free_energy_mc(mix, N, cfg.get("n_config", 10_000), cfg.get("n_disorder", 20), seed)
        exact = mix.is_zero
        return [
            Row("free_energy", fe.estimate, "exact" if exact else fe.stderr, N, M, seed, wall()),
            Row("mean_Z", fe.mean_z, "exact" if exact else fe.mean_z_stderr, N, M, seed, wall()),
            Row("annealed_Z", math.exp(N * mix.xi(1.0) / 2.0), "exact", N, M, seed, 0.0),
            Row("min_ess", fe.min_ess, "exact", N, M, seed, 0.0),
        ]

    if task == "cavity-check":
        if M < 1:
            raise DomainError("cavity-check needs M >= 1")
        d = sample_disorder(mix, M + N, seed)
        rng = np.random.default_rng([seed, 5])
        errs = []
        for rho in sample_sphere(M + N, cfg.get("n_config", 100), rng):
            errs.append(cavity_decompose(d, rho, M).reconstruction_error(rho[N:]))
        return [Row("max_rel_identity_error", max(errs), "exact", N, M, seed, wall())]

    if task == "gg-stats":
        specs = [PhiSpec(s["p"], s["n"], tuple(((a, b), k) for a, b, k in s.get("f", []))) for s in cfg.get("specs", [])]
        n_chains = cfg.get("n_chains", 6)
        needed = max([s.n + 1 for s in specs] + [3])
        if n_chains < needed:
            raise InsufficientReplicasError(f"{n_chains} chains per disorder but {needed} replicas requested")
        pert = _perturbation(cfg)
        groups = []
        for i in range(cfg.get("n_disorder", 4)):
            s = disorder_seed(seed, i)
            d = sample_disorder(mix, N, s)
            chains = run_chains(d, pert, n_chains, cfg.get("steps", 4000), cfg.get("burn_in", 2000), cfg.get("thin", 20), s)
            if cfg.get("dump_chains"):
                for c, ch in enumerate(chains):
                    dump_chain(ch, out / f"chain_d{i}_c{c}.bin")
            groups.append(chains)
        eta = cfg.get("eta", 3.0 / math.sqrt(N))
        rep = overlap_statistics(groups, specs, eta, seed)
        rows = []
        for s, (val, signed, se) in rep.phi.items():
            tag = f"phi(p={s.p},n={s.n},f={'*'.join(f'R{a}{b}^{k}' for (a, b), k in s.f) or '1'})"
            rows.append(Row(tag, val, se, N, M, seed, wall()))
            rows.append(Row(tag + "_signed", signed, se, N, M, seed, wall()))
        for name, est in rep.moments.items():
            rows.append(Row(f"E<{name}>", est.value, est.stderr, N, M, seed, wall()))
        uv = rep.ultrametric_violation
        rows.append(Row("ultrametric_violation_rate", uv.value, uv.stderr, N, M, seed, wall()))
        return rows

    if task == "ass-bracket":
        if M < 1:
            raise DomainError("ass-bracket needs M >= 1")
        opts = SamplerOptions(
            n_rep=cfg.get("n_rep", 16),
            n_gauss=cfg.get("n_gauss", 64),
            n_dis=cfg.get("n_disorder", 8),
            n_chains=cfg.get("n_chains", 4),
            steps=cfg.get("steps", 2000),
            burn_in=cfg.get("burn_in", 1000),
            perturbation=_perturbation(cfg),
        )
        b = ass_bracket_estimate(mix, M, N, opts, seed)
        corr = ass_correction(ShellSpec(M, cfg.get("delta", 0.1)), mix)
        return [
            Row("term_z", b.term_z, b.stderr, N, M, seed, wall()),
            Row("term_y", b.term_y, b.stderr, N, M, seed, wall()),
            Row("ass_correction", corr, "exact", N, M, seed, 0.0),
            Row("ass_lower_bound", b.lower_bound(M) + corr, b.stderr / M, N, M, seed, wall()),
        ]
    raise DomainError(f"unknown task {task!r}")


def cmd_simulate(cfg: dict, out: Path, threads: int) -> int:
    rows = _simulate_rows(cfg, out)
    with open(out / "simulate.csv", "w", newline="") as fh:
        write_csv(rows, fh)
    sys.stdout.write(write_csv(rows))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "finite-m": cmd_finite_m, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sphparisi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", default=".", metavar="DIR")
        p.add_argument("--seed", type=int, default=None, metavar="U64", help="overrides the config seed")
        p.add_argument("--threads", type=int, default=1, metavar="N")
        p.add_argument("--strict", action="store_true", help="exit 3 on sampler-health warnings")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        cfg = load_config(args.config, args.command, args.seed)
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = COMMANDS[args.command](cfg, out, args.threads)
        health = [w for w in caught if issubclass(w.category, SamplerHealthWarning)]
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if health and args.strict:
            return EXIT_HEALTH
        return code
    except (ConfigError, DomainError, InsufficientReplicasError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
