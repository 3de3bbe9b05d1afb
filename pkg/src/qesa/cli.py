"""Command-line front-end: ``qesa <subcommand> [flags]``.

Exit codes: 0 success, 1 unexpected crash, 2 usage/config error,
3 physics mismatch under ``--check``. Errors go to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import applications as app
from . import emitter, esa, interferometer
from .errors import QesaError
from .fock import QuditVector, fidelity, schmidt_rank

EXIT_OK, EXIT_CRASH, EXIT_USAGE, EXIT_MISMATCH = 0, 1, 2, 3
PATTERN_LIMIT = 2 * 10**7
TOL_RANGE = (1e-15, 1e-6)
COMMANDS = ("swap", "teleport", "esa", "aux-gen", "aux-build", "decompose", "sweep", "selftest")
MODE_ALIASES = {"full": "full_enumeration", "symmetry": "single_pattern_times_symmetry"}


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    def __init__(self, failures: list[str], payload: dict):
        super().__init__("; ".join(failures))
        self.failures = failures
        self.payload = payload


@dataclass
class RunConfig:
    command: str
    dim: int = 4
    dims: tuple[int, ...] = (2, 4, 6)
    protocol: str = "swap"
    family: str = "rotated_pairs"
    shift: int | None = None
    mode: str = "full_enumeration"
    convention: str = "physical"
    pattern: tuple[int, ...] | None = None
    outcome: str = "plus"
    method: str = "auto"
    out: str | None = None
    log: str | None = None
    format: str = "json"
    seed: int = 0
    threads: int = 1
    tol: float = 1e-9
    force: bool = False
    check: bool = False
    timing: bool = False
    table: bool = False
    max_dim: int | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> RunConfig:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not TOL_RANGE[0] <= self.tol <= TOL_RANGE[1]:
            raise UsageError(f"--tol must lie in [{TOL_RANGE[0]:g}, {TOL_RANGE[1]:g}], got {self.tol:g}")
        if self.format not in ("json", "csv"):
            raise UsageError(f"--format must be json or csv, got {self.format!r}")
        self.mode = MODE_ALIASES.get(self.mode, self.mode)
        if self.mode not in esa.MODES:
            raise UsageError(f"--mode must be full or symmetry, got {self.mode!r}")
        if self.convention not in esa.CONVENTIONS:
            raise UsageError(f"--convention must be one of {esa.CONVENTIONS}")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        needs_even = self.command not in ("decompose", "selftest", "sweep")
        for d in (self.dims if self.command == "sweep" else (self.dim,)):
            if self.command == "decompose" and d < 2:
                raise UsageError(f"--dim must be >= 2, got {d}")
            if (needs_even or self.command == "sweep") and (d < 2 or d % 2):
                raise UsageError(f"dimension must be even and >= 2, got {d}")
        return self


# ----------------------------------------------------------------------------
# parsing


def _int_tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in str(text).replace(" ", "").split(",") if x != "")
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


_CONVERTERS = {
    "dim": int, "seed": int, "threads": int, "tol": float, "shift": int, "max_dim": int,
    "dims": _int_tuple, "pattern": _int_tuple,
    "force": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
    "check": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
    "timing": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
    "table": lambda v: str(v).lower() in ("1", "true", "yes", "on"),
}


def read_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; dashes in keys are allowed."""
    values = {}
    known = {f.name for f in fields(RunConfig)} - {"command", "extra"}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _CONVERTERS.get(key, str)(value)
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    # every option defaults to None so config-file values can fill the gaps
    common.add_argument("--config")
    common.add_argument("--dim", type=int)
    common.add_argument("--dims", type=_int_tuple)
    common.add_argument("--family", choices=esa.FAMILIES)
    common.add_argument("--shift", type=int)
    common.add_argument("--mode")
    common.add_argument("--convention")
    common.add_argument("--pattern", type=_int_tuple)
    common.add_argument("--outcome")
    common.add_argument("--method", choices=("auto", "fft", "reck"))
    common.add_argument("--protocol", choices=("swap", "teleport"))
    common.add_argument("--out")
    common.add_argument("--log")
    common.add_argument("--format")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--force", action="store_const", const=True)
    common.add_argument("--check", action="store_const", const=True)
    common.add_argument("--timing", action="store_const", const=True)
    common.add_argument("--table", action="store_const", const=True)

    parser = _Parser(prog="qesa", description="Linear-optics entangled state analyzer for time-bin qudits")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "swap": "entanglement swapping success probability and fidelity",
        "teleport": "teleport a seeded random qudit",
        "esa": "single detection pattern: projection, probability, correction",
        "aux-gen": "simulate emitter generation of the auxiliary state",
        "aux-build": "build an auxiliary state from its family",
        "decompose": "beam-splitter netlist for the d-mode Fourier transform",
        "sweep": "success probability over several dimensions",
        "selftest": "quick end-to-end sanity run",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def parse_config(argv: list[str]) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    merged: dict = {}
    if ns.get("config"):
        try:
            merged.update(read_config_file(ns["config"]))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
    merged.update({k: v for k, v in ns.items() if v is not None and k != "config"})
    env = os.environ.get("QESA_MAX_DIM")
    if env and "max_dim" not in merged:
        try:
            merged["max_dim"] = int(env)
        except ValueError as exc:
            raise UsageError(f"QESA_MAX_DIM must be an integer, got {env!r}") from exc
    return RunConfig(**merged).validate()


# ----------------------------------------------------------------------------
# commands


def _guard(cfg: RunConfig, d: int) -> None:
    if cfg.mode != "full_enumeration" or cfg.force:
        return
    limit_ok = d <= cfg.max_dim if cfg.max_dim is not None else d**d <= PATTERN_LIMIT
    if not limit_ok:
        raise UsageError(
            f"full enumeration at d={d} visits {d**d:.3e} patterns; use --mode symmetry, --force, "
            "or raise QESA_MAX_DIM"
        )


def _check(failures: list[str], payload: dict) -> dict:
    payload["check"] = {"passed": not failures, "failures": failures}
    if failures:
        raise CheckFailed(failures, payload)
    return payload


def _cmd_swap(cfg: RunConfig) -> dict:
    _guard(cfg, cfg.dim)
    res = app.entanglement_swap(
        cfg.dim, cfg.family, shift=cfg.shift, mode=cfg.mode, convention=cfg.convention,
        keep_table=cfg.table, seed=cfg.seed, workers=cfg.threads,
    )
    out = res.to_json(include_table=cfg.table)
    if cfg.check:
        fails = []
        if abs(res.total_success - res.expected) > cfg.tol:
            fails.append(f"total success {res.total_success!r} != 2/d^2 = {res.expected!r}")
        if res.fidelity_min < 1 - cfg.tol:
            fails.append(f"minimum corrected fidelity {res.fidelity_min!r} below 1")
        if not res.matches_target_form:
            fails.append("corrected output does not have the target support and amplitude")
        _check(fails, out)
    return out


def _cmd_teleport(cfg: RunConfig) -> dict:
    _guard(cfg, cfg.dim)
    qudit = QuditVector.random(cfg.dim, np.random.default_rng(cfg.seed))
    res = app.teleport(
        cfg.dim, qudit, cfg.family, shift=cfg.shift, mode=cfg.mode, convention=cfg.convention,
        keep_table=cfg.table, seed=cfg.seed, workers=cfg.threads,
    )
    out = res.to_json(include_table=cfg.table)
    if cfg.check:
        fails = []
        if abs(res.total_success - res.expected) > cfg.tol:
            fails.append(f"teleport success {res.total_success!r} != 2/d^2 = {res.expected!r}")
        if res.corrected_fidelity < 1 - cfg.tol:
            fails.append(f"minimum corrected fidelity {res.corrected_fidelity!r} below 1")
        _check(fails, out)
    return out


def _cmd_esa(cfg: RunConfig) -> dict:
    d = cfg.dim
    pattern = cfg.pattern if cfg.pattern is not None else (0,) * d
    pattern = esa.check_pattern(d, pattern)
    spec = esa.aux_spec(d, cfg.family, shift=cfg.shift)
    aux = spec.to_state()
    proj = esa.project_ab(aux, pattern, cfg.convention)
    generic = esa.project_ab_generic(aux, pattern, cfg.convention)
    corr = esa.correction_unitary(spec, pattern, cfg.convention)
    res = esa.run_pattern(app.swap_input(d), aux, pattern, bob=d + 1, convention=cfg.convention)
    phases = np.angle(np.diag(corr.matrix))
    out = {
        "d": d,
        "pattern": list(pattern),
        "family": cfg.family,
        "convention": cfg.convention,
        "swap_probability": res.probability,
        "expected_probability": 2 / d**2 / d**d,
        "projection": proj.to_json(),
        "closed_form_vs_generic": max(abs(a - generic.amplitude(c)) for c, a in proj.items()),
        "correction_phases": [float(p) for p in phases],
    }
    if cfg.check:
        fails = []
        if abs(res.probability - out["expected_probability"]) > cfg.tol * out["expected_probability"]:
            fails.append(f"pattern probability {res.probability!r} != {out['expected_probability']!r}")
        if not proj.allclose(generic, rtol=0, atol=1e-12):
            fails.append("closed-form projection differs from the generic path")
        _check(fails, out)
    return out


def _cmd_aux_gen(cfg: RunConfig) -> dict:
    d = cfg.dim
    rng = np.random.default_rng(cfg.seed)
    if d == 4 and cfg.outcome in ("plus", "minus", "+", "-"):
        run = emitter.simulate_d4(cfg.outcome)
    else:
        outcome = None if cfg.outcome == "plus" else cfg.outcome
        run = emitter.simulate(d, outcome, rng=rng, max_dim=cfg.max_dim if not cfg.force else None)
    if run.violations:
        raise CheckFailed(run.violations, {"d": d, "violations": run.violations})
    if cfg.log:
        Path(cfg.log).write_text(run.log_jsonl())
    ref = esa.build_aux(d)
    out = {
        "d": d,
        "outcomes": list(run.outcomes),
        "state": run.state.to_json(),
        "switch_count": run.switch_count,
        "control_qubits": run.control_qubits,
        "schedule_steps": len(run.log),
        "relabel": run.relabel_log,
        "fidelity_to_reference": fidelity(emitter.sign_normalized(run.state), ref),
    }
    if cfg.check:
        fails = []
        if abs(out["fidelity_to_reference"] - 1) > cfg.tol:
            fails.append(f"fidelity with the reference auxiliary state is {out['fidelity_to_reference']!r}")
        if d > 4 and not emitter.verify_schedule(d).ok:
            fails.append("schedule verification failed")
        _check(fails, out)
    return out


def _cmd_aux_build(cfg: RunConfig) -> dict:
    d = cfg.dim
    spec = esa.aux_spec(d, cfg.family, shift=cfg.shift)
    state = spec.to_state()
    out = {
        "d": d,
        "family": cfg.family,
        "shift": cfg.shift,
        "rows": [list(b.a_row) for b in spec.branches],
        "excluded": [list(b.excluded) for b in spec.branches],
        "state": state.to_json(),
    }
    if cfg.check:
        fails = []
        try:
            spec.validate()
        except QesaError as exc:
            fails.append(str(exc))
        if d >= 4:
            rank = schmidt_rank(state, {0})
            out["schmidt_rank"] = rank
            if rank != d // 2:
                fails.append(f"Schmidt rank across x0 is {rank}, expected {d // 2}")
        _check(fails, out)
    return out


def _cmd_decompose(cfg: RunConfig) -> dict:
    target = interferometer.qft_matrix(cfg.dim)
    net = interferometer.decompose(target, cfg.method, tol=max(cfg.tol, interferometer.UNITARY_TOL))
    out = net.to_json(target)
    if cfg.check:
        fails = []
        if out["reconstruction_error"] > max(cfg.tol, 1e-10):
            fails.append(f"reconstruction error {out['reconstruction_error']:.3e}")
        if cfg.dim == 4 and cfg.method in ("auto", "fft") and out["beam_splitter_count"] != 4:
            fails.append(f"expected 4 beam splitters, got {out['beam_splitter_count']}")
        _check(fails, out)
    return out


def _cmd_sweep(cfg: RunConfig) -> dict:
    for d in cfg.dims:
        _guard(cfg, d)
    max_dim = max(cfg.dims) if cfg.force else (cfg.max_dim or app.DEFAULT_MAX_DIM)
    rows = app.sweep(cfg.dims, cfg.protocol, mode=cfg.mode, max_dim=max_dim, aux_family=cfg.family,
                     seed=cfg.seed, workers=cfg.threads)
    columns = app.SWEEP_COLUMNS if cfg.timing else app.SWEEP_COLUMNS[:-1]
    out = {"protocol": cfg.protocol, "mode": cfg.mode, "rows": app.rows_to_json(rows, columns)}
    out["_csv"] = app.rows_to_csv(rows, columns)
    out["_plot"] = "d,p,2/d^2\n" + "".join(f"{r.d},{r.p_success!r},{r.expected!r}\n" for r in rows)
    if cfg.check:
        fails = [f"d={r.d}: |p - 2/d^2| = {r.abs_error:.3e}" for r in rows if r.abs_error > cfg.tol]
        _check(fails, out)
    return out


def _cmd_selftest(cfg: RunConfig) -> dict:
    results = {}
    p = esa.run_pattern(app.swap_input(4), esa.build_aux(4), (0, 0, 0, 0), bob=5).probability
    results["d4_single_pattern"] = abs(p - 2**-11) <= 1e-12 * 2**-11
    sw = app.entanglement_swap(4)
    results["d4_swap_total"] = abs(sw.total_success - 0.125) <= 1e-12 and sw.fidelity_min >= 1 - 1e-9
    tp = app.teleport(4, QuditVector.random(4, np.random.default_rng(cfg.seed)))
    results["d4_teleport"] = abs(tp.total_success - 0.125) <= 1e-9 and tp.corrected_fidelity >= 1 - 1e-9
    net = interferometer.decompose(interferometer.qft_matrix(4))
    results["d4_qft_netlist"] = len(net.beam_splitters) == 4 and net.reconstruction_error(
        interferometer.qft_matrix(4)) < 1e-10
    results["emitter_d6"] = emitter.generate(6).allclose(esa.build_aux(6))
    results["aux_schmidt_rank_d6"] = schmidt_rank(esa.build_aux(6), {0}) == 3
    out = {"results": results, "passed": all(results.values())}
    fails = [k for k, ok in results.items() if not ok]
    if fails:
        raise CheckFailed(fails, out)
    return out


HANDLERS = {
    "swap": _cmd_swap, "teleport": _cmd_teleport, "esa": _cmd_esa, "aux-gen": _cmd_aux_gen,
    "aux-build": _cmd_aux_build, "decompose": _cmd_decompose, "sweep": _cmd_sweep, "selftest": _cmd_selftest,
}


# ----------------------------------------------------------------------------
# output


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _flatten(payload: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        elif not isinstance(value, list):
            flat[name] = value
    return flat


def render(payload: dict, fmt: str) -> str:
    payload = dict(payload)
    csv_text = payload.pop("_csv", None)
    payload.pop("_plot", None)
    if fmt == "csv":
        if csv_text is not None:
            return csv_text
        flat = _flatten(payload)
        keys = sorted(flat)
        cell = lambda v: repr(v) if isinstance(v, float) else ("" if v is None else str(v))
        return ",".join(keys) + "\n" + ",".join(cell(flat[k]) for k in keys) + "\n"
    return json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n"


def _emit(cfg: RunConfig, payload: dict) -> None:
    text = render(payload, cfg.format)
    if cfg.out:
        Path(cfg.out).write_text(text)
        if "_plot" in payload:
            Path(cfg.out).with_suffix(".plot.csv").write_text(payload["_plot"])
    else:
        sys.stdout.write(text)


def _error(kind: str, message: str, code: int, **extra) -> int:
    body = {"error": kind, "message": message, "exit_code": code, **extra}
    sys.stderr.write(json.dumps(body, sort_keys=True, default=_json_default) + "\n")
    return code


def run(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    try:
        payload = HANDLERS[cfg.command](cfg)
    except CheckFailed as exc:
        _emit(cfg, exc.payload)
        return _error("check_failed", str(exc), EXIT_MISMATCH, failures=exc.failures)
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except (QesaError, ValueError) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_USAGE)
    if cfg.timing:
        payload["wall_time"] = time.perf_counter() - t0
    _emit(cfg, payload)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return run(cfg)
    except Exception as exc:  # noqa: BLE001 - the crash path must report, not raise
        return _error("crash", f"{type(exc).__name__}: {exc}", EXIT_CRASH)


if __name__ == "__main__":
    sys.exit(main())
