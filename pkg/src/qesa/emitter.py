"""Deterministic generation of the rotated-pairs auxiliary state from one emitter.

The emitter has a dark ground level ``|0>_s`` and a bright level ``|1>_s``
with a closed optical transition; exciting it emits one photon only in
branches where the spin is bright. For ``d > 4`` a control register in an
equal superposition of ``d/2`` basis states ``|c_j>`` selects, via controlled
flips, which branch emits. Every emission is recorded with its raw clock
tick and the spatial mode the switch tree routed it to; delay lines and a
final relabelling pass map raw ticks to time-bins.

Time is abstracted to integer ticks: round ``r`` (creating pair
``(2r, 2r+1)``) starts at tick ``r * (d - 2)`` and emits position ``k``
(modes ``x_{2k}, x_{2k+1}``) at ticks ``+2k, +2k+1``. Modes at position ``k``
are delayed by ``d - 4 - 2k`` ticks so a whole round arrives together.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionError, ScheduleError
from .esa import rotated_pairs_spec
from .fock import FockState, make_config

DARK = 0
BRIGHT = 1
MODULUS_TOL = 1e-12


def control_qubits(d: int) -> int:
    return max(1, math.ceil(math.log2(d // 2)))


def switch_levels(d: int) -> int:
    return max(1, math.ceil(math.log2(d - 2)))


def switch_count(d: int) -> int:
    return 2 ** switch_levels(d) - 1


def route(d: int, mode: int) -> list[tuple[int, int]]:
    """``(switch, output)`` pairs from the root of the switch tree to ``x_mode``."""
    levels = switch_levels(d)
    node, path = 0, []
    for bit in format(mode, f"0{levels}b"):
        path.append((node, int(bit)))
        node = 2 * node + 1 + int(bit)
    return path


@dataclass(frozen=True)
class Emission:
    raw_bin: int
    spatial: int


@dataclass
class DelayConfig:
    delays: tuple[int, ...]

    @classmethod
    def default(cls, d: int) -> DelayConfig:
        return cls(tuple(d - 4 - 2 * (m // 2) for m in range(d - 2)))

    def with_delay(self, mode: int, value: int) -> DelayConfig:
        out = list(self.delays)
        out[mode] = value
        return DelayConfig(tuple(out))


@dataclass
class ScheduleEntry:
    step: int
    control_branch: int | None
    spin_op: str
    raw_bin: int | None = None
    spatial_mode: int | None = None
    delay_applied: int | None = None
    route: list | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class EmitterState:
    """Amplitudes keyed by ``(control branch, spin, emission records)``."""

    d: int
    amplitudes: dict = field(default_factory=dict)

    def controlled_flip(self, control: int | None) -> EmitterState:
        out = {}
        for (c, spin, rec), a in self.amplitudes.items():
            if control is None or c == control:
                spin ^= 1
            out[(c, spin, rec)] = out.get((c, spin, rec), 0j) + a
        return EmitterState(self.d, out)

    def excite(self, raw_bin: int, spatial: int) -> tuple[EmitterState, set[int]]:
        out, fired = {}, set()
        for (c, spin, rec), a in self.amplitudes.items():
            if spin == BRIGHT:
                rec = rec + (Emission(raw_bin, spatial),)
                fired.add(c)
            out[(c, spin, rec)] = a
        return EmitterState(self.d, out), fired

    def moduli(self) -> list[float]:
        return [abs(a) for a in self.amplitudes.values()]

    def photon_state(self, spin: int | None = None, control: int | None = None,
                     spatial_count: int | None = None) -> FockState:
        """Photon part of the selected branches; raw ticks used as time-bins.

        Vacuum branches are kept, so the result is flagged number-mixed.
        """
        amps = {}
        horizon = 1 + max([e.raw_bin for (_, _, rec) in self.amplitudes for e in rec] + [0])
        for (c, s, rec), a in self.amplitudes.items():
            if (spin is not None and s != spin) or (control is not None and c != control):
                continue
            cfg = make_config((e.spatial, e.raw_bin) for e in rec)
            amps[cfg] = amps.get(cfg, 0j) + a
        S = self.d - 2 if spatial_count is None else spatial_count
        return FockState(amps, max(self.d, horizon), S, mixed_number=True)


@dataclass
class EmitterRun:
    d: int
    state: FockState
    outcomes: tuple[str, ...]
    log: list[ScheduleEntry]
    relabel_log: list[dict]
    violations: list[str]
    pre_measurement: EmitterState
    snapshots: list[tuple[str, EmitterState]]
    switch_count: int
    control_qubits: int

    def log_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.log)


def _parse_outcomes(outcomes, m: int, rng: np.random.Generator | None) -> tuple[str, ...]:
    if outcomes is None:
        return ("+",) * m
    if isinstance(outcomes, str):
        if outcomes == "random":
            if rng is None:
                raise ValueError("random measurement outcomes need an explicit seeded generator")
            return tuple("+-"[int(b)] for b in rng.integers(0, 2, size=m))
        if outcomes in ("plus", "minus"):
            return (("+" if outcomes == "plus" else "-"),) + ("+",) * (m - 1)
        outcomes = [o for o in outcomes.replace(",", "") if o.strip()]
    out = tuple(outcomes)
    if len(out) != m or any(o not in "+-" for o in out):
        raise ValueError(f"need {m} outcomes from '+'/'-', got {outcomes!r}")
    return out


def _measure_x(amplitudes: dict, outcomes: tuple[str, ...], key_bit) -> dict:
    # <s_X| on each qubit: (<0| + (-1)^s <1|)/sqrt(2)
    m = len(outcomes)
    out = {}
    for key, a in amplitudes.items():
        value = key_bit(key)
        sign = 1
        for q, o in enumerate(outcomes):
            if o == "-" and (value >> q) & 1:
                sign = -sign
        rec = key[2]
        out[rec] = out.get(rec, 0j) + a * sign / math.sqrt(2**m)
    return out


def _records_to_state(d: int, branches: dict, tick_map) -> tuple[FockState, list[str]]:
    amps, problems = {}, []
    for rec, a in branches.items():
        photons = []
        for e in rec:
            t = tick_map(e)
            if t is None:
                problems.append(f"photon in x{e.spatial} (raw tick {e.raw_bin}) does not land on any time-bin")
                continue
            photons.append((e.spatial, t))
        cfg = make_config(photons)
        amps[cfg] = amps.get(cfg, 0j) + a
    norm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
    amps = {c: a / norm for c, a in amps.items() if abs(a) > 1e-12}
    if problems:
        return FockState({}, d, d - 2), problems
    return FockState(amps, d, d - 2), problems


def generate_d4(outcome: str = "plus") -> FockState:
    """Single emitter, one switch, no control register (d = 4).

    Spin starts in ``(|0> + |1>)/sqrt(2)``; the sequence is excite -> x0,
    excite -> x1, flip, excite -> x0, excite -> x1, then an X measurement of
    the spin with the given outcome (``"plus"``/``"minus"`` or ``"+"``/``"-"``).
    """
    return simulate_d4(outcome).state


def simulate_d4(outcome: str = "plus") -> EmitterRun:
    d = 4
    outcomes = _parse_outcomes(outcome, 1, None)
    st = EmitterState(d, {(0, DARK, ()): 1 / math.sqrt(2), (0, BRIGHT, ()): 1 / math.sqrt(2)})
    log, snaps = [], []
    step = 0
    for label, op in [
        ("emit t0 -> x0", ("excite", 0, 0)),
        ("emit t1 -> x1", ("excite", 1, 1)),
        ("flip", ("flip",)),
        ("emit t2 -> x0", ("excite", 2, 0)),
        ("emit t3 -> x1", ("excite", 3, 1)),
    ]:
        if op[0] == "flip":
            st = st.controlled_flip(None)
            log.append(ScheduleEntry(step, None, "flip"))
        else:
            st, _ = st.excite(op[1], op[2])
            log.append(ScheduleEntry(step, None, "excite", op[1], op[2], 0, route(d, op[2])))
        snaps.append((label, st))
        step += 1
    log.append(ScheduleEntry(step, None, "measure_x_spin:" + outcomes[0]))
    branches = _measure_x(st.amplitudes, outcomes, lambda key: key[1])
    state, problems = _records_to_state(d, branches, lambda e: e.raw_bin)
    return EmitterRun(d, state, outcomes, log, [], problems, st, snaps, switch_count(d), 0)


def simulate(
    d: int,
    outcomes=None,
    *,
    delays: DelayConfig | None = None,
    rng: np.random.Generator | None = None,
    max_dim: int | None = None,
) -> EmitterRun:
    """Run the controlled flip-excite-excite-flip schedule for even ``d >= 4``.

    Violations (stray emissions, collisions, bad delays, wrong branch
    contents) are collected in ``EmitterRun.violations`` rather than raised.
    """
    if d < 4 or d % 2:
        raise DimensionError(f"emitter generation needs an even d >= 4, got {d}")
    if max_dim is not None and d > max_dim:
        raise DimensionError(f"d={d} exceeds the configured maximum {max_dim}")
    h = d // 2
    m = control_qubits(d)
    outs = _parse_outcomes(outcomes, m, rng)
    delays = DelayConfig.default(d) if delays is None else delays
    violations: list[str] = []
    if len(delays.delays) != d - 2:
        raise DimensionError(f"need {d - 2} delays, got {len(delays.delays)}")
    for mode, dl in enumerate(delays.delays):
        if dl < 0:
            violations.append(f"x{mode}: negative delay {dl}")

    st = EmitterState(d, {(j, DARK, ()): 1 / math.sqrt(h) for j in range(h)})
    log: list[ScheduleEntry] = []
    snaps: list[tuple[str, EmitterState]] = []
    step = 0
    round_len = d - 2
    for r in range(h):
        start = r * round_len
        for k in range(h - 1):
            j = (k - r) % h
            st = st.controlled_flip(j)
            log.append(ScheduleEntry(step, j, "cflip"))
            step += 1
            for offset in (0, 1):
                mode = 2 * k + offset
                tick = start + 2 * k + offset
                st, fired = st.excite(tick, mode)
                log.append(ScheduleEntry(step, j, "excite", tick, mode, delays.delays[mode], route(d, mode)))
                if fired != {j}:
                    violations.append(f"step {step}: excitation at tick {tick} emitted in branches {sorted(fired)}, expected [{j}]")
                step += 1
            st = st.controlled_flip(j)
            log.append(ScheduleEntry(step, j, "cflip"))
            step += 1
            if any(abs(mod - 1 / math.sqrt(h)) > MODULUS_TOL for mod in st.moduli()):
                violations.append(f"step {step}: branch amplitudes lost equal modulus")
        snaps.append((f"round {r}", st))
    if any(spin != DARK for (_, spin, _) in st.amplitudes):
        violations.append("emitter not returned to the dark state")

    # delay lines, then relabel arrival ticks to time-bins
    tick_to_bin = {}
    relabel_log = []
    for r in range(h):
        for offset in (0, 1):
            arrival = r * round_len + d - 4 + offset
            tick_to_bin[arrival] = 2 * r + offset
            relabel_log.append({"round": r, "arrival_tick": arrival, "time_bin": 2 * r + offset})

    expected = rotated_pairs_spec(d)
    for (j, _, rec) in st.amplitudes:
        arrivals = [e.raw_bin + delays.delays[e.spatial] for e in rec]
        seen: dict[int, int] = {}
        for e, t in zip(rec, arrivals):
            if t in seen:
                violations.append(f"branch {j}: x{e.spatial} and x{seen[t]} collide at tick {t}")
            seen[t] = e.spatial
        bins = {}
        for e, t in zip(rec, arrivals):
            b = tick_to_bin.get(t)
            if b is None:
                violations.append(f"branch {j}: x{e.spatial} photon (raw tick {e.raw_bin}) arrives at tick {t}, "
                                  "outside every aligned window")
            else:
                bins[e.spatial] = b
        row = tuple(bins.get(x) for x in range(d - 2))
        if None not in row and row != expected.branches[j].a_row:
            bad = [x for x in range(d - 2) if row[x] != expected.branches[j].a_row[x]]
            violations.append(f"branch {j}: time-bins {row} differ from the target at " +
                              ", ".join(f"x{x}" for x in bad))

    log.append(ScheduleEntry(step, None, "measure_x_control:" + "".join(outs)))
    if violations:
        return EmitterRun(d, FockState({}, d, d - 2), outs, log, relabel_log, violations, st, snaps,
                          switch_count(d), m)
    branches = _measure_x(st.amplitudes, outs, lambda key: key[0])
    state, problems = _records_to_state(d, branches, lambda e: tick_to_bin.get(e.raw_bin + delays.delays[e.spatial]))
    return EmitterRun(d, state, outs, log, relabel_log, violations + problems, st, snaps, switch_count(d), m)


def generate(d: int, outcomes=None, *, delays: DelayConfig | None = None,
             rng: np.random.Generator | None = None, max_dim: int | None = None) -> FockState:
    """Auxiliary state for even ``d >= 4``; raises :class:`ScheduleError` on any violation."""
    run = simulate(d, outcomes, delays=delays, rng=rng, max_dim=max_dim)
    if run.violations:
        raise ScheduleError(f"emitter schedule failed for d={d}: {run.violations[0]}", run.violations)
    return run.state


@dataclass
class ScheduleReport:
    d: int
    ok: bool
    violations: list[str]
    branches: int
    photons_per_branch: list[int]
    switch_count: int
    control_qubits: int

    def to_json(self) -> dict:
        return asdict(self)


def verify_schedule(d: int, delays: DelayConfig | None = None) -> ScheduleReport:
    """No-collision / correct-routing report for the default or a supplied delay set."""
    run = simulate(d, delays=delays)
    photons = sorted(len(rec) for (_, _, rec) in run.pre_measurement.amplitudes)
    return ScheduleReport(d, not run.violations, run.violations, len(run.pre_measurement.amplitudes),
                          photons, run.switch_count, run.control_qubits)


def sign_normalized(state: FockState) -> FockState:
    """Rotate every amplitude onto the positive real axis."""
    return state.map_amplitudes(lambda c, a: abs(a))
