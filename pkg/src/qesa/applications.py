"""Entanglement swapping and teleportation through the analyzer, plus dimension sweeps.

Mode layouts (spatial indices):

* swap: ``a=0, b=1``, analyzer ports up to ``d-1``, Alice's register ``A=d``,
  Bob's register ``B=d+1``.
* teleport: ``a=0`` carries the input qudit, ``b0=1`` is half of the resource
  pair, ``b1=d`` is Bob's output.
"""

from __future__ import annotations

import csv
import io
import math
import time
from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionError, NormalizationError
from .esa import (
    PORT_A,
    PORT_B,
    AuxSpec,
    ProtocolResult,
    aux_spec,
    enumerate_success,
    require_even,
    run_pattern,
    spec_from_aux,
)
from .fock import FockState, QuditVector, fidelity, make_config
from .interferometer import apply_timebin

DEFAULT_MAX_DIM = 8


def swap_input(d: int) -> FockState:
    """``(1/d) sum_i |i>_a |i>_A  (x)  sum_k |k>_b |k>_B``."""
    d = require_even(d)
    A, B = d, d + 1
    amps = {}
    for i in range(d):
        for k in range(d):
            amps[make_config([(PORT_A, i), (A, i), (PORT_B, k), (B, k)])] = 1.0 / d
    return FockState(amps, d, d + 2)


def swap_target(spec: AuxSpec, spatial_count: int | None = None) -> FockState:
    """Normalized ``sum_j |z_j>_A |y_j>_B + |y_j>_A |z_j>_B``."""
    d = spec.d
    S = d + 2 if spatial_count is None else spatial_count
    A, B = d, d + 1
    amps = {}
    for br in spec.branches:
        amps[make_config([(A, br.z), (B, br.y)])] = 1.0
        amps[make_config([(A, br.y), (B, br.z)])] = 1.0
    return FockState(amps, d, S).normalized()


def swap_amplitude_constant(d: int) -> float:
    """Amplitude of every corrected output term: ``1 / (d sqrt(d^d) sqrt(d/2))``."""
    return 1.0 / (d * math.sqrt(d**d) * math.sqrt(d / 2))


def teleport_input(qudit: QuditVector) -> FockState:
    d = require_even(qudit.dim)
    b1 = d
    amps = {}
    for i, alpha in enumerate(qudit.coeffs):
        if alpha == 0:
            continue
        for k in range(d):
            amps[make_config([(PORT_A, i), (PORT_B, k), (b1, k)])] = alpha / math.sqrt(d)
    return FockState(amps, d, d + 1)


@dataclass
class SwapResult:
    d: int
    family: str
    total_success: float
    expected: float
    fidelity_min: float
    fidelity_max: float
    output_state: FockState
    amplitude_constant: float
    matches_target_form: bool
    protocol: ProtocolResult

    def to_json(self, include_table: bool = False) -> dict:
        return {
            "protocol": "swap",
            "d": self.d,
            "family": self.family,
            "total_success_probability": self.total_success,
            "expected": self.expected,
            "abs_error": abs(self.total_success - self.expected),
            "fidelity_min": self.fidelity_min,
            "fidelity_max": self.fidelity_max,
            "amplitude_constant": self.amplitude_constant,
            "matches_target_form": self.matches_target_form,
            "output_state": self.output_state.to_json(),
            "enumeration": self.protocol.to_json(include_table),
        }


@dataclass
class TeleportResult:
    d: int
    input: QuditVector
    total_success: float
    expected: float
    corrected_fidelity: float
    fidelity_max: float
    output: QuditVector
    protocol: ProtocolResult

    def to_json(self, include_table: bool = False) -> dict:
        return {
            "protocol": "teleport",
            "d": self.d,
            "input": [[float(c.real), float(c.imag)] for c in self.input.coeffs],
            "total_success_probability": self.total_success,
            "expected": self.expected,
            "abs_error": abs(self.total_success - self.expected),
            "fidelity_min": self.corrected_fidelity,
            "fidelity_max": self.fidelity_max,
            "output": [[float(c.real), float(c.imag)] for c in self.output.coeffs],
            "enumeration": self.protocol.to_json(include_table),
        }


def _resolve_aux(d, aux_family, shift, aux) -> tuple[FockState, AuxSpec, str]:
    if aux is not None:
        if aux.dim != d:
            raise DimensionError(f"supplied auxiliary state has d={aux.dim}, expected {d}")
        return aux, spec_from_aux(aux), "custom"
    spec = aux_spec(d, aux_family, shift=shift)
    return spec.to_state(), spec, aux_family


def entanglement_swap(
    d: int,
    aux_family: str = "rotated_pairs",
    *,
    shift: int | None = None,
    aux: FockState | None = None,
    mode: str = "full_enumeration",
    convention: str = "physical",
    keep_table: bool = False,
    seed: int = 0,
    n_checks: int = 100,
    workers: int = 1,
) -> SwapResult:
    """Swap entanglement from ``a-A`` and ``b-B`` onto ``A-B``.

    The reported ``output_state`` is the corrected, unnormalized ``A, B``
    state for the all-zero pattern, relabelled to ``A=0, B=1``; every
    amplitude should equal :func:`swap_amplitude_constant`.
    """
    d = require_even(d)
    aux_state, spec, family = _resolve_aux(d, aux_family, shift, aux)
    psi = swap_input(d)
    target = swap_target(spec)
    proto = enumerate_success(
        psi, aux_state, mode, bob=d + 1, target=target, convention=convention,
        n_checks=n_checks, seed=seed, keep_table=keep_table, workers=workers, family=family,
    )
    ref = run_pattern(psi, aux_state, (0,) * d, bob=d + 1, convention=convention)
    out = ref.corrected.relabel({d: 0, d + 1: 1}, 2)
    const = swap_amplitude_constant(d)
    tgt_support = {make_config([(0, br.z), (1, br.y)]) for br in spec.branches}
    tgt_support |= {make_config([(0, br.y), (1, br.z)]) for br in spec.branches}
    form_ok = set(out.configs) == tgt_support and all(
        abs(a - const) <= 1e-9 * const for _, a in out.items()
    )
    return SwapResult(
        d, family, proto.total_success_probability, 2 / d**2,
        proto.fidelity_min, proto.fidelity_max, out, const, form_ok, proto,
    )


def teleport(
    d: int,
    qudit: QuditVector,
    aux_family: str = "rotated_pairs",
    *,
    shift: int | None = None,
    aux: FockState | None = None,
    mode: str = "full_enumeration",
    convention: str = "physical",
    keep_table: bool = False,
    seed: int = 0,
    n_checks: int = 100,
    workers: int = 1,
) -> TeleportResult:
    """Teleport ``qudit`` from port ``a`` to Bob's register ``b1``.

    Bob applies the diagonal phase correction, then the pair swap
    ``y_j <-> z_j``. ``corrected_fidelity`` is the minimum over all evaluated
    patterns.
    """
    d = require_even(d)
    if qudit.dim != d:
        raise DimensionError(f"qudit has dimension {qudit.dim}, expected {d}")
    if not qudit.is_normalized():
        raise NormalizationError(f"input qudit has norm^2 {qudit.norm2():.12g}, expected 1")
    aux_state, spec, family = _resolve_aux(d, aux_family, shift, aux)
    psi = teleport_input(qudit)
    b1 = d
    swap = spec.pair_swap()
    target = qudit.to_state(b1, d + 1)
    proto = enumerate_success(
        psi, aux_state, mode, bob=b1, target=target, post_unitary=swap, convention=convention,
        n_checks=n_checks, seed=seed, keep_table=keep_table, workers=workers, family=family,
    )
    ref = run_pattern(psi, aux_state, (0,) * d, bob=b1, convention=convention, post_unitary=swap)
    out = QuditVector.from_state(ref.corrected.relabel({b1: 0}, 1), 0)
    out = QuditVector(out.coeffs / math.sqrt(out.norm2()))
    return TeleportResult(
        d, qudit, proto.total_success_probability, 2 / d**2,
        proto.fidelity_min, proto.fidelity_max, out, proto,
    )


def teleport_pattern_fidelity(qudit: QuditVector, pattern: Sequence[int], aux: FockState | None = None,
                              convention: str = "physical") -> tuple[float, float]:
    """``(probability, fidelity)`` of one pattern through the Fock-state reference path."""
    d = qudit.dim
    aux = aux if aux is not None else aux_spec(d).to_state()
    spec = spec_from_aux(aux)
    psi = teleport_input(qudit)
    res = run_pattern(psi, aux, pattern, bob=d, convention=convention, post_unitary=spec.pair_swap())
    return res.probability, fidelity(res.corrected, qudit.to_state(d, d + 1))


@dataclass
class SweepRow:
    d: int
    p_success: float
    expected: float
    abs_error: float
    wall_time: float


def sweep_cost(d: int) -> int:
    return d**d


def sweep(
    dims: Sequence[int],
    protocol: str = "swap",
    *,
    mode: str = "full_enumeration",
    max_dim: int = DEFAULT_MAX_DIM,
    aux_family: str = "rotated_pairs",
    seed: int = 0,
    workers: int = 1,
) -> list[SweepRow]:
    """Success probability against ``2/d^2`` for each dimension."""
    dims = [int(d) for d in dims]
    for d in dims:
        require_even(d)
        if d > max_dim:
            raise DimensionError(
                f"d={d} exceeds the configured maximum {max_dim}: full enumeration would visit "
                f"{sweep_cost(d):.3e} patterns"
            )
    rng = np.random.default_rng(seed)
    rows = []
    for d in dims:
        t0 = time.perf_counter()
        if protocol == "swap":
            p = entanglement_swap(d, aux_family, mode=mode, seed=seed, workers=workers).total_success
        elif protocol == "teleport":
            p = teleport(d, QuditVector.random(d, rng), aux_family, mode=mode, seed=seed, workers=workers).total_success
        else:
            raise ValueError(f"unknown protocol {protocol!r}; expected 'swap' or 'teleport'")
        expected = 2 / d**2
        rows.append(SweepRow(d, p, expected, abs(p - expected), time.perf_counter() - t0))
    return rows


SWEEP_COLUMNS = ("d", "p_success", "expected", "abs_error", "wall_time")


def rows_to_csv(rows: Sequence[SweepRow], columns: Sequence[str] = SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        data = asdict(row)
        writer.writerow([repr(data[c]) if isinstance(data[c], float) else data[c] for c in columns])
    return buf.getvalue()


def rows_to_json(rows: Sequence[SweepRow], columns: Sequence[str] = SWEEP_COLUMNS) -> list[dict]:
    return [{c: asdict(r)[c] for c in columns} for r in rows]


def apply_bob_correction(state: FockState, correction, bob: int) -> FockState:
    return apply_timebin(correction, state, bob)
