"""Spatial-mode unitaries, their beam-splitter netlists, and their action on Fock states.

Conventions (fixed so golden files stay bit-stable):

* QFT entries are ``omega**(j*k) / sqrt(d)`` with ``omega = exp(+2j*pi/d)``.
* A unitary ``U`` maps creation operators as ``a^dag_s -> sum_s' U[s', s] a^dag_s'``
  and never touches the time-bin, so ``U[D, s]`` is the amplitude for a photon
  entering spatial port ``s`` to leave through detector port ``D``.
* Beam splitter ``B(theta, phi) = [[cos, e^{i phi} sin], [sin, -e^{i phi} cos]]``
  (theta = pi/4 is 50:50; phi = 0 is the Hadamard butterfly).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NonUnitaryError
from .fock import FockState, apply_mode_map, make_config

UNITARY_TOL = 1e-10
OMEGA_CONVENTION = "omega = exp(+2j*pi/d); U[j,k] = omega**(j*k)/sqrt(d)"
BS_CONVENTION = "B(theta,phi) = [[cos t, e^{i p} sin t], [sin t, -e^{i p} cos t]]"


def unitarity_deviation(matrix: np.ndarray) -> float:
    m = np.asarray(matrix)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


@dataclass(frozen=True, eq=False)
class ModeUnitary:
    """Square unitary acting on spatial modes (or on time-bins, see :func:`apply_timebin`)."""

    matrix: np.ndarray
    kind: str = "generic"
    convention: str = OMEGA_CONVENTION

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise DimensionError(f"mode unitary must be a non-empty square matrix, got shape {m.shape}")
        dev = unitarity_deviation(m)
        if dev > UNITARY_TOL:
            raise NonUnitaryError(f"matrix is not unitary: max |U^dag U - I| = {dev:.3e}", dev)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> ModeUnitary:
        return ModeUnitary(self.matrix.conj().T, kind=self.kind + "^dag", convention=self.convention)

    def __matmul__(self, other: ModeUnitary) -> ModeUnitary:
        return ModeUnitary(self.matrix @ other.matrix, convention=self.convention)


def qft_matrix(d: int) -> ModeUnitary:
    if d < 2:
        raise DimensionError(f"QFT needs d >= 2, got {d}")
    jk = np.outer(np.arange(d), np.arange(d)) % d
    return ModeUnitary(np.exp(2j * np.pi * jk / d) / math.sqrt(d), kind="qft")


def beam_splitter_matrix(theta: float, phi: float = 0.0) -> np.ndarray:
    c, s, e = math.cos(theta), math.sin(theta), complex(math.cos(phi), math.sin(phi))
    return np.array([[c, e * s], [s, -e * c]], dtype=complex)


@dataclass(frozen=True)
class BeamSplitter:
    modes: tuple[int, int]
    theta: float
    phi: float = 0.0
    kind: str = field(default="bs", init=False)

    @property
    def matrix(self) -> np.ndarray:
        return beam_splitter_matrix(self.theta, self.phi)

    @property
    def is_balanced(self) -> bool:
        return abs(self.theta - math.pi / 4) < 1e-12


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    phase: float
    kind: str = field(default="ps", init=False)

    @property
    def modes(self) -> tuple[int]:
        return (self.mode,)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[complex(math.cos(self.phase), math.sin(self.phase))]])


@dataclass(frozen=True)
class BSNetlist:
    """Ordered optical elements (first applied first) plus output wiring.

    ``output_ports[j]`` is the physical line that ends on detector port ``j``;
    the wiring is a passive relabelling, not an optical element.
    """

    size: int
    elements: tuple = ()
    output_ports: tuple[int, ...] | None = None
    global_phase: float = 0.0
    method: str = "reck"

    def __post_init__(self):
        ports = tuple(range(self.size)) if self.output_ports is None else tuple(self.output_ports)
        if sorted(ports) != list(range(self.size)):
            raise DimensionError(f"output_ports {ports} is not a permutation of 0..{self.size - 1}")
        object.__setattr__(self, "output_ports", ports)
        object.__setattr__(self, "elements", tuple(self.elements))
        for el in self.elements:
            if any(not 0 <= m < self.size for m in el.modes) or len(set(el.modes)) != len(el.modes):
                raise DimensionError(f"element {el} addresses invalid modes for size {self.size}")

    @property
    def beam_splitters(self) -> list[BeamSplitter]:
        return [e for e in self.elements if e.kind == "bs"]

    @property
    def phase_shifters(self) -> list[PhaseShifter]:
        return [e for e in self.elements if e.kind == "ps"]

    def compose(self) -> np.ndarray:
        m = np.eye(self.size, dtype=complex)
        for el in self.elements:
            full = np.eye(self.size, dtype=complex)
            idx = np.array(el.modes)
            full[np.ix_(idx, idx)] = el.matrix
            m = full @ m
        wiring = np.zeros((self.size, self.size))
        for port, line in enumerate(self.output_ports):
            wiring[port, line] = 1.0
        return np.exp(1j * self.global_phase) * (wiring @ m)

    def reconstruction_error(self, target: ModeUnitary | np.ndarray) -> float:
        t = target.matrix if isinstance(target, ModeUnitary) else np.asarray(target)
        return float(np.max(np.abs(self.compose() - t)))

    def to_json(self, target: ModeUnitary | np.ndarray | None = None) -> dict:
        elements = []
        for el in self.elements:
            if el.kind == "bs":
                elements.append({"kind": "bs", "modes": list(el.modes), "theta": el.theta, "phi": el.phi})
            else:
                elements.append({"kind": "ps", "modes": [el.mode], "theta": None, "phi": el.phase})
        out = {
            "convention": BS_CONVENTION,
            "size": self.size,
            "method": self.method,
            "elements": elements,
            "output_ports": list(self.output_ports),
            "global_phase": self.global_phase,
            "beam_splitter_count": len(self.beam_splitters),
            "phase_shifter_count": len(self.phase_shifters),
        }
        if target is not None:
            out["reconstruction_error"] = self.reconstruction_error(target)
        return out

    @classmethod
    def from_json(cls, data: dict) -> BSNetlist:
        els = []
        for e in data["elements"]:
            if e["kind"] == "bs":
                els.append(BeamSplitter(tuple(e["modes"]), e["theta"], e["phi"]))
            else:
                els.append(PhaseShifter(e["modes"][0], e["phi"]))
        return cls(data["size"], tuple(els), tuple(data["output_ports"]), data.get("global_phase", 0.0),
                   data.get("method", "reck"))


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _bit_reverse(j: int, bits: int) -> int:
    return int(format(j, f"0{bits}b")[::-1], 2) if bits else 0


def fft_netlist(d: int) -> BSNetlist:
    """Radix-2 decimation-in-frequency butterflies for the QFT (``d`` a power of two).

    Each butterfly is one 50:50 splitter followed by a twiddle phase on its
    lower line when the twiddle is non-trivial. Results land in bit-reversed
    lines, which the output wiring undoes.
    """
    if not _is_power_of_two(d) or d < 2:
        raise DimensionError(f"FFT layout needs d a power of two >= 2, got {d}")
    els: list = []
    n = d
    while n >= 2:
        half = n // 2
        for start in range(0, d, n):
            for k in range(half):
                els.append(BeamSplitter((start + k, start + k + half), math.pi / 4, 0.0))
                if k:
                    els.append(PhaseShifter(start + k + half, 2 * math.pi * k / n))
        n = half
    bits = d.bit_length() - 1
    ports = tuple(_bit_reverse(j, bits) for j in range(d))
    return BSNetlist(d, tuple(els), ports, 0.0, method="fft")


def reck_netlist(u: ModeUnitary, tol: float = 1e-14) -> BSNetlist:
    """Triangular nearest-neighbour decomposition of an arbitrary unitary.

    Nulls ``U^dag`` column by column from the bottom with splitters on lines
    ``(r-1, r)``, leaving a diagonal ``D``. Then ``U = D^dag T_K ... T_1``, so the
    splitters are emitted in nulling order followed by output phase shifters.
    """
    d = u.size
    w = u.matrix.conj().T.copy()
    els: list = []
    for c in range(d - 1):
        for r in range(d - 1, c, -1):
            a, b = w[r - 1, c], w[r, c]
            if abs(b) < tol:
                continue
            theta = math.atan2(abs(b), abs(a))
            phi = float(np.angle(a) - np.angle(b)) if abs(a) >= tol else 0.0
            blk = beam_splitter_matrix(theta, phi)
            w[[r - 1, r], :] = blk @ w[[r - 1, r], :]
            els.append(BeamSplitter((r - 1, r), theta, phi))
    for k in range(d):
        phase = -float(np.angle(w[k, k]))
        if abs(phase) > tol:
            els.append(PhaseShifter(k, phase))
    return BSNetlist(d, tuple(els), None, 0.0, method="reck")


def decompose(u: ModeUnitary | np.ndarray, method: str = "auto", tol: float = UNITARY_TOL) -> BSNetlist:
    """Beam-splitter / phase-shifter netlist reproducing ``u`` to ``tol``.

    ``method="auto"`` uses the FFT butterfly layout for QFTs of power-of-two
    size and the triangular layout otherwise.
    """
    if not isinstance(u, ModeUnitary):
        u = ModeUnitary(u)
    if method == "auto":
        use_fft = _is_power_of_two(u.size) and u.size >= 2 and np.allclose(
            u.matrix, qft_matrix(u.size).matrix, atol=tol, rtol=0
        )
        method = "fft" if use_fft else "reck"
    if method == "fft":
        net = fft_netlist(u.size)
    elif method == "reck":
        net = reck_netlist(u)
    else:
        raise ValueError(f"unknown decomposition method {method!r}")
    err = net.reconstruction_error(u)
    if err > tol:
        raise NonUnitaryError(f"{method} netlist reconstructs the target only to {err:.3e}", err)
    return net


def _check_modes(modes: Sequence[int], size: int, state: FockState) -> list[int]:
    modes = [int(m) for m in modes]
    if len(modes) != size:
        raise DimensionError(f"unitary is {size}x{size} but {len(modes)} spatial modes were given")
    if len(set(modes)) != len(modes):
        raise DimensionError(f"duplicate spatial modes in {modes}")
    for m in modes:
        if not 0 <= m < state.spatial_count:
            raise DimensionError(f"spatial mode {m} outside [0, {state.spatial_count - 1}]")
    return modes


def apply_spatial(u: ModeUnitary | np.ndarray, state: FockState, modes: Sequence[int]) -> FockState:
    """Apply ``u`` to the listed spatial modes of ``state``, every time-bin alike."""
    mat = u.matrix if isinstance(u, ModeUnitary) else np.asarray(u, dtype=complex)
    modes = _check_modes(modes, mat.shape[0], state)
    pos = {m: i for i, m in enumerate(modes)}
    cols = [[(modes[j], mat[j, i]) for j in range(len(modes)) if mat[j, i] != 0] for i in range(len(modes))]

    def transform(s, t):
        i = pos.get(s)
        if i is None:
            return None
        return [((m, t), c) for m, c in cols[i]]

    return apply_mode_map(state, transform)


def apply_timebin(u: ModeUnitary | np.ndarray, state: FockState, spatial: int) -> FockState:
    """Apply ``u`` to the time-bin degree of freedom of one spatial mode."""
    mat = u.matrix if isinstance(u, ModeUnitary) else np.asarray(u, dtype=complex)
    if mat.shape[0] != state.dim:
        raise DimensionError(f"time-bin unitary is {mat.shape[0]}x{mat.shape[0]} but d={state.dim}")
    if not 0 <= spatial < state.spatial_count:
        raise DimensionError(f"spatial mode {spatial} outside [0, {state.spatial_count - 1}]")
    d = state.dim
    cols = [[(j, mat[j, i]) for j in range(d) if mat[j, i] != 0] for i in range(d)]

    def transform(s, t):
        if s != spatial:
            return None
        return [((spatial, j), c) for j, c in cols[t]]

    return apply_mode_map(state, transform)


def apply_netlist(netlist: BSNetlist, state: FockState, modes: Sequence[int]) -> FockState:
    """Apply a netlist element by element, then its output wiring.

    Independent of :func:`apply_spatial` with the composed matrix: every step
    touches at most two lines.
    """
    modes = _check_modes(modes, netlist.size, state)
    out = state
    for el in netlist.elements:
        out = apply_spatial(el.matrix, out, [modes[i] for i in el.modes])
    if netlist.global_phase:
        g = complex(math.cos(netlist.global_phase), math.sin(netlist.global_phase))
        mset = set(modes)
        out = out.map_amplitudes(lambda c, a: a * g ** sum(n for s, _, n in c if s in mset))
    wiring = {modes[line]: modes[port] for port, line in enumerate(netlist.output_ports)}
    return out.relabel(wiring)


def pattern_state(d: int, pattern: Sequence[int], spatial_count: int | None = None) -> FockState:
    """Detector-side basis state: one photon in time-bin ``i`` at output port ``pattern[i]``."""
    S = d if spatial_count is None else spatial_count
    return FockState({make_config((D, t) for t, D in enumerate(pattern)): 1.0}, d, S)
