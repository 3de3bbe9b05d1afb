"""Linear-optics entangled-state analyzer for even-dimensional time-bin qudits.

Spatial ports entering the QFT are ordered ``(a, b, x_0, ..., x_{d-3})`` and
numbered ``0 .. d-1``; registers that never enter the interferometer (Alice's
and Bob's memories, the teleportation target) sit at spatial index ``d`` and
above. A detection pattern ``D`` has ``D[i]`` = output port that clicked in
time-bin ``i``.

Projections are returned in *ket form*: the state ``|P>`` whose dual is the
projection bra, so ``<P|psi>`` is ``inner_product(P, psi)`` or, on a subset of
modes, ``partial_project(P, psi)``.

Two phase conventions are supported:

``"physical"``
    The amplitude ``<pattern| U_QFT |config>``. A photon entering port ``s``
    and leaving through port ``D[t]`` picks up ``omega**(s * D[t])``.
``"transposed"``
    The exponent with the roles of spatial port and time-bin exchanged,
    ``omega**(t * D[s])``. It yields the same probabilities and a consistent
    diagonal correction, but it is *not* what the interferometer produces for
    general patterns; it is kept so the two can be compared.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AuxConstraintError, DimensionError, SymmetryCheckError
from .fock import Config, FockState, partial_project
from .interferometer import ModeUnitary, apply_timebin, qft_matrix

PORT_A = 0
PORT_B = 1
CONVENTIONS = ("physical", "transposed")
FAMILIES = ("rotated_pairs", "shifted", "explicit")
MODES = ("full_enumeration", "single_pattern_times_symmetry")
SYMMETRY_RTOL = 1e-9


def aux_port(k: int) -> int:
    return k + 2


def require_even(d: int) -> int:
    d = int(d)
    if d < 2 or d % 2:
        raise DimensionError(f"the analyzer needs an even dimension d >= 2 (odd d is unsupported), got {d}")
    return d


def _check_convention(convention: str) -> None:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown phase convention {convention!r}; expected one of {CONVENTIONS}")


# ----------------------------------------------------------------------------
# auxiliary state design


@dataclass(frozen=True)
class AuxBranch:
    a_row: tuple[int, ...]
    excluded: tuple[int, int]

    @property
    def y(self) -> int:
        return self.excluded[0]

    @property
    def z(self) -> int:
        return self.excluded[1]


@dataclass(frozen=True)
class AuxSpec:
    """Combinatorial design of the ``(d-2)``-photon auxiliary state.

    Branch ``j`` puts a photon in time-bin ``a_row[k]`` in auxiliary mode
    ``x_k`` and leaves time-bins ``excluded = (y_j, z_j)`` unused.
    """

    d: int
    branches: tuple[AuxBranch, ...]
    family: str = "explicit"

    def validate(self) -> AuxSpec:
        d = self.d
        if d < 2 or d % 2:
            raise AuxConstraintError("dimension", f"d must be even and >= 2, got {d}")
        if len(self.branches) != d // 2:
            raise AuxConstraintError("branch_count", f"need d/2 = {d // 2} branches, got {len(self.branches)}")
        for j, br in enumerate(self.branches):
            if len(br.a_row) != d - 2:
                raise AuxConstraintError("row_length", f"branch {j} has {len(br.a_row)} photons, need {d - 2}")
            if sorted(br.a_row + br.excluded) != list(range(d)):
                raise AuxConstraintError(
                    "permutation", f"branch {j}: {br.a_row} + excluded {br.excluded} is not a permutation of 0..{d - 1}"
                )
        for i, j in itertools.combinations(range(len(self.branches)), 2):
            bi, bj = self.branches[i], self.branches[j]
            if set(bi.excluded) & set(bj.excluded):
                raise AuxConstraintError(
                    "exclusion_disjoint", f"branches {i} and {j} exclude overlapping time-bins {bi.excluded}, {bj.excluded}"
                )
        return self

    def partner(self) -> dict[int, int]:
        """Map each time-bin to the other member of its exclusion pair."""
        out = {}
        for br in self.branches:
            out[br.y], out[br.z] = br.z, br.y
        return out

    def pair_swap(self) -> ModeUnitary:
        """Time-bin permutation exchanging ``y_j`` and ``z_j`` for every branch."""
        p = np.zeros((self.d, self.d))
        for t, u in self.partner().items():
            p[u, t] = 1.0
        return ModeUnitary(p, kind="permutation")

    def to_state(self, amplitudes: Sequence[complex] | None = None) -> FockState:
        n = len(self.branches)
        amps = [1 / math.sqrt(n)] * n if amplitudes is None else list(amplitudes)
        terms = {}
        for br, c in zip(self.branches, amps):
            cfg = tuple((k, t, 1) for k, t in enumerate(br.a_row))
            terms[cfg] = terms.get(cfg, 0j) + c
        return FockState(terms, self.d, self.d - 2)


def rotated_pairs_spec(d: int) -> AuxSpec:
    """Pairs ``(2p, 2p+1)`` laid out two modes at a time, rotated by one pair per branch.

    Branch ``j`` holds pair ``(k - j) mod d/2`` in modes ``x_{2k}, x_{2k+1}`` and
    leaves out pair ``(d/2 - 1 - j) mod d/2``. This is the state the single
    emitter protocol produces.
    """
    d = require_even(d)
    h = d // 2
    branches = []
    for j in range(h):
        row: list[int] = []
        for k in range(h - 1):
            p = (k - j) % h
            row += [2 * p, 2 * p + 1]
        q = (h - 1 - j) % h
        branches.append(AuxBranch(tuple(row), (2 * q, 2 * q + 1)))
    return AuxSpec(d, tuple(branches), "rotated_pairs").validate()


def shifted_spec(d: int, shift: int) -> AuxSpec:
    """Exclusion pairs ``(y, (y + shift) mod d)`` tiling all time-bins.

    Such a tiling exists only when the cycles of ``t -> t + shift`` have even
    length, i.e. ``d / gcd(d, shift)`` is even.
    """
    d = require_even(d)
    if not 1 <= shift <= d - 1:
        raise AuxConstraintError("shift", f"shift must lie in 1..{d - 1}, got {shift}")
    g = math.gcd(d, shift)
    cycle = d // g
    if cycle % 2:
        raise AuxConstraintError(
            "shift", f"shift {shift} splits Z_{d} into cycles of odd length {cycle}; no disjoint pair cover exists"
        )
    pairs = []
    for c in range(g):
        for m in range(cycle // 2):
            y = (c + 2 * m * shift) % d
            pairs.append((y, (y + shift) % d))
    rows = _rows_with_distinct_leads(d, pairs)
    branches = tuple(AuxBranch(tuple(r), p) for r, p in zip(rows, pairs))
    return AuxSpec(d, branches, "shifted").validate()


def _rows_with_distinct_leads(d: int, pairs: list[tuple[int, int]]) -> list[list[int]]:
    # x_0 gets a different time-bin in each branch, which keeps the Schmidt
    # rank across x_0 | rest at d/2.
    comps = [sorted(set(range(d)) - set(p)) for p in pairs]
    if d == 2:
        return [[] for _ in pairs]
    leads: list[int] = []

    def assign(j: int) -> bool:
        if j == len(comps):
            return True
        for t in comps[j]:
            if t not in leads:
                leads.append(t)
                if assign(j + 1):
                    return True
                leads.pop()
        return False

    if not assign(0):
        raise AuxConstraintError("leads", "no distinct-x0 assignment exists")
    return [[lead] + [t for t in comp if t != lead] for lead, comp in zip(leads, comps)]


def aux_spec(d: int, family: str = "rotated_pairs", *, shift: int | None = None, spec: AuxSpec | None = None) -> AuxSpec:
    d = require_even(d)
    if family == "rotated_pairs":
        return rotated_pairs_spec(d)
    if family == "shifted":
        if shift is None:
            raise ValueError("the shifted family needs a shift")
        return shifted_spec(d, shift)
    if family == "explicit":
        if spec is None:
            raise ValueError("the explicit family needs an AuxSpec")
        if spec.d != d:
            raise DimensionError(f"explicit spec has d={spec.d}, expected {d}")
        return spec.validate()
    raise ValueError(f"unknown auxiliary family {family!r}; expected one of {FAMILIES}")


def build_aux(d: int, family: str = "rotated_pairs", *, shift: int | None = None, spec: AuxSpec | None = None) -> FockState:
    """Normalized auxiliary state on ``d - 2`` spatial modes (vacuum for d = 2)."""
    return aux_spec(d, family, shift=shift, spec=spec).to_state()


def aux_branches(aux: FockState) -> list[tuple[AuxBranch, complex]]:
    """Recover ``(branch, amplitude)`` pairs from an auxiliary state.

    Each config must hold exactly one photon per auxiliary mode in distinct
    time-bins; the two unused time-bins become the exclusion pair (sorted).
    """
    d = aux.dim
    if aux.spatial_count != d - 2:
        raise DimensionError(f"auxiliary state must live on d-2 = {d - 2} spatial modes, got {aux.spatial_count}")
    out = []
    for cfg, amp in sorted(aux.items()):
        if [s for s, _, _ in cfg] != list(range(d - 2)) or any(n != 1 for _, _, n in cfg):
            raise AuxConstraintError("occupation", f"config {cfg} does not hold one photon per auxiliary mode")
        row = tuple(t for _, t, _ in cfg)
        rest = sorted(set(range(d)) - set(row))
        if len(rest) != 2:
            raise AuxConstraintError("permutation", f"config {cfg} reuses a time-bin")
        out.append((AuxBranch(row, (rest[0], rest[1])), amp))
    return out


def spec_from_aux(aux: FockState) -> AuxSpec:
    return AuxSpec(aux.dim, tuple(b for b, _ in aux_branches(aux))).validate()


# ----------------------------------------------------------------------------
# detection patterns and projections


def check_pattern(d: int, pattern: Iterable[int]) -> tuple[int, ...]:
    p = tuple(int(x) for x in pattern)
    if len(p) != d:
        raise DimensionError(f"pattern needs {d} entries (one per time-bin), got {len(p)}")
    if any(not 0 <= x < d for x in p):
        raise DimensionError(f"pattern entries must lie in [0, {d - 1}], got {p}")
    return p


def iter_patterns(d: int):
    """All ``d**d`` patterns in lexicographic order (``D[0]`` most significant)."""
    return itertools.product(range(d), repeat=d)


def pattern_from_index(index: int, d: int) -> tuple[int, ...]:
    return tuple((index // d ** (d - 1 - i)) % d for i in range(d))


def _omega(d: int, k) -> complex:
    return np.exp(2j * np.pi * (np.asarray(k) % d) / d)


@dataclass(frozen=True)
class ProjectionBra:
    """Success projection for one pattern over the ports ``(a, b, x_0, ...)``.

    ``ket`` is the dual (ket form) of the bra; only configs with one photon per
    spatial port are kept. ``global_factor`` is the common ``d**(-d/2)``.
    """

    ket: FockState
    pattern: tuple[int, ...]
    global_factor: complex
    convention: str = "physical"

    def coefficient(self, config) -> complex:
        """Bra coefficient ``<P|config>``."""
        return self.ket.amplitude(config).conjugate()


def projection_bra(d: int, pattern: Sequence[int], convention: str = "physical") -> ProjectionBra:
    """Sum over all permutations, each weighted by products of QFT matrix entries.

    Built straight from :func:`qft_matrix`, independent of the closed form in
    :func:`project_ab`.
    """
    d = require_even(d)
    _check_convention(convention)
    D = check_pattern(d, pattern)
    U = qft_matrix(d).matrix
    amps: dict[Config, complex] = {}
    for perm in itertools.permutations(range(d)):
        amp = 1.0 + 0j
        for s, t in enumerate(perm):
            amp *= U[D[t], s] if convention == "physical" else U[D[s], t]
        amps[tuple((s, t, 1) for s, t in enumerate(perm))] = amp.conjugate()
    return ProjectionBra(FockState._raw(amps, d, d), D, d ** (-d / 2), convention)


def _term_table(branches: list[tuple[AuxBranch, complex]], d: int, convention: str):
    """Closed-form terms: two per branch, ``(t_a, t_b) = (z, y)`` and ``(y, z)``.

    Returns arrays ``ta, tb`` (T,), bra prefactors ``C`` (T,) and exponent
    weights ``W`` (T, d) so that the phase exponent is ``D @ W[tau]``.
    """
    ta, tb, C, W = [], [], [], []
    scale = d ** (-d / 2)
    for br, c in branches:
        for a, b in ((br.z, br.y), (br.y, br.z)):
            w = np.zeros(d, dtype=np.int64)
            if convention == "physical":
                w[b] += 1
                for k, t in enumerate(br.a_row):
                    w[t] += aux_port(k)
            else:
                w[PORT_A] += a
                w[PORT_B] += b
                for k, t in enumerate(br.a_row):
                    w[aux_port(k)] += t
            ta.append(a)
            tb.append(b)
            C.append(c * scale)
            W.append(w)
    return np.array(ta), np.array(tb), np.array(C, dtype=complex), np.array(W, dtype=np.int64)


def project_ab(aux: FockState, pattern: Sequence[int], convention: str = "physical") -> FockState:
    """Closed-form partial projection of the pattern onto the auxiliary state.

    Result (ket form) lives on spatial modes ``a = 0, b = 1`` with
    ``spatial_count = 2`` and has exactly two terms per auxiliary branch.
    """
    _check_convention(convention)
    d = require_even(aux.dim)
    D = np.array(check_pattern(d, pattern))
    ta, tb, C, W = _term_table(aux_branches(aux), d, convention)
    coef = C * _omega(d, W @ D)
    amps: dict[Config, complex] = {}
    for a, b, c in zip(ta, tb, coef):
        key = ((PORT_A, int(a), 1), (PORT_B, int(b), 1))
        amps[key] = amps.get(key, 0j) + complex(c).conjugate()
    return FockState._raw(amps, d, 2, prune_tol=aux.prune_tol)


def project_ab_generic(aux: FockState, pattern: Sequence[int], convention: str = "physical") -> FockState:
    """Same projection via :func:`projection_bra` and :func:`partial_project`."""
    d = require_even(aux.dim)
    bra = projection_bra(d, pattern, convention)
    return partial_project(aux.embed(2, d), bra.ket).resized(2)


def correction_unitary(
    aux: AuxSpec | FockState,
    pattern: Sequence[int],
    convention: str = "physical",
    branch_amplitudes: Sequence[complex] | None = None,
) -> ModeUnitary:
    """Diagonal time-bin unitary for Bob that strips every pattern phase.

    The entry at time-bin ``v`` undoes the phase of the unique projection term
    that leaves Bob in ``v``; branch amplitude phases (e.g. the sign from an
    X-basis measurement during preparation) are removed as well.
    """
    _check_convention(convention)
    if isinstance(aux, FockState):
        d = aux.dim
        pairs = aux_branches(aux)
    else:
        spec = aux.validate()
        d = spec.d
        amps = [1.0] * len(spec.branches) if branch_amplitudes is None else list(branch_amplitudes)
        pairs = list(zip(spec.branches, amps))
    D = np.array(check_pattern(d, pattern))
    _, tb, C, W = _term_table(pairs, d, convention)
    diag = np.zeros(d, dtype=complex)
    phases = _omega(d, -(W @ D)) * np.conj(C / np.abs(C))
    for b, ph in zip(tb, phases):
        diag[b] = ph
    return ModeUnitary(np.diag(diag), kind="diagonal")


# ----------------------------------------------------------------------------
# per-pattern reference pipeline (Fock-state objects)


@dataclass
class PatternOutcome:
    pattern: tuple[int, ...]
    probability: float
    projected: FockState
    corrected: FockState
    correction: ModeUnitary


def _default_bob(state: FockState) -> int:
    return state.spatial_count - 1


def run_pattern(
    input_state: FockState,
    aux: FockState,
    pattern: Sequence[int],
    *,
    bob: int | None = None,
    convention: str = "physical",
    post_unitary: ModeUnitary | None = None,
) -> PatternOutcome:
    """Project ``input_state`` on one pattern and apply Bob's correction."""
    d = require_even(aux.dim)
    bob = _default_bob(input_state) if bob is None else bob
    D = check_pattern(d, pattern)
    bra = project_ab(aux, D, convention).resized(input_state.spatial_count)
    projected = partial_project(bra, input_state, {PORT_A, PORT_B})
    corr = correction_unitary(aux, D, convention)
    corrected = apply_timebin(corr, projected, bob)
    if post_unitary is not None:
        corrected = apply_timebin(post_unitary, corrected, bob)
    return PatternOutcome(D, projected.norm2(), projected, corrected, corr)


# ----------------------------------------------------------------------------
# vectorized enumeration


@dataclass(frozen=True)
class PatternRecord:
    pattern: tuple[int, ...]
    probability: float
    fidelity: float | None


@dataclass
class ProtocolResult:
    d: int
    mode: str
    convention: str
    total_success_probability: float
    pattern_count: int
    evaluated_patterns: int
    probability_min: float
    probability_max: float
    fidelity_min: float | None = None
    fidelity_max: float | None = None
    family: str | None = None
    per_pattern: list[PatternRecord] | None = None
    cross_checks: int = 0

    @property
    def failure_probability(self) -> float:
        return 1.0 - self.total_success_probability

    def to_json(self, include_table: bool = True) -> dict:
        out = {
            "d": self.d,
            "family": self.family,
            "mode": self.mode,
            "convention": self.convention,
            "total_success_probability": self.total_success_probability,
            "failure_probability": self.failure_probability,
            "pattern_count": self.pattern_count,
            "evaluated_patterns": self.evaluated_patterns,
            "cross_checks": self.cross_checks,
            "probability_min": self.probability_min,
            "probability_max": self.probability_max,
            "fidelity_min": self.fidelity_min,
            "fidelity_max": self.fidelity_max,
        }
        if include_table and self.per_pattern is not None:
            out["per_pattern"] = [
                {"pattern": list(r.pattern), "probability": r.probability, "fidelity": r.fidelity}
                for r in self.per_pattern
            ]
        return out


@dataclass(frozen=True)
class _Engine:
    d: int
    W: np.ndarray          # (T, d) exponent weights
    C: np.ndarray          # (T,) bra prefactors
    M: np.ndarray          # (T, d, R) input amplitudes by term, Bob's bin, other registers
    corr_term: np.ndarray  # (d,) term index leaving Bob in each bin
    post: np.ndarray | None
    target: np.ndarray | None
    keep: bool = False
    omega: np.ndarray = field(default=None)

    def evaluate(self, D: np.ndarray) -> dict:
        d = self.d
        phase = self.omega[(D @ self.W.T) % d]
        coef = phase * self.C
        out = np.einsum("nt,tvr->nvr", coef, self.M)
        probs = np.sum(np.abs(out) ** 2, axis=(1, 2))
        res = {"sum": float(np.sum(probs)), "pmin": float(probs.min()), "pmax": float(probs.max())}
        if self.target is not None:
            unit = np.conj(coef / np.abs(coef))
            corrected = out * unit[:, self.corr_term][:, :, None]
            if self.post is not None:
                corrected = np.einsum("wv,nvr->nwr", self.post, corrected)
            ov = np.einsum("vr,nvr->n", self.target.conj(), corrected)
            cn = np.sum(np.abs(corrected) ** 2, axis=(1, 2))
            tn = float(np.sum(np.abs(self.target) ** 2))
            with np.errstate(divide="ignore", invalid="ignore"):
                fid = np.where(cn > 0, np.abs(ov) ** 2 / (cn * tn), 0.0)
            res.update(fmin=float(fid.min()), fmax=float(fid.max()))
        else:
            fid = None
        if self.keep:
            res["probs"] = probs
            res["fids"] = fid
        return res


def _digits(indices: np.ndarray, d: int) -> np.ndarray:
    powers = d ** np.arange(d - 1, -1, -1, dtype=np.int64)
    return (indices[:, None] // powers[None, :]) % d


def _eval_range(args) -> dict:
    engine, start, stop = args
    res = engine.evaluate(_digits(np.arange(start, stop, dtype=np.int64), engine.d))
    res["start"] = start
    return res


def _build_engine(input_state, aux, bob, convention, target, post_unitary, keep) -> _Engine:
    d = require_even(aux.dim)
    S = input_state.spatial_count
    if input_state.dim != d:
        raise DimensionError(f"input has d={input_state.dim} but the auxiliary state has d={d}")
    if not d <= bob < S:
        raise DimensionError(f"Bob's register {bob} must sit outside the analyzer ports 0..{d - 1}")
    others: dict[Config, int] = {}
    entries = []
    for cfg, amp in input_state.items():
        a = [(t, n) for s, t, n in cfg if s == PORT_A]
        b = [(t, n) for s, t, n in cfg if s == PORT_B]
        v = [(t, n) for s, t, n in cfg if s == bob]
        if len(a) != 1 or len(b) != 1 or a[0][1] != 1 or b[0][1] != 1:
            raise DimensionError(f"input config {cfg} must hold exactly one photon in each of ports a and b")
        if any(2 <= s < d for s, _, _ in cfg):
            raise DimensionError(f"input config {cfg} occupies an auxiliary port")
        if len(v) != 1 or v[0][1] != 1:
            raise DimensionError(f"input config {cfg} must hold exactly one photon in Bob's register {bob}")
        rest = tuple(m for m in cfg if m[0] not in (PORT_A, PORT_B, bob))
        entries.append((a[0][0], b[0][0], v[0][0], others.setdefault(rest, len(others)), amp))
    tgt = None
    if target is not None:
        tmp = []
        for cfg, amp in target.items():
            v = [t for s, t, n in cfg if s == bob and n == 1]
            if len(v) != 1:
                raise DimensionError(f"target config {cfg} must hold one photon in Bob's register {bob}")
            rest = tuple(m for m in cfg if m[0] != bob)
            tmp.append((v[0], others.setdefault(rest, len(others)), amp))
        tgt = np.zeros((d, len(others)), dtype=complex)
        for v, r, amp in tmp:
            tgt[v, r] += amp
    full = np.zeros((d, d, d, max(len(others), 1)), dtype=complex)
    for a, b, v, r, amp in entries:
        full[a, b, v, r] += amp
    ta, tb, C, W = _term_table(aux_branches(aux), d, convention)
    M = full[ta, tb]
    corr_term = np.empty(d, dtype=np.int64)
    corr_term[tb] = np.arange(len(tb))
    post = None if post_unitary is None else post_unitary.matrix
    omega = np.exp(2j * np.pi * np.arange(d) / d)
    return _Engine(d, W, C, M, corr_term, post, tgt, keep, omega)


def enumerate_success(
    input_state: FockState,
    aux: FockState,
    mode: str = "full_enumeration",
    *,
    bob: int | None = None,
    target: FockState | None = None,
    post_unitary: ModeUnitary | None = None,
    convention: str = "physical",
    n_checks: int = 100,
    seed: int = 0,
    keep_table: bool = False,
    workers: int = 1,
    chunk: int = 1 << 15,
    family: str | None = None,
) -> ProtocolResult:
    """Success probability (and corrected fidelity) summed over detection patterns.

    ``full_enumeration`` walks all ``d**d`` patterns in lexicographic order.
    ``single_pattern_times_symmetry`` evaluates the all-zero pattern, scales by
    ``d**d`` and checks ``n_checks`` random patterns (seeded) agree to
    ``1e-9`` relative; disagreement raises :class:`SymmetryCheckError`.

    ``target`` (same mode layout as the input, registers only) enables
    fidelity reporting after Bob's correction and optional ``post_unitary``.
    """
    _check_convention(convention)
    if mode not in MODES:
        raise ValueError(f"unknown enumeration mode {mode!r}; expected one of {MODES}")
    d = require_even(aux.dim)
    bob = _default_bob(input_state) if bob is None else bob
    engine = _build_engine(input_state, aux, bob, convention, target, post_unitary, keep_table or mode != MODES[0])
    n_total = d**d

    if mode == "full_enumeration":
        ranges = [(engine, s, min(s + chunk, n_total)) for s in range(0, n_total, chunk)]
        if workers > 1 and len(ranges) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_eval_range, ranges))
        else:
            parts = [_eval_range(r) for r in ranges]
        total = math.fsum(p["sum"] for p in parts)
        table = None
        if keep_table:
            probs = np.concatenate([p["probs"] for p in parts])
            fids = None if engine.target is None else np.concatenate([p["fids"] for p in parts])
            table = [
                PatternRecord(pattern_from_index(i, d), float(probs[i]), None if fids is None else float(fids[i]))
                for i in range(n_total)
            ]
        return ProtocolResult(
            d, mode, convention, total, n_total, n_total,
            min(p["pmin"] for p in parts), max(p["pmax"] for p in parts),
            None if engine.target is None else min(p["fmin"] for p in parts),
            None if engine.target is None else max(p["fmax"] for p in parts),
            family, table, 0,
        )

    rng = np.random.default_rng(seed)
    sampled = rng.integers(0, d, size=(n_checks, d))
    D = np.vstack([np.zeros((1, d), dtype=np.int64), sampled])
    res = engine.evaluate(D)
    probs, fids = res["probs"], res["fids"]
    p0 = float(probs[0])
    table = [
        PatternRecord(tuple(int(x) for x in row), float(p), None if fids is None else float(f))
        for row, p, f in zip(D, probs, fids if fids is not None else [None] * len(probs))
    ]
    bad = [r for r in table if abs(r.probability - p0) > SYMMETRY_RTOL * p0]
    if bad:
        raise SymmetryCheckError(
            f"{len(bad)} of {n_checks} sampled patterns deviate from the all-zero pattern probability {p0:.6e}; "
            "the input is not pattern-uniform, use full enumeration",
            table,
        )
    return ProtocolResult(
        d, mode, convention, p0 * n_total, n_total, len(D), res["pmin"], res["pmax"],
        res.get("fmin"), res.get("fmax"), family, table if keep_table else None, n_checks,
    )
