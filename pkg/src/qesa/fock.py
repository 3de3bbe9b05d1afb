"""Sparse Fock states over (spatial mode, time-bin) pairs.

Every optical mode is addressed by a ``(spatial, timebin)`` pair. A basis
state is an occupation config: a sorted tuple of ``(spatial, timebin, count)``
triples with zero counts dropped. Sorting is spatial-major, and this is the
only place the packing is defined; the interferometer, the ESA projections and
the JSON format all go through :func:`make_config`.

States are immutable. Operations return new states and prune amplitudes whose
modulus falls below the state's ``prune_tol`` (``1e-12`` by default; pass
``0.0`` to keep everything).
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, ModeOverlapError, NormalizationError

PRUNE_TOL = 1e-12
NORM_TOL = 1e-9
RANK_TOL = 1e-9

Config = tuple[tuple[int, int, int], ...]


class ModeIndex(NamedTuple):
    spatial: int
    timebin: int


def make_config(photons: Iterable) -> Config:
    """Canonical config from ``(s, t)`` pairs and/or ``(s, t, n)`` triples.

    Repeated modes accumulate, so ``[(0, 1), (0, 1)]`` is two photons in
    spatial 0, time-bin 1.
    """
    counts: dict[tuple[int, int], int] = {}
    for p in photons:
        if len(p) == 2:
            s, t = p
            n = 1
        else:
            s, t, n = p
        s, t, n = int(s), int(t), int(n)
        if n < 0:
            raise ValueError(f"negative photon count {n} in mode ({s}, {t})")
        if n:
            counts[(s, t)] = counts.get((s, t), 0) + n
    return tuple(sorted((s, t, n) for (s, t), n in counts.items()))


def config_photons(config: Config) -> int:
    return sum(n for _, _, n in config)


def config_spatial(config: Config) -> frozenset[int]:
    return frozenset(s for s, _, _ in config)


def split_config(config: Config, modes: frozenset[int] | set[int]) -> tuple[Config, Config]:
    """Split into (part on ``modes``, remainder). Both halves stay canonical."""
    inside = tuple(c for c in config if c[0] in modes)
    outside = tuple(c for c in config if c[0] not in modes)
    return inside, outside


def _merge(a: Config, b: Config) -> Config:
    if not a:
        return b
    if not b:
        return a
    return make_config(a + b)


class FockState:
    """Superposition of occupation configs with complex amplitudes.

    Args:
        amplitudes: mapping from config-like keys (anything :func:`make_config`
            accepts) to amplitudes. Duplicate keys after canonicalization add.
        dim: number of time-bins ``d``.
        spatial_count: number of spatial modes ``S``.
        mixed_number: allow configs with different total photon numbers
            (vacuum branches during emitter simulation).
        prune_tol: amplitudes with smaller modulus are dropped.
    """

    __slots__ = ("_amps", "dim", "spatial_count", "mixed_number", "prune_tol")

    def __init__(
        self,
        amplitudes: Mapping,
        dim: int,
        spatial_count: int,
        *,
        mixed_number: bool = False,
        prune_tol: float = PRUNE_TOL,
    ):
        if dim < 1:
            raise DimensionError(f"dim must be >= 1, got {dim}")
        if spatial_count < 0:
            raise DimensionError(f"spatial_count must be >= 0, got {spatial_count}")
        amps: dict[Config, complex] = {}
        for key, amp in amplitudes.items():
            cfg = make_config(key)
            for s, t, _ in cfg:
                if not 0 <= s < spatial_count:
                    raise DimensionError(f"spatial index {s} outside [0, {spatial_count - 1}]")
                if not 0 <= t < dim:
                    raise DimensionError(f"time-bin {t} outside [0, {dim - 1}]")
            amps[cfg] = amps.get(cfg, 0j) + complex(amp)
        self._set(amps, dim, spatial_count, mixed_number, prune_tol)
        if not mixed_number and len({config_photons(c) for c in self._amps}) > 1:
            raise ValueError("configs carry different photon numbers; pass mixed_number=True")

    def _set(self, amps, dim, spatial_count, mixed_number, prune_tol):
        self._amps = {c: a for c, a in amps.items() if abs(a) >= prune_tol} if prune_tol > 0 else amps
        self.dim = dim
        self.spatial_count = spatial_count
        self.mixed_number = mixed_number
        self.prune_tol = prune_tol

    @classmethod
    def _raw(cls, amps, dim, spatial_count, *, mixed_number=None, prune_tol=PRUNE_TOL) -> FockState:
        # Trusted constructor: keys already canonical and in range.
        obj = cls.__new__(cls)
        obj._set(amps, dim, spatial_count, False, prune_tol)
        if mixed_number is None:
            mixed_number = len({config_photons(c) for c in obj._amps}) > 1
        obj.mixed_number = mixed_number
        return obj

    @classmethod
    def vacuum(cls, dim: int, spatial_count: int = 0) -> FockState:
        return cls({(): 1.0}, dim, spatial_count)

    @classmethod
    def basis(cls, dim: int, spatial_count: int, photons: Iterable, amplitude: complex = 1.0) -> FockState:
        return cls({make_config(photons): amplitude}, dim, spatial_count)

    @classmethod
    def zero(cls, dim: int, spatial_count: int) -> FockState:
        return cls({}, dim, spatial_count)

    # mapping-ish access
    def __len__(self) -> int:
        return len(self._amps)

    def __iter__(self):
        return iter(self._amps)

    def __contains__(self, config) -> bool:
        return make_config(config) in self._amps

    def items(self):
        return self._amps.items()

    def amplitude(self, config) -> complex:
        return self._amps.get(make_config(config), 0j)

    @property
    def configs(self) -> list[Config]:
        return list(self._amps)

    @property
    def photon_number(self) -> int | None:
        """Common photon number, or ``None`` for empty / number-mixed states."""
        numbers = {config_photons(c) for c in self._amps}
        return numbers.pop() if len(numbers) == 1 else None

    def spatial_support(self) -> frozenset[int]:
        out: set[int] = set()
        for cfg in self._amps:
            out.update(s for s, _, _ in cfg)
        return frozenset(out)

    def norm2(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self._amps.values())

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def normalized(self) -> FockState:
        n2 = self.norm2()
        if n2 == 0.0:
            raise NormalizationError("cannot normalize the zero state")
        return self * (1.0 / math.sqrt(n2))

    def _like(self, amps, **kw) -> FockState:
        kw.setdefault("mixed_number", self.mixed_number)
        kw.setdefault("prune_tol", self.prune_tol)
        return FockState._raw(amps, self.dim, kw.pop("spatial_count", self.spatial_count), **kw)

    def __mul__(self, scalar: complex) -> FockState:
        return self._like({c: a * scalar for c, a in self._amps.items()})

    __rmul__ = __mul__

    def __neg__(self) -> FockState:
        return self * -1

    def __add__(self, other: FockState) -> FockState:
        _check_same_space(self, other)
        amps = dict(self._amps)
        for c, a in other._amps.items():
            amps[c] = amps.get(c, 0j) + a
        return self._like(amps, mixed_number=None, prune_tol=min(self.prune_tol, other.prune_tol))

    def __sub__(self, other: FockState) -> FockState:
        return self + (-other)

    def with_prune_tol(self, prune_tol: float) -> FockState:
        return self._like(dict(self._amps), prune_tol=prune_tol)

    def map_amplitudes(self, fn: Callable[[Config, complex], complex]) -> FockState:
        return self._like({c: fn(c, a) for c, a in self._amps.items()})

    def relabel(self, mapping: Mapping[int, int], spatial_count: int | None = None) -> FockState:
        """Rename spatial modes; modes absent from ``mapping`` keep their index."""
        S = self.spatial_count if spatial_count is None else spatial_count
        amps: dict[Config, complex] = {}
        for cfg, a in self._amps.items():
            new = make_config((mapping.get(s, s), t, n) for s, t, n in cfg)
            for s, _, _ in new:
                if not 0 <= s < S:
                    raise DimensionError(f"relabelled spatial index {s} outside [0, {S - 1}]")
            amps[new] = amps.get(new, 0j) + a
        return self._like(amps, spatial_count=S)

    def embed(self, offset: int, spatial_count: int) -> FockState:
        """Shift every spatial index by ``offset`` inside a larger mode set."""
        return self.relabel({s: s + offset for s in range(self.spatial_count)}, spatial_count)

    def resized(self, spatial_count: int) -> FockState:
        """Same state, different declared mode count (support must still fit)."""
        return self.relabel({}, spatial_count)

    def allclose(self, other: FockState, rtol: float = 1e-9, atol: float = 1e-12) -> bool:
        if self.dim != other.dim or self.spatial_count != other.spatial_count:
            return False
        scale = max([abs(a) for a in self._amps.values()] + [abs(a) for a in other._amps.values()] + [0.0])
        for c in set(self._amps) | set(other._amps):
            diff = abs(self._amps.get(c, 0j) - other._amps.get(c, 0j))
            if diff > atol + rtol * scale:
                return False
        return True

    def to_json(self) -> dict:
        terms = [
            {"occ": [list(m) for m in cfg], "re": float(a.real), "im": float(a.imag)}
            for cfg, a in sorted(self._amps.items())
        ]
        return {"dim": self.dim, "spatial_count": self.spatial_count, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping) -> FockState:
        amps = {}
        for term in data["terms"]:
            cfg = make_config(tuple(m) for m in term["occ"])
            amps[cfg] = amps.get(cfg, 0j) + complex(term["re"], term["im"])
        numbers = {config_photons(c) for c in amps}
        return cls(amps, data["dim"], data["spatial_count"], mixed_number=len(numbers) > 1)

    def __repr__(self) -> str:
        terms = " + ".join(f"({a:.4g})|{_ket_label(c)}>" for c, a in sorted(self._amps.items())[:6])
        more = "" if len(self._amps) <= 6 else f" + ... ({len(self._amps)} terms)"
        return f"FockState(d={self.dim}, S={self.spatial_count}: {terms or '0'}{more})"


def _ket_label(cfg: Config) -> str:
    if not cfg:
        return "vac"
    return ",".join(f"{t}@{s}" + (f"^{n}" if n > 1 else "") for s, t, n in cfg)


def _check_same_space(a: FockState, b: FockState) -> None:
    if a.dim != b.dim or a.spatial_count != b.spatial_count:
        raise DimensionError(
            f"state spaces differ: (d={a.dim}, S={a.spatial_count}) vs (d={b.dim}, S={b.spatial_count})"
        )


@dataclass(frozen=True, eq=False)
class QuditVector:
    """Single photon in one spatial mode, expanded over ``d`` time-bins."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        object.__setattr__(self, "coeffs", arr)

    @property
    def dim(self) -> int:
        return self.coeffs.size

    def norm2(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def to_state(self, spatial: int = 0, spatial_count: int = 1) -> FockState:
        amps = {((spatial, t, 1),): c for t, c in enumerate(self.coeffs) if c != 0}
        return FockState(amps, self.dim, spatial_count)

    @classmethod
    def from_state(cls, state: FockState, spatial: int) -> QuditVector:
        coeffs = np.zeros(state.dim, dtype=complex)
        for cfg, a in state.items():
            if len(cfg) != 1 or cfg[0][0] != spatial or cfg[0][2] != 1:
                raise DimensionError(f"config {cfg} is not a single photon in spatial mode {spatial}")
            coeffs[cfg[0][1]] += a
        return cls(coeffs)

    @classmethod
    def basis(cls, d: int, k: int) -> QuditVector:
        v = np.zeros(d, dtype=complex)
        v[k] = 1.0
        return cls(v)

    @classmethod
    def uniform(cls, d: int) -> QuditVector:
        return cls(np.full(d, 1 / math.sqrt(d), dtype=complex))

    @classmethod
    def random(cls, d: int, rng: np.random.Generator) -> QuditVector:
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        return cls(v / np.linalg.norm(v))


def tensor(a: FockState, b: FockState, offset: int | None = None) -> FockState:
    """Product state with ``b``'s spatial modes shifted up by ``offset``.

    ``offset`` defaults to ``a.spatial_count`` (append ``b`` after ``a``).
    Raises :class:`ModeOverlapError` if both factors occupy a common spatial mode.
    """
    if a.dim != b.dim:
        raise DimensionError(f"time-bin dimensions differ: {a.dim} vs {b.dim}")
    if offset is None:
        offset = a.spatial_count
    S = max(a.spatial_count, offset + b.spatial_count)
    b_amps = {tuple((s + offset, t, n) for s, t, n in c): v for c, v in b.items()}
    overlap = a.spatial_support() & {s for c in b_amps for s, _, _ in c}
    if overlap:
        raise ModeOverlapError(f"spatial modes {sorted(overlap)} are occupied in both factors")
    amps: dict[Config, complex] = {}
    for ca, va in a.items():
        for cb, vb in b_amps.items():
            key = _merge(ca, cb)
            amps[key] = amps.get(key, 0j) + va * vb
    mixed = a.mixed_number or b.mixed_number
    return FockState._raw(amps, a.dim, S, mixed_number=mixed or None, prune_tol=min(a.prune_tol, b.prune_tol))


def inner_product(bra: FockState, ket: FockState) -> complex:
    """<bra|ket>, conjugate-linear in ``bra``."""
    _check_same_space(bra, ket)
    small, large = (bra, ket) if len(bra) <= len(ket) else (ket, bra)
    total = 0j
    for c in small:
        if c in large._amps:
            total += bra._amps[c].conjugate() * ket._amps[c]
    return total


def fidelity(a: FockState, b: FockState) -> float:
    """|<a|b>|^2 / (<a|a><b|b>); zero if either state vanishes."""
    na, nb = a.norm2(), b.norm2()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return abs(inner_product(a, b)) ** 2 / (na * nb)


def partial_project(bra: FockState, ket: FockState, modes: Iterable[int] | None = None) -> FockState:
    """Contract ``bra`` against ``ket`` on spatial subset ``modes``.

    Returns the unnormalized state on the remaining modes:
    ``sum_c conj(bra[c_M]) * ket[c_M + c_rest] |c_rest>``. ``modes`` defaults to
    the spatial support of ``bra``. A full-support bra gives the vacuum config
    weighted by ``<bra|ket>``.
    """
    _check_same_space(bra, ket)
    M = frozenset(modes) if modes is not None else bra.spatial_support()
    stray = bra.spatial_support() - M
    if stray:
        raise DimensionError(f"bra occupies spatial modes {sorted(stray)} outside the projected set {sorted(M)}")
    bra_amps = bra._amps
    amps: dict[Config, complex] = {}
    for cfg, a in ket.items():
        inside, rest = split_config(cfg, M)
        b = bra_amps.get(inside)
        if b is None:
            continue
        amps[rest] = amps.get(rest, 0j) + b.conjugate() * a
    return FockState._raw(amps, ket.dim, ket.spatial_count, prune_tol=min(bra.prune_tol, ket.prune_tol))


def schmidt_rank(state: FockState, left_spatial_modes: Iterable[int], tol: float = RANK_TOL) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    left = frozenset(left_spatial_modes)
    if not left or left >= frozenset(range(state.spatial_count)):
        raise DimensionError("bipartition must be non-trivial: both sides need at least one spatial mode")
    rows: dict[Config, int] = {}
    cols: dict[Config, int] = {}
    entries = []
    for cfg, a in state.items():
        l, r = split_config(cfg, left)
        entries.append((rows.setdefault(l, len(rows)), cols.setdefault(r, len(cols)), a))
    if not entries:
        return 0
    mat = np.zeros((len(rows), len(cols)), dtype=complex)
    for i, j, a in entries:
        mat[i, j] += a
    sv = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(sv > tol * sv[0])) if sv[0] > 0 else 0


def apply_mode_map(state: FockState, transform: Callable[[int, int], list | None]) -> FockState:
    """Apply a linear map on creation operators.

    ``transform(spatial, timebin)`` returns ``None`` for modes left alone, or a
    list of ``((spatial', timebin'), coeff)`` meaning
    ``a^dag_m -> sum coeff * a^dag_{m'}``. Multi-photon occupations are expanded
    multinomially with the bosonic ``sqrt(n!)`` factors, so the result is exact
    for any linear-optical map.
    """
    amps: dict[Config, complex] = {}
    cache: dict[tuple[int, int], list | None] = {}
    for cfg, amp in state.items():
        fixed: list[tuple[int, int]] = []
        moving: list[list] = []
        weight = amp
        for s, t, n in cfg:
            key = (s, t)
            if key not in cache:
                cache[key] = transform(s, t)
            out = cache[key]
            if out is None:
                fixed.extend([key] * n)
            else:
                moving.extend([out] * n)
            if n > 1:
                weight /= math.sqrt(math.factorial(n))
        poly: dict[tuple, complex] = {tuple(sorted(fixed)): weight}
        for out in moving:
            nxt: dict[tuple, complex] = {}
            for mono, c in poly.items():
                for mode, u in out:
                    key = tuple(sorted(mono + (mode,)))
                    nxt[key] = nxt.get(key, 0j) + c * u
            poly = nxt
        for mono, c in poly.items():
            new = make_config(mono)
            bose = 1
            for _, _, n in new:
                if n > 1:
                    bose *= math.factorial(n)
            amps[new] = amps.get(new, 0j) + c * math.sqrt(bose)
    S = state.spatial_count
    for cfg in amps:
        for s, t, _ in cfg:
            if not (0 <= s < S and 0 <= t < state.dim):
                raise DimensionError(f"mode map produced out-of-range mode ({s}, {t})")
    return FockState._raw(amps, state.dim, S, mixed_number=state.mixed_number or None, prune_tol=state.prune_tol)
