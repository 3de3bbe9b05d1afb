import itertools
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import conditional_registers, product, rotated_aux_dict, swap_input_dict, transition_amplitude, qft
from qesa.applications import swap_input, swap_target
from qesa.errors import AuxConstraintError, DimensionError, SymmetryCheckError
from qesa.esa import (
    AuxBranch,
    AuxSpec,
    build_aux,
    correction_unitary,
    enumerate_success,
    iter_patterns,
    project_ab,
    project_ab_generic,
    projection_bra,
    rotated_pairs_spec,
    run_pattern,
    shifted_spec,
)
from qesa.fock import FockState, fidelity, make_config, schmidt_rank

GOLDEN = Path(__file__).parent / "golden"


def patterns(d):
    return st.lists(st.integers(0, d - 1), min_size=d, max_size=d).map(tuple)


def aux_choices(d):
    out = [("rotated_pairs", None)]
    out += [("shifted", i) for i in range(1, d) if (d // math.gcd(d, i)) % 2 == 0]
    return out


# -- auxiliary state -----------------------------------------------------------


def test_d4_aux_state():
    aux = build_aux(4)
    want = FockState({((0, 0), (1, 1)): 1, ((0, 2), (1, 3)): 1}, 4, 2).normalized()
    assert aux.allclose(want, atol=1e-15)
    golden = FockState.from_json(json.loads((GOLDEN / "aux_d4.json").read_text()))
    assert aux.allclose(golden, rtol=0, atol=0)


def test_d2_aux_is_vacuum():
    aux = build_aux(2)
    assert aux.spatial_count == 0 and aux.configs == [()]


def test_odd_dimension_rejected():
    with pytest.raises(DimensionError):
        build_aux(5)


@pytest.mark.parametrize("d", [4, 6, 8, 10, 12])
def test_rotated_pairs_invariants(d):
    spec = rotated_pairs_spec(d)
    assert len(spec.branches) == d // 2
    covered = sorted(t for br in spec.branches for t in br.excluded)
    assert covered == list(range(d))
    for br in spec.branches:
        assert sorted(br.a_row + br.excluded) == list(range(d))
    assert schmidt_rank(spec.to_state(), {0}) == d // 2


def test_d6_exclusion_pairs():
    assert {br.excluded for br in rotated_pairs_spec(6).branches} == {(4, 5), (2, 3), (0, 1)}


@pytest.mark.parametrize("d", [4, 6, 8])
def test_shifted_family_schmidt_rank(d):
    for family, i in aux_choices(d)[1:]:
        spec = shifted_spec(d, i)
        assert all((br.z - br.y) % d == i for br in spec.branches)
        assert schmidt_rank(spec.to_state(), {0}) == d // 2


def test_infeasible_shift_names_clause():
    with pytest.raises(AuxConstraintError) as info:
        shifted_spec(6, 2)
    assert info.value.clause == "shift"


@pytest.mark.parametrize(
    "branches,clause",
    [
        ((AuxBranch((0, 1), (2, 3)),), "branch_count"),
        ((AuxBranch((0, 1), (2, 3)), AuxBranch((0, 1), (2, 3))), "exclusion_disjoint"),
        ((AuxBranch((0, 0), (2, 3)), AuxBranch((2, 3), (0, 1))), "permutation"),
        ((AuxBranch((0,), (2, 3)), AuxBranch((2, 3), (0, 1))), "row_length"),
    ],
)
def test_explicit_spec_violations(branches, clause):
    with pytest.raises(AuxConstraintError) as info:
        build_aux(4, "explicit", spec=AuxSpec(4, branches))
    assert info.value.clause == clause


# -- projections -------------------------------------------------------------------


def test_d4_all_zero_projection_has_uniform_terms():
    bra = projection_bra(4, (0, 0, 0, 0))
    assert len(bra.ket) == 24
    assert all(a == pytest.approx(1 / 16) for _, a in bra.ket.items())


def test_d2_projection_up_to_global_phase():
    # (<01| - <10|)/2 up to an overall sign
    bra = projection_bra(2, (0, 1))
    c01 = bra.coefficient(((0, 0, 1), (1, 1, 1)))
    c10 = bra.coefficient(((0, 1, 1), (1, 0, 1)))
    assert abs(c01) == pytest.approx(0.5) and abs(c10) == pytest.approx(0.5)
    assert c10 / c01 == pytest.approx(-1.0)


@pytest.mark.parametrize("d", [2, 4, 6])
def test_identity_pattern_phase(d):
    bra = projection_bra(d, tuple(range(d)))
    cfg = tuple((s, s, 1) for s in range(d))
    w = np.exp(2j * np.pi / d)
    assert bra.coefficient(cfg) == pytest.approx(w ** sum(i * i for i in range(d)) / d ** (d / 2))


@pytest.mark.parametrize("pattern", [(0, 0, 0, 0), (2, 3, 1, 0), (1, 0, 0, 0), (3, 3, 0, 1)])
def test_projection_matches_permanent_oracle(pattern):
    d = 4
    bra = projection_bra(d, pattern)
    detected = tuple(sorted((pattern[t], t) for t in range(d)))
    u = qft(d)
    for perm in itertools.permutations(range(d)):
        photons = tuple(sorted((s, t) for s, t in enumerate(perm)))
        cfg = tuple((s, t, 1) for s, t in enumerate(perm))
        want = transition_amplitude(u, list(range(d)), photons, detected)
        assert bra.coefficient(cfg) == pytest.approx(want, abs=1e-14)


def test_d4_all_zero_partial_projection():
    got = project_ab(build_aux(4), (0, 0, 0, 0))
    c = 1 / (16 * math.sqrt(2))
    want = FockState({((0, 0), (1, 1)): c, ((0, 1), (1, 0)): c, ((0, 2), (1, 3)): c, ((0, 3), (1, 2)): c}, 4, 2)
    assert got.allclose(want, atol=1e-15)


@pytest.mark.parametrize("d", [4, 6, 8])
@given(data=st.data())
@settings(max_examples=25, deadline=None)
def test_projection_term_count_and_modulus(d, data):
    D = data.draw(patterns(d))
    family, shift = data.draw(st.sampled_from(aux_choices(d)))
    proj = project_ab(build_aux(d, family, shift=shift), D)
    assert len(proj) == d
    mod = 1 / (math.sqrt(d**d) * math.sqrt(d / 2))
    assert all(abs(a) == pytest.approx(mod, rel=1e-12) for _, a in proj.items())


@pytest.mark.parametrize("d", [2, 4, 6])
@pytest.mark.parametrize("convention", ["physical", "transposed"])
@given(data=st.data())
@settings(max_examples=15, deadline=None)
def test_closed_form_equals_generic(d, convention, data):
    D = data.draw(patterns(d))
    family, shift = data.draw(st.sampled_from(aux_choices(d)))
    aux = build_aux(d, family, shift=shift)
    assert project_ab(aux, D, convention).allclose(project_ab_generic(aux, D, convention), rtol=0, atol=1e-12)


# -- correction ------------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 4, 6, 8])
def test_all_zero_correction_is_identity(d):
    assert np.allclose(correction_unitary(build_aux(d), (0,) * d).matrix, np.eye(d))


@given(patterns(6))
@settings(max_examples=30, deadline=None)
def test_correction_is_diagonal_phase(D):
    m = correction_unitary(rotated_pairs_spec(6), D).matrix
    assert np.allclose(m, np.diag(np.diag(m)))
    assert np.allclose(np.abs(np.diag(m)), 1)


def _oracle_swap_registers(d, pattern):
    state = product(swap_input_dict(d), rotated_aux_dict(d))
    return conditional_registers(state, d, pattern)


def _canonical_target(d):
    spec = rotated_pairs_spec(d)
    out = {}
    for br in spec.branches:
        out[((d, br.z), (d + 1, br.y))] = 1
        out[((d, br.y), (d + 1, br.z))] = 1
    return out


def _dict_fidelity(a, b):
    keys = set(a) | set(b)
    num = abs(sum(np.conj(b.get(k, 0)) * a.get(k, 0) for k in keys)) ** 2
    return num / (sum(abs(v) ** 2 for v in a.values()) * sum(abs(v) ** 2 for v in b.values()))


def _apply_bob(reg, diag, d):
    return {k: a * diag[dict(k)[d + 1]] for k, a in reg.items()}


def test_d4_pattern_1000_corrected_fidelity_via_oracle():
    reg = _oracle_swap_registers(4, (1, 0, 0, 0))
    diag = np.diag(correction_unitary(rotated_pairs_spec(4), (1, 0, 0, 0)).matrix)
    assert _dict_fidelity(_apply_bob(reg, diag, 4), _canonical_target(4)) == pytest.approx(1, abs=1e-12)


def test_d4_every_pattern_against_physical_oracle():
    d = 4
    spec = rotated_pairs_spec(d)
    aux, psi = spec.to_state(), swap_input(d)
    for D in iter_patterns(d):
        reg = _oracle_swap_registers(d, D)
        p_oracle = sum(abs(a) ** 2 for a in reg.values())
        assert p_oracle == pytest.approx(2**-11, rel=1e-12)
        ours = run_pattern(psi, aux, D, bob=d + 1)
        assert ours.probability == pytest.approx(p_oracle, rel=1e-12)
        corrected = _apply_bob(reg, np.diag(ours.correction.matrix), d)
        assert _dict_fidelity(corrected, _canonical_target(d)) == pytest.approx(1, abs=1e-12)
        # the pipeline's own corrected state agrees amplitude by amplitude
        for k, a in corrected.items():
            assert ours.corrected.amplitude(make_config(k)) == pytest.approx(a, abs=1e-14)


def test_transposed_phase_rule_is_not_the_physical_one():
    d = 4
    spec = rotated_pairs_spec(d)
    worst = 1.0
    for D in iter_patterns(d):
        reg = _oracle_swap_registers(d, D)
        diag = np.diag(correction_unitary(spec, D, "transposed").matrix)
        worst = min(worst, _dict_fidelity(_apply_bob(reg, diag, d), _canonical_target(d)))
    assert worst < 0.99


def test_transposed_rule_is_self_consistent():
    res = enumerate_success(swap_input(4), build_aux(4), bob=5, target=swap_target(rotated_pairs_spec(4)),
                            convention="transposed")
    assert res.total_success_probability == pytest.approx(1 / 8, abs=1e-12)
    assert res.fidelity_min == pytest.approx(1, abs=1e-9)


# -- enumeration -------------------------------------------------------------------


def test_d4_pattern_uniformity():
    res = enumerate_success(swap_input(4), build_aux(4), bob=5, keep_table=True)
    assert len(res.per_pattern) == 256
    assert [r.pattern for r in res.per_pattern[:3]] == [(0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 0, 2)]
    assert all(r.probability == pytest.approx(2**-11, rel=1e-12) for r in res.per_pattern)


def test_d6_sampled_pattern_uniformity():
    res = enumerate_success(swap_input(6), build_aux(6), bob=7, keep_table=True)
    rng = np.random.default_rng(0)
    expected = 2 / 36 / 6**6
    for i in rng.choice(6**6, size=1000, replace=False):
        assert res.per_pattern[i].probability == pytest.approx(expected, rel=1e-12)


def test_symmetry_mode_rejects_nonuniform_input():
    # a and b each in (|0> + |1>)/sqrt(2): the <01| and <10| terms interfere
    # with pattern-dependent phases, so pattern probabilities differ
    d = 4
    amps = {make_config([(0, i), (1, k), (d, 0)]): 0.5 for i in (0, 1) for k in (0, 1)}
    psi = FockState(amps, d, d + 1)
    with pytest.raises(SymmetryCheckError):
        enumerate_success(psi, build_aux(d), "single_pattern_times_symmetry", bob=d)


def test_symmetry_mode_matches_full():
    full = enumerate_success(swap_input(6), build_aux(6), bob=7)
    sym = enumerate_success(swap_input(6), build_aux(6), "single_pattern_times_symmetry", bob=7, n_checks=100)
    assert sym.cross_checks >= 100
    assert sym.total_success_probability == pytest.approx(full.total_success_probability, rel=1e-9)


def test_parallel_enumeration_matches_serial():
    a = enumerate_success(swap_input(6), build_aux(6), bob=7, chunk=5000)
    b = enumerate_success(swap_input(6), build_aux(6), bob=7, chunk=5000, workers=2)
    assert a.total_success_probability == b.total_success_probability


@pytest.mark.parametrize("d", [4, 6, 8])
def test_shifted_half_dimension_support(d):
    i = d // 2
    spec = shifted_spec(d, i)
    out = run_pattern(swap_input(d), spec.to_state(), (0,) * d, bob=d + 1).corrected
    support = {(dict((s, t) for s, t, _ in c)[d], dict((s, t) for s, t, _ in c)[d + 1]) for c in out.configs}
    assert support == {(k, (k + i) % d) for k in range(d)}


@pytest.mark.parametrize("d,i", [(4, 1), (6, 1), (8, 2)])
def test_shifted_general_support(d, i):
    spec = shifted_spec(d, i)
    out = run_pattern(swap_input(d), spec.to_state(), (1,) + (0,) * (d - 1), bob=d + 1).corrected
    support = {tuple(t for _, t, _ in c) for c in out.configs}
    want = {(br.y, br.z) for br in spec.branches} | {(br.z, br.y) for br in spec.branches}
    assert support == want
    assert all((b - a) % d in (i, d - i) for a, b in support)


@pytest.mark.parametrize("d", [4, 6])
def test_swap_output_schmidt_rank(d):
    out = run_pattern(swap_input(d), build_aux(d), (0,) * d, bob=d + 1).corrected
    assert schmidt_rank(out, {d}) == d
