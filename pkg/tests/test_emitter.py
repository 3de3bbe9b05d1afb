import json
import math

import numpy as np
import pytest

from qesa.applications import entanglement_swap
from qesa.errors import DimensionError, ScheduleError
from qesa.esa import build_aux, spec_from_aux
from qesa.emitter import (
    DelayConfig,
    control_qubits,
    generate,
    generate_d4,
    route,
    sign_normalized,
    simulate,
    simulate_d4,
    switch_count,
    verify_schedule,
)
from qesa.fock import FockState, fidelity, schmidt_rank


def test_d4_plus_and_minus():
    c = 1 / math.sqrt(2)
    plus = FockState({((0, 0), (1, 1)): c, ((0, 2), (1, 3)): c}, 4, 2)
    minus = FockState({((0, 0), (1, 1)): c, ((0, 2), (1, 3)): -c}, 4, 2)
    assert generate_d4("plus").allclose(plus, atol=1e-15)
    assert generate_d4("minus").allclose(minus, atol=1e-15)


def test_d4_intermediate_states():
    snaps = dict(simulate_d4().snapshots)
    c = 1 / math.sqrt(2)
    after_two = snaps["emit t1 -> x1"]
    assert after_two.photon_state(spin=0).allclose(FockState({(): c}, 4, 2))
    assert after_two.photon_state(spin=1).allclose(FockState({((0, 0), (1, 1)): c}, 4, 2))
    flipped = snaps["flip"]
    assert flipped.photon_state(spin=1).allclose(FockState({(): c}, 4, 2))
    assert flipped.photon_state(spin=0).allclose(FockState({((0, 0), (1, 1)): c}, 4, 2))


def test_d4_general_path_agrees():
    assert generate(4).allclose(generate_d4("plus"))


@pytest.mark.parametrize("d", [4, 6, 8, 10])
def test_generate_matches_reference(d):
    state = generate(d)
    assert state.allclose(build_aux(d), atol=1e-12)
    spec = spec_from_aux(state)
    assert len(spec.branches) == d // 2
    assert schmidt_rank(state, {0}) == d // 2


@pytest.mark.parametrize("d", [6, 8])
def test_outcomes_only_change_signs(d):
    m = control_qubits(d)
    for bits in range(2**m):
        outs = "".join("-" if (bits >> q) & 1 else "+" for q in range(m))
        state = generate(d, outs)
        assert fidelity(sign_normalized(state), build_aux(d)) == pytest.approx(1, abs=1e-12)
        assert all(abs(a) == pytest.approx(1 / math.sqrt(d // 2)) for _, a in state.items())


def test_random_outcomes_need_seeded_generator():
    with pytest.raises(ValueError):
        generate(6, "random")
    a = generate(8, "random", rng=np.random.default_rng(1))
    b = generate(8, "random", rng=np.random.default_rng(1))
    assert a.allclose(b, rtol=0, atol=0)


@pytest.mark.parametrize("outcome", ["plus", "minus"])
def test_either_sign_gives_same_swap_rate(outcome):
    res = entanglement_swap(4, aux=generate_d4(outcome))
    assert res.total_success == pytest.approx(1 / 8, abs=1e-12)
    assert res.fidelity_min == pytest.approx(1, abs=1e-9)


def test_signed_d6_aux_swap():
    res = entanglement_swap(6, aux=generate(6, "-+"))
    assert res.total_success == pytest.approx(1 / 18, abs=1e-12)
    assert res.fidelity_min == pytest.approx(1, abs=1e-9)


@pytest.mark.parametrize("d,switches,qubits", [(4, 1, 1), (6, 3, 2), (8, 7, 2), (10, 7, 3), (12, 15, 3)])
def test_resource_counts(d, switches, qubits):
    assert switch_count(d) == switches
    assert control_qubits(d) == qubits


def test_routes_are_distinct_leaves():
    for d in (4, 6, 8, 10):
        paths = [tuple(route(d, m)) for m in range(d - 2)]
        assert len(set(paths)) == d - 2
        assert all(node < switch_count(d) for p in paths for node, _ in p)


def test_verify_schedule_passes():
    assert verify_schedule(4).ok
    rep = verify_schedule(8)
    assert rep.ok and rep.branches == 4 and rep.photons_per_branch == [6, 6, 6, 6]


@pytest.mark.parametrize("d", [4, 6, 8])
def test_corrupted_delay_names_mode(d):
    delays = DelayConfig.default(d)
    rep = verify_schedule(d, delays.with_delay(0, delays.delays[0] - 1))
    assert not rep.ok
    assert any("x0" in v for v in rep.violations)
    with pytest.raises(ScheduleError) as info:
        generate(d, delays=delays.with_delay(0, delays.delays[0] - 1))
    assert info.value.violations


def test_only_target_branch_emits():
    run = simulate(8)
    excites = [e for e in run.log if e.spin_op == "excite"]
    assert len(excites) == 4 * 3 * 2
    assert run.violations == []


def test_schedule_log_is_json_lines():
    run = simulate(6)
    lines = run.log_jsonl().splitlines()
    first = json.loads(lines[1])
    for key in ("step", "control_branch", "spin_op", "raw_bin", "spatial_mode", "delay_applied"):
        assert key in first
    assert [json.loads(l)["step"] for l in lines] == list(range(len(lines) - 1)) + [len(lines) - 1]


def test_relabel_audit():
    run = simulate(6)
    assert [r["time_bin"] for r in run.relabel_log] == list(range(6))


def test_bad_dimensions():
    with pytest.raises(DimensionError):
        generate(5)
    with pytest.raises(DimensionError):
        generate(2)
    with pytest.raises(DimensionError):
        generate(10, max_dim=8)
