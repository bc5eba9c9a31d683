import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from gss_states.exceptions import DimensionMismatchError, LayoutError, NotGssError
from gss_states.infotheory import holevo_information
from gss_states.qmath import (
    LocalOperator,
    QuantumState,
    Role,
    Subsystem,
    SystemLayout,
    apply_local,
    permute_subsystems,
    random_unitary,
    state_from_amplitudes,
)
from gss_states.protocols import (
    ReductionPlan,
    Verdict,
    bell_basis,
    check_condition_i,
    coalition_attack,
    devetak_winter_rate,
    devetak_winter_terms,
    reduce_gss,
    reduction_branches,
    shift_operator,
    simulate_round,
    simulate_rounds,
    verify_gss,
)
from gss_states.states import (
    example2_werner,
    ghz_state,
    gss_from_spec,
    random_gss_spec,
    upsilon1,
    upsilon2,
)


def secrets_layout(n, d=2):
    return SystemLayout(tuple(Subsystem(f"A{k}", k, Role.SECRET, d) for k in range(1, n + 1)))


# --- condition (i) and verification -----------------------------------------


def test_condition_i_product_state():
    s = state_from_amplitudes(secrets_layout(3), {(0, 0, 0): 1.0})
    support_ok, uniform_ok, dist = check_condition_i(s)
    assert support_ok and not uniform_ok
    assert dist[(0, 0, 0)] == pytest.approx(1.0)
    rep = verify_gss(s)
    assert rep.verdict is Verdict.NOT_GSS


def test_condition_i_detects_leakage():
    s = state_from_amplitudes(secrets_layout(2), {(0, 0): 1 / math.sqrt(2), (0, 1): 1 / math.sqrt(2)})
    res = check_condition_i(s)
    assert not res.support_ok
    assert res.leakage == pytest.approx(0.5)


@pytest.mark.parametrize("n,d", [(2, 2), (3, 2), (4, 2), (3, 3)])
def test_ghz_verifies(n, d):
    rep = verify_gss(ghz_state(n, d))
    assert rep.is_gss and rep.verdict == "GSS"
    assert rep.witness is None
    assert len(rep.holevo_checks) == (n * (n - 1) if n > 2 else 2)
    assert rep.max_chi <= 1e-12
    assert rep.to_dict()["verdict"] == "GSS"


def test_upsilon_witnesses():
    r1 = verify_gss(upsilon1())
    assert r1.verdict is Verdict.NOT_GSS and r1.support_ok and r1.uniform_ok
    assert r1.witness.chi == pytest.approx(1.0, abs=1e-10)
    assert r1.check(1, (3,)).chi == pytest.approx(1.0, abs=1e-10)
    assert "chi(i_1" in r1.witness.describe()
    r2 = verify_gss(upsilon2())
    assert r2.verdict is Verdict.NOT_GSS
    assert r2.witness.chi == pytest.approx(1.0, abs=1e-10)


def test_exhaustive_covers_small_coalitions():
    rep = verify_gss(ghz_state(4, 2), exhaustive=True)
    assert rep.is_gss
    # every player against each coalition of 0, 1 or 2 others
    assert len(rep.holevo_checks) == 4 * (1 + 3 + 3)
    assert rep.check(2, ()).chi == pytest.approx(0.0, abs=1e-12)


def test_non_uniform_parity_state_is_rejected():
    amp = {(0, 0, 0): math.sqrt(0.4), (0, 1, 1): math.sqrt(0.2), (1, 0, 1): math.sqrt(0.2), (1, 1, 0): math.sqrt(0.2)}
    s = state_from_amplitudes(secrets_layout(3), amp)
    rep = verify_gss(s)
    assert rep.support_ok and not rep.uniform_ok
    assert rep.verdict is Verdict.NOT_GSS
    # the other two players pin down the dit, but a single one holds partial information
    assert rep.max_chi > 1e-9


def test_mixed_secret_dimensions_rejected():
    lay = SystemLayout.of(Subsystem("A1", 1, Role.SECRET, 2), Subsystem("A2", 2, Role.SECRET, 3))
    s = state_from_amplitudes(lay, {(0, 0): 1.0})
    with pytest.raises(DimensionMismatchError):
        verify_gss(s)


@settings(max_examples=15)
@given(st.integers(3, 4), st.integers(0, 10**6), st.randoms(use_true_random=False))
def test_verdict_invariant_under_permutation_and_shield_unitaries(n, seed, rnd):
    s = gss_from_spec(random_gss_spec(n, 2, 2, seed=seed))
    order = list(s.layout.labels)
    rnd.shuffle(order)
    assert verify_gss(permute_subsystems(s, order)).is_gss
    shield = s.layout.labels_with_role(Role.SHIELD)[0]
    twisted = apply_local(LocalOperator((shield,), random_unitary(s.layout[shield].dim, seed)), s)
    rep = verify_gss(twisted)
    assert rep.is_gss and rep.max_chi <= 1e-9


def test_verifier_matches_holevo_oracle_on_upsilon1():
    u = upsilon1()
    rep = verify_gss(u)
    # labels: A1 A2 A3 A'1 A'2 A'3; player k owns axes k-1 and k+2
    for c in rep.holevo_checks:
        axes = [ax for p in c.coalition for ax in (p - 1, p + 2)]
        want = oracles.holevo_oracle(u.vector, [2] * 6, [c.measured_player - 1], axes)
        assert c.chi == pytest.approx(want, abs=1e-10)


# --- rounds -------------------------------------------------------------


@pytest.mark.parametrize("make", [lambda: ghz_state(3, 2), lambda: ghz_state(3, 3)])
def test_rounds_always_reconstruct(make):
    s = make()
    rounds = simulate_rounds(s, dealer=1, n_rounds=1000, seed=4)
    assert all(r.success for r in rounds)
    d = s.layout["A1"].dim
    counts = np.bincount([r.dealer_dit for r in rounds], minlength=d)
    # 4 sigma band around the uniform count
    sigma = math.sqrt(1000 * (1 / d) * (1 - 1 / d))
    assert np.all(np.abs(counts - 1000 / d) <= 4 * sigma)


def test_rounds_are_seeded():
    a = [r.to_dict() for r in simulate_rounds(ghz_state(3, 2), 2, 20, seed=9)]
    b = [r.to_dict() for r in simulate_rounds(ghz_state(3, 2), 2, 20, seed=9)]
    assert a == b
    assert simulate_round(ghz_state(3, 2), 1, seed=9).success


def test_rounds_need_gss_unless_overridden():
    u = upsilon1()
    with pytest.raises(NotGssError):
        simulate_rounds(u, 1, 10, seed=0)
    rounds = simulate_rounds(u, 1, 200, seed=0, require_gss=False)
    # the secret statistics are still zero-sum, so reconstruction works
    assert all(r.success for r in rounds)
    with pytest.raises(LayoutError):
        simulate_rounds(ghz_state(3, 2), 7, 1)


# --- coalition attacks --------------------------------------------------


def test_upsilon1_attack_reads_the_copy():
    assert coalition_attack(upsilon1(), ["A3", "A'3"], 1) == pytest.approx(1.0, abs=1e-10)


def test_upsilon2_bell_measurement_attack():
    u = upsilon2()
    assert coalition_attack(u, ["A3", "A4"], 1) == pytest.approx(0.0, abs=1e-10)
    assert coalition_attack(u, ["A3", "A4"], 1, bell_basis()) == pytest.approx(1.0, abs=1e-10)
    op = LocalOperator(("A3", "A4"), bell_basis())
    assert coalition_attack(u, ["A3", "A4"], 1, op) == pytest.approx(1.0, abs=1e-10)


def test_ghz_random_basis_attack_learns_nothing():
    g = ghz_state(3, 2)
    for seed in range(5):
        assert coalition_attack(g, ["A2"], 1, random_unitary(2, seed)) <= 1e-9


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_attack_bounded_by_holevo(seed):
    s = upsilon1()
    basis = random_unitary(4, seed)
    mi = coalition_attack(s, ["A3", "A'3"], 1, basis)
    assert mi <= holevo_information(s, ["A1"], ["A3", "A'3"]) + 1e-9


def test_attack_argument_errors():
    g = ghz_state(3, 2)
    with pytest.raises(ValueError, match="orthonormal"):
        coalition_attack(g, ["A2"], 1, np.array([[1, 1], [0, 1]]))
    with pytest.raises(DimensionMismatchError):
        coalition_attack(g, ["A2"], 1, np.eye(3))
    with pytest.raises(LayoutError):
        coalition_attack(g, ["A1"], 1)
    with pytest.raises(LayoutError):
        coalition_attack(g, ["A2"], 1, LocalOperator(("A3",), np.eye(2)))


# --- reduction ------------------------------------------------------------


def test_shift_operator():
    t = shift_operator(3, 1)
    assert np.allclose(t @ np.eye(3)[:, 2], np.eye(3)[:, 0])
    assert np.allclose(shift_operator(3, -1), t.T)


def test_ghz4_reduces_to_ghz3():
    g4 = ghz_state(4, 2)
    plan = ReductionPlan.for_keep(g4.layout.players, [1, 2, 3])
    want = ghz_state(3, 2).density_matrix()
    for x, (p, b) in reduction_branches(g4, plan).items():
        assert p == pytest.approx(0.5)
        assert np.allclose(b.density_matrix(), want, atol=1e-12)
    assert np.allclose(reduce_gss(g4, plan, seed=1).density_matrix(), want)
    assert np.allclose(reduce_gss(g4, plan, outcome=(1,)).density_matrix(), want)


def test_reduced_random_spec_stays_gss():
    s = gss_from_spec(random_gss_spec(4, 2, 2, seed=21))
    plan = ReductionPlan.for_keep(s.layout.players, [2, 4])
    for _, b in reduction_branches(s, plan).values():
        assert verify_gss(b).is_gss
    avg = reduce_gss(s, plan, mode="average")
    assert "M" in avg.layout.labels
    assert avg.layout["M"].role is Role.SHIELD and avg.layout["M"].player == 2
    assert verify_gss(avg).is_gss
    bare = reduce_gss(s, plan, mode="average", keep_record=False)
    assert "M" not in bare.layout.labels


def test_werner_example_reduces_to_a_gss_pair():
    g = example2_werner(2, 0.25)
    plan = ReductionPlan.for_keep(g.layout.players, [1, 2])
    for _, b in reduction_branches(g, plan).values():
        assert verify_gss(b).is_gss


def test_reduction_plan_errors():
    with pytest.raises(LayoutError):
        ReductionPlan((1,), (2, 3), 1)
    with pytest.raises(LayoutError):
        ReductionPlan((1, 2), (2, 3), 1)
    with pytest.raises(LayoutError):
        ReductionPlan((1, 2), (3,), 3)
    with pytest.raises(LayoutError):
        ReductionPlan.for_keep((1, 2, 3), (1, 5))
    g = ghz_state(3, 2)
    with pytest.raises(LayoutError):
        reduction_branches(g, ReductionPlan((1, 2), (3, 4), 1))
    with pytest.raises(ValueError):
        reduce_gss(g, ReductionPlan.for_keep((1, 2, 3), (1, 2)), mode="bogus")
    with pytest.raises(ValueError, match="zero probability"):
        reduce_gss(ghz_state(3, 2), ReductionPlan.for_keep((1, 2, 3), (1, 2)), outcome=(5,))


# --- rates --------------------------------------------------------------


@pytest.mark.parametrize("n,d", [(2, 2), (3, 2), (3, 3), (4, 2)])
def test_ghz_rate_is_log_d(n, d):
    assert devetak_winter_rate(ghz_state(n, d)) == pytest.approx(math.log2(d), abs=1e-10)


def test_random_spec_rate_and_terms():
    s = gss_from_spec(random_gss_spec(3, 3, 2, seed=8))
    assert devetak_winter_rate(s) == pytest.approx(math.log2(3), abs=1e-9)
    terms = devetak_winter_terms(s)
    # 3 players, coalitions of size 0 and 1 among the two others
    assert len(terms) == 3 * 3
    assert all(t.rate == pytest.approx(t.mutual_information - t.chi) for t in terms)


def test_upsilon1_rate_vanishes():
    terms = devetak_winter_terms(upsilon1())
    t = next(t for t in terms if t.player == 1 and t.coalition == (3,))
    assert t.rate == pytest.approx(0.0, abs=1e-10)
    assert devetak_winter_rate(upsilon1()) == 0.0


def test_product_state_rate_is_zero():
    lay = secrets_layout(2)
    s = QuantumState(lay, np.eye(4) / 4)
    assert devetak_winter_rate(s) == 0.0
