from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load_mapped
from qdownfold.errors import InsufficientShots, RangeError
from qdownfold.measurement import (
    MeasurementGroup,
    MeasurementPlan,
    allocate_shots,
    build_plan,
    estimate_energy,
    group_parities,
    qwc_group,
    truncate_groups,
)
from qdownfold.paulis import PauliSum, PauliTerm
from qdownfold.statevector import (
    State,
    expectation,
    init_reference,
    outcome_probabilities,
    sample_group,
)


def random_sum(n: int, k: int, rng) -> PauliSum:
    pairs = []
    for _ in range(k):
        lab = "".join(rng.choice(list("IXYZ"), n))
        pairs.append((float(rng.normal()), lab))
    return PauliSum.from_labels(pairs)


def random_state(n: int, rng) -> State:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return State(v / np.linalg.norm(v), n)


def test_grouping_example():
    S = PauliSum.from_labels([(1.0, "IZ"), (1.0, "ZZ"), (1.0, "IX")])
    groups = qwc_group(S)
    assert len(groups) == 2
    assert {t.label for t in groups[0].members} == {"IZ", "ZZ"}
    assert [t.label for t in groups[1].members] == ["IX"]
    assert groups[0].basis_string == "ZZ" and groups[1].basis_string == "IX"


def test_diagonal_sum_forms_one_group():
    rng = np.random.default_rng(0)
    pairs = [(float(rng.normal()), "".join(rng.choice(list("IZ"), 5))) for _ in range(20)]
    S = PauliSum.from_labels(pairs)
    assert len(qwc_group(S)) == 1


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_partition_and_qwc_properties(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    S = random_sum(n, int(rng.integers(1, 25)), rng)
    groups = qwc_group(S)
    seen = [t.key for g in groups for t in g.members]
    assert len(seen) == len(set(seen))
    assert set(seen) == {t.key for t in S.non_identity()}
    for g in groups:
        assert g.is_consistent()
        for a, b in combinations(g.members, 2):
            assert a.qubitwise_commutes(b)
    weights = [g.weight for g in groups]
    assert weights == sorted(weights, reverse=True)
    plan = build_plan(S)
    assert plan.to_sum() == S


def test_grouping_is_deterministic():
    rng = np.random.default_rng(3)
    S = random_sum(4, 30, rng)
    a, b = qwc_group(S), qwc_group(S.copy())
    assert [g.to_dict() for g in a] == [g.to_dict() for g in b]


def test_inconsistent_group_detected():
    g = MeasurementGroup((PauliTerm.from_label("XI"), PauliTerm.from_label("ZI")), "XI")
    assert not g.is_consistent()


def test_truncation_full_k_returns_original():
    rng = np.random.default_rng(4)
    S = random_sum(4, 20, rng) + PauliSum.identity(4, -1.5)
    plan = build_plan(S)
    tr = truncate_groups(plan, len(plan.groups))
    assert tr.operator == S
    assert tr.weight_fraction == pytest.approx(1.0)
    assert tr.retained_strings == tr.total_strings == len(S.non_identity())


@pytest.mark.parametrize("k", [0, -1, 100])
def test_truncation_range(k):
    plan = build_plan(random_sum(3, 10, np.random.default_rng(5)))
    with pytest.raises(RangeError):
        truncate_groups(plan, k)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_truncation_weight_monotone_and_optimal(seed):
    rng = np.random.default_rng(seed)
    plan = build_plan(random_sum(3, int(rng.integers(3, 14)), rng))
    weights = [g.weight for g in plan.groups]
    previous = 0.0
    for k in range(1, len(plan.groups) + 1):
        tr = truncate_groups(plan, k)
        kept = tr.weight_fraction * sum(weights)
        assert kept >= previous - 1e-12
        best = max(sum(c) for c in combinations(weights, k))
        assert kept == pytest.approx(best, abs=1e-12)
        previous = kept
        assert len(tr.plan.retained) == k


def test_group_parities_example():
    g = MeasurementGroup((PauliTerm.from_label("ZI"), PauliTerm.from_label("ZZ")), "ZZ")
    out = group_parities(g, np.array([0b00, 0b01, 0b10, 0b11]))
    np.testing.assert_array_equal(out, [[1, 1], [1, -1], [-1, -1], [-1, 1]])


def test_z_group_on_zero_state():
    S = PauliSum.from_labels([(0.5, "IZ"), (-0.25, "ZZ"), (0.125, "ZI"), (2.0, "II")])
    plan = build_plan(S, shots_per_group=64)
    s = init_reference(2, [])
    counts = [sample_group(s, g, 64, seed=0) for g in plan.retained]
    assert counts == [{"00": 64}]
    e, se = estimate_energy(counts, plan)
    assert e == pytest.approx(0.5 - 0.25 + 0.125 + 2.0, abs=1e-15)
    assert se == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_estimator_is_unbiased(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    S = random_sum(n, 12, rng)
    s = random_state(n, rng)
    plan = build_plan(S)
    analytic = plan.identity
    for g in plan.retained:
        p = outcome_probabilities(s, g.basis_string)
        coeffs = np.array([complex(t.coeff).real for t in g.members])
        analytic += float(p @ (group_parities(g, np.arange(1 << n)) @ coeffs))
    assert analytic == pytest.approx(expectation(s, S), abs=1e-12)


@pytest.fixture(scope="module")
def lih_problem():
    _, S = load_mapped("lih_sto3g_2e3o")
    state = random_state(S.n_qubits, np.random.default_rng(42))
    return S, build_plan(S), state, expectation(state, S)


def test_1024_shots_within_five_se(lih_problem):
    S, plan, state, exact = lih_problem
    hits = 0
    n_seeds = 300
    for seed in range(n_seeds):
        counts = [sample_group(state, g, 1024, seed=(seed, i)) for i, g in enumerate(plan.retained)]
        e, se = estimate_energy(counts, plan)
        hits += abs(e - exact) <= 5 * se
    assert hits / n_seeds >= 0.99


def test_monte_carlo_mean_matches_exact(lih_problem):
    S, plan, state, exact = lih_problem
    estimates, ses = [], []
    for seed in range(1000):
        counts = [sample_group(state, g, 256, seed=(10_000 + seed, i))
                  for i, g in enumerate(plan.retained)]
        e, se = estimate_energy(counts, plan)
        estimates.append(e)
        ses.append(se)
    estimates = np.array(estimates)
    sem = estimates.std(ddof=1) / np.sqrt(len(estimates))
    assert abs(estimates.mean() - exact) <= 3 * sem
    # reported SEs describe the spread of the estimates
    assert np.mean(ses) == pytest.approx(estimates.std(ddof=1), rel=0.1)


def test_missing_histograms_rejected():
    plan = build_plan(PauliSum.from_labels([(1.0, "Z"), (1.0, "X")]))
    with pytest.raises(InsufficientShots):
        estimate_energy([{"0": 3}], plan)
    with pytest.raises(InsufficientShots):
        estimate_energy([{"0": 3}, {}], plan)
    e, se = estimate_energy({0: {"0": 1}, 1: {"1": 1}}, plan)
    assert e == 0.0 and np.isnan(se)


def test_allocate_shots():
    rng = np.random.default_rng(6)
    plan = build_plan(random_sum(3, 12, rng))
    k = plan.retained_k
    uniform = allocate_shots(plan, 1000)
    assert sum(uniform) == 1000 and max(uniform) - min(uniform) <= 1
    weighted = allocate_shots(plan, 1000, weighted=True)
    assert sum(weighted) == 1000 and min(weighted) >= 1
    assert weighted[0] >= weighted[-1]
    with pytest.raises(InsufficientShots):
        allocate_shots(plan, k - 1)


def test_plan_json_round_trip():
    rng = np.random.default_rng(7)
    S = random_sum(4, 15, rng) + PauliSum.identity(4, 0.75)
    plan = truncate_groups(build_plan(S, 512), 3).plan
    back = MeasurementPlan.from_json(plan.to_json())
    assert back.to_dict() == plan.to_dict()
    assert back.retained_k == 3 and back.identity == 0.75
    assert back.to_sum() == plan.to_sum()


def test_non_hermitian_sum_rejected():
    with pytest.raises(ValueError):
        build_plan(PauliSum.from_labels([(1j, "X")]))
