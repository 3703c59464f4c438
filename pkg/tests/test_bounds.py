import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from reconkm.bounds import (
    GuardExceeded,
    brute_force,
    feasible_subsets,
    mpd_oracle,
    ordered_pair_sum,
    raw_to_g_term,
    spectral_bounds,
)
from reconkm.instance import Instance
from reconkm.objective import cost
from reconkm.solver import SolverConfig, solve

from conftest import random_bipartite, random_metric


def test_2x2_tight():
    rep = spectral_bounds(np.array([[0.0, 1.0], [1.0, 0.0]]), 2)
    assert rep.g_lower == pytest.approx(2.0, abs=1e-12)
    assert rep.g_upper == pytest.approx(2.0, abs=1e-12)
    assert ordered_pair_sum([[0, 1], [1, 0]], [0, 1]) == 2.0


def test_k1_flagged():
    D = random_metric(5, 1).dff
    rep = spectral_bounds(D, 1)
    assert rep.notes and rep.g_lower >= 0 and rep.g_upper >= 0


def test_bounds_formula_matches_numpy():
    D = random_metric(7, 2).dff
    rep = spectral_bounds(D, 3)
    w = np.linalg.eigvalsh(D)
    wt = np.linalg.eigvalsh(np.sqrt(D))
    assert rep.g_upper == pytest.approx(3 * w[np.argmax(np.abs(w))], rel=1e-10)
    smallest = np.sort(np.abs(wt))[:3]
    assert rep.g_lower == pytest.approx(np.sum(smallest**2), rel=1e-10)


def test_lower_bound_counterexample():
    # near-duplicate pair: the cheapest 2-subset sums to 0.02, the formula gives ~1.87
    eps = 0.01
    D = np.array([[0, eps, 1], [eps, 0, 1], [1, 1, 0]])
    rep = spectral_bounds(D, 2)
    assert ordered_pair_sum(D, [0, 1]) == pytest.approx(0.02)
    assert rep.g_lower > 1.8


def test_service_bounds():
    inst = random_bipartite(10, 5, 3)
    rep = spectral_bounds(inst, 2)
    for S in itertools.combinations(range(5), 2):
        f = cost(inst, S, 0.0).f_term
        assert rep.f_lower - 1e-12 <= f <= rep.f_upper + 1e-12


@given(st.integers(0, 10**6), st.integers(2, 8), st.data())
def test_upper_bound_holds(seed, m, data):
    rng = np.random.default_rng(seed)
    A = rng.random((m, m)) * rng.choice([1, 10, 100])
    D = np.triu(A, 1) + np.triu(A, 1).T
    k = data.draw(st.integers(1, m))
    rep = spectral_bounds(D, k)
    top = max(ordered_pair_sum(D, S) for S in itertools.combinations(range(m), k))
    assert top <= rep.g_upper * (1 + 1e-7) + 1e-12


def test_raw_to_g_term(line3):
    raw = ordered_pair_sum(line3.dff, [0, 2])
    assert raw_to_g_term(raw, 2, 1.0, "sum") == cost(line3, [0, 2], 1.0).g_term
    assert raw_to_g_term(raw, 2, 1.0, "mean") == cost(line3, [0, 2], 1.0, "mean").g_term


def test_brute_force_line(line3):
    res = brute_force(line3, 2, 1.0)
    assert res.optimum.selected == (0, 1) and res.optimum_total == 2.0 and res.enumerated == 3


def test_brute_force_k_equals_m(line3):
    res = brute_force(line3, 3, 1.0)
    assert res.optimum.selected == (0, 1, 2) and res.enumerated == 1


def test_brute_force_huge_lambda_is_mpd():
    P = np.array([[0.0, 0.0], [5.0, 0.0], [5.2, 0.1], [0.0, 6.0], [9.0, 9.0]])
    inst = Instance(np.linalg.norm(P[:, None] - P[None, :], axis=-1), np.linalg.norm(P[:, None] - P[None, :], axis=-1))
    res = brute_force(inst, 2, 1e6)
    assert res.optimum.selected == (1, 2)
    assert mpd_oracle(inst.dff, 2)[0] == (1, 2)


def test_mpd_examples():
    assert mpd_oracle([[0, 1], [1, 0]], 2) == ((0, 1), 2.0)
    x = np.array([0.0, 1.0, 3.0])
    assert mpd_oracle(np.abs(x[:, None] - x[None, :]), 2) == ((0, 1), 2.0)
    E = np.ones((4, 4)) - np.eye(4)
    assert mpd_oracle(E, 3)[0] == (0, 1, 2)


@pytest.mark.parametrize("seed", range(5))
def test_mpd_equals_large_lambda_on_constant_rows(seed):
    # constant dfc rows make the service term independent of S
    D = random_metric(7, seed).dff
    inst = Instance(np.full((4, 7), 3.0), D)
    assert brute_force(inst, 3, 1e6).optimum.selected == mpd_oracle(D, 3)[0]


def test_guard():
    inst = random_metric(40, 0)
    with pytest.raises(GuardExceeded):
        brute_force(inst, 10, 0.0)
    with pytest.raises(GuardExceeded):
        mpd_oracle(inst.dff, 10)


def test_quota_enumeration_count():
    inst = Instance(np.zeros((1, 5)), np.zeros((5, 5)), groups=["a", "a", "a", "b", "b"])
    subsets = list(feasible_subsets(inst, 3, {"a": 2, "b": 1}))
    assert len(subsets) == math.comb(3, 2) * math.comb(2, 1)
    assert subsets == sorted(subsets)


@given(st.integers(0, 10**6), st.sampled_from([0.0, 0.5, 2.0]))
def test_oracle_below_local_search(seed, lam):
    inst = random_metric(8, seed)
    opt = brute_force(inst, 3, lam)
    best, _ = solve(inst, SolverConfig(k=3, lam=lam, restarts=3, seed=seed))
    assert opt.optimum_total <= best.total + 1e-12


@given(st.integers(0, 10**6))
def test_lambda_monotone_optimum(seed):
    inst = random_metric(7, seed)
    prev = None
    for lam in (0.0, 0.5, 1.0, 2.0, 4.0):
        sol = brute_force(inst, 3, lam).optimum
        cur = (ordered_pair_sum(inst.dff, sol.selected), sol.cost.f_term)
        if prev is not None:
            assert cur[0] <= prev[0] + 1e-9 and cur[1] >= prev[1] - 1e-9
        prev = cur
