import numpy as np
import pytest
from hypothesis import given, strategies as st

from reconkm.bounds import brute_force
from reconkm.instance import Instance
from reconkm.objective import InfeasibleError, cost
from reconkm.solver import (
    SolverConfig,
    even_quotas,
    is_local_optimum,
    local_search,
    random_start,
    solve,
)

from conftest import random_bipartite, random_metric


@pytest.mark.parametrize("initial", [[0, 1], [0, 2], [1, 2]])
@pytest.mark.parametrize("strategy", ["first", "best"])
def test_line_converges_to_optimum(line3, initial, strategy):
    run = local_search(line3, SolverConfig(k=2, lam=1.0, strategy=strategy), initial=initial)
    assert run.converged
    assert run.final.total == 2.0
    assert run.final.selected in [(0, 1), (1, 2)]


def test_line_solve_restarts(line3):
    best, runs = solve(line3, SolverConfig(k=2, lam=1.0, restarts=5))
    assert best.total == 2.0 and len(runs) == 5
    assert [r.seed for r in runs] == [0, 1, 2, 3, 4]


def test_k_equals_m_one_sweep(line3):
    run = local_search(line3, SolverConfig(k=3, lam=1.0))
    assert run.converged and run.iterations == 1 and run.swaps_performed == 0


def test_single_restart_matches_local_search():
    inst = random_metric(9, 3)
    cfg = SolverConfig(k=3, lam=0.5, restarts=1, seed=11)
    best, runs = solve(inst, cfg)
    run = local_search(inst, cfg, seed=11)
    assert best.selected == run.final.selected and runs[0].history == run.history


def test_solve_is_deterministic():
    inst = random_metric(10, 5)
    cfg = SolverConfig(k=3, lam=1.0, restarts=6, seed=4)
    a, ra = solve(inst, cfg)
    b, rb = solve(inst, cfg)
    assert a.selected == b.selected and a.total == b.total
    assert [r.history for r in ra] == [r.history for r in rb]


def test_parallel_matches_serial():
    inst = random_metric(10, 6)
    cfg = SolverConfig(k=3, lam=0.8, restarts=8, seed=2)
    a, ra = solve(inst, cfg, jobs=1)
    b, rb = solve(inst, cfg, jobs=4)
    assert a.selected == b.selected
    assert [(r.final.selected, r.history, r.iterations) for r in ra] == [
        (r.final.selected, r.history, r.iterations) for r in rb
    ]


def _plain_kmedian_sweeps(dfc, S):
    """Independent first-improvement k-median search (no dispersion term)."""
    S = sorted(S)
    history = [dfc[:, S].min(axis=1).sum()]
    while True:
        moved = False
        for s in list(S):
            for t in range(dfc.shape[1]):
                if t in S:
                    continue
                here = dfc[:, S].min(axis=1).sum()
                T = sorted([x for x in S if x != s] + [t])
                there = dfc[:, T].min(axis=1).sum()
                if there < here - 1e-9:
                    S, s, moved = T, t, True
                    history.append(there)
        if not moved:
            return tuple(S), history


@pytest.mark.parametrize("seed", range(5))
def test_lambda_zero_matches_plain_kmedian(seed):
    inst = random_bipartite(25, 10, seed)
    start = [0, 4, 7]
    run = local_search(inst, SolverConfig(k=3, lam=0.0), initial=start)
    S, history = _plain_kmedian_sweeps(inst.dfc, start)
    assert run.final.selected == S
    np.testing.assert_allclose(run.history, history, rtol=1e-12)


def test_random_start_is_uniform_subset():
    inst = random_metric(6, 0)
    cfg = SolverConfig(k=2)
    rng = np.random.default_rng(0)
    seen = {tuple(random_start(inst, cfg, rng)) for _ in range(400)}
    assert len(seen) == 15


def test_config_validation(line3):
    with pytest.raises(ValueError):
        SolverConfig(k=0)
    with pytest.raises(ValueError):
        SolverConfig(k=2, lam=-1)
    with pytest.raises(ValueError):
        SolverConfig(k=2, strategy="random")
    with pytest.raises(ValueError):
        SolverConfig(k=2, quotas={"a": 1})
    with pytest.raises(InfeasibleError):
        local_search(line3, SolverConfig(k=4))


def test_even_quotas_odd_k():
    assert even_quotas(["R", "D", "R"], 3) == {"D": 2, "R": 1}
    assert even_quotas(["R", "D"], 4) == {"D": 2, "R": 2}


def _party_instance(seed):
    rng = np.random.default_rng(seed)
    P = np.concatenate([rng.normal(-1, 0.4, (8, 2)), rng.normal(1, 0.4, (6, 2))])
    D = np.linalg.norm(P[:, None] - P[None, :], axis=-1)
    return Instance(D, D, groups=["D"] * 8 + ["R"] * 6)


def test_quota_runs_keep_counts():
    inst = _party_instance(1)
    cfg = SolverConfig(k=5, lam=1.0, quotas={"D": 3, "R": 2}, restarts=6, assignment_mode="same-group-nearest")
    best, runs = solve(inst, cfg)
    for r in runs:
        groups = [inst.groups[s] for s in r.final.selected]
        assert groups.count("D") == 3 and groups.count("R") == 2
        assert is_local_optimum(inst, r.final.selected, cfg)[0]
    opt = brute_force(inst, 5, 1.0, mode="same-group-nearest", quotas={"D": 3, "R": 2})
    assert best.total >= opt.optimum_total - 1e-12


def test_quota_infeasible():
    inst = _party_instance(1)
    with pytest.raises(InfeasibleError):
        local_search(inst, SolverConfig(k=7, quotas={"D": 0, "R": 7}))
    with pytest.raises(InfeasibleError):
        local_search(inst, SolverConfig(k=2, quotas={"D": 1, "R": 1}), initial=[0, 1])


def test_max_iterations_cap():
    inst = random_metric(12, 9)
    run = local_search(inst, SolverConfig(k=4, lam=0.1, max_iterations=1, strategy="best"), seed=0)
    assert run.iterations == 1
    assert run.converged == (run.swaps_performed == 0)


@given(
    st.integers(0, 10**6),
    st.integers(4, 10),
    st.sampled_from([0.0, 0.5, 2.0]),
    st.sampled_from(["first", "best"]),
    st.sampled_from(["sum", "mean"]),
)
def test_descent_and_certificate(seed, m, lam, strategy, norm):
    inst = random_bipartite(m + 3, m, seed)
    cfg = SolverConfig(k=min(3, m - 1), lam=lam, strategy=strategy, normalization=norm)
    run = local_search(inst, cfg, seed=seed)
    h = run.history
    assert all(b < a - cfg.improvement_tol for a, b in zip(h, h[1:]))
    assert len(h) == run.swaps_performed + 1
    assert run.final.total == pytest.approx(h[-1], rel=1e-9, abs=1e-12)
    assert run.converged
    ok, gain = is_local_optimum(inst, run.final.selected, cfg)
    assert ok, gain
    c = cost(inst, run.final.selected, lam, norm)
    assert run.final.total == pytest.approx(c.total, rel=1e-9)
