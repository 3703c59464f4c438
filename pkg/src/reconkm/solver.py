"""Single-swap local search for reconciliation k-median, with restarts and
per-group quota constraints."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instance import Instance
from .objective import (
    ASSIGNMENT_MODES,
    NORMALIZATIONS,
    Assignment,
    CostBreakdown,
    InfeasibleError,
    SwapEvaluator,
    assign_clients,
    cost,
)

STRATEGIES = ("first", "best")


@dataclass(frozen=True)
class SolverConfig:
    k: int
    lam: float = 0.0
    normalization: str = "sum"
    strategy: str = "first"
    improvement_tol: float = 1e-9
    max_iterations: int = 1000
    restarts: int = 40
    seed: int = 0
    quotas: dict | None = None
    assignment_mode: str = "nearest"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.lam < 0 or not math.isfinite(self.lam):
            raise ValueError("lambda must be a finite value >= 0")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.assignment_mode not in ASSIGNMENT_MODES:
            raise ValueError(f"unknown assignment mode {self.assignment_mode!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.improvement_tol < 0:
            raise ValueError("improvement_tol must be >= 0")
        if self.quotas is not None:
            quotas = {str(g): int(c) for g, c in self.quotas.items()}
            if any(c < 0 for c in quotas.values()):
                raise ValueError("quotas must be non-negative")
            if sum(quotas.values()) != self.k:
                raise ValueError(f"quotas sum to {sum(quotas.values())}, expected k={self.k}")
            object.__setattr__(self, "quotas", quotas)

    def validate_for(self, inst: Instance) -> None:
        if self.k > inst.m:
            raise InfeasibleError(f"k={self.k} exceeds the {inst.m} facilities")
        if self.quotas is not None:
            if inst.groups is None:
                raise InfeasibleError("quotas need facility groups")
            have = {g: inst.groups.count(g) for g in self.quotas}
            short = {g: (q, have[g]) for g, q in self.quotas.items() if have[g] < q}
            if short:
                raise InfeasibleError(f"quota infeasible (group: quota, available): {short}")


def even_quotas(groups, k: int) -> dict:
    """Split k across the distinct groups as evenly as possible; earlier
    labels (sorted order) get the remainder, so odd k gives the first group
    ceil(k/2) when there are two."""
    labels = sorted(set(groups))
    if not labels:
        raise ValueError("no groups")
    base, extra = divmod(k, len(labels))
    return {g: base + (1 if i < extra else 0) for i, g in enumerate(labels)}


@dataclass(frozen=True)
class Solution:
    selected: tuple[int, ...]
    assignment: Assignment
    cost: CostBreakdown

    @property
    def total(self) -> float:
        return self.cost.total


@dataclass(frozen=True)
class RunStats:
    iterations: int
    swaps_performed: int
    converged: bool
    final: Solution
    seed: int | None = None
    history: tuple[float, ...] = field(default=(), repr=False)  # total after start and after each swap


def _prefix_shuffle(pool: np.ndarray, count: int, rng: np.random.Generator) -> list[int]:
    pool = pool.copy()
    for i in range(count):
        j = int(rng.integers(i, len(pool)))
        pool[i], pool[j] = pool[j], pool[i]
    return [int(x) for x in pool[:count]]


def random_start(inst: Instance, cfg: SolverConfig, rng: np.random.Generator) -> list[int]:
    """Uniform random k-subset, drawn per group when quotas are set."""
    if cfg.quotas is None:
        return sorted(_prefix_shuffle(np.arange(inst.m), cfg.k, rng))
    groups = np.asarray(inst.groups)
    chosen = []
    for g in sorted(cfg.quotas):
        chosen += _prefix_shuffle(np.flatnonzero(groups == g), cfg.quotas[g], rng)
    return sorted(chosen)


def _check_initial(inst: Instance, cfg: SolverConfig, initial) -> list[int]:
    S = sorted(int(s) for s in initial)
    if len(S) != cfg.k or len(set(S)) != cfg.k:
        raise ValueError(f"initial set must hold {cfg.k} distinct facilities")
    if S[0] < 0 or S[-1] >= inst.m:
        raise ValueError("initial facility index out of range")
    if cfg.quotas is not None:
        counts = {g: 0 for g in cfg.quotas}
        for s in S:
            counts[inst.groups[s]] = counts.get(inst.groups[s], 0) + 1
        if counts != cfg.quotas:
            raise InfeasibleError(f"initial set has group counts {counts}, quotas are {cfg.quotas}")
    return S


def _candidates(inst: Instance, cfg: SolverConfig, s: int) -> np.ndarray:
    if cfg.quotas is None:
        return np.arange(inst.m)
    return np.flatnonzero(np.asarray(inst.groups) == inst.groups[s])


def make_solution(inst: Instance, S, cfg: SolverConfig) -> Solution:
    S = tuple(sorted(int(s) for s in S))
    return Solution(
        S,
        assign_clients(inst, S, cfg.assignment_mode),
        cost(inst, S, cfg.lam, cfg.normalization, cfg.assignment_mode),
    )


def local_search(inst: Instance, cfg: SolverConfig, initial=None, seed: int | None = None) -> RunStats:
    """Swap one selected facility for one unselected facility while that
    lowers the cost by more than ``cfg.improvement_tol``.

    An iteration is one sweep over all candidate swaps. With ``first`` the
    sweep visits the slots of S (ascending, as of the sweep start) and scans
    t ascending, applying each improving swap as it is found and carrying on
    from the next t with the slot's new occupant. With ``best`` it applies
    the single most improving swap, ties to the lowest (s, t). Under quotas
    only same-group swaps are admissible.
    """
    cfg.validate_for(inst)
    if initial is None:
        seed = cfg.seed if seed is None else seed
        S = random_start(inst, cfg, np.random.default_rng(seed))
    else:
        S = _check_initial(inst, cfg, initial)
    ev = SwapEvaluator(inst, S, cfg.lam, cfg.normalization, cfg.assignment_mode)
    history = [ev.total]
    tol = cfg.improvement_tol
    swaps = 0
    iterations = 0
    converged = False

    while iterations < cfg.max_iterations:
        iterations += 1
        improved = False
        if cfg.strategy == "first":
            for s in [int(x) for x in ev.S]:
                # the slot keeps scanning later t against the updated set
                cand = _candidates(inst, cfg, s)
                while cand.size:
                    hits = np.flatnonzero(ev.deltas_for(s, cand) < -tol)
                    if not hits.size:
                        break
                    t = int(cand[hits[0]])
                    ev.apply(s, t)
                    history.append(ev.total)
                    swaps += 1
                    improved = True
                    s, cand = t, cand[hits[0] + 1 :]
        else:
            best = (-tol, None, None)
            for s in [int(x) for x in ev.S]:
                cand = _candidates(inst, cfg, s)
                delta = ev.deltas_for(s, cand)
                j = int(np.argmin(delta))
                if delta[j] < best[0]:
                    best = (float(delta[j]), s, int(cand[j]))
            if best[1] is not None:
                ev.apply(best[1], best[2])
                history.append(ev.total)
                swaps += 1
                improved = True
        if not improved:
            converged = True
            break

    final = make_solution(inst, ev.S, cfg)
    return RunStats(iterations, swaps, converged, final, seed, tuple(history))


def restart_seed(base: int, restart: int) -> int:
    return int(base) + int(restart)


def solve(inst: Instance, cfg: SolverConfig, jobs: int = 1) -> tuple[Solution, list[RunStats]]:
    """Run ``cfg.restarts`` local searches with seeds ``cfg.seed + r`` and
    return the lowest-total solution (earliest restart on ties) and all runs."""
    cfg.validate_for(inst)
    seeds = [restart_seed(cfg.seed, r) for r in range(cfg.restarts)]
    if jobs > 1 and len(seeds) > 1:
        from .parallel import map_runs

        runs = map_runs(inst, [(cfg, s) for s in seeds], jobs)
    else:
        runs = [local_search(inst, cfg, seed=s) for s in seeds]
    best = min(range(len(runs)), key=lambda r: (runs[r].final.total, r))
    return runs[best].final, runs


def is_local_optimum(inst: Instance, S, cfg: SolverConfig) -> tuple[bool, float]:
    """Exhaustive swap re-check by full cost recomputation.

    Returns whether no admissible swap improves by more than
    ``cfg.improvement_tol``, and the best improvement found (>= 0 means none).
    """
    S = sorted(int(s) for s in S)
    here = cost(inst, S, cfg.lam, cfg.normalization, cfg.assignment_mode).total
    best_gain = -math.inf
    for s in S:
        for t in _candidates(inst, cfg, s):
            t = int(t)
            if t in S:
                continue
            T = [x for x in S if x != s] + [t]
            try:
                there = cost(inst, T, cfg.lam, cfg.normalization, cfg.assignment_mode).total
            except InfeasibleError:
                continue
            best_gain = max(best_gain, here - there)
    return best_gain <= cfg.improvement_tol, best_gain
