"""Spectral bounds on the dispersion term and exhaustive optimum search.

The spectral bounds concern the raw ordered-pair sum
``sum_{i in S} sum_{j in S} d(i, j)`` of a k-subset S; use
:func:`raw_to_g_term` to convert to the g term of a normalization.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .instance import Instance
from .linalg import eigh
from .objective import InfeasibleError, dispersion_scale
from .solver import SolverConfig, Solution, make_solution

ENUMERATION_LIMIT = 10**6


class GuardExceeded(RuntimeError):
    """Exhaustive enumeration would exceed ``ENUMERATION_LIMIT`` subsets."""


@dataclass(frozen=True)
class BoundsReport:
    k: int
    m: int
    g_lower: float  # on the ordered-pair sum
    g_upper: float
    f_lower: float  # on the service sum
    f_upper: float
    eigenvalues_D: np.ndarray
    eigenvalues_Dtilde: np.ndarray
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["eigenvalues_D"] = self.eigenvalues_D.tolist()
        out["eigenvalues_Dtilde"] = self.eigenvalues_Dtilde.tolist()
        out["notes"] = list(self.notes)
        return out


def spectral_bounds(inst_or_dff, k: int) -> BoundsReport:
    """Eigenvalue bounds on the ordered-pair distance sum of k facilities.

    Upper: k * lambda_1(D). Lower: sum of the k smallest squared
    |eigenvalues| of the entrywise square root of D. The service bounds are
    the sums over clients of the row min and row max of dfc (when an
    Instance is given).
    """
    if isinstance(inst_or_dff, Instance):
        D = inst_or_dff.dff
        dfc = inst_or_dff.dfc
    else:
        D = np.asarray(inst_or_dff, dtype=float)
        dfc = None
    m = D.shape[0]
    if not 1 <= k <= m:
        raise ValueError(f"k={k} out of range [1, {m}]")
    if np.any(D < 0) or np.any(np.diag(D) != 0):
        raise ValueError("facility distances must be nonnegative with a zero diagonal")
    ev_D = eigh(D).eigenvalues
    ev_Dt = eigh(np.sqrt(D)).eigenvalues
    g_upper = k * float(ev_D[0])
    g_lower = float(np.sum(ev_Dt[m - k :] ** 2))
    notes = []
    if k == 1:
        notes.append("k=1: every singleton has pair sum 0, the lower bound may exceed it")
    f_lower = float(dfc.min(axis=1).sum()) if dfc is not None else math.nan
    f_upper = float(dfc.max(axis=1).sum()) if dfc is not None else math.nan
    return BoundsReport(k, m, g_lower, g_upper, f_lower, f_upper, ev_D, ev_Dt, tuple(notes))


def raw_to_g_term(raw: float, k: int, lam: float, normalization: str = "sum") -> float:
    """Convert an ordered-pair sum into the g term of the given normalization."""
    return dispersion_scale(k, lam, normalization) * raw / 2


def ordered_pair_sum(dff: np.ndarray, S) -> float:
    S = list(S)
    return float(np.asarray(dff)[np.ix_(S, S)].sum())


def _guard(m: int, k: int) -> None:
    count = math.comb(m, k)
    if count > ENUMERATION_LIMIT:
        raise GuardExceeded(f"C({m}, {k}) = {count} subsets exceeds the limit of {ENUMERATION_LIMIT}")


def feasible_subsets(inst: Instance, k: int, quotas: dict | None = None):
    """k-subsets in lexicographic order, restricted to quota-feasible ones."""
    if quotas is None:
        yield from itertools.combinations(range(inst.m), k)
        return
    if inst.groups is None:
        raise InfeasibleError("quotas need facility groups")
    for S in itertools.combinations(range(inst.m), k):
        counts: dict = {}
        for s in S:
            counts[inst.groups[s]] = counts.get(inst.groups[s], 0) + 1
        if all(counts.get(g, 0) == q for g, q in quotas.items()) and set(counts) <= set(quotas):
            yield S


@dataclass(frozen=True)
class OracleResult:
    optimum: Solution
    optimum_total: float
    enumerated: int


def brute_force(
    inst: Instance,
    k: int,
    lam: float,
    normalization: str = "sum",
    mode: str = "nearest",
    quotas: dict | None = None,
) -> OracleResult:
    """Exact optimum by evaluating every feasible k-subset; ties go to the
    lexicographically smallest subset."""
    _guard(inst.m, k)
    cfg = SolverConfig(k=k, lam=lam, normalization=normalization, assignment_mode=mode, quotas=quotas, restarts=1)
    cfg.validate_for(inst)
    best = None
    best_total = math.inf
    count = 0
    for S in feasible_subsets(inst, k, cfg.quotas):
        count += 1
        try:
            sol = make_solution(inst, S, cfg)
        except InfeasibleError:
            continue
        if sol.total < best_total:
            best, best_total = sol, sol.total
    if best is None:
        raise InfeasibleError("no feasible subset")
    return OracleResult(best, best_total, count)


def mpd_oracle(dff, k: int) -> tuple[tuple[int, ...], float]:
    """k-subset minimizing the ordered-pair distance sum (lexicographic ties)."""
    D = np.asarray(dff, dtype=float)
    m = D.shape[0]
    if not 1 <= k <= m:
        raise ValueError(f"k={k} out of range [1, {m}]")
    _guard(m, k)
    best, best_sum = None, math.inf
    for S in itertools.combinations(range(m), k):
        total = ordered_pair_sum(D, S)
        if total < best_sum:
            best, best_sum = S, total
    return best, best_sum
