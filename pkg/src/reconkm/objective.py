"""Reconciliation k-median cost: service term plus lambda-weighted dispersion.

Two normalizations are supported. ``sum``::

    f = sum_c d(c, s(c))        g = (lam / 2) * sum_{i in S} sum_{j in S} d(i, j)

``mean`` replaces the client sum by the client average and the pair sum by
the average over unordered pairs, times ``lam`` (g = 0 when k = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Instance

NORMALIZATIONS = ("sum", "mean")
ASSIGNMENT_MODES = ("nearest", "same-group-nearest")


class InfeasibleError(ValueError):
    """No valid assignment or selection exists for the requested configuration."""


@dataclass(frozen=True)
class CostBreakdown:
    f_term: float
    g_term: float
    total: float
    normalization: str

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Assignment:
    assigned: np.ndarray  # client -> facility index
    served: dict  # facility index -> array of client indices, one key per selected facility

    def sizes(self) -> dict:
        return {s: len(c) for s, c in self.served.items()}


def check_subset(inst: Instance, S) -> np.ndarray:
    S = np.asarray(sorted(int(s) for s in S), dtype=int)
    if S.size == 0:
        raise ValueError("facility set is empty")
    if S[0] < 0 or S[-1] >= inst.m:
        raise ValueError(f"facility index out of range [0, {inst.m})")
    if np.any(np.diff(S) == 0):
        raise ValueError("duplicate facility index")
    return S


def _check_args(lam: float, normalization: str, mode: str) -> None:
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    if mode not in ASSIGNMENT_MODES:
        raise ValueError(f"unknown assignment mode {mode!r}")


def eligibility(inst: Instance, mode: str) -> np.ndarray | None:
    """Boolean clients x facilities mask of allowed pairs, or None if all are."""
    if mode == "nearest":
        return None
    cgroups = inst.client_group_labels()
    if inst.groups is None or cgroups is None:
        raise InfeasibleError("same-group assignment needs facility and client groups")
    return np.asarray(cgroups)[:, None] == np.asarray(inst.groups)[None, :]


def service_matrix(inst: Instance, mode: str) -> np.ndarray:
    """dfc with ineligible pairs set to +inf."""
    mask = eligibility(inst, mode)
    if mask is None:
        return inst.dfc
    return np.where(mask, inst.dfc, np.inf)


def assign_clients(inst: Instance, S, mode: str = "nearest") -> Assignment:
    """Nearest selected (eligible) facility per client; ties go to the lowest index."""
    if mode not in ASSIGNMENT_MODES:
        raise ValueError(f"unknown assignment mode {mode!r}")
    S = check_subset(inst, S)
    sub = service_matrix(inst, mode)[:, S]
    pick = np.argmin(sub, axis=1)
    if not np.all(np.isfinite(sub[np.arange(inst.n), pick])):
        bad = int(np.flatnonzero(~np.isfinite(sub[np.arange(inst.n), pick]))[0])
        raise InfeasibleError(f"client {bad} has no selected facility in its group")
    assigned = S[pick]
    served = {int(s): np.flatnonzero(assigned == s) for s in S}
    return Assignment(assigned, served)


def pair_sum(dff: np.ndarray, S) -> float:
    """Sum of d(i, j) over unordered pairs i < j of S."""
    S = np.asarray(S, dtype=int)
    return float(np.triu(dff[np.ix_(S, S)], 1).sum())


def dispersion_scale(k: int, lam: float, normalization: str) -> float:
    """Factor turning the unordered pair sum into the g term."""
    if normalization == "sum":
        return lam
    return lam / (k * (k - 1) / 2) if k > 1 else 0.0


def cost(inst: Instance, S, lam: float, normalization: str = "sum", mode: str = "nearest") -> CostBreakdown:
    _check_args(lam, normalization, mode)
    S = check_subset(inst, S)
    a = assign_clients(inst, S, mode)
    f = float(inst.dfc[np.arange(inst.n), a.assigned].sum())
    if normalization == "mean":
        f /= inst.n
    g = dispersion_scale(len(S), lam, normalization) * pair_sum(inst.dff, S)
    return CostBreakdown(f, g, f + g, normalization)


class SwapEvaluator:
    """Incremental cost state for single-swap local search over one set S.

    Keeps, per client, the nearest and second-nearest selected facility and,
    per facility, its distance sum to S, so the cost change of every swap
    (s_out, t) for a fixed s_out is one O(n m) vectorized pass.
    """

    def __init__(self, inst: Instance, S, lam: float, normalization: str = "sum", mode: str = "nearest"):
        _check_args(lam, normalization, mode)
        self.inst = inst
        self.lam = lam
        self.normalization = normalization
        self.mode = mode
        self.service = service_matrix(inst, mode)
        self.S = check_subset(inst, S)
        self.k = len(self.S)
        self.g_scale = dispersion_scale(self.k, lam, normalization)
        self.f_scale = 1.0 / inst.n if normalization == "mean" else 1.0
        self._rebuild()

    def _nearest_two(self, rows) -> None:
        sub = self.service[rows][:, self.S]
        if self.k == 1:
            self.near[rows] = self.S[0]
            self.d1[rows] = sub[:, 0]
            self.d2[rows] = np.inf
            return
        # stable order so ties resolve to the lowest facility index
        order = np.argsort(sub, axis=1, kind="stable")[:, :2]
        r = np.arange(sub.shape[0])
        self.near[rows] = self.S[order[:, 0]]
        self.d1[rows] = sub[r, order[:, 0]]
        self.d2[rows] = sub[r, order[:, 1]]

    def _rebuild(self) -> None:
        n = self.inst.n
        self.near = np.empty(n, dtype=int)
        self.d1 = np.empty(n)
        self.d2 = np.empty(n)
        self._nearest_two(np.arange(n))
        if not np.all(np.isfinite(self.d1)):
            bad = int(np.flatnonzero(~np.isfinite(self.d1))[0])
            raise InfeasibleError(f"client {bad} has no selected facility in its group")
        self.dsum = self.inst.dff[:, self.S].sum(axis=1)
        self.f_raw = float(self.d1.sum())
        self.g_raw = pair_sum(self.inst.dff, self.S)

    @property
    def total(self) -> float:
        return self.f_raw * self.f_scale + self.g_raw * self.g_scale

    def breakdown(self) -> CostBreakdown:
        f = self.f_raw * self.f_scale
        g = self.g_raw * self.g_scale
        return CostBreakdown(f, g, f + g, self.normalization)

    def deltas_for(self, s_out: int, candidates=None) -> np.ndarray:
        """Cost change of swapping ``s_out`` for each candidate facility.

        ``candidates`` defaults to all facilities; entries for members of S
        are meaningless and set to +inf.
        """
        if candidates is None:
            candidates = np.arange(self.inst.m)
        candidates = np.asarray(candidates, dtype=int)
        base = np.where(self.near == s_out, self.d2, self.d1)
        new = np.minimum(base[:, None], self.service[:, candidates])
        with np.errstate(invalid="ignore"):
            df = (new - self.d1[:, None]).sum(axis=0)
        dg = self.dsum[candidates] - self.inst.dff[candidates, s_out] - self.dsum[s_out]
        with np.errstate(invalid="ignore"):
            delta = df * self.f_scale + dg * self.g_scale
        delta[np.isin(candidates, self.S)] = np.inf
        delta[np.isnan(delta)] = np.inf
        return delta

    def delta(self, s_out: int, t_in: int) -> float:
        if s_out not in self.S:
            raise ValueError(f"{s_out} is not in S")
        if t_in in self.S:
            raise ValueError(f"{t_in} is already in S")
        if not 0 <= t_in < self.inst.m:
            raise ValueError("facility index out of range")
        return float(self.deltas_for(s_out, [t_in])[0])

    def apply(self, s_out: int, t_in: int) -> None:
        """Perform the swap and refresh the caches of affected clients only."""
        # a client is affected if s_out was its nearest or second-nearest, or t_in beats its second
        affected = (
            (self.near == s_out)
            | (self.service[:, s_out] <= self.d2)
            | (self.service[:, t_in] < self.d2)
        )
        self.S = np.sort(np.concatenate([self.S[self.S != s_out], [t_in]]))
        rows = np.flatnonzero(affected)
        if rows.size:
            self._nearest_two(rows)
        self.dsum = self.inst.dff[:, self.S].sum(axis=1)
        self.f_raw = float(self.d1.sum())
        self.g_raw = pair_sum(self.inst.dff, self.S)


def swap_delta(
    inst: Instance,
    S,
    s_out: int,
    t_in: int,
    lam: float,
    normalization: str = "sum",
    mode: str = "nearest",
) -> float:
    """cost(S - s_out + t_in) - cost(S), computed incrementally."""
    return SwapEvaluator(inst, S, lam, normalization, mode).delta(s_out, t_in)
