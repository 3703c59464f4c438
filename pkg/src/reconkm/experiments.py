"""(k, lambda) sweeps with restarts, polarity metrics, frequency tables,
synthetic polarized instances, and CSV/JSON reports."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .instance import Instance
from .metrics import euclidean_distances
from .solver import SolverConfig, local_search

DEFAULT_LAMBDAS = (0.0, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4)
DEFAULT_KS = (2, 4, 8)


class SweepCellError(RuntimeError):
    def __init__(self, k: int, lam: float, cause: Exception):
        super().__init__(f"sweep cell k={k}, lambda={lam} failed: {cause}")
        self.cell = (k, lam)
        self.cause = cause


@dataclass(frozen=True)
class SweepSpec:
    k_values: tuple[int, ...] = DEFAULT_KS
    lambda_values: tuple[float, ...] = DEFAULT_LAMBDAS
    restarts: int = 40
    normalization: str = "mean"
    strategy: str = "first"
    assignment_mode: str = "nearest"
    quotas: dict | str | None = None  # a group->count map, or "even" for an even split per k
    seed: int = 0
    max_iterations: int = 1000
    improvement_tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(self, "lambda_values", tuple(float(x) for x in self.lambda_values))
        if not self.k_values or not self.lambda_values:
            raise ValueError("k_values and lambda_values must be non-empty")
        if any(x < 0 for x in self.lambda_values):
            raise ValueError("lambda values must be >= 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if isinstance(self.quotas, str) and self.quotas != "even":
            raise ValueError("quotas must be a mapping or 'even'")

    @classmethod
    def from_json(cls, obj: dict) -> "SweepSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown sweep fields: {sorted(unknown)}")
        return cls(**obj)

    def config(self, inst: Instance, k: int, lam: float) -> SolverConfig:
        from .solver import even_quotas

        quotas = self.quotas
        if quotas == "even":
            if inst.groups is None:
                raise ValueError("'even' quotas need facility groups")
            quotas = even_quotas(inst.groups, k)
        return SolverConfig(
            k=k,
            lam=lam,
            normalization=self.normalization,
            strategy=self.strategy,
            improvement_tol=self.improvement_tol,
            max_iterations=self.max_iterations,
            restarts=self.restarts,
            seed=self.seed,
            quotas=quotas,
            assignment_mode=self.assignment_mode,
        )


@dataclass(frozen=True)
class SweepRecord:
    k: int
    lam: float
    lambda_index: int
    restart: int
    seed: int
    selected: tuple[str, ...]
    f_term: float
    g_term: float
    total: float
    iterations: int
    swaps: int
    converged: bool
    polarity_stddev: float | None = None
    polarity_l2: float | None = None


@dataclass(frozen=True)
class FrequencyRecord:
    label: str
    frequency: float
    polarity: float | None = None
    mentions: int | None = None


def polarity_stddev(scores) -> float:
    """Sample standard deviation (n - 1 denominator), computed exactly."""
    x = [float(v) for v in scores]
    if len(x) < 2:
        raise ValueError("need at least 2 scores")
    return statistics.stdev(x)


def polarity_l2(scores) -> float:
    x = np.asarray(scores, dtype=float)
    if x.size < 1:
        raise ValueError("need at least 1 score")
    return float(np.linalg.norm(x))


def restart_seed(base_seed: int, k: int, restart: int) -> int:
    """Seed for restart ``restart`` of every cell with this k.

    Independent of lambda, so runs are paired across lambda columns.
    """
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(k),))
    return int(ss.generate_state(1, dtype=np.uint32)[0]) + int(restart)


def _tasks(inst: Instance, spec: SweepSpec):
    for k in spec.k_values:
        for li, lam in enumerate(spec.lambda_values):
            cfg = spec.config(inst, k, lam)
            cfg.validate_for(inst)
            for r in range(spec.restarts):
                yield (k, li, lam, r), cfg, restart_seed(spec.seed, k, r)


def run_sweep(inst: Instance, spec: SweepSpec, jobs: int = 1) -> list[SweepRecord]:
    """One record per (k, lambda, restart), in that nesting order."""
    keys, tasks = [], []
    for key, cfg, seed in _tasks(inst, spec):
        keys.append(key)
        tasks.append((cfg, seed))
    if jobs > 1:
        from .parallel import map_runs

        runs = map_runs(inst, tasks, jobs)
    else:
        runs = []
        for (k, _, lam, _), (cfg, seed) in zip(keys, tasks):
            try:
                runs.append(local_search(inst, cfg, seed=seed))
            except Exception as exc:
                raise SweepCellError(k, lam, exc) from exc

    labels = inst.labels
    records = []
    for (k, li, lam, r), (_, seed), run in zip(keys, tasks, runs):
        sol = run.final
        pstd = pl2 = None
        if inst.polarity is not None:
            scores = inst.polarity[list(sol.selected)]
            pstd = polarity_stddev(scores) if len(scores) >= 2 else None
            pl2 = polarity_l2(scores)
        records.append(
            SweepRecord(
                k=k,
                lam=lam,
                lambda_index=li,
                restart=r,
                seed=seed,
                selected=tuple(labels[s] for s in sol.selected),
                f_term=sol.cost.f_term,
                g_term=sol.cost.g_term,
                total=sol.cost.total,
                iterations=run.iterations,
                swaps=run.swaps_performed,
                converged=run.converged,
                polarity_stddev=pstd,
                polarity_l2=pl2,
            )
        )
    return records


CSV_FIELDS = [f for f in SweepRecord.__dataclass_fields__]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ";".join(value)
    return str(value)


def records_to_csv(records: list[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def records_from_csv(text: str) -> list[SweepRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        opt = lambda v: float(v) if v != "" else None  # noqa: E731
        out.append(
            SweepRecord(
                k=int(row["k"]),
                lam=float(row["lam"]),
                lambda_index=int(row["lambda_index"]),
                restart=int(row["restart"]),
                seed=int(row["seed"]),
                selected=tuple(row["selected"].split(";")) if row["selected"] else (),
                f_term=float(row["f_term"]),
                g_term=float(row["g_term"]),
                total=float(row["total"]),
                iterations=int(row["iterations"]),
                swaps=int(row["swaps"]),
                converged=row["converged"] == "true",
                polarity_stddev=opt(row["polarity_stddev"]),
                polarity_l2=opt(row["polarity_l2"]),
            )
        )
    return out


def _stats(values) -> dict:
    x = np.asarray([v for v in values if v is not None], dtype=float)
    if x.size == 0:
        return {"mean": None, "std": None, "n": 0}
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return {"mean": float(np.mean(x)), "std": std, "n": int(x.size)}


SUMMARY_METRICS = ("f_term", "g_term", "total", "iterations", "polarity_stddev", "polarity_l2")


def summarize(records: list[SweepRecord], spec: SweepSpec | None = None) -> dict:
    """Per-cell aggregation over restarts plus the best-restart values."""
    cells: dict = {}
    for rec in records:
        cells.setdefault((rec.k, rec.lambda_index), []).append(rec)
    out = []
    for (k, li), recs in sorted(cells.items()):
        best = min(recs, key=lambda r: (r.total, r.restart))
        out.append(
            {
                "k": k,
                "lambda": recs[0].lam,
                "restarts": len(recs),
                "per_restart": {m: _stats(getattr(r, m) for r in recs) for m in SUMMARY_METRICS},
                "max_iterations": max(r.iterations for r in recs),
                "best_restart": {
                    "restart": best.restart,
                    "selected": list(best.selected),
                    **{m: getattr(best, m) for m in SUMMARY_METRICS},
                },
            }
        )
    summary = {"std_ddof": 1, "cells": out}
    if spec is not None:
        summary["spec"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec).items()}
    return summary


def write_reports(records: list[SweepRecord], out_dir, spec: SweepSpec | None = None) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "records.csv"
    json_path = out_dir / "summary.json"
    csv_path.write_text(records_to_csv(records))
    json_path.write_text(json.dumps(summarize(records, spec), indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def frequency_table(
    records: list[SweepRecord],
    k: int,
    lam: float,
    top: int = 16,
    polarity: dict | None = None,
    mentions: dict | None = None,
) -> list[FrequencyRecord]:
    """Selection frequency of each facility in one (k, lambda) cell.

    Ranked by frequency, then label; facilities never selected are omitted.
    """
    cell = [r for r in records if r.k == k and math.isclose(r.lam, lam, rel_tol=0, abs_tol=1e-12)]
    if not cell:
        raise KeyError(f"no records for k={k}, lambda={lam}")
    counts: dict[str, int] = {}
    for rec in cell:
        for label in rec.selected:
            counts[label] = counts.get(label, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top]
    polarity = polarity or {}
    mentions = mentions or {}
    return [FrequencyRecord(label, n / len(cell), polarity.get(label), mentions.get(label)) for label, n in ranked]


def generate_synthetic(
    n_per_blob: int = 40,
    blob_centers=(-1.0, 1.0),
    spread: float = 0.3,
    seed: int = 0,
) -> Instance:
    """Gaussian blobs on a line; every point is both facility and client and
    its polarity is its coordinate."""
    centers = [float(c) for c in blob_centers]
    if len(centers) < 2:
        raise ValueError("need at least 2 blobs")
    if not spread > 0:
        raise ValueError("spread must be positive")
    if n_per_blob < 1:
        raise ValueError("n_per_blob must be >= 1")
    rng = np.random.default_rng(seed)
    coords = np.concatenate([c + spread * rng.standard_normal(n_per_blob) for c in centers])
    groups = [f"blob{b}" for b in range(len(centers)) for _ in range(n_per_blob)]
    D = euclidean_distances(coords[:, None], coords[:, None])
    labels = [f"p{i}" for i in range(len(coords))]
    return Instance(D, D, facility_labels=labels, client_labels=labels, groups=groups, polarity=coords)
