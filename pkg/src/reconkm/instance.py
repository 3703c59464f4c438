"""Problem data, file ingestion and metric checks."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TOL = 1e-9
FORMATS = ("matrix-csv", "json", "edge-list-graph", "point-euclidean")


class InstanceError(ValueError):
    """Malformed or inconsistent problem data."""


def _check_matrix(name: str, M) -> np.ndarray:
    try:
        M = np.array(M, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"{name}: not a numeric matrix ({exc})") from None
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise InstanceError(f"{name}: expected a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InstanceError(f"{name}: non-finite distance")
    if np.any(M < 0):
        i, j = np.argwhere(M < 0)[0]
        raise InstanceError(f"{name}: negative distance {M[i, j]} at ({i}, {j})")
    return M


@dataclass(frozen=True, eq=False)
class Instance:
    """Facility-client and facility-facility distances plus optional metadata.

    ``dfc`` has shape (n_clients, m_facilities). ``dff`` is symmetrized to
    (A + A^T)/2 with a zero diagonal on construction.
    """

    dfc: np.ndarray
    dff: np.ndarray
    facility_labels: tuple[str, ...] | None = None
    client_labels: tuple[str, ...] | None = None
    groups: tuple[str, ...] | None = None
    client_groups: tuple[str, ...] | None = None
    polarity: np.ndarray | None = None
    weights: np.ndarray | None = None  # accepted, not used by the objective

    def __post_init__(self):
        dfc = _check_matrix("dfc", self.dfc)
        dff = _check_matrix("dff", self.dff)
        n, m = dfc.shape
        if dff.shape != (m, m):
            raise InstanceError(f"dimension mismatch: dfc is {dfc.shape} but dff is {dff.shape}")
        dff = (dff + dff.T) / 2
        np.fill_diagonal(dff, 0.0)
        dfc.setflags(write=False)
        dff.setflags(write=False)
        object.__setattr__(self, "dfc", dfc)
        object.__setattr__(self, "dff", dff)

        for name, size in (
            ("facility_labels", m),
            ("client_labels", n),
            ("groups", m),
            ("client_groups", n),
        ):
            value = getattr(self, name)
            if value is None:
                continue
            value = tuple(str(v) for v in value)
            if len(value) != size:
                raise InstanceError(f"dimension mismatch: {name} has {len(value)} entries, expected {size}")
            object.__setattr__(self, name, value)
        if self.facility_labels is not None and len(set(self.facility_labels)) != m:
            raise InstanceError("facility labels must be unique")

        for name, size in (("polarity", m), ("weights", n)):
            value = getattr(self, name)
            if value is None:
                continue
            value = np.array(value, dtype=float).reshape(-1)
            if value.shape != (size,):
                raise InstanceError(f"dimension mismatch: {name} has {value.size} entries, expected {size}")
            if not np.all(np.isfinite(value)):
                raise InstanceError(f"{name}: non-finite value")
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if self.weights is not None and np.any(self.weights < 0):
            raise InstanceError("weights: negative value")

    @property
    def n(self) -> int:
        return self.dfc.shape[0]

    @property
    def m(self) -> int:
        return self.dfc.shape[1]

    @property
    def labels(self) -> tuple[str, ...]:
        return self.facility_labels or tuple(str(i) for i in range(self.m))

    def client_group_labels(self) -> tuple[str, ...] | None:
        """Groups of the clients; falls back to facility groups when F = C."""
        if self.client_groups is not None:
            return self.client_groups
        if self.groups is not None and self.n == self.m:
            return self.groups
        return None

    def to_json(self) -> dict:
        out = {"dfc": self.dfc.tolist(), "dff": self.dff.tolist()}
        for name in ("facility_labels", "client_labels", "groups", "client_groups"):
            if getattr(self, name) is not None:
                out[name] = list(getattr(self, name))
        for name in ("polarity", "weights"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name).tolist()
        return out


@dataclass(frozen=True)
class MetricReport:
    is_symmetric: bool
    triangle_violations: int
    worst_violation: float
    sampled: bool
    checked: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def validate_metric(inst: Instance, max_triples: int = 10**6, seed: int = 0) -> MetricReport:
    """Check symmetry and the triangle inequality on the facility distances.

    All m^3 ordered triples are checked when that fits in ``max_triples``;
    otherwise that many triples are drawn uniformly at random. Excesses
    within 1e-9 count as satisfied (and are reported as 0).
    """
    D = inst.dff
    m = D.shape[0]
    symmetric = bool(np.array_equal(D, D.T))
    worst = -np.inf
    violations = 0
    if m**3 <= max_triples:
        sampled = False
        checked = m**3
        for mid in range(m):
            excess = D - D[:, mid][:, None] - D[mid, :][None, :]
            excess = np.where(excess > TOL, excess, np.minimum(excess, 0.0))
            violations += int(np.count_nonzero(excess > 0))
            worst = max(worst, float(excess.max()))
    else:
        sampled = True
        checked = int(max_triples)
        if checked > 0:
            rng = np.random.default_rng(seed)
            i, j, mid = rng.integers(0, m, size=(3, checked))
            excess = D[i, j] - D[i, mid] - D[mid, j]
            excess = np.where(excess > TOL, excess, np.minimum(excess, 0.0))
            violations = int(np.count_nonzero(excess > 0))
            worst = float(excess.max())
    if checked == 0:
        worst = 0.0
    return MetricReport(symmetric, violations, worst, sampled, checked)


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise InstanceError(f"{path}:{lineno}: non-numeric entry in {row}") from None
    if not rows:
        raise InstanceError(f"{path}: empty matrix")
    if len({len(r) for r in rows}) != 1:
        raise InstanceError(f"{path}: ragged rows")
    return _check_matrix(str(path), rows)


def write_matrix_csv(path, M) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(M, dtype=float):
            writer.writerow([repr(float(x)) for x in row])


def load_matrix_csv(dfc_path, dff_path) -> Instance:
    return Instance(read_matrix_csv(dfc_path), read_matrix_csv(dff_path))


def _per_facility(value, labels: list[str] | None, m: int, name: str):
    if value is None:
        return None
    if isinstance(value, dict):
        keys = labels or [str(i) for i in range(m)]
        missing = [k for k in keys if k not in value]
        if missing:
            raise InstanceError(f"{name}: no entry for {missing[:3]}")
        return [value[k] for k in keys]
    return value


def load_json(path) -> Instance:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: {exc}") from None
    if not isinstance(obj, dict) or "dfc" not in obj or "dff" not in obj:
        raise InstanceError(f"{path}: expected an object with 'dfc' and 'dff'")
    dff = _check_matrix("dff", obj["dff"])
    m = dff.shape[0]
    flabels = obj.get("facility_labels")
    clabels = obj.get("client_labels")
    return Instance(
        obj["dfc"],
        dff,
        facility_labels=flabels,
        client_labels=clabels,
        groups=_per_facility(obj.get("groups"), flabels, m, "groups"),
        client_groups=_per_facility(obj.get("client_groups"), clabels, len(obj["dfc"]), "client_groups"),
        polarity=_per_facility(obj.get("polarity"), flabels, m, "polarity"),
        weights=obj.get("weights"),
    )


def read_points_csv(path) -> dict:
    """Parse ``id,x1,...,xd[,group][,polarity]`` into ids, coordinates and extras."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InstanceError(f"{path}: empty file") from None
        if len(header) < 2 or header[0] != "id":
            raise InstanceError(f"{path}: header must start with 'id' and name at least one coordinate")
        coord_cols = [i for i, h in enumerate(header) if i > 0 and h not in ("group", "polarity")]
        if not coord_cols:
            raise InstanceError(f"{path}: no coordinate columns")
        group_col = header.index("group") if "group" in header else None
        pol_col = header.index("polarity") if "polarity" in header else None
        ids, coords, groups, pols = [], [], [], []
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InstanceError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            ids.append(row[0].strip())
            try:
                coords.append([float(row[i]) for i in coord_cols])
                if pol_col is not None:
                    pols.append(float(row[pol_col]))
            except ValueError:
                raise InstanceError(f"{path}:{lineno}: non-numeric value") from None
            if group_col is not None:
                groups.append(row[group_col].strip())
    if not ids:
        raise InstanceError(f"{path}: no points")
    coords = np.array(coords)
    if not np.all(np.isfinite(coords)):
        raise InstanceError(f"{path}: non-finite coordinate")
    return {
        "ids": ids,
        "coords": coords,
        "groups": groups if group_col is not None else None,
        "polarity": pols if pol_col is not None else None,
    }


def load_points(facilities_path, clients_path=None) -> Instance:
    """Euclidean instance from point files; clients default to the facilities."""
    from .metrics import euclidean_distances

    fac = read_points_csv(facilities_path)
    cli = read_points_csv(clients_path) if clients_path is not None else fac
    if fac["coords"].shape[1] != cli["coords"].shape[1]:
        raise InstanceError("dimension mismatch: facility and client points differ in dimension")
    return Instance(
        euclidean_distances(cli["coords"], fac["coords"]),
        euclidean_distances(fac["coords"], fac["coords"]),
        facility_labels=fac["ids"],
        client_labels=cli["ids"],
        groups=fac["groups"],
        client_groups=cli["groups"],
        polarity=fac["polarity"],
    )


def _read_ids(path) -> list[str]:
    with open(path) as fh:
        ids = [line.strip() for line in fh if line.strip()]
    if not ids:
        raise InstanceError(f"{path}: no ids")
    return ids


def load_edge_list(edges_path, facilities_path, clients_path, unreachable: str = "substitute") -> Instance:
    """Hop-count instance from an undirected edge list and id lists."""
    from .metrics import Graph, shortest_path_distances

    names: dict[str, int] = {}
    edges = []
    with open(edges_path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) != 2:
                raise InstanceError(f"{edges_path}:{lineno}: expected 'u v'")
            u, v = (names.setdefault(p, len(names)) for p in parts)
            edges.append((u, v))
    facilities = _read_ids(facilities_path)
    clients = _read_ids(clients_path)
    for ident in facilities + clients:
        names.setdefault(ident, len(names))  # isolated nodes are allowed
    g = Graph(len(names), edges)
    fidx = [names[f] for f in facilities]
    cidx = [names[c] for c in clients]
    # one call, so dff and dfc share the same substitute for unreachable pairs
    D = shortest_path_distances(g, fidx + cidx, fidx, unreachable)
    return Instance(
        D[len(fidx) :],
        D[: len(fidx)],
        facility_labels=facilities,
        client_labels=clients,
    )


def load_instance(path, format: str = "json", **paths) -> Instance:
    """Load an instance in one of ``FORMATS``.

    ``path`` is the primary file; the formats that need more files take
    them as keywords: matrix-csv ``dff``; point-euclidean ``clients``;
    edge-list-graph ``facilities``, ``clients`` and optionally ``unreachable``.
    """
    if format not in FORMATS:
        raise InstanceError(f"unknown format {format!r}; expected one of {FORMATS}")
    if not Path(path).exists():
        raise InstanceError(f"{path}: no such file")
    if format == "json":
        return load_json(path)
    if format == "matrix-csv":
        return load_matrix_csv(path, paths.get("dff", path))
    if format == "point-euclidean":
        return load_points(path, paths.get("clients"))
    try:
        return load_edge_list(path, paths["facilities"], paths["clients"], paths.get("unreachable", "substitute"))
    except KeyError as exc:
        raise InstanceError(f"edge-list-graph needs the {exc} id file") from None
