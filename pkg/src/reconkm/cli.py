"""Command-line driver.

Exit codes: 0 success, 2 input/parse error, 3 infeasible configuration,
4 enumeration guard exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bounds import GuardExceeded, brute_force, spectral_bounds
from .experiments import SweepCellError, SweepSpec, frequency_table, generate_synthetic, run_sweep, write_reports
from .instance import FORMATS, Instance, InstanceError, load_instance, read_matrix_csv, validate_metric, write_matrix_csv
from .linalg import ConvergenceError, components_for_energy
from .metrics import (
    Graph,
    euclidean_distances,
    latent_distances,
    load_mentions,
    mention_client_distances,
    rescale_to_mean,
    shortest_path_distances,
    spectral_embedding,
    weighted_jaccard_distances,
)
from .objective import InfeasibleError
from .solver import SolverConfig, even_quotas, solve

EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_GUARD = 4


def _add_instance_args(p: argparse.ArgumentParser, need_dfc: bool = True) -> None:
    p.add_argument("--dfc", help="client x facility distance CSV")
    p.add_argument("--dff", help="facility x facility distance CSV")
    p.add_argument("--instance", help="instance file in --format (instead of --dfc/--dff)")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--clients", help="client points (point-euclidean) or client ids (edge-list-graph)")
    p.add_argument("--facilities", help="facility ids (edge-list-graph)")
    p.set_defaults(need_dfc=need_dfc)


def _instance(args) -> Instance:
    if args.instance:
        return load_instance(args.instance, args.format, clients=args.clients, facilities=args.facilities)
    if not args.dff:
        raise InstanceError("give --instance or --dff (and --dfc)")
    dff = read_matrix_csv(args.dff)
    if args.dfc:
        dfc = read_matrix_csv(args.dfc)
    elif args.need_dfc:
        raise InstanceError("--dfc is required")
    else:
        dfc = dff
    return Instance(dfc, dff)


def parse_quotas(text: str | None, inst: Instance, k: int) -> dict | None:
    """``even`` or ``group:count,group:count``."""
    if not text:
        return None
    if text == "even":
        if inst.groups is None:
            raise InstanceError("--quotas even needs facility groups")
        return even_quotas(inst.groups, k)
    quotas = {}
    for part in text.split(","):
        group, _, count = part.rpartition(":")
        if not group:
            raise InstanceError(f"bad quota {part!r}; expected group:count")
        quotas[group] = int(count)
    return quotas


def _mode(name: str) -> str:
    return "same-group-nearest" if name == "same-group" else name


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_solve(args) -> int:
    inst = _instance(args)
    cfg = SolverConfig(
        k=args.k,
        lam=args.lam,
        normalization=args.normalization,
        strategy=args.strategy,
        restarts=args.restarts,
        seed=args.seed,
        max_iterations=args.max_iterations,
        quotas=parse_quotas(args.quotas, inst, args.k),
        assignment_mode=_mode(args.assignment),
    )
    best, runs = solve(inst, cfg, jobs=args.jobs)
    labels = inst.labels
    _emit(
        {
            "k": cfg.k,
            "lambda": cfg.lam,
            "normalization": cfg.normalization,
            "strategy": cfg.strategy,
            "assignment": cfg.assignment_mode,
            "quotas": cfg.quotas,
            "selected": [labels[s] for s in best.selected],
            "selected_index": list(best.selected),
            "cost": best.cost.to_json(),
            "cluster_sizes": {labels[s]: n for s, n in best.assignment.sizes().items()},
            "runs": [
                {"seed": r.seed, "total": r.final.total, "iterations": r.iterations, "swaps": r.swaps_performed, "converged": r.converged}
                for r in runs
            ],
        },
        args.out,
    )
    return 0


def _resolve(base: Path, value):
    return str(base / value) if value is not None and not Path(value).is_absolute() else value


def load_sweep_config(path) -> tuple[Instance, SweepSpec, dict]:
    """Sweep config: ``{"instance": {...}, "sweep": {...}, "frequency": {...}}``.

    The instance block is either ``{"synthetic": {n_per_blob, blob_centers,
    spread, seed}}`` or ``{"format": ..., "path": ..., "dff"/"clients"/
    "facilities": ...}`` with paths relative to the config file.
    """
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceError(f"{path}: {exc}") from None
    base = path.parent
    src = cfg.get("instance")
    if not isinstance(src, dict):
        raise InstanceError(f"{path}: missing 'instance' block")
    if "synthetic" in src:
        inst = generate_synthetic(**src["synthetic"])
    else:
        extra = {key: _resolve(base, src[key]) for key in ("dff", "clients", "facilities") if key in src}
        if "unreachable" in src:
            extra["unreachable"] = src["unreachable"]
        inst = load_instance(_resolve(base, src["path"]), src.get("format", "json"), **extra)
    spec = SweepSpec.from_json(cfg.get("sweep", {}))
    return inst, spec, cfg.get("frequency", {})


def cmd_sweep(args) -> int:
    inst, spec, freq = load_sweep_config(args.config)
    records = run_sweep(inst, spec, jobs=args.jobs)
    csv_path, json_path = write_reports(records, args.out_dir, spec)
    if freq:
        polarity = dict(zip(inst.labels, inst.polarity.tolist())) if inst.polarity is not None else None
        tables = {}
        for k in spec.k_values:
            for lam in spec.lambda_values:
                rows = frequency_table(records, k, lam, freq.get("top", 16), polarity)
                tables[f"k={k},lambda={lam!r}"] = [r.__dict__ for r in rows]
        (Path(args.out_dir) / "frequencies.json").write_text(json.dumps(tables, indent=2, sort_keys=True) + "\n")
    print(f"wrote {csv_path} and {json_path} ({len(records)} records)", file=sys.stderr)
    return 0


def cmd_bounds(args) -> int:
    if args.dfc:
        inst = Instance(read_matrix_csv(args.dfc), read_matrix_csv(args.dff))
        report = spectral_bounds(inst, args.k)
    else:
        dff = Instance(read_matrix_csv(args.dff), read_matrix_csv(args.dff)).dff
        report = spectral_bounds(dff, args.k)
    out = report.to_json()
    out["units"] = "ordered-pair sum of facility distances; g_term(sum) = lambda/2 * value"
    _emit(out, args.out)
    return 0


def cmd_oracle(args) -> int:
    inst = _instance(args)
    res = brute_force(
        inst,
        args.k,
        args.lam,
        args.normalization,
        _mode(args.assignment),
        parse_quotas(args.quotas, inst, args.k),
    )
    labels = inst.labels
    _emit(
        {
            "selected": [labels[s] for s in res.optimum.selected],
            "selected_index": list(res.optimum.selected),
            "cost": res.optimum.cost.to_json(),
            "enumerated": res.enumerated,
        },
        args.out,
    )
    return 0


def _read_ids(path) -> list[str]:
    return [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]


def _graph(edges_path, extra_ids=()) -> tuple[Graph, dict]:
    names: dict[str, int] = {}
    edges = []
    for line in Path(edges_path).read_text().splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if len(parts) != 2:
            raise InstanceError(f"{edges_path}: bad edge line {line!r}")
        edges.append(tuple(names.setdefault(p, len(names)) for p in parts))
    for ident in extra_ids:
        names.setdefault(ident, len(names))
    return Graph(len(names), edges), names


def cmd_distances(args) -> int:
    from .instance import read_points_csv

    mode = args.mode
    second = None
    if mode == "euclidean":
        a = read_points_csv(args.points_a)["coords"]
        b = read_points_csv(args.points_b or args.points_a)["coords"]
        D = euclidean_distances(a, b)
    elif mode in ("shortest-path", "spectral"):
        sources = _read_ids(args.sources)
        targets = _read_ids(args.targets) if args.targets else sources
        g, names = _graph(args.edges, sources + targets)
        sidx = [names[s] for s in sources]
        tidx = [names[t] for t in targets]
        if mode == "shortest-path":
            D = shortest_path_distances(g, sidx, tidx, args.unreachable)
        else:
            emb = spectral_embedding(g, args.gamma)
            D = euclidean_distances(emb[sidx], emb[tidx])
            if args.rescale_to_shortest_path:
                D = rescale_to_mean(D, float(shortest_path_distances(g, sidx, tidx, args.unreachable).mean()))
    else:
        mc, fac_ids, _ = load_mentions(args.mentions)
        if mode == "wjaccard":
            D = weighted_jaccard_distances(mc)
        elif mode == "mentions":
            D = mention_client_distances(mc)
        else:
            r = args.rank or components_for_energy(mc.dense(), args.energy)
            D, second = latent_distances(mc, r)
            print(f"latent rank r={r}", file=sys.stderr)
        if args.labels_out:
            Path(args.labels_out).write_text("\n".join(fac_ids) + "\n")
    if args.target_mean is not None:
        D = rescale_to_mean(D, args.target_mean)
    if args.out:
        write_matrix_csv(args.out, D)
    else:
        import csv

        writer = csv.writer(sys.stdout, lineterminator="\n")
        for row in D:
            writer.writerow([repr(float(x)) for x in row])
    if second is not None and args.out_dfc:
        write_matrix_csv(args.out_dfc, second)
    return 0


def cmd_synth(args) -> int:
    centers = [float(x) for x in args.blobs.split(",")]
    inst = generate_synthetic(args.n_per_blob, centers, args.spread, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "instance.json").write_text(json.dumps(inst.to_json()) + "\n")
    write_matrix_csv(out / "dfc.csv", inst.dfc)
    write_matrix_csv(out / "dff.csv", inst.dff)
    print(f"wrote {inst.m} points to {out}", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    D = read_matrix_csv(args.dff)
    report = validate_metric(Instance(D, D), args.max_triples, args.seed)
    _emit(report.to_json(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reconkm", description="Reconciliation k-median solver and experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    def solver_opts(p):
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--lambda", dest="lam", type=float, required=True)
        p.add_argument("--normalization", choices=("sum", "mean"), default="sum")
        p.add_argument("--assignment", choices=("nearest", "same-group"), default="nearest")
        p.add_argument("--quotas", help="'even' or group:count,group:count")
        p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("solve", help="multi-restart local search")
    _add_instance_args(p)
    solver_opts(p)
    p.add_argument("--strategy", choices=("first", "best"), default="first")
    p.add_argument("--restarts", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iterations", type=int, default=1000)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="(k, lambda) sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="spectral bounds on the dispersion sum")
    p.add_argument("--dff", required=True)
    p.add_argument("--dfc", help="also report service-term bounds")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("oracle", help="exact optimum by enumeration")
    _add_instance_args(p)
    solver_opts(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("distances", help="build a distance matrix (matrix CSV)")
    p.add_argument("--mode", required=True, choices=("euclidean", "shortest-path", "spectral", "wjaccard", "latent", "mentions"))
    p.add_argument("--points-a")
    p.add_argument("--points-b")
    p.add_argument("--edges")
    p.add_argument("--sources", help="id file, one per line (rows)")
    p.add_argument("--targets", help="id file (columns); defaults to --sources")
    p.add_argument("--unreachable", choices=("error", "substitute"), default="error")
    p.add_argument("--gamma", type=int, default=10)
    p.add_argument("--rescale-to-shortest-path", action="store_true")
    p.add_argument("--mentions", help="client_id,facility_id,count CSV")
    p.add_argument("--rank", type=int)
    p.add_argument("--energy", type=float, default=0.5, help="latent: Frobenius energy fraction picking the rank")
    p.add_argument("--target-mean", type=float)
    p.add_argument("--labels-out", help="write facility ids (row order) here")
    p.add_argument("--out")
    p.add_argument("--out-dfc", help="latent: client x facility matrix")
    p.set_defaults(func=cmd_distances)

    p = sub.add_parser("synth", help="write a synthetic polarized instance")
    p.add_argument("--blobs", default="-1,1", help="comma-separated blob centers")
    p.add_argument("--n-per-blob", type=int, default=40)
    p.add_argument("--spread", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="metric checks on a facility distance matrix")
    p.add_argument("--dff", required=True)
    p.add_argument("--max-triples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            return args.func(args)
        except SweepCellError as exc:
            print(f"error: {exc}", file=sys.stderr)
            raise exc.cause from None
    except GuardExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InstanceError, ConvergenceError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
