"""Command-line pipeline: embeddings in, keep/delete manifests and score
reports out.

Exit codes: 0 success, 2 input or domain error (message on stderr names
the failing stage), 3 sweep target unreachable.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import cluster, metrics, store
from .errors import ConfigError, EmbpruneError
from .prune import PruneConfig, save_manifest, sweep_eta, write_keep_list
from .prune import prune as run_prune

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNREACHABLE = 3


def _fail(stage: str, exc: Exception) -> int:
    print(f"error: stage={stage}: {exc}", file=sys.stderr)
    return EXIT_INPUT


def _parse_k(text: str):
    if text == cluster.AUTO:
        return cluster.AUTO
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--k must be an integer or 'auto', got {text!r}")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _load_stage(args):
    return store.load(args.emb, require_normalized=True, manifest_path=args.items)


def _cluster_stage(matrix, args) -> tuple[cluster.ClusterModel, cluster.KMeansConfig]:
    kcfg = cluster.KMeansConfig(k=args.k, seed=args.seed)
    model = cluster.fit(matrix, kcfg, workers=args.workers)
    return model, kcfg


def _dump_cluster_model(model: cluster.ClusterModel, out: Path) -> None:
    _write_json(out / "cluster_model.json", {
        "k": model.k,
        "seed": model.seed,
        "objective": model.objective,
        "iterations_run": model.iterations_run,
        "cluster_sizes": model.cluster_sizes().tolist(),
    })
    store.write_values(out / "centroids.emb", model.centroids, normalized=False)


def _resolved_config(command: str, args, model: cluster.ClusterModel, extra: dict) -> dict:
    payload = {
        "command": command,
        "emb": str(Path(args.emb).resolve()),
        "items": str(Path(args.items).resolve()),
        "epsilon": args.epsilon,
        "k_requested": args.k,
        "k": model.k,
        "seed": args.seed,
        "max_iterations": args.max_iterations,
        "workers": args.workers,
        "out": str(Path(args.out).resolve()),
    }
    payload.update(extra)
    return payload


def cmd_prune(args) -> int:
    try:
        matrix, items = _load_stage(args)
    except (EmbpruneError, OSError) as exc:
        return _fail("load", exc)
    try:
        model, kcfg = _cluster_stage(matrix, args)
    except EmbpruneError as exc:
        return _fail("cluster", exc)
    try:
        cfg = PruneConfig(
            eta=args.eta, epsilon=args.epsilon,
            max_iterations=args.max_iterations, kmeans=kcfg,
        )
        result = run_prune(matrix, items, model, cfg, workers=args.workers)
    except EmbpruneError as exc:
        return _fail("prune", exc)
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_manifest(result, out / "prune_manifest.json")
        write_keep_list(result, out / "keep_list.txt")
        _dump_cluster_model(model, out)
        _write_json(out / "resolved_config.json",
                    _resolved_config("prune", args, model, {"eta": args.eta}))
    except OSError as exc:
        return _fail("write", exc)
    print(f"retained {result.retained}/{matrix.n} items (ratio {result.retention_ratio:.6f})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        matrix, items = _load_stage(args)
    except (EmbpruneError, OSError) as exc:
        return _fail("load", exc)
    try:
        model, kcfg = _cluster_stage(matrix, args)
    except EmbpruneError as exc:
        return _fail("cluster", exc)
    try:
        result = sweep_eta(
            matrix, items, model, args.epsilon, args.target_ratio, args.tol,
            max_iterations=args.max_iterations, kmeans=kcfg, workers=args.workers,
        )
    except EmbpruneError as exc:
        return _fail("sweep", exc)
    if result.unreachable:
        floor = "" if result.floor_ratio is None else f"; floor retention {result.floor_ratio:.6f}"
        print(f"error: stage=sweep: {result.warning}{floor}", file=sys.stderr)
        return EXIT_UNREACHABLE
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_manifest(result.manifest, out / "prune_manifest.json")
        write_keep_list(result.manifest, out / "keep_list.txt")
        _dump_cluster_model(model, out)
        _write_json(out / "sweep_result.json", {
            "eta": result.eta,
            "achieved_ratio": result.achieved_ratio,
            "target_ratio": args.target_ratio,
            "tolerance": args.tol,
            "steps": result.steps,
            "converged": result.converged,
            "floor_ratio": result.floor_ratio,
            "warning": result.warning,
        })
        _write_json(out / "resolved_config.json",
                    _resolved_config("sweep", args, model,
                                     {"target_ratio": args.target_ratio, "tol": args.tol}))
    except OSError as exc:
        return _fail("write", exc)
    if result.warning:
        print(f"warning: {result.warning}", file=sys.stderr)
    print(f"eta {result.eta:.9f} achieved retention {result.achieved_ratio:.6f} "
          f"(target {args.target_ratio}) in {result.steps} bisection steps")
    return EXIT_OK


def cmd_score(args) -> int:
    try:
        score = metrics.del_score(args.miou, args.ratio, args.alpha)
    except EmbpruneError as exc:
        return _fail("score", exc)
    print(json.dumps(score.report()))
    return EXIT_OK


def cmd_budget(args) -> int:
    try:
        budget = metrics.compute_budget(args.base_epochs, Fraction(args.ratio))
    except (EmbpruneError, ValueError, ZeroDivisionError) as exc:
        return _fail("budget", exc)
    print(json.dumps(budget.report()))
    return EXIT_OK


def cmd_savings(args) -> int:
    try:
        report = metrics.savings_report(
            args.frames, args.fps,
            width=args.width, height=args.height, bytes_per_pixel=args.bpp,
            retained_ratio=args.retained,
        )
    except (EmbpruneError, OverflowError) as exc:
        return _fail("savings", exc)
    print(json.dumps(report.report()))
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        known = {f for f in store.SynthSpec.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown spec keys: {sorted(unknown)}")
        spec = store.SynthSpec(**raw)
        matrix, manifest, truth = store.synthesize(spec)
    except (EmbpruneError, OSError, json.JSONDecodeError, TypeError) as exc:
        return _fail("synth", exc)
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        store.save(matrix, manifest, out / "data.emb", out / "items.jsonl")
        _write_json(out / "ground_truth.json", {
            "duplicate_groups": truth.duplicate_groups,
            "outlier_ids": truth.outlier_ids,
            "planted_cluster": truth.planted_cluster,
        })
        _write_json(out / "resolved_config.json", {
            "command": "synth",
            "spec": {f: getattr(spec, f) for f in store.SynthSpec.__dataclass_fields__},
            "out": str(out.resolve()),
        })
    except OSError as exc:
        return _fail("write", exc)
    print(f"wrote {matrix.n} items of dimension {matrix.d} to {out}")
    return EXIT_OK


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--emb", required=True, help="embedding .emb file")
    p.add_argument("--items", required=True, help="item manifest (JSON lines)")
    p.add_argument("--epsilon", type=float, default=0.9, help="outlier cosine-distance threshold")
    p.add_argument("--k", type=_parse_k, default=cluster.AUTO, help="cluster count or 'auto'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iterations", type=int, default=1, dest="max_iterations",
                   help="dedup passes per cluster")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embprune",
                                     description="Embedding-space dataset pruning and scoring.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prune", help="cluster, filter outliers, dedup at a fixed eta")
    _add_pipeline_args(p)
    p.add_argument("--eta", type=float, required=True, help="similarity threshold")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("sweep", help="bisect eta to hit a target retention ratio")
    _add_pipeline_args(p)
    p.add_argument("--target-ratio", type=float, required=True, dest="target_ratio")
    p.add_argument("--tol", type=float, default=0.02)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("score", help="data-effectiveness score for (miou, ratio)")
    p.add_argument("--miou", type=float, required=True)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("budget", help="equal-compute epochs for a retention ratio")
    p.add_argument("--base-epochs", type=int, required=True, dest="base_epochs")
    p.add_argument("--ratio", required=True, help="exact rational, e.g. 1/20")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("savings", help="GPU-hour and storage savings arithmetic")
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--fps", type=float, required=True)
    p.add_argument("--width", type=int, default=1920)
    p.add_argument("--height", type=int, default=1080)
    p.add_argument("--bpp", type=int, default=3)
    p.add_argument("--retained", type=float, default=1.0)
    p.set_defaults(func=cmd_savings)

    p = sub.add_parser("synth", help="generate a synthetic dataset from a spec file")
    p.add_argument("--spec", required=True, help="JSON file of SynthSpec fields")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
