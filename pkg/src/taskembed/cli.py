"""Command-line front end for reproducible experiments.

Subcommands: synth, embed, communities, diffusion, sweep, eval,
``features dump``, ``proximity dump``. Every run writes a manifest.json
recording the config snapshot, seeds, input hashes, output paths, and
timing. Exit codes: 0 success, 2 config error, 3 runtime error.

Config files are flat TOML key-value files; keys mirror the synth and
train config fields plus the protocol keys (bundle, k, folds,
eval_folds, neg_ratio, sample_ratio, values, kmeans_seed). CLI flags
override file values. All randomness flows from the single seed.
"""

from __future__ import annotations

import csv
import datetime
import functools
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import click
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import evaluation, neuralnet, trainer
from .cascades import load_cascades, save_cascades
from .experiments import (DiffusionProtocol, community_run, diffusion_run,
                          prepare_inputs)
from .hetgraph import (GraphFormatError, full_adjacency, load_graph,
                       save_bundle, user_adjacency)
from .proximity import global_proximity, normalize, power_stack
from .rawfeat import build_vocab, node_features, post_features, user_features
from .synth import SynthConfig, attach_retweets, generate_graph, simulate_cascades
from .trainer import TrainConfig


class ConfigError(click.ClickException):
    exit_code = 2


class RuntimeFailure(click.ClickException):
    exit_code = 3


SYNTH_KEYS = {f.name for f in fields(SynthConfig)}
TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
RUN_KEYS = {"bundle", "k", "folds", "eval_folds", "neg_ratio",
            "sample_ratio", "values", "kmeans_seed"}
KNOWN_KEYS = SYNTH_KEYS | TRAIN_KEYS | RUN_KEYS


def load_config(path: str | None) -> dict:
    """Parse and validate a flat TOML config; all problems are reported
    at once."""
    if path is None:
        return {}
    try:
        data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    problems = [f"unknown config key {k!r}" for k in data if k not in KNOWN_KEYS]
    problems += _constraint_problems(data)
    if problems:
        raise ConfigError("invalid config:\n  " + "\n  ".join(problems))
    return data


def _constraint_problems(data: dict) -> list[str]:
    out = []
    for cls, keys in ((SynthConfig, SYNTH_KEYS), (TrainConfig, TRAIN_KEYS)):
        subset = {k: v for k, v in data.items() if k in keys}
        try:
            cls.from_mapping(subset)
        except (TypeError, ValueError) as exc:
            out.append(str(exc))
    for key in ("folds", "eval_folds"):
        if key in data and (not isinstance(data[key], int) or data[key] < 1):
            out.append(f"{key} must be a positive integer")
    if "sample_ratio" in data and not 0.0 < float(data["sample_ratio"]) <= 1.0:
        out.append("sample_ratio must lie in (0, 1]")
    if "neg_ratio" in data and float(data["neg_ratio"]) <= 0.0:
        out.append("neg_ratio must be positive")
    if "values" in data and not data["values"]:
        out.append("values must be a non-empty list")
    return out


def guarded(fn):
    """Map expected failures onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except GraphFormatError as exc:
            raise ConfigError(str(exc))
        except Exception as exc:  # noqa: BLE001 - CLI boundary
            raise RuntimeFailure(f"{type(exc).__name__}: {exc}")

    return wrapper


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _hash_inputs(paths) -> dict[str, str]:
    out = {}
    for p in paths:
        p = Path(p)
        if p.is_dir():
            for child in sorted(p.iterdir()):
                if child.is_file():
                    out[str(child)] = _sha256(child)
        elif p.is_file():
            out[str(p)] = _sha256(p)
    return out


def write_manifest(out_dir: Path, command: str, config: dict, seed,
                   inputs, outputs: list[Path], t0: float) -> Path:
    missing = [str(p) for p in outputs if not Path(p).exists()]
    if missing:
        raise RuntimeFailure(f"missing declared outputs: {missing}")
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": _hash_inputs(inputs),
        "outputs": [str(p) for p in outputs],
        "started": datetime.datetime.fromtimestamp(t0).isoformat(),
        "elapsed_s": round(time.time() - t0, 3),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1), encoding="utf-8")
    return path


def _write_matrix_tsv(path: Path, ids, mat: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for nid, row in zip(ids, np.atleast_2d(mat)):
            fh.write(nid + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")


def _read_matrix_tsv(path: Path) -> dict[str, np.ndarray]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        parts = line.split("\t")
        out[parts[0]] = np.array([float(v) for v in parts[1:]])
    return out


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@click.group()
def main():
    """Task-oriented heterogeneous network embedding experiments."""


_config_opt = click.option("--config", "config_path", type=click.Path(),
                           default=None, help="Flat TOML config file.")
_seed_opt = click.option("--seed", type=int, default=None,
                         help="Override the config seed.")
_out_opt = click.option("--out-dir", default="out", show_default=True,
                        help="Output directory.")
_bundle_opt = click.option("--bundle", default=None,
                           help="Graph bundle directory (overrides config).")


def _require_bundle(data: dict, bundle: str | None) -> str:
    bundle = bundle or data.get("bundle")
    if not bundle:
        raise ConfigError("a graph bundle is required (--bundle or config key)")
    return str(bundle)


@main.command("synth")
@_config_opt
@_seed_opt
@_out_opt
@guarded
def cmd_synth(config_path, seed, out_dir):
    """Generate a synthetic bundle: graph, cascades, ground truth."""
    t0 = time.time()
    data = load_config(config_path)
    if seed is not None:
        data["seed"] = seed
    cfg = SynthConfig.from_mapping(data)
    g, truth = generate_graph(cfg)
    cascades = simulate_cascades(g, cfg) if cfg.cascades else ()
    if cascades:
        g = attach_retweets(g, cascades)
    out = _out_dir(out_dir)
    bundle = save_bundle(g, out / "bundle")
    outputs = [bundle / "nodes.tsv", bundle / "links.tsv"]
    if cascades:
        outputs.append(save_cascades(cascades, bundle / "cascades.json"))
    gt_path = bundle / "ground_truth.json"
    gt_path.write_text(json.dumps(
        {u: int(b) for u, b in zip(g.users, truth)}, indent=1),
        encoding="utf-8")
    outputs.append(gt_path)
    write_manifest(out, "synth", data, cfg.seed,
                   [config_path] if config_path else [], outputs, t0)
    click.echo(f"bundle written to {bundle}")


@main.command("embed")
@_config_opt
@_bundle_opt
@_seed_opt
@_out_opt
@guarded
def cmd_embed(config_path, bundle, seed, out_dir):
    """Train the embedding; write checkpoint, embeddings TSV, loss CSV."""
    t0 = time.time()
    data = load_config(config_path)
    if seed is not None:
        data["seed"] = seed
    bundle = _require_bundle(data, bundle)
    cfg = TrainConfig.from_mapping(data)
    g = load_graph(bundle)
    x_raw, stack = prepare_inputs(g, cfg.order)
    cascades = None
    if cfg.task == "diffusion":
        cascades_path = Path(bundle) / "cascades.json"
        if not cascades_path.is_file():
            raise ConfigError(f"diffusion task needs {cascades_path}")
        cascades = load_cascades(cascades_path)
    result = trainer.train(g, x_raw, stack, cascades, cfg)

    out = _out_dir(out_dir)
    ckpt = neuralnet.save_model(result.model, out / "checkpoint.npz", meta={
        "seed": cfg.seed,
        "n_users": g.n_users,
        "train_config": {f.name: getattr(cfg, f.name) for f in fields(cfg)},
    })
    emb_path = out / "embeddings.tsv"
    _write_matrix_tsv(emb_path, g.node_ids, result.z)
    loss_path = out / "losses.csv"
    cols = ["epoch", "l_a"] + [f"l_{m}" for m in range(1, cfg.order + 1)] + \
        ["l_reg", "l_t", "joint"]
    with open(loss_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        writer.writerows([{k: row[k] for k in cols} for row in result.history])
    write_manifest(out, "embed", data, cfg.seed,
                   [bundle] + ([config_path] if config_path else []),
                   [ckpt, emb_path, loss_path], t0)
    click.echo(f"trained {len(result.history) - 1} epochs, "
               f"final joint loss {result.history[-1]['joint']:.6g}")


@main.command("communities")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@_bundle_opt
@click.option("--k", type=int, default=None,
              help="Community count; defaults to the embedding width.")
@_seed_opt
@_out_opt
@guarded
def cmd_communities(checkpoint, bundle, k, seed, out_dir):
    """Cluster user embeddings from a checkpoint; write assignment and
    community metrics."""
    t0 = time.time()
    if bundle is None:
        raise ConfigError("a graph bundle is required (--bundle)")
    model, meta = neuralnet.load_model(checkpoint)
    tc = meta.get("train_config", {})
    g = load_graph(bundle)
    x_raw, stack = prepare_inputs(g, int(tc.get("order", 3)))
    z = neuralnet.encode(model, trainer.scale_minmax(x_raw))
    z_users = z[:g.n_users]
    k = k or model.embed_dim
    km_seed = seed if seed is not None else int(meta.get("seed", 0))
    labels = evaluation.kmeans(z_users, k, seed=km_seed)
    nu = g.n_users
    metrics = evaluation.community_metrics(
        labels, user_adjacency(g), global_proximity(stack)[:nu, :nu])

    out = _out_dir(out_dir)
    assign_path = out / "assignment.json"
    assign_path.write_text(json.dumps(
        {u: int(c) for u, c in zip(g.users, labels)}, indent=1),
        encoding="utf-8")
    metrics_path = out / "metrics.json"
    metrics_path.write_text(json.dumps(
        {"k": k, "seed": km_seed, "metrics": metrics}, indent=1),
        encoding="utf-8")
    write_manifest(out, "communities", {"k": k}, km_seed,
                   [bundle, checkpoint], [assign_path, metrics_path], t0)
    click.echo(json.dumps(metrics, indent=1))


@main.command("diffusion")
@_config_opt
@_bundle_opt
@_seed_opt
@_out_opt
@guarded
def cmd_diffusion(config_path, bundle, seed, out_dir):
    """Run the supervised diffusion protocol; write per-fold AUC / P@100."""
    t0 = time.time()
    data = load_config(config_path)
    if seed is not None:
        data["seed"] = seed
    bundle = _require_bundle(data, bundle)
    data["task"] = "diffusion"
    cfg = TrainConfig.from_mapping(data)
    g = load_graph(bundle)
    cascades_path = Path(bundle) / "cascades.json"
    if not cascades_path.is_file():
        raise ConfigError(f"diffusion protocol needs {cascades_path}")
    cascades = load_cascades(cascades_path)
    protocol = DiffusionProtocol(
        folds=int(data.get("folds", 10)),
        eval_folds=int(data.get("eval_folds", data.get("folds", 10))),
        neg_ratio=float(data.get("neg_ratio", 10.0)),
        sample_ratio=float(data.get("sample_ratio", 1.0)),
        seed=cfg.seed,
    )
    run = diffusion_run(g, cascades, cfg, protocol)

    out = _out_dir(out_dir)
    result_path = out / "diffusion.json"
    result_path.write_text(json.dumps({
        "config": data,
        "folds": run.fold_rows,
        "mean_auc": run.mean("auc"),
        "mean_p_at_100": run.mean("p_at_100"),
    }, indent=1), encoding="utf-8")
    write_manifest(out, "diffusion", data, cfg.seed,
                   [bundle] + ([config_path] if config_path else []),
                   [result_path], t0)
    click.echo(f"mean AUC {run.mean('auc'):.4f}, "
               f"mean P@100 {run.mean('p_at_100'):.4f}")


def _sweep_point(data: dict, bundle: str, axis: str, value: float) -> dict:
    """One sweep evaluation; top-level so worker processes can pickle it."""
    data = dict(data)
    if axis == "k":
        data.update(task="community", embed_dim=int(value))
    elif axis == "c":
        data["c"] = float(value)
    else:
        data.update(task="diffusion", sample_ratio=float(value))
    cfg = TrainConfig.from_mapping(data)
    g = load_graph(bundle)
    if cfg.task == "diffusion":
        cascades = load_cascades(Path(bundle) / "cascades.json")
        protocol = DiffusionProtocol(
            folds=int(data.get("folds", 10)),
            eval_folds=int(data.get("eval_folds", 1)),
            neg_ratio=float(data.get("neg_ratio", 10.0)),
            sample_ratio=float(data.get("sample_ratio", 1.0)),
            seed=cfg.seed,
        )
        run = diffusion_run(g, cascades, cfg, protocol)
        return {axis: value, "auc": run.mean("auc"),
                "p_at_100": run.mean("p_at_100")}
    run = community_run(g, cfg, kmeans_seed=int(data.get("kmeans_seed", cfg.seed)))
    return {axis: value, **run.metrics}


@main.command("sweep")
@_config_opt
@_bundle_opt
@click.option("--axis", type=click.Choice(["k", "c", "ratio"]), required=True)
@click.option("--values", default=None,
              help="Comma-separated sweep values (overrides config).")
@click.option("--jobs", type=int, default=1, show_default=True)
@_seed_opt
@_out_opt
@guarded
def cmd_sweep(config_path, bundle, axis, values, jobs, seed, out_dir):
    """Sweep k, c, or the positive sample ratio; write one CSV row per value."""
    t0 = time.time()
    data = load_config(config_path)
    if seed is not None:
        data["seed"] = seed
    bundle = _require_bundle(data, bundle)
    raw = [v for v in (values.split(",") if values else data.get("values", []))]
    if not raw:
        raise ConfigError("sweep needs a non-empty value list "
                          "(--values or config key 'values')")
    try:
        vals = [float(v) for v in raw]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}")
    if axis == "k" and any(v != int(v) or v < 1 for v in vals):
        raise ConfigError("k values must be positive integers")

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, [data] * len(vals),
                                 [bundle] * len(vals), [axis] * len(vals),
                                 vals))
    else:
        rows = [_sweep_point(data, bundle, axis, v) for v in vals]

    out = _out_dir(out_dir)
    csv_path = out / "sweep.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    write_manifest(out, "sweep", {**data, "axis": axis, "values": vals},
                   data.get("seed"),
                   [bundle] + ([config_path] if config_path else []),
                   [csv_path], t0)
    click.echo(f"sweep written to {csv_path}")


@main.command("eval")
@_bundle_opt
@click.option("--embeddings", required=True, type=click.Path(exists=True),
              help="Embeddings TSV (node id + vector per line).")
@click.option("--k", type=int, required=True)
@click.option("--order", type=int, default=3, show_default=True)
@_seed_opt
@_out_opt
@guarded
def cmd_eval(bundle, embeddings, k, order, seed, out_dir):
    """Score an existing embedding on the community metrics."""
    t0 = time.time()
    if bundle is None:
        raise ConfigError("a graph bundle is required (--bundle)")
    g = load_graph(bundle)
    vectors = _read_matrix_tsv(Path(embeddings))
    missing = [u for u in g.users if u not in vectors]
    if missing:
        raise ConfigError(f"embeddings missing for users {missing[:5]}")
    z_users = np.vstack([vectors[u] for u in g.users])
    stack = power_stack(normalize(full_adjacency(g)), order)
    labels = evaluation.kmeans(z_users, k, seed=seed or 0)
    nu = g.n_users
    metrics = evaluation.community_metrics(
        labels, user_adjacency(g), global_proximity(stack)[:nu, :nu])
    out = _out_dir(out_dir)
    eval_path = out / "eval.json"
    eval_path.write_text(json.dumps({
        "config": {"k": k, "order": order, "seed": seed or 0,
                   "embeddings": str(embeddings)},
        "metrics": metrics,
    }, indent=1), encoding="utf-8")
    write_manifest(out, "eval", {"k": k, "order": order}, seed or 0,
                   [bundle, embeddings], [eval_path], t0)
    click.echo(json.dumps(metrics, indent=1))


@main.group("features")
def features_group():
    """Feature-matrix utilities."""


@features_group.command("dump")
@_bundle_opt
@_out_opt
@guarded
def cmd_features_dump(bundle, out_dir):
    """Write raw user/post feature matrices as TSV plus a schema sidecar."""
    t0 = time.time()
    if bundle is None:
        raise ConfigError("a graph bundle is required (--bundle)")
    g = load_graph(bundle)
    schema = build_vocab(g)
    out = _out_dir(out_dir)
    upath, ppath = out / "user_features.tsv", out / "post_features.tsv"
    _write_matrix_tsv(upath, g.users, user_features(g, schema))
    _write_matrix_tsv(ppath, g.posts, post_features(g, schema))
    spath = out / "feature_schema.json"
    spath.write_text(json.dumps(schema.to_json(), indent=1), encoding="utf-8")
    write_manifest(out, "features dump", {}, None, [bundle],
                   [upath, ppath, spath], t0)
    click.echo(f"features written to {out}")


@main.group("proximity")
def proximity_group():
    """Proximity-matrix utilities."""


@proximity_group.command("dump")
@_bundle_opt
@click.option("--order", type=int, default=1, show_default=True,
              help="Which power of the normalized matrix to write.")
@_out_opt
@guarded
def cmd_proximity_dump(bundle, order, out_dir):
    """Write the order-m proximity matrix as TSV."""
    t0 = time.time()
    if bundle is None:
        raise ConfigError("a graph bundle is required (--bundle)")
    if order < 1:
        raise ConfigError("order must be >= 1")
    g = load_graph(bundle)
    stack = power_stack(normalize(full_adjacency(g)), order)
    out = _out_dir(out_dir)
    mpath = out / f"proximity_{order}.tsv"
    _write_matrix_tsv(mpath, g.node_ids, stack.power(order))
    write_manifest(out, "proximity dump", {"order": order}, None, [bundle],
                   [mpath], t0)
    click.echo(f"matrix written to {mpath}")


if __name__ == "__main__":
    main()
