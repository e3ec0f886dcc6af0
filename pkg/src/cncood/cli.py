"""Experiment orchestration CLI.

Subcommands: generate, train, eval, polytope, diversity, fig2.  Exit
codes: 0 success, 2 configuration error, 1 runtime error.  All outputs
are deterministic for a fixed seed (no timestamps), and each command
writes its fully-resolved config next to its outputs.

Seed derivation (children of the experiment seed): 0 training data,
1 ID test data, 2 OOD test ring, 3 generation, 4 diversity sampling,
5 fig2 sampling, 10 model init, 11 reference-model init.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import polytope as poly
from .config import ConfigError, dump_config, load_config
from .datasets import (
    LabeledImageSet,
    Point2Dataset,
    gaussian_clusters_2d,
    load_cifar10_binary,
    two_moons,
    uniform_ring,
)
from .metrics import evaluate_scores, roc_points
from .mlp import (
    TrainConfig,
    forward,
    init_model,
    load_checkpoint,
    save_checkpoint,
    train,
    training_arrays,
)
from .pipeline import GenConfig, cnc_datagen, cnc_datagen_2d, write_image_cache
from .rng import RngStream
from .svg import OOD_COLOR, SvgCanvas, ViewMap, class_color
from .tensor import export_ppm, load_raw_tensor


def _gen_config(cfg: dict) -> GenConfig:
    g = cfg["gen"]
    return GenConfig(
        variant=g["variant"],
        lambda_range=(g["lambda_low"], g["lambda_high"]),
        op_pool=tuple(g["op_pool"]),
        severity_pool=tuple(g["severity_pool"]),
        ood_ratio=g["ood_ratio"],
        seed=cfg["seed"],
    )


def _train_config(cfg: dict) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        alpha=t["alpha"],
        lr=t["lr"],
        momentum=t["momentum"],
        epochs=t["epochs"],
        batch_size=t["batch_size"],
        weight_decay=t["weight_decay"],
        seed=cfg["seed"],
    )


def _dataset(cfg: dict, stream: int):
    ds = cfg["dataset"]
    rng = RngStream(cfg["seed"]).child(stream)
    if ds["kind"] == "two_moons":
        return two_moons(ds["n_per_class"], ds["noise"], rng)
    if ds["kind"] == "gaussian_clusters":
        centers = np.asarray(ds["centers"], dtype=np.float64)
        return gaussian_clusters_2d(
            len(centers), ds["n_per_class"], centers, ds["sigma"], rng
        )
    data = load_cifar10_binary(ds["path"])
    if ds["limit"]:
        n = min(ds["limit"], len(data))
        data = LabeledImageSet(data.images[:n], data.labels[:n], data.class_count)
    return data


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [f"{v:.12g}" if isinstance(v, float) else v for v in row]
            )


def _points_csv(path, points, labels):
    rows = [
        (float(p[0]), float(p[1]), int(lab)) for p, lab in zip(points, labels)
    ]
    _write_csv(path, ("x1", "x2", "label"), rows)


def _out(cfg, name):
    os.makedirs(cfg["out_dir"], exist_ok=True)
    return os.path.join(cfg["out_dir"], name)


def _checkpoint_path(cfg, section):
    return cfg[section]["checkpoint"] or _out(cfg, "model.ckpt")


def cmd_generate(cfg: dict) -> None:
    data = _dataset(cfg, 0)
    gen_cfg = _gen_config(cfg)
    count = cfg["generate"]["count"]
    ratio_cfg = GenConfig(
        variant=gen_cfg.variant,
        lambda_range=gen_cfg.lambda_range,
        op_pool=gen_cfg.op_pool,
        severity_pool=gen_cfg.severity_pool,
        ood_ratio=count / len(data),
        seed=gen_cfg.seed,
    )
    rng = RngStream(cfg["seed"]).child(3)
    if isinstance(data, Point2Dataset):
        gen = cnc_datagen_2d(data, ratio_cfg, rng)
        _points_csv(_out(cfg, "ood_points.csv"), gen.points, gen.labels)
    else:
        gen = cnc_datagen(data, ratio_cfg, rng)
        write_image_cache(cfg["out_dir"], gen, prefix="ood")
        if cfg["generate"]["preview_ppm"]:
            for i, img in enumerate(gen.images):
                export_ppm(img, _out(cfg, f"ood_{i:06d}.ppm"))
    dump_config(cfg, _out(cfg, "generate.config.yaml"))


def cmd_train(cfg: dict) -> None:
    data = _dataset(cfg, 0)
    vanilla = cfg["train"]["vanilla"]
    gen_cfg = None if vanilla else _gen_config(cfg)
    train_cfg = _train_config(cfg)
    x, y = training_arrays(data)
    k = int(y.max())
    dims = (x.shape[1], *cfg["train"]["hidden"], k if vanilla else k + 1)
    model = init_model(dims, RngStream(cfg["seed"]).child(10))
    trained, history = train(model, data, gen_cfg, train_cfg)
    save_checkpoint(trained, _out(cfg, "model.ckpt"))
    _write_csv(
        _out(cfg, "loss_history.csv"),
        ("epoch", "mean_loss"),
        [(e, float(loss)) for e, loss in enumerate(history)],
    )
    if isinstance(data, Point2Dataset):
        _points_csv(_out(cfg, "train_points.csv"), data.points, data.labels)
    dump_config(cfg, _out(cfg, "train.config.yaml"))


def _load_cache_images(cache_dir):
    manifest = os.path.join(cache_dir, "manifest.txt")
    images = []
    with open(manifest) as fh:
        for line in fh:
            name, _, _lab = line.strip().partition(",")
            if name:
                images.append(load_raw_tensor(os.path.join(cache_dir, name)))
    return images


def cmd_eval(cfg: dict) -> None:
    model = load_checkpoint(_checkpoint_path(cfg, "eval"))
    ev = cfg["eval"]
    test_cfg = dict(cfg, dataset=dict(cfg["dataset"]))
    if test_cfg["dataset"]["kind"] != "cifar10":
        test_cfg["dataset"]["n_per_class"] = ev["n_test_per_class"]
    id_data = _dataset(test_cfg, 1)
    id_x, id_y = training_arrays(id_data)

    if ev["ood_source"] == "ring":
        if not isinstance(id_data, Point2Dataset):
            raise ValueError("ring OOD source needs a 2-D dataset")
        centroid = id_x.mean(axis=0)
        spread = float(np.sqrt(np.mean(np.sum((id_x - centroid) ** 2, axis=1))))
        ood_x = uniform_ring(
            ev["n_ood"],
            centroid,
            ev["ring_radius_scale"] * spread,
            RngStream(cfg["seed"]).child(2),
        )
    else:
        images = _load_cache_images(ev["cache_dir"])
        ood_x = np.stack([img.flatten() for img in images])

    id_logits, id_probs, _ = forward(model, id_x)
    ood_logits, ood_probs, _ = forward(model, ood_x)
    report = evaluate_scores(
        id_probs, id_y, ood_probs, id_logits, ood_logits, bins=ev["bins"]
    )
    report.to_csv(_out(cfg, "eval_report.csv"))
    _roc_svg(
        roc_points(id_probs[:, -1], ood_probs[:, -1]), _out(cfg, "roc_curve.svg")
    )
    dump_config(cfg, _out(cfg, "eval.config.yaml"))


def _roc_svg(points, path, size=480):
    canvas = SvgCanvas(size, size)
    margin = 40
    span = size - 2 * margin
    canvas.rect(margin, margin, span, span, fill="white", stroke="black")
    canvas.polyline(
        [(margin, size - margin), (size - margin, margin)],
        stroke="#cccccc",
        stroke_width=1.0,
    )
    pts = [
        (margin + fpr * span, size - margin - tpr * span) for fpr, tpr in points
    ]
    canvas.polyline(pts, stroke="#1f77b4", stroke_width=2.0)
    canvas.text(size / 2 - 12, size - 8, "FPR")
    canvas.text(8, size / 2, "TPR")
    canvas.write(path)


def cmd_polytope(cfg: dict) -> None:
    model = load_checkpoint(_checkpoint_path(cfg, "polytope"))
    data = _dataset(cfg, 0)
    if not isinstance(data, Point2Dataset):
        raise ValueError("polytope analysis needs a 2-D dataset")
    k = data.class_count
    domain = poly.domain_from_points(data.points, cfg["polytope"]["domain_factor"])
    regions = poly.enumerate_regions(model, domain)
    cells = poly.decision_cells(regions)
    variant = cfg["polytope"]["metric_variant"]
    area = poly.id_empty_polytope_area(regions, cells, data.points, k, variant)

    poly.export_complex_svg(
        regions, cells, data.points, data.labels, k, _out(cfg, "complex.svg")
    )
    poly.export_regions_csv(regions, cells, data.points, k, _out(cfg, "regions.csv"))
    _write_csv(
        _out(cfg, "polytope_summary.csv"),
        ("id_empty_polytope_area", "metric_variant", "region_count", "cell_count"),
        [(float(area), variant, len(regions), len(cells))],
    )
    dump_config(cfg, _out(cfg, "polytope.config.yaml"))


def cmd_diversity(cfg: dict) -> None:
    """Diversity/entropy of generated sets per variant, measured
    through a K-class reference classifier."""
    from .metrics import diversity as diversity_metric
    from .metrics import entropy as entropy_metric

    data = _dataset(cfg, 0)
    if not isinstance(data, Point2Dataset):
        raise ValueError("diversity comparison is desk-scale (2-D datasets)")
    x, y = training_arrays(data)
    k = int(y.max())
    ref_cfg = TrainConfig(
        alpha=0.0,
        lr=cfg["train"]["lr"],
        momentum=cfg["train"]["momentum"],
        epochs=cfg["diversity"]["ref_epochs"],
        batch_size=cfg["train"]["batch_size"],
        seed=cfg["seed"],
    )
    ref = init_model(
        (x.shape[1], *cfg["train"]["hidden"], k), RngStream(cfg["seed"]).child(11)
    )
    ref, _ = train(ref, data, None, ref_cfg)

    n = cfg["diversity"]["n_samples"]
    rows = []
    for variant in cfg["diversity"]["variants"]:
        gen_cfg = GenConfig(
            variant=variant,
            lambda_range=(cfg["gen"]["lambda_low"], cfg["gen"]["lambda_high"]),
            op_pool=tuple(cfg["gen"]["op_pool"]),
            severity_pool=tuple(cfg["gen"]["severity_pool"]),
            ood_ratio=n / len(data),
            seed=cfg["seed"],
        )
        gen = cnc_datagen_2d(data, gen_cfg, RngStream(cfg["seed"]).child(4))
        logits, probs, _ = forward(ref, gen.points)
        div = diversity_metric(logits)
        ent = float(np.mean([entropy_metric(p) for p in probs]))
        rows.append((variant, float(div), float(ent)))
    _write_csv(
        _out(cfg, "diversity.csv"), ("variant", "diversity", "entropy"), rows
    )
    dump_config(cfg, _out(cfg, "diversity.config.yaml"))


def cmd_fig2(cfg: dict) -> None:
    """Three-panel point-cloud figure: ID data, PBCC-only, CnC."""
    data = _dataset(cfg, 0)
    if not isinstance(data, Point2Dataset):
        raise ValueError("fig2 needs a 2-D dataset")
    n = cfg["fig2"]["n_points"]
    panels = [("(a) ID classes", None)]
    for variant in ("pbcc_only", "cnc"):
        gen_cfg = GenConfig(
            variant=variant,
            lambda_range=(cfg["gen"]["lambda_low"], cfg["gen"]["lambda_high"]),
            op_pool=tuple(cfg["gen"]["op_pool"]),
            severity_pool=tuple(cfg["gen"]["severity_pool"]),
            ood_ratio=n / len(data),
            seed=cfg["seed"],
        )
        gen = cnc_datagen_2d(data, gen_cfg, RngStream(cfg["seed"]).child(5))
        title = "(b) PBCC" if variant == "pbcc_only" else "(c) CnC"
        panels.append((title, gen.points))

    panel_size = 320
    canvas = SvgCanvas(3 * panel_size, panel_size + 24)
    all_pts = [data.points] + [p for _, p in panels if p is not None]
    stacked = np.vstack(all_pts)
    domain = (
        stacked[:, 0].min(),
        stacked[:, 1].min(),
        stacked[:, 0].max(),
        stacked[:, 1].max(),
    )
    for i, (title, ood_pts) in enumerate(panels):
        view = ViewMap(domain, panel_size, margin=16)
        offset = i * panel_size
        canvas.rect(offset + 2, 2, panel_size - 4, panel_size - 4, stroke="black")
        for p, lab in zip(data.points, data.labels):
            (px, py), = view(p[None, :])
            canvas.circle(offset + px, py, 1.4, fill=class_color(int(lab)))
        if ood_pts is not None:
            for p in ood_pts:
                (px, py), = view(p[None, :])
                canvas.circle(offset + px, py, 1.4, fill=OOD_COLOR)
        canvas.text(offset + 12, panel_size + 16, title)
    canvas.write(_out(cfg, "fig2.svg"))
    dump_config(cfg, _out(cfg, "fig2.config.yaml"))


_COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "polytope": cmd_polytope,
    "diversity": cmd_diversity,
    "fig2": cmd_fig2,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cncood",
        description="Synthetic-OOD generation, (K+1) training, and "
        "polyhedral analysis experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config value (dotted keys, YAML-parsed values)",
        )
        p.add_argument("--out", default=None, help="output directory override")
    args = parser.parse_args(argv)

    try:
        overrides = list(args.overrides)
        if args.out is not None:
            overrides.append(f"out_dir={args.out}")
        cfg = load_config(args.config, overrides)
        _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
