"""Composition of patch mixing and corruptions into synthetic OOD batches.

Variants:
  cnc              patch mix, then one sampled (op, severity) corruption
  r_cnc            corrupt both sources independently, then patch mix
  pbcc_only        patch mix only
  corruption_only  corrupt a single in-distribution sample

Every emitted sample is labeled K+1 and drawn from its own child stream
(index = sample position), so generation is order-independent and
parallelizable while staying bit-deterministic for a fixed seed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import rng as rnglib
from .corruptions import (
    IMAGE_OPS,
    POINT_OPS,
    CorruptionSpec,
    apply_corruption,
    corrupt_point_2d,
)
from .datasets import LabeledImageSet, Point2Dataset
from .pbcc import apply_pbcc, class_indices, label_pairs, pbcc_2d, sample_box
from .rng import RngStream
from .tensor import save_raw_tensor

VARIANTS = ("cnc", "r_cnc", "pbcc_only", "corruption_only")
_PBCC_VARIANTS = ("cnc", "r_cnc", "pbcc_only")
_CORR_VARIANTS = ("cnc", "r_cnc", "corruption_only")


@dataclass(frozen=True)
class GenConfig:
    variant: str = "cnc"
    lambda_range: tuple = (0.0, 1.0)
    op_pool: tuple = ()  # empty -> full registry for the modality
    severity_pool: tuple = (1, 2, 3, 4, 5)
    ood_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        lo, hi = self.lambda_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError(f"lambda_range must satisfy 0 <= lo <= hi <= 1")
        if self.ood_ratio <= 0:
            raise ValueError("ood_ratio must be > 0")
        object.__setattr__(self, "lambda_range", (float(lo), float(hi)))
        object.__setattr__(self, "op_pool", tuple(self.op_pool))
        sevs = tuple(int(s) for s in self.severity_pool)
        if self.variant in _CORR_VARIANTS:
            if not sevs or not set(sevs) <= {1, 2, 3, 4, 5}:
                raise ValueError("severity_pool must be a nonempty subset of 1..5")
        object.__setattr__(self, "severity_pool", sevs)

    def resolved_ops(self, modality: str) -> tuple:
        registry = IMAGE_OPS if modality == "image" else POINT_OPS
        pool = self.op_pool or registry
        bad = set(pool) - set(registry)
        if bad:
            raise ValueError(f"ops {sorted(bad)} not in the {modality} registry")
        return tuple(pool)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def cnc_datagen(
    batch: LabeledImageSet, cfg: GenConfig, rng: RngStream
) -> LabeledImageSet:
    """Synthetic OOD images from an ID batch; all labels are K+1."""
    n_out = _round_half_up(cfg.ood_ratio * len(batch))
    pairs = label_pairs(batch.labels) if cfg.variant in _PBCC_VARIANTS else None
    if pairs is not None and not pairs:
        raise ValueError(f"variant {cfg.variant!r} needs at least two classes")
    by_class = class_indices(batch.labels)
    ops = cfg.resolved_ops("image") if cfg.variant in _CORR_VARIANTS else ()
    lo, hi = cfg.lambda_range
    reject = batch.class_count + 1

    def corrupted(img, r, slot):
        op = ops[r.integer(len(ops))]
        sev = cfg.severity_pool[r.integer(len(cfg.severity_pool))]
        spec = CorruptionSpec(op, sev, r.child(1000 + slot))
        return apply_corruption(img, spec)

    out = []
    for i in range(n_out):
        r = rng.child(i)
        if cfg.variant == "corruption_only":
            img = batch.images[r.integer(len(batch))]
            out.append(corrupted(img, r, 0))
            continue
        ya, yb = pairs[i % len(pairs)]
        img_a = batch.images[by_class[ya][r.integer(len(by_class[ya]))]]
        img_b = batch.images[by_class[yb][r.integer(len(by_class[yb]))]]
        if cfg.variant == "r_cnc":
            img_a = corrupted(img_a, r, 0)
            img_b = corrupted(img_b, r, 1)
        lam = r.uniform(lo, hi)
        box = sample_box(img_a.width, img_a.height, lam, r)
        mixed = apply_pbcc(img_a, img_b, box)
        if cfg.variant == "cnc":
            mixed = corrupted(mixed, r, 0)
        out.append(mixed)
    labels = np.full(n_out, reject, dtype=np.int64)
    return LabeledImageSet(tuple(out), labels, class_count=batch.class_count)


def _pick_rows(raw_col, groups, pts_by_group):
    """Row choices: one index per sample from its group's member list."""
    picked = np.empty(len(groups), dtype=np.int64)
    for g in np.unique(groups):
        mask = groups == g
        members = pts_by_group[g]
        picked[mask] = members[rnglib.integer_from_raw(raw_col[mask], len(members))]
    return picked


def _corrupt_points(pts, op_idx, sev_idx, corr_seeds, ops, sevs, tables, centroid):
    """Vectorized point corruption at fixed child-stream positions."""
    out = pts.copy()
    z0, z1 = rnglib.normal_pair_from_raws(
        rnglib.raw_at(corr_seeds, 0), rnglib.raw_at(corr_seeds, 1)
    )
    for k, op in enumerate(ops):
        mask = op_idx == k
        if not mask.any():
            continue
        for s_i, sev in enumerate(sevs):
            m = mask & (sev_idx == s_i)
            if not m.any():
                continue
            if op == "jitter":
                sigma = tables["jitter"][sev - 1]
                out[m, 0] = pts[m, 0] + sigma * z0[m]
                out[m, 1] = pts[m, 1] + sigma * z1[m]
            else:  # scale_warp
                factor = tables["scale_warp"][sev - 1]
                out[m] = centroid + factor * (pts[m] - centroid)
    return out


def cnc_datagen_2d(
    batch: Point2Dataset, cfg: GenConfig, rng: RngStream, tables=None
) -> Point2Dataset:
    """Synthetic OOD points from an ID point batch; all labels are K+1.

    Fully vectorized: sample i reads fixed positions of child stream i,
    and corruption randomness comes from grandchild streams, which keeps
    the output independent of batching or worker count.
    """
    from .corruptions import load_severity_tables

    tables = load_severity_tables() if tables is None else tables
    pts = batch.points
    labels = batch.labels
    n_out = _round_half_up(cfg.ood_ratio * len(batch))
    reject = batch.class_count + 1
    centroid = pts.mean(axis=0)
    sevs = tuple(cfg.severity_pool)
    lo, hi = cfg.lambda_range

    idx = np.arange(n_out, dtype=np.int64)
    seeds = rnglib.child_seed_array(rng.seed, idx)

    if cfg.variant == "corruption_only":
        ops = cfg.resolved_ops("point")
        row = rnglib.integer_from_raw(rnglib.raw_at(seeds, 0), len(batch))
        op_idx = rnglib.integer_from_raw(rnglib.raw_at(seeds, 1), len(ops))
        sev_idx = rnglib.integer_from_raw(rnglib.raw_at(seeds, 2), len(sevs))
        corr_seeds = rnglib.child_seed_array_from(seeds, 1000)
        out = _corrupt_points(
            pts[row], op_idx, sev_idx, corr_seeds, ops, sevs, tables, centroid
        )
        return Point2Dataset(out, np.full(n_out, reject))

    pairs = label_pairs(labels)
    if not pairs:
        raise ValueError(f"variant {cfg.variant!r} needs at least two classes")
    by_class = class_indices(labels)
    pair_arr = np.asarray(pairs, dtype=np.int64)
    which_pair = idx % len(pairs)
    group_a = pair_arr[which_pair, 0]
    group_b = pair_arr[which_pair, 1]

    row_a = _pick_rows(rnglib.raw_at(seeds, 0), group_a, by_class)
    row_b = _pick_rows(rnglib.raw_at(seeds, 1), group_b, by_class)
    p_a = pts[row_a]
    p_b = pts[row_b]

    if cfg.variant == "r_cnc":
        ops = cfg.resolved_ops("point")
        op_a = rnglib.integer_from_raw(rnglib.raw_at(seeds, 2), len(ops))
        sev_a = rnglib.integer_from_raw(rnglib.raw_at(seeds, 3), len(sevs))
        op_b = rnglib.integer_from_raw(rnglib.raw_at(seeds, 4), len(ops))
        sev_b = rnglib.integer_from_raw(rnglib.raw_at(seeds, 5), len(sevs))
        p_a = _corrupt_points(
            p_a, op_a, sev_a, rnglib.child_seed_array_from(seeds, 1000),
            ops, sevs, tables, centroid,
        )
        p_b = _corrupt_points(
            p_b, op_b, sev_b, rnglib.child_seed_array_from(seeds, 1001),
            ops, sevs, tables, centroid,
        )
        lam = lo + (hi - lo) * rnglib.uniform_from_raw(rnglib.raw_at(seeds, 6))
    else:
        lam = lo + (hi - lo) * rnglib.uniform_from_raw(rnglib.raw_at(seeds, 2))

    mixed = lam[:, None] * p_a + (1.0 - lam[:, None]) * p_b

    if cfg.variant == "cnc":
        ops = cfg.resolved_ops("point")
        op_idx = rnglib.integer_from_raw(rnglib.raw_at(seeds, 3), len(ops))
        sev_idx = rnglib.integer_from_raw(rnglib.raw_at(seeds, 4), len(sevs))
        mixed = _corrupt_points(
            mixed, op_idx, sev_idx, rnglib.child_seed_array_from(seeds, 1000),
            ops, sevs, tables, centroid,
        )

    return Point2Dataset(mixed, np.full(n_out, reject))


def write_image_cache(out_dir, dataset: LabeledImageSet, prefix="sample") -> str:
    """Offline cache: one raw-tensor file per sample plus a manifest."""
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    for i, (img, lab) in enumerate(zip(dataset.images, dataset.labels)):
        name = f"{prefix}_{i:06d}.cnct"
        save_raw_tensor(img, os.path.join(out_dir, name))
        lines.append(f"{name},{int(lab)}")
    manifest = os.path.join(out_dir, "manifest.txt")
    with open(manifest, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return manifest
