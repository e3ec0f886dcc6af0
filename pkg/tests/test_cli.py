import os
import subprocess
import sys

import numpy as np
import pytest
import yaml

from cncood.cli import main


def run_cli(*args):
    return main(list(args))


def _tree_bytes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in sorted(files):
            path = os.path.join(dirpath, name)
            rel = os.path.relpath(path, root)
            with open(path, "rb") as fh:
                out[rel] = fh.read()
    return out


FAST = [
    "dataset.n_per_class=40",
    "train.epochs=40",
    "train.hidden=[8,8]",
    "eval.n_test_per_class=30",
    "eval.n_ood=60",
]


def test_train_eval_polytope_end_to_end(tmp_path):
    out = str(tmp_path / "run")
    base = [f"--set={s}" for s in FAST] + ["--set=seed=3", f"--out={out}"]
    assert run_cli("train", *base) == 0
    assert run_cli("eval", *base) == 0
    assert run_cli("polytope", *base) == 0
    for name in (
        "model.ckpt",
        "loss_history.csv",
        "train_points.csv",
        "train.config.yaml",
        "eval_report.csv",
        "roc_curve.svg",
        "eval.config.yaml",
        "complex.svg",
        "regions.csv",
        "polytope_summary.csv",
        "polytope.config.yaml",
    ):
        assert os.path.exists(os.path.join(out, name)), name


def test_byte_identical_reruns(tmp_path):
    trees = []
    for sub in ("a", "b"):
        out = str(tmp_path / sub)
        base = [f"--set={s}" for s in FAST] + ["--set=seed=7", f"--out={out}"]
        assert run_cli("train", *base) == 0
        assert run_cli("eval", *base) == 0
        assert run_cli("polytope", *base) == 0
        tree = _tree_bytes(out)
        # the resolved configs embed out_dir; neutralize before comparing
        for name in list(tree):
            if name.endswith(".config.yaml"):
                cfg = yaml.safe_load(tree[name])
                cfg["out_dir"] = "X"
                tree[name] = yaml.safe_dump(cfg, sort_keys=True).encode()
        trees.append(tree)
    assert trees[0].keys() == trees[1].keys()
    for name in trees[0]:
        assert trees[0][name] == trees[1][name], f"{name} differs between runs"


def test_generate_points(tmp_path):
    out = str(tmp_path / "gen")
    code = run_cli(
        "generate",
        "--set=dataset.n_per_class=30",
        "--set=generate.count=25",
        f"--out={out}",
    )
    assert code == 0
    lines = open(os.path.join(out, "ood_points.csv")).read().splitlines()
    assert lines[0] == "x1,x2,label"
    assert len(lines) == 26
    assert all(line.endswith(",3") for line in lines[1:])  # K+1 = 3 for moons


def test_generate_images(tmp_path):
    # tiny synthetic CIFAR-style file: 4 records
    rng = np.random.default_rng(0)
    records = []
    for lab in (0, 1, 0, 1):
        records.append(bytes([lab]) + rng.integers(0, 256, 3072, dtype=np.uint8).tobytes())
    data_path = tmp_path / "batch.bin"
    data_path.write_bytes(b"".join(records))

    out = str(tmp_path / "gen")
    code = run_cli(
        "generate",
        "--set=dataset.kind=cifar10",
        f"--set=dataset.path={data_path}",
        "--set=generate.count=4",
        "--set=gen.severity_pool=[1]",
        f"--out={out}",
    )
    assert code == 0
    manifest = open(os.path.join(out, "manifest.txt")).read().splitlines()
    assert len(manifest) == 4
    assert all(line.endswith(",11") for line in manifest)  # K+1 = 11
    names = [line.split(",")[0] for line in manifest]
    for name in names:
        assert os.path.exists(os.path.join(out, name))
        assert os.path.exists(os.path.join(out, name.replace(".cnct", ".ppm")))


def test_diversity_and_fig2(tmp_path):
    out = str(tmp_path / "div")
    args = [
        "--set=dataset.kind=gaussian_clusters",
        "--set=dataset.n_per_class=30",
        "--set=diversity.n_samples=60",
        "--set=diversity.ref_epochs=40",
        "--set=train.hidden=[8,8]",
        f"--out={out}",
    ]
    assert run_cli("diversity", *args) == 0
    lines = open(os.path.join(out, "diversity.csv")).read().splitlines()
    assert lines[0] == "variant,diversity,entropy"
    assert len(lines) == 5  # four variants

    out2 = str(tmp_path / "fig2")
    assert (
        run_cli(
            "fig2",
            "--set=dataset.kind=gaussian_clusters",
            "--set=dataset.n_per_class=30",
            "--set=fig2.n_points=50",
            f"--out={out2}",
        )
        == 0
    )
    svg = open(os.path.join(out2, "fig2.svg")).read()
    assert svg.count("<circle") > 100


def test_config_error_exit_code(tmp_path):
    assert run_cli("train", "--set=gen.variant=bogus", f"--out={tmp_path}/x") == 2
    assert run_cli("train", "--set=nonexistent.key=1", f"--out={tmp_path}/y") == 2
    assert run_cli("train", "--config=/nonexistent/file.yaml") == 2


def test_runtime_error_exit_code(tmp_path):
    # eval without a checkpoint
    assert run_cli("eval", f"--out={tmp_path}/no_ckpt") == 1


def test_config_file_and_override_precedence(tmp_path):
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text("dataset:\n  n_per_class: 10\nseed: 5\n")
    out = str(tmp_path / "run")
    code = run_cli(
        "generate",
        f"--config={cfg_path}",
        "--set=dataset.n_per_class=15",
        "--set=generate.count=7",
        f"--out={out}",
    )
    assert code == 0
    saved = yaml.safe_load(open(os.path.join(out, "generate.config.yaml")))
    assert saved["dataset"]["n_per_class"] == 15  # override wins
    assert saved["seed"] == 5  # file value survives


def test_cli_entrypoint_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "cncood.cli", "train", "--set=train.lr=-1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "config error" in proc.stderr


def test_image_train_eval_with_cache(tmp_path):
    rng = np.random.default_rng(4)
    records = []
    for i in range(24):
        records.append(
            bytes([i % 2]) + rng.integers(0, 256, 3072, dtype=np.uint8).tobytes()
        )
    data_path = tmp_path / "batch.bin"
    data_path.write_bytes(b"".join(records))

    cache = str(tmp_path / "cache")
    common = [
        "--set=dataset.kind=cifar10",
        f"--set=dataset.path={data_path}",
        "--set=gen.severity_pool=[1]",
    ]
    assert (
        run_cli(
            "generate", *common, "--set=generate.count=10",
            "--set=generate.preview_ppm=false", f"--out={cache}",
        )
        == 0
    )

    out = str(tmp_path / "img_run")
    train_args = common + [
        "--set=train.epochs=3",
        "--set=train.hidden=[8]",
        "--set=train.batch_size=8",
        f"--out={out}",
    ]
    assert run_cli("train", *train_args) == 0
    eval_args = train_args + [
        "--set=eval.ood_source=cache",
        f"--set=eval.cache_dir={cache}",
        "--set=eval.n_test_per_class=6",
    ]
    assert run_cli("eval", *eval_args) == 0
    report = open(os.path.join(out, "eval_report.csv")).read()
    assert report.splitlines()[0].startswith("delta,")
