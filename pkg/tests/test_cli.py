"""End-to-end CLI runs in a scratch workspace; determinism and exit codes."""
import json
import os

import pytest

from ipcamo.cli import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main

TRAIN_CFG = {
    "epochs": 2,
    "latent_dim": 8,
    "hidden_dim": 8,
    "mlp_hidden": 8,
    "max_pi": 8,
    "lr": 3e-3,
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """dataset -> train -> camouflage, shared by the downstream command tests."""
    root = tmp_path_factory.mktemp("cli")
    ds = root / "dataset"
    cfg = root / "dataset.json"
    cfg.write_text(json.dumps({
        "out": str(ds),
        "synthetic": {"n_graphs": 12, "max_ands": 4, "pi_pool": 4},
    }))
    assert main(["dataset", "--config", str(cfg), "--seed", "1"]) == EXIT_OK

    tr = root / "train"
    tcfg = root / "train.json"
    tcfg.write_text(json.dumps({"out": str(tr), "dataset": str(ds), **TRAIN_CFG}))
    assert main(["train", "--config", str(tcfg), "--seed", "0"]) == EXIT_OK

    manifest = json.loads((ds / "manifest.json").read_text())
    train_ids = [r["id"] for r in manifest["graphs"] if r["split"] == "train"]
    f_path = ds / "graphs" / f"g{train_ids[0]:05d}.json"
    a_path = ds / "graphs" / f"g{train_ids[1]:05d}.json"

    camo = root / "camo"
    ccfg = root / "camo.json"
    ccfg.write_text(json.dumps({
        "out": str(camo),
        "checkpoint": str(tr / "checkpoint.json"),
        "functional": str(f_path),
        "appearance": str(a_path),
    }))
    assert main(["camouflage", "--config", str(ccfg), "--seed", "2",
                 "--p", "0.3,0.7", "--th", "0.05"]) == EXIT_OK
    return {"root": root, "dataset": ds, "train": tr, "camo": camo,
            "camo_cfg": ccfg, "functional": f_path, "appearance": a_path}


def test_dataset_artifacts(workspace):
    ds = workspace["dataset"]
    manifest = json.loads((ds / "manifest.json").read_text())
    counts = manifest["counts"]
    assert counts["total"] == 12
    assert counts["train"] + counts["test"] == 12 and counts["test"] >= 1
    for row in manifest["graphs"]:
        assert (ds / "graphs" / f"g{row['id']:05d}.json").exists()


def test_train_artifacts(workspace):
    tr = workspace["train"]
    assert (tr / "checkpoint.json").exists()
    hist = (tr / "history.csv").read_text().splitlines()
    assert hist[0].startswith("epoch,")
    assert len(hist) >= 2


def test_camouflage_grid_and_determinism(workspace, tmp_path):
    camo = workspace["camo"]
    names = sorted(p.name for p in camo.glob("netlist_*.json"))
    assert names == ["netlist_p0.3_th0.05.json", "netlist_p0.7_th0.05.json"]
    manifest = json.loads((camo / "manifest.json").read_text())
    assert manifest["grid_cells"] == 2

    # identical config + seed into a fresh directory: byte-identical artifacts
    rerun = tmp_path / "rerun"
    assert main(["camouflage", "--config", str(workspace["camo_cfg"]),
                 "--out", str(rerun), "--seed", "2",
                 "--p", "0.3,0.7", "--th", "0.05"]) == EXIT_OK
    for name in names:
        assert (rerun / name).read_bytes() == (camo / name).read_bytes()


def test_verify_pass_and_fail(workspace, tmp_path):
    ok_out = tmp_path / "verify_ok"
    assert main(["verify", "--out", str(ok_out), "--config",
                 str(_write_cfg(tmp_path / "v1.json", {
                     "functional": str(workspace["functional"]),
                     "netlists": str(workspace["camo"]),
                 }))]) == EXIT_OK
    report = json.loads((ok_out / "verify.json").read_text())
    assert report["failures"] == 0
    assert all(r["equivalent"] for r in report["results"])

    bad_out = tmp_path / "verify_bad"
    code = main(["verify", "--out", str(bad_out), "--config",
                 str(_write_cfg(tmp_path / "v2.json", {
                     "functional": str(workspace["appearance"]),  # wrong target
                     "netlists": str(workspace["camo"]),
                 }))])
    assert code == EXIT_VIOLATION
    assert json.loads((bad_out / "verify.json").read_text())["failures"] >= 1


def _write_cfg(path, obj):
    path.write_text(json.dumps(obj))
    return path


def test_attack_report(workspace, tmp_path):
    out = tmp_path / "attack"
    cfg = _write_cfg(tmp_path / "a.json",
                     {"out": str(out), "netlists": str(workspace["camo"])})
    assert main(["attack", "--config", str(cfg), "--budget", "0.05"]) == EXIT_OK
    lines = (out / "attack.csv").read_text().splitlines()
    assert lines[0] == "netlist,p,th,key_bits,result,iterations,conflicts"
    assert len(lines) == 3
    for line in lines[1:]:
        assert line.split(",")[4] in ("solved", "budget-exceeded")


def test_eval_report(workspace, tmp_path):
    out = tmp_path / "eval"
    cfg = _write_cfg(tmp_path / "e.json", {
        "out": str(out),
        "dataset": str(workspace["dataset"]),
        "checkpoint": str(workspace["train"] / "checkpoint.json"),
        "netlists": str(workspace["camo"]),
        "bins": 5,
    })
    assert main(["eval", "--config", str(cfg), "--budget", "5"]) == EXIT_OK
    assert (out / "pairs.csv").exists() and (out / "bins.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["valid_pairs"] + summary["discarded"] >= 1
    assert (out / "gnn" / "labels.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert "gnn/nodes.csv" in manifest["artifacts"]


def test_manifest_checksums_match(workspace):
    import hashlib
    camo = workspace["camo"]
    manifest = json.loads((camo / "manifest.json").read_text())
    for rel, digest in manifest["artifacts"].items():
        data = (camo / rel).read_bytes()
        assert hashlib.sha256(data).hexdigest() == digest


def test_usage_errors(tmp_path):
    # missing required config keys
    assert main(["train", "--out", str(tmp_path / "x")]) == EXIT_USAGE
    assert main(["dataset", "--out", str(tmp_path / "y"),
                 "--config", str(_write_cfg(tmp_path / "c.json", {}))]) == EXIT_USAGE
    # unreadable config file
    assert main(["dataset", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "z")]) == EXIT_USAGE
    # bad grid values
    cfg = _write_cfg(tmp_path / "g.json", {
        "out": str(tmp_path / "w"), "checkpoint": "x", "functional": "y",
        "appearance": "z"})
    assert main(["camouflage", "--config", str(cfg), "--th", "1.5"]) == EXIT_USAGE


def test_console_script_entry():
    import subprocess
    res = subprocess.run(["ipcamo", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for name in ("dataset", "train", "camouflage", "verify", "attack", "eval"):
        assert name in res.stdout
