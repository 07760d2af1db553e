#!/usr/bin/env python3
"""End-to-end exercise of the hmmfuse CLI: extract -> train -> combine ->
predict -> evaluate on the bundled demo reports, plus exit-code checks."""

import csv
import json

import os
import shutil
import subprocess
import sys
import tempfile

CLI = sys.argv[1]
REPORTS = sys.argv[2]


def run(*args, expect=0):
    proc = subprocess.run([CLI] + list(args), capture_output=True, text=True)
    if proc.returncode != expect:
        sys.stderr.write("command: %s\nstdout:\n%s\nstderr:\n%s\n"
                         % (" ".join(args), proc.stdout, proc.stderr))
        raise AssertionError("exit %d, expected %d" % (proc.returncode, expect))
    return proc


def main():
    work = tempfile.mkdtemp(prefix="hmmfuse_cli_")
    traces = os.path.join(work, "traces.jsonl")
    artifacts = os.path.join(work, "artifacts")
    reports_dir = os.path.join(work, "reports")
    predictions = os.path.join(work, "predictions.jsonl")

    # extract
    run("extract", "--in", REPORTS, "--out", traces, "--dialect", "eclipse")
    with open(traces) as fh:
        lines = [json.loads(line) for line in fh]
    assert len(lines) == 72, len(lines)  # 4 demo reports carry no trace
    assert all(line["frames"] for line in lines)
    assert all(line["dialect"] == "eclipse" for line in lines)

    # train (tiny grid keeps the test fast)
    run("--seed", "7", "train", "--traces", traces, "--field", "component",
        "--dir", artifacts, "--states", "2,3", "--restarts", "1", "--max-iters", "15")
    for name in ("R-N2", "R-N3", "NR-N2", "NR-N3"):
        path = os.path.join(artifacts, "models", "component", name + ".json")
        assert os.path.exists(path), path
        with open(path) as fh:
            model = json.load(fh)
        assert model["kind"] == "hmm"
        assert model["format_version"] == 1
        assert abs(sum(model["pi"]) - 1.0) < 1e-9
        for row in model["a"]:
            assert abs(sum(row) - 1.0) < 1e-9
        for row in model["b"]:
            assert abs(sum(row) - 1.0) < 1e-9
            assert min(row) > 0  # emission floor applied
    assert os.path.exists(os.path.join(artifacts, "splits", "component.json"))

    # combine
    run("combine", "--traces", traces, "--field", "component", "--dir", artifacts,
        "--method", "wpibc", "--tau", "0.9", "--d", "10")
    ensemble_path = os.path.join(artifacts, "ensembles", "component.json")
    with open(ensemble_path) as fh:
        ensemble = json.load(fh)
    assert ensemble["method"] == "wpibc"
    assert ensemble["bases"], "no bases selected"
    assert all(b["orientation"] in (1, -1) for b in ensemble["bases"])
    assert 0 <= ensemble["operating_rule"] < len(ensemble["rules"])
    for rule in ensemble["rules"]:
        assert rule["steps"], "empty rule"
        assert 0.0 <= rule["fpr"] <= 1.0 and 0.0 <= rule["tpr"] <= 1.0

    # predict on raw reports (extraction inside) and on trace files
    run("predict", "--ensemble", ensemble_path, "--dir", artifacts,
        "--in", REPORTS, "--out", predictions, "--dialect", "eclipse")
    with open(predictions) as fh:
        preds = [json.loads(line) for line in fh]
    assert len(preds) == 76
    missing = [p for p in preds if p["decision"] is None]
    assert len(missing) == 4
    assert all(p["reason"] == "no-stack-trace" for p in missing)
    decided = [p for p in preds if p["decision"] is not None]
    assert all(isinstance(p["decision"], bool) for p in decided)
    assert all(len(p["scores"]) == len(ensemble["bases"]) for p in decided)

    run("predict", "--ensemble", ensemble_path, "--dir", artifacts,
        "--in", traces, "--out", predictions)

    # evaluate
    run("evaluate", "--traces", traces, "--dir", artifacts, "--out", reports_dir,
        "--mtfpr", "0.25")
    with open(os.path.join(reports_dir, "summary.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 and rows[0]["field"] == "component"
    assert rows[0]["method"] == "wpibc"
    p, r, f = (float(rows[0][k]) for k in ("precision", "recall", "f_measure"))
    if p + r > 0:
        assert abs(f - 2 * p * r / (p + r)) < 1e-3  # consistent at 4-decimal rounding
    assert os.path.exists(os.path.join(reports_dir, "report.json"))
    roc_path = os.path.join(reports_dir, "roc_component.csv")
    with open(roc_path) as fh:
        header = fh.readline().strip()
        assert header == "fpr,tpr,threshold"
        points = [line.strip().split(",") for line in fh if line.strip()]
    fprs = [float(x[0]) for x in points]
    tprs = [float(x[1]) for x in points]
    assert fprs == sorted(fprs) and tprs == sorted(tprs)
    assert (fprs[0], tprs[0]) == (0.0, 0.0) and (fprs[-1], tprs[-1]) == (1.0, 1.0)

    # determinism: retraining with the same seed reproduces the model files
    artifacts2 = os.path.join(work, "artifacts2")
    run("--seed", "7", "train", "--traces", traces, "--field", "component",
        "--dir", artifacts2, "--states", "2,3", "--restarts", "1", "--max-iters", "15")
    for name in ("R-N2", "NR-N3"):
        a = open(os.path.join(artifacts, "models", "component", name + ".json")).read()
        b = open(os.path.join(artifacts2, "models", "component", name + ".json")).read()
        assert a == b, "model files differ across reruns"

    # exit codes: 1 usage, 2 data error, 3 io error
    run("no-such-command", expect=1)
    run("train", "--traces", traces, expect=1)  # missing required flags
    bad = os.path.join(work, "bad.jsonl")
    with open(bad, "w") as fh:
        fh.write("{not json}\n")
    run("extract", "--in", bad, "--out", os.path.join(work, "x.jsonl"),
        "--dialect", "eclipse", expect=2)
    run("extract", "--in", REPORTS, "--out", os.path.join(work, "x.jsonl"),
        "--dialect", "klingon", expect=2)
    run("extract", "--in", os.path.join(work, "nope.jsonl"),
        "--out", os.path.join(work, "x.jsonl"), "--dialect", "eclipse", expect=3)
    run("evaluate", "--traces", traces, "--dir", artifacts,
        "--out", "/proc/forbidden", expect=3)

    shutil.rmtree(work)
    print("cli ok")


if __name__ == "__main__":
    main()
