"""Smoke tests for the poiphnn extension module.

Runs standalone (``python3 test_smoke.py [path-to-cli]``) or under pytest.
The optional argument / POIP_CLI environment variable points at the command
line tool; when present the script also cross-checks it against the module.
"""

import itertools
import json
import math
import os
import subprocess
import sys
import tempfile

import poiphnn as pp


def brute_force_best(inst, n):
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=n):
        x = list(bits)
        if not pp.is_feasible(inst, x):
            continue
        obj = pp.objective_value(inst, x)
        if best is None or obj > best:
            best = obj
    return best


def test_generate_io_roundtrip():
    inst = pp.gen_qmkp(n_items=6, n_dims=2, seed=3)
    assert inst.name == "qmkp_6x2_s3"
    assert inst.n_vars == 6
    assert inst.n_constraints == 2
    assert inst.sense == "max"
    assert inst.bks is None
    doc = json.loads(pp.instance_to_json(inst))
    assert doc["name"] == inst.name
    assert len(doc["variables"]) == 6
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "a.poip.json")
        pp.write_instance(inst, path)
        back = pp.read_instance(path)
        assert back.name == inst.name
        assert pp.instance_to_json(back) == pp.instance_to_json(inst)


def test_graph_stats_and_memory():
    inst = pp.gen_qmkp(n_items=6, n_dims=2, seed=3)
    st = pp.graph_stats(inst)
    assert st["n"] == 6
    assert st["m"] == 2
    assert st["max_degree"] == 2
    assert st["estimated_bytes"] == pp.memory_estimate(st["n"], st["m"], st["s"], st["n_e"])


def test_evaluation():
    inst = pp.gen_qmkp(n_items=6, n_dims=2, seed=3)
    zeros = [0.0] * 6
    assert pp.is_feasible(inst, zeros)
    assert pp.objective_value(inst, zeros) == 0.0
    assert not pp.is_feasible(inst, [2.0] * 6)  # violates the binary bounds


def test_exact_solve_matches_brute_force():
    inst = pp.gen_qmkp(n_items=6, n_dims=2, seed=3)
    res = pp.solve_exact(inst)
    assert res["status"] == "optimal"
    assert len(res["solution"]) == 6
    assert pp.is_feasible(inst, res["solution"])
    assert res["objective"] == brute_force_best(inst, 6)
    capped = pp.solve_exact(inst, node_limit=1)
    assert capped["status"] == "unknown_timeout"


def test_heuristic_solve():
    inst = pp.gen_qmkp(n_items=6, n_dims=2, seed=3)
    exact = pp.solve_exact(inst)
    res = pp.solve(inst, seed=1)
    assert res["status"] == "feasible"
    assert pp.is_feasible(inst, res["solution"])
    assert res["objective"] <= exact["objective"] + 1e-9
    norefine = pp.solve(inst, refine=False)
    assert norefine["refine_rounds"] == 0
    assert len(norefine["repair_alphas"]) >= 1


def test_model_train_predict_checkpoint():
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for seed in (1, 2):
            inst = pp.gen_qmkp(n_items=6, n_dims=2, seed=seed)
            path = os.path.join(tmp, f"{inst.name}.poip.json")
            pp.write_instance(inst, path)
            paths.append(path)
        labeled = pp.generate_labels(paths, tmp)
        assert labeled["labeled"] == paths
        assert labeled["excluded"] == []

        model = pp.Model.init(seed=1, embed_dim=8, hidden_dim=16, hyper_iters=2, vc_iters=1)
        curve = pp.train_on_dir(model, tmp, epochs=2, batch_size=2, lr=1e-3)
        assert len(curve) == 2
        assert all(math.isfinite(v) for v in curve)
        assert model.step == 2

        inst = pp.read_instance(paths[0])
        pred = model.predict(inst)
        assert len(pred["prob"]) == 6
        assert all(0.0 <= p <= 1.0 for p in pred["prob"])
        assert set(pred["rounded"]) <= {0, 1}
        assert all(u <= 0.5 + 1e-12 for u in pred["uncertainty"])

        ckpt = os.path.join(tmp, "model.json")
        model.save(ckpt)
        again = pp.Model.load(ckpt)
        assert again.step == model.step
        assert again.predict(inst)["prob"] == pred["prob"]

        guided = pp.solve(inst, model, seed=2)
        assert guided["status"] == "feasible"


def test_cflptc_reformulation():
    inst = pp.gen_cflptc(n_customers=3, n_facilities=2, explicit_e=True, seed=1)
    assert inst.name == "cflptc_3x2_s1_e"
    quad = pp.cflptc_quadratic_reformulation(inst)
    assert quad.n_vars == inst.n_vars + 2 * 2  # two extra powers per facility
    assert quad.name.endswith("_quad")


def test_metrics():
    assert pp.gap_pct(100.0, 100.0) == 0.0
    assert abs(pp.gap_pct(95.0, 100.0) - 5.0) < 1e-9
    assert abs(pp.shifted_geometric_mean([1.0, 3.0]) - (2.0 * math.sqrt(2.0) - 1.0)) < 1e-12
    try:
        pp.shifted_geometric_mean([])
    except pp.PoipError:
        pass
    else:
        raise AssertionError("empty sgm should raise")


def test_errors_are_mapped():
    try:
        pp.read_instance("/nonexistent/file.poip.json")
    except pp.PoipError:
        pass
    else:
        raise AssertionError("expected PoipError")
    try:
        pp.shifted_geometric_mean([-2.0], 1.0)
    except pp.PoipError:
        pass
    else:
        raise AssertionError("expected PoipError")


def test_cli_agrees_with_module():
    cli = sys.argv[1] if len(sys.argv) > 1 else os.environ.get("POIP_CLI", "")
    if not cli or not os.path.exists(cli):
        print("  (cli binary not provided, skipping)")
        return
    with tempfile.TemporaryDirectory() as tmp:
        out = subprocess.run(
            [cli, "generate", "--family", "qmkp", "--count", "1", "--seed", "3",
             "--n-items", "6", "--n-dims", "2", "--out", tmp],
            capture_output=True, text=True)
        assert out.returncode == 0, out.stderr
        path = os.path.join(tmp, "qmkp_6x2_s3.poip.json")
        inst = pp.read_instance(path)
        assert pp.instance_to_json(inst) == pp.instance_to_json(
            pp.gen_qmkp(n_items=6, n_dims=2, seed=3))
        solved = subprocess.run([cli, "solve", "--instance", path, "--exact"],
                                capture_output=True, text=True)
        assert solved.returncode == 0, solved.stderr
        report = json.loads(solved.stdout)
        assert report["objective"] == pp.solve_exact(inst)["objective"]


def main():
    tests = [(name, fn) for name, fn in sorted(globals().items())
             if name.startswith("test_") and callable(fn)]
    failures = 0
    for name, fn in tests:
        try:
            fn()
            print(f"PASS {name}")
        except Exception as exc:  # noqa: BLE001
            failures += 1
            print(f"FAIL {name}: {exc!r}")
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
