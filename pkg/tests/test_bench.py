import math

import numpy as np
import pytest

from penbar.bench import problems as P
from penbar.bench.profiles import data_profile, pairwise_profile, read_csv, write_data_csv, write_pairwise_csv
from penbar.bench.suites import SUITES, load_records, run_suite, suite_tasks
from penbar.outer import KKT, OuterConfig, RunRecord, run


def fake(name, status, evals):
    return RunRecord(config={}, iterations=[], instance={"name": name},
                     exit={"status": status, "grad_evals": evals})


def test_pca_determinism_and_start():
    a, x0a = P.gen_nonneg_pca(10, 1.0, 0.5, 7)
    b, x0b = P.gen_nonneg_pca(10, 1.0, 0.5, 7)
    assert np.array_equal(a.data["Z"], b.data["Z"]) and np.array_equal(x0a, x0b)
    for seed in range(5):
        p, x0 = P.gen_nonneg_pca(12, 2.0, 0.3, seed)
        assert np.linalg.norm(x0) == pytest.approx(1.0) and np.all(x0 >= 0)
        z = p.data["z"]
        assert np.count_nonzero(z) == math.ceil(0.3 * 12) and np.all(z >= 0)
        assert np.allclose(p.data["Z"], p.data["Z"].T)
    with pytest.raises(ValueError):
        P.gen_nonneg_pca(10, 1.0, 1.5, 0)


def test_pca_solve_small():
    p, x0 = P.gen_nonneg_pca(10, 1.0, 0.5, 3)
    rec = run(p, OuterConfig(eps_p=1e-3, eps_d=1e-3), x0)
    assert rec.status == KKT
    assert np.max(np.maximum(-np.asarray(rec.exit["x"]), 0)) <= 1e-3


def test_degenerate_generator():
    p, x0 = P.gen_degenerate(11)
    q, y0 = P.gen_degenerate(11)
    assert np.array_equal(x0, y0)
    xs = np.array([P.gen_degenerate(s)[1] for s in range(400)])
    assert 25 < xs.std() < 35
    assert p.cons(np.zeros(2))[0] == 0.0


def test_eq_qp_generator():
    for m in range(1, 6):
        nat, spl, x0 = P.gen_eq_qp(10 * m, m, 2)
        d = nat.data
        assert nat.n == 10 * m and nat.m_eq == m and spl.m_eq == 0 and spl.n_rows == 2 * m
        assert np.all(d["lo"] < d["x_hat"]) and np.all(d["x_hat"] < d["hi"])
        assert np.allclose(nat.cons(d["x_hat"]), 0)
        assert np.allclose(d["Q"], d["Q"].T)
        assert np.all(d["A"].any(axis=1))
    a = P.gen_eq_qp(20, 2, 9)
    b = P.gen_eq_qp(20, 2, 9)
    assert np.array_equal(a[0].data["Q"], b[0].data["Q"]) and np.array_equal(a[2], b[2])


def test_matrix_completion_generator():
    p, x0 = P.gen_matrix_completion(seed=4)
    q, _ = P.gen_matrix_completion(seed=4)
    Y, mask = p.data["Y"], p.data["mask"]
    assert np.array_equal(Y, q.data["Y"])
    assert set(np.unique(Y)) <= {1.0, 2.0, 3.0, 4.0, 5.0}
    lo, hi = p.lower.reshape(Y.shape), p.upper.reshape(Y.shape)
    np.testing.assert_array_equal(lo[mask], np.maximum(1, Y[mask] - 1))
    np.testing.assert_array_equal(hi[mask], np.minimum(5, Y[mask] + 1))
    assert np.all(lo[~mask] == 1) and np.all(hi[~mask] == 5)
    assert p.n == 3 * 30 and np.isfinite(p.g(x0))


def test_ratings_loader(tmp_path):
    f = tmp_path / "r.txt"
    f.write_text("10 5 4\n10 7 2\n11 5 5\n")
    p, x0 = P.gen_matrix_completion(nu=None, na=2, ratings=str(f))
    assert p.data["mask"].sum() == 3 and p.data["Y"].shape == (2, 2)
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\n")
    with pytest.raises(ValueError):
        P.load_ratings(str(bad))


def test_rosenbrock_generator():
    for s in range(20):
        p, x0 = P.gen_rosenbrock("inequality", s)
        assert p.cons(x0)[0] < 0 and np.all(np.abs(x0) <= 5)
        q, w0 = P.gen_rosenbrock("equality", s)
        assert w0[2] <= 0 and np.isfinite(q.g(w0))
    assert p.cons(P.ROSEN_C)[0] == pytest.approx(0.25)
    with pytest.raises(ValueError):
        P.gen_rosenbrock("other")


def test_data_profile_examples():
    t, f = data_profile([3.0, 1.0, 2.0])
    np.testing.assert_allclose(t, [1, 2, 3])
    np.testing.assert_allclose(f, [1 / 3, 2 / 3, 1])
    t, f = data_profile([fake("a", "kkt", 5), fake("b", "max_outer", 1), fake("c", "kkt", 9)])
    assert f[-1] == pytest.approx(2 / 3)
    assert np.all(np.diff(f) >= 0) and np.all((f >= 0) & (f <= 1))


def test_pairwise_profile():
    recs = [fake(f"i{k}", "kkt", 10 + k) for k in range(4)]
    tau, f = pairwise_profile(recs, recs)
    assert list(tau) == [1.0] and f[0] == 1.0
    other = [fake("i0", "kkt", 5), fake("i1", "kkt", 22), fake("i2", "time_limit", 1), fake("i3", "kkt", 13)]
    tau, f = pairwise_profile(recs, other)
    # ratios 2, 0.5, 0 (only the second failed), 1
    np.testing.assert_allclose(tau, [0, 0.5, 1, 2])
    np.testing.assert_allclose(f, [0.25, 0.5, 0.75, 1.0])
    tau, f = pairwise_profile(other, recs)
    assert f[-1] == 0.75  # the failed run of the first solver never counts
    with pytest.raises(ValueError):
        pairwise_profile(recs, recs[:3])


def test_csv_roundtrip(tmp_path):
    t, f = data_profile([0.1, 1 / 3, 7.0, 7.0])
    path = tmp_path / "d.csv"
    write_data_csv(path, t, f)
    assert path.read_text().splitlines()[0] == "t,fraction"
    rows = read_csv(path)
    assert [r["t"] for r in rows] == list(t) and [r["fraction"] for r in rows] == list(f)
    p2 = tmp_path / "p.csv"
    write_pairwise_csv(p2, {"native": (t, f), "split": (t[:1], f[:1])})
    rows = read_csv(p2)
    assert p2.read_text().splitlines()[0] == "tau,fraction,solver"
    assert [r["solver"] for r in rows] == ["native"] * 3 + ["split"]
    assert rows[1]["tau"] == t[1]


def test_suite_tasks():
    assert set(SUITES) == {"pca_small", "eq_qp", "degenerate", "rosenbrock", "completion_small"}
    pca = suite_tasks("pca_small")
    assert len(pca) == 2 * 20 * 2 * 2 * 2
    eq = suite_tasks("eq_qp")
    assert len(eq) == 5 * 10 * 2
    assert {t["variant"]["formulation"] for t in eq} == {"native", "split"}
    keys = [(t["family"], str(t["params"]), t["seed"], str(t["variant"])) for t in pca + eq]
    assert len(keys) == len(set(keys))
    with pytest.raises(ValueError):
        suite_tasks("nope")


def test_run_suite_manifest(tmp_path):
    tasks = suite_tasks("degenerate", n_seeds=3, eps=(1e-5,))
    entries = run_suite(tasks, str(tmp_path / "a"))
    assert len(entries) == 3 and all(e["status"] == "kkt" for e in entries)
    recs = load_records(str(tmp_path / "a"))
    assert [r.instance["name"] for r in recs] == [e["instance"] for e in entries]
    run_suite(tasks, str(tmp_path / "b"), workers=2)
    for e in entries:
        ra = RunRecord.from_json((tmp_path / "a" / e["file"]).read_text())
        rb = RunRecord.from_json((tmp_path / "b" / e["file"]).read_text())
        for r in (ra, rb):
            r.exit.pop("wall_ms")
            for it in r.iterations:
                it.pop("wall_ms")
        assert ra.to_json() == rb.to_json()
