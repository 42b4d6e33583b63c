import math
from pathlib import Path

import pytest

import tiltedbb

ROOT = Path(__file__).resolve().parents[2]
SEEDS = str(ROOT / "data" / "seeds.csv")


def test_pmf_sums_to_one_and_matches_moments():
    n, mu_t, mu_b, phi, theta = 12, 0.6, 0.3, 4.0, 0.35
    probs = [tiltedbb.tbb_pmf(y, n, mu_t, mu_b, phi, theta) for y in range(n + 1)]
    assert math.isclose(sum(probs), 1.0, abs_tol=1e-12)
    mean = sum(y * p for y, p in enumerate(probs))
    var = sum((y - mean) ** 2 * p for y, p in enumerate(probs))
    assert math.isclose(mean, tiltedbb.tbb_mean(n, mu_t, mu_b, phi, theta), rel_tol=1e-10)
    assert math.isclose(var, tiltedbb.tbb_variance(n, mu_t, mu_b, phi, theta), rel_tol=1e-10)


def test_reductions():
    for y in range(9):
        bb = tiltedbb.bb_log_pmf(y, 8, 0.4, 3.0)
        assert math.isclose(tiltedbb.tbb_log_pmf(y, 8, 0.55, 0.4, 3.0, 0.0), bb, abs_tol=1e-13)
        brb = tiltedbb.brb_log_pmf(y, 8, 0.4, 3.0, 0.2)
        assert math.isclose(tiltedbb.tbb_log_pmf(y, 8, 0.5, 0.4, 3.0, 0.2), brb, abs_tol=1e-13)


def test_mixture_mean_and_bounds():
    assert math.isclose(tiltedbb.tilted_beta_mean(0.6, 0.2, 5.0, 0.25), 0.25 * 0.6 + 0.75 * 0.2)
    with pytest.raises(ValueError):
        tiltedbb.tilted_pdf(0.5, 0.9)


def test_sampling_is_seeded():
    a = tiltedbb.sample_tbb(200, 10, 0.6, 0.3, 5.0, 0.4, seed=3)
    b = tiltedbb.sample_tbb(200, 10, 0.6, 0.3, 5.0, 0.4, seed=3)
    assert a == b
    assert all(0 <= y <= 10 for y in a)


def test_self_check_passes():
    report = tiltedbb.self_check()
    assert report["all_passed"]
    assert report["grid_size"] >= 36


def test_fit_and_diagnose(tmp_path):
    out = tmp_path / "fit"
    report = tiltedbb.fit(data=SEEDS, out=str(out), family=["BB"], seed=4, chains=2,
                          iterations=3000, burn_in=500, thin=5)
    assert report["model"].startswith("BB")
    assert report["retained_per_chain"] == 500
    assert len(report["residuals"]) == 21
    for p in report["parameters"]:
        assert p["q025"] <= p["median"] <= p["q975"]
    for name in ["summary.txt", "summary.csv", "chains_1.csv", "diagnostics.json", "residuals.csv"]:
        assert (out / name).exists()
    again = tiltedbb.diagnose(str(out))
    assert math.isclose(again["dic"]["dic"], report["dic"]["dic"], rel_tol=1e-12)


def test_compare_ranks_by_dic(tmp_path):
    rows = tiltedbb.compare(data=SEEDS, out=str(tmp_path), family=["Bin", "BB"], seed=2,
                            chains=1, iterations=3000, burn_in=500, thin=5)
    assert [r["failed"] for r in rows] == [False, False]
    assert rows[0]["dic"]["dic"] <= rows[1]["dic"]["dic"]
    assert (tmp_path / "comparison.csv").exists()


def test_simulate(tmp_path):
    target = tmp_path / "sim.csv"
    cols = tiltedbb.simulate(str(ROOT / "configs" / "simulate_bb.json"), out=str(target), seed=1)
    assert target.exists()
    assert len(cols["y"]) == len(cols["n"]) > 0
    assert all(0 <= y <= n for y, n in zip(cols["y"], cols["n"]))
    assert cols == tiltedbb.simulate(str(ROOT / "configs" / "simulate_bb.json"), seed=1)


def test_bad_input_raises(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,n\n5,3\n")
    with pytest.raises(ValueError, match="exceeds"):
        tiltedbb.fit(data=str(bad), out=str(tmp_path / "o"), family=["Bin"], iterations=2000,
                     burn_in=100, thin=1, chains=1)
