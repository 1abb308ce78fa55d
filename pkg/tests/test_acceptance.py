"""Acceptance criteria, one test each, tolerances as specified."""
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from wavecompose.analysis import interference_summary, interference_rows
from wavecompose.cli import main
from wavecompose.field import gaussian_field, inner, l2_norm_sq, make_rng
from wavecompose.guidance import GuidanceConfig, band_update_energies
from wavecompose.latent_map import ToyCodec, img2latent_weights, jacobian_band_analysis
from wavecompose.sandbox import band_errors, composite_run, energy_trajectory, make_concepts, multlfg_run
from wavecompose.schedule import linear_schedule
from wavecompose.wavelet import BANDS, SubbandSet, band_project, dwt2, idwt2

FAMILY_CYCLE = ("blob", "checker", "stripes", "bars")
SEEDS = range(10)
_WEIGHT_LOG = []  # (label, weights (T,4,N), k) from every multlfg acceptance run


def corpus(seed=0, count=100):
    rng = make_rng(seed)
    shapes = [(2 * int(rng.integers(1, 33)), 2 * int(rng.integers(1, 33)), int(rng.integers(1, 4)))
              for _ in range(count)]
    shapes[0] = (64, 64, 3)
    return [gaussian_field(s, rng) for s in shapes]


def logged_multlfg(label, concepts, cfg, sched, **kw):
    tr = multlfg_run(concepts, cfg, sched, **kw)
    _WEIGHT_LOG.append((label, tr.weights, len(concepts) if kw.get("uniform") else cfg.top_k))
    return tr


def test_01_perfect_reconstruction(report):
    xs = corpus()
    t0 = time.perf_counter()
    err = max(float(np.max(np.abs(idwt2(dwt2(x)) - x))) for x in xs)
    dt = time.perf_counter() - t0
    assert report(1, err < 1e-12 and dt < 1.0, f"perfect reconstruction max abs err {err:.2e}, {dt:.3f}s (< 1e-12, < 1 s)")


def test_02_parseval(report):
    err = max(abs(dwt2(x).energies().sum() - l2_norm_sq(x)) / l2_norm_sq(x) for x in corpus())
    assert report(2, err < 1e-12, f"energy identity max rel err {err:.2e} (< 1e-12)")


def test_03_linearity(report):
    rng = make_rng(3)
    worst = 0.0
    for _ in range(100):
        shape = (2 * int(rng.integers(1, 33)), 2 * int(rng.integers(1, 33)), int(rng.integers(1, 4)))
        x, y = gaussian_field(shape, rng), gaussian_field(shape, rng)
        a, b = rng.normal(size=2) * 5
        lhs = np.concatenate([v.ravel() for v in dwt2(a * x + b * y)])
        rhs = np.concatenate([(a * u + b * v).ravel() for u, v in zip(dwt2(x), dwt2(y))])
        worst = max(worst, float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs)))
    assert report(3, worst < 1e-12, f"dwt linearity max rel err {worst:.2e} (< 1e-12)")


def test_04_orthogonality(report):
    worst = 0.0
    for x in corpus(4):
        p = [band_project(x, b) for b in BANDS]
        for i in range(4):
            for j in range(i + 1, 4):
                worst = max(worst, abs(inner(p[i], p[j])) / l2_norm_sq(x))
    assert report(4, worst < 1e-10, f"band projection max |<P_l x, P_l' x>|/||x||^2 {worst:.2e} (< 1e-10)")


def test_05_uniform_equals_composite(report):
    sched = linear_schedule(50)
    worst = 0.0
    for n in (2, 3, 5):
        specs = [(FAMILY_CYCLE[i % 4], 100 + i, 1.0) for i in range(n)]
        # spread concepts under strong guidance grow without bound, so they run at gamma 1
        for spread, gamma in ((0.0, 7.0), (0.3, 1.0)):
            cs = make_concepts(specs, (32, 32, 1), band_std=(spread,) * 4)
            a = logged_multlfg(f"c5 n={n}", cs, GuidanceConfig.with_scale(gamma, n), sched,
                               rng=make_rng(n), uniform=True)
            b = composite_run(cs, gamma, sched, rng=make_rng(n))
            worst = max(worst, float(np.max(np.abs(a.final_image - b.final_image))))
    assert report(5, worst < 1e-9, f"uniform multlfg vs composite, N in 2,3,5, T=50: max abs diff {worst:.2e} (< 1e-9)")


def test_06_single_concept_exactness(report):
    worst = 0.0
    for T in (10, 50):
        for family in FAMILY_CYCLE:
            (m,) = make_concepts([(family, T, 1.0)], (32, 32, 1))
            tr = logged_multlfg(f"c6 T={T}", [m], GuidanceConfig.with_scale(1.0, 1), linear_schedule(T), rng=make_rng(T))
            worst = max(worst, float(np.linalg.norm(tr.final_image - m.target) / np.linalg.norm(m.target)))
    assert report(6, worst < 1e-6, f"single-concept recovery, T in 10,50: max rel L2 err {worst:.2e} (< 1e-6)")


def test_07_variance_decomposition(report):
    rng = make_rng(7)
    worst = 0.0
    for _ in range(50):
        u = dwt2(gaussian_field((32, 32, 1), rng))
        c = SubbandSet(*(ub + gaussian_field(ub.shape, rng) for ub in u))
        cfg = GuidanceConfig(band_scales=tuple(rng.uniform(0.5, 10, 4)), top_k=1, num_concepts=1)
        total, per = band_update_energies(u, c, cfg)
        worst = max(worst, abs(total - per.sum()) / total)
    assert report(7, worst < 1e-10, f"update energy vs band sum max rel err {worst:.2e} (< 1e-10)")


def band_disjoint_errors(seed):
    """Owned-band relative errors (LL of the blob, HH of the checker) for both methods."""
    sched = linear_schedule(50)
    cs = make_concepts([("blob", seed, 1.0), ("checker", seed + 1000, 1.0)], (32, 32, 1))
    ml = logged_multlfg(f"c8 seed={seed}", cs, GuidanceConfig.with_scale(1.0, 2, top_k=2), sched, rng=make_rng(seed))
    co = composite_run(cs, 1.0, sched, rng=make_rng(seed))

    def owned(img):
        return band_errors(img, cs[0].target)[0][1], band_errors(img, cs[1].target)[3][1]
    return owned(ml.final_image), owned(co.final_image)


# frozen oracle values from the first run (LL error, HH error); composite is 0.5, 0.5 on every seed
FROZEN_MULTLFG = {0: (0, 0), 1: (1, 1), 2: (0, 1), 3: (0, 1), 4: (0, 0),
                  5: (0, 1), 6: (0, 0), 7: (1, 0), 8: (1, 0), 9: (0, 0)}


def test_08_band_disjoint_improvement(report):
    passed = []
    ml_all, co_all = [], []
    for seed in SEEDS:
        ml, co = band_disjoint_errors(seed)
        ml_all.append(ml)
        co_all.append(co)
        passed.append(all(m <= 0.5 * c for m, c in zip(ml, co)))
    ml_all, co_all = np.array(ml_all), np.array(co_all)
    ok = all(passed)
    report(8, ok, f"band-disjoint LL+HH, 10 seeds, T=50: multlfg mean owned err {ml_all.mean(axis=0).round(3).tolist()} "
                  f"vs composite {co_all.mean(axis=0).round(3).tolist()}; {sum(passed)}/10 seeds at <= 0.5x composite "
                  f"(known failure, see README)")
    assert ok, f"per-seed multlfg errors {ml_all.round(3).tolist()}"


def test_08_regression_values():
    for seed in SEEDS:
        ml, co = band_disjoint_errors(seed)
        assert np.allclose(co, (0.5, 0.5), atol=1e-9)
        assert np.allclose(ml, FROZEN_MULTLFG[seed], atol=1e-3), (seed, ml)


def test_09_finite_difference_fidelity(report):
    x = gaussian_field((8, 8, 1), make_rng(9))
    codec = ToyCodec("downsample", x.shape)
    # exact block-average operator, assembled independently
    exact = np.kron(np.kron(np.eye(4), np.ones((1, 2))), np.kron(np.eye(4), np.ones((1, 2)))) * 0.25
    rep = jacobian_band_analysis(x, codec, 1e-5)
    jac_err = float(np.max(np.abs(rep.jacobian - exact)) / np.max(np.abs(exact)))
    from wavecompose.latent_map import band_probe, dwt_matrix
    w_img = np.array([1.0, 0.5, 0.25, 2.0])
    gains_exact = np.array([
        [np.linalg.norm(blk) for blk in np.split(dwt_matrix(codec.latent_shape) @ exact @ band_probe(x.shape, b).ravel(), 4)]
        for b in BANDS])
    want = w_img @ gains_exact
    ws = {e: img2latent_weights(x, w_img, codec, e) for e in (1e-3, 1e-5, 1e-7)}
    w_err = float(np.max(np.abs(ws[1e-5] - want)) / np.max(np.abs(want)))
    spread = max(float(np.max(np.abs(w - ws[1e-5])) / np.max(np.abs(ws[1e-5]))) for w in ws.values())
    reps = [jacobian_band_analysis(x, codec, e).gains for e in (1e-3, 1e-5, 1e-7)]
    g_spread = max(float(np.max(np.abs(g - reps[1])) / np.max(np.abs(reps[1]))) for g in reps)
    ok = jac_err < 1e-6 and w_err < 1e-6 and spread < 1e-4 and g_spread < 1e-4
    assert report(9, ok, f"fd jacobian rel err {jac_err:.2e}, img2latent rel err {w_err:.2e} (< 1e-6); "
                         f"eps spread {max(spread, g_spread):.2e} (< 1e-4)")


def test_10_simplex_invariant(report):
    sched = linear_schedule(20)
    specs = [(FAMILY_CYCLE[i % 4], 200 + i, 1.0) for i in range(5)]
    cs = make_concepts(specs, (32, 32, 1))
    for k in range(1, 6):
        logged_multlfg(f"c10 k={k}", cs, GuidanceConfig.with_scale(7.0, 5, top_k=k), sched, rng=make_rng(k))
    for seed in SEEDS:
        band_disjoint_errors(seed)
    worst, bad = 0.0, 0
    for label, w, k in _WEIGHT_LOG:
        worst = max(worst, float(np.max(np.abs(w.sum(axis=2) - 1))))
        bad += int(np.any(np.count_nonzero(w, axis=2) != min(k, w.shape[2])))
    ok = worst <= 1e-12 and bad == 0
    assert report(10, ok, f"{len(_WEIGHT_LOG)} multlfg runs incl. k=1..5 for N=5: max |sum-1| {worst:.2e}, "
                          f"wrong supports {bad}")


def test_11_frequency_trend(report):
    rhos = []
    for seed in SEEDS:
        cs = make_concepts([("blob", seed, 1.0)], (32, 32, 1), band_std=(0.3,) * 4)
        tr = logged_multlfg(f"c11 seed={seed}", cs, GuidanceConfig.with_scale(7.0, 1), linear_schedule(100),
                            rng=make_rng(seed))
        rhos.append(float(spearmanr(tr.timesteps, energy_trajectory(tr)[:, 0]).statistic))
    ok = all(r > 0.5 for r in rhos)
    assert report(11, ok, f"spearman(t, E_LL) over 10 seeds: min {min(rhos):.3f}, mean {np.mean(rhos):.3f} (> 0.5)")


def test_12_interference_report(report, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--out", str(a)]) == 0
    assert main(["verify", "--out", str(b)]) == 0
    text = (a / "interference.csv").read_bytes()
    n_rows = sum(1 for line in text.decode().splitlines() if not line.startswith("#")) - 1
    same = text == (b / "interference.csv").read_bytes()
    pairs, bands = interference_summary(interference_rows(1000, 0))
    ok = n_rows == 1000 and same
    assert report(12, ok, f"interference csv {n_rows} rows, deterministic={same}; strict inequality holds for "
                          f"{pairs:.3f} of pairs, {bands:.3f} of bands (reported, not asserted)")


@pytest.mark.parametrize("command,extra", [
    ("compose", []), ("compose", ["--no-deterministic", "--method", "switch"]),
    ("freq-analysis", []), ("verify", []), ("jacobian", ["--codec", "downsample"]),
])
def test_13_determinism(report, tmp_path, command, extra):
    runs = [tmp_path / "a", tmp_path / "b"]
    for d in runs:
        main([command, *extra, "--seed", "13", "--out", str(d)])
    names = sorted(p.name for p in runs[0].iterdir())
    same = names == sorted(p.name for p in runs[1].iterdir()) and all(
        (runs[0] / n).read_bytes() == (runs[1] / n).read_bytes() for n in names)
    assert report(13, same and bool(names), f"{command} {' '.join(extra)}: {len(names)} files byte-identical={same}")
