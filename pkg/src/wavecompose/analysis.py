"""Interference metrics and the property checks behind ``wavecompose verify``."""
import time

import numpy as np

from .field import gaussian_field, l2_norm_sq, make_rng
from .guidance import (
    GuidanceConfig,
    aggregate_bands,
    band_update_energies,
    composite_baseline,
    subband_cfg,
    spatial_cfg,
    topk_softmax,
    uniform_weights,
)
from .latent_map import ToyCodec, fd_jacobian, img2latent_weights, jacobian_band_analysis
from .wavelet import BANDS, SubbandSet, band_project, dwt2, idwt2


def _cosine(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return float("nan")
    return float(np.dot(a.ravel(), b.ravel()) / (na * nb))


def interference(xi, xj):
    """Normalized inner products between two concept images.

    Returns ``(I_spatial, I_bands)``; a band entry is NaN when either
    concept has no energy there.
    """
    bi, bj = dwt2(xi), dwt2(xj)
    return _cosine(xi, xj), np.array([_cosine(a, b) for a, b in zip(bi, bj)])


def localized_concept(shape, rng):
    """Random concept image: a smooth bump times an offset noise texture."""
    h, w, c = shape
    cy, cx = rng.uniform(0.2, 0.8, size=2) * (h, w)
    sigma = rng.uniform(0.1, 0.3) * min(h, w)
    yy, xx = np.mgrid[0:h, 0:w] + 0.5
    env = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))[:, :, None]
    offset = rng.normal()
    return env * (offset + gaussian_field(shape, rng))


def interference_rows(num_pairs=1000, seed=0, shape=(16, 16, 1)):
    """One row per random pair: spatial and per-band interference."""
    rng = make_rng(seed)
    rows = []
    for p in range(num_pairs):
        xi = localized_concept(shape, rng)
        xj = localized_concept(shape, rng)
        isp, ib = interference(xi, xj)
        finite = ib[np.isfinite(ib)]
        max_b = float(np.max(np.abs(finite))) if finite.size else float("nan")
        rows.append({
            "pair": p,
            "abs_I_spatial": abs(isp),
            **{f"I_{b}": float(v) for b, v in zip(BANDS, ib)},
            "max_abs_I_band": max_b,
            "bands_defined": int(finite.size),
            "bands_below": int(np.sum(np.abs(finite) < abs(isp))),
            "holds": bool(max_b < abs(isp)),
        })
    return rows


def interference_summary(rows):
    """(fraction of pairs where every band is below spatial, fraction of bands below).

    Spatial interference is a norm-weighted average of band interferences,
    so some band always reaches it and the first fraction is 0.
    """
    if not rows:
        return float("nan"), float("nan")
    pairs = sum(r["holds"] for r in rows) / len(rows)
    defined = sum(r["bands_defined"] for r in rows)
    bands = sum(r["bands_below"] for r in rows) / defined if defined else float("nan")
    return pairs, bands


# --- property checks --------------------------------------------------------

def _corpus(seed, count=100, max_side=64):
    rng = make_rng(seed)
    out = []
    for _ in range(count):
        h = 2 * int(rng.integers(1, max_side // 2 + 1))
        w = 2 * int(rng.integers(1, max_side // 2 + 1))
        c = int(rng.integers(1, 4))
        out.append(gaussian_field((h, w, c), rng))
    return out


def check_reconstruction(corpus):
    return max(float(np.max(np.abs(idwt2(dwt2(x)) - x))) for x in corpus)


def check_parseval(corpus):
    return max(abs(dwt2(x).energies().sum() - l2_norm_sq(x)) / l2_norm_sq(x) for x in corpus)


def check_linearity(seed, count=100):
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(count):
        shape = (2 * int(rng.integers(1, 17)), 2 * int(rng.integers(1, 17)), int(rng.integers(1, 4)))
        x, y = gaussian_field(shape, rng), gaussian_field(shape, rng)
        a, b = rng.normal(size=2) * 10
        lhs = np.concatenate([v.ravel() for v in dwt2(a * x + b * y)])
        rhs = np.concatenate([(a * u + b * v).ravel() for u, v in zip(dwt2(x), dwt2(y))])
        worst = max(worst, float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs)))
    return worst


def check_orthogonality(corpus):
    worst = 0.0
    for x in corpus:
        proj = [band_project(x, b) for b in BANDS]
        scale = l2_norm_sq(x)
        for i in range(4):
            for j in range(i + 1, 4):
                worst = max(worst, abs(float(np.dot(proj[i].ravel(), proj[j].ravel()))) / scale)
    return worst


def check_cfg_equivalence(seed, count=20):
    """Wavelet pipeline with uniform weights and equal scales vs spatial Composite."""
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 6))
        gamma = float(rng.uniform(0.5, 10))
        u = [gaussian_field((16, 16, 1), rng) for _ in range(n)]
        c = [gaussian_field((16, 16, 1), rng) for _ in range(n)]
        cfg = GuidanceConfig.with_scale(gamma, n)
        out = idwt2(aggregate_bands([dwt2(a) for a in u], [dwt2(b) for b in c], uniform_weights(n), cfg))
        worst = max(worst, float(np.max(np.abs(out - composite_baseline(u, c, gamma)))))
    return worst


def check_variance_decomposition(seed, count=20):
    """Band-disjoint guided deltas: total update energy equals the band sum."""
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(count):
        u = dwt2(gaussian_field((16, 16, 1), rng))
        # each band's conditional differs from the unconditional only in that band
        c = SubbandSet(*(ub + gaussian_field(ub.shape, rng) for ub in u))
        cfg = GuidanceConfig(band_scales=tuple(rng.uniform(0.5, 10, size=4)), top_k=1, num_concepts=1)
        total, per_band = band_update_energies(u, c, cfg)
        worst = max(worst, abs(total - per_band.sum()) / total)
    return worst


def check_subband_matches_spatial(seed, count=20):
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(count):
        a, b = gaussian_field((8, 8, 2), rng), gaussian_field((8, 8, 2), rng)
        g = float(rng.uniform(0, 10))
        cfg = GuidanceConfig.with_scale(g, 1)
        worst = max(worst, float(np.max(np.abs(idwt2(subband_cfg(dwt2(a), dwt2(b), cfg)) - spatial_cfg(a, b, g)))))
    return worst


def check_simplex(seed, count=200):
    rng = make_rng(seed)
    worst = 0.0
    bad_support = 0
    for _ in range(count):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(1, 6))
        w = topk_softmax(rng.normal(scale=50, size=(4, n)), k)
        worst = max(worst, float(np.max(np.abs(w.sum(axis=1) - 1))))
        bad_support += int(np.any(np.count_nonzero(w, axis=1) != min(k, n)))
    return worst, bad_support


def check_fd_fidelity(seed):
    """Finite-difference img2latent and Jacobian vs the exact block-average matrix."""
    rng = make_rng(seed)
    x = gaussian_field((8, 8, 1), rng)
    codec = ToyCodec("downsample", x.shape)
    exact = _block_average_matrix(8, 8)
    jac = fd_jacobian(codec.encode, x, 1e-5)
    jac_err = float(np.max(np.abs(jac - exact)) / np.max(np.abs(exact)))
    w_img = np.array([1.0, 0.5, 0.25, 2.0])
    ws = [img2latent_weights(x, w_img, codec, e) for e in (1e-3, 1e-5, 1e-7)]
    spread = max(float(np.max(np.abs(w - ws[1])) / np.max(np.abs(ws[1]))) for w in ws)
    report = jacobian_band_analysis(x, codec)
    return jac_err, spread, report.gains


def _block_average_matrix(h, w):
    rows = []
    for i in range(h // 2):
        for j in range(w // 2):
            r = np.zeros((h, w))
            r[2 * i:2 * i + 2, 2 * j:2 * j + 2] = 0.25
            rows.append(r.ravel())
    return np.array(rows)


def run_checks(seed=0):
    """Run every deterministic property check; returns ``[(name, ok, detail)]``."""
    results = []
    corpus = _corpus(seed)

    t0 = time.perf_counter()
    err = check_reconstruction(corpus)
    dt = time.perf_counter() - t0
    results.append(("perfect reconstruction", err < 1e-12 and dt < 1.0, f"max abs err {err:.2e} in {dt:.3f}s"))

    err = check_parseval(corpus)
    results.append(("parseval energy identity", err < 1e-12, f"max rel err {err:.2e}"))

    err = check_linearity(seed)
    results.append(("dwt linearity", err < 1e-12, f"max rel err {err:.2e}"))

    err = check_orthogonality(corpus)
    results.append(("band projection orthogonality", err < 1e-10, f"max |<P_l x, P_l' x>|/||x||^2 {err:.2e}"))

    err = check_subband_matches_spatial(seed)
    results.append(("subband cfg == spatial cfg", err < 1e-12, f"max abs err {err:.2e}"))

    err = check_cfg_equivalence(seed)
    results.append(("uniform wavelet aggregate == composite", err < 1e-10, f"max abs err {err:.2e}"))

    err = check_variance_decomposition(seed)
    results.append(("variance decomposition", err < 1e-10, f"max rel err {err:.2e}"))

    err, bad = check_simplex(seed)
    results.append(("top-k softmax simplex", err < 1e-12 and bad == 0, f"max sum err {err:.2e}, bad supports {bad}"))

    jac_err, spread, gains = check_fd_fidelity(seed)
    ok = jac_err < 1e-6 and spread < 1e-4 and gains[0, 0] > gains[3].max()
    results.append(("finite-difference fidelity", ok,
                    f"jacobian rel err {jac_err:.2e}, eps spread {spread:.2e}, LL->LL {gains[0, 0]:.3f}"))
    return [(name, bool(ok), detail) for name, ok, detail in results]
