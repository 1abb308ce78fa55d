"""Subband classifier-free guidance, adaptive per-band concept weights, and
the spatial baselines (Composite, Switch).

Band weights are arrays of shape ``(4, N)``: one row per band in
``BANDS`` order, one column per concept.
"""
from dataclasses import dataclass

import numpy as np

from .field import as_field, check_same_shape
from .wavelet import BANDS, SubbandSet, idwt2


@dataclass(frozen=True)
class GuidanceConfig:
    """Knobs for the frequency-guided composer.

    band_scales: guidance scale per band, in ``BANDS`` order.
    top_k: concepts kept per band before the softmax (clamped to N).
    tau: area threshold on squared temporal change.
    eps_fd: finite-difference step for image-to-latent scaling.
    """
    band_scales: tuple = (7.0, 7.0, 7.0, 7.0)
    top_k: int = 2
    tau: float = 0.01
    eps_fd: float = 1e-5
    num_concepts: int = 2

    def __post_init__(self):
        scales = tuple(float(s) for s in self.band_scales)
        object.__setattr__(self, "band_scales", scales)
        if len(scales) != 4 or not all(np.isfinite(scales)):
            raise ValueError(f"band_scales must be 4 finite reals, got {self.band_scales}")
        if self.num_concepts < 1:
            raise ValueError("num_concepts must be >= 1")
        if not 1 <= self.top_k <= self.num_concepts:
            raise ValueError(f"top_k must be in [1, {self.num_concepts}], got {self.top_k}")
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if not self.eps_fd > 0:
            raise ValueError(f"eps_fd must be > 0, got {self.eps_fd}")

    @classmethod
    def with_scale(cls, scale, num_concepts, top_k=None, **kw):
        top_k = num_concepts if top_k is None else min(top_k, num_concepts)
        return cls(band_scales=(scale,) * 4, top_k=top_k, num_concepts=num_concepts, **kw)


def spatial_cfg(eps_uncond, eps_cond, gamma):
    eps_uncond = as_field(eps_uncond, "eps_uncond")
    eps_cond = as_field(eps_cond, "eps_cond")
    check_same_shape(eps_uncond, eps_cond)
    return eps_uncond + gamma * (eps_cond - eps_uncond)


def _check_sets(u, c):
    if u.shape != c.shape or any(np.shape(a) != np.shape(b) for a, b in zip(u, c)):
        raise ValueError(f"subband shape mismatch: {u.shape} vs {c.shape}")


def subband_cfg(u, c, cfg):
    """Per-band guidance ``u_F + s_F (c_F - u_F)``."""
    _check_sets(u, c)
    return SubbandSet(*(ub + s * (cb - ub) for ub, cb, s in zip(u, c, cfg.band_scales)))


def temporal_delta(bands_t, bands_prev):
    _check_sets(bands_t, bands_prev)
    return bands_t.combine(bands_prev, lambda a, b: np.abs(a - b))


def area_normalized_weight(delta, tau):
    """Per-band scalar ``sum(delta) / A`` with ``A = sum(delta^2 [delta^2 >= tau])``.

    Bands where nothing clears the threshold (A = 0) get weight 0.
    """
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    out = np.zeros(4)
    for i, d in enumerate(delta):
        d2 = d * d
        area = d2[d2 >= tau].sum()
        if area > 0:
            out[i] = d.sum() / area
    return out


def topk_softmax(raw, k):
    """Top-k selection then softmax, independently per band.

    `raw` has shape (4, N). Ties go to the lowest concept index. Entries
    outside the selected set are exactly 0; selected entries are floored at
    the smallest positive float so none underflows to 0.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
    nb, n = raw.shape
    if k < 1 or n < 1:
        raise ValueError(f"need k >= 1 and at least one concept, got k={k}, N={n}")
    k = min(k, n)
    out = np.zeros_like(raw)
    for b in range(nb):
        order = np.argsort(-raw[b], kind="stable")[:k]
        vals = raw[b, order]
        e = np.exp(vals - vals.max())
        out[b, order] = np.maximum(e / e.sum(), np.finfo(np.float64).tiny)
    return out


def uniform_weights(n):
    return np.full((4, n), 1.0 / n)


def check_band_weights(weights, k=None, atol=1e-12):
    """Raise if any band row is off the simplex or has the wrong support size."""
    w = np.asarray(weights)
    if w.ndim != 2 or w.shape[0] != 4:
        raise ValueError(f"band weights must have shape (4, N), got {w.shape}")
    if np.any(w < 0):
        raise ValueError("band weights must be nonnegative")
    sums = w.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > atol):
        raise ValueError(f"band weights must sum to 1 per band, got {sums}")
    if k is not None:
        nnz = np.count_nonzero(w, axis=1)
        if np.any(nnz != min(k, w.shape[1])):
            raise ValueError(f"expected {min(k, w.shape[1])} nonzero weights per band, got {nnz}")


def aggregate_bands(uncond, cond, weights, cfg):
    """Weighted sum over concepts of each concept's subband-guided prediction.

    Concepts with zero weight in a band contribute nothing there. Summation
    runs in concept-index order so the result does not depend on how the
    per-concept inputs were produced.
    """
    n = len(uncond)
    if len(cond) != n or n < 1:
        raise ValueError(f"need matching non-empty uncond/cond lists, got {len(uncond)}, {len(cond)}")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (4, n):
        raise ValueError(f"weights shape {weights.shape} does not match (4, {n})")
    check_band_weights(weights, atol=1e-9)
    shape = uncond[0].shape
    out = [np.zeros(shape) for _ in BANDS]
    for i in range(n):
        _check_sets(uncond[i], cond[i])
        if uncond[i].shape != shape:
            raise ValueError(f"concept {i} subband shape {uncond[i].shape} != {shape}")
        for b, s in enumerate(cfg.band_scales):
            w = weights[b, i]
            if w == 0.0:
                continue
            u, c = uncond[i][b], cond[i][b]
            out[b] = out[b] + w * (u + s * (c - u))
    return SubbandSet(*out)


def band_update_energies(u, c, cfg):
    """Energy of the subband-guided update ``s_F (c_F - u_F)``.

    Returns ``(total, per_band)``, where `total` is measured on the spatial
    reconstruction of the summed update and `per_band` on each band alone.
    """
    _check_sets(u, c)
    upd = SubbandSet(*(s * (cb - ub) for ub, cb, s in zip(u, c, cfg.band_scales)))
    spatial = idwt2(upd)
    total = float(np.dot(spatial.ravel(), spatial.ravel()))
    return total, upd.energies()


def composite_baseline(uncond, cond, gamma):
    """Mean over concepts of spatial CFG."""
    n = len(uncond)
    if n < 1 or len(cond) != n:
        raise ValueError(f"need matching non-empty uncond/cond lists, got {len(uncond)}, {len(cond)}")
    acc = spatial_cfg(uncond[0], cond[0], gamma)
    for i in range(1, n):
        g = spatial_cfg(uncond[i], cond[i], gamma)
        check_same_shape(acc, g)
        acc = acc + g
    return acc / n


def switch_baseline(step_index, n):
    """Round-robin concept index for a sampling step."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return step_index % n
