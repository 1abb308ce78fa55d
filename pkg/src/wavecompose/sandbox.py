"""Toy multi-concept diffusion with analytic concept denoisers.

Each concept is a Gaussian prior over clean latents centred on a target,
with per-band spread in Haar coordinates. Zero spread (the default) is a
point mass, whose noise prediction is exactly
``(z_t - sqrt(abar_t) target) / sqrt(1 - abar_t)``.
"""
import functools
from dataclasses import dataclass, field

import numpy as np

from .field import as_field, check_same_shape, gaussian_field, make_rng
from .guidance import (
    aggregate_bands,
    area_normalized_weight,
    check_band_weights,
    composite_baseline,
    spatial_cfg,
    switch_baseline,
    temporal_delta,
    topk_softmax,
    uniform_weights,
)
from .latent_map import img2latent_weights
from .schedule import ddpm_step, predict_clean, predict_noise
from .wavelet import BANDS, SubbandSet, band_energy_fractions, dwt2, idwt2

# family -> band the family's targets live in
FAMILIES = {"blob": "LL", "bars": "LH", "stripes": "HL", "checker": "HH"}


@dataclass
class ConceptModel:
    target: np.ndarray
    band_std: tuple = (0.0, 0.0, 0.0, 0.0)
    uncond_target: np.ndarray = None
    band_profile: str = None

    def __post_init__(self):
        self.target = as_field(self.target, "target")
        if self.uncond_target is None:
            self.uncond_target = np.zeros_like(self.target)
        self.uncond_target = as_field(self.uncond_target, "uncond_target")
        check_same_shape(self.target, self.uncond_target)
        self.band_std = tuple(float(s) for s in self.band_std)
        if len(self.band_std) != 4 or any(s < 0 for s in self.band_std):
            raise ValueError(f"band_std must be 4 nonnegative reals, got {self.band_std}")

    def clean_estimate(self, z_t, t, sched, conditional=True):
        """Posterior mean of the clean latent given `z_t`."""
        a, s = sched.signal_noise(t)
        mean = self.target if conditional else self.uncond_target
        if not conditional or not any(self.band_std):
            return mean
        zb, mb = dwt2(z_t), dwt2(mean)
        out = []
        for zf, mf, sd in zip(zb, mb, self.band_std):
            gain = a * sd * sd / (a * a * sd * sd + s * s)
            out.append(mf + gain * (zf - a * mf))
        return idwt2(SubbandSet(*out))


def concept_eps(model, z_t, t, sched, conditional=True):
    """Exact noise prediction of a concept model."""
    z_t = as_field(z_t, "z_t")
    check_same_shape(z_t, model.target)
    a, s = sched.signal_noise(t)
    if s == 0.0:
        raise ZeroDivisionError(f"alpha_bar[{t}] is 1; noise prediction undefined")
    return (z_t - a * model.clean_estimate(z_t, t, sched, conditional)) / s


# --- concept targets -----------------------------------------------------

def _envelope(half_shape, rng):
    h, w, c = half_shape
    cy = rng.uniform(0.3, 0.7) * h
    cx = rng.uniform(0.3, 0.7) * w
    sigma = rng.uniform(0.12, 0.25) * min(h, w)
    yy, xx = np.mgrid[0:h, 0:w] + 0.5
    env = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
    return np.repeat(env[:, :, None], c, axis=2)


def make_target(family, shape, seed, amplitude=1.0):
    """Deterministic target image whose energy sits in a single Haar band.

    blob -> LL (smooth bump), bars -> LH (horizontal bars), stripes -> HL
    (vertical stripes), checker -> HH (checkerboard). Detail families are
    modulated by a smooth bump so they stay spatially localized.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown concept family {family!r}; expected one of {tuple(FAMILIES)}")
    shape = tuple(int(s) for s in shape)
    if len(shape) == 2:
        shape = shape + (1,)
    h, w, c = shape
    rng = make_rng(seed)
    half = (h // 2, w // 2, c)
    s = SubbandSet.zeros(half)
    # Haar band coefficient 2e gives a 2x2 block pattern of magnitude e
    s[BANDS.index(FAMILIES[family])][...] = 2.0 * amplitude * _envelope(half, rng)
    return idwt2(s)


def make_concepts(specs, shape, codec=None, band_std=(0.0, 0.0, 0.0, 0.0)):
    """ConceptModels from ``(family, seed, amplitude)`` triples.

    Targets are built in image space and encoded to the latent space the
    denoisers operate in.
    """
    out = []
    for family, seed, amplitude in specs:
        img = make_target(family, shape, seed, amplitude)
        lat = codec.encode(img) if codec is not None else img
        out.append(ConceptModel(lat, band_std=band_std, band_profile=FAMILIES[family]))
    return out


# --- runs ----------------------------------------------------------------

@dataclass
class StepRecord:
    t: int
    weights: np.ndarray
    clean_estimate: np.ndarray
    energy: np.ndarray
    decodes: list = field(default_factory=list, repr=False)


@dataclass
class RunTrace:
    method: str
    latents: list = field(repr=False)
    steps: list = field(repr=False)
    final_image: np.ndarray = field(repr=False)

    @property
    def weights(self):
        """Array (T, 4, N) in sampling order."""
        return np.stack([s.weights for s in self.steps])

    @property
    def timesteps(self):
        return np.array([s.t for s in self.steps])


def _initial_latent(concepts, codec, rng, z_init):
    shape = concepts[0].target.shape
    if codec is not None and codec.latent_shape != shape:
        raise ValueError(f"concept latent shape {shape} != codec latent shape {codec.latent_shape}")
    for m in concepts:
        check_same_shape(m.target, concepts[0].target)
    if z_init is not None:
        z = as_field(z_init, "z_init")
        check_same_shape(z, concepts[0].target)
        return z
    return gaussian_field(shape, rng)


def _decode(codec, z):
    return z if codec is None else codec.decode(z)


def _numeric_guard(fn):
    """Turn overflow and invalid operations inside a run into FloatingPointError."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            return fn(*args, **kwargs)
    return wrapper


def _finish(method, codec, latents, steps):
    final = _decode(codec, latents[-1])
    if not np.all(np.isfinite(final)):
        raise FloatingPointError(f"{method} run produced non-finite values")
    return RunTrace(method=method, latents=latents, steps=steps, final_image=final)


def concept_relevance(model, z_t, t, sched, codec, cfg):
    """Per-latent-band relevance of one concept at timestep t (t >= 1).

    Clean estimates from the noise predicted at t and at t-1, both on the
    same latent and both inverted with the step-t coefficients; the
    band-wise temporal change is area-normalized and mapped to latent bands.
    Returns ``(relevance, (x_now, x_prev))``.
    """
    eps_now = concept_eps(model, z_t, t, sched, conditional=True)
    eps_prev = concept_eps(model, z_t, t - 1, sched, conditional=True)
    x_now = _decode(codec, predict_clean(z_t, eps_now, t, sched))
    x_prev = _decode(codec, predict_clean(z_t, eps_prev, t, sched))
    delta = temporal_delta(dwt2(x_now), dwt2(x_prev))
    w_img = area_normalized_weight(delta, cfg.tau)
    if codec is None:
        return w_img, (x_now, x_prev)
    return img2latent_weights(x_now, w_img, codec, cfg.eps_fd), (x_now, x_prev)


@_numeric_guard
def multlfg_run(concepts, cfg, sched, codec=None, rng=None, deterministic=True,
                uniform=False, z_init=None, keep_decodes=False):
    """Frequency-guided multi-concept sampling.

    Per step: per-concept clean estimates, temporal-change relevance per
    band, top-k softmax weights, weighted subband guidance, inverse DWT
    back to a clean latent, conversion to a noise estimate and one sampler
    step. The last step (t = 0) has no t-1 to difference against and reuses
    the previous step's weights. ``uniform=True`` fixes all weights at 1/N.
    """
    n = len(concepts)
    if n < 1:
        raise ValueError("need at least one concept")
    if cfg.num_concepts != n:
        raise ValueError(f"config is for {cfg.num_concepts} concepts, got {n}")
    rng = make_rng(0) if rng is None else rng
    z = _initial_latent(concepts, codec, rng, z_init)
    latents, steps = [z], []
    weights = None
    for t in reversed(range(sched.num_steps)):
        unc, cond, raw, decodes = [], [], np.zeros((4, n)), []
        for i, m in enumerate(concepts):
            unc.append(dwt2(predict_clean(z, concept_eps(m, z, t, sched, False), t, sched)))
            cond.append(dwt2(predict_clean(z, concept_eps(m, z, t, sched, True), t, sched)))
            if not uniform and t > 0:
                raw[:, i], pair = concept_relevance(m, z, t, sched, codec, cfg)
                decodes.append(pair)
        if uniform:
            weights = uniform_weights(n)
        elif t > 0 or weights is None:
            weights = topk_softmax(raw, cfg.top_k)
        check_band_weights(weights, k=n if uniform else cfg.top_k)
        x0 = idwt2(aggregate_bands(unc, cond, weights, cfg))
        eps_hat = predict_noise(z, x0, t, sched)
        steps.append(StepRecord(t, weights.copy(), x0, band_energy_fractions(_decode(codec, x0)),
                                decodes if keep_decodes else []))
        z = ddpm_step(z, eps_hat, t, sched, rng, deterministic)
        latents.append(z)
    return _finish("multlfg", codec, latents, steps)


@_numeric_guard
def _spatial_run(method, concepts, gamma, sched, codec, rng, deterministic, z_init):
    n = len(concepts)
    if n < 1:
        raise ValueError("need at least one concept")
    rng = make_rng(0) if rng is None else rng
    z = _initial_latent(concepts, codec, rng, z_init)
    latents, steps = [z], []
    for step, t in enumerate(reversed(range(sched.num_steps))):
        eu = [concept_eps(m, z, t, sched, False) for m in concepts]
        ec = [concept_eps(m, z, t, sched, True) for m in concepts]
        if method == "composite":
            eps_hat = composite_baseline(eu, ec, gamma)
            weights = uniform_weights(n)
        else:
            i = switch_baseline(step, n)
            eps_hat = spatial_cfg(eu[i], ec[i], gamma)
            weights = np.zeros((4, n))
            weights[:, i] = 1.0
        x0 = predict_clean(z, eps_hat, t, sched)
        steps.append(StepRecord(t, weights, x0, band_energy_fractions(_decode(codec, x0))))
        z = ddpm_step(z, eps_hat, t, sched, rng, deterministic)
        latents.append(z)
    return _finish(method, codec, latents, steps)


def composite_run(concepts, gamma, sched, codec=None, rng=None, deterministic=True, z_init=None):
    """Spatial CFG averaged over all concepts at every step."""
    return _spatial_run("composite", concepts, gamma, sched, codec, rng, deterministic, z_init)


def switch_run(concepts, gamma, sched, codec=None, rng=None, deterministic=True, z_init=None):
    """Spatial CFG with one concept active per step, round-robin."""
    return _spatial_run("switch", concepts, gamma, sched, codec, rng, deterministic, z_init)


def energy_trajectory(trace):
    """(T, 4) normalized band energies of the decoded clean estimate per step."""
    if not trace.steps:
        raise ValueError("empty trace")
    return np.stack([s.energy for s in trace.steps])


def band_errors(image, target):
    """Per-band ``(abs_error, rel_error)``; rel is NaN where the target band is empty."""
    got, ref = dwt2(image), dwt2(target)
    out = []
    for g, r in zip(got, ref):
        err = float(np.linalg.norm(g - r))
        norm = float(np.linalg.norm(r))
        out.append((err, err / norm if norm > 0 else float("nan")))
    return out
