"""Toy encoder/decoder pairs and image-band -> latent-band sensitivity.

The codecs stand in for a VAE. ``identity`` keeps the image as the latent;
``downsample`` encodes by 2x2 block averaging and decodes by the scaled
transpose (nearest-neighbour upsampling), so ``encode(decode(z)) == z``.
"""
import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .field import as_field
from .wavelet import BANDS, SubbandSet, dwt2, idwt2

CODEC_KINDS = ("identity", "downsample")
MAX_JACOBIAN_SIDE = 16


@dataclass(frozen=True)
class ToyCodec:
    kind: str
    image_shape: tuple

    def __post_init__(self):
        if self.kind not in CODEC_KINDS:
            raise ValueError(f"unknown codec kind {self.kind!r}; expected one of {CODEC_KINDS}")
        shape = tuple(int(s) for s in self.image_shape)
        if len(shape) == 2:
            shape = shape + (1,)
        object.__setattr__(self, "image_shape", shape)
        h, w, _ = shape
        # latents are themselves wavelet-decomposed, so they need even sides too
        need = 4 if self.kind == "downsample" else 2
        if h % need or w % need:
            raise ValueError(f"{self.kind} codec needs image sides divisible by {need}, got {h}x{w}")

    @property
    def latent_shape(self):
        h, w, c = self.image_shape
        if self.kind == "identity":
            return (h, w, c)
        return (h // 2, w // 2, c)

    def encode(self, x):
        x = as_field(x, "image")
        if x.shape != self.image_shape:
            raise ValueError(f"image shape {x.shape} != codec image shape {self.image_shape}")
        if self.kind == "identity":
            return x.copy()
        return 0.25 * (x[0::2, 0::2] + x[0::2, 1::2] + x[1::2, 0::2] + x[1::2, 1::2])

    def decode(self, z):
        z = as_field(z, "latent")
        if z.shape != self.latent_shape:
            raise ValueError(f"latent shape {z.shape} != codec latent shape {self.latent_shape}")
        if self.kind == "identity":
            return z.copy()
        return np.repeat(np.repeat(z, 2, axis=0), 2, axis=1)


def directional_derivative(f, x, v, eps, central=False):
    """Finite-difference estimate of the derivative of `f` at `x` along `v`."""
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if central:
        return (f(x + eps * v) - f(x - eps * v)) / (2 * eps)
    return (f(x + eps * v) - f(x)) / eps


def band_probe(shape, band):
    """Unit-norm image perturbation living entirely in one subband.

    A single unit coefficient at the centre of the subband grid, set in
    every channel, pushed through the inverse transform and normalized.
    """
    h, w, c = shape
    s = SubbandSet.zeros((h // 2, w // 2, c))
    coeffs = s[BANDS.index(band)]
    coeffs[h // 4, w // 4, :] = 1.0
    probe = idwt2(s)
    return probe / np.linalg.norm(probe)


def img2latent_gains(x, codec, eps):
    """Matrix G[F, F'] = ||DWT_F'(dz_F)|| for unit probes in image band F.

    ``dz_F = (encode(x + eps * probe_F) - encode(x)) / eps``.
    """
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    x = as_field(x, "image")
    if x.shape != codec.image_shape:
        raise ValueError(f"image shape {x.shape} != codec image shape {codec.image_shape}")
    base = codec.encode(x)
    gains = np.zeros((4, 4))
    for i, band in enumerate(BANDS):
        dz = (codec.encode(x + eps * band_probe(x.shape, band)) - base) / eps
        gains[i] = np.sqrt(dwt2(dz).energies())
    return gains


def img2latent_weights(x, w_img, codec, eps):
    """Map per-image-band relevance to per-latent-band relevance.

    ``w_latent[F'] = sum_F w_img[F] * ||(dz_F)_F'||``; nonnegative whenever
    `w_img` is.
    """
    w_img = np.asarray(w_img, dtype=np.float64)
    if w_img.shape != (4,):
        raise ValueError(f"w_img must hold one value per band, got shape {w_img.shape}")
    return w_img @ img2latent_gains(x, codec, eps)


def fd_jacobian(f, x, eps):
    """Dense forward-difference Jacobian of `f` at `x`, flattened row-major."""
    x = as_field(x)
    base = f(x).ravel()
    n = x.size
    jac = np.empty((base.size, n))
    flat = x.ravel()
    for k in range(n):
        xp = flat.copy()
        xp[k] += eps
        jac[:, k] = (f(xp.reshape(x.shape)).ravel() - base) / eps
    return jac


def inverse_dwt_matrix(shape):
    """Columns are idwt2 of unit coefficients, ordered band-major."""
    h, w, c = shape
    sub = (h // 2, w // 2, c)
    m = int(np.prod(sub))
    cols = []
    for b in range(4):
        for k in range(m):
            s = SubbandSet.zeros(sub)
            s[b].reshape(-1)[k] = 1.0
            cols.append(idwt2(s).ravel())
    return np.stack(cols, axis=1)


def dwt_matrix(shape):
    # orthonormal, so the forward matrix is the transpose of the inverse
    return inverse_dwt_matrix(shape).T


@dataclass
class BandGainReport:
    """Block gains of ``A = J_E W^-1`` seen through the latent DWT.

    gains[F, F'] is the spectral norm of the block mapping image-band F
    coefficients to latent-band F' coefficients. singular_values[F] holds
    the singular values of the full column group for image band F.
    """
    gains: np.ndarray
    singular_values: dict
    jacobian: np.ndarray = field(repr=False)
    operator: np.ndarray = field(repr=False)

    def to_csv(self, header_comments=()):
        buf = io.StringIO()
        for line in header_comments:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["image_band"] + [f"latent_{b}" for b in BANDS])
        for i, band in enumerate(BANDS):
            writer.writerow([band] + [repr(float(g)) for g in self.gains[i]])
        return buf.getvalue()


def jacobian_band_analysis(x, codec, eps=1e-5):
    x = as_field(x, "image")
    h, w, _ = x.shape
    if h > MAX_JACOBIAN_SIDE or w > MAX_JACOBIAN_SIDE:
        raise ValueError(f"dense Jacobian capped at {MAX_JACOBIAN_SIDE}x{MAX_JACOBIAN_SIDE}, got {h}x{w}")
    if x.shape != codec.image_shape:
        raise ValueError(f"image shape {x.shape} != codec image shape {codec.image_shape}")
    jac = fd_jacobian(codec.encode, x, eps)
    op = jac @ inverse_dwt_matrix(x.shape)
    banded = dwt_matrix(codec.latent_shape) @ op
    n_img = op.shape[1] // 4
    n_lat = op.shape[0] // 4
    gains = np.zeros((4, 4))
    svs = {}
    for i, band in enumerate(BANDS):
        cols = slice(i * n_img, (i + 1) * n_img)
        svs[band] = np.linalg.svd(op[:, cols], compute_uv=False)
        for j in range(4):
            block = banded[j * n_lat:(j + 1) * n_lat, cols]
            gains[i, j] = np.linalg.norm(block, 2)
    return BandGainReport(gains=gains, singular_values=svs, jacobian=jac, operator=op)
