"""Single-level orthonormal 2-D Haar transform.

For each non-overlapping 2x2 block ``[[a, b], [c, d]]``::

    LL = (a + b + c + d) / 2
    LH = (a + b - c - d) / 2    # vertical detail (top vs bottom)
    HL = (a - b + c - d) / 2    # horizontal detail (left vs right)
    HH = (a - b - c + d) / 2    # diagonal detail

The /2 normalization makes the transform orthonormal, so subband energies
sum to the field energy exactly. Channels are transformed independently.
"""
from typing import NamedTuple

import numpy as np

from .field import as_field

BANDS = ("LL", "LH", "HL", "HH")


class SubbandSet(NamedTuple):
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    def band(self, name):
        return self[BANDS.index(band_index_name(name))]

    @property
    def shape(self):
        return self.ll.shape

    def map(self, fn):
        return SubbandSet(*(fn(b) for b in self))

    def combine(self, other, fn):
        return SubbandSet(*(fn(a, b) for a, b in zip(self, other)))

    def energies(self):
        return np.array([float(np.dot(b.ravel(), b.ravel())) for b in self])

    @classmethod
    def zeros(cls, shape):
        return cls(*(np.zeros(shape) for _ in BANDS))


def band_index_name(band):
    """Normalize a band given as index or (case-insensitive) name to its name."""
    if isinstance(band, (int, np.integer)):
        return BANDS[band]
    name = str(band).upper()
    if name not in BANDS:
        raise ValueError(f"unknown band {band!r}; expected one of {BANDS}")
    return name


def dwt2(x):
    x = as_field(x)
    h, w, _ = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"dwt2 needs even height and width, got {h}x{w}")
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    return SubbandSet(
        ll=(a + b + c + d) / 2,
        lh=(a + b - c - d) / 2,
        hl=(a - b + c - d) / 2,
        hh=(a - b - c + d) / 2,
    )


def idwt2(s):
    shapes = {np.shape(b) for b in s}
    if len(shapes) != 1:
        raise ValueError(f"inconsistent subband shapes: {[np.shape(b) for b in s]}")
    ll, lh, hl, hh = (as_field(b, n) for b, n in zip(s, BANDS))
    h, w, c = ll.shape
    x = np.empty((2 * h, 2 * w, c))
    x[0::2, 0::2] = (ll + lh + hl + hh) / 2
    x[0::2, 1::2] = (ll + lh - hl - hh) / 2
    x[1::2, 0::2] = (ll - lh + hl - hh) / 2
    x[1::2, 1::2] = (ll - lh - hl + hh) / 2
    return x


def keep_band(s, band):
    """Copy of `s` with every band except `band` zeroed."""
    i = BANDS.index(band_index_name(band))
    return SubbandSet(*(b if j == i else np.zeros_like(b) for j, b in enumerate(s)))


def band_project(x, band):
    """Spatial-domain component of `x` living in one subband.

    The four projections sum back to `x` and are mutually orthogonal.
    """
    return idwt2(keep_band(dwt2(x), band))


def band_energy_fractions(x):
    """Normalized subband energies ``E^b = ||x_b||^2 / sum_b' ||x_b'||^2``.

    An all-zero field has no defined split; it reports all energy in LL.
    """
    e = dwt2(x).energies()
    total = e.sum()
    if total == 0.0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    return e / total
