"""Haar subbands of the four concept families, and what one DWT level preserves."""
# %%
import numpy as np

from wavecompose.field import gaussian_field, make_rng
from wavecompose.sandbox import FAMILIES, make_target
from wavecompose.wavelet import BANDS, band_energy_fractions, band_project, dwt2, idwt2

# %% one 2x2 block by hand
s = dwt2([[1, 2], [3, 4]])
print("[[1,2],[3,4]] ->", {b: float(v[0, 0, 0]) for b, v in zip(BANDS, s)})

# %% each family puts all of its energy in one band
for family in FAMILIES:
    x = make_target(family, (32, 32, 1), seed=0)
    print(f"{family:8s}", np.round(band_energy_fractions(x), 4))

# %% white noise spreads evenly; the transform is orthonormal and invertible
x = gaussian_field((64, 64, 3), make_rng(0))
print("noise fractions", np.round(band_energy_fractions(x), 3))
print("reconstruction err", np.abs(idwt2(dwt2(x)) - x).max())
parts = [band_project(x, b) for b in BANDS]
print("sum of projections err", np.abs(sum(parts) - x).max())
