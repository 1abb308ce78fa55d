"""Which image bands survive a toy encoder, seen through the latent DWT."""
# %%
import numpy as np

from wavecompose.field import gaussian_field, make_rng
from wavecompose.latent_map import ToyCodec, img2latent_weights, jacobian_band_analysis
from wavecompose.wavelet import BANDS

x = gaussian_field((8, 8, 1), make_rng(0))

for kind in ("identity", "downsample"):
    rep = jacobian_band_analysis(x, ToyCodec(kind, x.shape))
    print(f"{kind}: rows image band, cols latent band")
    for b, row in zip(BANDS, rep.gains):
        print(f"  {b}  {np.round(row, 4)}")

# %% block averaging keeps the smooth part and drops within-block detail
codec = ToyCodec("downsample", x.shape)
w_img = np.array([1.0, 1.0, 1.0, 1.0])
for eps in (1e-3, 1e-5, 1e-7):
    print(f"eps={eps:g}", np.round(img2latent_weights(x, w_img, codec, eps), 8))
