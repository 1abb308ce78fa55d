"""Frequency-guided multi-concept composition on a toy diffusion sandbox."""
from .field import as_field, gaussian_field, make_rng, read_field_csv, read_field_pgm, write_field_csv, write_field_pgm
from .guidance import (
    GuidanceConfig,
    aggregate_bands,
    area_normalized_weight,
    composite_baseline,
    spatial_cfg,
    subband_cfg,
    switch_baseline,
    temporal_delta,
    topk_softmax,
)
from .latent_map import ToyCodec, img2latent_weights, jacobian_band_analysis
from .sandbox import ConceptModel, composite_run, make_concepts, multlfg_run, switch_run
from .schedule import Schedule, add_noise, ddpm_step, linear_schedule, predict_clean, predict_noise
from .wavelet import BANDS, SubbandSet, band_project, dwt2, idwt2

__version__ = "0.1.0"
