import numpy as np
import pytest

from wavecompose.field import gaussian_field, make_rng
from wavecompose.guidance import GuidanceConfig
from wavecompose.latent_map import ToyCodec
from wavecompose.sandbox import (
    FAMILIES, ConceptModel, band_errors, composite_run, concept_eps, energy_trajectory,
    make_concepts, make_target, multlfg_run, switch_run,
)
from wavecompose.schedule import linear_schedule, predict_clean
from wavecompose.wavelet import BANDS, band_energy_fractions, dwt2

SHAPE = (16, 16, 1)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.mark.parametrize("family", list(FAMILIES))
def test_targets_live_in_one_band(family):
    x = make_target(family, SHAPE, 3)
    e = band_energy_fractions(x)
    assert e[BANDS.index(FAMILIES[family])] > 1 - 1e-12
    assert np.array_equal(x, make_target(family, SHAPE, 3))
    assert not np.array_equal(x, make_target(family, SHAPE, 4))


def test_unknown_family():
    with pytest.raises(ValueError):
        make_target("cloud", SHAPE, 0)


def test_concept_eps_identities():
    s = linear_schedule(20)
    m = ConceptModel(make_target("blob", SHAPE, 0))
    z = gaussian_field(SHAPE, make_rng(1))
    assert np.max(np.abs(predict_clean(z, concept_eps(m, z, 9, s), 9, s) - m.target)) < 1e-12
    a, b = s.signal_noise(9)
    assert np.allclose(concept_eps(m, a * m.target, 9, s), 0, atol=1e-12)
    zero = ConceptModel(np.zeros(SHAPE))
    assert np.allclose(concept_eps(zero, z, 9, s), z / b)
    assert np.allclose(concept_eps(m, z, 9, s, conditional=False), z / b)


def test_spread_posterior_limits():
    s = linear_schedule(50)
    t = make_target("blob", SHAPE, 0)
    z = gaussian_field(SHAPE, make_rng(2))
    wide = ConceptModel(t, band_std=(1e6,) * 4)
    # huge spread: posterior mean collapses to z / sqrt(abar)
    a, _ = s.signal_noise(10)
    assert np.allclose(wide.clean_estimate(z, 10, s), z / a, rtol=1e-6)
    assert np.array_equal(ConceptModel(t).clean_estimate(z, 10, s), t)
    with pytest.raises(ValueError):
        ConceptModel(t, band_std=(1, 1, 1))


@pytest.mark.parametrize("T", [10, 50])
def test_single_concept_exact(T):
    s = linear_schedule(T)
    (m,) = make_concepts([("blob", 0, 1.0)], SHAPE)
    tr = multlfg_run([m], GuidanceConfig.with_scale(1.0, 1), s, rng=make_rng(0))
    assert rel(tr.final_image, m.target) < 1e-6


def test_single_concept_exact_through_downsample_codec():
    s = linear_schedule(20)
    codec = ToyCodec("downsample", SHAPE)
    (m,) = make_concepts([("blob", 0, 1.0)], SHAPE, codec)
    tr = multlfg_run([m], GuidanceConfig.with_scale(1.0, 1), s, codec, make_rng(0))
    assert rel(tr.final_image, codec.decode(m.target)) < 1e-6


@pytest.mark.parametrize("n", [2, 3])
def test_uniform_multlfg_equals_composite(n):
    s = linear_schedule(20)
    cs = make_concepts([(f, i, 1.0) for i, f in zip(range(n), FAMILIES)], SHAPE, band_std=(0.3,) * 4)
    a = multlfg_run(cs, GuidanceConfig.with_scale(5.0, n), s, rng=make_rng(1), uniform=True)
    b = composite_run(cs, 5.0, s, rng=make_rng(1))
    assert np.max(np.abs(a.final_image - b.final_image)) < 1e-9


def test_stochastic_runs_are_seeded():
    s = linear_schedule(10)
    cs = make_concepts([("blob", 0, 1.0), ("checker", 1, 1.0)], SHAPE)
    cfg = GuidanceConfig.with_scale(2.0, 2)
    a = multlfg_run(cs, cfg, s, rng=make_rng(5), deterministic=False)
    b = multlfg_run(cs, cfg, s, rng=make_rng(5), deterministic=False)
    assert np.array_equal(a.final_image, b.final_image)


def test_single_concept_baselines_are_plain_cfg():
    s = linear_schedule(10)
    cs = make_concepts([("stripes", 0, 1.0)], SHAPE)
    a = composite_run(cs, 3.0, s, rng=make_rng(0))
    b = switch_run(cs, 3.0, s, rng=make_rng(0))
    assert np.array_equal(a.final_image, b.final_image)
    # point mass with zero unconditional: guidance scales the target
    assert np.allclose(a.final_image, 3.0 * cs[0].target)


def test_composite_identical_concepts_is_single():
    s = linear_schedule(10)
    one = make_concepts([("blob", 0, 1.0)], SHAPE, band_std=(0.2,) * 4)
    a = composite_run(one * 2, 4.0, s, rng=make_rng(0))
    b = composite_run(one, 4.0, s, rng=make_rng(0))
    assert np.allclose(a.final_image, b.final_image, atol=1e-12)


def test_switch_alternates():
    s = linear_schedule(100)
    cs = make_concepts([("blob", 0, 1.0), ("checker", 1, 1.0)], SHAPE)
    w = switch_run(cs, 1.0, s, rng=make_rng(0)).weights
    active = w[:, 0].argmax(axis=1)
    assert np.array_equal(active, np.arange(100) % 2)
    assert np.sum(active == 0) == 50


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_multlfg_weights_on_simplex(k):
    s = linear_schedule(10)
    cs = make_concepts([(f, i, 1.0) for i, f in enumerate(list(FAMILIES) + ["blob"])], SHAPE)
    tr = multlfg_run(cs, GuidanceConfig.with_scale(7.0, 5, top_k=k), s, rng=make_rng(0))
    w = tr.weights
    assert w.shape == (10, 4, 5)
    assert np.all(np.abs(w.sum(axis=2) - 1) <= 1e-12)
    assert np.all(np.count_nonzero(w, axis=2) == k)


def test_energy_trajectory():
    s = linear_schedule(12)
    cs = make_concepts([("blob", 0, 1.0)], SHAPE, band_std=(0.3,) * 4)
    tr = multlfg_run(cs, GuidanceConfig.with_scale(1.0, 1), s, rng=make_rng(0))
    e = energy_trajectory(tr)
    assert e.shape == (12, 4) and np.allclose(e.sum(axis=1), 1)
    assert np.array_equal(tr.timesteps, np.arange(11, -1, -1))


def test_constant_trajectory_all_ll():
    s = linear_schedule(5)
    m = ConceptModel(np.full(SHAPE, 2.0))
    tr = composite_run([m], 1.0, s, rng=make_rng(0))
    assert np.allclose(energy_trajectory(tr)[:, 0], 1.0)


def test_band_errors_nan_for_empty_target_band():
    t = make_target("blob", SHAPE, 0)
    errs = band_errors(t, t)
    assert errs[0] == (0.0, 0.0) and np.isnan(errs[3][1])


def test_mismatched_config_rejected():
    s = linear_schedule(5)
    cs = make_concepts([("blob", 0, 1.0)], SHAPE)
    with pytest.raises(ValueError):
        multlfg_run(cs, GuidanceConfig.with_scale(1.0, 2), s)
    with pytest.raises(ValueError):
        multlfg_run([], GuidanceConfig.with_scale(1.0, 1), s)


def test_nonfinite_output_raises():
    s = linear_schedule(5)
    cs = make_concepts([("blob", 0, 1e300)], SHAPE)
    with pytest.raises(FloatingPointError):
        composite_run(cs, 1e10, s, rng=make_rng(0))


@pytest.mark.parametrize("seed", range(10))
def test_band_disjoint_pair_recovers_owned_bands(seed):
    """LL blob + HH checker: each owned band within 5% of its concept's target.

    Known failure on most seeds; see README "Known limitations".
    """
    s = linear_schedule(50)
    cs = make_concepts([("blob", seed, 1.0), ("checker", seed + 1000, 1.0)], (32, 32, 1))
    tr = multlfg_run(cs, GuidanceConfig.with_scale(1.0, 2, top_k=2), s, rng=make_rng(seed))
    ll = band_errors(tr.final_image, cs[0].target)[0][1]
    hh = band_errors(tr.final_image, cs[1].target)[3][1]
    assert ll <= 0.05 and hh <= 0.05, f"LL rel err {ll:.3f}, HH rel err {hh:.3f}"
