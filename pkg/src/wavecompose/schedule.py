"""Noise schedule and the noisy <-> clean conversions used by the samplers.

Timesteps are 0-based indices into the schedule arrays; ``alpha_bar[t]`` is
the cumulative product of ``1 - beta`` up to and including ``t``.
"""
from dataclasses import dataclass, field

import numpy as np

from .field import as_field, check_same_shape, gaussian_field


@dataclass(frozen=True)
class Schedule:
    beta: np.ndarray
    alpha_bar: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64).ravel()
        if beta.size < 1:
            raise ValueError("schedule needs at least one step")
        if np.any(beta <= 0) or np.any(beta >= 1):
            raise ValueError("beta values must lie in (0, 1)")
        beta.setflags(write=False)
        abar = np.cumprod(1.0 - beta)
        abar.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha_bar", abar)

    @property
    def num_steps(self):
        return self.beta.size

    def __len__(self):
        return self.beta.size

    def check_timestep(self, t):
        if not 0 <= t < self.num_steps:
            raise ValueError(f"timestep {t} outside [0, {self.num_steps})")

    def signal_noise(self, t):
        """(sqrt(abar_t), sqrt(1 - abar_t))."""
        self.check_timestep(t)
        abar = self.alpha_bar[t]
        return np.sqrt(abar), np.sqrt(1.0 - abar)


def linear_schedule(num_steps, beta_start=1e-4, beta_end=2e-2):
    if num_steps < 1:
        raise ValueError(f"num_steps must be >= 1, got {num_steps}")
    if not 0 < beta_start <= beta_end < 1:
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    return Schedule(np.linspace(beta_start, beta_end, num_steps))


def add_noise(x0, t, eps, sched):
    x0, eps = as_field(x0, "x0"), as_field(eps, "eps")
    check_same_shape(x0, eps)
    a, s = sched.signal_noise(t)
    return a * x0 + s * eps


def predict_clean(z_t, eps_hat, t, sched):
    """x0-prediction: ``(z_t - sqrt(1-abar_t) eps_hat) / sqrt(abar_t)``."""
    z_t, eps_hat = as_field(z_t, "z_t"), as_field(eps_hat, "eps_hat")
    check_same_shape(z_t, eps_hat)
    a, s = sched.signal_noise(t)
    if a == 0.0:
        raise ZeroDivisionError(f"alpha_bar[{t}] is 0; clean estimate undefined")
    return (z_t - s * eps_hat) / a


def predict_noise(z_t, x0_hat, t, sched):
    """Inverse of `predict_clean`: ``(z_t - sqrt(abar_t) x0_hat) / sqrt(1-abar_t)``."""
    z_t, x0_hat = as_field(z_t, "z_t"), as_field(x0_hat, "x0_hat")
    check_same_shape(z_t, x0_hat)
    a, s = sched.signal_noise(t)
    if s == 0.0:
        raise ZeroDivisionError(f"alpha_bar[{t}] is 1; noise estimate undefined")
    return (z_t - a * x0_hat) / s


def ddpm_step(z_t, eps_hat, t, sched, rng=None, deterministic=True):
    """One reverse step t -> t-1.

    deterministic: DDIM with eta = 0. Otherwise ancestral DDPM with mean
    ``(z_t - beta_t / sqrt(1-abar_t) * eps_hat) / sqrt(1-beta_t)`` and
    posterior variance ``beta_t (1-abar_{t-1}) / (1-abar_t)``; `rng` is then
    required. At t = 0 both modes return the clean estimate.
    """
    x0_hat = predict_clean(z_t, eps_hat, t, sched)
    if t == 0:
        return x0_hat
    z_t, eps_hat = as_field(z_t), as_field(eps_hat)
    abar_prev = sched.alpha_bar[t - 1]
    if deterministic:
        return np.sqrt(abar_prev) * x0_hat + np.sqrt(1.0 - abar_prev) * eps_hat
    if rng is None:
        raise ValueError("stochastic ddpm_step needs an rng")
    beta = sched.beta[t]
    abar = sched.alpha_bar[t]
    mean = (z_t - beta / np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(1.0 - beta)
    var = beta * (1.0 - abar_prev) / (1.0 - abar)
    return mean + np.sqrt(var) * gaussian_field(z_t.shape, rng)
