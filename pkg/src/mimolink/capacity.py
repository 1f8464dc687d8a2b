"""Capacity and pairwise-error diagnostics of the equivalent real channel."""

from __future__ import annotations

import numpy as np

from . import channel, stcodes

#: symbol power per real dimension for unit-energy complex constellations
P0 = 0.5


def instantaneous_capacity(geq: np.ndarray, t: int, sigma2: float,
                           p0: float = P0) -> float | np.ndarray:
    """(1 / 2t) log2 det(I + (p0 / sigma2) Geq Geq^tr), batched.

    Computed from singular values of Geq in the log domain, which stays
    well conditioned at high SNR.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    geq = np.asarray(geq)
    if not np.all(np.isfinite(geq)):
        raise ValueError("non-finite channel matrix")
    sv = np.linalg.svd(geq, compute_uv=False)
    c = np.sum(np.log2(1.0 + (p0 / sigma2) * sv**2), axis=-1)
    return c / (2.0 * t)


def mean_capacity(scheme, snr_db: float, m_r: int, alphas,
                  n_trials: int, rng: np.random.Generator,
                  batch: int = 4096) -> tuple[float, float]:
    """Monte-Carlo mean of the instantaneous capacity.

    ``snr_db`` is the ratio of per-real-dimension symbol power to noise
    variance.  Returns (mean, standard error).
    """
    d = stcodes.dispersion_set(scheme)
    snr = 10.0 ** (snr_db / 10.0)
    sigma2 = P0 / snr
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_trials:
        n = min(batch, n_trials - done)
        h = channel.draw_channel(m_r, d.m_t, rng, size=n)
        geq = channel.equivalent_channel(h, alphas, d)
        c = instantaneous_capacity(geq, d.t, sigma2)
        total += float(np.sum(c))
        total_sq += float(np.sum(c**2))
        done += n
    mean = total / n_trials
    var = max(total_sq / n_trials - mean**2, 0.0)
    return mean, np.sqrt(var / n_trials)


def pep_determinant_bound(scheme, gamma_x: float, m_r: int, alphas,
                          n_trials: int, rng: np.random.Generator,
                          batch: int = 4096) -> tuple[float, float]:
    """Monte-Carlo estimate of (1/2) E[det(I + gamma_x Geq Geq^tr)^(-1/2)].

    Returns (estimate, standard error).
    """
    if gamma_x < 0:
        raise ValueError("gamma_x must be >= 0")
    d = stcodes.dispersion_set(scheme)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_trials:
        n = min(batch, n_trials - done)
        h = channel.draw_channel(m_r, d.m_t, rng, size=n)
        geq = channel.equivalent_channel(h, alphas, d)
        sv = np.linalg.svd(geq, compute_uv=False)
        logdet = np.sum(np.log(1.0 + gamma_x * sv**2), axis=-1)
        vals = 0.5 * np.exp(-0.5 * logdet)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals**2))
        done += n
    mean = total / n_trials
    var = max(total_sq / n_trials - mean**2, 0.0)
    return mean, np.sqrt(var / n_trials)
