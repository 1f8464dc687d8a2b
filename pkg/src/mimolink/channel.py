"""Rayleigh block-fading channel with unequal per-receive-antenna powers.

All quantities live in the stacked real-valued domain: a complex channel
matrix H becomes a block matrix G of 2x2 rotation blocks, receive-side
power attenuation becomes a diagonal matrix B of amplitude factors, and
the end-to-end map from stacked symbols to stacked observations is
Geq = B @ G @ F.
"""

from __future__ import annotations

import numpy as np

from .stcodes import DispersionSet


def draw_channel(m_r: int, m_t: int, rng: np.random.Generator,
                 size: int | None = None) -> np.ndarray:
    """I.i.d. CN(0, 1) channel matrix, indexed [rx, tx].

    With ``size`` given, returns a batch of shape (size, m_r, m_t); the
    matrix is held constant over one space-time block (block fading).
    """
    shape = (m_r, m_t) if size is None else (size, m_r, m_t)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return np.sqrt(0.5) * (re + 1j * im)


def expand_g(h: np.ndarray, t: int) -> np.ndarray:
    """Real block expansion of H for a block of ``t`` symbol durations.

    Each (rx, tx) entry becomes a (2t, 2t) block-diagonal matrix of t
    copies of the rotation [[re, -im], [im, re]].  Batched over leading
    dimensions of ``h``.
    """
    h = np.asarray(h)
    *batch, m_r, m_t = h.shape
    g = np.zeros((*batch, 2 * m_r * t, 2 * m_t * t))
    for j in range(m_r):
        for i in range(m_t):
            re = h[..., j, i].real
            im = h[..., j, i].imag
            for tt in range(t):
                r = 2 * (j * t + tt)
                c = 2 * (i * t + tt)
                g[..., r, c] = re
                g[..., r, c + 1] = -im
                g[..., r + 1, c] = im
                g[..., r + 1, c + 1] = re
    return g


def build_b(alphas: np.ndarray, t: int) -> np.ndarray:
    """Diagonal attenuation matrix: sqrt(alpha_j) repeated over the 2t
    stacked rows of receive antenna j.  ``alphas`` are linear power ratios.
    """
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas < 0):
        raise ValueError("power attenuation factors must be >= 0")
    return np.diag(np.repeat(np.sqrt(alphas), 2 * t))


def alpha_db_to_linear(alpha_db) -> np.ndarray:
    return 10.0 ** (np.asarray(alpha_db, dtype=float) / 10.0)


def equivalent_channel(h: np.ndarray, alphas: np.ndarray,
                       d: DispersionSet) -> np.ndarray:
    """Geq = B G F for one channel matrix or a batch of them."""
    g = expand_g(h, d.t)
    b_diag = np.repeat(np.sqrt(np.asarray(alphas, dtype=float)), 2 * d.t)
    return (b_diag[..., :, None] * g) @ d.f


def transmit(geq: np.ndarray, s: np.ndarray, sigma2: float,
             rng: np.random.Generator) -> np.ndarray:
    """y = Geq s + w with i.i.d. N(0, sigma2) noise per real dimension.

    Batched: geq (..., 2*m_r*t, 2q), s (..., 2q).
    """
    y = np.einsum("...ij,...j->...i", geq, s)
    if sigma2 > 0:
        y = y + np.sqrt(sigma2) * rng.standard_normal(y.shape)
    return y


def ebn0_to_sigma2(ebn0_db: float, eta: float) -> float:
    """Noise variance per real dimension for a given Eb/N0.

    Reference received signal power per antenna at alpha = 1 is one, so
    N0 = 1 / (eta * Eb/N0) with eta information bits per channel use.
    """
    n0 = 1.0 / (eta * 10.0 ** (ebn0_db / 10.0))
    return n0 / 2.0
