"""Gray-labeled square QAM: bit mapping, max-log LLR demapping and the
soft mapper turning extrinsic bit LLRs back into expected symbols.

Labels are B-bit integers, MSB first; the first B/2 bits select the
in-phase level, the last B/2 the quadrature level, each axis an
independent reflected Gray code.  Constellations have unit average energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fec import LLR_CLAMP


def _gray_decode(v: np.ndarray) -> np.ndarray:
    """Gray code -> level index (inverse of l ^ (l >> 1))."""
    v = np.asarray(v).copy()
    shift = 1
    while shift < 16:
        v ^= v >> shift
        shift <<= 1
    return v


@dataclass(frozen=True)
class Constellation:
    order: int
    bits_per_symbol: int
    points: np.ndarray        # (order,) complex, indexed by label
    axis_levels: np.ndarray   # (2^(B/2),) amplitudes in level order
    axis_labels: np.ndarray   # (2^(B/2),) Gray label of each level
    axis_bits: np.ndarray     # (2^(B/2), B/2) label bits of each level
    scale: float

    @property
    def half_bits(self) -> int:
        return self.bits_per_symbol // 2

    def __post_init__(self):
        for a in (self.points, self.axis_levels, self.axis_labels, self.axis_bits):
            a.setflags(write=False)


@lru_cache(maxsize=None)
def constellation(order: int) -> Constellation:
    """Unit-energy Gray-labeled QAM of the given order (4/16/64/256)."""
    if order not in (4, 16, 64, 256):
        raise ValueError("order must be 4, 16, 64 or 256")
    b = int(np.log2(order))
    h = b // 2
    n_lev = 1 << h
    levels = np.arange(n_lev)
    amps = 2.0 * levels - (n_lev - 1)
    # average energy per axis is (order - 1) / 3 for square QAM
    scale = 1.0 / np.sqrt(2.0 * (n_lev**2 - 1) / 3.0)
    amps = amps * scale
    labels = levels ^ (levels >> 1)
    bits = ((labels[:, None] >> np.arange(h - 1, -1, -1)[None, :]) & 1)

    v = np.arange(order)
    li = _gray_decode(v >> h)
    lq = _gray_decode(v & (n_lev - 1))
    points = amps[li] + 1j * amps[lq]
    return Constellation(order=order, bits_per_symbol=b, points=points,
                         axis_levels=amps, axis_labels=labels,
                         axis_bits=bits.astype(np.uint8), scale=scale)


def map_bits(bits: np.ndarray, c: Constellation) -> np.ndarray:
    """Map a flat bit array (length divisible by B) to complex symbols."""
    bits = np.asarray(bits)
    b = c.bits_per_symbol
    if bits.size % b:
        raise ValueError(f"bit count {bits.size} not divisible by {b}")
    groups = bits.reshape(-1, b).astype(np.int64)
    labels = groups @ (1 << np.arange(b - 1, -1, -1))
    return c.points[labels]


def _axis_llrs(x: np.ndarray, eff_var: np.ndarray, c: Constellation) -> np.ndarray:
    """Max-log LLRs of one axis's bits from the real coordinate x."""
    d2 = (x[:, None] - c.axis_levels[None, :]) ** 2  # (n, n_lev)
    h = c.half_bits
    llrs = np.empty((x.size, h))
    for k in range(h):
        one = c.axis_bits[:, k].astype(bool)
        min1 = d2[:, one].min(axis=1)
        min0 = d2[:, ~one].min(axis=1)
        llrs[:, k] = (min0 - min1) / eff_var
    return llrs


def demap_llr(s_hat: np.ndarray, eff_var, c: Constellation) -> np.ndarray:
    """Max-log LLRs, shape (n, B), from equalized symbols.

    ``eff_var`` is the total (complex) Gaussian noise variance per symbol,
    scalar or per-symbol.  For square Gray QAM the exact max-log metric
    decomposes per axis.
    """
    s_hat = np.atleast_1d(np.asarray(s_hat, dtype=complex))
    eff_var = np.broadcast_to(np.asarray(eff_var, dtype=float), s_hat.shape)
    return np.concatenate(
        [_axis_llrs(s_hat.real, eff_var, c), _axis_llrs(s_hat.imag, eff_var, c)],
        axis=1)


def _axis_posterior(llrs: np.ndarray, c: Constellation):
    """Posterior mean and variance of one axis under independent bit LLRs."""
    p1 = 1.0 / (1.0 + np.exp(-np.clip(llrs, -LLR_CLAMP, LLR_CLAMP)))
    prob = np.ones((llrs.shape[0], c.axis_levels.size))
    for k in range(c.half_bits):
        bit = c.axis_bits[:, k].astype(float)[None, :]
        prob *= bit * p1[:, k:k + 1] + (1.0 - bit) * (1.0 - p1[:, k:k + 1])
    mean = prob @ c.axis_levels
    var = prob @ c.axis_levels**2 - mean**2
    return mean, np.maximum(var, 0.0), prob


def soft_map(llrs: np.ndarray, c: Constellation):
    """Expected symbols and per-axis residual variances from bit LLRs.

    ``llrs`` has shape (n, B).  Returns (means (n,) complex,
    var_i (n,), var_q (n,)).
    """
    llrs = np.atleast_2d(np.asarray(llrs, dtype=float))
    h = c.half_bits
    mi, vi, _ = _axis_posterior(llrs[:, :h], c)
    mq, vq, _ = _axis_posterior(llrs[:, h:], c)
    return mi + 1j * mq, vi, vq


def symbol_posteriors(llrs: np.ndarray, c: Constellation) -> np.ndarray:
    """Full per-point posteriors (n, order) implied by independent bit LLRs."""
    llrs = np.atleast_2d(np.asarray(llrs, dtype=float))
    h = c.half_bits
    _, _, pi = _axis_posterior(llrs[:, :h], c)
    _, _, pq = _axis_posterior(llrs[:, h:], c)
    n_lev = c.axis_levels.size
    # point label = (i_label << h) | q_label; reorder axis probs by label
    order_i = np.empty(n_lev, dtype=int)
    order_i[c.axis_labels] = np.arange(n_lev)
    pi = pi[:, order_i]
    pq = pq[:, order_i]
    return (pi[:, :, None] * pq[:, None, :]).reshape(llrs.shape[0], -1)
