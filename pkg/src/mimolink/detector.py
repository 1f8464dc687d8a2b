"""Iterative MMSE / soft-PIC receiver.

Iteration 1 equalizes with an MMSE filter; later iterations subtract soft
symbol estimates of all interfering streams (parallel interference
cancellation) followed by matched/inverse filtering.  Per-stream effective
variances (residual noise plus inter-element interference) feed the
max-log demapper, whose LLRs loop through the SISO decoder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mapping
from .fec import LLR_CLAMP, ConvCode, Interleaver
from .mapping import Constellation

#: symbol power per real dimension (unit-energy complex constellation)
P0 = 0.5

_TINY = 1e-12
_HUGE = 1e30


@dataclass
class EqualizedStream:
    """Unbiased per-stream estimates of the stacked real symbol parts.

    Arrays are (n_uses, 2q): odd/even column pairs are the real and
    imaginary parts of each complex symbol.
    """

    s_hat: np.ndarray
    eff_var: np.ndarray
    mu: np.ndarray | None = None


def mmse_estimate(y: np.ndarray, geq: np.ndarray, sigma2: float,
                  p0: float = P0) -> EqualizedStream:
    """Batched MMSE filtering with bias correction.

    y: (n, 2*m_r*t); geq: (n, 2*m_r*t, 2q).  The filter assumes symbol
    power p0 per real dimension; estimates are unbiased (divided by the
    filter gain mu) and eff_var is the unbiased estimation error variance.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    y = np.atleast_2d(y)
    geq = np.asarray(geq)
    if geq.ndim == 2:
        geq = geq[None]
    n, n_obs, _ = geq.shape
    a = p0 * (geq @ geq.transpose(0, 2, 1))
    a[:, np.arange(n_obs), np.arange(n_obs)] += sigma2
    w = np.linalg.solve(a, geq)  # (n, n_obs, 2q) = A^-1 G
    mu = p0 * np.einsum("nip,nip->np", geq, w)
    mu = np.clip(mu, _TINY, 1.0 - _TINY)
    raw = p0 * np.einsum("nip,ni->np", w, y)
    s_hat = raw / mu
    eff_var = p0 * (1.0 - mu) / mu
    return EqualizedStream(s_hat=s_hat, eff_var=eff_var, mu=mu)


def pic_estimate(y: np.ndarray, geq: np.ndarray, soft: np.ndarray,
                 resid_var: np.ndarray, sigma2: float) -> EqualizedStream:
    """Soft parallel interference cancellation with inverse filtering.

    For each stream p: subtract the soft estimates of all other streams,
    then project on g_p and divide by ||g_p||^2.  ``soft`` and
    ``resid_var`` are (n, 2q): soft symbol means and residual variances
    per real dimension from the soft mapper.
    """
    y = np.atleast_2d(y)
    soft = np.atleast_2d(soft)
    resid_var = np.atleast_2d(resid_var)
    geq = np.asarray(geq)
    if geq.ndim == 2:
        geq = geq[None]
    r = geq.transpose(0, 2, 1) @ geq  # (n, 2q, 2q)
    diag = np.einsum("npp->np", r).copy()
    gty = np.einsum("nip,ni->np", geq, y)
    # g_p^tr y - sum_{p' != p} R[p, p'] soft[p']
    interference = np.einsum("npq,nq->np", r, soft) - diag * soft
    ok = diag > _TINY
    safe = np.where(ok, diag, 1.0)
    s_hat = np.where(ok, (gty - interference) / safe, 0.0)
    # residual IEI power: sum_{p' != p} R[p, p']^2 v[p'] / ||g_p||^4
    r2 = r**2
    iei = np.einsum("npq,nq->np", r2, resid_var) - diag**2 * resid_var
    eff_var = np.where(ok, sigma2 / safe + iei / safe**2, _HUGE)
    return EqualizedStream(s_hat=s_hat, eff_var=eff_var)


def _stream_llrs(eq: EqualizedStream, c: Constellation) -> np.ndarray:
    """Pair odd/even streams into complex estimates and demap.

    Returns the flat coded-bit LLR sequence in transmit order
    (channel use, symbol within use, bit within symbol).
    """
    s_c = eq.s_hat[:, 0::2] + 1j * eq.s_hat[:, 1::2]
    v_c = eq.eff_var[:, 0::2] + eq.eff_var[:, 1::2]
    llrs = mapping.demap_llr(s_c.ravel(), np.minimum(v_c.ravel(), _HUGE), c)
    return llrs.ravel()


def detect_frame(y: np.ndarray, geq: np.ndarray, sigma2: float,
                 code: ConvCode, interleaver: Interleaver,
                 c: Constellation, n_pad: int, n_iters: int = 3,
                 per_iteration: bool = False):
    """Run the full iterative receiver on one coded frame.

    y: (n_uses, 2*m_r*t) observations; geq: matching equivalent channels.
    ``n_pad`` trailing zero bits were appended after interleaving to fill
    the last channel use.  Returns hard info bits, or a list of them per
    iteration when ``per_iteration`` is set.
    """
    if n_iters < 1:
        raise ValueError("need at least one iteration")
    n_coded = interleaver.length
    decisions = []
    eq = mmse_estimate(y, geq, sigma2)
    for it in range(n_iters):
        if it > 0:
            ext_il = interleaver.interleave(extrinsic)
            if n_pad:
                # padded positions carry known zero bits
                ext_il = np.concatenate([ext_il, np.full(n_pad, -LLR_CLAMP)])
            b = c.bits_per_symbol
            means, vi, vq = mapping.soft_map(ext_il.reshape(-1, b), c)
            n_uses = geq.shape[0]
            soft = np.empty((n_uses, 2 * (means.size // n_uses)))
            soft[:, 0::2] = means.real.reshape(n_uses, -1)
            soft[:, 1::2] = means.imag.reshape(n_uses, -1)
            resid = np.empty_like(soft)
            resid[:, 0::2] = vi.reshape(n_uses, -1)
            resid[:, 1::2] = vq.reshape(n_uses, -1)
            eq = pic_estimate(y, geq, soft, resid, sigma2)
        llrs = _stream_llrs(eq, c)[:n_coded]
        extrinsic, info_bits, _ = code.siso_decode(interleaver.deinterleave(llrs))
        if per_iteration:
            decisions.append(info_bits)
    return decisions if per_iteration else info_bits
