"""Outer convolutional code: DVB-T (133, 171) mother code with puncturing,
random bit interleaver and a Max-Log-MAP soft-in/soft-out decoder.

LLR convention throughout: log(P(bit = 1) / P(bit = 0)).
"""

from __future__ import annotations

import numpy as np
from numba import njit

CONSTRAINT_LENGTH = 7
GENERATORS = (0o133, 0o171)
N_STATES = 64
TAIL_BITS = CONSTRAINT_LENGTH - 1

#: magnitude beyond which LLRs are treated as certain
LLR_CLAMP = 50.0

_NEG = -1.0e30

# serialized puncture masks over (g1, g2) output pairs; X=10/Y=11 for 2/3
# and X=101/Y=110 for 3/4, as in DVB-T
PUNCTURE_MASKS = {
    "1/2": np.array([1, 1], dtype=bool),
    "2/3": np.array([1, 1, 0, 1], dtype=bool),
    "3/4": np.array([1, 1, 0, 1, 1, 0], dtype=bool),
}

RATE_VALUES = {"1/2": 0.5, "2/3": 2.0 / 3.0, "3/4": 0.75}


def _build_trellis():
    next_state = np.zeros((N_STATES, 2), dtype=np.int64)
    out_bits = np.zeros((N_STATES, 2, 2), dtype=np.float64)
    for s in range(N_STATES):
        for u in (0, 1):
            reg = (u << 6) | s  # newest bit in the MSB
            next_state[s, u] = reg >> 1
            for gi, g in enumerate(GENERATORS):
                out_bits[s, u, gi] = bin(reg & g).count("1") & 1
    return next_state, out_bits


_NEXT_STATE, _OUT_BITS = _build_trellis()


@njit(cache=True, nogil=True)
def _bcjr_maxlog(llrs, next_state, out_bits):
    """Max-Log-MAP forward-backward pass over the 64-state trellis.

    ``llrs``: (n_steps, 2) channel LLRs of the two mother-code output bits.
    Assumes the encoder starts and terminates in the zero state.
    Returns (app_coded (n_steps, 2), app_info (n_steps,)) a-posteriori LLRs.
    """
    n = llrs.shape[0]
    alpha = np.full((n + 1, N_STATES), _NEG)
    alpha[0, 0] = 0.0
    for k in range(n):
        l0 = llrs[k, 0]
        l1 = llrs[k, 1]
        mx = _NEG
        for ns in range(N_STATES):
            u = ns >> 5
            s0 = (ns & 31) << 1
            best = _NEG
            for ps in (s0, s0 + 1):
                g = out_bits[ps, u, 0] * l0 + out_bits[ps, u, 1] * l1
                v = alpha[k, ps] + g
                if v > best:
                    best = v
            alpha[k + 1, ns] = best
            if best > mx:
                mx = best
        for ns in range(N_STATES):
            alpha[k + 1, ns] -= mx

    beta = np.full((n + 1, N_STATES), _NEG)
    beta[n, 0] = 0.0
    for k in range(n - 1, -1, -1):
        l0 = llrs[k, 0]
        l1 = llrs[k, 1]
        mx = _NEG
        for s in range(N_STATES):
            best = _NEG
            for u in range(2):
                g = out_bits[s, u, 0] * l0 + out_bits[s, u, 1] * l1
                v = g + beta[k + 1, next_state[s, u]]
                if v > best:
                    best = v
            beta[k, s] = best
            if best > mx:
                mx = best
        for s in range(N_STATES):
            beta[k, s] -= mx

    app_coded = np.empty((n, 2))
    app_info = np.empty(n)
    for k in range(n):
        l0 = llrs[k, 0]
        l1 = llrs[k, 1]
        m0_1 = m0_0 = m1_1 = m1_0 = mu_1 = mu_0 = _NEG
        for s in range(N_STATES):
            a = alpha[k, s]
            if a <= _NEG / 2:
                continue
            for u in range(2):
                c0 = out_bits[s, u, 0]
                c1 = out_bits[s, u, 1]
                v = a + c0 * l0 + c1 * l1 + beta[k + 1, next_state[s, u]]
                if c0 > 0.5:
                    if v > m0_1:
                        m0_1 = v
                else:
                    if v > m0_0:
                        m0_0 = v
                if c1 > 0.5:
                    if v > m1_1:
                        m1_1 = v
                else:
                    if v > m1_0:
                        m1_0 = v
                if u == 1:
                    if v > mu_1:
                        mu_1 = v
                else:
                    if v > mu_0:
                        mu_0 = v
        app_coded[k, 0] = m0_1 - m0_0
        app_coded[k, 1] = m1_1 - m1_0
        app_info[k] = mu_1 - mu_0
    return app_coded, app_info


class ConvCode:
    """Rate-R punctured convolutional code over the (133, 171) mother code."""

    def __init__(self, rate: str = "1/2"):
        if rate not in PUNCTURE_MASKS:
            raise ValueError(f"rate must be one of {sorted(PUNCTURE_MASKS)}")
        self.rate_name = rate
        self.rate = RATE_VALUES[rate]
        self.mask = PUNCTURE_MASKS[rate]
        self.period_steps = len(self.mask) // 2

    def n_steps(self, n_info: int) -> int:
        n = n_info + TAIL_BITS
        if n % self.period_steps:
            raise ValueError(
                f"frame length {n_info} + {TAIL_BITS} tail bits must be a "
                f"multiple of {self.period_steps} at rate {self.rate_name}")
        return n

    def n_coded(self, n_info: int) -> int:
        n = self.n_steps(n_info)
        return int(np.count_nonzero(self.mask)) * (n // self.period_steps)

    def encode(self, info_bits: np.ndarray) -> np.ndarray:
        """Encode one frame (tail-terminated) and puncture."""
        info_bits = np.asarray(info_bits, dtype=np.uint8)
        n = self.n_steps(info_bits.size)
        bits = np.concatenate([info_bits, np.zeros(TAIL_BITS, dtype=np.uint8)])
        mother = np.empty(2 * n, dtype=np.uint8)
        for gi, g in enumerate(GENERATORS):
            taps = np.array([(g >> (6 - i)) & 1 for i in range(7)], dtype=np.uint8)
            mother[gi::2] = np.convolve(bits, taps)[:n] % 2
        keep = np.tile(self.mask, n // self.period_steps)
        return mother[keep]

    def siso_decode(self, coded_llrs: np.ndarray):
        """Decode transmitted-domain LLRs of one frame.

        Returns (extrinsic coded LLRs in the transmitted domain,
        hard info bits, a-posteriori info LLRs).
        """
        coded_llrs = np.asarray(coded_llrs, dtype=float)
        n_tx = coded_llrs.size
        kept = int(np.count_nonzero(self.mask))
        if n_tx % kept:
            raise ValueError("coded LLR length does not match the puncturing")
        n = (n_tx // kept) * self.period_steps
        keep = np.tile(self.mask, n // self.period_steps)
        mother = np.zeros(2 * n)  # punctured positions decode as erasures
        mother[keep] = np.clip(coded_llrs, -LLR_CLAMP, LLR_CLAMP)
        app_coded, app_info = _bcjr_maxlog(
            mother.reshape(n, 2), _NEXT_STATE, _OUT_BITS)
        extrinsic = app_coded.ravel() - mother
        n_info = n - TAIL_BITS
        info_bits = (app_info[:n_info] > 0).astype(np.uint8)
        return extrinsic[keep], info_bits, app_info[:n_info]


class Interleaver:
    """Seeded uniform random permutation of one coded frame."""

    def __init__(self, length: int, seed: int):
        self.length = length
        self.perm = np.random.default_rng(seed).permutation(length)

    def interleave(self, frame: np.ndarray) -> np.ndarray:
        frame = np.asarray(frame)
        if frame.size != self.length:
            raise ValueError("frame length mismatch")
        return frame[self.perm]

    def deinterleave(self, frame: np.ndarray) -> np.ndarray:
        frame = np.asarray(frame)
        if frame.size != self.length:
            raise ValueError("frame length mismatch")
        out = np.empty_like(frame)
        out[self.perm] = frame
        return out
