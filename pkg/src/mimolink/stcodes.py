"""Space-time block codes for two transmit antennas.

Each scheme is described by its dispersion matrices: the codeword is a
linear combination of per-symbol basis matrices weighted by the real and
imaginary parts of the data symbols.  The same information is exposed as a
real matrix F mapping the stacked real symbol vector to the stacked real
transmit vector, which is what the equalizer works with.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

#: golden ratio used by the Golden code
THETA = (1.0 + np.sqrt(5.0)) / 2.0


class Scheme(str, Enum):
    ALAMOUTI = "alamouti"
    VBLAST = "vblast"
    LD = "ld"
    GOLDEN = "golden"


def _raw_codeword(scheme: Scheme, s: np.ndarray) -> np.ndarray:
    """Published codeword matrix (m_t, t) for symbol vector ``s``.

    Includes each code's internal scaling (1/sqrt(2) for LD, 1/sqrt(5) for
    the Golden code) but not the per-antenna power normalization.
    """
    if scheme is Scheme.ALAMOUTI:
        s1, s2 = s
        return np.array([[s1, s2], [-np.conj(s2), np.conj(s1)]])
    if scheme is Scheme.VBLAST:
        s1, s2 = s
        return np.array([[s1], [s2]])
    if scheme is Scheme.LD:
        s1, s2, s3, s4 = s
        return np.array([[s1 + s3, s2 - s4], [s2 + s4, s1 - s3]]) / np.sqrt(2.0)
    if scheme is Scheme.GOLDEN:
        s1, s2, s3, s4 = s
        theta = THETA
        theta_b = 1.0 - theta
        beta = 1.0 + 1j * (1.0 - theta)
        beta_b = 1.0 + 1j * (1.0 - theta_b)
        mu = 1j
        return np.array(
            [
                [beta * (s1 + theta * s2), beta * (s3 + theta * s4)],
                [mu * beta_b * (s3 + theta_b * s4), beta_b * (s1 + theta_b * s2)],
            ]
        ) / np.sqrt(5.0)
    raise ValueError(f"unknown scheme: {scheme!r}")


_PARAMS = {
    # scheme: (m_t, t, q)
    Scheme.ALAMOUTI: (2, 2, 2),
    Scheme.VBLAST: (2, 1, 2),
    Scheme.LD: (2, 2, 4),
    Scheme.GOLDEN: (2, 2, 4),
}


@dataclass(frozen=True)
class DispersionSet:
    """A scheme's dispersion matrices and derived real mapping.

    ``u[q]`` weights the real part of symbol q, ``v[q]`` (times j) its
    imaginary part.  ``f`` maps the stacked real symbol vector (length 2q)
    to the stacked real transmit vector (length 2*m_t*t) and already
    includes ``norm_scale``.
    """

    scheme: Scheme
    m_t: int
    t: int
    q: int
    u: np.ndarray  # (q, m_t, t) complex
    v: np.ndarray  # (q, m_t, t) complex
    f: np.ndarray  # (2*m_t*t, 2*q) real
    norm_scale: float

    @property
    def rate(self) -> float:
        return self.q / self.t

    def __post_init__(self):
        self.u.setflags(write=False)
        self.v.setflags(write=False)
        self.f.setflags(write=False)


def stack_symbols(s: np.ndarray) -> np.ndarray:
    """Stack complex vector as [s1_re, s1_im, s2_re, s2_im, ...]."""
    s = np.asarray(s)
    return np.column_stack([s.real, s.imag]).ravel()


def unstack_symbols(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`stack_symbols`."""
    x = np.asarray(x, dtype=float)
    return x[0::2] + 1j * x[1::2]


def stack_codeword(x_mat: np.ndarray) -> np.ndarray:
    """Row-wise real stacking of an (m_t, t) codeword: antenna-major,
    time within antenna, real/imag innermost."""
    flat = np.asarray(x_mat).ravel()
    return np.column_stack([flat.real, flat.imag]).ravel()


def dispersion_set(scheme: Scheme | str) -> DispersionSet:
    """Build the dispersion description of one of the four schemes."""
    scheme = Scheme(scheme)
    m_t, t, q = _PARAMS[scheme]
    u = np.empty((q, m_t, t), dtype=complex)
    v = np.empty((q, m_t, t), dtype=complex)
    for k in range(q):
        e = np.zeros(q, dtype=complex)
        e[k] = 1.0
        u[k] = _raw_codeword(scheme, e)
        v[k] = _raw_codeword(scheme, 1j * e) / 1j
    # equal total transmit power across schemes: amplitude 1/sqrt(m_t)
    norm_scale = 1.0 / np.sqrt(m_t)

    f = np.zeros((2 * m_t * t, 2 * q))
    for k in range(q):
        for m in range(m_t):
            for tt in range(t):
                r = 2 * (m * t + tt)
                f[r, 2 * k] = u[k, m, tt].real
                f[r, 2 * k + 1] = -v[k, m, tt].imag
                f[r + 1, 2 * k] = u[k, m, tt].imag
                f[r + 1, 2 * k + 1] = v[k, m, tt].real
    f *= norm_scale
    return DispersionSet(scheme=scheme, m_t=m_t, t=t, q=q, u=u, v=v, f=f,
                         norm_scale=norm_scale)


def encode(d: DispersionSet, s: np.ndarray) -> np.ndarray:
    """Codeword (m_t, t) for one block of q complex symbols."""
    s = np.asarray(s, dtype=complex)
    if s.shape != (d.q,):
        raise ValueError(f"expected {d.q} symbols, got shape {s.shape}")
    x = np.tensordot(s.real, d.u, axes=1) + 1j * np.tensordot(s.imag, d.v, axes=1)
    return d.norm_scale * x
