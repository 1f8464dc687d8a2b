"""Monte-Carlo experiment driver: scenario resolution, BER point and curve
estimation with stopping rules, required-Eb/N0 extraction and persistence.

Every unit of work draws from an RNG substream keyed by
(seed, point key, frame index), so results are bit-identical regardless of
worker count or scheduling.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel, detector, mapping, stcodes
from .fec import ConvCode, Interleaver, RATE_VALUES
from .stcodes import Scheme

SCHEMA_VERSION = 1

#: (scheme, eta) -> (constellation order, code rate)
SCENARIO_TABLE = {
    (Scheme.ALAMOUTI, 2): (16, "1/2"),
    (Scheme.VBLAST, 2): (4, "1/2"),
    (Scheme.LD, 2): (4, "1/2"),
    (Scheme.GOLDEN, 2): (4, "1/2"),
    (Scheme.ALAMOUTI, 4): (64, "2/3"),
    (Scheme.VBLAST, 4): (16, "1/2"),
    (Scheme.LD, 4): (16, "1/2"),
    (Scheme.GOLDEN, 4): (16, "1/2"),
    (Scheme.ALAMOUTI, 6): (256, "3/4"),
    (Scheme.VBLAST, 6): (64, "1/2"),
    (Scheme.LD, 6): (64, "1/2"),
    (Scheme.GOLDEN, 6): (64, "1/2"),
}

WORKERS_ENV = "MIMOLINK_WORKERS"


@dataclass(frozen=True)
class Scenario:
    scheme: Scheme
    eta: int
    modulation_order: int
    code_rate: str
    m_r: int
    alpha_db: tuple
    iterations: int = 3
    frame_info_bits: int = 9600
    seed: int = 0


def resolve_scenario(scheme, eta: int, m_r: int = 2, alpha_db=(0.0, 0.0),
                     iterations: int = 3, frame_info_bits: int = 9600,
                     seed: int = 0, modulation_order: int | None = None) -> Scenario:
    """Fill modulation and code rate for a (scheme, eta) pair."""
    scheme = Scheme(scheme)
    key = (scheme, eta)
    if key not in SCENARIO_TABLE:
        valid = sorted((s.value, e) for s, e in SCENARIO_TABLE)
        raise ValueError(f"no scenario for {scheme.value}, eta={eta}; "
                         f"valid pairs: {valid}")
    order, rate = SCENARIO_TABLE[key]
    if modulation_order is not None:
        order = modulation_order
    if m_r not in (2, 3):
        raise ValueError("rx_antennas must be 2 or 3")
    alpha_db = tuple(float(a) for a in alpha_db)
    if len(alpha_db) != m_r:
        raise ValueError(f"need {m_r} alpha values, got {len(alpha_db)}")
    sc = Scenario(scheme=scheme, eta=eta, modulation_order=order,
                  code_rate=rate, m_r=m_r, alpha_db=alpha_db,
                  iterations=iterations, frame_info_bits=frame_info_bits,
                  seed=seed)
    # equal-eta fairness: information bits per channel use must match eta
    d = stcodes.dispersion_set(scheme)
    b = int(np.log2(order))
    if modulation_order is None and abs(b * d.rate * RATE_VALUES[rate] - eta) > 1e-9:
        raise ValueError("scenario table inconsistent with eta = B * L * R")
    return sc


class LinkSetup:
    """Precomputed per-scenario objects shared by all frames."""

    def __init__(self, sc: Scenario):
        self.scenario = sc
        self.dset = stcodes.dispersion_set(sc.scheme)
        self.constellation = mapping.constellation(sc.modulation_order)
        self.code = ConvCode(sc.code_rate)
        self.n_coded = self.code.n_coded(sc.frame_info_bits)
        self.interleaver = Interleaver(self.n_coded, seed=sc.seed)
        self.alphas = channel.alpha_db_to_linear(sc.alpha_db)
        b = self.constellation.bits_per_symbol
        bits_per_use = b * self.dset.q
        self.n_uses = -(-self.n_coded // bits_per_use)
        self.n_pad = self.n_uses * bits_per_use - self.n_coded

    def simulate_frame(self, sigma2: float, rng: np.random.Generator,
                       per_iteration: bool = False):
        """One frame end to end; returns bit error count(s) for the frame.

        With ``per_iteration`` the count is an array over iterations.
        """
        sc = self.scenario
        info = rng.integers(0, 2, sc.frame_info_bits, dtype=np.uint8)
        coded = self.code.encode(info)
        tx_bits = self.interleaver.interleave(coded)
        if self.n_pad:
            tx_bits = np.concatenate(
                [tx_bits, np.zeros(self.n_pad, dtype=tx_bits.dtype)])
        syms = mapping.map_bits(tx_bits, self.constellation)
        s = np.empty((self.n_uses, 2 * self.dset.q))
        syms = syms.reshape(self.n_uses, self.dset.q)
        s[:, 0::2] = syms.real
        s[:, 1::2] = syms.imag
        h = channel.draw_channel(sc.m_r, self.dset.m_t, rng, size=self.n_uses)
        geq = channel.equivalent_channel(h, self.alphas, self.dset)
        y = channel.transmit(geq, s, sigma2, rng)
        out = detector.detect_frame(
            y, geq, sigma2, self.code, self.interleaver, self.constellation,
            self.n_pad, n_iters=sc.iterations, per_iteration=per_iteration)
        if per_iteration:
            return np.array([int(np.count_nonzero(bits != info)) for bits in out])
        return int(np.count_nonzero(out != info))


@dataclass
class StopRule:
    min_frame_errors: int = 100
    max_bits: int = 50_000_000

    def __post_init__(self):
        if self.min_frame_errors < 1:
            raise ValueError("min_frame_errors must be >= 1")


@dataclass
class SimPoint:
    ebn0_db: float
    bits: int = 0
    bit_errors: int = 0
    frames: int = 0
    frame_errors: int = 0
    upper_bound: bool = False
    iter_bit_errors: list | None = None

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def ci95(self) -> float:
        if not self.bits:
            return 0.0
        lo, hi = wilson_interval(self.bit_errors, self.bits)
        return (hi - lo) / 2.0

    def to_dict(self, scenario: Scenario | None = None) -> dict:
        rec = {
            "schema_version": SCHEMA_VERSION,
            "ebn0_db": self.ebn0_db,
            "bits": self.bits,
            "bit_errors": self.bit_errors,
            "frames": self.frames,
            "frame_errors": self.frame_errors,
            "ber": self.ber,
            "ci95": self.ci95,
            "upper_bound": self.upper_bound,
        }
        if self.iter_bit_errors is not None:
            rec["iter_bit_errors"] = list(self.iter_bit_errors)
        if scenario is not None:
            rec.update({
                "scheme": scenario.scheme.value,
                "eta": scenario.eta,
                "rx": scenario.m_r,
                "alpha_db": list(scenario.alpha_db),
                "iterations": scenario.iterations,
                "seed": scenario.seed,
            })
        return rec


@dataclass
class Curve:
    scenario: Scenario
    points: list = field(default_factory=list)


def wilson_interval(k: int, n: int, z: float = 1.959964) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z**2 / n
    center = (p + z**2 / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def _n_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(int(env), 1)
    return os.cpu_count() or 1


def _point_key(ebn0_db: float) -> int:
    return int(round(ebn0_db * 1000.0)) & 0x7FFFFFFF


def run_point(scenario: Scenario, ebn0_db: float, stop: StopRule,
              setup: LinkSetup | None = None,
              track_iterations: bool = False) -> SimPoint:
    """Simulate frames at one Eb/N0 until the stop rule fires.

    Frames are independent and processed in index order when counting, so
    the result does not depend on the worker pool.
    """
    setup = setup or LinkSetup(scenario)
    sigma2 = channel.ebn0_to_sigma2(ebn0_db, scenario.eta)
    pkey = _point_key(ebn0_db)
    k = scenario.frame_info_bits
    point = SimPoint(ebn0_db=ebn0_db)
    if track_iterations:
        point.iter_bit_errors = [0] * scenario.iterations

    def one_frame(idx: int):
        ss = np.random.SeedSequence(entropy=scenario.seed,
                                    spawn_key=(pkey, idx))
        rng = np.random.default_rng(ss)
        return setup.simulate_frame(sigma2, rng, per_iteration=track_iterations)

    workers = _n_workers()
    batch = max(4 * workers, 8)
    idx = 0
    done = False
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while not done:
            results = list(pool.map(one_frame, range(idx, idx + batch)))
            for res in results:
                if track_iterations:
                    errs = int(res[-1])
                    for i, e in enumerate(res):
                        point.iter_bit_errors[i] += int(e)
                else:
                    errs = int(res)
                point.frames += 1
                point.bits += k
                point.bit_errors += errs
                point.frame_errors += errs > 0
                if (point.frame_errors >= stop.min_frame_errors
                        or point.bits >= stop.max_bits):
                    done = True
                    break
            idx += batch
    point.upper_bound = point.bit_errors == 0
    return point


def sweep(scenario: Scenario, ebn0_grid, stop: StopRule,
          track_iterations: bool = False) -> Curve:
    """Run a strictly increasing Eb/N0 grid; deterministic given the seed."""
    grid = [float(x) for x in ebn0_grid]
    if not grid:
        raise ValueError("empty Eb/N0 grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("Eb/N0 grid must be strictly increasing")
    setup = LinkSetup(scenario)
    curve = Curve(scenario=scenario)
    for db in grid:
        curve.points.append(run_point(scenario, db, stop, setup=setup,
                                      track_iterations=track_iterations))
    return curve


@dataclass
class RequiredEbn0:
    reached: bool
    ebn0_db: float | None = None
    ci_db: float | None = None


def _effective_ber(p: SimPoint) -> float:
    # zero-error points interpolate through a half-count surrogate
    return p.ber if p.bit_errors else 0.5 / max(p.bits, 1)


def required_ebn0(curve: Curve | list, target_ber: float = 1e-4) -> RequiredEbn0:
    """Eb/N0 at which the curve crosses the target BER.

    Linear interpolation in (Eb/N0, log10 BER) between the bracketing grid
    points; the confidence half-width propagates the endpoints' 95% CIs.
    """
    points = curve.points if isinstance(curve, Curve) else list(curve)
    for lo, hi in zip(points, points[1:]):
        b_lo, b_hi = _effective_ber(lo), _effective_ber(hi)
        if b_lo >= target_ber >= b_hi and b_lo > b_hi:
            def interp(x_lo, x_hi):
                f = (np.log10(target_ber) - np.log10(x_lo)) / \
                    (np.log10(x_hi) - np.log10(x_lo))
                return lo.ebn0_db + f * (hi.ebn0_db - lo.ebn0_db)

            val = interp(b_lo, b_hi)
            shift_up = interp(max(b_lo + lo.ci95, 1e-300),
                              max(b_hi + hi.ci95, 1e-300))
            shift_dn = interp(max(b_lo - lo.ci95, b_lo / 10),
                              max(b_hi - hi.ci95, b_hi / 10))
            ci = abs(shift_up - shift_dn) / 2.0
            return RequiredEbn0(reached=True, ebn0_db=float(val), ci_db=float(ci))
    return RequiredEbn0(reached=False)


def append_jsonl(path: str, curve: Curve) -> None:
    with open(path, "a") as fh:
        for p in curve.points:
            fh.write(json.dumps(p.to_dict(curve.scenario)) + "\n")


CSV_COLUMNS = ["scheme", "eta", "rx", "alpha2_db", "ebn0_db", "bits",
               "bit_errors", "frames", "frame_errors", "ber", "ci95"]


def write_csv(path: str, curves: list[Curve]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for curve in curves:
            sc = curve.scenario
            alpha2 = sc.alpha_db[1] if len(sc.alpha_db) > 1 else 0.0
            for p in curve.points:
                w.writerow([sc.scheme.value, sc.eta, sc.m_r, alpha2,
                            p.ebn0_db, p.bits, p.bit_errors, p.frames,
                            p.frame_errors, f"{p.ber:.6e}", f"{p.ci95:.6e}"])


def load_points_jsonl(path: str) -> list[SimPoint]:
    points = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            points.append(SimPoint(
                ebn0_db=rec["ebn0_db"], bits=rec["bits"],
                bit_errors=rec["bit_errors"], frames=rec["frames"],
                frame_errors=rec["frame_errors"],
                upper_bound=rec.get("upper_bound", False)))
    points.sort(key=lambda p: p.ebn0_db)
    return points
