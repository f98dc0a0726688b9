"""Two-quantum-number revival structure of Stark wave packets.

Under the second-order phase, a Stark packet with commensurate revival scales
``t_rev^(n) / t_rev^(nk) = r/s`` returns to its initial shape at
``t_rev = s t_rev^(n) = r t_rev^(nk)``.  At a commensurate fraction of that
time the packet is a finite sum of shifted copies of two classical-like
wave functions, one for each parity of the shifted quantum number
``x = n - nbar``.

Notation used throughout:

* sector ``rho`` is the parity of ``x``; ``"odd"`` means rho = 1;
* ``eps`` is the parity offset of k inside a sector: k = 2*kappa + eps,
  with eps = 0 when the absolute n is odd (k even) and eps = 1 otherwise;
* the quadratic phase collected at ``t_frac`` is ``exp(2 pi i theta)`` with
  ``theta = P x^2 - R P x kappa - eps R P x / 2`` where P = t_frac/t_rev^(n)
  and R = r/s.

All periodicity questions are settled in exact rational arithmetic; floats
appear only when the coefficient tables are evaluated.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._validation import as_fraction
from .exceptions import ConfigError, InvalidIndexError, ResolutionError
from .packet import PacketCoefficients, PhaseModel, frequencies
from .spectrum import StarkSpectrum

SECTORS = ("odd", "even")
NEGLIGIBLE = 1e-8
NODE_DEPTH = 1e-2
MIN_SAMPLES_PER_HALF_PERIOD = 64


@dataclass(frozen=True)
class FractionalTime:
    """A time given exactly as fractions of both revival scales.

    ``p1q1 = t_frac / t_rev^(n)`` and ``p12q12 = t_frac / t_rev^(nk)``.
    """

    p1q1: Fraction
    p12q12: Fraction
    nbar: int
    t_cl_n: float
    t_cl_k: float
    t_rev_n: float
    t_rev_nk: float

    def __post_init__(self):
        if self.p1q1 <= 0 or self.p12q12 <= 0:
            raise ConfigError("fractional time must be positive")

    @classmethod
    def from_revival_fraction(cls, fraction, ratio, scales):
        """``t_frac = fraction * t_rev`` where t_rev = s t_rev^(n) = r t_rev^(nk)."""
        fraction = as_fraction(fraction, "fraction")
        ratio = as_fraction(ratio)
        nbar = int(round(scales.center))
        if nbar != scales.center:
            raise ConfigError("Stark decomposition needs an integer expansion center")
        if scales.t_cl_k is None:
            raise ConfigError("Stark decomposition needs a nonzero field")
        if scales.exact is not None and "t_rev_nk" in scales.exact:
            exact_ratio = scales.exact["t_rev_n"] / scales.exact["t_rev_nk"]
            if exact_ratio != ratio:
                raise ConfigError(f"field gives t_rev^(n)/t_rev^(nk) = {exact_ratio}, not {ratio}")
        elif not math.isclose(scales.t_rev_n / scales.t_rev_nk, float(ratio), rel_tol=1e-9):
            raise ConfigError("time scales are not commensurate with the requested ratio")
        return cls(p1q1=fraction * ratio.denominator, p12q12=fraction * ratio.numerator,
                   nbar=nbar, t_cl_n=scales.t_cl_n, t_cl_k=scales.t_cl_k,
                   t_rev_n=scales.t_rev_n, t_rev_nk=scales.t_rev_nk)

    @property
    def ratio(self):
        return self.p12q12 / self.p1q1

    @property
    def time(self):
        return float(self.p1q1) * self.t_rev_n

    @property
    def global_phase_cycles(self):
        """t_frac / (2 T_cl^(k)) exactly; since t_rev^(nk) = nbar T_cl^(k) it equals p12/q12 * nbar / 2."""
        return self.p12q12 * self.nbar / 2

    def to_dict(self):
        return {"p1q1": str(self.p1q1), "p12q12": str(self.p12q12), "nbar": self.nbar,
                "t_frac": self.time}


def _eps_for(nbar, rho):
    """k offset inside sector rho: 0 when the absolute n = nbar + x is odd."""
    return 0 if (nbar + rho) % 2 == 1 else 1


def sector_name(rho):
    return "odd" if rho else "even"


def sector_rho(name):
    if name not in SECTORS:
        raise ConfigError(f"sector must be 'odd' or 'even', got {name!r}")
    return 1 if name == "odd" else 0


@dataclass(frozen=True)
class SectorPacket:
    """Amplitudes of one parity sector, relabeled to (x, kappa)."""

    name: str
    nbar: int
    eps: int
    indices: np.ndarray
    amplitudes: np.ndarray

    @property
    def x(self):
        return self.indices[:, 0] - self.nbar

    @property
    def kappa(self):
        return (self.indices[:, 1] - self.eps) // 2

    @property
    def norm(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def size(self):
        return self.indices.shape[0]

    def as_packet(self):
        """Renormalized stand-alone packet holding only this sector."""
        if self.size == 0:
            raise ConfigError(f"{self.name} sector is empty")
        amps = self.amplitudes / math.sqrt(self.norm)
        return PacketCoefficients(center=float(self.nbar), indices=self.indices, amplitudes=amps,
                                  shape="sector", center_k=0.0, metadata={"sector": self.name})


def split_parity(packet):
    """Split a Stark packet into its odd-x and even-x sectors."""
    if not packet.is_stark:
        raise ConfigError("split_parity needs a Stark packet")
    nbar = int(round(packet.center))
    if nbar != packet.center:
        raise ConfigError("parity split needs an integer center")
    out = []
    for name in SECTORS:
        rho = sector_rho(name)
        sel = (packet.indices[:, 0] - nbar) % 2 == rho
        eps = _eps_for(nbar, rho)
        idx = packet.indices[sel]
        if np.any((idx[:, 1] - eps) % 2):
            raise InvalidIndexError("parity violation inside a sector")
        out.append(SectorPacket(name, nbar, eps, idx, packet.amplitudes[sel]))
    return tuple(out)


def theta_phase(sector, x, kappa, t_frac, ratio, eps=None):
    """Quadratic phase theta(x, kappa) in cycles, reduced mod 1 (exact).

    ``eps`` defaults to 0 for the odd sector and 1 for the even sector, the
    assignment that holds for an even expansion center.
    """
    rho = sector_rho(sector)
    if x % 2 != rho:
        raise ConfigError(f"x={x} does not belong to the {sector} sector")
    eps = (0 if rho else 1) if eps is None else eps
    P = t_frac.p1q1 if isinstance(t_frac, FractionalTime) else as_fraction(t_frac, "p1/q1")
    RP = as_fraction(ratio) * P
    theta = P * x * x - RP * x * kappa - eps * RP * x / 2
    return theta - math.floor(theta)


def _theta_table(P, RP, rho, eps, m_count, k_count):
    """theta(2m + rho, kappa) for m < m_count, kappa < k_count, as exact Fractions."""
    return [[P * (2 * m + rho) ** 2 - RP * (2 * m + rho) * kap - eps * RP * (2 * m + rho) / 2
             for kap in range(k_count)] for m in range(m_count)]


def _divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


def _is_period(P, RP, rho, eps, dm, dk, block_m, block_k):
    for m in range(block_m):
        x0 = 2 * m + rho
        x1 = x0 + 2 * dm
        for kap in range(block_k):
            t0 = P * x0 * x0 - RP * x0 * kap - eps * RP * x0 / 2
            t1 = P * x1 * x1 - RP * x1 * (kap + dk) - eps * RP * x1 / 2
            if (t1 - t0).denominator != 1:
                return False
    return True


def sector_periods(t_frac, ratio, rho, eps):
    """Minimal (L1, L2): theta is invariant under m -> m + L1 and kappa -> kappa + L2 (x = 2m + rho).

    2 q1 s is always a period in m and q1 s in kappa, so every minimal
    period divides these bounds; each divisor is verified on a full block.
    """
    P = t_frac.p1q1
    RP = as_fraction(ratio) * P
    s = as_fraction(ratio).denominator
    bm, bk = 2 * P.denominator * s, P.denominator * s
    L1 = next(d for d in _divisors(bm) if _is_period(P, RP, rho, eps, d, 0, bm, bk))
    L2 = next(d for d in _divisors(bk) if _is_period(P, RP, rho, eps, 0, d, bm, bk))
    return L1, L2


@dataclass(frozen=True)
class Periods:
    l1: int
    l2: int
    l1_even: int
    l2_even: int

    def for_sector(self, name):
        return (self.l1, self.l2) if name == "odd" else (self.l1_even, self.l2_even)

    def as_tuple(self):
        return (self.l1, self.l2, self.l1_even, self.l2_even)


def minimal_periods(t_frac, ratio):
    """(l1, l2, l1', l2') for the odd and even sectors."""
    odd = sector_periods(t_frac, ratio, 1, _eps_for(t_frac.nbar, 1))
    even = sector_periods(t_frac, ratio, 0, _eps_for(t_frac.nbar, 0))
    return Periods(*odd, *even)


@dataclass(frozen=True)
class SectorExpansion:
    name: str
    eps: int
    l1: int
    l2: int
    table: np.ndarray  # shape (l1, l2), complex
    global_phase: complex = 1.0

    def shifts(self, sig1, sig2, t_frac):
        """(t1 - t, t2 - t) for coefficient (sig1, sig2)."""
        return sig1 * t_frac.t_cl_n / (2 * self.l1), sig2 * t_frac.t_cl_k / self.l2

    def significant(self, threshold=NEGLIGIBLE):
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(np.abs(self.table) > threshold))]

    def to_dict(self):
        return {"eps": self.eps, "l1": self.l1, "l2": self.l2,
                "table_re": self.table.real.tolist(), "table_im": self.table.imag.tolist(),
                "global_phase": [self.global_phase.real, self.global_phase.imag]}


@dataclass(frozen=True)
class SubsidiaryExpansion:
    t_frac: FractionalTime
    ratio: Fraction
    sectors: dict = field(default_factory=dict)

    @property
    def periods(self):
        o, e = self.sectors["odd"], self.sectors["even"]
        return Periods(o.l1, o.l2, e.l1, e.l2)

    def to_dict(self):
        return {"t_frac": self.t_frac.to_dict(), "ratio": str(self.ratio),
                "periods": list(self.periods.as_tuple()),
                "sectors": {k: v.to_dict() for k, v in self.sectors.items()}}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _coefficient_table(P, RP, rho, eps, l1, l2):
    """a[s1, s2] = (1/(l1 l2)) sum exp(2 pi i theta(x, kappa)) exp(2 pi i (s1 x/(2 l1) + s2 kappa/l2))."""
    theta = _theta_table(P, RP, rho, eps, l1, l2)
    cyc = np.array([[float(v - math.floor(v)) for v in row] for row in theta])
    x = 2 * np.arange(l1) + rho
    kap = np.arange(l2)
    s1 = np.arange(l1)
    s2 = np.arange(l2)
    f = np.exp(2j * np.pi * cyc)  # (m, kappa)
    left = np.exp(2j * np.pi * np.outer(s1, x) / (2 * l1))  # (s1, m)
    right = np.exp(2j * np.pi * np.outer(kap, s2) / l2)  # (kappa, s2)
    return left @ f @ right / (l1 * l2)


def expansion_coefficients(t_frac, ratio, periods=None):
    """Subsidiary-wave coefficient tables for both sectors at ``t_frac``."""
    ratio = as_fraction(ratio)
    periods = periods or minimal_periods(t_frac, ratio)
    P = t_frac.p1q1
    RP = ratio * P
    sectors = {}
    for name in SECTORS:
        rho = sector_rho(name)
        eps = _eps_for(t_frac.nbar, rho)
        l1, l2 = periods.for_sector(name)
        table = _coefficient_table(P, RP, rho, eps, l1, l2)
        cyc = t_frac.global_phase_cycles * eps
        gp = complex(np.exp(-2j * np.pi * float(cyc - math.floor(cyc))))
        sectors[name] = SectorExpansion(name, eps, l1, l2, table, gp)
    return SubsidiaryExpansion(t_frac=t_frac, ratio=ratio, sectors=sectors)


def classical_wave(sector, t1, t2, t_cl_n, t_cl_k):
    """Coefficient-level doubly periodic function psi_cl(t1, t2) of one sector."""
    cyc = sector.x * (t1 / t_cl_n) + sector.kappa * (t2 / t_cl_k)
    cyc = cyc - np.floor(cyc)
    return sector.amplitudes * np.exp(-2j * np.pi * cyc)


def reconstruct(packet, expansion, t):
    """Per-state amplitudes at ``t`` assembled from the subsidiary waves.

    Returns an array aligned with ``packet.indices``.
    """
    tf = expansion.t_frac
    if not math.isclose(t, tf.time, rel_tol=1e-12):
        raise ConfigError(f"reconstruction time {t} differs from the expansion time {tf.time}")
    out = np.zeros(packet.size, dtype=complex)
    for sec in split_parity(packet):
        ex = expansion.sectors[sec.name]
        acc = np.zeros(sec.size, dtype=complex)
        for s1, s2 in zip(*np.nonzero(ex.table)):
            d1, d2 = ex.shifts(s1, s2, tf)
            acc += ex.table[s1, s2] * classical_wave(sec, t + d1, t + d2, tf.t_cl_n, tf.t_cl_k)
        rows = _rows_of(packet, sec)
        out[rows] = ex.global_phase * acc
    return out


def _rows_of(packet, sector):
    lookup = {tuple(r): i for i, r in enumerate(packet.indices.tolist())}
    return np.array([lookup[tuple(r)] for r in sector.indices.tolist()], dtype=int)


def direct_amplitudes(spectrum, packet, scales, t):
    """c_nk exp(-i phi_nk(t)) under the second-order Stark phase."""
    nu = frequencies(spectrum, packet, PhaseModel.truncated(scales, 2))
    cyc = nu * t
    cyc = cyc - np.floor(cyc)
    return packet.amplitudes * np.exp(-2j * np.pi * cyc)


@dataclass(frozen=True)
class AntiperiodicityReport:
    times: np.ndarray
    odd_deviation: float
    even_deviation: float
    mixed_antiperiodic_deviation: float | None = None
    mixed_periodic_deviation: float | None = None

    def holds(self, tol=1e-12):
        return self.odd_deviation <= tol and self.even_deviation <= tol


def half_period_deviation(sector, times, t_cl_n, t_cl_k, sign):
    """max_t |psi(t + T_n/2, t) - sign * psi(t, t)| over coefficient vectors."""
    worst = 0.0
    for t in np.atleast_1d(times):
        a = classical_wave(sector, t + 0.5 * t_cl_n, t, t_cl_n, t_cl_k)
        b = classical_wave(sector, t, t, t_cl_n, t_cl_k)
        worst = max(worst, float(np.max(np.abs(a - sign * b))))
    return worst


def antiperiodicity_check(sectors, times, t_cl_n, t_cl_k, packet=None):
    """Odd sector flips sign and even sector repeats after half a radial period."""
    odd, even = sectors
    rep = dict(times=np.asarray(times),
               odd_deviation=half_period_deviation(odd, times, t_cl_n, t_cl_k, -1),
               even_deviation=half_period_deviation(even, times, t_cl_n, t_cl_k, +1))
    if packet is not None:
        # whole packet treated as one sector (eps taken per row)
        nbar = int(round(packet.center))
        eps = np.where((packet.indices[:, 0] % 2) == 1, 0, 1)
        whole = SectorPacket("mixed", nbar, eps, packet.indices, packet.amplitudes)
        rep["mixed_antiperiodic_deviation"] = half_period_deviation(whole, times, t_cl_n, t_cl_k, -1)
        rep["mixed_periodic_deviation"] = half_period_deviation(whole, times, t_cl_n, t_cl_k, +1)
    return AntiperiodicityReport(**rep)


@dataclass(frozen=True)
class NodeReport:
    times: np.ndarray
    depths: np.ndarray  # |A|^2 at the node divided by the window maximum
    spacing: float | None
    half_period: float

    @property
    def relative_spacing_error(self):
        if self.spacing is None:
            return None
        return abs(self.spacing - self.half_period) / self.half_period

    def spacing_matches(self, tol=0.05):
        err = self.relative_spacing_error
        return err is not None and err <= tol

    def to_dict(self):
        return {"times": self.times.tolist(), "depths": self.depths.tolist(),
                "spacing": self.spacing, "half_period": self.half_period,
                "relative_spacing_error": self.relative_spacing_error}


def node_structure(trace, t_cl_n, depth=NODE_DEPTH):
    """Deep minima of |A|^2 (at most ``depth`` times the window maximum) and their spacing."""
    t = trace.t
    y = trace.intensity
    half = 0.5 * t_cl_n
    dt = float(np.max(np.diff(t)))
    if dt > half / MIN_SAMPLES_PER_HALF_PERIOD:
        raise ResolutionError(f"node analysis needs >= {MIN_SAMPLES_PER_HALF_PERIOD} samples per T_n/2")
    top = float(y.max())
    i = np.nonzero((y[1:-1] < y[:-2]) & (y[1:-1] <= y[2:]))[0] + 1
    i = i[y[i] <= depth * top]
    times, depths = [], []
    for j in i:
        y0, y1, y2 = y[j - 1], y[j], y[j + 1]
        den = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den > 0 else 0.0
        times.append(t[j] + shift * (t[j + 1] - t[j]))
        depths.append(y1 / top)
    times = np.array(times)
    spacing = float(np.median(np.diff(times))) if times.size >= 2 else None
    return NodeReport(times=times, depths=np.array(depths), spacing=spacing, half_period=half)


def stark_example(nbar=24, ratio=Fraction(1, 12)):
    """Spectrum tuned so that t_rev^(n)/t_rev^(nk) = ratio, with its time scales."""
    from .spectrum import tune_field

    tuning = tune_field(nbar, ratio)
    spec = StarkSpectrum(tuning.field_exact)
    return spec, spec.time_scales(nbar)
