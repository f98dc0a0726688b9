"""Coherent superpositions, their phase evolution and autocorrelation traces.

A packet is a finite list of eigenstate indices with complex amplitudes.
Because the basis is orthonormal, the autocorrelation reduces to

    A(t) = sum_j |c_j|^2 exp(-i phi_j(t)),

where ``phi_j`` is either the exact phase ``E_j t`` or its Taylor expansion
about the packet center truncated at order 1, 2 or 3.  Every phase is linear
in t, so each state is summarized by a single frequency in cycles per atomic
unit of time; the fractional part of ``nu_j t`` is taken before
exponentiation to keep long traces accurate.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import simpson

from ._validation import check_positive, check_time_grid
from .exceptions import ConfigError, InvalidIndexError, ResolutionError, UndefinedScaleError
from .radial import RadialGrid, radial_derivative, radial_function, radial_functions
from .spectrum import (
    HydrogenSpectrum,
    QuantumDefectSpectrum,
    StarkSpectrum,
    TimeScaleSet,
    spectrum_from_dict,
)
from .units import time_to_si

NORM_TOL = 1e-12
DEFAULT_SIGMA = 2.5
SAMPLES_PER_PERIOD = 2048


@dataclass(frozen=True)
class PacketCoefficients:
    """Indices (shape ``(N, d)``, d = 1 or 2) and complex amplitudes."""

    center: float
    indices: np.ndarray
    amplitudes: np.ndarray
    shape: str = "gaussian"
    width: tuple = ()
    center_k: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim == 1:
            idx = idx[:, None]
        amp = np.asarray(self.amplitudes, dtype=complex)
        if idx.shape[0] != amp.shape[0] or idx.shape[0] == 0:
            raise ConfigError("packet needs matching, non-empty index and amplitude arrays")
        norm = float(np.sum(np.abs(amp) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ConfigError(f"packet amplitudes are not normalized (sum |c|^2 = {norm!r})")
        if idx.shape[1] == 2:
            n, k = idx[:, 0], idx[:, 1]
            if np.any(np.abs(k) > n - 1) or np.any((n + k) % 2 != 1):
                raise InvalidIndexError("Stark packet violates |k| <= n-1 or the parity rule")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def size(self):
        return self.indices.shape[0]

    @property
    def weights(self):
        return np.abs(self.amplitudes) ** 2

    @property
    def is_stark(self):
        return self.indices.shape[1] == 2

    def index_of(self, index):
        key = np.atleast_1d(np.asarray(index, dtype=np.int64))
        hits = np.nonzero(np.all(self.indices == key, axis=1))[0]
        if hits.size == 0:
            raise InvalidIndexError(f"index {tuple(key)} is not in the packet")
        return int(hits[0])

    def to_dict(self):
        return {
            "center": self.center,
            "center_k": self.center_k,
            "shape": self.shape,
            "width": list(self.width),
            "indices": self.indices.tolist(),
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data):
        amps = np.array([complex(re, im) for re, im in data["amplitudes"]])
        return cls(center=float(data["center"]), indices=np.array(data["indices"]),
                   amplitudes=amps, shape=data.get("shape", "gaussian"),
                   width=tuple(data.get("width", ())), center_k=data.get("center_k"),
                   metadata=dict(data.get("metadata", {})))

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _gaussian_amplitudes(log_w):
    """sqrt of normalized exp(log_w), computed stably; zero weights are dropped by the caller."""
    log_w = np.asarray(log_w, dtype=float)
    w = np.exp(log_w - log_w.max())
    w /= math.fsum(w)
    return np.sqrt(w)


def _normalize(amps):
    amps = np.asarray(amps, dtype=complex)
    norm = math.sqrt(math.fsum(np.abs(amps) ** 2))
    return amps / norm


def build_packet(spectrum, nbar, sigma=DEFAULT_SIGMA, window=None, *, sigma_k=None, window_k=None):
    """Gaussian packet with |c_n|^2 proportional to exp(-(n - nbar)^2 / (2 sigma^2)).

    For a :class:`StarkSpectrum` the profile is a product of Gaussians in
    ``n - nbar`` and ``k`` (centered on k = 0) restricted to parity-valid
    pairs.  ``window`` defaults to ``ceil(5 sigma)``; states whose weight
    underflows to zero are omitted.
    """
    check_positive(nbar, "nbar")
    check_positive(sigma, "sigma")
    window = int(math.ceil(5 * sigma)) if window is None else int(window)
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    n_lo, n_hi = math.ceil(nbar - window), math.floor(nbar + window)
    ns = np.arange(n_lo, n_hi + 1)
    if ns.size == 0:
        raise ConfigError("empty packet window")

    if isinstance(spectrum, StarkSpectrum):
        sigma_k = sigma if sigma_k is None else sigma_k
        check_positive(sigma_k, "sigma_k")
        window_k = int(math.ceil(5 * sigma_k)) if window_k is None else int(window_k)
        pairs = [(n, k) for n in ns for k in range(-window_k, window_k + 1)
                 if StarkSpectrum.valid_pair(n, k)]
        if not pairs:
            raise ConfigError("empty Stark packet window")
        idx = np.array(pairs, dtype=np.int64)
        if np.any(idx[:, 0] < 1):
            raise InvalidIndexError("packet window reaches n < 1")
        log_w = -(idx[:, 0] - nbar) ** 2 / (2 * sigma**2) - idx[:, 1] ** 2 / (2 * sigma_k**2)
        width = (float(sigma), float(sigma_k))
        center_k = 0.0
    else:
        for n in (ns[0], ns[-1]):
            spectrum.check_index(int(n))
        idx = ns[:, None]
        log_w = -(ns - nbar) ** 2 / (2 * sigma**2)
        width = (float(sigma),)
        center_k = None

    amps = _gaussian_amplitudes(log_w)
    keep = amps > 0
    amps = _normalize(amps[keep])
    return PacketCoefficients(center=float(nbar), indices=idx[keep], amplitudes=amps,
                              shape="gaussian", width=width, center_k=center_k,
                              metadata={"window": window, "window_k": window_k,
                                        "spectrum": spectrum.to_dict()})


@dataclass(frozen=True)
class PhaseModel:
    """Exact phases ``E t`` or a Taylor expansion truncated at ``order``."""

    mode: str = "exact"
    order: int | None = None
    scales: TimeScaleSet | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "truncated"):
            raise ConfigError(f"unknown phase mode {self.mode!r}")
        if self.mode == "truncated":
            if self.order not in (1, 2, 3):
                raise ConfigError(f"truncation order must be 1, 2 or 3, got {self.order!r}")
            if self.scales is None:
                raise ConfigError("truncated phases need a TimeScaleSet")
            if self.order == 3 and self.scales.t_sr is None:
                raise UndefinedScaleError("third-order phase requested but t_sr is undefined")
            if self.order >= 2 and self.scales.t_rev_n is None:
                raise UndefinedScaleError("second-order phase requested but t_rev is undefined")

    @classmethod
    def exact(cls):
        return cls("exact")

    @classmethod
    def truncated(cls, scales, order):
        return cls("truncated", order, scales)

    def label(self):
        return "exact" if self.mode == "exact" else f"truncated({self.order})"


def _offsets(spectrum, scales, indices):
    """Expansion variable x = n - center (shifted by the detuning for defect spectra)."""
    x = indices[:, 0].astype(float) - scales.center
    if isinstance(spectrum, QuantumDefectSpectrum):
        x -= spectrum.detuning
    return x


def frequencies(spectrum, packet, phase_model):
    """Cycles per atomic time unit for every packet state (phase = 2 pi nu t).

    Truncated mode omits the constant ``E(center)`` term, which only
    contributes a global phase.
    """
    idx = packet.indices
    if phase_model.mode == "exact":
        return spectrum.energies(idx) / (2 * math.pi)
    sc = phase_model.scales
    sg = sc.signs
    x = _offsets(spectrum, sc, idx)
    nu = sg.get("t_cl_n", 1) * x / sc.t_cl_n
    if phase_model.order >= 2:
        nu = nu + sg.get("t_rev_n", -1) * x**2 / sc.t_rev_n
    if phase_model.order >= 3:
        nu = nu + sg.get("t_sr", 1) * x**3 / sc.t_sr
    if idx.shape[1] == 2:
        k = idx[:, 1].astype(float)
        if sc.t_cl_k is not None:
            nu = nu + k / (2 * sc.t_cl_k)
        if phase_model.order >= 2 and sc.t_rev_nk is not None:
            nu = nu + x * k / (2 * sc.t_rev_nk)
    return nu


def _unit_phase(nu, t):
    cycles = np.multiply.outer(np.atleast_1d(t), nu)
    cycles -= np.floor(cycles)
    return np.exp(-2j * np.pi * cycles)


def phase_at(spectrum, packet, phase_model, index, t):
    """Unit phase factor exp(-i phi(t)) of one packet state."""
    j = packet.index_of(index)
    nu = frequencies(spectrum, packet, phase_model)[j]
    return complex(_unit_phase(np.array([nu]), float(t))[0, 0])


@dataclass
class AutocorrelationTrace:
    t: np.ndarray
    amplitude: np.ndarray
    phase_model: str = "exact"
    annotations: dict[str, Any] = field(default_factory=dict)

    @property
    def intensity(self):
        return np.abs(self.amplitude) ** 2

    def to_csv(self, path):
        """Columns t_atomic, t_si, re_A, im_A, abs2_A at 17 significant digits, LF endings."""
        rows = np.column_stack([self.t, time_to_si(self.t), self.amplitude.real,
                                self.amplitude.imag, self.intensity])
        write_rows_csv(path, ["t_atomic", "t_si", "re_A", "im_A", "abs2_A"], rows)

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(t=data[:, 0], amplitude=data[:, 2] + 1j * data[:, 3])


def autocorrelation(spectrum, packet, phase_model, t, chunk=2_000_000):
    """A(t) = sum_j |c_j|^2 exp(-i phi_j(t)) on a strictly increasing grid."""
    t = check_time_grid(t)
    nu = frequencies(spectrum, packet, phase_model)
    w = packet.weights
    out = np.empty(t.size, dtype=complex)
    step = max(1, chunk // nu.size)  # bound the (times x states) work array
    for start in range(0, t.size, step):
        sl = slice(start, start + step)
        out[sl] = _unit_phase(nu, t[sl]) @ w
    return AutocorrelationTrace(t=t, amplitude=out, phase_model=phase_model.label())


def time_grid(start, stop, period, samples_per_period=SAMPLES_PER_PERIOD):
    """Uniform grid on [start, stop] with a fixed number of samples per ``period``."""
    if stop <= start:
        raise ConfigError("time window must have stop > start")
    count = int(math.ceil((stop - start) / period * samples_per_period)) + 1
    return np.linspace(start, stop, count)


def _require_hydrogenic(spectrum, packet, l):
    if not isinstance(spectrum, HydrogenSpectrum):
        raise ConfigError("radial densities need the hydrogen spectrum")
    if packet.is_stark:
        raise ConfigError("radial densities are defined for single-index packets")
    if np.any(packet.indices[:, 0] <= l):
        raise InvalidIndexError(f"all n must exceed l={l}")


def evolved_amplitudes(spectrum, packet, phase_model, t):
    nu = frequencies(spectrum, packet, phase_model)
    return packet.amplitudes * _unit_phase(nu, float(t))[0]


def radial_basis(packet, r, l=1, derivative=False):
    """Matrix of R_nl(r) (rows = packet states); optionally also dR/dr."""
    ns = packet.indices[:, 0]
    r = np.asarray(r, dtype=float)
    R = np.zeros((ns.size, r.size))
    pos = r > 0
    R[:, pos] = radial_functions(ns, l, r[pos])
    if l == 0:
        R[:, ~pos] = np.array([radial_function(int(n), 0, r[~pos]) for n in ns])
    if not derivative:
        return R
    dR = np.array([radial_derivative(int(n), l, r) for n in ns])
    return R, dR


def radial_density(packet, spectrum, r, t, phase_model=None, l=1, tol=1e-6):
    """Sampled |Psi(r, t)|^2 r^2 for a hydrogen packet of fixed l.

    The normalization of the sampled density is checked with Simpson's rule
    on the supplied grid; a deficit larger than ``tol`` raises
    :class:`ResolutionError`.
    """
    _require_hydrogenic(spectrum, packet, l)
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or r.size < 3 or np.any(np.diff(r) <= 0):
        raise ConfigError("r grid must be strictly increasing with >= 3 points")
    phase_model = phase_model or PhaseModel.exact()
    psi = evolved_amplitudes(spectrum, packet, phase_model, t) @ radial_basis(packet, r, l)
    dens = np.abs(psi) ** 2 * r**2
    norm = simpson(dens, x=r)
    if abs(norm - 1.0) > tol:
        raise ResolutionError(f"radial grid too coarse or too short: density integrates to {norm:.10g}")
    return dens


def default_radial_grid(packet, du=0.1):
    return RadialGrid.for_levels(int(packet.indices[:, 0].max()), du=du)


def load_spectrum_from_packet(packet):
    """Spectrum recorded in a packet's metadata (as written by :func:`build_packet`)."""
    try:
        return spectrum_from_dict(packet.metadata["spectrum"])
    except KeyError:
        raise ConfigError("packet carries no spectrum description") from None


def write_rows_csv(path, header, rows):
    """CSV writer shared by the trace and series exporters (17 significant digits, LF)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["%.17g" % v for v in row])
