"""Radial squeezed states psi(r) = N r^alpha exp(-gamma0 r) exp(-i gamma1 r).

With the measure r^2 dr the normalization is

    N = sqrt((2 gamma0)^(2 alpha + 3) / Gamma(2 alpha + 3)),

and all radial moments are gamma-function ratios.  The radial momentum is
``p_r = -i (d/dr + 1/r)``, for which

    <p_r>   = -gamma1
    <p_r^2> = gamma0^2 / (2 alpha + 1) + gamma1^2
    <r^-1>  = gamma0 / (alpha + 1)
    <r^-2>  = 2 gamma0^2 / ((alpha + 1)(2 alpha + 1)).

A state is fitted to a Rydberg orbit by demanding <p_r> = 0, <r> = r_out and
<H> = -1/(2 nbar^2) for the Coulomb Hamiltonian with angular momentum l.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.optimize import brentq
from scipy.special import gammaln

from ._validation import check_positive, check_time_grid
from .exceptions import ConfigError, DivergentMomentError, NoRootError, ResolutionError
from .packet import PacketCoefficients, PhaseModel, evolved_amplitudes, radial_basis, write_rows_csv
from .radial import RadialGrid, radial_functions
from .spectrum import HydrogenSpectrum

CAPTURE_THRESHOLD = 0.999
DEFAULT_PROJECTION_HALF_WIDTH = 15


@dataclass(frozen=True)
class SqueezedStateParams:
    alpha: float
    gamma0: float
    gamma1: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > -1.5):
            raise ConfigError(f"alpha must exceed -3/2, got {self.alpha!r}")
        if not (math.isfinite(self.gamma0) and self.gamma0 > 0):
            raise ConfigError(f"gamma0 must be positive, got {self.gamma0!r}")
        if not math.isfinite(self.gamma1):
            raise ConfigError("gamma1 must be finite")

    @property
    def log_norm(self):
        a2 = 2 * self.alpha + 3
        return 0.5 * (a2 * math.log(2 * self.gamma0) - gammaln(a2))

    @property
    def norm_constant(self):
        return math.exp(self.log_norm)

    def log_density(self, r):
        """log(|psi(r)|^2 r^2) for r > 0."""
        r = np.asarray(r, dtype=float)
        return 2 * self.log_norm + (2 * self.alpha + 2) * np.log(r) - 2 * self.gamma0 * r

    def wavefunction(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape, dtype=complex)
        pos = r > 0
        rp = r[pos]
        with np.errstate(under="ignore"):
            out[pos] = np.exp(self.log_norm + self.alpha * np.log(rp) - self.gamma0 * rp - 1j * self.gamma1 * rp)
        return out

    def to_dict(self):
        return {"alpha": self.alpha, "gamma0": self.gamma0, "gamma1": self.gamma1,
                "norm_constant_log": self.log_norm}


def moments(params, m):
    """<r^m> = Gamma(2 alpha + 3 + m) / (Gamma(2 alpha + 3) (2 gamma0)^m)."""
    a2 = 2 * params.alpha + 3
    if a2 + m <= 0:
        raise DivergentMomentError(f"<r^{m}> diverges for alpha={params.alpha}")
    return math.exp(gammaln(a2 + m) - gammaln(a2) - m * math.log(2 * params.gamma0))


def _split_points(params, m):
    """Break points around the peak of r^(2 alpha + 2 + m) exp(-2 gamma0 r)."""
    a = 2 * params.alpha + 2 + m
    peak = max(a, 0.0) / (2 * params.gamma0)
    width = math.sqrt(max(a, 1.0)) / (2 * params.gamma0)
    pts = sorted({max(0.0, peak - 12 * width), peak, peak + 12 * width})
    return [p for p in pts if p > 0]


def quadrature_moment(params, m):
    """<r^m> by adaptive quadrature of the log-form integrand (independent check)."""
    if 2 * params.alpha + 3 + m <= 0:
        raise DivergentMomentError(f"<r^{m}> diverges for alpha={params.alpha}")

    def f(r):
        if r <= 0:
            return 0.0
        return math.exp(float(params.log_density(r)) + m * math.log(r))

    edges = [0.0] + _split_points(params, m)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)[0]
    total += quad(f, edges[-1], np.inf, epsabs=0.0, epsrel=1e-13, limit=400)[0]
    return total


@dataclass(frozen=True)
class Expectations:
    r: float
    r2: float
    p_r: float
    p_r2: float
    energy: float

    @property
    def delta_r(self):
        return math.sqrt(max(self.r2 - self.r**2, 0.0))

    @property
    def delta_p(self):
        return math.sqrt(max(self.p_r2 - self.p_r**2, 0.0))

    @property
    def product(self):
        return self.delta_r * self.delta_p


def expectations(params, l=1):
    """Closed-form <r>, <r^2>, <p_r>, <p_r^2> and <H> (Coulomb, angular momentum l)."""
    a, g0, g1 = params.alpha, params.gamma0, params.gamma1
    if a <= -0.5:
        raise DivergentMomentError("<p_r^2> and <r^-2> need alpha > -1/2")
    pr2 = g0**2 / (2 * a + 1) + g1**2
    inv_r = g0 / (a + 1)
    inv_r2 = 2 * g0**2 / ((a + 1) * (2 * a + 1))
    energy = 0.5 * pr2 + 0.5 * l * (l + 1) * inv_r2 - inv_r
    return Expectations(r=moments(params, 1), r2=moments(params, 2), p_r=-g1, p_r2=pr2,
                        energy=energy)


def quadrature_momentum(params):
    """(<p_r>, <p_r^2>) from quadrature of (r psi)* d/dr (r psi) and |d/dr (r psi)|^2."""
    a, g0, g1 = params.alpha, params.gamma0, params.gamma1
    # d/dr (r psi) = r psi ((a + 1)/r - g0 - i g1)
    mean_re = (a + 1) * quadrature_moment(params, -1) - g0
    mean = complex(-g1, -mean_re)  # -i * ((a+1)<1/r> - g0 - i g1)
    sq = (a + 1) ** 2 * quadrature_moment(params, -2) - 2 * (a + 1) * g0 * quadrature_moment(params, -1) \
        + g0**2 + g1**2
    return mean, sq


@dataclass(frozen=True)
class FitTarget:
    nbar: float
    l: int = 1
    r_out: float | None = None
    orbit: str = "radial"

    def __post_init__(self):
        check_positive(self.nbar, "nbar")
        if self.l < 0 or self.l >= self.nbar:
            raise ConfigError(f"need 0 <= l < nbar, got l={self.l}")
        if self.orbit not in ("radial", "kepler"):
            raise ConfigError("orbit must be 'radial' or 'kepler'")
        if self.r_out is not None:
            check_positive(self.r_out, "r_out")

    @property
    def energy(self):
        return -0.5 / self.nbar**2

    @property
    def outer_radius(self):
        """r_out: given explicitly, else 2 nbar^2, else the Kepler outer apsis."""
        if self.r_out is not None:
            return float(self.r_out)
        nb = float(self.nbar)
        if self.orbit == "radial":
            return 2 * nb**2
        return nb**2 * (1 + math.sqrt(1 - self.l * (self.l + 1) / nb**2))

    def to_dict(self):
        return {"nbar": self.nbar, "l": self.l, "r_out": self.outer_radius, "orbit": self.orbit,
                "energy": self.energy}


def _energy_at(alpha, r_out, l):
    g0 = (2 * alpha + 3) / (2 * r_out)
    return g0**2 / (2 * (2 * alpha + 1)) + l * (l + 1) * g0**2 / ((alpha + 1) * (2 * alpha + 1)) - g0 / (alpha + 1)


def fit(target, alpha_max=None, scan_points=4000):
    """Squeezed state with <p_r> = 0, <r> = r_out and <H> = E_target.

    gamma1 = 0 and gamma0 = (2 alpha + 3)/(2 r_out) fix two conditions; the
    energy condition is solved for alpha by bracketing on a logarithmic scan
    of (-1/2, alpha_max] followed by Brent's method.  When several roots
    exist the largest alpha (the most localized state) is returned.
    """
    r_out = target.outer_radius
    e_t = target.energy
    alpha_max = alpha_max or 40.0 * target.nbar**2
    grid = -0.5 + np.geomspace(1e-6, alpha_max + 0.5, scan_points)
    resid = np.array([_energy_at(a, r_out, target.l) for a in grid]) - e_t
    sign = np.sign(resid)
    cross = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if cross.size == 0:
        raise NoRootError(f"<H>(alpha) = E has no root on alpha in ({grid[0]:.3g}, {grid[-1]:.3g})")
    i = cross[-1]
    alpha = brentq(lambda a: _energy_at(a, r_out, target.l) - e_t, grid[i], grid[i + 1],
                   xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return SqueezedStateParams(alpha=float(alpha), gamma0=(2 * alpha + 3) / (2 * r_out), gamma1=0.0)


def project(params, spectrum=None, n_range=None, l=1, nbar=None,
            half_width=DEFAULT_PROJECTION_HALF_WIDTH, threshold=CAPTURE_THRESHOLD):
    """Expand psi in hydrogen eigenstates R_nl: c_n = int R_nl psi r^2 dr.

    Integrals use adaptive Gauss-Kronrod quadrature (all n at once) over
    u = sqrt(r) on [0, sqrt(8 n_max^2)].  The coefficients are renormalized;
    the captured norm and its deficit are kept in the packet metadata.
    """
    spectrum = spectrum or HydrogenSpectrum()
    if not isinstance(spectrum, HydrogenSpectrum):
        raise ConfigError("projection needs the hydrogen spectrum")
    if n_range is None:
        if nbar is None:
            nbar = math.sqrt(0.5 * moments(params, 1))  # <r> = 2 nbar^2 for the default fit
        c = int(round(nbar))
        n_range = (max(l + 1, c - half_width), c + half_width)
    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    if n_lo <= l or n_hi < n_lo:
        raise ConfigError(f"invalid projection range {n_range} for l={l}")
    ns = np.arange(n_lo, n_hi + 1)
    u_max = math.sqrt(8.0 * n_hi**2)

    def integrand(u):
        if u <= 0:
            return np.zeros(ns.size)
        r = u * u
        psi = params.wavefunction(np.array([r]))[0]
        return radial_functions(ns, l, r)[:, 0] * psi * r * r * 2 * u

    coeffs, _ = quad_vec(integrand, 0.0, u_max, epsabs=1e-14, epsrel=1e-12, limit=20000)
    captured = float(np.sum(np.abs(coeffs) ** 2))
    if captured < threshold:
        raise ResolutionError(f"projection window n in [{n_lo}, {n_hi}] captures only {captured:.6f} "
                              f"of the norm (threshold {threshold})")
    amps = coeffs / math.sqrt(captured)
    center = float(np.sum(ns * np.abs(amps) ** 2))
    return PacketCoefficients(center=center, indices=ns, amplitudes=amps, shape="squeezed",
                              width=(), metadata={"captured_norm": captured,
                                                  "norm_deficit": 1.0 - captured,
                                                  "l": l, "params": params.to_dict(),
                                                  "spectrum": spectrum.to_dict()})


@dataclass
class UncertaintySeries:
    t: np.ndarray
    r_mean: np.ndarray
    delta_r: np.ndarray
    p_mean: np.ndarray
    delta_p: np.ndarray
    norm: np.ndarray = field(default=None)

    @property
    def product(self):
        return self.delta_r * self.delta_p

    def oscillation_period(self, pad=1 << 16):
        """Dominant period of the uncertainty product (peak of the Hann-windowed periodogram).

        Needs a uniform time grid covering at least two oscillations.
        """
        t, y = self.t, self.product
        dt = np.diff(t)
        if t.size < 16 or not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise ResolutionError("oscillation period needs a uniform grid of >= 16 samples")
        spec = np.abs(np.fft.rfft((y - y.mean()) * np.hanning(y.size), max(pad, 4 * y.size)))
        freq = np.fft.rfftfreq(max(pad, 4 * y.size), dt[0])
        i = int(np.argmax(spec[1:])) + 1
        return float(1.0 / freq[i])

    def to_csv(self, path):
        rows = np.column_stack([self.t, self.r_mean, self.delta_r, self.p_mean, self.delta_p, self.product])
        write_rows_csv(path, ["t", "r_mean", "delta_r", "p_r_mean", "delta_p_r", "product"], rows)


def evolve_uncertainty(packet, t, spectrum=None, phase_model=None, grid=None, l=1, tol=1e-6):
    """<r>, Delta r, <p_r>, Delta p_r of the evolved superposition on a radial grid."""
    spectrum = spectrum or HydrogenSpectrum()
    phase_model = phase_model or PhaseModel.exact()
    t = check_time_grid(t)
    l = int(packet.metadata.get("l", l))
    grid = grid or RadialGrid.for_levels(int(packet.indices[:, 0].max()))
    r = grid.r
    R, dR = radial_basis(packet, r, l, derivative=True)
    U = R * r  # u_n(r) = r R_n(r)
    dU = R + dR * r  # d/dr (r R_n)
    out = {k: np.empty(t.size) for k in ("norm", "r", "r2", "p", "p2")}
    for i, ti in enumerate(t):
        c = evolved_amplitudes(spectrum, packet, phase_model, ti)
        u = c @ U
        du = c @ dU
        dens = np.abs(u) ** 2
        norm = grid.integrate(dens)
        if abs(norm - 1.0) > tol:
            raise ResolutionError(f"radial grid too coarse: norm {norm:.10g} at t={ti:.6g}")
        out["norm"][i] = norm
        out["r"][i] = grid.integrate(dens * r) / norm
        out["r2"][i] = grid.integrate(dens * r**2) / norm
        out["p"][i] = grid.integrate((np.conj(u) * (-1j) * du).real) / norm
        out["p2"][i] = grid.integrate(np.abs(du) ** 2) / norm
    dr = np.sqrt(np.maximum(out["r2"] - out["r"] ** 2, 0.0))
    dp = np.sqrt(np.maximum(out["p2"] - out["p"] ** 2, 0.0))
    return UncertaintySeries(t=t, r_mean=out["r"], delta_r=dr, p_mean=out["p"], delta_p=dp,
                             norm=out["norm"])
