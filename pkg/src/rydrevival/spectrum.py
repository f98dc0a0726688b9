"""Energy-level models and the derivative-defined time scales.

All energies and times are in atomic units.  A spectrum is expanded around a
central quantum number ``nbar``; the first three derivatives of ``E(n)`` set
the classical period, the revival time and the superrevival time::

    T_cl  = 2*pi / |E'|
    t_rev = 2*pi / |E''/2|
    t_sr  = 2*pi / |E'''/6|

Scales are reported as magnitudes.  The signs of the derivatives are kept in
``TimeScaleSet.signs`` so that truncated phases keep the physical sign of
every Taylor term.
"""
from __future__ import annotations

import csv
import math
import numbers
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from ._validation import as_fraction, check_positive, check_positive_int, exact_real
from .exceptions import (
    ConfigError,
    DegenerateSpectrumError,
    InvalidIndexError,
    RatioBoundError,
)
from .units import AU_FIELD_V_PER_CM

TWO_PI = 2.0 * math.pi

# relative threshold below which a finite-difference derivative counts as zero
_VANISHING_RTOL = 1e-10


@dataclass(frozen=True)
class TimeScaleSet:
    """Periods and revival times at an expansion center.

    ``None`` marks an undefined scale.  ``exact`` holds each defined scale
    divided by ``2*pi`` as a :class:`~fractions.Fraction` when the model and
    center admit exact rational arithmetic.
    """

    center: float
    t_cl_n: float
    t_rev_n: float | None = None
    t_sr: float | None = None
    t_cl_k: float | None = None
    t_rev_nk: float | None = None
    center_k: float | None = None
    signs: Mapping[str, int] = field(default_factory=dict)
    exact: Mapping[str, Fraction] | None = None

    NAMES = ("t_cl_n", "t_cl_k", "t_rev_n", "t_rev_nk", "t_sr")

    @property
    def t_cl(self):
        return self.t_cl_n

    @property
    def t_rev(self):
        return self.t_rev_n

    def is_defined(self, name):
        return getattr(self, name) is not None

    @property
    def defined(self):
        return {name: self.is_defined(name) for name in self.NAMES}

    def scaled(self, factor):
        """Copy with every time multiplied by ``factor`` (> 0)."""
        kw = {n: (None if getattr(self, n) is None else getattr(self, n) * factor)
              for n in self.NAMES}
        exact = None
        if self.exact is not None and isinstance(factor, (int, Fraction)):
            exact = {k: v * factor for k, v in self.exact.items()}
        return TimeScaleSet(center=self.center, center_k=self.center_k,
                            signs=dict(self.signs), exact=exact, **kw)

    def to_dict(self):
        out = {"center": self.center, "center_k": self.center_k}
        for name in self.NAMES:
            out[name] = getattr(self, name)
        out["signs"] = dict(self.signs)
        if self.exact is not None:
            out["exact_over_2pi"] = {k: str(v) for k, v in self.exact.items()}
        return out


def _sign(x):
    return 1 if x > 0 else -1


def _scales_from_derivatives(center, d1, d2, d3, exact=None, vanish=None):
    """Build a TimeScaleSet from E', E'', E''' (floats; ``exact`` optional Fractions)."""
    vanish = vanish or (lambda d: d == 0)
    if vanish(d1):
        raise DegenerateSpectrumError(f"E'(center={center}) vanishes; no classical period")
    signs = {"t_cl_n": _sign(d1)}
    t_cl = TWO_PI / abs(d1)
    t_rev = t_sr = None
    if not vanish(d2):
        t_rev = TWO_PI / abs(0.5 * d2)
        signs["t_rev_n"] = _sign(d2)
    if not vanish(d3):
        t_sr = TWO_PI / abs(d3 / 6.0)
        signs["t_sr"] = _sign(d3)
    exact_scales = None
    if exact is not None:
        e1, e2, e3 = exact
        exact_scales = {"t_cl_n": 1 / abs(e1)}
        if e2 != 0 and t_rev is not None:
            exact_scales["t_rev_n"] = 2 / abs(e2)
        if e3 != 0 and t_sr is not None:
            exact_scales["t_sr"] = 6 / abs(e3)
    return TimeScaleSet(center=float(center), t_cl_n=t_cl, t_rev_n=t_rev, t_sr=t_sr,
                        signs=signs, exact=exact_scales)


def _require_int(n, name="n"):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        if isinstance(n, (float, np.floating)) and float(n).is_integer():
            return int(n)
        raise InvalidIndexError(f"{name} must be an integer, got {n!r}")
    return int(n)


def _hydrogen_derivatives(x):
    return 1 / x**3, -3 / x**4, 12 / x**5


def _exact_center(center):
    try:
        return exact_real(center)
    except (TypeError, ValueError, OverflowError):
        return None


class SpectrumModel:
    """Common interface: ``energy``, ``time_scales`` and JSON round-trip."""

    kind = "abstract"
    n_indices = 1

    def energy(self, n, k=None):
        raise NotImplementedError

    def energies(self, indices):
        """Vectorized energy over an ``(N, d)`` integer index array."""
        idx = np.asarray(indices)
        if idx.ndim == 1:
            idx = idx[:, None]
        return np.array([self.energy(*map(int, row)) for row in idx], dtype=float)

    def time_scales(self, center, center_k=0):
        raise NotImplementedError

    def check_index(self, n, k=None):
        self.energy(n, k)

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class HydrogenSpectrum(SpectrumModel):
    """E_n = -1/(2 n^2)."""

    kind = "hydrogen"

    def energy(self, n, k=None):
        n = _require_int(n)
        if n < 1:
            raise InvalidIndexError(f"hydrogen requires n >= 1, got {n}")
        return -0.5 / n**2

    def energies(self, indices):
        n = np.asarray(indices).reshape(len(indices), -1)[:, 0]
        if np.any(n < 1):
            raise InvalidIndexError("hydrogen requires n >= 1")
        return -0.5 / n.astype(float) ** 2

    def derivatives(self, x):
        return _hydrogen_derivatives(float(x))

    def time_scales(self, center, center_k=0):
        check_positive(center, "center")
        d = _hydrogen_derivatives(float(center))
        xe = _exact_center(center)
        exact = _hydrogen_derivatives(xe) if xe is not None else None
        return _scales_from_derivatives(center, *d, exact=exact)

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class ExpansionCenter:
    """Noninteger expansion center N* = nbar - delta(l) + detuning."""

    nbar: float
    defect: float
    detuning: float
    value: float
    integer_part: int
    fractional_part: float


@dataclass(frozen=True)
class QuantumDefectSpectrum(SpectrumModel):
    """E = -1/(2 n*^2) with n* = n - delta(l) for an alkali-metal Rydberg series."""

    defects: Mapping[int, float] = field(default_factory=dict)
    detuning: float = 0.0
    l: int = 1

    kind = "quantum_defect"

    def __post_init__(self):
        object.__setattr__(self, "defects", {int(k): float(v) for k, v in dict(self.defects).items()})

    @property
    def defect(self):
        return self.defects.get(self.l, 0.0)

    def effective_n(self, n):
        return n - self.defect

    def energy(self, n, k=None):
        n = _require_int(n)
        if n <= self.l:
            raise InvalidIndexError(f"n={n} not allowed for l={self.l}")
        ns = self.effective_n(n)
        if ns <= 0:
            raise InvalidIndexError(f"effective quantum number n*={ns} <= 0 for n={n}")
        return -0.5 / ns**2

    def energies(self, indices):
        n = np.asarray(indices).reshape(len(indices), -1)[:, 0].astype(float)
        ns = n - self.defect
        if np.any(n <= self.l) or np.any(ns <= 0):
            raise InvalidIndexError("index outside the quantum-defect series")
        return -0.5 / ns**2

    def expansion_center(self, nbar):
        value = float(nbar) - self.defect + self.detuning
        ip = math.floor(value)
        return ExpansionCenter(nbar=float(nbar), defect=self.defect, detuning=self.detuning,
                               value=value, integer_part=ip, fractional_part=value - ip)

    def time_scales(self, center, center_k=0):
        check_positive(center, "center")
        xc = self.expansion_center(center).value
        if xc <= 0:
            raise InvalidIndexError(f"expansion center N*={xc} <= 0")
        d = _hydrogen_derivatives(xc)
        exact = None
        try:
            xe = exact_real(center) - exact_real(self.defect) + exact_real(self.detuning)
            exact = _hydrogen_derivatives(xe)
        except (TypeError, ValueError):
            pass
        return _scales_from_derivatives(center, *d, exact=exact)

    def to_dict(self):
        return {"kind": self.kind, "defects": {str(k): v for k, v in self.defects.items()},
                "detuning": self.detuning, "l": self.l}


def critical_field(nbar):
    """Classical field-ionization threshold F_c = 1/(16 nbar^4)."""
    return 1.0 / (16.0 * float(nbar) ** 4)


@dataclass(frozen=True)
class StarkSpectrum(SpectrumModel):
    """First-order hydrogenic Stark levels E_nk = -1/(2n^2) + 3nkF/2 (m = 0)."""

    field_strength: float | Fraction = 0.0

    kind = "stark"
    n_indices = 2

    def __post_init__(self):
        f = self.field_strength
        if not isinstance(f, (numbers.Real, Fraction)) or float(f) < 0 or not math.isfinite(float(f)):
            raise ConfigError(f"field strength must be a finite real >= 0, got {f!r}")

    @property
    def field(self):
        return float(self.field_strength)

    @staticmethod
    def valid_pair(n, k):
        return n >= 1 and abs(k) <= n - 1 and (n + k) % 2 == 1

    def check_index(self, n, k=None):
        if k is None:
            raise InvalidIndexError("Stark levels need both n and k")
        n = _require_int(n)
        k = _require_int(k, "k")
        if n < 1:
            raise InvalidIndexError(f"n must be >= 1, got {n}")
        if abs(k) > n - 1:
            raise InvalidIndexError(f"|k|={abs(k)} exceeds n-1={n - 1}")
        if (n + k) % 2 != 1:
            raise InvalidIndexError(f"parity violation: k={k} must be {'even' if n % 2 else 'odd'} for n={n}")
        return n, k

    def energy(self, n, k=None):
        n, k = self.check_index(n, k)
        return -0.5 / n**2 + 1.5 * n * k * self.field

    def energies(self, indices):
        idx = np.asarray(indices)
        n = idx[:, 0]
        k = idx[:, 1]
        ok = (n >= 1) & (np.abs(k) <= n - 1) & ((n + k) % 2 == 1)
        if not np.all(ok):
            bad = idx[~ok][0]
            self.check_index(int(bad[0]), int(bad[1]))
        n = n.astype(float)
        return -0.5 / n**2 + 1.5 * n * k * self.field

    def time_scales(self, center, center_k=0):
        check_positive(center, "center")
        if center_k != 0:
            raise ConfigError("Stark expansion is defined around kbar = 0")
        nb = float(center)
        F = self.field
        if F > critical_field(nb):
            warnings.warn(f"field {F:.6g} a.u. exceeds the classical ionization threshold "
                          f"F_c={critical_field(nb):.6g} for nbar={center}", RuntimeWarning,
                          stacklevel=2)
        d1, d2, d3 = _hydrogen_derivatives(nb)
        base = _scales_from_derivatives(center, d1, d2, d3)
        t_cl_k = t_rev_nk = None
        signs = dict(base.signs)
        if F > 0:
            # dE/dk = 3 nbar F / 2,  d2E/dn dk = 3F/2
            t_cl_k = TWO_PI / (2 * 1.5 * nb * F)
            t_rev_nk = TWO_PI / (2 * 1.5 * F)
            signs["t_cl_k"] = 1
            signs["t_rev_nk"] = 1
        exact = None
        xe = _exact_center(center)
        if xe is not None:
            e1, e2, e3 = _hydrogen_derivatives(xe)
            exact = {"t_cl_n": 1 / e1, "t_rev_n": 2 / abs(e2), "t_sr": 6 / e3}
            if F > 0:
                Fe = exact_real(self.field_strength)
                exact["t_cl_k"] = 1 / (3 * xe * Fe)
                exact["t_rev_nk"] = 1 / (3 * Fe)
        return TimeScaleSet(center=nb, center_k=0.0, t_cl_n=base.t_cl_n, t_rev_n=base.t_rev_n,
                            t_sr=base.t_sr, t_cl_k=t_cl_k, t_rev_nk=t_rev_nk, signs=signs,
                            exact=exact)

    def to_dict(self):
        out = {"kind": self.kind, "field": float(self.field_strength)}
        if isinstance(self.field_strength, Fraction):
            out["field_exact"] = str(self.field_strength)
        return out


def central_weights(order, half_width):
    """Exact central finite-difference weights on offsets -h..h (unit spacing)."""
    offsets = list(range(-half_width, half_width + 1))
    m = len(offsets)
    if order >= m:
        raise ConfigError(f"{m}-point stencil cannot give derivative order {order}")
    # Solve sum_j w_j x_j^p = p! delta_{p,order} for p < m (exact Gaussian elimination)
    a = [[Fraction(x) ** p for x in offsets] for p in range(m)]
    b = [Fraction(math.factorial(order)) if p == order else Fraction(0) for p in range(m)]
    for col in range(m):
        piv = next(r for r in range(col, m) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(m):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] -= f * b[col]
    return [b[i] / a[i][i] for i in range(m)]


@dataclass(frozen=True)
class TabulatedSpectrum(SpectrumModel):
    """Finite table n -> E_n, derivatives by central differences on the unit index grid.

    ``max_stencil`` caps the stencil width (3, 5 or 7 points); the widest
    centered stencil the table allows is used, so a 7-point table gives
    sixth-order first/second and fourth-order third derivatives.
    """

    energies_table: Mapping[int, float] = field(default_factory=dict)
    max_stencil: int = 7

    kind = "tabulated"

    def __post_init__(self):
        table = {int(k): v for k, v in dict(self.energies_table).items()}
        if len(table) < 5:
            raise ConfigError(f"tabulated spectrum needs >= 5 levels, got {len(table)}")
        keys = sorted(table)
        if keys != list(range(keys[0], keys[-1] + 1)):
            raise ConfigError("tabulated indices must be contiguous")
        if self.max_stencil not in (3, 5, 7):
            raise ConfigError("max_stencil must be 3, 5 or 7")
        object.__setattr__(self, "energies_table", dict(sorted(table.items())))

    @classmethod
    def from_function(cls, func, nmin, nmax, **kw):
        return cls({n: func(n) for n in range(nmin, nmax + 1)}, **kw)

    @classmethod
    def from_csv(cls, path, **kw):
        """Load a two-column (n, E_n) CSV; a non-numeric first row is taken as a header."""
        table = {}
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    n, e = int(row[0]), float(row[1])
                except (ValueError, IndexError) as exc:
                    if i == 0:
                        continue
                    raise ConfigError(f"{path}: bad row {i + 1}: {row!r}") from exc
                table[n] = e
        return cls(table, **kw)

    @property
    def nmin(self):
        return next(iter(self.energies_table))

    @property
    def nmax(self):
        return next(reversed(self.energies_table))

    def energy(self, n, k=None):
        n = _require_int(n)
        try:
            return float(self.energies_table[n])
        except KeyError:
            raise InvalidIndexError(f"n={n} outside table [{self.nmin}, {self.nmax}]") from None

    def time_scales(self, center, center_k=0):
        c = _require_int(center, "center")
        room = min(c - self.nmin, self.nmax - c)
        if room < 2:
            raise ConfigError(f"center {c} must be at least 2 indices from the table edge")
        h = min(room, self.max_stencil // 2)
        e = [self.energies_table[c + j] for j in range(-h, h + 1)]
        exact = all(isinstance(x, (numbers.Integral, Fraction)) for x in e)
        vals = e if exact else [float(x) for x in e]

        def deriv(order, hw):
            w = central_weights(order, hw)
            sub = vals[h - hw:h + hw + 1]
            if exact:
                return sum(wi * xi for wi, xi in zip(w, sub))
            return math.fsum(float(wi) * xi for wi, xi in zip(w, sub))

        h12 = h if h >= 1 else 1
        d1, d2 = deriv(1, h12), deriv(2, h12)
        d3 = deriv(3, h)
        scale = max(abs(float(x)) for x in vals) or 1.0

        if exact:
            vanish = lambda d: d == 0  # noqa: E731
            ex = (d1, d2, d3) if d1 != 0 else None
        else:
            vanish = lambda d: abs(d) <= _VANISHING_RTOL * scale  # noqa: E731
            ex = None
        return _scales_from_derivatives(c, float(d1), float(d2), float(d3), exact=ex,
                                        vanish=lambda d: vanish(d))

    def to_dict(self):
        return {"kind": self.kind,
                "energies": {str(k): float(v) for k, v in self.energies_table.items()},
                "max_stencil": self.max_stencil}


def energy(spectrum, indices):
    """Energy of the level ``indices`` (an int or an index tuple)."""
    if isinstance(indices, (tuple, list)):
        return spectrum.energy(*indices)
    return spectrum.energy(indices)


def time_scales(spectrum, center, center_k=0):
    return spectrum.time_scales(center, center_k)


def spectrum_from_dict(data):
    try:
        kind = data["kind"]
        if kind == "hydrogen":
            return HydrogenSpectrum()
        if kind == "quantum_defect":
            return QuantumDefectSpectrum(defects={int(k): float(v) for k, v in data.get("defects", {}).items()},
                                         detuning=float(data.get("detuning", 0.0)),
                                         l=int(data.get("l", 1)))
        if kind == "stark":
            f = Fraction(data["field_exact"]) if "field_exact" in data else float(data["field"])
            return StarkSpectrum(f)
        if kind == "tabulated":
            return TabulatedSpectrum({int(k): float(v) for k, v in data["energies"].items()},
                                     max_stencil=int(data.get("max_stencil", 7)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed spectrum description: {data!r}") from exc
    raise ConfigError(f"unknown spectrum kind {data.get('kind')!r}")


@dataclass(frozen=True)
class FieldTuning:
    nbar: int
    ratio: Fraction
    field_exact: Fraction
    field: float
    critical_field: float
    below_threshold: bool

    @property
    def field_v_per_cm(self):
        return self.field * AU_FIELD_V_PER_CM

    def to_dict(self):
        return {"nbar": self.nbar, "ratio": str(self.ratio), "field_au": self.field,
                "field_exact": str(self.field_exact), "field_v_per_cm": self.field_v_per_cm,
                "critical_field_au": self.critical_field,
                "below_threshold": self.below_threshold}


_RATIO_BOUND = Fraction(1, 8)


def tune_field(nbar, ratio):
    """Field making t_rev^(n) / t_rev^(nk) equal the rational ``ratio`` (= r/s).

    Since t_rev^(n)/t_rev^(nk) = 2 nbar^4 F, the solution is F = (r/s)/(2 nbar^4).
    Ratios r/s >= 1/8 would need F >= F_c and are rejected.
    """
    nbar = check_positive_int(nbar, "nbar")
    ratio = as_fraction(ratio)
    if ratio <= 0:
        raise ConfigError(f"ratio must be positive, got {ratio}")
    if ratio >= _RATIO_BOUND:
        raise RatioBoundError(f"r/s = {ratio} >= 1/8 would put F at or above F_c = 1/(16 nbar^4)")
    fe = ratio / (2 * Fraction(nbar) ** 4)
    fc = critical_field(nbar)
    return FieldTuning(nbar=nbar, ratio=ratio, field_exact=fe, field=float(fe),
                       critical_field=fc, below_threshold=float(fe) < fc)


def commensurability(t_a, t_b, tolerance=1e-9, max_denominator=64):
    """Best rational a/b ~ t_a/t_b with b <= max_denominator, or ``None``.

    Candidates come from continued-fraction convergents (and semiconvergents);
    the match is accepted only if its relative error is within ``tolerance``.
    """
    if float(t_a) <= 0 or float(t_b) <= 0:
        raise ConfigError("commensurability needs two positive times")
    max_denominator = check_positive_int(max_denominator, "max_denominator")
    if isinstance(t_a, (numbers.Integral, Fraction)) and isinstance(t_b, (numbers.Integral, Fraction)):
        x = Fraction(t_a) / Fraction(t_b)
        approx = x.limit_denominator(max_denominator)
        return approx if abs(approx - x) <= tolerance * x else None
    x = float(t_a) / float(t_b)
    approx = Fraction(x).limit_denominator(max_denominator)
    if abs(float(approx) - x) <= tolerance * abs(x):
        return approx
    return None
