"""Hydrogen radial eigenfunctions and a quadrature grid suited to them.

The bound-state radial functions are evaluated through the orthonormal
Laguerre functions

    l_k^(a)(x) = sqrt(k!/Gamma(k+a+1)) exp(-x/2) x^(a/2) L_k^(a)(x),

which obey a three-term recurrence with O(1) coefficients.  The recurrence is
carried with a running logarithmic scale so nothing overflows or underflows
for n of a few hundred.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.special import gammaln

from .exceptions import ConfigError

_RESCALE = 1e150


def laguerre_function(k, a, x):
    """Orthonormal Laguerre function ``l_k^(a)(x)`` for x > 0.

    ``k`` may be an integer array broadcasting against ``x``; the recurrence
    then runs to ``max(k)`` and each entry stops at its own order.
    """
    x = np.asarray(x, dtype=float)
    k = np.asarray(k)
    if np.any(x <= 0):
        raise ConfigError("laguerre_function requires x > 0")
    k, x = np.broadcast_arrays(k, x)
    log_scale = -0.5 * x + 0.5 * a * np.log(x) - 0.5 * gammaln(a + 1.0)
    prev = np.zeros_like(x)
    cur = np.where(k >= 0, 1.0, 0.0)
    for j in range(int(k.max(initial=0))):
        nxt = ((2 * j + 1 + a - x) * cur - np.sqrt(j * (j + a)) * prev) / np.sqrt((j + 1) * (j + a + 1))
        active = j < k
        prev, cur = np.where(active, cur, prev), np.where(active, nxt, cur)
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            prev = np.where(big, prev / _RESCALE, prev)
            cur = np.where(big, cur / _RESCALE, cur)
            log_scale = np.where(big, log_scale + np.log(_RESCALE), log_scale)
    with np.errstate(under="ignore"):
        return cur * np.exp(log_scale)


def radial_functions(ns, l, r):
    """Matrix R_nl(r) with one row per n in ``ns`` (r > 0 only)."""
    ns = np.asarray(ns, dtype=np.int64)
    if np.any(ns <= l):
        raise ConfigError(f"all n must exceed l={l}")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise ConfigError("radial_functions requires r > 0")
    n = ns[:, None].astype(float)
    x = 2.0 * r[None, :] / n
    pref = (2.0 / n) ** 1.5 / np.sqrt(2.0 * n)
    return pref * laguerre_function(ns[:, None] - l - 1, 2 * l + 1, x) / np.sqrt(x)


def _split_origin(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ConfigError("radial grid must be nonnegative")
    return r, r > 0


def radial_function(n, l, r):
    """Normalized hydrogen radial function R_nl(r), with int R^2 r^2 dr = 1."""
    if not 0 <= l < n:
        raise ConfigError(f"need 0 <= l < n, got n={n}, l={l}")
    r, pos = _split_origin(r)
    out = np.zeros_like(r)
    x = 2.0 * r[pos] / n
    pref = (2.0 / n) ** 1.5 / np.sqrt(2.0 * n)
    out[pos] = pref * laguerre_function(n - l - 1, 2 * l + 1, x) / np.sqrt(x)
    if l == 0:
        out[~pos] = 2.0 / n**1.5
    return out


def radial_derivative(n, l, r):
    """dR_nl/dr, from the Laguerre derivative identity dL_k^(a)/dx = -L_(k-1)^(a+1)."""
    if not 0 <= l < n:
        raise ConfigError(f"need 0 <= l < n, got n={n}, l={l}")
    r, pos = _split_origin(r)
    out = np.zeros_like(r)
    x = 2.0 * r[pos] / n
    k, a = n - l - 1, 2 * l + 1
    pref = (2.0 / n) ** 1.5 / np.sqrt(2.0 * n)
    R = pref * laguerre_function(k, a, x) / np.sqrt(x)
    tail = pref * np.sqrt(k) * laguerre_function(k - 1, a + 1, x) / x if k > 0 else 0.0
    out[pos] = (2.0 / n) * ((l / x - 0.5) * R - tail)
    if l == 1:
        # R ~ c0 x near the origin with c0 fixed by L_k^(a)(0) = binom(k+a, k)
        c0 = pref * np.exp(0.5 * (gammaln(k + a + 1) - gammaln(k + 1)) - gammaln(a + 1))
        out[~pos] = (2.0 / n) * c0
    elif l == 0:
        out[~pos] = -2.0 / n**1.5  # Coulomb cusp: R'(0) = -R(0)
    return out


@dataclass(frozen=True)
class RadialGrid:
    """Grid r = u^2 with uniform u; integrals use Simpson's rule in u.

    The substitution makes the local wavelength roughly uniform in u for
    Coulomb states, so a fixed ``du`` resolves every n.
    """

    u: np.ndarray

    @classmethod
    def for_levels(cls, n_max, du=0.1, r_max=None):
        r_max = 8.0 * n_max**2 if r_max is None else float(r_max)
        count = int(np.ceil(np.sqrt(r_max) / du))
        count += count % 2  # odd number of points for Simpson
        return cls(np.linspace(0.0, np.sqrt(r_max), count + 1))

    @property
    def r(self):
        return self.u**2

    def integrate(self, values):
        """Approximate int values(r) dr over the grid."""
        return simpson(np.asarray(values) * 2.0 * self.u, x=self.u)
