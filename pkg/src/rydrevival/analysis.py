"""Prediction and detection of revival structure in autocorrelation traces.

Predictions follow from the time scales alone.  A fractional revival at
``(p/q) t_rev`` consists of copies of the packet moving with local period
``T_cl/q`` (q odd) or ``2 T_cl/q`` (q even); a fractional superrevival at
``t_sr/q`` (q a multiple of 3) shows the revival-level analogue with period
``(3/q) t_rev``.

Detection works on ``|A(t)|^2`` with explicit thresholds: peaks of height at
least 0.1 and prominence at least 0.05, merged when closer than ``T_cl/4``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.ndimage import maximum_filter1d
from scipy.signal import find_peaks

from .exceptions import ConfigError, ResolutionError
from .spectrum import TimeScaleSet
from .units import time_to_si

PEAK_HEIGHT = 0.1
PEAK_PROMINENCE = 0.05
MATCH_FRACTION = 0.02
MAX_Q_REVIVAL = 8
MAX_Q_SUPERREVIVAL = 12
SR_MAX_LAG = 1.25  # in units of t_rev
SR_FUNDAMENTAL_FRACTION = 0.7


@dataclass(frozen=True)
class Prediction:
    time: float
    kind: str  # classical period | fractional revival | full revival | fractional superrevival | full superrevival
    fraction: Fraction | None
    local_period: float | None

    def to_dict(self):
        return {"time": self.time, "kind": self.kind,
                "fraction": None if self.fraction is None else str(self.fraction),
                "local_period": self.local_period}


@dataclass(frozen=True)
class Detection:
    time: float
    height: float
    local_period: float | None = None

    def to_dict(self):
        return {"time": self.time, "height": self.height, "local_period": self.local_period}


@dataclass
class RevivalReport:
    scales: TimeScaleSet
    predictions: list = field(default_factory=list)
    detections: list = field(default_factory=list)
    matches: list = field(default_factory=list)  # (prediction index, detection index)

    def by_kind(self, kind):
        return [p for p in self.predictions if p.kind == kind]

    def matched_detection(self, prediction):
        i = self.predictions.index(prediction)
        for pi, di in self.matches:
            if pi == i:
                return self.detections[di]
        return None

    def to_dict(self):
        return {"scales": self.scales.to_dict(),
                "predictions": [p.to_dict() for p in self.predictions],
                "detections": [d.to_dict() for d in self.detections],
                "matches": [list(m) for m in self.matches]}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def to_table(self, units="atomic"):
        conv = time_to_si if units == "si" else (lambda x: x)
        unit = "s" if units == "si" else "a.u."
        lines = [f"{'kind':<24} {'fraction':>9} {'time [' + unit + ']':>16} {'local period':>16} {'detected |A|^2':>15}"]
        for p in self.predictions:
            d = self.matched_detection(p)
            lp = "" if p.local_period is None else f"{conv(p.local_period):.6g}"
            lines.append(f"{p.kind:<24} {str(p.fraction or ''):>9} {conv(p.time):>16.6g} {lp:>16} "
                         f"{'' if d is None else f'{d.height:.4f}':>15}")
        return "\n".join(lines)


def revival_local_period(scales, q):
    """Period of the subsidiary packets at a fractional revival with denominator q."""
    return scales.t_cl_n / q if q % 2 else 2 * scales.t_cl_n / q


def predict_revivals(scales, max_q=MAX_Q_REVIVAL, max_q_sr=MAX_Q_SUPERREVIVAL):
    """Predicted revival times; levels whose scale is undefined are omitted."""
    if scales.t_cl_n is None:
        raise ConfigError("predictions need at least the classical period")
    preds = [Prediction(scales.t_cl_n, "classical period", None, scales.t_cl_n)]
    if scales.t_rev_n is not None:
        for q in range(2, max_q + 1):
            for p in range(1, q):
                if math.gcd(p, q) == 1:
                    preds.append(Prediction(p / q * scales.t_rev_n, "fractional revival",
                                            Fraction(p, q), revival_local_period(scales, q)))
        preds.append(Prediction(scales.t_rev_n, "full revival", Fraction(1), scales.t_cl_n))
    if scales.t_sr is not None and scales.t_rev_n is not None:
        for q in range(3, max_q_sr + 1, 3):
            kind = "full superrevival" if q == 6 else "fractional superrevival"
            preds.append(Prediction(scales.t_sr / q, kind, Fraction(1, q), 3 * scales.t_rev_n / q))
    preds.sort(key=lambda p: p.time)
    return RevivalReport(scales=scales, predictions=preds)


def principal_superrevival(report):
    hits = report.by_kind("full superrevival")
    return hits[0] if hits else None


def _check_resolution(t, scales):
    if t.size < 3:
        raise ResolutionError("trace too short")
    dt = float(np.max(np.diff(t)))
    if dt > scales.t_cl_n / 16:
        raise ResolutionError(f"trace step {dt:.4g} exceeds T_cl/16")
    if t[-1] - t[0] < scales.t_cl_n:
        raise ResolutionError("trace shorter than one classical period")


def find_revival_peaks(t, intensity, merge_distance, height=PEAK_HEIGHT, prominence=PEAK_PROMINENCE):
    """Indices of merged peaks of ``intensity`` (highest member kept per cluster)."""
    idx, _ = find_peaks(intensity, height=height, prominence=prominence)
    if idx.size == 0:
        return idx
    merged = [idx[0]]
    for i in idx[1:]:
        if t[i] - t[merged[-1]] < merge_distance:
            if intensity[i] > intensity[merged[-1]]:
                merged[-1] = i
        else:
            merged.append(i)
    return np.asarray(merged)


def estimate_local_period(trace, center, scales, level="revival", window=None):
    """Local periodicity of ``|A|^2`` around ``center``.

    ``level="revival"`` takes the median gap between merged peaks in a window
    of width ``t_rev/10``.  ``level="superrevival"`` looks for the repetition
    of the revival-scale envelope: the envelope (running maximum over one
    classical period) is autocorrelated within +-``t_rev`` of the center and
    the shortest lag whose correlation peak reaches 0.7 of the strongest one
    is returned.  The trace must cover ``[center - t_rev, center + 2.25 t_rev]``.
    """
    t = trace.t
    y = trace.intensity
    if level == "revival":
        half = (scales.t_rev_n / 20) if window is None else window / 2
        sel = (t >= center - half) & (t <= center + half)
        if sel.sum() < 8:
            raise ResolutionError("window around the candidate holds too few samples")
        ts, ys = t[sel], y[sel]
        peaks = find_revival_peaks(ts, ys, scales.t_cl_n / 4)
        if peaks.size < 2:
            raise ResolutionError("fewer than two peaks in the local window")
        return float(np.median(np.diff(ts[peaks])))
    if level != "superrevival":
        raise ConfigError(f"unknown level {level!r}")
    if scales.t_rev_n is None:
        raise ConfigError("superrevival periods need t_rev")
    half = scales.t_rev_n if window is None else window / 2
    max_lag = SR_MAX_LAG * scales.t_rev_n
    dt = float(np.median(np.diff(t)))
    per = max(1, int(round(scales.t_cl_n / dt)))
    if t[0] > center - half or t[-1] < center + half + max_lag:
        raise ResolutionError("superrevival estimate needs the trace to cover "
                              "[center - t_rev, center + 2.25 t_rev]")
    env = maximum_filter1d(y, size=per)
    i0 = int(np.searchsorted(t, center - half))
    m = int(2 * half / dt)
    ref = env[i0:i0 + m] - env[i0:i0 + m].mean()
    lags = np.arange(2 * per, min(int(max_lag / dt), env.size - i0 - m))
    corr = np.empty(lags.size)
    for j, L in enumerate(lags):
        seg = env[i0 + L:i0 + L + m]
        seg = seg - seg.mean()
        den = math.sqrt(float(ref @ ref) * float(seg @ seg))
        corr[j] = float(ref @ seg) / den if den > 0 else 0.0
    pk, _ = find_peaks(corr)
    if pk.size == 0:
        raise ResolutionError("no envelope repetition found in the window")
    best = corr[pk].max()
    j = int(pk[np.nonzero(corr[pk] >= SR_FUNDAMENTAL_FRACTION * best)[0][0]])
    return float(lags[j] * dt)


def detect_structure(trace, scales, report=None, match_fraction=MATCH_FRACTION):
    """Detect merged |A|^2 peaks, estimate their local periods, match them to predictions."""
    t = trace.t
    _check_resolution(t, scales)
    report = report or predict_revivals(scales)
    y = trace.intensity
    peaks = find_revival_peaks(t, y, scales.t_cl_n / 4)
    detections = []
    for i in peaks:
        try:
            lp = estimate_local_period(trace, t[i], scales) if scales.t_rev_n else None
        except ResolutionError:
            lp = None
        detections.append(Detection(float(t[i]), float(y[i]), lp))
    tol = match_fraction * (scales.t_rev_n or scales.t_cl_n)
    matches = []
    if detections:
        times = np.array([d.time for d in detections])
        heights = np.array([d.height for d in detections])
        for pi, p in enumerate(report.predictions):
            near = np.nonzero(np.abs(times - p.time) <= tol)[0]
            if near.size:
                # strongest peak inside the tolerance band represents the prediction
                matches.append((pi, int(near[np.argmax(heights[near])])))
    trace.annotations["peaks"] = [d.time for d in detections]
    return RevivalReport(scales=scales, predictions=list(report.predictions),
                         detections=detections, matches=matches)


@dataclass(frozen=True)
class SpectrumClass:
    defined: dict
    verdict: str

    def to_dict(self):
        return {"defined": dict(self.defined), "verdict": self.verdict}


_VERDICTS = {
    (True, False, False): "classical motion only: the packet never disperses, no revivals",
    (True, True, False): "perfect full and fractional revivals, no superrevivals",
    (True, True, True): "three-level hierarchy: classical period, fractional/full revivals, "
                        "fractional/full superrevivals",
    (True, False, True): "no second-order revivals; third-order dispersion only",
}


def verdict_for(flags):
    """Verdict string as a pure function of the (T_cl, t_rev, t_sr) defined flags."""
    return _VERDICTS[tuple(bool(f) for f in flags)]


def classify_spectrum(spectrum, center):
    scales = spectrum.time_scales(center)
    flags = {"t_cl": scales.t_cl_n is not None, "t_rev": scales.t_rev_n is not None,
             "t_sr": scales.t_sr is not None}
    return SpectrumClass(defined=flags, verdict=verdict_for(flags.values()))
