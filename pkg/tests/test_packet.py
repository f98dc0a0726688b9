import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from rydrevival.exceptions import ConfigError, InvalidIndexError, ResolutionError, UndefinedScaleError
from rydrevival.packet import (
    AutocorrelationTrace,
    PacketCoefficients,
    PhaseModel,
    autocorrelation,
    build_packet,
    default_radial_grid,
    frequencies,
    load_spectrum_from_packet,
    phase_at,
    radial_density,
    time_grid,
)
from rydrevival.spectrum import HydrogenSpectrum, StarkSpectrum, TabulatedSpectrum


def _cycles_oracle(nbar, x, t_over_2pi, order):
    """Truncated hydrogen phase in cycles, in exact rational arithmetic."""
    nbar, x, t = Fraction(nbar), Fraction(x), Fraction(t_over_2pi)
    c = x * t / nbar**3
    if order >= 2:
        c -= x * x * t / (2 * nbar**4 / 3)
    if order >= 3:
        c += x**3 * t / (nbar**5 / 2)
    return c


def test_weights_are_normalized_gaussian(packet45):
    w = packet45.weights
    assert math.fsum(w) == pytest.approx(1.0, abs=1e-15)
    ns = packet45.indices[:, 0]
    ref = np.exp(-(ns - 45) ** 2 / (2 * 2.5**2))
    assert np.allclose(w, ref / ref.sum(), rtol=1e-13)
    assert ns.min() == 35 and ns.max() == 55


def test_default_window():
    p = build_packet(HydrogenSpectrum(), 30, 1.2)
    assert p.metadata["window"] == 6 and p.size == 13


def test_tiny_sigma_is_delta():
    p = build_packet(HydrogenSpectrum(), 40, 0.01, 3)
    assert p.size == 1 and p.indices[0, 0] == 40


def test_packet_rejects_bad_input(hydrogen):
    with pytest.raises(ConfigError):
        build_packet(hydrogen, 45, -1.0)
    with pytest.raises(InvalidIndexError):
        build_packet(hydrogen, 3, 2.5, 5)
    with pytest.raises(ConfigError, match="normalized"):
        PacketCoefficients(10, np.array([10, 11]), np.array([1.0, 1.0]))


def test_stark_packet_parity():
    p = build_packet(StarkSpectrum(1e-8), 24, 1.0, 3, sigma_k=2.0, window_k=6)
    n, k = p.indices.T
    assert np.all((n + k) % 2 == 1) and np.all(np.abs(k) <= n - 1)
    assert math.fsum(p.weights) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(InvalidIndexError):
        PacketCoefficients(24, np.array([[24, 0]]), np.array([1.0]))


def test_json_round_trip(tmp_path, packet45):
    path = tmp_path / "p.json"
    packet45.to_json(path)
    back = PacketCoefficients.from_json(path)
    assert np.array_equal(back.indices, packet45.indices)
    assert np.array_equal(back.amplitudes, packet45.amplitudes)
    assert load_spectrum_from_packet(back) == HydrogenSpectrum()


def test_phase_model_validation(scales45):
    with pytest.raises(ConfigError):
        PhaseModel("truncated", 4, scales45)
    with pytest.raises(ConfigError):
        PhaseModel("fourier")
    quad = TabulatedSpectrum({n: n * n for n in range(1, 12)}).time_scales(6)
    with pytest.raises(UndefinedScaleError):
        PhaseModel.truncated(quad, 3)
    assert PhaseModel.truncated(quad, 2).label() == "truncated(2)"


def test_all_phases_vanish_at_zero(hydrogen, packet45, scales45):
    for pm in (PhaseModel.exact(), PhaseModel.truncated(scales45, 3)):
        for n in (40, 45, 50):
            assert phase_at(hydrogen, packet45, pm, n, 0.0) == 1.0


@pytest.mark.parametrize("x", [-4, -1, 1, 2, 3, 5])
def test_truncated_phase_at_superrevival_sixth(hydrogen, packet45, scales45, x):
    pm = PhaseModel.truncated(scales45, 3)
    t = scales45.t_sr / 6
    cyc = _cycles_oracle(45, x, Fraction(45**5, 12), 3)
    mpmath.mp.dps = 30
    ref = complex(mpmath.exp(-2j * mpmath.pi * (cyc - math.floor(cyc))))
    assert phase_at(hydrogen, packet45, pm, 45 + x, t) == pytest.approx(ref, abs=1e-9)


def test_superrevival_sixth_example_k2(hydrogen, packet45, scales45):
    # x = 2: 337.5 - 22.5 + 4/3 cycles, i.e. one third of a cycle modulo 1
    assert _cycles_oracle(45, 2, Fraction(45**5, 12), 3) % 1 == Fraction(1, 3)
    val = phase_at(hydrogen, packet45, PhaseModel.truncated(scales45, 3), 47, scales45.t_sr / 6)
    assert val == pytest.approx(complex(math.cos(2 * math.pi / 3), -math.sin(2 * math.pi / 3)), abs=1e-9)


def test_full_revival_is_perfect_at_second_order(hydrogen, packet45, scales45):
    tr = autocorrelation(hydrogen, packet45, PhaseModel.truncated(scales45, 2),
                         np.array([0.0, scales45.t_rev]))
    assert abs(tr.amplitude[1]) == pytest.approx(1.0, abs=1e-9)


def test_first_order_is_periodic(hydrogen, packet45, scales45):
    pm = PhaseModel.truncated(scales45, 1)
    t = np.linspace(0, 3 * scales45.t_cl, 301)
    a = autocorrelation(hydrogen, packet45, pm, t).amplitude
    b = autocorrelation(hydrogen, packet45, pm, t + 7 * scales45.t_cl).amplitude
    assert np.allclose(a, b, atol=1e-9)


def test_parseval_time_average(hydrogen, packet45, scales45):
    # the long-time mean of |A|^2 equals sum |c_n|^4 for a nondegenerate spectrum
    t = np.linspace(0, scales45.t_rev, 200001)
    tr = autocorrelation(hydrogen, packet45, PhaseModel.truncated(scales45, 2), t)
    mean = np.mean(tr.intensity[:-1])
    assert mean == pytest.approx(float(np.sum(packet45.weights**2)), rel=1e-6)


def test_exact_minus_truncated_obeys_remainder_bound(hydrogen, packet45, scales45):
    t = time_grid(0, 0.5 * scales45.t_rev, scales45.t_cl, 64)
    ex = autocorrelation(hydrogen, packet45, PhaseModel.exact(), t).amplitude
    tr = autocorrelation(hydrogen, packet45, PhaseModel.truncated(scales45, 3), t).amplitude
    # per-state Taylor remainder of the energy, in exact arithmetic
    nb = Fraction(45)
    e = lambda n: -Fraction(1, 2) / n**2  # noqa: E731
    rem = []
    for n in packet45.indices[:, 0]:
        x = Fraction(int(n)) - nb
        taylor = e(nb) + x / nb**3 - Fraction(3, 2) * x**2 / nb**4 + 2 * x**3 / nb**5
        rem.append(abs(float(e(Fraction(int(n))) - taylor)))
    bound = np.minimum(2.0, np.multiply.outer(t, rem)) @ packet45.weights
    assert np.all(np.abs(np.abs(ex) - np.abs(tr)) <= bound + 1e-12)
    assert np.max(np.abs(np.abs(ex) - np.abs(tr))[t < 0.01 * scales45.t_rev]) < 1e-3


def test_frequencies_exact_mode(hydrogen, packet45):
    nu = frequencies(hydrogen, packet45, PhaseModel.exact())
    assert np.allclose(nu, -0.5 / packet45.indices[:, 0] ** 2 / (2 * math.pi), rtol=1e-15)


def test_trace_csv_round_trip(tmp_path, hydrogen, packet45, scales45):
    t = time_grid(0, scales45.t_cl, scales45.t_cl, 32)
    tr = autocorrelation(hydrogen, packet45, PhaseModel.exact(), t)
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    text = path.read_bytes()
    assert text.startswith(b"t_atomic,t_si,re_A,im_A,abs2_A\n") and b"\r" not in text
    back = AutocorrelationTrace.from_csv(path)
    assert np.array_equal(back.t, tr.t) and np.array_equal(back.amplitude, tr.amplitude)


def test_time_grid_and_validation(hydrogen, packet45):
    g = time_grid(0.0, 10.0, 1.0, 8)
    assert g.size == 81 and g[-1] == 10.0
    with pytest.raises(ConfigError):
        autocorrelation(hydrogen, packet45, PhaseModel.exact(), np.array([0.0, 2.0, 1.0]))
    with pytest.raises(ConfigError):
        time_grid(1.0, 1.0, 1.0)


def test_radial_density_normalized_and_half_revival_mirror(hydrogen):
    p = build_packet(hydrogen, 45, 2.5, 10)
    sc = hydrogen.time_scales(45)
    r = default_radial_grid(p).r
    d_half = radial_density(p, hydrogen, r, sc.t_rev / 2, PhaseModel.truncated(sc, 2))
    d_cl = radial_density(p, hydrogen, r, sc.t_cl / 2, PhaseModel.truncated(sc, 1))
    assert np.allclose(d_half, d_cl, atol=1e-10 * d_cl.max())
    d0 = radial_density(p, hydrogen, r, 0.0)
    assert not np.allclose(d0, d_cl, atol=1e-2 * d0.max())


def test_radial_density_flags_short_grid(hydrogen, packet45):
    with pytest.raises(ResolutionError):
        radial_density(packet45, hydrogen, np.linspace(0, 500, 1001), 0.0)


def test_radial_density_first_order_periodic(hydrogen, packet45, scales45):
    r = default_radial_grid(packet45).r
    pm = PhaseModel.truncated(scales45, 1)
    d0 = radial_density(packet45, hydrogen, r, 0.0, pm)
    d1 = radial_density(packet45, hydrogen, r, scales45.t_cl, pm)
    assert np.allclose(d0, d1, atol=1e-10 * d0.max(), rtol=0)


def test_radial_density_single_state_matches_closed_form(hydrogen):
    p = PacketCoefficients(2.0, np.array([2]), np.array([1.0]))
    r = np.linspace(0, 80, 8001)
    d = radial_density(p, hydrogen, r, 123.0, tol=1e-8)
    assert np.allclose(d, r**4 * np.exp(-r) / 24, atol=1e-14)
