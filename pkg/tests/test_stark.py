import json
from fractions import Fraction

import numpy as np
import pytest

from rydrevival.exceptions import ConfigError, ResolutionError
from rydrevival.packet import PacketCoefficients, PhaseModel, autocorrelation, build_packet
from rydrevival.spectrum import StarkSpectrum
from rydrevival.stark import (
    FractionalTime,
    Periods,
    antiperiodicity_check,
    direct_amplitudes,
    expansion_coefficients,
    minimal_periods,
    node_structure,
    reconstruct,
    split_parity,
    stark_example,
    theta_phase,
)

R = Fraction(1, 12)


@pytest.fixture(scope="module")
def example():
    spec, sc = stark_example()
    packet = build_packet(spec, 24, 1.0, 6, sigma_k=2.0, window_k=8)
    return spec, sc, packet


def _frac(sc, f):
    return FractionalTime.from_revival_fraction(f, R, sc)


def _brute_period(theta, step_m, step_k, limit=200, block=48):
    """Smallest positive shift leaving theta invariant mod 1 on a block; no divisor shortcut."""
    for d in range(1, limit):
        if all((theta(m + d * step_m, k + d * step_k) - theta(m, k)).denominator == 1
               for m in range(block) for k in range(block)):
            return d
    raise AssertionError("no period below limit")


def test_fractional_time_from_revival_fraction(example):
    _, sc, _ = example
    tf = _frac(sc, Fraction(1, 2))
    assert (tf.p1q1, tf.p12q12) == (6, Fraction(1, 2))
    assert tf.time == pytest.approx(6 * sc.t_rev_n) == pytest.approx(sc.t_rev_nk / 2)
    with pytest.raises(ConfigError):
        FractionalTime.from_revival_fraction(Fraction(1, 2), Fraction(1, 10), sc)


def test_split_parity_partitions(example):
    _, _, packet = example
    odd, even = split_parity(packet)
    assert odd.size + even.size == packet.size
    assert odd.norm + even.norm == pytest.approx(1.0, abs=1e-14)
    assert np.all(odd.x % 2 == 1) and np.all(even.x % 2 == 0)
    # nbar = 24: odd x gives odd n, so k is even and kappa = k/2 covers the even k values
    assert np.array_equal(2 * odd.kappa, odd.indices[:, 1])
    assert np.array_equal(2 * even.kappa + 1, even.indices[:, 1])


def test_split_parity_odd_only():
    spec = StarkSpectrum(1e-8)
    pairs = [(n, k) for n in (23, 25) for k in (-2, 0, 2)]
    amps = np.full(len(pairs), 1 / np.sqrt(len(pairs)))
    p = PacketCoefficients(24.0, np.array(pairs), amps, center_k=0.0)
    odd, even = split_parity(p)
    assert even.size == 0 and odd.size == 6
    with pytest.raises(ConfigError):
        even.as_packet()
    with pytest.raises(ConfigError):
        split_parity(PacketCoefficients(24.0, np.array([24]), np.array([1.0])))


def test_theta_examples():
    assert theta_phase("even", 0, 5, Fraction(1, 2), R) == 0
    assert theta_phase("odd", 1, 0, Fraction(1, 2), R) == Fraction(1, 2)
    assert theta_phase("odd", 3, 2, Fraction(1, 3), R) == Fraction(3 - Fraction(1, 6), 1) % 1
    with pytest.raises(ConfigError):
        theta_phase("odd", 2, 0, Fraction(1, 2), R)


@pytest.mark.parametrize("frac,expected", [(Fraction(1), (1, 1, 1, 1)), (Fraction(1, 2), (1, 2, 2, 1))])
def test_periods_at_full_and_half_revival(example, frac, expected):
    _, sc, _ = example
    assert minimal_periods(_frac(sc, frac), R).as_tuple() == expected


def test_periods_brute_force_one_third_of_revival_n(example):
    _, sc, _ = example
    tf = _frac(sc, Fraction(1, 36))  # p1/q1 = 1/3
    assert tf.p1q1 == Fraction(1, 3)
    per = minimal_periods(tf, R)
    P, RP = tf.p1q1, R * tf.p1q1
    for rho, eps, (l1, l2) in ((1, 0, per.for_sector("odd")), (0, 1, per.for_sector("even"))):
        th = lambda m, k: P * (2 * m + rho) ** 2 - RP * (2 * m + rho) * k - eps * RP * (2 * m + rho) / 2  # noqa: E731
        assert _brute_period(th, 1, 0) == l1
        assert _brute_period(th, 0, 1) == l2


def test_coefficients_full_revival_single_unit_term(example):
    _, sc, _ = example
    ex = expansion_coefficients(_frac(sc, Fraction(1)), R)
    for sec in ex.sectors.values():
        assert sec.table.shape == (1, 1) and abs(sec.table[0, 0]) == pytest.approx(1.0, abs=1e-14)


def test_coefficients_half_revival_shifts(example):
    _, sc, _ = example
    tf = _frac(sc, Fraction(1, 2))
    ex = expansion_coefficients(tf, R)
    odd, even = ex.sectors["odd"], ex.sectors["even"]
    assert odd.significant() == [(0, 1)] and even.significant() == [(1, 0)]
    d1, d2 = odd.shifts(0, 1, tf)
    assert d1 == 0 and d2 == pytest.approx(0.5 * sc.t_cl_k)
    d1, d2 = even.shifts(1, 0, tf)
    assert d1 == pytest.approx(0.25 * sc.t_cl_n) and d2 == 0


@pytest.mark.parametrize("frac", [Fraction(1), Fraction(1, 2), Fraction(1, 3), Fraction(1, 24),
                                  Fraction(5, 12), Fraction(7, 36)])
def test_reconstruction_matches_direct(example, frac):
    spec, sc, packet = example
    tf = _frac(sc, frac)
    ex = expansion_coefficients(tf, R)
    for sec in ex.sectors.values():
        assert np.sum(np.abs(sec.table) ** 2) == pytest.approx(1.0, abs=1e-12)
    err = np.max(np.abs(reconstruct(packet, ex, tf.time) - direct_amplitudes(spec, packet, sc, tf.time)))
    assert err < 1e-10


def test_reconstruct_time_mismatch(example):
    _, sc, packet = example
    tf = _frac(sc, Fraction(1, 2))
    with pytest.raises(ConfigError, match="differs"):
        reconstruct(packet, expansion_coefficients(tf, R), tf.time * 1.01)


def test_expansion_json(tmp_path, example):
    _, sc, _ = example
    ex = expansion_coefficients(_frac(sc, Fraction(1, 3)), R)
    path = tmp_path / "e.json"
    ex.to_json(path)
    data = json.loads(path.read_text())
    assert data["periods"] == [3, 3, 3, 3] and data["ratio"] == "1/12"


def test_antiperiodicity(example):
    _, sc, packet = example
    times = np.random.default_rng(7).uniform(0, sc.t_rev_nk, 100)
    rep = antiperiodicity_check(split_parity(packet), times, sc.t_cl_n, sc.t_cl_k, packet=packet)
    assert rep.holds(1e-12)
    assert rep.mixed_antiperiodic_deviation > 0.1 and rep.mixed_periodic_deviation > 0.1


def _node_trace(spec, sc, packet, samples=4097):
    center = sc.t_rev_nk / 2
    t = np.linspace(center - sc.t_cl_n, center + sc.t_cl_n, samples)
    return autocorrelation(spec, packet, PhaseModel.truncated(sc, 2), t)


def test_odd_sector_nodes_at_half_period(example):
    spec, sc, packet = example
    odd, even = split_parity(packet)
    rep = node_structure(_node_trace(spec, sc, odd.as_packet()), sc.t_cl_n)
    assert rep.times.size >= 3 and rep.spacing_matches(0.05)
    rep_even = node_structure(_node_trace(spec, sc, even.as_packet()), sc.t_cl_n)
    assert not rep_even.spacing_matches(0.05)


def test_node_resolution_error(example):
    spec, sc, packet = example
    with pytest.raises(ResolutionError):
        node_structure(_node_trace(spec, sc, packet, samples=200), sc.t_cl_n)


def test_periods_container():
    p = Periods(1, 2, 3, 4)
    assert p.for_sector("even") == (3, 4) and p.as_tuple() == (1, 2, 3, 4)
