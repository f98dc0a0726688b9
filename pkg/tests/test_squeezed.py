import math

import numpy as np
import pytest
from scipy.integrate import quad

from rydrevival.exceptions import ConfigError, DivergentMomentError, NoRootError, ResolutionError
from rydrevival.packet import PhaseModel
from rydrevival.radial import RadialGrid
from rydrevival.squeezed import (
    FitTarget,
    SqueezedStateParams,
    evolve_uncertainty,
    expectations,
    fit,
    moments,
    project,
    quadrature_moment,
    quadrature_momentum,
)


@pytest.fixture(scope="module")
def fitted45():
    target = FitTarget(45)
    params = fit(target)
    return target, params, project(params, nbar=45)


def test_moment_examples():
    assert moments(SqueezedStateParams(0.3, 0.7), 0) == pytest.approx(1.0, rel=1e-15)
    assert moments(SqueezedStateParams(0.0, 1.0), 1) == pytest.approx(1.5, rel=1e-15)
    assert moments(SqueezedStateParams(1.0, 0.02), -1) == pytest.approx(0.01, rel=1e-14)


def test_norm_against_plain_quadrature():
    p = SqueezedStateParams(2.5, 0.3, 0.1)
    val, _ = quad(lambda r: abs(p.wavefunction(np.array([r]))[0]) ** 2 * r * r, 0, np.inf, epsabs=1e-14)
    assert val == pytest.approx(1.0, abs=1e-10)


def test_divergent_moment():
    with pytest.raises(DivergentMomentError):
        moments(SqueezedStateParams(-1.2, 1.0), -1)
    with pytest.raises(DivergentMomentError):
        expectations(SqueezedStateParams(-0.7, 1.0))


@pytest.mark.parametrize("alpha", [0.0, 0.5, 3.0, 12.0, 50.0])
@pytest.mark.parametrize("gamma0", [1e-3, 0.05, 1.0])
def test_closed_form_moments_match_quadrature(alpha, gamma0):
    p = SqueezedStateParams(alpha, gamma0)
    for m in (-2, -1, 1, 2):
        assert moments(p, m) == pytest.approx(quadrature_moment(p, m), rel=1e-8)


@pytest.mark.parametrize("alpha,gamma0,gamma1", [(0.2, 0.5, 0.0), (4.0, 0.01, 0.3), (30.0, 0.2, -1.5)])
def test_momentum_identities(alpha, gamma0, gamma1):
    p = SqueezedStateParams(alpha, gamma0, gamma1)
    mean, sq = quadrature_momentum(p)
    ex = expectations(p)
    assert mean.real == pytest.approx(-gamma1, abs=1e-10 * max(1.0, abs(gamma1)))
    assert abs(mean.imag) < 1e-8 * gamma0
    assert sq == pytest.approx(ex.p_r2, rel=1e-8)


def test_params_validation():
    with pytest.raises(ConfigError):
        SqueezedStateParams(-1.5, 1.0)
    with pytest.raises(ConfigError):
        SqueezedStateParams(1.0, 0.0)
    with pytest.raises(ConfigError):
        FitTarget(45, l=50)


def test_fit_conditions(fitted45):
    target, params, _ = fitted45
    ex = expectations(params, target.l)
    assert params.gamma1 == 0.0 and abs(ex.p_r) < 1e-12
    assert ex.r == pytest.approx(2 * 45**2, rel=1e-9)
    assert ex.energy == pytest.approx(-1 / (2 * 45**2), rel=1e-9)
    assert 0.5 <= ex.product <= 1.0


def test_fit_kepler_orbit_and_explicit_radius():
    t = FitTarget(30, orbit="kepler")
    assert t.outer_radius == pytest.approx(900 * (1 + math.sqrt(1 - 2 / 900)))
    assert expectations(fit(t)).r == pytest.approx(t.outer_radius, rel=1e-9)
    t2 = FitTarget(30, r_out=1500.0)
    assert expectations(fit(t2)).energy == pytest.approx(t2.energy, rel=1e-9)


def test_fit_is_deterministic():
    assert fit(FitTarget(45)) == fit(FitTarget(45))


def test_fit_reports_missing_root():
    with pytest.raises(NoRootError, match="no root"):
        fit(FitTarget(45, r_out=1e6))


def test_projection_peak_and_bessel(fitted45):
    _, params, packet = fitted45
    assert packet.indices[np.argmax(packet.weights), 0] == 45
    assert packet.metadata["captured_norm"] <= 1.0 + 1e-12
    assert packet.metadata["captured_norm"] > 0.999


def test_captured_norm_grows_with_window(fitted45):
    _, params, _ = fitted45
    caps = [project(params, nbar=45, half_width=w, threshold=0.0).metadata["captured_norm"]
            for w in (2, 4, 6, 8)]
    assert all(b >= a for a, b in zip(caps, caps[1:]))
    with pytest.raises(ResolutionError):
        project(params, nbar=45, half_width=2)


def test_evolution_at_zero_reproduces_fit(fitted45):
    target, params, packet = fitted45
    s = evolve_uncertainty(packet, np.array([0.0]))
    ex = expectations(params)
    assert s.r_mean[0] == pytest.approx(ex.r, rel=1e-6)
    assert s.delta_r[0] == pytest.approx(ex.delta_r, rel=1e-6)
    assert abs(s.p_mean[0]) < 1e-6 * ex.delta_p
    assert s.delta_p[0] == pytest.approx(ex.delta_p, rel=1e-6)


def test_projection_reproduces_wavefunction(fitted45):
    _, params, packet = fitted45
    grid = RadialGrid.for_levels(60)
    from rydrevival.packet import radial_basis

    psi = packet.amplitudes @ radial_basis(packet, grid.r)
    ref = params.wavefunction(grid.r)
    err = grid.integrate(np.abs(psi - ref) ** 2 * grid.r**2)
    assert err < 1e-8


def test_uncertainty_oscillates_with_classical_period(fitted45):
    _, _, packet = fitted45
    t_cl = 2 * math.pi * 45**3
    s = evolve_uncertainty(packet, np.linspace(0, 3 * t_cl, 193))
    assert np.all(s.product >= 0.5 - 1e-9)
    assert s.oscillation_period() == pytest.approx(t_cl, rel=0.05)


def test_second_order_revival_restores_product(fitted45):
    _, _, packet = fitted45
    from rydrevival.spectrum import HydrogenSpectrum

    sc = HydrogenSpectrum().time_scales(45)
    s = evolve_uncertainty(packet, np.array([0.0, sc.t_rev / 2, sc.t_rev]),
                           phase_model=PhaseModel.truncated(sc, 2))
    assert s.product[2] == pytest.approx(s.product[0], rel=1e-8)
    assert s.product[1] > 2 * s.product[0]


def test_coarse_grid_detected(fitted45):
    _, _, packet = fitted45
    with pytest.raises(ResolutionError):
        evolve_uncertainty(packet, np.array([0.0]), grid=RadialGrid.for_levels(20))


def test_uncertainty_csv(tmp_path, fitted45):
    _, _, packet = fitted45
    s = evolve_uncertainty(packet, np.linspace(0, 1e5, 5))
    path = tmp_path / "u.csv"
    s.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,r_mean,delta_r,p_r_mean,delta_p_r,product" and len(lines) == 6
