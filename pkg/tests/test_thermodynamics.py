import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import logm

from latticetherm.errors import StateNotFaithful, TooFewPoints
from latticetherm.interactions import Interaction, identity_shift, ising_transverse, onsite_field, surface_energy
from latticetherm.operator_core import DensityMatrix, Volume, operator_norm, random_density_matrix
from latticetherm.thermodynamics import (
    certificate_record,
    centered_windows,
    extrapolate,
    gibbs_state,
    pressure,
    regularity_defect,
    relative_entropy,
    thermo_point,
    variational_gap,
    von_neumann_entropy,
    weak_gibbs_certificate,
    window_states,
)


# ---------------------------------------------------------------- Gibbs and pressure


@pytest.mark.parametrize("L, h, beta", [(1, 0.5, 1.0), (3, 1.2, 0.7), (5, -0.4, 2.0)])
def test_onsite_pressure_closed_form(L, h, beta):
    assert pressure(onsite_field(h, "x"), Volume.cube(L), beta) == pytest.approx(L * np.log(2 * np.cosh(beta * h)))


def test_zero_interaction_gives_maximally_mixed_state():
    rho = gibbs_state(Interaction.zero(), Volume.cube(3))
    assert np.allclose(rho.matrix, np.eye(8) / 8)
    pt = thermo_point(Interaction.zero(), Volume.cube(3))
    assert pt.pressure_per_site == pytest.approx(np.log(2))
    assert pt.entropy_per_site == pytest.approx(np.log(2))


def test_identity_shift_moves_pressure_by_constant():
    phi = ising_transverse(1.0, 0.5)
    vol = Volume.cube(4)
    assert pressure(phi + identity_shift(0.3), vol) == pytest.approx(pressure(phi, vol) - 4 * 0.3)


def test_large_beta_does_not_overflow():
    rho = gibbs_state(ising_transverse(1.0, 1.0), Volume.cube(4), beta=500.0)
    assert np.isfinite(rho.matrix).all()
    assert abs(np.trace(rho.matrix) - 1) < 1e-12


def test_ising_energy_two_sites_closed_form():
    # the spectrum of J zz + h(x1 + x2) is {-J, J, +-sqrt(J^2 + 4h^2)}
    J, h = 0.7, 0.4
    vol = Volume.cube(2)
    pt = thermo_point(ising_transverse(J, h), vol)
    w = np.array([-J, J, np.sqrt(J**2 + 4 * h**2), -np.sqrt(J**2 + 4 * h**2)])
    p = np.exp(-w) / np.exp(-w).sum()
    assert pt.energy_per_site * 2 == pytest.approx(np.dot(p, w))


# ---------------------------------------------------------------- entropies


def test_entropy_known_values():
    vol = Volume.cube(2)
    assert von_neumann_entropy(DensityMatrix.maximally_mixed(vol)) == pytest.approx(2 * np.log(2))
    assert von_neumann_entropy(DensityMatrix.pure([1, 0, 0, 0], vol)) == 0.0


def test_relative_entropy_against_logm(rng):
    vol = Volume.cube(2)
    rho, sigma = random_density_matrix(vol, rng=rng), random_density_matrix(vol, rng=rng)
    expected = np.trace(rho.matrix @ (logm(rho.matrix) - logm(sigma.matrix))).real
    assert relative_entropy(rho, sigma) == pytest.approx(expected, abs=1e-10)


def test_relative_entropy_support_violation_is_infinite():
    vol = Volume.cube(1)
    rho = DensityMatrix.maximally_mixed(vol)
    sigma = DensityMatrix.pure([1, 0], vol)
    assert relative_entropy(rho, sigma) == np.inf
    assert relative_entropy(sigma, rho) == pytest.approx(np.log(2))


@given(seed=st.integers(0, 2**32 - 1))
def test_klein_inequality(seed):
    rng = np.random.default_rng(seed)
    vol = Volume.cube(2)
    rho, sigma = random_density_matrix(vol, rng=rng), random_density_matrix(vol, rng=rng, rank=3)
    assert relative_entropy(rho, sigma) >= 0
    assert relative_entropy(rho, rho) < 1e-10


@given(seed=st.integers(0, 2**32 - 1), J=st.floats(-2, 2), h=st.floats(-2, 2))
def test_variational_gap_is_relative_entropy(seed, J, h):
    vol = Volume.cube(3)
    phi = ising_transverse(J, h)
    rho = random_density_matrix(vol, rng=seed)
    gap = variational_gap(rho, phi, vol)
    assert gap >= -1e-10
    assert gap == pytest.approx(relative_entropy(rho, gibbs_state(phi, vol)), abs=1e-9)


def test_variational_gap_vanishes_at_gibbs():
    vol = Volume.cube(4)
    phi = ising_transverse(0.4, 1.1)
    assert abs(variational_gap(gibbs_state(phi, vol), phi, vol)) < 1e-10


# ---------------------------------------------------------------- certificates


def test_certificate_of_own_gibbs_state_is_trivial():
    phi = ising_transverse(0.3, 1.2)
    vol = Volume.cube(3)
    rec = certificate_record(phi, gibbs_state(phi, vol), vol)
    assert rec.c < 1e-10
    assert rec.d_low == pytest.approx(1) and rec.d_high == pytest.approx(1)


def test_certificate_commuting_closed_form():
    # product states of a field h2 against the Gibbs state of field h1: everything is diagonal
    h1, h2, n = 0.9, 0.4, 3
    vol = Volume.cube(n)
    rec = certificate_record(onsite_field(h1), gibbs_state(onsite_field(h2), vol), vol)
    delta = h1 - h2
    b = np.log(2 * np.cosh(h1)) - np.log(2 * np.cosh(h2))
    assert rec.c == pytest.approx(n * (abs(delta) + abs(b)))
    assert rec.d_low == pytest.approx(np.exp(n * (b - abs(delta))))
    assert rec.d_high == pytest.approx(np.exp(n * (b + abs(delta))))
    assert rec.min_log_ratio == pytest.approx(n * (b - abs(delta)))
    assert rec.D == pytest.approx(-n * (b + abs(delta)))


@given(seed=st.integers(0, 2**32 - 1))
def test_pencil_bounds_bracket_log_ratio(seed):
    # log is operator monotone, so log d_low <= min eig(log rho - log sigma) and max eig <= log d_high
    phi = ising_transverse(0.5, 0.8)
    vol = Volume.cube(2)
    rho = random_density_matrix(vol, rng=seed)
    rec = certificate_record(phi, rho, vol)
    assert np.log(rec.d_low) <= rec.min_log_ratio + 1e-9
    assert -rec.D <= np.log(rec.d_high) + 1e-9
    assert rec.c >= max(abs(rec.min_log_ratio), abs(rec.D)) - 1e-12


def test_window_certificate_respects_surface_bound():
    phi = ising_transverse(0.3, 1.2)
    ambient = Volume.cube(8)
    wins = centered_windows(ambient, [2, 3, 4])
    cert = weak_gibbs_certificate(phi, window_states(phi, ambient, wins), wins, ambient)
    for rec, w in zip(cert.records, wins):
        assert rec.hiai_petz_bound == pytest.approx(2 * operator_norm(surface_energy(phi, w, ambient)))
        assert rec.min_log_ratio >= -rec.hiai_petz_bound - 1e-6
    assert cert.strictly_decreasing
    assert cert.trend is not None and cert.trend.limit < 0.02


def test_certificate_requires_faithful_state():
    vol = Volume.cube(1)
    with pytest.raises(StateNotFaithful):
        certificate_record(onsite_field(1.0), DensityMatrix.pure([1, 0], vol), vol)


def test_regularity_defect_zero_for_gibbs_reference(rng):
    phi = ising_transverse(1.0, 0.7)
    vols = [Volume.cube(L) for L in (2, 3)]
    nu = {v: random_density_matrix(v, rng=rng) for v in vols}
    defects = regularity_defect(nu, lambda v: gibbs_state(phi, v), phi, vols)
    assert max(d for _, d in defects) < 1e-10


# ---------------------------------------------------------------- extrapolation


def test_extrapolate_recovers_exact_law():
    rep = extrapolate([(L, 1.5 - 0.8 / L) for L in (2, 4, 8, 16)])
    assert rep.limit == pytest.approx(1.5) and rep.slope == pytest.approx(-0.8)
    assert rep.residual < 1e-12 and rep.monotone == "increasing"


def test_extrapolate_needs_three_points():
    with pytest.raises(TooFewPoints):
        extrapolate([(2, 1.0), (3, 1.1)])


@given(a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_extrapolate_is_exact_on_its_model(a, b):
    rep = extrapolate([(L, a + b / L) for L in (3, 5, 7, 9)])
    assert rep.limit == pytest.approx(a, abs=1e-9)
    assert rep.predict(100) == pytest.approx(a + b / 100, abs=1e-9)


@pytest.mark.parametrize("h", [0.2, 1.0, -2.5])
def test_variational_gap_of_maximally_mixed_state(h):
    vol = Volume.cube(1)
    gap = variational_gap(DensityMatrix.maximally_mixed(vol), onsite_field(h, "z"), vol)
    assert gap == pytest.approx(np.log(2 * np.cosh(h)) - np.log(2))
