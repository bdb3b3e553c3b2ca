import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirac_qwalk.classical import (StreamingError, apply_mass, apply_scalar_potential, apply_vector_potential,
                                   euler_angles, evolve, spin_rotate, step, stream, streaming_sites,
                                   vector_potential_matrix)
from dirac_qwalk.gates import phase_distance
from dirac_qwalk.lattice import (ConstantPotential, LinearPotential, Potentials, SpinorField, gaussian_packet,
                                 make_lattice, normalize, random_field)
from dirac_qwalk.splitting import scheme_second_order, scheme_third_order, suzuki_compose
from oracles import ALPHA, BETA, free_dirac_fft, spin_rotation_dense, su2_expm, vector_potential_expm


def spike(spec, comp, i, j=0, k=0):
    f = SpinorField.zeros(spec)
    f.amps[comp, i, j, k] = 1
    return normalize(f)


def test_stream_moves_upper_components_down_and_wraps_lower_ones():
    spec = make_lattice(3)
    out = stream(spike(spec, 0, 3), 0, 1)
    assert np.flatnonzero(np.abs(out.amps[0, :, 0, 0]))[0] == 2
    out = stream(spike(spec, 3, 7), 0, 1)
    assert np.flatnonzero(np.abs(out.amps[3, :, 0, 0]))[0] == 0


@given(st.integers(0, 2**32 - 1), st.integers(0, 2), st.integers(-5, 5))
def test_stream_is_an_exact_permutation(seed, axis, sites):
    spec = make_lattice(2, 3, 1)
    f = random_field(spec, np.random.default_rng(seed))
    assert np.array_equal(stream(stream(f, axis, sites), axis, -sites).amps, f.amps)
    g = f
    n = spec.shape[axis]
    for _ in range(n):
        g = stream(g, axis, 1)
    assert np.array_equal(g.amps, f.amps)


@pytest.mark.parametrize("axis", [0, 1, 2])
def test_spin_rotation_matches_dense_matrix(axis):
    spec = make_lattice(1, 1, 1)
    f = random_field(spec, np.random.default_rng(axis))
    expect = np.tensordot(spin_rotation_dense(axis), f.amps, axes=(1, 0))
    assert np.max(np.abs(spin_rotate(f, axis).amps - expect)) < 1e-15
    back = spin_rotate(spin_rotate(f, axis), axis, inverse=True)
    assert np.max(np.abs(back.amps - f.amps)) < 1e-15


def test_spin_rotation_example():
    spec = make_lattice(1)
    f = SpinorField.zeros(spec)
    f.amps[0] = 1
    assert np.allclose(spin_rotate(f, 0).amps[:, 0, 0, 0], np.array([1, 0, 0, 1]) / math.sqrt(2), atol=1e-15)


def test_mass_operator():
    f = random_field(make_lattice(2), np.random.default_rng(0))
    assert np.array_equal(apply_mass(f, 0.3, 0.0).amps, f.amps)
    flipped = apply_mass(f, 1.0, math.pi)
    assert np.max(np.abs(flipped.amps + f.amps)) < 1e-15


def test_scalar_potential_phases():
    spec = make_lattice(2, ell=0.5, origin=(-1, 0, 0))
    f = random_field(spec, np.random.default_rng(1))
    zero = apply_scalar_potential(f, 0.0, 0.1, Potentials())
    assert np.array_equal(zero.amps, f.amps)
    const = apply_scalar_potential(f, 0.0, 0.1, Potentials(scalar_potential=ConstantPotential(2.0)))
    ratio = const.amps / f.amps
    assert np.allclose(ratio, ratio.flat[0]) and abs(abs(ratio.flat[0]) - 1) < 1e-15
    e_x, e, dt = 0.7, -1.0, 0.1
    lin = apply_scalar_potential(f, 0.0, dt, Potentials(charge=e, scalar_potential=LinearPotential((e_x, 0, 0))))
    x = spec.mesh()[0]
    assert np.allclose(lin.amps, f.amps * np.exp(1j * e * e_x * x * dt)[None], atol=1e-15)


@settings(max_examples=40)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(0.01, 1.0), st.sampled_from([-1.0, 1.0, 2.5]))
def test_vector_potential_matches_matrix_exponential(a, dt, e):
    assert np.max(np.abs(vector_potential_matrix(a, dt, e) - vector_potential_expm(a, dt, e))) < 1e-12


def test_vector_potential_zero_is_identity():
    f = random_field(make_lattice(2), np.random.default_rng(2))
    assert np.array_equal(apply_vector_potential(f, 0.0, 0.1, Potentials()).amps, f.amps)


@settings(max_examples=60)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(0.01, 1.0))
def test_euler_angles_reconstruct_the_field_rotation(a, dt):
    angles = euler_angles(a, dt, -1.0)
    target = su2_expm(-1.0 * dt * np.asarray(a))
    assert phase_distance(angles.matrix(), target) <= 1e-10
    assert np.max(np.abs(np.exp(1j * angles.phase) * angles.matrix() - target)) <= 1e-10


def test_euler_degenerate_cases():
    assert euler_angles((0, 0, 0), 0.1) == (0.0, 0.0, 0.0, 0.0)
    d, theta, xi, _ = euler_angles((0, 0, 0.8), 0.1)
    assert theta == 0 and d == xi


def test_streaming_sites_must_be_integral():
    assert streaming_sites(Fraction(2), Fraction(1, 2)) == 1
    with pytest.raises(StreamingError):
        streaming_sites(Fraction(1), Fraction(1, 2))
    f = random_field(make_lattice(3, n_star=Fraction(1, 2)), np.random.default_rng(0))
    with pytest.raises(StreamingError):
        step(f, scheme_second_order(), 0.0, Potentials())


def test_massless_step_splits_a_spike_into_two_movers():
    spec = make_lattice(3)
    out = step(spike(spec, 0, 4), scheme_second_order(), 0.0, Potentials())
    sites = np.flatnonzero(np.sum(np.abs(out.amps[:, :, 0, 0]) ** 2, axis=0) > 1e-14)
    assert list(sites) == [3, 5]


def test_step_without_interactions_is_pure_walk():
    spec = make_lattice(2, 2, 1)
    f = random_field(spec, np.random.default_rng(3))
    g = f
    for a in range(3):
        g = spin_rotate(stream(spin_rotate(g, a, inverse=True), a, 1), a)
    assert np.max(np.abs(step(f, scheme_second_order(), 0.0, Potentials()).amps - g.amps)) < 1e-15


def test_commuting_generators_make_the_orders_agree():
    spec = make_lattice(3, n_star=2)
    f = random_field(spec, np.random.default_rng(5))
    pots = Potentials(scalar_potential=ConstantPotential(0.4))
    a = step(f, scheme_second_order(), 0.0, pots).amps
    b = step(f, scheme_third_order(), 0.0, pots).amps
    ph = np.vdot(a, b) / abs(np.vdot(a, b))
    assert np.max(np.abs(a * ph - b)) < 1e-13


def test_norm_is_conserved_with_every_operator():
    spec = make_lattice(2, 2, 2, ell=0.3, n_star=2)
    f = random_field(spec, np.random.default_rng(6))
    pots = Potentials(mass=1.3, scalar_potential=LinearPotential((0.2, -0.1, 0.3)),
                      vector_potential=lambda t: (0.5 * math.sin(t), 0.2, -0.3 * t))
    for scheme in (scheme_second_order(), scheme_third_order()):
        g = evolve(f, scheme, pots, 100)
        assert abs(g.norm() - 1) < 1e-10


def _packet(n, length=16.0, n_star=2):
    ell = length / 2**n
    spec = make_lattice(n, ell=ell, n_star=n_star, origin=(-length / 2, 0, 0))
    return gaussian_packet(spec, (1, 0, 0.5j, 0.3), (0, 0, 0), 1.0, (1.5, 0, 0))


def _error(f, g, t, mass):
    ref = free_dirac_fft(f.amps, f.spec.ell, mass, t)
    return math.sqrt(f.spec.ell * np.sum(np.abs(g.amps - ref) ** 2))


@pytest.mark.parametrize("scheme,expected", [(scheme_second_order(), 4.0), (scheme_third_order(), 8.0)])
def test_one_step_error_ratio_under_refinement(scheme, expected):
    mass = 1.0
    errs = []
    for n in (8, 9):
        f = _packet(n)
        errs.append(_error(f, step(f, scheme, 0.0, Potentials(mass=mass)), f.spec.dt, mass))
    assert abs(errs[0] / errs[1] - expected) <= 0.3 * expected


def test_plane_wave_oracle_agrees_with_dense_hamiltonian():
    # the FFT oracle must use H = -alpha p + beta m, the sign the streaming convention implies
    p, m = 0.7, 0.4
    h = -p * ALPHA[0] + m * BETA
    assert np.allclose(np.linalg.eigvalsh(h), [-math.hypot(p, m)] * 2 + [math.hypot(p, m)] * 2)


def _global_slope(scheme, levels, n_star):
    dts, errs = [], []
    for n in levels:
        f = _packet(n, n_star=n_star)
        steps = round(2.0 / f.spec.dt)
        g = evolve(f, scheme, Potentials(mass=1.0), steps)
        dts.append(f.spec.dt)
        errs.append(_error(f, g, steps * f.spec.dt, 1.0))
    return float(np.polyfit(np.log(dts), np.log(errs), 1)[0])


def test_composition_of_the_symmetric_scheme_gains_an_order():
    p = [Fraction(1, 6)] * 3 + [Fraction(1, 3)] * 3 + [Fraction(-1, 2)]
    composed = suzuki_compose(scheme_third_order(), p, m=3)
    assert abs(_global_slope(composed, (9, 10, 11), 12) - 3) <= 0.35
    # with the unsymmetric base the dt^2 error survives
    assert abs(_global_slope(suzuki_compose(scheme_second_order(), p), (9, 10, 11), 12) - 1) <= 0.35
