# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

import math

from hypothesis import given, settings
from hypothesis.strategies import floats, integers, sampled_from
import numpy as np
from pytest import approx, raises

from dirichletlab.heatkernel import (
    DEFAULT_ETA, RecurrenceError, SamplingError, assemble_generator,
    check_harnack, deadline, dump_spectrum, fit_envelope, green,
    green_lower_band, green_mass_band, green_matrix, green_truncated,
    heat_kernel, heat_kernel_matrix, load_spectrum, log_green_band, phi,
    phi_grid,
)
from dirichletlab.space import (
    DomainMask, ScalingLaw, SpaceError, ball_domain, build_lattice,
    build_path, build_sierpinski_gasket,
)
from dirichletlab.stochastic import exact_mean_exit

###############################################################################
# Fixtures
###############################################################################

GASKET = build_sierpinski_gasket(3)
LATTICE = build_lattice(2, 8)
PATH = build_path(12, conductance=0.5)

SPACES = (GASKET, LATTICE, PATH)

def spaces():
    return sampled_from(SPACES)

def times():
    return floats(min_value=0.01, max_value=5.0)

###############################################################################
# Heat Kernel
###############################################################################

@settings(deadline=None, max_examples=20)
@given(spaces(), times())
def test_heat_kernel_is_symmetric(space, t):
    spec = assemble_generator(space)
    K = heat_kernel_matrix(spec, t)
    assert np.max(np.abs(K - K.T)) <= 1e-10
    assert heat_kernel(spec, t, 0, 5) == approx(heat_kernel(spec, t, 5, 0),
                                                abs=1e-10)

@settings(deadline=None, max_examples=20)
@given(spaces(), times(), times())
def test_semigroup_property(space, t, s):
    spec = assemble_generator(space)
    mu = spec.measure
    K = heat_kernel_matrix(spec, t + s)
    KK = heat_kernel_matrix(spec, t).dot(mu[:, None]
                                         * heat_kernel_matrix(spec, s))
    assert np.max(np.abs(K - KK)) <= 1e-8

@settings(deadline=None, max_examples=20)
@given(spaces(), times())
def test_stochastic_completeness(space, t):
    spec = assemble_generator(space)
    K = heat_kernel_matrix(spec, t)
    assert np.max(np.abs(K.dot(spec.measure) - 1.0)) <= 1e-10

@settings(deadline=None, max_examples=20)
@given(spaces(), times())
def test_dirichlet_kernel_is_dominated(space, t):
    whole = assemble_generator(space)
    domain = ball_domain(space, 0, 4 * space.min_edge_length)
    killed = assemble_generator(space, domain)
    idx = domain.vertices
    K = heat_kernel_matrix(whole, t)[np.ix_(idx, idx)]
    KD = heat_kernel_matrix(killed, t)
    assert np.all(KD <= K + 1e-12)
    assert np.all(KD >= -1e-12)

def test_heat_kernel_rejects_negative_time():
    spec = assemble_generator(PATH)
    with raises(ValueError):
        heat_kernel(spec, -1.0, 0, 1)

def test_heat_kernel_outside_domain():
    domain = DomainMask(range(1, 11), PATH.n)
    spec = assemble_generator(PATH, domain)
    with raises(ValueError):
        heat_kernel(spec, 1.0, 0, 1)

def test_dense_guard():
    space = build_lattice(2, 60)
    with raises(SpaceError):
        assemble_generator(space)

def test_path_dirichlet_spectrum():
    n = PATH.n
    N = n - 1
    spec = assemble_generator(PATH, DomainMask(range(1, N), n))
    k = np.arange(1, N)
    # conductance 1/2: lambda_k = 1 - cos(k pi / N)
    assert np.allclose(spec.eigenvalues, 1.0 - np.cos(k * math.pi / N))
    assert spec.is_transient

###############################################################################
# Green Functions
###############################################################################

@given(spaces())
def test_green_mass_is_mean_exit(space):
    domain = ball_domain(space, 0, 4 * space.min_edge_length)
    spec = assemble_generator(space, domain)
    G = green_matrix(spec)
    m = exact_mean_exit(space, domain)
    assert np.allclose(G.dot(spec.measure), m[domain.vertices])

def test_green_on_recurrent_space():
    spec = assemble_generator(LATTICE)
    assert not spec.is_transient
    with raises(RecurrenceError):
        green(spec, 0, 1)
    assert green_truncated(spec, 1.0, 0, 1) > 0.0

@given(spaces(), times(), times())
def test_truncated_green_grows_with_time(space, s, t):
    spec = assemble_generator(space)
    lo, hi = sorted((s, t))
    assert (green_truncated(spec, lo, 0, 3)
            <= green_truncated(spec, hi, 0, 3) + 1e-12)

def test_green_matrix_blocks():
    domain = DomainMask(range(1, 11), PATH.n)
    spec = assemble_generator(PATH, domain)
    G = green_matrix(spec, rows=[2, 3], cols=[4])
    assert G.shape == (2, 1)
    assert G[0, 0] == approx(green(spec, 2, 4))
    assert G[1, 0] == approx(green(spec, 3, 4))

def test_green_on_short_path():
    # path {0..4} killed at both ends: G = (D - C)^-1 on {1, 2, 3}
    domain = DomainMask([1, 2, 3], 5)
    unit = assemble_generator(build_path(5), domain)
    expected = np.array([[3, 2, 1], [2, 4, 2], [1, 2, 3]]) / 4.0
    G = green_matrix(unit, rows=[1, 2, 3], cols=[1, 2, 3])
    assert np.allclose(G, expected)
    assert green(unit, 2, 2) == approx(1.0)
    half = assemble_generator(build_path(5, conductance=0.5), domain)
    assert green(half, 2, 2) == approx(2.0)

def test_green_bands_on_lattice():
    space = build_lattice(2, 16)
    spec = assemble_generator(space)
    o = 7 * 16 + 7
    r = 4.0
    lower = green_lower_band(space, spec, [(o, o + 1, r), (o, o + 2, r),
                                           (o, o + 3 * 16, r)])
    assert 0.0 < lower < math.inf
    assert math.isnan(green_lower_band(space, spec, [(o, o + 5, r)]))
    # sum_y G_T(z, y) mu(y) <= T, so the band is at most F(2r/eta) / F(r)
    cap = deadline(space.scaling, 1.0) / space.scaling.F(1.0)
    for radius in (2.0, 4.0, 8.0):
        mass = green_mass_band(space, spec, [(o, radius), (o + 17, radius)])
        assert 0.0 < mass <= cap + 1e-9
    pairs = [(o, o + 1), (o, o + 2), (o, o + 16 + 1)]
    band = log_green_band(space, spec, pairs, r)
    assert 0.0 < band <= deadline(space.scaling, r, DEFAULT_ETA)
    assert log_green_band(space, spec, [(o, o)], r) == 0.0

def test_deadline():
    s = ScalingLaw(2.0, 2.0, 2.0)
    assert deadline(s, 1.0, 0.25) == approx(64.0)
    assert deadline(s, 2.0, 0.5) == approx(64.0)

###############################################################################
# Phi
###############################################################################

@given(floats(min_value=0.01, max_value=100.0),
       sampled_from((2.0, math.log(5) / math.log(2), 3.0)))
def test_phi_closed_form_matches_grid(s, beta):
    scaling = ScalingLaw(1.0, 1.0, beta)
    assert phi(scaling, s) == approx(phi_grid(scaling, s), rel=1e-6)

def test_phi_at_zero():
    scaling = ScalingLaw(1.0, 1.0, 2.0)
    assert phi(scaling, 0.0) == 0.0
    # beta = 2: Phi(s) = s^2 / 4
    assert phi(scaling, 3.0) == approx(2.25)
    with raises(ValueError):
        phi(scaling, -1.0)

###############################################################################
# Envelopes and Harnack
###############################################################################

def _samples(space, rng, n=40):
    xs = rng.integers(space.n, size=n)
    ys = rng.integers(space.n, size=n)
    ts = rng.uniform(0.1, 4.0, size=n)
    samples = [(float(t), int(x), int(y)) for t, x, y in zip(ts, xs, ys)]
    # a few near-diagonal pairs
    samples.extend((t, 27, 27) for t in (0.5, 1.0, 2.0))
    samples.extend((t, 27, 28) for t in (1.0, 4.0))
    return samples

def test_fit_envelope_covers_its_samples():
    rng = np.random.default_rng(3)
    spec = assemble_generator(LATTICE)
    env = fit_envelope(LATTICE, spec, _samples(LATTICE, rng))
    assert env.failures == ()
    assert env.C_ue > 0
    assert 0 < env.eta < 1

def test_fit_envelope_needs_samples():
    spec = assemble_generator(LATTICE)
    with raises(SamplingError):
        fit_envelope(LATTICE, spec, [(1.0, 0, 0)] * 3)
    killed = assemble_generator(LATTICE, ball_domain(LATTICE, 27, 3))
    rng = np.random.default_rng(0)
    with raises(SamplingError):
        fit_envelope(LATTICE, killed, _samples(LATTICE, rng))

def test_harnack_on_constant_data():
    data = np.ones(LATTICE.n)
    assert check_harnack(LATTICE, 27, 3.0, [data]) == approx(1.0)

@given(integers(min_value=0, max_value=2 ** 16))
def test_harnack_ratio_is_at_least_one(seed):
    rng = np.random.default_rng(seed)
    data = rng.random(LATTICE.n) + 0.1
    assert check_harnack(LATTICE, 27, 3.0, [data]) >= 1.0

###############################################################################
# Serialization
###############################################################################

def test_spectrum_files(tmp_path):
    domain = DomainMask(range(1, 11), PATH.n)
    spec = assemble_generator(PATH, domain)
    dump_spectrum(spec, tmp_path, k=4)
    loaded = load_spectrum(PATH, tmp_path)
    assert loaded.domain == domain
    assert np.array_equal(loaded.eigenvalues, spec.eigenvalues[:4])
    assert np.array_equal(loaded.eigenvectors, spec.eigenvectors[:, :4])
