# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

import math

from hypothesis import given, settings
from hypothesis.strategies import floats, integers
import numpy as np
from pytest import approx, raises

from dirichletlab.heatkernel import assemble_generator
from dirichletlab.space import (
    DomainMask, ball_domain, build_lattice, build_path,
    build_sierpinski_gasket,
)
from dirichletlab.spectral import (
    EigenSolution, PotentialField, SubdomainError, as_potential,
    component_ground_states, critical_well_depth, eigenvalue_ball_bound,
    faber_krahn_functional, feynman_kac_apply, principal_eigenvalue,
)

###############################################################################
# Fixtures
###############################################################################

PATH = build_path(21, conductance=0.5)
INTERIOR = DomainMask(range(1, 20), PATH.n)
LATTICE = build_lattice(2, 9)

###############################################################################
# Potentials
###############################################################################

def test_potential_negative_part():
    V = PotentialField([1.0, -2.0, 0.0, -0.5])
    assert V.negative_part.tolist() == [0.0, 2.0, 0.0, 0.5]
    assert V.theta() == 2.0
    assert V.norm(1, np.ones(4)) == approx(2.5)
    assert V.norm(2, np.ones(4)) == approx(math.sqrt(4.25))
    assert V.norm(np.inf, np.ones(4)) == 2.0

def test_potential_norm_on_domain():
    V = PotentialField([1.0, -2.0, 0.0, -0.5])
    D = DomainMask([2, 3], 4)
    assert V.norm(1, np.ones(4), D) == approx(0.5)
    assert V.theta(D) == 0.5

def test_potential_rejects_non_finite():
    with raises(SubdomainError):
        PotentialField([0.0, math.inf])

def test_potential_well():
    V = PotentialField.well(PATH, 10, 2, 3.0)
    assert np.flatnonzero(V.values).tolist() == [9, 10, 11]
    assert V.theta() == 3.0

def test_as_potential():
    assert np.all(as_potential(None, 5).values == 0.0)
    V = PotentialField.constant(5, 2.0)
    assert as_potential(V, 5) is V
    assert as_potential([1, 2, 3], 3).values.tolist() == [1.0, 2.0, 3.0]

###############################################################################
# Eigenvalues
###############################################################################

def test_path_principal_eigenvalue():
    N = PATH.n - 1
    lam, phi = principal_eigenvalue(PATH, INTERIOR)
    assert lam == approx(1.0 - math.cos(math.pi / N))
    assert np.all(phi[INTERIOR.vertices] > 0)
    assert phi[0] == 0.0 and phi[-1] == 0.0

@given(floats(min_value=-0.5, max_value=5.0))
def test_constant_potential_shifts_the_spectrum(c):
    lam0, _ = principal_eigenvalue(PATH, INTERIOR)
    V = PotentialField.constant(PATH.n, c)
    lam, _ = principal_eigenvalue(PATH, INTERIOR, V)
    assert lam == approx(lam0 + c, abs=1e-10)

def test_disconnected_domain_takes_the_smallest_component():
    D = DomainMask(list(range(1, 4)) + list(range(6, 16)), PATH.n)
    lam, phi = principal_eigenvalue(PATH, D)
    states = component_ground_states(PATH, D)
    assert len(states) == 2
    assert lam == approx(min(s.lam for s in states))
    # the longer interval has the smaller eigenvalue
    assert np.all(phi[1:4] == 0.0)

@settings(deadline=None, max_examples=20)
@given(integers(min_value=0, max_value=5))
def test_eigen_solutions_are_valid(index):
    spec = assemble_generator(LATTICE, ball_domain(LATTICE, 40, 3))
    sol = EigenSolution(spec, index)
    assert sol.is_valid()
    assert sol.lam == spec.eigenvalues[index]

def test_zero_energy_potential():
    spec = assemble_generator(PATH, INTERIOR)
    sol = EigenSolution(spec)
    W = sol.zero_energy_potential()
    lam, _ = principal_eigenvalue(PATH, INTERIOR, W)
    assert lam == approx(0.0, abs=1e-10)

def test_ball_eigenvalue_scaling():
    balls = [(40, r) for r in (2, 3, 4)]
    report = eigenvalue_ball_bound(LATTICE, balls)
    rows = report.details['rows']
    assert [row['radius'] for row in rows] == [2, 3, 4]
    assert all(row['lambda'] > 0 for row in rows)
    assert report.verdict
    assert report.constants['spread'] >= 1.0

def test_faber_krahn_on_the_ball_itself():
    B = ball_domain(LATTICE, 40, 4)
    value = faber_krahn_functional(LATTICE, (40, 4), B)
    lam, _ = principal_eigenvalue(LATTICE, B)
    assert value == approx(lam * LATTICE.scaling.F(4))

def test_faber_krahn_needs_a_subset():
    omega = ball_domain(LATTICE, 40, 4)
    with raises(SubdomainError):
        faber_krahn_functional(LATTICE, (40, 2), omega)

def test_faber_krahn_is_bounded_below_on_gasket():
    space = build_sierpinski_gasket(4)
    x = 0
    r = 0.5
    B = ball_domain(space, x, r)
    values = []
    for k in range(1, len(B) + 1, max(1, len(B) // 5)):
        omega = DomainMask(B.vertices[:k], space.n)
        values.append(faber_krahn_functional(space, (x, r), omega))
    assert min(values) > 0.0

###############################################################################
# Feynman-Kac Semigroup
###############################################################################

@given(floats(min_value=0.0, max_value=3.0),
       floats(min_value=-1.0, max_value=2.0))
def test_constant_potential_scales_the_semigroup(t, c):
    u = np.zeros(PATH.n)
    u[INTERIOR.vertices] = 1.0
    free = feynman_kac_apply(assemble_generator(PATH, INTERIOR), t, u)
    V = np.full(PATH.n, c)
    shifted = feynman_kac_apply(assemble_generator(PATH, INTERIOR, V), t, u)
    assert np.allclose(shifted, math.exp(-c * t) * free)

def test_semigroup_at_time_zero():
    spec = assemble_generator(PATH, INTERIOR)
    u = np.zeros(PATH.n)
    u[5] = 2.0
    assert np.allclose(feynman_kac_apply(spec, 0.0, u), u)

def test_semigroup_is_positivity_preserving():
    spec = assemble_generator(PATH, INTERIOR)
    u = np.zeros(PATH.n)
    u[10] = 1.0
    assert np.all(feynman_kac_apply(spec, 1.5, u) >= -1e-12)

def test_semigroup_needs_support_in_domain():
    spec = assemble_generator(PATH, INTERIOR)
    with raises(SubdomainError):
        feynman_kac_apply(spec, 1.0, np.ones(PATH.n))
    with raises(ValueError):
        feynman_kac_apply(spec, -1.0, np.zeros(PATH.n))

###############################################################################
# Keller Thresholds
###############################################################################

def test_critical_well_depth_crosses_zero():
    well = PATH.ball(10, 2)
    th = critical_well_depth(PATH, INTERIOR, well, p=1.0)
    assert th.depth > 0.0
    assert th.lam == approx(0.0, abs=1e-6)
    assert th.norm == approx(th.depth * well.size)
    below, _ = principal_eigenvalue(PATH, INTERIOR,
                                    PotentialField.well(PATH, 10, 2,
                                                        0.9 * th.depth))
    assert below > 0.0

def test_critical_well_depth_scales_with_domain():
    well = PATH.ball(10, 2)
    wide = critical_well_depth(PATH, INTERIOR, well, p=1.0)
    narrow = critical_well_depth(PATH, DomainMask(range(6, 15), PATH.n),
                                 well, p=1.0)
    assert narrow.depth > wide.depth
