# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

from hypothesis import given, settings
from hypothesis.strategies import integers
import numpy as np
from pytest import approx, raises

from dirichletlab.data_structs import InequalityReport, SuiteResult
from dirichletlab.inequalities import (
    InstanceError, SupersolutionInstance, annulus_hitting_bound,
    check_supersolution, fk_exponent, hitting_certificate, hitting_far_bound,
    hitting_suite, keller_bounds, keller_instances, keller_suite,
    lieb_suite, liouville_instance, liouville_potential_profile,
    liouville_profile, local_fk_certificate, mean_exit_scaling,
    mittag_leffler_moment_bound, random_hitting_instances,
    recurrent_liouville_check, recurrent_suite, schrodinger_instances,
    stability_sweep, transient_control, verify_lieb, wavelength_certificate,
    wavelength_suite, zero_energy_solution,
)
from dirichletlab.space import (
    DomainMask, box_domain, build_lattice, build_path,
    build_sierpinski_gasket, dirichlet_solve, volume,
)
from dirichletlab.spectral import PotentialField

###############################################################################
# Fixtures
###############################################################################

PATH = build_path(41)
GASKET = build_sierpinski_gasket(3)
LATTICE = build_lattice(2, 9)
CENTER = 40

###############################################################################
# Hitting Certificates
###############################################################################

def test_hitting_certificate_on_path():
    cert = hitting_certificate(PATH, 20, [10, 11, 12], 15)
    assert cert.K == (10, 11, 12)
    assert cert.nu_K == approx((1 / 3, 1 / 3, 1 / 3))
    assert 0.0 < cert.green_ratio_bound <= cert.exact_prob + cert.slack
    assert cert.verdict
    assert cert.volume_bound is None

def test_hitting_certificate_rejects_bad_targets():
    with raises(InstanceError):
        hitting_certificate(PATH, 20, [20, 21], 5)
    with raises(InstanceError):
        hitting_certificate(PATH, 20, [10], 5)
    with raises(InstanceError):
        hitting_certificate(PATH, 20, [], 5)

def test_hitting_suite_on_gasket():
    instances = random_hitting_instances(GASKET, 12, seed=1)
    result = hitting_suite(GASKET, instances)
    assert len(result.instances) == 12
    assert result.failures == []
    assert result.verdict
    C1 = result.summary.constants['C1']
    assert C1 > 0

def test_hitting_suite_reports_broken_instances():
    instances = random_hitting_instances(GASKET, 3, seed=2)
    bad = dict(instances[0])
    bad['K'] = [bad['o']]
    result = hitting_suite(GASKET, instances + [bad])
    assert len(result.failures) == 1
    assert not result.verdict
    failed = [r for r in result.instances if r.error is not None]
    assert failed[0].error.startswith('InstanceError')

def test_hitting_suite_is_sorted_by_digest():
    instances = random_hitting_instances(GASKET, 6, seed=3)
    result = hitting_suite(GASKET, instances, workers=3)
    digests = [r.digest for r in result.instances]
    assert digests == sorted(digests)

def test_random_hitting_instances_are_deterministic():
    a = random_hitting_instances(GASKET, 5, seed=9)
    b = random_hitting_instances(GASKET, 5, seed=9)
    assert a == b

###############################################################################
# Hitting Far Away
###############################################################################

def test_hitting_far_bound():
    space = build_lattice(2, 15)
    o = 7 * 15 + 7
    x = o + 4
    report = hitting_far_bound(space, o, x)
    assert report.verdict
    assert 0.0 < report.lhs <= 1.0
    assert report.constants['theta'] == 4.0
    with raises(InstanceError):
        hitting_far_bound(space, o, x, theta=2.0)

def test_annulus_hitting_bound():
    space = build_lattice(2, 15)
    o = 7 * 15 + 7
    report = annulus_hitting_bound(space, o, 2.0)
    assert 0.0 < report.lhs <= 1.0
    assert report.verdict

def test_annulus_must_be_nonempty():
    with raises(InstanceError):
        annulus_hitting_bound(PATH, 20, 0.5)

###############################################################################
# Lieb Coverage
###############################################################################

def test_generated_instances_have_zero_energy_solutions():
    space = build_lattice(2, 12)
    for inst in schrodinger_instances(space, 4, seed=0):
        sol = zero_energy_solution(space, inst['domain'], inst['potential'])
        assert abs(sol.lam) <= 1e-8
        assert sol.residual() <= 1e-8 * np.abs(sol.u).max()

def test_zero_energy_solution_needs_a_zero_eigenvalue():
    D = DomainMask(range(1, 40), PATH.n)
    with raises(InstanceError):
        zero_energy_solution(PATH, D, None)

def test_lieb_degenerate_case():
    report = verify_lieb(LATTICE, DomainMask.whole(LATTICE), None)
    assert report.constants['degenerate']
    assert report.lhs == 1.0
    assert report.verdict

def test_lieb_suite():
    space = build_lattice(2, 12)
    instances = schrodinger_instances(space, 4, seed=5)
    result = lieb_suite(space, instances)
    assert result.verdict
    summary = result.summary
    assert summary.constants['kappa_star'] is not None
    assert summary.constants['monotone']
    for report in result.instances:
        for row in report.details['rows']:
            assert 0.0 < row['coverage'] <= 1.0

###############################################################################
# Keller Bounds
###############################################################################

def test_keller_nonnegative_potential():
    D = box_domain(LATTICE, [1, 1], [6, 6])
    V = PotentialField(np.linspace(0.0, 1.0, LATTICE.n))
    report = keller_bounds(LATTICE, D, V, 2.0)
    assert report.constants['lambda'] > 0
    assert not report.constants['nonpositive']
    assert report.constants['ratio'] is None
    assert report.verdict

def test_keller_exponent_range():
    D = box_domain(LATTICE, [1, 1], [6, 6])
    with raises(InstanceError):
        keller_bounds(LATTICE, D, None, 1.0)

def test_keller_suite():
    space = build_lattice(2, 12)
    instances = keller_instances(space, 6, seed=0)
    result = keller_suite(space, instances, p=2.0)
    assert result.failures == []
    c = result.summary.constants['threshold_keller']
    assert c is not None and c > 0
    for report in result.instances:
        assert report.constants['consistent']

###############################################################################
# Supersolutions
###############################################################################

def test_green_function_is_a_supersolution():
    box = box_domain(LATTICE, [1, 1], [7, 7])
    delta = np.zeros(LATTICE.n)
    delta[CENTER] = 1.0
    g = dirichlet_solve(LATTICE, box, rhs=delta)
    omega = box.minus([CENTER])
    check = check_supersolution(
        SupersolutionInstance(LATTICE, g, omega, None, 2.0, None))
    assert check.verdict
    assert check.violations == ()

def test_constant_fails_with_positive_potential():
    box = box_domain(LATTICE, [1, 1], [7, 7])
    u = np.full(LATTICE.n, 2.0)
    V = np.ones(LATTICE.n)
    check = check_supersolution(
        SupersolutionInstance(LATTICE, u, box, V, 2.0, None))
    assert not check.verdict
    assert len(check.violations) == len(box)
    assert check.worst_gap == approx(4.0)

def test_supersolution_profile_checks():
    box = box_domain(LATTICE, [1, 1], [7, 7])
    u = np.ones(LATTICE.n)
    with raises(InstanceError):
        check_supersolution(
            SupersolutionInstance(LATTICE, -u, box, None, 2.0, None))
    with raises(InstanceError):
        check_supersolution(
            SupersolutionInstance(LATTICE, u, box, u, 2.0, lambda t: t + 1))

###############################################################################
# Liouville Profiles
###############################################################################

def test_constant_profile():
    u = np.full(LATTICE.n, 3.0)
    report = liouville_profile(LATTICE, u, CENTER, [1.0, 2.0, 3.0])
    assert report.constants['kappa3'] == 1.0
    assert report.constants['monotone']
    assert all(row['M'] == 3.0 for row in report.details['rows'])

def test_profile_must_be_superharmonic():
    u = np.zeros(LATTICE.n)
    u[CENTER] = 1.0
    with raises(InstanceError):
        liouville_profile(LATTICE, u, CENTER, [1.0, 2.0])

def test_harmonic_measure_profile():
    space = build_lattice(2, 21)
    o = 10 * 21 + 10
    report = liouville_instance(space, o, 2.0, [3.0, 4.0, 5.0])
    assert report.rhs == 5.0
    assert report.constants['monotone']
    assert report.constants['kappa3'] >= 1.0
    Ms = [row['M'] for row in report.details['rows']]
    assert all(0.0 < M <= 1.0 for M in Ms)

def test_zero_potential_profile():
    report = liouville_potential_profile(LATTICE, np.zeros(LATTICE.n),
                                         CENTER, 1.0, [2.0, 3.0])
    assert report.constants['degenerate']
    for row in report.details['rows']:
        assert row['inf_psi'] == 0.0
        assert row['phi'] == 0.0

def test_potential_profile_covers_the_whole_annulus():
    space = build_lattice(2, 15)
    o = 7 * 15 + 7
    V = np.random.default_rng(4).random(space.n)
    h = space.min_edge_length
    K = np.diag(space.degree) - space.conductance.toarray()
    d_o = space.distances(o)
    report = liouville_potential_profile(space, V, o, 1.0, [2.0, 4.0])
    for row in report.details['rows']:
        r = row['radius']
        psi = []
        mass = []
        for x in np.flatnonzero((d_o >= 0.5 * r) & (d_o <= r)):
            d = space.distances(int(x))
            inner = np.flatnonzero(d < r - h)
            g = np.linalg.inv(K[np.ix_(inner, inner)])
            row_x = int(np.flatnonzero(inner == x)[0])
            psi.append(g[row_x].dot(V[inner] * space.measure[inner]))
            mass.append(np.sum(V[d < r] * space.measure[d < r]))
        assert row['inf_psi'] == approx(min(psi))
        scale = space.scaling.F(r) / volume(space, o, r)
        assert row['phi'] == approx(scale * min(mass))

def test_thinned_annulus_can_only_raise_the_infima():
    space = build_lattice(2, 15)
    o = 7 * 15 + 7
    V = np.random.default_rng(5).random(space.n)
    full = liouville_potential_profile(space, V, o, 1.0, [4.0, 6.0])
    thin = liouville_potential_profile(space, V, o, 1.0, [4.0, 6.0],
                                       max_points=3)
    for a, b in zip(full.details['rows'], thin.details['rows']):
        assert a['inf_psi'] <= b['inf_psi'] + 1e-12
        assert a['phi'] <= b['phi'] + 1e-12

def test_recurrent_lattice():
    report = recurrent_liouville_check(2, (16, 32, 64))
    c = report.constants
    assert c['sizes'] == [16, 32, 64]
    assert c['increasing']
    assert all(0.0 < p <= 1.0 for p in c['probabilities'])
    assert c['truncation'] < 1e-6
    assert report.lhs >= 0.99
    assert report.verdict

def test_recurrent_trivial_box():
    # every vertex of the 3x3 box lies in the ball
    report = recurrent_liouville_check(2, (3,))
    assert report.constants['probabilities'] == [1.0]
    assert report.verdict

def test_transient_control():
    report = transient_control(3, (16, 24, 32))
    probs = report.constants['probabilities']
    assert all(0.0 < p <= 0.9 for p in probs)
    assert report.lhs <= 0.9
    assert report.verdict

def test_transient_control_needs_room():
    with raises(InstanceError):
        transient_control(2, (3, 4))

def test_recurrent_suite_runs_the_control():
    instances = [
        {'dim': 2, 'sizes': [16, 32, 64]},
        {'dim': 3, 'sizes': [12, 16], 'control': True},
    ]
    result = recurrent_suite(LATTICE, instances)
    assert result.failures == []
    assert result.summary.lhs >= 0.99
    assert result.summary.constants['control_final'] <= 0.9
    assert result.verdict

###############################################################################
# Local Faber-Krahn
###############################################################################

def test_fk_exponent():
    assert fk_exponent(build_lattice(3, 4).scaling) == approx(1.5)
    with raises(InstanceError):
        fk_exponent(LATTICE.scaling)

@settings(deadline=None, max_examples=3)
@given(integers(min_value=0, max_value=2 ** 16))
def test_local_fk_median_convention(seed):
    space = build_lattice(3, 8)
    inst = schrodinger_instances(space, 1, seed=seed)[0]
    report = local_fk_certificate(space, inst['domain'], inst['potential'])
    c = report.constants
    assert c['p'] == approx(1.5)
    assert 0.5 <= c['median_cdf'] <= 0.5 + c['quantum'] + 1e-9
    assert report.lhs > 0.0

###############################################################################
# Wavelength Density
###############################################################################

def test_wavelength_on_path():
    D = DomainMask(range(1, 40), PATH.n)
    for index in (0, 1, 3):
        report = wavelength_certificate(PATH, D, index)
        assert report.verdict
        assert report.lhs > 0.0

def _path_eigenpairs():
    D = DomainMask(range(1, 40), PATH.n)
    return [{'domain': D, 'index': k} for k in (0, 1, 3)]

def test_wavelength_suite_is_stable_on_path():
    # C = lambda F(r*) is nearly the same for every mode of the path
    result = wavelength_suite(PATH, _path_eigenpairs())
    c = result.summary.constants
    assert c['band'] == 3.0
    assert 1.0 <= c['spread'] <= 3.0
    assert c['stable']
    assert result.verdict

def test_wavelength_suite_fails_outside_band():
    result = wavelength_suite(PATH, _path_eigenpairs(), band=1.0)
    assert all(r.verdict for r in result.instances)
    assert not result.summary.constants['stable']
    assert not result.verdict

###############################################################################
# Stability Across Sizes
###############################################################################

def _sized(tag, constants, verdict=True):
    summary = InequalityReport(tag, 'summary', None, None, constants,
                               verdict, 0.0, {})
    return SuiteResult(summary, [])

def test_keller_constant_within_band():
    results = {
        32: _sized('keller', {'c_p': 0.4}),
        48: _sized('keller', {'c_p': 1.0}),
    }
    result = stability_sweep('keller', results, 'c_p')
    c = result.summary.constants
    assert c['sizes'] == [32, 48]
    assert c['values'] == [0.4, 1.0]
    assert c['spread'] == approx(2.5)
    assert c['stable']
    assert result.verdict

def test_fk_constant_outside_band():
    results = {
        16: _sized('fk-local', {'c': 0.1}),
        20: _sized('fk-local', {'c': 0.2}),
        24: _sized('fk-local', {'c': 0.5}),
    }
    result = stability_sweep('fk-local', results, 'c')
    assert result.summary.lhs == approx(5.0)
    assert not result.summary.constants['stable']
    assert not result.verdict
    assert stability_sweep('fk-local', results, 'c', band=6.0).verdict

def test_stability_needs_every_size():
    missing = {
        32: _sized('keller', {'c_p': 0.4}),
        48: _sized('keller', {'c_p': None}),
    }
    result = stability_sweep('keller', missing, 'c_p')
    assert result.summary.constants['spread'] is None
    assert not result.verdict
    failed = {
        16: _sized('fk-local', {'c': 0.3}),
        20: _sized('fk-local', {'c': 0.3}, verdict=False),
    }
    result = stability_sweep('fk-local', failed, 'c')
    assert result.summary.constants['stable']
    assert not result.verdict

###############################################################################
# Mean Exit Time and Moments
###############################################################################

def test_mean_exit_scaling_on_path():
    # unit conductance: E tau = r^2 / 2 from the center of B(x, r)
    report = mean_exit_scaling(PATH, 20, [2.0, 4.0, 8.0, 16.0])
    for row in report.details['rows']:
        assert row['scaled'] == approx(0.5)
    assert report.lhs == approx(1.0)
    assert report.rhs == 5.0
    assert report.verdict

def test_mean_exit_scaling_needs_radii():
    with raises(InstanceError):
        mean_exit_scaling(PATH, 1, [4.0])

def test_moment_bound():
    rng = np.random.default_rng(0)
    V = 0.2 * rng.random(LATTICE.n)
    report = mittag_leffler_moment_bound(LATTICE, V, 2.0, [0.5, 1.0, 2.0])
    assert report.verdict
    assert report.constants['rho'] == approx(0.5)
    assert all(row['lhs'] >= 1.0 for row in report.details['rows'])

def test_moment_bound_of_zero_potential():
    report = mittag_leffler_moment_bound(LATTICE, np.zeros(LATTICE.n), 2.0,
                                         [1.0])
    assert report.lhs == 0.0
    assert report.verdict
