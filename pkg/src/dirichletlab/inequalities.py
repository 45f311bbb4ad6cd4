# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from functools import partial
import logging
import math
import time

import numpy as np

from .data_structs import (
    FailedReport, HittingCertificate, InequalityReport, SuiteResult,
    input_digest,
)
from .heatkernel import (
    DEFAULT_ETA, MAX_DENSE_VERTICES, NumericError, RecurrenceError,
    assemble_generator, deadline, green_matrix,
)
from .space import (
    DomainMask, FitError, SpaceError, ball_domain, boundary_distance,
    box_domain, build_lattice, central_vertex, dirichlet_solve, is_grid,
    volume,
)
from .special import (
    NormError, RangeError, log_mittag_leffler, lorentz_norm,
    mittag_leffler,
)
from .spectral import (
    DEFAULT_BAND, EigenSolution, PotentialField, SubdomainError, as_potential,
    critical_well_depth, eigenvalue_ball_bound, feynman_kac_apply,
    principal_eigenvalue,
)
from .stochastic import (
    ExitTimeLaw, HittingOracle, WalkError, exact_hitting_prob,
    exact_mean_exit, low_mode_survival,
)

###############################################################################
# Constants
###############################################################################

logger = logging.getLogger(__name__)

DEFAULT_SLACK = 1e-9

# relative tolerance of the discrete supersolution test
SUPERSOLUTION_TOL = 1e-10

# |lambda| below this (relative) counts as a zero-energy solution
ZERO_ENERGY_TOL = 1e-8

DEFAULT_KAPPAS = (0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0)
DEFAULT_EPSILONS = (0.1, 0.25, 0.5, 0.75)

# ambient balls grow by this factor when approximating P(hit < infinity)
AMBIENT_GROWTH = 1.5
STABLE_RTOL = 0.1

FUNDAMENTAL_LEVEL = 0.75

# max/min bands: scaling profiles, and constants across sizes or domains
EXIT_BAND = 5.0
LIOUVILLE_BAND = 5.0
STABILITY_BAND = 3.0

# deadline of the recurrent check, in units of F(n) log(n)^2
RECURRENT_HORIZON = 0.5
TRANSIENT_CEILING = 0.9

###############################################################################
# Errors and Exceptions
###############################################################################

class InstanceError(ValueError):
    @classmethod
    def start_in_target(cls, o):
        return cls('start vertex {} is in the target set'.format(o))

    @classmethod
    def empty_target(cls):
        return cls('target set is empty')

    @classmethod
    def outside_ball(cls, o, r):
        return cls('target is not contained in B({}, {!r})'.format(o, r))

    @classmethod
    def no_room(cls, need, limit):
        return cls('start at distance {!r} but the space ends at {!r}'
                   .format(need, limit))

    @classmethod
    def empty_annulus(cls, r):
        return cls('annulus of radius {!r} has no vertices'.format(r))

    @classmethod
    def bad_exponent(cls, name, value, condition):
        return cls('{}={!r} must satisfy {}'.format(name, value, condition))

    @classmethod
    def no_solution(cls, lam):
        return cls('no zero-energy solution (closest eigenvalue {!r})'
                   .format(lam))

    @classmethod
    def not_superharmonic(cls, n):
        return cls('profile is not superharmonic at {} vertices'.format(n))

    @classmethod
    def negative_profile(cls):
        return cls('profile must be nonnegative')

    @classmethod
    def bad_profile(cls):
        return cls('f must vanish at 0 and be nondecreasing')

    @classmethod
    def ineligible(cls, scaling):
        return cls('space is ineligible: need alpha2 > beta and '
                   'alpha1 - alpha2 + beta > 0, got {!r}'.format(scaling))

    @classmethod
    def no_radii(cls):
        return cls('no radius fits inside the tested region')

    @classmethod
    def no_certificate(cls):
        return cls('eigenfunction has no sign change or zero in reach')

    @classmethod
    def needs_boundary(cls, name):
        return cls('{} has no boundary to absorb the walk'.format(name))


# errors that fail one instance without stopping the suite
INSTANCE_ERRORS = (
    InstanceError, SpaceError, FitError, SubdomainError, RecurrenceError,
    NumericError, WalkError, NormError, RangeError, ValueError,
    ArithmeticError, np.linalg.LinAlgError,
)

###############################################################################
# Helper Functions
###############################################################################

def _report(tag, inputs, lhs, rhs, constants, verdict, details=None):
    digest = input_digest(tag, **inputs)
    return InequalityReport(tag, digest, lhs, rhs, constants, bool(verdict),
                            0.0, details or {})

def _evaluate(tag, fn, space, instances, workers=1):
    """
    Evaluate `fn(space, **instance)` for every instance. Failures become
    failing reports; the result is ordered by instance digest.
    """
    def job(inst):
        digest = input_digest(tag, space=space.name, **inst)
        start = time.perf_counter()
        try:
            report = fn(space, **inst)
        except INSTANCE_ERRORS as e:
            logger.warning('%s instance %s failed: %s', tag, digest, e)
            return FailedReport(tag, digest, e, time.perf_counter() - start)
        runtime = time.perf_counter() - start
        logger.info('%s instance %s: %s in %.3fs', tag, digest,
                    'pass' if report.verdict else 'FAIL', runtime)
        return report._replace(digest=digest, runtime=runtime)

    instances = list(instances)
    if workers > 1 and len(instances) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(job, instances))
    else:
        reports = [job(inst) for inst in instances]
    return sorted(reports, key=lambda r: r.digest)

def _summary(tag, reports, lhs, rhs, constants, verdict, details=None):
    digest = input_digest(tag, instances=[r.digest for r in reports])
    summary = InequalityReport(tag, digest, lhs, rhs, constants,
                               bool(verdict), 0.0, details or {})
    return SuiteResult(summary, reports)

def _ok(reports):
    return [r for r in reports if r.error is None]

def _spread(values):
    values = [v for v in values if v is not None and v > 0]
    if not values:
        return None
    return max(values) / min(values)

def _indicator(space, vertices):
    f = np.zeros(space.n)
    f[np.asarray(vertices, dtype=np.int64)] = 1.0
    return f


###############################################################################
# Hitting Time Certificates
###############################################################################

def hitting_certificate(space, o, K, r, eta=DEFAULT_ETA, C1=None,
                        slack=DEFAULT_SLACK, spectrum=None, oracle=None):
    """
    Lower bound on P_o(hit K by T), T = F(eta' r), by the second moment of
    the occupation time of K:
        P_o(hit K by T) >= [2 sum_x sum_y nu(x) nu(y) G_T(x,y)/G_T(o,y)]^-1
    with nu the normalized measure on K.
    """
    o = space.check_vertex(o)
    K = np.unique(np.asarray(K, dtype=np.int64))
    if K.size == 0:
        raise InstanceError.empty_target()
    if np.any(K == o):
        raise InstanceError.start_in_target(o)
    d = space.distances(o)
    if np.any(d[K] >= r):
        raise InstanceError.outside_ball(o, r)
    T = deadline(space.scaling, r, eta)
    if spectrum is None:
        spectrum = assemble_generator(space)
    if oracle is None:
        oracle = HittingOracle(space, K)
    mu_K = space.measure[K]
    nu = mu_K / mu_K.sum()
    G = green_matrix(spectrum, T, rows=K, cols=K)
    g_o = green_matrix(spectrum, T, rows=[o], cols=K).ravel()
    second = float(nu.dot(G / g_o[None, :]).dot(nu))
    bound = 1.0 / (2.0 * second)
    exact = oracle.probability(o, T)
    ratio = float(mu_K.sum()) / volume(space, o, r)
    vol_bound = None if C1 is None else C1 * ratio
    return HittingCertificate(space.name, o, tuple(int(k) for k in K),
                              float(r), float(T), tuple(nu.tolist()),
                              exact, bound, ratio, vol_bound, slack)

def hitting_instance(space, o, K, r, eta=DEFAULT_ETA, slack=DEFAULT_SLACK,
                     spectrum=None):
    cert = hitting_certificate(space, o, K, r, eta=eta, slack=slack,
                               spectrum=spectrum)
    constants = {
        'T': cert.T,
        'volume_ratio': cert.volume_ratio,
        'exact_over_ratio': cert.exact_prob / cert.volume_ratio,
    }
    return _report('hitting', {'space': space.name, 'o': o, 'K': K, 'r': r},
                   cert.green_ratio_bound, cert.exact_prob, constants,
                   cert.verdict, {'certificate': cert})

def hitting_suite(space, instances, eta=DEFAULT_ETA, slack=DEFAULT_SLACK,
                  workers=1):
    spectrum = assemble_generator(space)
    fn = partial(hitting_instance, eta=eta, slack=slack, spectrum=spectrum)
    reports = _evaluate('hitting', fn, space, instances, workers)
    ok = _ok(reports)
    # C1: largest constant with C1 mu(K)/V(o,r) <= P on every instance
    C1 = min((r.constants['exact_over_ratio'] for r in ok), default=None)
    excess = max((r.lhs - r.rhs for r in ok), default=None)
    vol_ok = C1 is not None and all(
        C1 * r.constants['volume_ratio'] <= r.rhs + slack for r in ok)
    constants = {'C1': C1, 'slack': slack, 'passed': len(ok)}
    verdict = bool(ok) and vol_ok and all(r.verdict for r in reports)
    return _summary('hitting', reports, excess, slack, constants, verdict)

def random_hitting_instances(space, n, seed, max_radius_edges=8,
                             max_target=4):
    rng = np.random.default_rng(seed)
    h = space.min_edge_length
    instances = []
    while len(instances) < n:
        o = int(rng.integers(space.n))
        r = h * float(rng.integers(2, max_radius_edges + 1))
        B = space.ball(o, r)
        B = B[B != o]
        if B.size == 0:
            continue
        k = int(rng.integers(1, min(max_target, B.size) + 1))
        K = np.sort(rng.choice(B, size=k, replace=False))
        instances.append({'o': o, 'K': [int(v) for v in K], 'r': r})
    return instances


###############################################################################
# Hitting Far Away
###############################################################################

def _ambient_radii(start, limit, h):
    radii = []
    R = start
    while R < limit:
        radii.append(R)
        R *= AMBIENT_GROWTH
    radii.append(limit)
    return radii

def _escape_hitting(space, o, target, starts, d_o):
    """
    P_x(hit target < infinity) approximated by hitting before leaving
    B(o, R) for growing R up to the boundary of the space.
    """
    h = space.min_edge_length
    bnd = space.boundary_vertices()
    limit = float(d_o[bnd].min()) if bnd.size else float(d_o.max()) + h
    need = float(d_o[starts].max())
    if limit <= need + h:
        raise InstanceError.no_room(need, limit)
    probs = None
    prev = None
    R = None
    for R in _ambient_radii(need + h, limit, h):
        ambient = DomainMask.from_mask(d_o < R)
        prev = probs
        probs = exact_hitting_prob(space, target, ambient)[starts]
    stabilized = True
    if prev is not None:
        change = np.abs(probs - prev) / np.maximum(probs, 1e-300)
        stabilized = bool(np.all(change <= STABLE_RTOL))
    return probs, R, stabilized

def hitting_far_bound(space, o, x, theta=None, ball_radius=None):
    o = space.check_vertex(o)
    x = space.check_vertex(x)
    if ball_radius is None:
        ball_radius = space.min_edge_length
    d_o = space.distances(o)
    if theta is None:
        theta = float(d_o[x])
    if theta < d_o[x]:
        raise InstanceError.bad_exponent('theta', theta, '>= d(o, x)')
    target = np.flatnonzero(d_o <= ball_radius)
    probs, R, stabilized = _escape_hitting(space, o, target, [x], d_o)
    prob = float(probs[0])
    rate = space.scaling.F(theta) / volume(space, o, theta)
    constants = {
        'c': prob / rate,
        'theta': theta,
        'ambient_radius': R,
        'stabilized': stabilized,
    }
    inputs = {'space': space.name, 'o': o, 'x': x, 'theta': theta,
              'ball_radius': ball_radius}
    return _report('hitting-far', inputs, prob, rate, constants, prob > 0)

def annulus_hitting_bound(space, o, r):
    # inf over r < d(o, x) < 2r of P_x(hit closed B(o, r))
    o = space.check_vertex(o)
    d_o = space.distances(o)
    target = np.flatnonzero(d_o <= r)
    annulus = np.flatnonzero((d_o > r) & (d_o < 2 * r))
    if annulus.size == 0:
        raise InstanceError.empty_annulus(r)
    probs, R, stabilized = _escape_hitting(space, o, target, annulus, d_o)
    c = float(probs.min())
    constants = {
        'c': c,
        'argmin': int(annulus[np.argmin(probs)]),
        'ambient_radius': R,
        'stabilized': stabilized,
    }
    inputs = {'space': space.name, 'o': o, 'r': r}
    return _report('hitting-annulus', inputs, c, 0.0, constants, c > 0)

def hitting_far_suite(space, instances, band=DEFAULT_BAND, workers=1):
    reports = _evaluate('hitting-far', hitting_far_bound, space, instances,
                        workers)
    ok = _ok(reports)
    cs = [r.constants['c'] for r in ok]
    spread = _spread(cs)
    constants = {'c': min(cs, default=None), 'spread': spread, 'band': band}
    verdict = (bool(ok) and spread is not None and spread <= band
               and all(r.verdict for r in reports))
    return _summary('hitting-far', reports, spread, band, constants, verdict)

def random_far_instances(space, n, seed, ball_radius=None):
    rng = np.random.default_rng(seed)
    h = space.min_edge_length
    if ball_radius is None:
        ball_radius = h
    o = central_vertex(space)
    d_o = space.distances(o)
    bnd = space.boundary_vertices()
    limit = float(d_o[bnd].min()) if bnd.size else float(d_o.max())
    candidates = np.flatnonzero((d_o >= 2 * ball_radius)
                                & (d_o <= limit - 2 * h))
    if candidates.size == 0:
        raise InstanceError.no_room(2 * ball_radius, limit)
    xs = rng.choice(candidates, size=min(n, candidates.size), replace=False)
    return [{'o': o, 'x': int(x), 'ball_radius': ball_radius}
            for x in np.sort(xs)]


###############################################################################
# Zero-Energy Solutions
###############################################################################

def zero_energy_solution(space, domain, potential):
    """
    The solution u of (-Delta + V) u = 0 on the domain, vanishing off it:
    the eigenvector of -Delta + V whose eigenvalue is zero.
    """
    V = as_potential(potential, space.n)
    spec = assemble_generator(space, domain, V.values)
    k = int(np.argmin(np.abs(spec.eigenvalues)))
    lam = float(spec.eigenvalues[k])
    scale = max(1.0, float(np.abs(spec.eigenvalues).max()))
    if abs(lam) > ZERO_ENERGY_TOL * scale:
        raise InstanceError.no_solution(lam)
    sol = EigenSolution(spec, k)
    if not sol.is_valid(ZERO_ENERGY_TOL):
        raise InstanceError.no_solution(lam)
    return sol


###############################################################################
# Lieb Coverage
###############################################################################

def lieb_radius(scaling, norm, kappa, eta=DEFAULT_ETA, p=None):
    # (eta/2) R(kappa / ||V^-||_inf), or kappa ||V^-||_p^(-1/(beta rho))
    if norm <= 0:
        return math.inf
    if p is None:
        return 0.5 * eta * scaling.R(kappa / norm)
    rho = 1.0 - scaling.alpha2 / (scaling.beta * p)
    return kappa * norm ** (-1.0 / (scaling.beta * rho))

def verify_lieb(space, domain, potential, epsilon=0.5, kappas=DEFAULT_KAPPAS,
                kappa=None, eta=DEFAULT_ETA, p=None):
    """
    Coverage mu(Omega & B(o, r)) / mu(B(o, r)) at a maximizer o of |u| for
    the zero-energy solution u, with r set by ||V^-|| and each kappa.
    """
    V = as_potential(potential, space.n)
    s = space.scaling
    if p is not None:
        rho = 1.0 - s.alpha2 / (s.beta * p)
        if rho <= 0:
            raise InstanceError.bad_exponent('p', p, 'p > alpha/beta')
        norm = V.norm(p, space.measure, domain)
    else:
        norm = V.norm(np.inf, space.measure, domain)
    inputs = {'space': space.name, 'domain': domain, 'potential': V}
    mu = space.measure
    if norm <= 0:
        # V^- = 0: the ball is everything
        coverage = float(mu[domain.vertices].sum()) / space.total_measure
        return _report('lieb', inputs, coverage, 1.0 - epsilon,
                       {'norm': 0.0, 'degenerate': True},
                       coverage >= 1.0 - epsilon,
                       {'rows': [{'kappa': k, 'radius': math.inf,
                                  'coverage': coverage} for k in kappas]})
    sol = zero_energy_solution(space, domain, V)
    u = sol.u
    o = int(np.argmax(np.abs(u)))
    mask = domain.mask
    rows = []
    for k in sorted(kappas):
        r = lieb_radius(s, norm, k, eta, p)
        B = space.ball(o, r)
        coverage = float(mu[B[mask[B]]].sum() / mu[B].sum())
        rows.append({'kappa': k, 'radius': r, 'coverage': coverage})
    if kappa is None:
        kappa = min(kappas)
    picked = [row for row in rows if row['kappa'] == kappa]
    if not picked:
        raise InstanceError.bad_exponent('kappa', kappa, 'kappa in the sweep')
    lhs = picked[0]['coverage']
    constants = {
        'o': o,
        'norm': norm,
        'residual': sol.residual(),
        'kappa': kappa,
        'degenerate': False,
    }
    return _report('lieb', inputs, lhs, 1.0 - epsilon, constants,
                   lhs >= 1.0 - epsilon - 1e-12, {'rows': rows})

def lieb_kappa_star(reports, epsilon):
    # largest swept kappa with coverage >= 1 - epsilon on every instance
    ok = _ok(reports)
    if not ok:
        return None
    passing = None
    for report in ok:
        good = set(row['kappa'] for row in report.details['rows']
                   if row['coverage'] >= 1.0 - epsilon - 1e-12)
        passing = good if passing is None else passing & good
    return max(passing) if passing else None

def lieb_suite(space, instances, epsilon=0.5, kappas=DEFAULT_KAPPAS,
               epsilons=DEFAULT_EPSILONS, eta=DEFAULT_ETA, p=None,
               workers=1):
    fn = partial(verify_lieb, epsilon=epsilon, kappas=kappas, eta=eta, p=p)
    reports = _evaluate('lieb', fn, space, instances, workers)
    tradeoff = []
    for eps in sorted(set(epsilons) | {epsilon}):
        tradeoff.append([eps, lieb_kappa_star(reports, eps)])
    values = [k if k is not None else -math.inf for _, k in tradeoff]
    monotone = all(a <= b for a, b in zip(values, values[1:]))
    kappa_star = lieb_kappa_star(reports, epsilon)
    constants = {
        'kappa_star': kappa_star,
        'epsilon': epsilon,
        'tradeoff': tradeoff,
        'monotone': monotone,
    }
    verdict = (kappa_star is not None and monotone
               and all(r.error is None for r in reports))
    return _summary('lieb', reports, kappa_star, None, constants, verdict)


###############################################################################
# Keller Bounds
###############################################################################

def _check_keller_exponent(scaling, p):
    low = max(scaling.alpha2 / scaling.beta, 1.0)
    if not p > low:
        raise InstanceError.bad_exponent('p', p, 'p > max(alpha/beta, 1)')

def keller_bounds(space, domain, potential, p):
    s = space.scaling
    _check_keller_exponent(s, p)
    V = as_potential(potential, space.n)
    lam, _phi = principal_eigenvalue(space, domain, V)
    norm = V.norm(p, space.measure, domain)
    mass = float(space.measure[domain.vertices].sum())
    keller = mass ** (s.beta / s.alpha2 - 1.0 / p) * norm
    eta = 1.0 - s.alpha2 / (s.beta * p)
    nonpositive = lam <= ZERO_ENERGY_TOL * max(1.0, norm)
    ratio = None
    if lam < 0 and norm > 0:
        ratio = abs(lam) ** eta / norm
    constants = {
        'lambda': lam,
        'norm': norm,
        'keller': keller,
        'eta': eta,
        'ratio': ratio,
        'nonpositive': bool(nonpositive),
    }
    inputs = {'space': space.name, 'domain': domain, 'potential': V, 'p': p}
    # a non-positive eigenvalue needs V^- != 0
    verdict = (not nonpositive) or norm > 0
    return _report('keller', inputs, keller, None, constants, verdict)

def keller_instance(space, domain, well, depth, p, thresholds=None):
    V = PotentialField(-float(depth) * _indicator(space, well))
    report = keller_bounds(space, domain, V, p)
    key = (domain, tuple(well))
    thr = None if thresholds is None else thresholds.get(key)
    if thr is None:
        thr = critical_well_depth(space, domain, well, p)
    constants = dict(report.constants)
    constants['threshold_depth'] = thr.depth
    constants['threshold_norm'] = thr.norm
    constants['threshold_keller'] = thr.keller
    near = abs(depth - thr.depth) <= 1e-6 * thr.depth
    below = depth < thr.depth
    consistent = near or (below != constants['nonpositive'])
    constants['consistent'] = consistent
    return report._replace(constants=constants,
                           verdict=report.verdict and consistent)

def keller_suite(space, instances, p=2.0, workers=1):
    _check_keller_exponent(space.scaling, p)
    thresholds = {}
    for inst in instances:
        key = (inst['domain'], tuple(inst['well']))
        if key not in thresholds:
            thresholds[key] = critical_well_depth(space, inst['domain'],
                                                  inst['well'], p)
    fn = partial(keller_instance, p=p, thresholds=thresholds)
    reports = _evaluate('keller', fn, space, instances, workers)
    ok = _ok(reports)
    zero = [r.constants['keller'] for r in ok if r.constants['nonpositive']]
    ratios = [r.constants['ratio'] for r in ok
              if r.constants['ratio'] is not None]
    c_hat = min(zero, default=None)
    c_p = max(ratios, default=None)
    constants = {
        'c': c_hat,
        'c_p': c_p,
        'c_p_spread': _spread(ratios),
        'threshold_keller': min((t.keller for t in thresholds.values()),
                                default=None),
    }
    verdict = ((c_hat is None or c_hat > 0)
               and (c_p is None or math.isfinite(c_p))
               and all(r.verdict for r in reports))
    return _summary('keller', reports, c_hat, c_p, constants, verdict)


###############################################################################
# Supersolutions and Liouville Profiles
###############################################################################

SupersolutionInstance = namedtuple('SupersolutionInstance', (
    'space',        # GraphSpace
    'u',            # nonnegative vertex function
    'domain',       # DomainMask where the inequality is tested
    'potential',    # PotentialField|array|None (None: superharmonic test)
    'p',            # float, exponent of the default profile
    'profile'       # callable f|None, None means t -> t^p
))

SupersolutionCheck = namedtuple('SupersolutionCheck', (
    'verdict',      # bool
    'violations',   # tuple of vertices
    'worst_gap'     # float, max of V f(u) - (-Delta u) over the domain
))

def check_supersolution(instance):
    # (-Delta u)(x) >= V(x) f(u(x)) at every vertex of the domain
    space = instance.space
    u = np.asarray(instance.u, dtype=float)
    if np.any(u < 0):
        raise InstanceError.negative_profile()
    f = instance.profile
    if f is None:
        p = instance.p
        f = lambda t: np.power(t, p)
    grid = np.unique(np.concatenate(([0.0], u)))
    fg = np.asarray(f(grid), dtype=float)
    if abs(fg[0]) > 0 or np.any(np.diff(fg) < 0):
        raise InstanceError.bad_profile()
    idx = instance.domain.vertices
    lhs = -space.laplacian(u)[idx]
    if instance.potential is None:
        rhs = np.zeros(idx.size)
    else:
        V = as_potential(instance.potential, space.n).values
        rhs = V[idx] * np.asarray(f(u[idx]), dtype=float)
    scale = max(1.0, float(np.abs(lhs).max()), float(np.abs(rhs).max()))
    bad = lhs < rhs - SUPERSOLUTION_TOL * scale
    return SupersolutionCheck(not np.any(bad),
                              tuple(int(x) for x in idx[bad]),
                              float(np.max(rhs - lhs)))

def harmonic_measure_profile(space, o, target_radius):
    """
    u(x) = P_x(hit closed B(o, a) before reaching the boundary of the
    space); superharmonic off the boundary, where the walk is killed.
    """
    bnd = space.boundary_vertices()
    if bnd.size == 0:
        raise InstanceError.needs_boundary(space.name)
    region = DomainMask(bnd, space.n).complement()
    d_o = space.distances(space.check_vertex(o))
    target = np.flatnonzero(d_o <= target_radius)
    return exact_hitting_prob(space, target, region), region

def liouville_profile(space, u, o, radii, p=None, region=None,
                      band=LIOUVILLE_BAND):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise InstanceError.negative_profile()
    if region is None:
        region = DomainMask.whole(space)
    check = check_supersolution(
        SupersolutionInstance(space, u, region, None, 1.0, None))
    if not check.verdict:
        raise InstanceError.not_superharmonic(len(check.violations))
    o = space.check_vertex(o)
    d_o = space.distances(o)
    outside = ~region.mask
    limit = float(d_o[outside].min()) if np.any(outside) else math.inf
    F = space.scaling.F
    rows = []
    for r in sorted(radii):
        if 2 * r > limit:
            logger.debug('radius %s skipped: B(o, 2r) leaves the region', r)
            continue
        M = float(u[d_o < r].min())
        M2 = float(u[d_o < 2 * r].min())
        scale = min(1.0, F(r) / volume(space, o, r))
        row = {
            'radius': r,
            'M': M,
            'kappa2': M / scale,
            'kappa3': M / M2 if M2 > 0 else math.inf,
        }
        if p is not None:
            row['chain'] = M ** (p - 1.0) * F(r)
        rows.append(row)
    if not rows:
        raise InstanceError.no_radii()
    k2 = [row['kappa2'] for row in rows]
    k2_band = max(k2) / min(k2) if min(k2) > 0 else math.inf
    k3 = max(row['kappa3'] for row in rows)
    Ms = [row['M'] for row in rows]
    monotone = all(a >= b for a, b in zip(Ms, Ms[1:]))
    constants = {
        'kappa2_min': min(k2),
        'kappa2_max': max(k2),
        'kappa2_band': k2_band,
        'kappa3': k3,
        'monotone': monotone,
        'band': band,
    }
    if p is not None:
        constants['chain_max'] = max(row['chain'] for row in rows)
    inputs = {'space': space.name, 'o': o, 'radii': list(radii),
              'region': region}
    verdict = k2_band <= band and k3 <= band and monotone
    return _report('liouville', inputs, k2_band, band, constants, verdict,
                   {'rows': rows})

def liouville_potential_profile(space, potential, o, kappa, radii,
                                max_points=None):
    """
    Psi(x, r) = E_x int_0^tau V over the ball B(x, r - h), and
    Phi_kappa(r) = inf_x F(r) / V(o, r) * sum_{B(x, kappa r)} V mu, both
    over the annulus r/2 <= d(o, x) <= r. With max_points set, the annulus
    is thinned to that many evenly spaced vertices, which can only raise
    both infima.
    """
    V = np.asarray(getattr(potential, 'values', potential), dtype=float)
    if np.any(V < 0):
        raise ValueError('potential must be nonnegative')
    o = space.check_vertex(o)
    h = space.min_edge_length
    d_o = space.distances(o)
    mu = space.measure
    rows = []
    for r in sorted(radii):
        ann = np.flatnonzero((d_o >= 0.5 * r) & (d_o <= r))
        if ann.size == 0:
            raise InstanceError.empty_annulus(r)
        if max_points is not None and ann.size > max_points:
            pick = np.linspace(0, ann.size - 1, max_points).astype(np.int64)
            ann = ann[np.unique(pick)]
        scale = space.scaling.F(r) / volume(space, o, r)
        psi = []
        mass = []
        for x in ann:
            dx = space.distances(int(x), limit=max(r, kappa * r))
            inner = np.flatnonzero(dx < r - h)
            if inner.size == 0:
                psi.append(0.0)
            else:
                ball = DomainMask(inner, space.n)
                psi.append(float(dirichlet_solve(space, ball, rhs=V)[x]))
            mass.append(float(np.sum((V * mu)[dx < kappa * r])))
        inf_psi = min(psi)
        phi = scale * min(mass)
        rows.append({
            'radius': r,
            'inf_psi': inf_psi,
            'phi': phi,
            'ratio': inf_psi / phi if phi > 0 else None,
        })
    ratios = [row['ratio'] for row in rows if row['ratio'] is not None]
    constants = {
        'kappa': kappa,
        'c': min(ratios, default=None),
        'degenerate': not ratios,
    }
    inputs = {'space': space.name, 'potential': V, 'o': o, 'kappa': kappa,
              'radii': list(radii)}
    verdict = all(c > 0 for c in ratios)
    return _report('liouville-potential', inputs, constants['c'], None,
                   constants, verdict, {'rows': rows})

def liouville_instance(space, o, target_radius, radii, p=None, kappa=1.0,
                       band=LIOUVILLE_BAND):
    u, region = harmonic_measure_profile(space, o, target_radius)
    report = liouville_profile(space, u, o, radii, p=p, region=region,
                               band=band)
    usable = [row['radius'] for row in report.details['rows']]
    pot = liouville_potential_profile(space, np.ones(space.n), o, kappa,
                                      usable)
    constants = dict(report.constants)
    constants['potential_c'] = pot.constants['c']
    details = dict(report.details)
    details['potential_rows'] = pot.details['rows']
    return report._replace(constants=constants, details=details,
                           verdict=report.verdict and pot.verdict)

def liouville_suite(space, instances, p=None, kappa=1.0,
                    band=LIOUVILLE_BAND, workers=1):
    fn = partial(liouville_instance, p=p, kappa=kappa, band=band)
    reports = _evaluate('liouville', fn, space, instances, workers)
    ok = _ok(reports)
    worst = max((r.lhs for r in ok), default=None)
    constants = {
        'kappa2_band': worst,
        'kappa3': max((r.constants['kappa3'] for r in ok), default=None),
        'band': band,
        # finite-radius chain only; the limit r -> infinity is not checked
        'asymptotic': 'out of scope',
    }
    verdict = bool(ok) and all(r.verdict for r in reports)
    return _summary('liouville', reports, worst, band, constants, verdict)

def recurrent_liouville_check(dim, sizes, ball_radius=2.0,
                              horizon=RECURRENT_HORIZON, threshold=0.99):
    """
    P_x(hit the central ball by time T(n)) on reflecting n-boxes of growing
    side, from the vertex x farthest from the center, where
    T(n) = horizon * F(n) * log(n)^2. On a finite box the walk hits the ball
    eventually, so the deadline is what separates recurrent growth from a
    transient plateau.
    """
    used = []
    deadlines = []
    probs = []
    tails = []
    for n in sorted(set(int(s) for s in sizes)):
        space = build_lattice(dim, n)
        o = central_vertex(space)
        d_o = space.distances(o)
        x = int(np.argmax(d_o))
        T = horizon * space.scaling.F(n) * math.log(n) ** 2
        if d_o[x] <= ball_radius:
            prob, tail = 1.0, 0.0
        else:
            target = np.flatnonzero(d_o <= ball_radius)
            survival = low_mode_survival(space, target, x, T)
            prob, tail = 1.0 - survival.value, survival.truncation
        logger.debug('recurrent box %d^%d: P = %r by T = %r', n, dim, prob, T)
        used.append(n)
        deadlines.append(T)
        probs.append(prob)
        tails.append(tail)
    if not probs:
        raise InstanceError.no_radii()
    increasing = all(a <= b for a, b in zip(probs, probs[1:]))
    final = probs[-1]
    constants = {
        'sizes': used,
        'deadlines': deadlines,
        'probabilities': probs,
        'truncation': max(tails),
        'increasing': increasing,
        'threshold': threshold,
        'control': False,
    }
    inputs = {'dim': dim, 'sizes': list(sizes), 'ball_radius': ball_radius,
              'horizon': horizon}
    verdict = increasing and final - tails[-1] >= threshold
    return _report('recurrent', inputs, final, threshold, constants, verdict)

def transient_control(dim, sizes, ball_radius=2.0, offset=1.0,
                      ceiling=TRANSIENT_CEILING):
    """
    P_x(hit the central ball before the faces of an n-box) for growing n,
    with x at distance ball_radius + offset from the center. On a transient
    lattice the sequence settles strictly below 1.
    """
    used = []
    probs = []
    k = int(math.ceil(ball_radius + offset))
    for n in sorted(set(int(s) for s in sizes)):
        center = np.full(dim, n // 2)
        start = center.copy()
        start[0] += k
        if start[0] >= n - 1:
            logger.debug('box of side %d has no room for the start vertex', n)
            continue
        space = build_lattice(dim, n)
        shape = (n,) * dim
        o = int(np.ravel_multi_index(center, shape))
        target = np.flatnonzero(space.distances(o) <= ball_radius)
        region = DomainMask(space.boundary_vertices(), space.n).complement()
        x = int(np.ravel_multi_index(start, shape))
        probs.append(float(exact_hitting_prob(space, target, region)[x]))
        used.append(n)
    if not probs:
        raise InstanceError.no_room(k, max(sizes))
    increments = [b - a for a, b in zip(probs, probs[1:])]
    final = probs[-1]
    constants = {
        'sizes': used,
        'probabilities': probs,
        'increments': increments,
        'ceiling': ceiling,
        'control': True,
    }
    inputs = {'dim': dim, 'sizes': list(sizes), 'ball_radius': ball_radius,
              'offset': offset}
    return _report('recurrent', inputs, final, ceiling, constants,
                   final <= ceiling)

def recurrent_instance(space, dim, sizes, ball_radius=2.0,
                       horizon=RECURRENT_HORIZON, offset=1.0, control=False,
                       threshold=0.99, ceiling=TRANSIENT_CEILING):
    if control:
        return transient_control(dim, sizes, ball_radius, offset, ceiling)
    return recurrent_liouville_check(dim, sizes, ball_radius, horizon,
                                     threshold)

def recurrent_suite(space, instances, threshold=0.99,
                    ceiling=TRANSIENT_CEILING, workers=1):
    fn = partial(recurrent_instance, threshold=threshold, ceiling=ceiling)
    reports = _evaluate('recurrent', fn, space, instances, workers)
    ok = _ok(reports)
    final = min((r.lhs for r in ok if not r.constants['control']),
                default=None)
    plateau = max((r.lhs for r in ok if r.constants['control']),
                  default=None)
    constants = {
        'threshold': threshold,
        'ceiling': ceiling,
        'control_final': plateau,
    }
    verdict = final is not None and all(r.verdict for r in reports)
    return _summary('recurrent', reports, final, threshold, constants,
                    verdict)


###############################################################################
# Local Faber-Krahn
###############################################################################

def fk_exponent(scaling):
    # alpha1 / (alpha1 - alpha2 + beta), defined when alpha2 > beta
    den = scaling.alpha1 - scaling.alpha2 + scaling.beta
    if not (scaling.alpha2 > scaling.beta and den > 0):
        raise InstanceError.ineligible(scaling)
    return scaling.alpha1 / den

def fundamental_fk_value(space, domain, negative_part, o, t, factor=1.0):
    # E_o[1_{tau > t} exp(factor int_0^t V^-(X_s) ds)]
    spec = assemble_generator(space, domain, -factor * negative_part)
    ones = _indicator(space, domain.vertices)
    return float(feynman_kac_apply(spec, t, ones)[o])

def lorentz_green_estimate(space, spectrum, f, d, p):
    """
    sup_x sum_y f(y) G_F(d)(x, y) mu(y) against
    sup_x ||f||_{p,1} over B(x, d), on the domain of `spectrum`.
    """
    f = np.asarray(f, dtype=float)
    G = green_matrix(spectrum, spectrum.space.scaling.F(d))
    lhs = float(np.max(G.dot(spectrum.measure * spectrum.restrict(f))))
    mask = spectrum.domain.mask
    rhs = 0.0
    for x in spectrum.domain.vertices:
        B = space.ball(int(x), d)
        rhs = max(rhs, lorentz_norm(f, space.measure, B[mask[B]], p, 1))
    return lhs, rhs

def local_fk_certificate(space, domain, potential, slack=DEFAULT_SLACK):
    """
    Some ball of radius R(T(o)) carries ||V^-||_{p,1} >= c, where T(o) is
    the median exit time from a maximizer o of the zero-energy solution.
    The chain behind it is checked on the way: the fundamental value is at
    least 3/4, the Cauchy-Schwarz split dominates it, and the resulting
    Khasminskii constant is at least 1/9.
    """
    p = fk_exponent(space.scaling)
    V = as_potential(potential, space.n)
    sol = zero_energy_solution(space, domain, V)
    u = sol.u
    o = int(np.argmax(np.abs(u)))
    law = ExitTimeLaw(space, domain)
    T = law.median(o)
    cdf = law.cdf(o, T)
    survival = law.survival(o, T)
    radius = space.scaling.R(T)
    neg = V.negative_part
    mask = domain.mask
    best = 0.0
    best_center = None
    for z in domain.vertices:
        B = space.ball(int(z), radius)
        value = lorentz_norm(neg, space.measure, B[mask[B]], p, 1)
        if value > best:
            best, best_center = value, int(z)
    fk = fundamental_fk_value(space, domain, neg, o, T)
    fk2 = fundamental_fk_value(space, domain, neg, o, T, factor=2.0)
    cs = math.sqrt(survival * fk2)
    G = green_matrix(law.spectrum, T)
    khas = float(np.max(G.dot(law.spectrum.measure
                              * law.spectrum.restrict(2.0 * neg))))
    g_lhs, g_rhs = lorentz_green_estimate(space, law.spectrum, 2.0 * neg,
                                          radius, p)
    constants = {
        'p': p,
        'o': o,
        'T': T,
        'radius': radius,
        'center': best_center,
        'median_cdf': cdf,
        'quantum': law.quantum,
        'fundamental': fk,
        'cauchy_schwarz': cs,
        'khasminskii_c': khas,
        'green_lhs': g_lhs,
        'green_rhs': g_rhs,
    }
    checks = {
        'fundamental': fk >= FUNDAMENTAL_LEVEL - slack,
        'cauchy_schwarz': cs >= fk - slack * max(1.0, fk),
        'median': 0.5 <= cdf <= 0.5 + law.quantum + slack,
        'khasminskii': khas >= 1.0 / 9.0 - slack,
    }
    inputs = {'space': space.name, 'domain': domain, 'potential': V}
    return _report('fk-local', inputs, best, None, constants,
                   all(checks.values()), {'checks': checks})

def local_fk_suite(space, instances, slack=DEFAULT_SLACK, workers=1):
    fk_exponent(space.scaling)
    fn = partial(local_fk_certificate, slack=slack)
    reports = _evaluate('fk-local', fn, space, instances, workers)
    ok = _ok(reports)
    norms = [r.lhs for r in ok]
    c = min(norms, default=None)
    spread = _spread(norms)
    constants = {'c': c, 'spread': spread}
    verdict = (bool(ok) and c is not None and c > 0
               and all(r.verdict for r in reports))
    return _summary('fk-local', reports, c, None, constants, verdict)


###############################################################################
# Wavelength Density
###############################################################################

def wavelength_certificate(space, domain, index=0):
    """
    Smallest C such that every ball of radius R(C / lambda) inside the
    domain meets a zero or a sign change of the eigenfunction, and a
    brute-force recheck just above it.
    """
    spec = assemble_generator(space, domain)
    index = int(index)
    lam = float(spec.eigenvalues[index])
    if lam <= 0:
        raise InstanceError.no_solution(lam)
    u = spec.mode(index)
    tol = 1e-12 * float(np.abs(u).max())
    sign = np.where(np.abs(u) <= tol, 0.0, np.sign(u))
    mask = domain.mask
    idx = domain.vertices
    D = np.atleast_2d(space.distances(idx))
    r_star = 0.0
    for row, x in enumerate(idx):
        d = D[row]
        s_x = float(d[~mask].min()) if np.any(~mask) else math.inf
        if sign[x] == 0:
            b_x = 0.0
        else:
            other = mask & (sign != sign[x])
            b_x = float(d[other].min()) if np.any(other) else math.inf
        r_star = max(r_star, min(s_x, b_x))
    if not math.isfinite(r_star):
        raise InstanceError.no_certificate()
    C_e = lam * space.scaling.F(r_star)
    rho = space.scaling.R(C_e * (1.0 + 1e-9) / lam) if C_e > 0 else 0.0
    recheck = True
    for row, x in enumerate(idx):
        d = D[row]
        inside = not np.any((d < rho) & ~mask)
        if not inside:
            continue
        ball = d < rho
        if not (np.any(sign[ball] == 0) or np.any(sign[ball] != sign[x])):
            recheck = False
            break
    constants = {'lambda': lam, 'r_star': r_star, 'C': C_e, 'radius': rho}
    inputs = {'space': space.name, 'domain': domain, 'index': index}
    return _report('wavelength', inputs, C_e, None, constants, recheck)

def wavelength_suite(space, instances, band=STABILITY_BAND, workers=1):
    reports = _evaluate('wavelength', wavelength_certificate, space,
                        instances, workers)
    ok = _ok(reports)
    Cs = [r.lhs for r in ok]
    spread = _spread(Cs)
    constants = {
        'C_fit': max(Cs, default=None),
        'spread': spread,
        'band': band,
        'stable': spread is not None and spread <= band,
    }
    verdict = (bool(ok) and all(r.verdict for r in reports)
               and constants['stable'])
    return _summary('wavelength', reports, constants['C_fit'], None,
                    constants, verdict)


###############################################################################
# Mean Exit Time Scaling
###############################################################################

def mean_exit_scaling(space, center, radii, band=EXIT_BAND):
    # E_x tau_B(x, r) / F(r) over the radii whose balls stay off the boundary
    center = space.check_vertex(center)
    limit = float(boundary_distance(space)[center])
    rows = []
    for r in sorted(radii):
        if r > limit:
            continue
        B = ball_domain(space, center, r)
        if B.is_whole:
            continue
        m = float(exact_mean_exit(space, B)[center])
        rows.append({'radius': r, 'mean_exit': m,
                     'scaled': m / space.scaling.F(r)})
    if not rows:
        raise InstanceError.no_radii()
    scaled = [row['scaled'] for row in rows]
    spread = max(scaled) / min(scaled)
    constants = {'min': min(scaled), 'max': max(scaled), 'band': band}
    inputs = {'space': space.name, 'center': center, 'radii': list(radii)}
    return _report('exit', inputs, spread, band, constants, spread <= band,
                   {'rows': rows})

def exit_suite(space, instances, radii, band=EXIT_BAND, workers=1):
    fn = partial(mean_exit_scaling, radii=radii, band=band)
    reports = _evaluate('exit', fn, space, instances, workers)
    ok = _ok(reports)
    lo = min((r.constants['min'] for r in ok), default=None)
    hi = max((r.constants['max'] for r in ok), default=None)
    spread = hi / lo if ok else None
    constants = {'min': lo, 'max': hi, 'band': band}
    verdict = (bool(ok) and spread <= band
               and all(r.error is None for r in reports))
    return _summary('exit', reports, spread, band, constants, verdict)

def random_centers(space, n, seed, min_distance=None):
    rng = np.random.default_rng(seed)
    if min_distance is None:
        min_distance = 2 * space.min_edge_length
    far = np.flatnonzero(boundary_distance(space) >= min_distance)
    if far.size == 0:
        far = np.array([central_vertex(space)])
    picks = rng.choice(far, size=min(n, far.size), replace=False)
    return [{'center': int(x)} for x in np.sort(picks)]


###############################################################################
# Eigenvalue Scaling
###############################################################################

def eigenvalue_instance(space, center, radii, band=DEFAULT_BAND):
    return eigenvalue_ball_bound(space, [(center, r) for r in radii],
                                 band=band)

def eigenvalue_suite(space, instances, radii, band=DEFAULT_BAND, workers=1):
    fn = partial(eigenvalue_instance, radii=radii, band=band)
    reports = _evaluate('eigenvalue-ball', fn, space, instances, workers)
    ok = _ok(reports)
    scaled = [row['scaled'] for r in ok for row in r.details['rows']]
    spread = max(scaled) / min(scaled) if scaled else None
    constants = {'C1': max(scaled, default=None), 'spread': spread,
                 'band': band}
    verdict = (bool(ok) and spread <= band
               and all(r.error is None for r in reports))
    return _summary('eigenvalue-ball', reports, spread, band, constants,
                    verdict)


###############################################################################
# Exponential Moments
###############################################################################

def _ml_inverse(rho, y, iterations=200):
    # x >= 0 with ML_rho(x) = y, for y >= 1
    if y <= 1.0:
        return 0.0
    target = math.log(y)
    lo, hi = 0.0, 1.0
    while log_mittag_leffler(rho, hi) < target:
        lo, hi = hi, 2.0 * hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if log_mittag_leffler(rho, mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    return hi

def mittag_leffler_moment_bound(space, potential, p, ts, domain=None):
    """
    Fit kappa_p in sup_x E_x exp(int_0^t V) <= ML_rho(kappa_p ||V||_p t^rho),
    rho = 1 - alpha/(beta p), over the given times.
    """
    V = np.asarray(getattr(potential, 'values', potential), dtype=float)
    if np.any(V < 0):
        raise ValueError('potential must be nonnegative')
    s = space.scaling
    rho = 1.0 - s.alpha2 / (s.beta * p)
    if not 0.0 < rho <= 1.0:
        raise InstanceError.bad_exponent('p', p, 'p > alpha/beta')
    if domain is None:
        domain = DomainMask.whole(space)
    idx = domain.vertices
    norm = float(np.sum(V[idx] ** p * space.measure[idx]) ** (1.0 / p))
    spec = assemble_generator(space, domain, -V)
    ones = _indicator(space, idx)
    rows = []
    for t in ts:
        lhs = float(np.max(feynman_kac_apply(spec, t, ones)))
        x = _ml_inverse(rho, lhs)
        kappa = x / (norm * t ** rho) if norm > 0 else 0.0
        rows.append({'t': t, 'lhs': lhs, 'kappa': kappa})
    kappa_p = max(row['kappa'] for row in rows)
    holds = all(
        row['lhs'] <= mittag_leffler(rho, kappa_p * norm * row['t'] ** rho)
        * (1.0 + 1e-9) for row in rows)
    constants = {'rho': rho, 'norm': norm, 'kappa_p': kappa_p}
    inputs = {'space': space.name, 'potential': V, 'p': p, 'ts': list(ts),
              'domain': domain}
    return _report('moment', inputs, kappa_p, None, constants,
                   holds and math.isfinite(kappa_p), {'rows': rows})

def moment_suite(space, instances, p, ts, band=DEFAULT_BAND, workers=1):
    fn = partial(mittag_leffler_moment_bound, p=p, ts=ts)
    reports = _evaluate('moment', fn, space, instances, workers)
    ok = _ok(reports)
    kappas = [r.lhs for r in ok]
    constants = {'kappa_p': max(kappas, default=None),
                 'spread': _spread(kappas), 'band': band}
    verdict = bool(ok) and all(r.verdict for r in reports)
    return _summary('moment', reports, constants['kappa_p'], None,
                    constants, verdict)

def random_potentials(space, n, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return [{'potential': PotentialField(scale * rng.random(space.n))}
            for _ in range(n)]


###############################################################################
# Stability Across Sizes
###############################################################################

def stability_sweep(tag, results, key, band=STABILITY_BAND):
    """
    Compare the suite constant `key` across space sizes. `results` maps
    each size to the SuiteResult obtained there; the verdict needs every
    size to pass and max/min of the constant to stay within the band.
    """
    sizes = sorted(results)
    values = [results[n].summary.constants.get(key) for n in sizes]
    present = all(v is not None and v > 0 for v in values)
    spread = _spread(values) if present else None
    stable = spread is not None and spread <= band
    per_size = []
    for n, v in zip(sizes, values):
        per_size.append({
            'size': n,
            key: v,
            'verdict': results[n].verdict,
            'failures': len(results[n].failures),
        })
    constants = {
        'key': key,
        'sizes': sizes,
        'values': values,
        'spread': spread,
        'band': band,
        'stable': stable,
    }
    reports = sorted((r for n in sizes for r in results[n].instances),
                     key=lambda r: r.digest)
    verdict = all(results[n].verdict for n in sizes) and stable
    if not stable:
        logger.warning('%s constant %s is not stable across sizes %s: %s',
                       tag, key, sizes, values)
    return _summary(tag, reports, spread, band, constants, verdict,
                    {'per_size': per_size})


###############################################################################
# Instance Generators
###############################################################################

def random_subdomain(space, rng, fractions=(0.25, 0.5), max_vertices=None):
    """
    A random sub-box on grids, a random ball elsewhere; always a proper
    subset within the dense eigensolver guard.
    """
    if max_vertices is None:
        max_vertices = MAX_DENSE_VERTICES
    lo, hi = fractions
    if is_grid(space):
        extent = space.coords.max(axis=0) + 1
        while True:
            sides = [int(rng.integers(max(2, int(lo * e)),
                                      max(3, int(hi * e)) + 1))
                     for e in extent]
            sides = [min(s, int(e)) for s, e in zip(sides, extent)]
            if int(np.prod(sides)) <= max_vertices:
                break
            hi *= 0.8
        lower = np.array([int(rng.integers(0, e - s + 1))
                          for s, e in zip(sides, extent)])
        upper = lower + np.array(sides) - 1
        domain = box_domain(space, lower, upper)
        if domain.is_whole:
            domain = domain.minus([int(domain.vertices[-1])])
        return domain
    x = int(rng.integers(space.n))
    ecc = space.eccentricity(x)
    r = float(rng.uniform(lo, hi)) * ecc
    vertices = space.ball(x, max(r, 2 * space.min_edge_length))
    if vertices.size > max_vertices:
        d = space.distances(x)
        vertices = np.argsort(d, kind='stable')[:max_vertices]
    domain = DomainMask(vertices, space.n)
    if domain.is_whole:
        domain = domain.minus([int(np.argmax(space.distances(x)))])
    return domain

def _random_well(space, domain, rng, well_radius=None):
    if well_radius is None:
        well_radius = 2.0 * space.min_edge_length
    c = int(rng.choice(domain.vertices))
    well = space.ball(c, well_radius)
    return well[domain.mask[well]]

def schrodinger_instances(space, n, seed, depths=(0.25, 2.0),
                          well_radius=None, fractions=(0.25, 0.5)):
    """
    (Omega, V) pairs with a nontrivial solution of (-Delta + V) u = 0:
    V = W - lambda_1(W) on Omega for a random well W, zero off Omega.
    Depths are relative to the largest jump rate.
    """
    rng = np.random.default_rng(seed)
    q = float(space.rates.max())
    instances = []
    for _ in range(n):
        domain = random_subdomain(space, rng, fractions)
        well = _random_well(space, domain, rng, well_radius)
        depth = float(rng.uniform(*depths)) * q
        W = -depth * _indicator(space, well)
        lam = assemble_generator(space, domain, W).ground
        V = np.zeros(space.n)
        V[domain.vertices] = W[domain.vertices] - lam
        instances.append({'domain': domain, 'potential': PotentialField(V)})
    return instances

def keller_instances(space, n, seed, depths=(0.01, 0.05, 0.1, 0.25, 0.5, 1.0),
                     well_radius=None, fractions=(0.25, 0.5)):
    # a few geometries, each with the whole depth sweep
    rng = np.random.default_rng(seed)
    q = float(space.rates.max())
    instances = []
    geometry = None
    for i in range(n):
        if i % len(depths) == 0:
            domain = random_subdomain(space, rng, fractions)
            well = [int(v) for v in _random_well(space, domain, rng,
                                                 well_radius)]
            geometry = (domain, well)
        domain, well = geometry
        instances.append({'domain': domain, 'well': well,
                          'depth': float(depths[i % len(depths)]) * q})
    return instances

def dirichlet_eigenpairs(space, n, seed, max_index=4, fractions=(0.25, 0.5)):
    rng = np.random.default_rng(seed)
    instances = []
    for _ in range(n):
        domain = random_subdomain(space, rng, fractions)
        top = min(max_index, len(domain) - 1)
        instances.append({'domain': domain,
                          'index': int(rng.integers(0, top + 1))})
    return instances
