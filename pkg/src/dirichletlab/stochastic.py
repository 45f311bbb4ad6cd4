# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
import logging
import math

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import eigsh

from .data_structs import HittingEstimate, MonteCarloEstimate
from .heatkernel import (
    MAX_DENSE_VERTICES, RecurrenceError, assemble_generator, green_matrix,
)
from .space import DomainMask, SpaceError, dirichlet_solve
from .spectral import feynman_kac_apply

###############################################################################
# Constants
###############################################################################

logger = logging.getLogger(__name__)

# paths per RNG stream; fixed so that results do not depend on the pool size
BLOCK_SIZE = 65536

DEFAULT_MAX_EVENTS = 10 ** 6

# bisection tolerance for the median exit time, relative to 1/lambda_1
MEDIAN_RTOL = 1e-6

MEDIAN_LEVEL = 0.5

KHASMINSKII_SLACK = 1e-9

# modes kept by the sparse survival solver
LOW_MODES = 8

###############################################################################
# Errors and Exceptions
###############################################################################

class WalkError(Exception):
    @classmethod
    def zero_rate(cls, x):
        return cls('vertex {} has no edges; the walk cannot leave it'
                   .format(x))

    @classmethod
    def invalid_param(cls, name, value):
        return cls('invalid walk parameter {}: {!r}'.format(name, value))

    @classmethod
    def empty_target(cls):
        return cls('target set is empty')


###############################################################################
# Walk Configuration
###############################################################################

WalkConfig = namedtuple('WalkConfig', (
    'seed',             # int, 64-bit
    'n_paths',          # int >= 1
    'max_event_count'   # int, jumps per path before truncation
))

WalkConfig.to_JSON_object = WalkConfig._asdict

def walk_config(seed, n_paths, max_event_count=DEFAULT_MAX_EVENTS):
    if not isinstance(seed, (int, np.integer)) or seed < 0 or seed >= 2 ** 64:
        raise WalkError.invalid_param('seed', seed)
    n_paths = int(n_paths)
    if n_paths < 1:
        raise WalkError.invalid_param('n_paths', n_paths)
    max_event_count = int(max_event_count)
    if max_event_count < 1:
        raise WalkError.invalid_param('max_event_count', max_event_count)
    return WalkConfig(int(seed), n_paths, max_event_count)


StoppingRule = namedtuple('StoppingRule', (
    'absorbing',    # bool vertex mask|None, stop on entering these vertices
    'horizon'       # float|None, stop at this time
))

def exit_rule(space, domain, horizon=None):
    # tau_Omega: stop on the first vertex outside the domain
    return StoppingRule(~domain.mask, horizon)

def hit_rule(space, target, horizon=None):
    mask = np.zeros(space.n, dtype=bool)
    target = np.asarray(target, dtype=np.int64)
    if target.size == 0:
        raise WalkError.empty_target()
    mask[target] = True
    return StoppingRule(mask, horizon)

def horizon_rule(t):
    if t < 0:
        raise WalkError.invalid_param('horizon', t)
    return StoppingRule(None, float(t))

def _with_horizon(self, t):
    return StoppingRule(self.absorbing, float(t))

StoppingRule.with_horizon = _with_horizon


PathStatistics = namedtuple('PathStatistics', (
    'times',        # array, stopping time (or horizon) per path
    'terminal',     # array of int, vertex where the path stopped
    'integral',     # array, int_0^time V(X_s) ds along the path
    'absorbed',     # bool array, stopped by the absorbing set before horizon
    'truncated'     # bool array, event guard exceeded
))

def _stats_n_truncated(self):
    return int(np.count_nonzero(self.truncated))

PathStatistics.n_truncated = property(_stats_n_truncated)


###############################################################################
# Jump Chain
###############################################################################

class JumpChain(object):
    """
    Embedded jump chain of the continuous-time walk: from x the walk waits
    Exp(q(x)) with q(x) = deg(x) / mu(x) and then jumps to y with
    probability c(x, y) / deg(x).
    """

    __slots__ = ('rates', 'indptr', 'indices', 'keys')

    def __init__(self, space):
        C = space.conductance
        self.rates = space.rates
        self.indptr = C.indptr
        self.indices = C.indices
        rows = np.repeat(np.arange(space.n), np.diff(C.indptr))
        # row x owns the keys in (x, x + 1]; its last key is exactly x + 1
        cum = np.zeros(C.data.size)
        for x in range(space.n):
            a, b = C.indptr[x], C.indptr[x + 1]
            if a == b:
                continue
            cum[a:b] = np.cumsum(C.data[a:b]) / space.degree[x]
            cum[b - 1] = 1.0
        self.keys = rows + cum

    def step(self, x, u):
        # u uniform in [0, 1)
        k = np.searchsorted(self.keys, x + u, side='right')
        k = np.minimum(k, self.indptr[x + 1] - 1)
        return self.indices[k]


###############################################################################
# Simulation
###############################################################################

def _simulate_block(chain, start, rule, V, n, max_events, rng):
    pos = np.full(n, start, dtype=np.int64)
    times = np.zeros(n)
    integral = np.zeros(n)
    absorbed = np.zeros(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)
    if rule.absorbing is not None and rule.absorbing[start]:
        absorbed[:] = True
    active = ~absorbed
    events = 0
    while np.any(active):
        if events >= max_events:
            truncated[active] = True
            break
        idx = np.flatnonzero(active)
        x = pos[idx]
        dt = rng.exponential(1.0 / chain.rates[x])
        if rule.horizon is not None:
            remaining = rule.horizon - times[idx]
            ended = dt >= remaining
            dt = np.where(ended, remaining, dt)
        else:
            ended = np.zeros(idx.size, dtype=bool)
        if V is not None:
            integral[idx] += V[x] * dt
        times[idx] += dt
        active[idx[ended]] = False
        jumping = idx[~ended]
        new = chain.step(pos[jumping], rng.random(jumping.size))
        pos[jumping] = new
        if rule.absorbing is not None:
            hit = jumping[rule.absorbing[new]]
            absorbed[hit] = True
            active[hit] = False
        events += 1
    return PathStatistics(times, pos, integral, absorbed, truncated)

def simulate_paths(space, start, stop, cfg, potential=None, workers=1):
    """
    Simulate `cfg.n_paths` independent paths of the continuous-time walk
    from `start` until the stopping rule fires. Paths are simulated in
    fixed-size blocks, each with its own Philox stream spawned from
    `cfg.seed`, and merged in block order.
    """
    start = space.check_vertex(start)
    if not np.all(space.rates > 0):
        raise WalkError.zero_rate(int(np.flatnonzero(space.rates <= 0)[0]))
    if stop.absorbing is None and stop.horizon is None:
        raise WalkError.invalid_param('stop', stop)
    V = None
    if potential is not None:
        V = np.asarray(getattr(potential, 'values', potential), dtype=float)
    chain = JumpChain(space)
    sizes = [BLOCK_SIZE] * (cfg.n_paths // BLOCK_SIZE)
    if cfg.n_paths % BLOCK_SIZE:
        sizes.append(cfg.n_paths % BLOCK_SIZE)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))

    def job(b):
        rng = np.random.Generator(np.random.Philox(seeds[b]))
        return _simulate_block(chain, start, stop, V, sizes[b],
                               cfg.max_event_count, rng)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(job, range(len(sizes))))
    else:
        blocks = [job(b) for b in range(len(sizes))]
    stats = PathStatistics(*(np.concatenate(arrays)
                             for arrays in zip(*blocks)))
    if stats.n_truncated:
        logger.warning('%d of %d paths hit the event guard (%d)',
                       stats.n_truncated, cfg.n_paths, cfg.max_event_count)
    return stats


###############################################################################
# Exact Oracles
###############################################################################

def exact_mean_exit(space, domain):
    # m solves (-Delta) m = 1 on the domain, m = 0 off it
    if domain.is_whole:
        raise RecurrenceError.recurrent(0.0)
    return dirichlet_solve(space, domain, rhs=np.ones(space.n))

def exact_hitting_prob(space, target, domain=None):
    """
    Harmonic measure P_x(hit target before leaving the domain) for every
    vertex x, by one sparse linear solve.
    """
    target = np.unique(np.asarray(target, dtype=np.int64))
    if target.size == 0:
        raise WalkError.empty_target()
    mask = np.ones(space.n, dtype=bool) if domain is None else domain.mask
    free = mask.copy()
    free[target] = False
    data = np.zeros(space.n)
    data[target] = 1.0
    if not np.any(free):
        return data
    return dirichlet_solve(space, DomainMask.from_mask(free), boundary=data)


class HittingOracle(object):
    """
    P_o(hit K by time T) = 1 - [exp(-T L) 1](o), where L is the generator
    killed on K. One eigendecomposition serves every (o, T) query.
    """

    __slots__ = ('space', 'target', 'spectrum', '_mass')

    def __init__(self, space, target):
        target = np.unique(np.asarray(target, dtype=np.int64))
        if target.size == 0:
            raise WalkError.empty_target()
        self.space = space
        self.target = DomainMask(target, space.n)
        complement = self.target.complement()
        if len(complement) == 0:
            raise SpaceError.empty_domain()
        self.spectrum = assemble_generator(space, complement)
        # (phi_n, 1)_mu
        self._mass = self.spectrum.coefficients(np.ones(space.n))

    def survival(self, o, T):
        if T < 0:
            raise ValueError('deadline must be nonnegative, got {!r}'.format(T))
        if self.target.contains(o):
            return 0.0
        i = self.spectrum.position(o)
        e = np.exp(-self.spectrum.eigenvalues * T)
        return float(np.sum(e * self.spectrum.eigenvectors[i] * self._mass))

    def probability(self, o, T):
        if self.target.contains(o):
            logger.warning('start vertex %s is in the target set', o)
            return 1.0
        return min(1.0, max(0.0, 1.0 - self.survival(o, T)))

def exact_hitting_prob_by_time(space, target, o, T):
    return HittingOracle(space, target).probability(o, T)


SurvivalBound = namedtuple('SurvivalBound', (
    'value',        # float, P_o(tau_K > T) from the computed modes
    'truncation',   # float, bound on the contribution of the dropped modes
    'n_modes'       # int
))

SurvivalBound.to_JSON_object = SurvivalBound._asdict

def low_mode_survival(space, target, o, T, n_modes=LOW_MODES):
    """
    P_o(no hit of K by time T) from the lowest modes of the generator
    killed on K. Free sets above the dense limit go through a sparse
    shift-invert solve; the dropped modes are bounded by
    exp(-lambda_k T) sqrt(mu(X) / mu(o)).
    """
    target = np.unique(np.asarray(target, dtype=np.int64))
    if target.size == 0:
        raise WalkError.empty_target()
    if T < 0:
        raise ValueError('deadline must be nonnegative, got {!r}'.format(T))
    o = space.check_vertex(o)
    free = np.ones(space.n, dtype=bool)
    free[target] = False
    if not free[o]:
        return SurvivalBound(0.0, 0.0, 0)
    idx = np.flatnonzero(free)
    root = np.sqrt(space.measure[idx])
    K = sparse.diags(space.degree[idx]) - space.conductance[idx][:, idx]
    scale = sparse.diags(1.0 / root)
    A = scale.dot(K).dot(scale).tocsc()
    if idx.size <= MAX_DENSE_VERTICES:
        lam, vec = linalg.eigh(A.toarray())
        tail = 0.0
    else:
        k = min(int(n_modes), idx.size - 1)
        logger.debug('shift-invert solve for %d modes on %d vertices',
                     k, idx.size)
        lam, vec = eigsh(A, k=k, sigma=0.0, which='LM')
        order = np.argsort(lam)
        lam, vec = lam[order], vec[:, order]
        tail = (math.exp(-float(lam[-1]) * T)
                * math.sqrt(space.total_measure / space.measure[o]))
    i = int(np.searchsorted(idx, o))
    coef = vec.T.dot(root)
    value = float(np.sum(np.exp(-lam * T) * vec[i] * coef)) / root[i]
    return SurvivalBound(min(1.0, max(0.0, value)), tail, int(lam.size))


class ExitTimeLaw(object):
    """
    Law of the exit time from a domain, from the Dirichlet spectrum:
    P_o(tau > t) = sum_n exp(-lambda_n t) phi_n(o) (phi_n, 1)_mu.
    """

    __slots__ = ('space', 'domain', 'spectrum', 'tolerance', '_mass')

    def __init__(self, space, domain):
        if domain.is_whole:
            raise RecurrenceError.recurrent(0.0)
        self.space = space
        self.domain = domain
        self.spectrum = assemble_generator(space, domain)
        self.tolerance = MEDIAN_RTOL / self.spectrum.ground
        self._mass = self.spectrum.coefficients(np.ones(space.n))

    @property
    def quantum(self):
        # bound on the cdf increment over one bisection step
        return self.tolerance * float(self.space.rates.max())

    def survival(self, o, t):
        if not self.domain.contains(o):
            return 0.0
        i = self.spectrum.position(o)
        e = np.exp(-self.spectrum.eigenvalues * t)
        value = float(np.sum(e * self.spectrum.eigenvectors[i] * self._mass))
        return min(1.0, max(0.0, value))

    def cdf(self, o, t):
        return 1.0 - self.survival(o, t)

    def median(self, o, level=MEDIAN_LEVEL):
        # inf {t : P_o(tau <= t) >= level}, returned as the right endpoint
        if not self.domain.contains(o):
            return 0.0
        lo = 0.0
        hi = 1.0 / self.spectrum.ground
        while self.cdf(o, hi) < level:
            lo, hi = hi, 2.0 * hi
        while hi - lo > self.tolerance:
            mid = 0.5 * (lo + hi)
            if self.cdf(o, mid) >= level:
                hi = mid
            else:
                lo = mid
        return hi

def median_exit_time(space, domain, o):
    return ExitTimeLaw(space, domain).median(space.check_vertex(o))


###############################################################################
# Monte Carlo Estimators
###############################################################################

def _estimate(values, n_excluded):
    n = values.size
    if n == 0:
        return MonteCarloEstimate(math.nan, math.nan, 0, n_excluded)
    mean = float(values.mean())
    err = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MonteCarloEstimate(mean, err, n, n_excluded)

def feynman_kac_mc(space, domain, potential, u, x, t, cfg, workers=1):
    """
    Monte Carlo of E_x[exp(-int_0^t V(X_s) ds) u(X_t) ; t < tau_Omega]
    with the exact path integral of V. Truncated paths are left out.
    """
    if domain is None:
        domain = DomainMask.whole(space)
    u = np.asarray(u, dtype=float)
    rule = exit_rule(space, domain, horizon=t)
    stats = simulate_paths(space, x, rule, cfg, potential=potential,
                           workers=workers)
    keep = ~stats.truncated
    weights = np.exp(-stats.integral) * u[stats.terminal]
    weights[stats.absorbed] = 0.0
    return _estimate(weights[keep], stats.n_truncated)

def hitting_mc(space, target, o, T, cfg, workers=1):
    rule = hit_rule(space, target, horizon=T)
    stats = simulate_paths(space, o, rule, cfg, workers=workers)
    keep = ~stats.truncated
    n = int(np.count_nonzero(keep))
    if n == 0:
        return HittingEstimate(math.nan, math.nan, 0, T)
    p = float(np.count_nonzero(stats.absorbed[keep])) / n
    return HittingEstimate(p, math.sqrt(p * (1.0 - p) / n), n, T)

def exit_time_mc(space, domain, x, cfg, workers=1):
    stats = simulate_paths(space, x, exit_rule(space, domain), cfg,
                           workers=workers)
    keep = ~stats.truncated
    return _estimate(stats.times[keep], stats.n_truncated)


###############################################################################
# Khasminskii
###############################################################################

KhasminskiiCheck = namedtuple('KhasminskiiCheck', (
    'c',        # float, sup_x E_x int_0^t V(X_s) ds
    'lhs',      # float, sup_x E_x exp(int_0^t V(X_s) ds)
    'bound',    # float, 1 / (1 - c), inf when c >= 1
    'holds'     # bool
))

KhasminskiiCheck.to_JSON_object = KhasminskiiCheck._asdict

def khasminskii_check(space, potential, t, domain=None):
    """
    Spectral check of sup_x E_x exp(int V) <= 1 / (1 - c) for V >= 0,
    both sides killed on leaving the domain.
    """
    V = np.asarray(getattr(potential, 'values', potential), dtype=float)
    if np.any(V < 0):
        raise ValueError('potential must be nonnegative')
    if domain is None:
        domain = DomainMask.whole(space)
    free = assemble_generator(space, domain)
    G = green_matrix(free, T=t)
    c = float(np.max(G.dot(free.measure * free.restrict(V))))
    boosted = assemble_generator(space, domain, -V)
    ones = np.zeros(space.n)
    ones[domain.vertices] = 1.0
    lhs = float(np.max(feynman_kac_apply(boosted, t, ones)))
    if c >= 1.0:
        return KhasminskiiCheck(c, lhs, math.inf, True)
    bound = 1.0 / (1.0 - c)
    return KhasminskiiCheck(c, lhs, bound, lhs <= bound + KHASMINSKII_SLACK)
