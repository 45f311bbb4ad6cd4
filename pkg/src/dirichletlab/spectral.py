# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

from collections import namedtuple
import logging
import time

import numpy as np

from .data_structs import InequalityReport, input_digest, json_number
from .heatkernel import assemble_generator
from .space import DomainMask, SpaceError, domain_components
from .special import lorentz_norm

###############################################################################
# Constants
###############################################################################

logger = logging.getLogger(__name__)

DEFAULT_BAND = 10.0

# relative tolerance for eigen-solution residuals
RESIDUAL_TOL = 1e-8

###############################################################################
# Errors and Exceptions
###############################################################################

class SubdomainError(ValueError):
    @classmethod
    def not_contained(cls):
        return cls('subdomain is not contained in the ball')

    @classmethod
    def not_supported(cls):
        return cls('function must vanish off the domain')

    @classmethod
    def not_finite(cls):
        return cls('potential must be finite everywhere')


###############################################################################
# Potentials
###############################################################################

class PotentialField(object):
    __slots__ = ('values', 'negative_part', '_norms')

    def __init__(self, values):
        values = np.array(values, dtype=float)
        if values.ndim != 1 or not np.all(np.isfinite(values)):
            raise SubdomainError.not_finite()
        negative = np.maximum(-values, 0.0)
        values.setflags(write=False)
        negative.setflags(write=False)
        self.values = values
        self.negative_part = negative
        self._norms = {}

    @classmethod
    def zero(cls, n):
        return cls(np.zeros(n))

    @classmethod
    def constant(cls, n, v):
        return cls(np.full(n, float(v)))

    @classmethod
    def well(cls, space, center, radius, depth, background=0.0):
        # V = background - depth on the open ball B(center, radius)
        values = np.full(space.n, float(background))
        values[space.ball(center, radius)] -= float(depth)
        return cls(values)

    @property
    def n(self):
        return self.values.size

    def theta(self, domain=None):
        # sup of V^- over the domain
        neg = self.negative_part
        if domain is not None:
            neg = neg[domain.vertices]
        return float(neg.max()) if neg.size else 0.0

    def norm(self, p, measure, domain=None):
        # ||V^-||_{p, domain}
        key = ('L', float(p), domain)
        value = self._norms.get(key)
        if value is None:
            neg = self.negative_part
            mu = np.asarray(measure)
            if domain is not None:
                neg = neg[domain.vertices]
                mu = mu[domain.vertices]
            if p == np.inf:
                value = float(neg.max()) if neg.size else 0.0
            else:
                value = float(np.sum(neg ** p * mu) ** (1.0 / p))
            self._norms[key] = value
        return value

    def lorentz(self, p, measure, support, q=1):
        return lorentz_norm(self.negative_part, measure, support, p, q)

    def restricted(self, domain):
        values = np.zeros(self.n)
        values[domain.vertices] = self.values[domain.vertices]
        return PotentialField(values)

    def shifted(self, c, domain=None):
        values = np.array(self.values)
        if domain is None:
            values += c
        else:
            values[domain.vertices] += c
        return PotentialField(values)

    def scaled(self, c):
        return PotentialField(c * self.values)

    def to_JSON_object(self):
        return [json_number(v) for v in self.values]

    def __repr__(self):
        return '{}(n={}, theta={!r})'.format(
            type(self).__name__, self.n, self.theta())


def as_potential(potential, n):
    if potential is None:
        return PotentialField.zero(n)
    if isinstance(potential, PotentialField):
        return potential
    return PotentialField(potential)


###############################################################################
# Eigen-solutions
###############################################################################

class EigenSolution(object):
    __slots__ = ('spectrum', 'index', 'u', 'lam')

    def __init__(self, spectrum, index=0):
        self.spectrum = spectrum
        self.index = int(index)
        self.u = spectrum.mode(self.index)
        self.lam = float(spectrum.eigenvalues[self.index])

    @property
    def space(self):
        return self.spectrum.space

    @property
    def domain(self):
        return self.spectrum.domain

    def residual(self):
        # sup over the domain of |(-Delta + V) u - lambda u|
        space = self.spectrum.space
        idx = self.domain.vertices
        r = -space.laplacian(self.u)
        if self.spectrum.potential is not None:
            r = r + self.spectrum.potential * self.u
        r = r - self.lam * self.u
        return float(np.abs(r[idx]).max())

    def is_valid(self, tol=RESIDUAL_TOL):
        return self.residual() <= tol * float(np.abs(self.u).max())

    def zero_energy_potential(self):
        # V - lambda on the domain, so that (-Delta + V') u = 0 there
        V = self.spectrum.potential
        values = np.zeros(self.space.n) if V is None else np.array(V)
        values[self.domain.vertices] -= self.lam
        out = np.zeros(self.space.n)
        out[self.domain.vertices] = values[self.domain.vertices]
        return PotentialField(out)

    def __repr__(self):
        return '{}(index={}, lambda={!r})'.format(
            type(self).__name__, self.index, self.lam)


###############################################################################
# Feynman-Kac Semigroup
###############################################################################

def feynman_kac_apply(spec, t, u):
    """
    T_t u = sum_n exp(-lambda_n t) (u, phi_n)_mu phi_n for the generator in
    `spec`; `u` is a vertex function supported in the domain.
    """
    if t < 0:
        raise ValueError('time must be nonnegative, got {!r}'.format(t))
    u = np.asarray(u, dtype=float)
    outside = ~spec.domain.mask
    if np.any(u[outside] != 0):
        raise SubdomainError.not_supported()
    coeffs = spec.coefficients(u)
    values = spec.eigenvectors.dot(np.exp(-spec.eigenvalues * t) * coeffs)
    return spec.extend(values)


###############################################################################
# Principal Eigenvalues
###############################################################################

GroundState = namedtuple('GroundState', (
    'domain',   # DomainMask, one connected component
    'lam',      # float
    'phi'       # vertex function, positive on the component
))

def _potential_array(potential):
    if potential is None:
        return None
    return getattr(potential, 'values', potential)

def component_ground_states(space, domain, potential=None):
    V = _potential_array(potential)
    states = []
    for comp in domain_components(space, domain):
        spec = assemble_generator(space, comp, V)
        states.append(GroundState(comp, spec.ground, spec.mode(0)))
    return states

def principal_eigenvalue(space, domain, potential=None):
    V = _potential_array(potential)
    comps = domain_components(space, domain)
    if len(comps) == 1:
        spec = assemble_generator(space, domain, V)
        return spec.ground, spec.mode(0)
    logger.debug('domain has %d components; solving each', len(comps))
    states = component_ground_states(space, domain, V)
    best = min(states, key=lambda s: s.lam)
    return best.lam, best.phi

def eigenvalue_scaling(space, domains, band=DEFAULT_BAND, tag='eigenvalue-ball'):
    # domains: list of (DomainMask, radius); reports lambda * F(r)
    start = time.perf_counter()
    rows = []
    for domain, r in domains:
        lam, _phi = principal_eigenvalue(space, domain)
        rows.append({
            'radius': r,
            'size': len(domain),
            'lambda': lam,
            'scaled': lam * space.scaling.F(r),
        })
    scaled = np.array([row['scaled'] for row in rows])
    top = float(scaled.max())
    spread = top / float(scaled.min())
    constants = {'C1': top, 'spread': spread, 'band': band}
    digest = input_digest(tag, space=space.name,
                          domains=[(d.vertices, r) for d, r in domains])
    return InequalityReport(tag, digest, spread, band, constants,
                            spread <= band, time.perf_counter() - start,
                            {'rows': rows})

def eigenvalue_ball_bound(space, balls, band=DEFAULT_BAND):
    domains = []
    for x, r in balls:
        vertices = space.ball(x, r)
        if vertices.size == 0:
            raise SpaceError.empty_ball(x, r)
        domains.append((DomainMask(vertices, space.n), r))
    return eigenvalue_scaling(space, domains, band=band)

def faber_krahn_functional(space, ball, omega, nu=None):
    x, r = ball
    B = space.ball(x, r)
    if B.size == 0:
        raise SpaceError.empty_ball(x, r)
    B = DomainMask(B, space.n)
    if not omega.issubset(B):
        raise SubdomainError.not_contained()
    if nu is None:
        nu = space.scaling.beta / space.scaling.alpha2
    lam, _phi = principal_eigenvalue(space, omega)
    mu = space.measure
    ratio = mu[omega.vertices].sum() / mu[B.vertices].sum()
    return float(lam * space.scaling.F(r) * ratio ** nu)


###############################################################################
# Keller Thresholds
###############################################################################

KellerThreshold = namedtuple('KellerThreshold', (
    'depth',    # float, well depth where lambda crosses zero
    'norm',     # float, ||V^-||_p at the crossing
    'keller',   # float, mu(Omega)^(beta/alpha - 1/p) ||V^-||_p
    'lam'       # float, principal eigenvalue at the returned depth
))

def critical_well_depth(space, domain, well, p, tol=1e-10, max_doublings=60):
    # bisection on the depth of V = -depth * 1_well for lambda_Omega = 0
    well = np.asarray(well, dtype=np.int64)
    indicator = np.zeros(space.n)
    indicator[well] = 1.0

    def lam_at(depth):
        return principal_eigenvalue(space, domain, -depth * indicator)[0]

    lo, hi = 0.0, 1.0
    for _ in range(max_doublings):
        if lam_at(hi) <= 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ArithmeticError('eigenvalue does not cross zero')
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if lam_at(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    V = PotentialField(-hi * indicator)
    s = space.scaling
    norm = V.norm(p, space.measure, domain)
    mass = float(space.measure[domain.vertices].sum())
    keller = mass ** (s.beta / s.alpha2 - 1.0 / p) * norm
    return KellerThreshold(hi, norm, keller, lam_at(hi))
