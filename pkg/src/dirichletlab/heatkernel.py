# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

import csv
import json
import logging
import math
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.optimize import linprog

from .data_structs import HeatKernelEnvelope, json_number
from .space import (
    DomainMask, SpaceError, dirichlet_solve, volume,
)

###############################################################################
# Constants
###############################################################################

logger = logging.getLogger(__name__)

# dense eigendecomposition guard
MAX_DENSE_VERTICES = 3000

# near-diagonal lower estimate constant used when no envelope is fitted
DEFAULT_ETA = 0.25

MIN_ENVELOPE_SAMPLES = 10

# grid for the sup in Phi(s) = sup_r {s/r - 1/F(r)}
PHI_GRID_SIZE = 10 ** 4
PHI_GRID_LOG10 = (-8.0, 8.0)

# relative size below which lambda counts as zero
ZERO_EIGENVALUE_TOL = 1e-9

###############################################################################
# Errors and Exceptions
###############################################################################

class RecurrenceError(Exception):
    @classmethod
    def recurrent(cls, lam):
        return cls('generator is recurrent (lambda_1 = {!r}); '
                   'use the truncated Green function'.format(lam))


class NumericError(ArithmeticError):
    @classmethod
    def eigensolver(cls, err):
        return cls('eigensolver did not converge: {}'.format(err))


class SamplingError(Exception):
    @classmethod
    def too_few(cls, n):
        return cls('need at least {} samples, got {}'.format(
            MIN_ENVELOPE_SAMPLES, n))

    @classmethod
    def not_whole_space(cls):
        return cls('envelopes are fitted on the whole-space kernel with V = 0')


def _negative_time(t):
    return ValueError('time must be nonnegative, got {!r}'.format(t))

def _not_in_domain(x):
    return ValueError('vertex {!r} is not in the domain'.format(x))


###############################################################################
# Generator Spectrum
###############################################################################

class GeneratorSpectrum(object):
    """
    Full eigendecomposition of the Schrodinger generator -Delta + V
    restricted to a domain (functions vanish off the domain).
    Eigenvectors are orthonormal in L^2(mu) over the domain and are stored
    as rows indexed by the position of the vertex within the domain.
    """

    __slots__ = ('space', 'domain', 'potential', 'eigenvalues',
                 'eigenvectors')

    def __init__(self, space, domain, potential, eigenvalues, eigenvectors):
        self.space = space
        self.domain = domain
        self.potential = potential
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors
        eigenvalues.setflags(write=False)
        eigenvectors.setflags(write=False)

    @property
    def n_modes(self):
        return self.eigenvalues.size

    @property
    def ground(self):
        return float(self.eigenvalues[0])

    @property
    def measure(self):
        return self.space.measure[self.domain.vertices]

    @property
    def has_potential(self):
        return self.potential is not None and np.any(self.potential != 0)

    @property
    def is_transient(self):
        scale = max(1.0, float(np.abs(self.eigenvalues).max()))
        return self.eigenvalues[0] > ZERO_EIGENVALUE_TOL * scale

    @property
    def ground_multiplicity(self):
        lam = self.eigenvalues
        tol = ZERO_EIGENVALUE_TOL * max(1.0, abs(float(lam[-1])))
        return int(np.count_nonzero(lam - lam[0] <= tol))

    def position(self, x):
        vs = self.domain.vertices
        i = np.searchsorted(vs, x)
        if np.any(i >= vs.size) or np.any(vs[np.minimum(i, vs.size - 1)] != x):
            raise _not_in_domain(x)
        return i

    def restrict(self, f):
        return np.asarray(f, dtype=float)[self.domain.vertices]

    def extend(self, values):
        f = np.zeros(self.space.n)
        f[self.domain.vertices] = values
        return f

    def mode(self, k):
        # k-th eigenfunction on the whole vertex set
        return self.extend(self.eigenvectors[:, k])

    def coefficients(self, f):
        # (f, phi_n)_mu for every mode
        return self.eigenvectors.T.dot(self.measure * self.restrict(f))

    def inner(self, f, g):
        return float(np.sum(self.measure * self.restrict(f) * self.restrict(g)))

    def to_JSON_object(self):
        return {
            'space': self.space.name,
            'domain': self.domain.to_JSON_object(),
            'potential': (None if self.potential is None
                          else [json_number(v) for v in self.potential]),
            'n_modes': self.n_modes,
        }

    def __repr__(self):
        return '{}({!r}, modes={}, lambda_1={!r})'.format(
            type(self).__name__, self.space.name, self.n_modes, self.ground)


def _potential_values(potential, n):
    if potential is None:
        return None
    values = getattr(potential, 'values', potential)
    values = np.asarray(values, dtype=float)
    if values.shape != (n,):
        raise ValueError('potential must have one value per vertex')
    if not np.all(np.isfinite(values)):
        raise ValueError('potential must be finite')
    return values

def _normalize_signs(vectors):
    # largest-magnitude entry of each eigenvector is positive
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors *= signs[None, :]

def assemble_generator(space, domain=None, potential=None):
    if domain is None:
        domain = DomainMask.whole(space)
    idx = domain.vertices
    if idx.size > MAX_DENSE_VERTICES:
        raise SpaceError.too_large('dense spectrum on', idx.size,
                                   MAX_DENSE_VERTICES)
    V = _potential_values(potential, space.n)
    # edges leaving the domain stay in the degree: killing at the boundary
    A = np.diag(space.degree[idx]) - space.conductance[idx][:, idx].toarray()
    w = 1.0 / np.sqrt(space.measure[idx])
    S = (A * w[:, None]) * w[None, :]
    if V is not None:
        S[np.diag_indices_from(S)] += V[idx]
    logger.debug('dense eigendecomposition on %d vertices of %s',
                 idx.size, space.name)
    try:
        lam, U = linalg.eigh(S)
    except linalg.LinAlgError as e:
        raise NumericError.eigensolver(e)
    vectors = U * w[:, None]
    _normalize_signs(vectors)
    return GeneratorSpectrum(space, domain, V, lam, vectors)


###############################################################################
# Heat Kernel and Green Functions
###############################################################################

def heat_kernel(spec, t, x, y):
    if t < 0:
        raise _negative_time(t)
    i = spec.position(x)
    j = spec.position(y)
    phi = spec.eigenvectors
    e = np.exp(-spec.eigenvalues * t)
    return float(np.sum(e * (phi[i] * phi[j])))

def heat_kernel_matrix(spec, t):
    # p_t(x, y) for x, y in the domain, in domain order
    if t < 0:
        raise _negative_time(t)
    phi = spec.eigenvectors
    e = np.exp(-spec.eigenvalues * t)
    K = (phi * e[None, :]).dot(phi.T)
    return 0.5 * (K + K.T)

def _truncation_weights(lam, T):
    # (1 - exp(-lambda T)) / lambda, with limit T at lambda = 0
    lt = lam * T
    with np.errstate(divide='ignore', invalid='ignore'):
        w = -np.expm1(-lt) / lam
    small = np.abs(lt) < 1e-12
    w[small] = T * (1.0 - 0.5 * lt[small])
    return w

def _green_weights(spec, T):
    if T is None:
        if not spec.is_transient:
            raise RecurrenceError.recurrent(spec.ground)
        return 1.0 / spec.eigenvalues
    if T < 0:
        raise _negative_time(T)
    return _truncation_weights(spec.eigenvalues, T)

def green(spec, x, y):
    w = _green_weights(spec, None)
    phi = spec.eigenvectors
    i = spec.position(x)
    j = spec.position(y)
    return float(np.sum(w * (phi[i] * phi[j])))

def green_truncated(spec, T, x, y):
    w = _green_weights(spec, T)
    phi = spec.eigenvectors
    i = spec.position(x)
    j = spec.position(y)
    return float(np.sum(w * (phi[i] * phi[j])))

def green_matrix(spec, T=None, rows=None, cols=None):
    # G_T (or G when T is None) between the given global vertices
    w = _green_weights(spec, T)
    phi = spec.eigenvectors
    a = phi if rows is None else phi[spec.position(np.asarray(rows))]
    b = phi if cols is None else phi[spec.position(np.asarray(cols))]
    return (a * w[None, :]).dot(b.T)

def deadline(scaling, r, eta=DEFAULT_ETA):
    # T = F(eta' r) with eta' = 2 / eta
    return scaling.F((2.0 / eta) * r)


###############################################################################
# Phi Functional
###############################################################################

def phi(scaling, s):
    if s < 0:
        raise ValueError('s must be nonnegative, got {!r}'.format(s))
    if s == 0:
        return 0.0
    b = scaling.beta
    return (1.0 - 1.0 / b) * b ** (-1.0 / (b - 1.0)) * s ** (b / (b - 1.0))

def phi_grid(scaling, s):
    if s < 0:
        raise ValueError('s must be nonnegative, got {!r}'.format(s))
    if s == 0:
        return 0.0
    b = scaling.beta
    lo, hi = PHI_GRID_LOG10
    u = np.linspace(lo, hi, PHI_GRID_SIZE) * math.log(10.0)
    values = s * np.exp(-u) - np.exp(-b * u)
    k = int(np.argmax(values))
    # one Newton step on the derivative in log r
    x = u[k]
    d1 = -s * math.exp(-x) + b * math.exp(-b * x)
    d2 = s * math.exp(-x) - b * b * math.exp(-b * x)
    if d2 < 0:
        x = x - d1 / d2
    return max(float(values[k]), s * math.exp(-x) - math.exp(-b * x))


###############################################################################
# Heat Kernel Envelopes
###############################################################################

def fit_envelope(space, spec, samples):
    """
    Fit the upper estimate
        p_t(x,y) <= C / V(x, R(t)) * exp(-(t/2) Phi(c d(x,y) / t))
    and the near-diagonal lower estimate
        p_t(x,y) >= c' / V(x, R(t))  whenever  d(x,y) <= eta R(t)
    on a sample of (t, x, y) triples.
    """
    samples = list(samples)
    if len(samples) < MIN_ENVELOPE_SAMPLES:
        raise SamplingError.too_few(len(samples))
    if not spec.domain.is_whole or spec.has_potential:
        raise SamplingError.not_whole_space()
    scaling = space.scaling
    n = len(samples)
    t = np.empty(n)
    p = np.empty(n)
    vol = np.empty(n)
    d = np.empty(n)
    dist_cache = {}
    for k, (tk, x, y) in enumerate(samples):
        if x not in dist_cache:
            dist_cache[x] = space.distances(x)
        t[k] = tk
        p[k] = heat_kernel(spec, tk, x, y)
        vol[k] = volume(space, x, scaling.R(tk))
        d[k] = dist_cache[x][y]
    # upper estimate: log C - a z_k >= log(p_k V_k), a = c^gamma
    gamma = scaling.beta / (scaling.beta - 1.0)
    positive = p > 0
    y_log = np.log(p[positive] * vol[positive])
    z = np.array([0.5 * tk * phi(scaling, dk / tk)
                  for tk, dk in zip(t[positive], d[positive])])
    C_ue, c_ue, ue_ok = _fit_upper(y_log, z, gamma)
    # near-diagonal lower estimate
    ratio = d / np.array([scaling.R(tk) for tk in t])
    w = p * vol
    c_nle, eta = _fit_lower(ratio, w)
    fitted = ue_ok and c_nle > 0
    failures = []
    for k in range(n):
        bound = C_ue / vol[k] * math.exp(-0.5 * t[k] * phi(
            scaling, c_ue * d[k] / t[k]))
        if p[k] > bound * (1.0 + 1e-9) + 1e-300:
            failures.append(k)
        elif ratio[k] <= eta and p[k] < c_nle / vol[k] * (1.0 - 1e-9):
            failures.append(k)
    if failures:
        logger.warning('envelope violated on %d of %d samples',
                       len(failures), n)
    return HeatKernelEnvelope(C_ue, c_ue, c_nle, eta,
                              fitted and not failures, tuple(failures))

def _fit_upper(y_log, z, gamma):
    if y_log.size == 0:
        return 1.0, 1.0, True
    off = z > 0
    if not np.any(off):
        # no off-diagonal constraint: c is arbitrary
        return float(math.exp(y_log.max())), 1.0, True
    # minimize the total log-slack sum_k (L - a z_k - y_k)
    m = y_log.size
    cost = np.array([float(m), -float(z.sum())])
    A_ub = np.column_stack((-np.ones(m), z))
    res = linprog(cost, A_ub=A_ub, b_ub=-y_log,
                  bounds=[(None, None), (0.0, None)], method='highs')
    if res.status != 0:
        logger.warning('envelope program failed: %s', res.message)
        return float(math.exp(y_log.max())), 0.0, False
    L, a = res.x
    # keep the envelope feasible against round-off in the solver
    L = max(L, float(np.max(y_log + a * z)))
    if a <= 0.0:
        return float(math.exp(L)), 0.0, False
    return float(math.exp(L)), float(a ** (1.0 / gamma)), True

def _fit_lower(ratio, w):
    base = ratio <= ratio.min()
    c0 = float(w[base].min())
    candidates = np.unique(ratio[(ratio > 0) & (ratio < 1)])
    eta = None
    c_nle = c0
    for rho in candidates:
        c = float(w[ratio <= rho].min())
        if c >= 0.5 * c0 and c > 0:
            eta, c_nle = float(rho), c
    if eta is None:
        positive = ratio[ratio > 0]
        if positive.size and positive.min() < 2 * DEFAULT_ETA:
            eta = 0.5 * float(positive.min())
        else:
            eta = DEFAULT_ETA
        near = ratio <= eta
        if np.any(near):
            c_nle = float(w[near].min())
    return c_nle, eta


###############################################################################
# Harnack and Green Function Checks
###############################################################################

def harmonic_extension(space, domain, data):
    return dirichlet_solve(space, domain, boundary=data)

def check_harnack(space, x, r, boundary_data):
    """
    Largest ratio max/min over the half ball B(x, r/2) among harmonic
    extensions into B(x, r) of the given nonnegative data.
    """
    interior = space.ball(x, r)
    if interior.size < 2:
        raise SpaceError.no_interior(x, r)
    domain = DomainMask(interior, space.n)
    half = space.ball(x, 0.5 * r)
    worst = 1.0
    for data in boundary_data:
        data = np.asarray(data, dtype=float)
        if np.any(data < 0):
            raise ValueError('boundary data must be nonnegative')
        h = harmonic_extension(space, domain, data)
        values = h[half]
        top = float(values.max())
        if top <= 0.0:
            continue
        low = float(values.min())
        ratio = math.inf if low <= 0.0 else top / low
        worst = max(worst, ratio)
    return worst

def green_lower_band(space, spec, samples, eta=DEFAULT_ETA):
    # inf of G_T(x, y) V(x, r) / F(r) over samples with d(x, y) <= r
    scaling = space.scaling
    values = []
    for x, y, r in samples:
        if space.distances(x)[y] > r:
            continue
        T = deadline(scaling, r, eta)
        g = green_truncated(spec, T, x, y)
        values.append(g * volume(space, x, r) / scaling.F(r))
    return min(values) if values else math.nan

def green_mass_band(space, spec, samples, eta=DEFAULT_ETA):
    # sup over samples of sup_z sum_y G_T(z, y) mu(y) / F(r) within B(x, r)
    scaling = space.scaling
    worst = 0.0
    for x, r in samples:
        B = space.ball(x, r)
        if B.size == 0:
            continue
        T = deadline(scaling, r, eta)
        G = green_matrix(spec, T, B, B)
        mass = G.dot(space.measure[B]).max()
        worst = max(worst, float(mass) / scaling.F(r))
    return worst

def green_harnack_ratio(spec, x, r, y):
    space = spec.space
    if space.distances(x)[y] < 2 * r:
        raise ValueError('pole must lie outside B(x, 2r)')
    B = space.ball(x, r)
    G = green_matrix(spec, None, B, [y]).ravel()
    return float(G.max() / G.min())

def log_green_band(space, spec, pairs, r, eta=DEFAULT_ETA):
    # max of G_T(x, y) / (log(r / d(x, y)) + 1) over pairs with 0 < d < r
    T = deadline(space.scaling, r, eta)
    worst = 0.0
    for x, y in pairs:
        dxy = space.distances(x)[y]
        if not (0 < dxy < r):
            continue
        g = green_truncated(spec, T, x, y)
        worst = max(worst, g / (math.log(r / dxy) + 1.0))
    return worst


###############################################################################
# Serialization
###############################################################################

def dump_spectrum(spec, dirpath, k=None):
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    k = spec.n_modes if k is None else min(int(k), spec.n_modes)
    meta = spec.to_JSON_object()
    meta['n_modes'] = k
    with (dirpath / 'spectrum.json').open('w') as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write('\n')
    with (dirpath / 'eigenvalues.csv').open('w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(('n', 'lambda'))
        for i in range(k):
            writer.writerow((i + 1, '{:.17g}'.format(spec.eigenvalues[i])))
    with (dirpath / 'eigenvectors.csv').open('w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(['vertex'] + ['phi_{}'.format(i + 1)
                                      for i in range(k)])
        for row, x in enumerate(spec.domain.vertices):
            writer.writerow([int(x)] + ['{:.17g}'.format(v)
                                        for v in spec.eigenvectors[row, :k]])
    return dirpath

def load_spectrum(space, dirpath):
    dirpath = Path(dirpath)
    with (dirpath / 'spectrum.json').open() as fh:
        meta = json.load(fh)
    domain = DomainMask.of(space, meta['domain']['vertices'])
    with (dirpath / 'eigenvalues.csv').open(newline='') as fh:
        rows = list(csv.reader(fh))[1:]
    lam = np.array([float(r[1]) for r in rows])
    with (dirpath / 'eigenvectors.csv').open(newline='') as fh:
        rows = list(csv.reader(fh))[1:]
    vectors = np.array([[float(v) for v in r[1:]] for r in rows])
    potential = meta.get('potential')
    if potential is not None:
        potential = np.array(potential, dtype=float)
    return GeneratorSpectrum(space, domain, potential, lam, vectors)
