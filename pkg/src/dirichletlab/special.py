# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

from collections import namedtuple
import logging
import math

import numpy as np
from scipy.special import gammaln, logsumexp

###############################################################################
# Constants
###############################################################################

logger = logging.getLogger(__name__)

ML_MAX_TERMS = 10 ** 4
ML_CHUNK = 256
ML_LOG_EPS = math.log(1e-16)

# exp overflows past this
MAX_LOG_FLOAT = 709.0

###############################################################################
# Errors and Exceptions
###############################################################################

class RangeError(ArithmeticError):
    @classmethod
    def no_convergence(cls, ell, x):
        return cls('Mittag-Leffler series for ell={!r}, x={!r} did not '
                   'converge in {} terms'.format(ell, x, ML_MAX_TERMS))

    @classmethod
    def overflow(cls, ell, x):
        return cls('Mittag-Leffler value for ell={!r}, x={!r} overflows'
                   .format(ell, x))


class NormError(ValueError):
    @classmethod
    def out_of_range(cls, name, value, interval):
        return cls('{}={!r} is outside {}'.format(name, value, interval))

    @classmethod
    def negative_values(cls):
        return cls('function must be nonnegative on the support')

    @classmethod
    def exponent_mismatch(cls, p1, p2):
        return cls('1/{} + 1/{} != 1'.format(p1, p2))


###############################################################################
# Mittag-Leffler Functions
###############################################################################

def _check_ml_args(ell, x):
    if not (0.0 < ell <= 1.0):
        raise NormError.out_of_range('ell', ell, '(0, 1]')
    if x < 0:
        raise NormError.out_of_range('x', x, '[0, inf)')

def _ml_log_terms(ell, x):
    # log of x^k / Gamma(1 + ell k), up to the first negligible term
    lx = math.log(x)
    terms = []
    acc = -math.inf
    prev = math.inf
    for start in range(0, ML_MAX_TERMS, ML_CHUNK):
        k = np.arange(start, min(start + ML_CHUNK, ML_MAX_TERMS))
        chunk = k * lx - gammaln(1.0 + ell * k)
        for i, lt in enumerate(chunk):
            acc = np.logaddexp(acc, lt)
            if lt < acc + ML_LOG_EPS and lt < prev:
                terms.append(chunk[:i + 1])
                return np.concatenate(terms)
            prev = lt
        terms.append(chunk)
    raise RangeError.no_convergence(ell, x)

def log_mittag_leffler(ell, x):
    _check_ml_args(ell, x)
    if x == 0:
        return 0.0
    return float(logsumexp(_ml_log_terms(ell, x)))

def mittag_leffler(ell, x):
    """
    ML_ell(x) = sum_k x^k / Gamma(1 + ell k) for ell in (0, 1], x >= 0.
    """
    _check_ml_args(ell, x)
    if x == 0:
        return 1.0
    lts = _ml_log_terms(ell, x)
    if lts.max() < MAX_LOG_FLOAT - math.log(lts.size):
        return math.fsum(np.exp(lts))
    value = float(logsumexp(lts))
    if value >= MAX_LOG_FLOAT:
        raise RangeError.overflow(ell, x)
    return math.exp(value)


MLConstantFit = namedtuple('MLConstantFit', (
    'rho',      # float in (0, 1]
    'm',        # float, max of ML_rho(x) / exp(x^(1/rho)) over the grid
    'x_max'     # float, largest grid point where the series converged
))

MLConstantFit.to_JSON_object = MLConstantFit._asdict

def fit_ml_exponential_constant(rho, xs=None):
    if not (0.0 < rho <= 1.0):
        raise NormError.out_of_range('rho', rho, '(0, 1]')
    if xs is None:
        xs = np.linspace(0.0, 50.0, 101)
    best = -math.inf
    x_max = 0.0
    for x in xs:
        try:
            log_ml = log_mittag_leffler(rho, float(x))
        except RangeError:
            logger.debug('ML_%s series stops converging at x=%s', rho, x)
            break
        best = max(best, log_ml - float(x) ** (1.0 / rho))
        x_max = float(x)
    return MLConstantFit(float(rho), math.exp(best), x_max)


###############################################################################
# Decreasing Rearrangement
###############################################################################

RearrangedFunction = namedtuple('RearrangedFunction', (
    'values',       # array, strictly descending f*_i
    'cumulative'    # array, ascending T_i = mu(f >= f*_i)
))

def _rf_level_measure(self, t):
    # mu(f > t) read off the step function
    above = self.values > t
    if not np.any(above):
        return 0.0
    return float(self.cumulative[np.flatnonzero(above)[-1]])

def _rf_integral(self):
    steps = np.diff(np.concatenate(([0.0], self.cumulative)))
    return float(np.sum(self.values * steps))

def _rf_total(self):
    return float(self.cumulative[-1]) if self.cumulative.size else 0.0

def _rf_to_JSON(self):
    return {
        'atoms': [[float(v), float(t)]
                  for v, t in zip(self.values, self.cumulative)],
    }

RearrangedFunction.level_measure = _rf_level_measure
RearrangedFunction.integral = _rf_integral
RearrangedFunction.total_measure = property(_rf_total)
RearrangedFunction.to_JSON_object = _rf_to_JSON

def rearrange(f, measure, support=None):
    f = np.asarray(f, dtype=float)
    measure = np.asarray(measure, dtype=float)
    if support is not None:
        support = np.asarray(support, dtype=np.int64)
        f = f[support]
        measure = measure[support]
    if np.any(f < 0):
        raise NormError.negative_values()
    if f.size == 0:
        return RearrangedFunction(np.zeros(0), np.zeros(0))
    # ties merge into one atom
    values, inverse = np.unique(f, return_inverse=True)
    masses = np.bincount(inverse.ravel(), weights=measure,
                         minlength=values.size)
    values = values[::-1]
    cumulative = np.cumsum(masses[::-1])
    return RearrangedFunction(values, cumulative)


###############################################################################
# Lorentz Norms
###############################################################################

def _check_p(p):
    if not p > 0:
        raise NormError.out_of_range('p', p, '(0, inf)')

def _is_inf(q):
    return q == 'inf' or q == math.inf

def lorentz_norm_rearranged(rf, p, q=1):
    _check_p(p)
    if rf.values.size == 0:
        return 0.0
    T = rf.cumulative
    if _is_inf(q):
        return float(np.max(rf.values * T ** (1.0 / p)))
    if q != 1:
        raise NormError.out_of_range('q', q, '{1, inf}')
    T_prev = np.concatenate(([0.0], T[:-1]))
    steps = T ** (1.0 / p) - T_prev ** (1.0 / p)
    return float(np.sum(rf.values * p * steps))

def lorentz_norm(f, measure, support, p, q=1):
    """
    ||f||_{p,1} = int_0^inf t^(1/p - 1) f*(t) dt and
    ||f||_{p,inf} = sup_t t^(1/p) f*(t), exact on the step function f*.
    """
    _check_p(p)
    return lorentz_norm_rearranged(rearrange(f, measure, support), p, q)

def lorentz_holder_check(f, g, measure, p1, p2, support=None):
    if abs(1.0 / p1 + 1.0 / p2 - 1.0) > 1e-12:
        raise NormError.exponent_mismatch(p1, p2)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    mu = np.asarray(measure, dtype=float)
    if support is None:
        support = np.arange(f.size)
    support = np.asarray(support, dtype=np.int64)
    if np.any(f[support] < 0) or np.any(g[support] < 0):
        raise NormError.negative_values()
    lhs = float(np.sum(f[support] * g[support] * mu[support]))
    rhs = (lorentz_norm(f, mu, support, p1, 1)
           * lorentz_norm(g, mu, support, p2, 'inf'))
    return lhs, rhs

def lorentz_subadditivity(f, g, measure, support, p):
    # ||f + g||_{p,1} / (||f||_{p,1} + ||g||_{p,1})
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    top = lorentz_norm(f + g, measure, support, p, 1)
    bottom = (lorentz_norm(f, measure, support, p, 1)
              + lorentz_norm(g, measure, support, p, 1))
    return top / bottom if bottom > 0 else 0.0


###############################################################################
# Khasminskii
###############################################################################

def khasminskii_bound(c):
    if not (0.0 <= c < 1.0):
        raise NormError.out_of_range('c', c, '[0, 1)')
    return 1.0 / (1.0 - c)
