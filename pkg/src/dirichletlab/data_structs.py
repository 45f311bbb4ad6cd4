# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

from collections import namedtuple
import hashlib
import json
import math

import numpy as np

###############################################################################
# Constants
###############################################################################

NUMBER_TYPES = (int, float, np.integer, np.floating)

DIGEST_LENGTH = 16

###############################################################################
# Helper Functions
###############################################################################

def json_number(value):
    # JSON has no inf/nan literals
    if value is None:
        return None
    value = float(value)
    if math.isnan(value):
        return None
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return value

def json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, NUMBER_TYPES):
        if isinstance(value, (int, np.integer)):
            return int(value)
        return json_number(value)
    if isinstance(value, np.ndarray):
        return [json_value(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [json_value(v) for v in value]
    if isinstance(value, dict):
        return {str(k): json_value(v) for k, v in value.items()}
    if hasattr(value, 'to_JSON_object'):
        return value.to_JSON_object()
    return value

def input_digest(tag, **inputs):
    # stable across runs: canonical JSON of the inputs that define an instance
    payload = {'tag': tag, 'inputs': json_value(inputs)}
    text = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:DIGEST_LENGTH]


###############################################################################
# Inequality Reports
###############################################################################

InequalityReport = namedtuple('InequalityReport', (
    'tag',          # string, which inequality or suite
    'digest',       # string, hash of the instance inputs
    'lhs',          # float|None
    'rhs',          # float|None
    'constants',    # dict of fitted constants and intermediate values
    'verdict',      # bool
    'runtime',      # float, seconds (never serialized by default)
    'details'       # dict
))

def _report_to_JSON(self, runtime=False):
    data = {
        'tag': self.tag,
        'digest': self.digest,
        'lhs': json_number(self.lhs),
        'rhs': json_number(self.rhs),
        'constants': json_value(self.constants),
        'verdict': bool(self.verdict),
        'details': json_value(self.details),
    }
    if runtime:
        data['runtime'] = self.runtime
    return data

InequalityReport.to_JSON_object = _report_to_JSON

def _report_error(self):
    return self.details.get('error')

InequalityReport.error = property(_report_error)

def FailedReport(tag, digest, err, runtime=0.0):
    msg = str(err) or type(err).__name__
    details = {'error': '{}: {}'.format(type(err).__name__, msg)}
    return InequalityReport(tag, digest, None, None, {}, False, runtime,
                            details)


SuiteResult = namedtuple('SuiteResult', (
    'summary',      # InequalityReport
    'instances'     # [InequalityReport]
))

def _suite_failures(self):
    return [r.digest for r in self.instances if not r.verdict]

SuiteResult.failures = property(_suite_failures)

def _suite_verdict(self):
    return bool(self.summary.verdict) and not self.failures

SuiteResult.verdict = property(_suite_verdict)


###############################################################################
# Hitting Time Certificates
###############################################################################

HittingCertificate = namedtuple('HittingCertificate', (
    'space',                # string, space name
    'o',                    # int, start vertex
    'K',                    # tuple of int, target set
    'r',                    # float, radius with K inside B(o, r)
    'T',                    # float, deadline F(eta' r)
    'nu_K',                 # tuple of float, normalized measure on K
    'exact_prob',           # float in [0, 1]
    'green_ratio_bound',    # float
    'volume_ratio',         # float, mu(K) / V(o, r)
    'volume_bound',         # float|None, C1 * volume_ratio
    'slack'                 # float
))

def _cert_verdict(self):
    ok = self.green_ratio_bound <= self.exact_prob + self.slack
    if self.volume_bound is not None:
        ok = ok and self.volume_bound <= self.exact_prob + self.slack
    return ok

HittingCertificate.verdict = property(_cert_verdict)

def _cert_to_JSON(self):
    return {
        'space': self.space,
        'o': int(self.o),
        'K': [int(k) for k in self.K],
        'r': json_number(self.r),
        'T': json_number(self.T),
        'nu_K': [json_number(v) for v in self.nu_K],
        'exact_prob': json_number(self.exact_prob),
        'green_ratio_bound': json_number(self.green_ratio_bound),
        'volume_ratio': json_number(self.volume_ratio),
        'volume_bound': json_number(self.volume_bound),
        'verdict': self.verdict,
    }

HittingCertificate.to_JSON_object = _cert_to_JSON


###############################################################################
# Heat Kernel Envelopes
###############################################################################

HeatKernelEnvelope = namedtuple('HeatKernelEnvelope', (
    'C_ue',     # float > 0
    'c_ue',     # float > 0
    'c_nle',    # float > 0
    'eta',      # float in (0, 1)
    'fitted',   # bool
    'failures'  # tuple of sample indices violating the envelope
))

def _envelope_to_JSON(self):
    return {
        'C_ue': json_number(self.C_ue),
        'c_ue': json_number(self.c_ue),
        'c_nle': json_number(self.c_nle),
        'eta': json_number(self.eta),
        'fitted': bool(self.fitted),
        'failures': [int(i) for i in self.failures],
    }

HeatKernelEnvelope.to_JSON_object = _envelope_to_JSON


###############################################################################
# Monte Carlo Estimates
###############################################################################

HittingEstimate = namedtuple('HittingEstimate', (
    'probability',  # float in [0, 1]
    'std_error',    # float >= 0
    'n_paths',      # int
    'deadline'      # float|None
))

HittingEstimate.to_JSON_object = HittingEstimate._asdict


MonteCarloEstimate = namedtuple('MonteCarloEstimate', (
    'value',        # float
    'std_error',    # float >= 0
    'n_paths',      # int, paths used in the estimate
    'n_excluded'    # int, truncated paths left out
))

MonteCarloEstimate.to_JSON_object = MonteCarloEstimate._asdict

def _estimate_agrees(self, exact, sigmas=3.0):
    return abs(self.value - exact) <= sigmas * self.std_error + 1e-12

MonteCarloEstimate.agrees_with = _estimate_agrees
HittingEstimate.agrees_with = lambda self, exact, sigmas=3.0: (
    abs(self.probability - exact) <= sigmas * self.std_error + 1e-12)
