# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

from collections import namedtuple
import json
import logging
from pathlib import Path

import numpy as np
import yaml

from .heatkernel import DEFAULT_ETA
from .inequalities import DEFAULT_SLACK
from .space import (
    DomainMask, GraphSpace, SpaceError, ball_domain, box_domain,
    build_lattice, build_path, build_sierpinski_gasket,
)
from .spectral import PotentialField

###############################################################################
# Constants
###############################################################################

logger = logging.getLogger(__name__)

SUITES = (
    'hitting', 'hitting-far', 'lieb', 'keller', 'liouville', 'fk-local',
    'wavelength', 'recurrent', 'moment', 'exit', 'eigenvalue',
)

SPACE_KINDS = ('lattice', 'gasket', 'path')

NUMBER = (int, float)
NUMBER_LIST = 'number list'

# key -> (expected types, required, default)
SCHEMA = {
    'suite': (str, True, None),
    'seed': (int, True, None),
    'space': ((dict, str), True, None),
    'instances': (int, False, 10),
    'workers': (int, False, 1),
    'eta': (NUMBER, False, DEFAULT_ETA),
    'epsilon': (NUMBER, False, 0.5),
    'p': (NUMBER, False, None),
    'kappa': (NUMBER, False, None),
    'sweeps': (dict, False, None),
    # None: each suite keeps its own band
    'band': (NUMBER, False, None),
    'slack': (NUMBER, False, DEFAULT_SLACK),
    'explicit': (list, False, None),
    'threshold': (NUMBER, False, 0.99),
    'output': (str, False, None),
}

SPACE_SCHEMA = {
    'kind': (str, True, None),
    'dim': (int, False, 2),
    'extent': (int, False, None),
    'periodic': (bool, False, False),
    'level': (int, False, None),
    'n': (int, False, None),
    'conductance': (NUMBER, False, 1.0),
}

SWEEP_KEYS = (
    'kappa', 'nu', 'C', 'radii', 'sizes', 'depths', 'epsilon', 'times',
)

# suite -> (required, optional) keys of an explicit instance
INSTANCE_KEYS = {
    'hitting': (('o', 'K', 'r'), ()),
    'hitting-far': (('o', 'x'), ('theta', 'ball_radius')),
    'lieb': (('domain', 'potential'), ()),
    'keller': (('domain', 'well', 'depth'), ()),
    'liouville': (('o', 'target_radius', 'radii'), ()),
    'fk-local': (('domain', 'potential'), ()),
    'wavelength': (('domain',), ('index',)),
    'recurrent': (('dim', 'sizes'),
                  ('ball_radius', 'horizon', 'offset', 'control')),
    'moment': (('potential',), ('domain',)),
    'exit': (('center',), ()),
    'eigenvalue': (('center',), ()),
}

###############################################################################
# Errors and Exceptions
###############################################################################

class ConfigError(Exception):
    @classmethod
    def missing_key(cls, key):
        return cls('missing required key {!r}'.format(key))

    @classmethod
    def unknown_key(cls, key):
        return cls('unknown key {!r}'.format(key))

    @classmethod
    def wrong_type(cls, key, value, expected):
        return cls('{!r} must be of type {}, got {!r}'.format(
            key, _type_name(expected), value))

    @classmethod
    def invalid_value(cls, key, value, reason):
        return cls('{!r} is not a valid value for {!r}: {}'.format(
            value, key, reason))

    @classmethod
    def not_a_mapping(cls):
        return cls('configuration must be a mapping')

    @classmethod
    def bad_spec(cls, what, text):
        return cls('cannot parse {} spec {!r}'.format(what, text))

    @classmethod
    def with_node(cls, key, node, err):
        # line-anchored message, 1-based like editors show it
        if node is None:
            return cls('in {!r}: {}'.format(key, err))
        mark = node.start_mark
        return cls('in {!r} [{}:{}]: {}'.format(
            key, mark.line + 1, mark.column + 1, err))


def _type_name(expected):
    if expected == NUMBER:
        return 'number'
    if isinstance(expected, tuple):
        return ' or '.join(t.__name__ for t in expected)
    return expected.__name__


###############################################################################
# Experiment Configuration
###############################################################################

ExperimentConfig = namedtuple('ExperimentConfig', (
    'suite',        # string, one of SUITES
    'seed',         # int
    'space',        # dict, space spec
    'instances',    # int, suite size
    'workers',      # int, worker pool size
    'eta',          # float in (0, 1)
    'epsilon',      # float in (0, 1)
    'p',            # float|None
    'kappa',        # float|None
    'sweeps',       # dict of sweep grids
    'band',         # float >= 1, or None for the suite default
    'slack',        # float >= 0
    'explicit',     # list of instance mappings, or None
    'threshold',    # float, recurrent check threshold
    'output'        # string|None
))

def _config_to_JSON(self):
    return self._asdict()

ExperimentConfig.to_JSON_object = _config_to_JSON


def _mapping_nodes(node):
    # key -> value node, for line anchors
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: v for k, v in node.value}

def _check_type(key, value, expected):
    if expected == NUMBER_LIST:
        if not isinstance(value, list) or not value:
            raise ConfigError.wrong_type(key, value, list)
        for v in value:
            _check_type(key, v, NUMBER)
        return
    if isinstance(value, bool) and expected is not bool:
        raise ConfigError.wrong_type(key, value, expected)
    if not isinstance(value, expected):
        raise ConfigError.wrong_type(key, value, expected)

def _validate_mapping(data, schema, nodes, prefix=''):
    result = {}
    for key in data:
        if key not in schema:
            raise ConfigError.with_node(prefix + str(key), nodes.get(key),
                ConfigError.unknown_key(key))
    for key, (expected, required, default) in schema.items():
        if key not in data:
            if required:
                raise ConfigError.missing_key(prefix + key)
            result[key] = default
            continue
        value = data[key]
        try:
            _check_type(key, value, expected)
        except ConfigError as e:
            raise ConfigError.with_node(prefix + key, nodes.get(key), e)
        result[key] = value
    return result

def _check_range(key, value, ok, reason, nodes):
    if value is not None and not ok(value):
        raise ConfigError.with_node(key, nodes.get(key),
            ConfigError.invalid_value(key, value, reason))

def _validate_sweeps(data, node):
    if data is None:
        return {}
    nodes = _mapping_nodes(node)
    sweeps = {}
    for key, value in data.items():
        if key not in SWEEP_KEYS:
            raise ConfigError.with_node('sweeps.' + str(key), nodes.get(key),
                ConfigError.unknown_key(key))
        try:
            _check_type(key, value, NUMBER_LIST)
        except ConfigError as e:
            raise ConfigError.with_node('sweeps.' + key, nodes.get(key), e)
        sweeps[key] = [float(v) if key != 'sizes' else int(v) for v in value]
    return sweeps

def _validate_space(data, node):
    if isinstance(data, str):
        try:
            return space_spec_from_string(data)
        except ConfigError as e:
            raise ConfigError.with_node('space', node, e)
    nodes = _mapping_nodes(node)
    spec = _validate_mapping(data, SPACE_SCHEMA, nodes, prefix='space.')
    kind = spec['kind']
    if kind not in SPACE_KINDS:
        raise ConfigError.with_node('space.kind', nodes.get('kind'),
            ConfigError.invalid_value('kind', kind,
                'expected one of {}'.format(', '.join(SPACE_KINDS))))
    needed = {'lattice': 'extent', 'gasket': 'level', 'path': 'n'}[kind]
    if spec[needed] is None:
        raise ConfigError.missing_key('space.' + needed)
    return spec

def validate_explicit(suite, items, node=None):
    """
    Check explicit instance mappings against the keys `suite` takes.
    `node` is the YAML sequence node, when there is one to anchor messages.
    """
    required, optional = INSTANCE_KEYS[suite]
    item_nodes = node.value if isinstance(node, yaml.SequenceNode) else ()
    for i, inst in enumerate(items):
        key = 'explicit[{}]'.format(i)
        item_node = item_nodes[i] if i < len(item_nodes) else node
        if not isinstance(inst, dict):
            raise ConfigError.with_node(key, item_node,
                ConfigError.wrong_type(key, inst, dict))
        nodes = _mapping_nodes(item_node)
        for k in inst:
            if k not in required and k not in optional:
                raise ConfigError.with_node('{}.{}'.format(key, k),
                    nodes.get(k, item_node), ConfigError.unknown_key(k))
        for k in required:
            if k not in inst:
                raise ConfigError.with_node(key, item_node,
                    ConfigError.missing_key(k))
    return items

def parse_config(text):
    """
    Parse and validate an experiment configuration document (JSON or YAML).
    Raises ConfigError with a line-anchored message on bad input.
    """
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError('invalid document: {}'.format(e))
    if not isinstance(data, dict):
        raise ConfigError.not_a_mapping()
    nodes = _mapping_nodes(root)
    values = _validate_mapping(data, SCHEMA, nodes)
    suite = values['suite']
    if suite not in SUITES:
        raise ConfigError.with_node('suite', nodes.get('suite'),
            ConfigError.invalid_value('suite', suite,
                'expected one of {}'.format(', '.join(SUITES))))
    _check_range('instances', values['instances'], lambda v: v > 0,
                 'must be positive', nodes)
    _check_range('workers', values['workers'], lambda v: v > 0,
                 'must be positive', nodes)
    _check_range('eta', values['eta'], lambda v: 0 < v < 1,
                 'must be in (0, 1)', nodes)
    _check_range('epsilon', values['epsilon'], lambda v: 0 < v < 1,
                 'must be in (0, 1)', nodes)
    _check_range('p', values['p'], lambda v: v > 0, 'must be positive', nodes)
    _check_range('band', values['band'], lambda v: v >= 1,
                 'must be >= 1', nodes)
    _check_range('slack', values['slack'], lambda v: v >= 0,
                 'must be nonnegative', nodes)
    values['space'] = _validate_space(values['space'], nodes.get('space'))
    values['sweeps'] = _validate_sweeps(values['sweeps'], nodes.get('sweeps'))
    if values['explicit'] is not None:
        validate_explicit(suite, values['explicit'], nodes.get('explicit'))
    for key in ('eta', 'epsilon', 'p', 'kappa', 'band', 'slack', 'threshold'):
        if values[key] is not None:
            values[key] = float(values[key])
    return ExperimentConfig(**values)

def load_config(path):
    path = Path(path)
    logger.debug('loading configuration from %s', path)
    text = path.read_text(encoding='utf-8') #!
    return parse_config(text)


###############################################################################
# Spaces, Domains and Potentials
###############################################################################

def space_spec_from_string(text):
    # path:N, lattice:DIM:EXTENT[:periodic], gasket:LEVEL
    parts = text.strip().split(':')
    try:
        if parts[0] == 'path' and len(parts) == 2:
            return {'kind': 'path', 'n': int(parts[1]), 'conductance': 1.0}
        if parts[0] == 'gasket' and len(parts) == 2:
            return {'kind': 'gasket', 'level': int(parts[1])}
        if parts[0] == 'lattice' and len(parts) in (3, 4):
            periodic = len(parts) == 4
            if periodic and parts[3] != 'periodic':
                raise ConfigError.bad_spec('space', text)
            return {'kind': 'lattice', 'dim': int(parts[1]),
                    'extent': int(parts[2]), 'periodic': periodic}
    except ValueError:
        pass
    raise ConfigError.bad_spec('space', text)

def build_space(spec):
    kind = spec['kind']
    if kind == 'lattice':
        return build_lattice(spec.get('dim', 2), spec['extent'],
                             periodic=spec.get('periodic', False))
    if kind == 'gasket':
        return build_sierpinski_gasket(spec['level'])
    if kind == 'path':
        return build_path(spec['n'], conductance=spec.get('conductance', 1.0))
    raise ConfigError.invalid_value('kind', kind, 'unknown space kind')

def parse_space_spec(text):
    """
    Build a space from a command-line spec, or from a JSON space file when
    `text` names an existing file.
    """
    path = Path(text)
    if path.suffix == '.json' and path.is_file():
        obj = json.loads(path.read_text(encoding='utf-8')) #!
        return GraphSpace.from_JSON_object(obj) #!
    return build_space(space_spec_from_string(text))

def _numbers(text, cast=float):
    return [cast(v) for v in text.split(',') if v.strip()]

def parse_domain_spec(space, text):
    # all, ball:X:R, box:L0,L1:U0,U1, or comma-separated vertex ids
    text = text.strip()
    parts = text.split(':')
    try:
        if text == 'all':
            return DomainMask.whole(space)
        if parts[0] == 'ball' and len(parts) == 3:
            return ball_domain(space, int(parts[1]), float(parts[2]))
        if parts[0] == 'box' and len(parts) == 3:
            return box_domain(space, _numbers(parts[1], int),
                              _numbers(parts[2], int))
        if len(parts) == 1:
            return DomainMask.of(space, _numbers(text, int))
    except ValueError:
        pass
    except SpaceError as e:
        raise ConfigError.invalid_value('domain', text, e)
    raise ConfigError.bad_spec('domain', text)

def parse_potential_spec(space, text):
    # zero, const:V, well:X:R:DEPTH, or a JSON list with one value per vertex
    text = text.strip()
    parts = text.split(':')
    try:
        if text == 'zero':
            return PotentialField.zero(space.n)
        if parts[0] == 'const' and len(parts) == 2:
            return PotentialField.constant(space.n, float(parts[1]))
        if parts[0] == 'well' and len(parts) == 4:
            return PotentialField.well(space, int(parts[1]), float(parts[2]),
                                       float(parts[3]))
        if text.startswith('['):
            values = json.loads(text)
            if len(values) != space.n:
                raise ConfigError.invalid_value('potential', len(values),
                    'expected {} values'.format(space.n))
            return PotentialField(np.asarray(values, dtype=float))
    except ValueError:
        pass
    raise ConfigError.bad_spec('potential', text)

def resolve_instance(space, obj):
    """
    Turn an explicit instance mapping from a configuration into suite
    arguments: domain and potential specs become objects.
    """
    inst = dict(obj)
    if isinstance(inst.get('domain'), str):
        inst['domain'] = parse_domain_spec(space, inst['domain'])
    elif isinstance(inst.get('domain'), list):
        inst['domain'] = DomainMask.of(space, inst['domain'])
    potential = inst.get('potential')
    if isinstance(potential, str):
        inst['potential'] = parse_potential_spec(space, potential)
    elif isinstance(potential, list):
        inst['potential'] = PotentialField(np.asarray(potential, dtype=float))
    return inst
