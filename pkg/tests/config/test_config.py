# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

import json

from hypothesis import given
from hypothesis.strategies import integers, sampled_from
import numpy as np
from pytest import approx, raises

from dirichletlab.config import (
    INSTANCE_KEYS, SUITES, ConfigError, build_space, load_config,
    parse_config, parse_domain_spec, parse_potential_spec, parse_space_spec,
    resolve_instance, space_spec_from_string, validate_explicit,
)
from dirichletlab.space import DomainMask, build_path
from dirichletlab.spectral import PotentialField

###############################################################################
# Fixtures
###############################################################################

MINIMAL = '''
suite: hitting
seed: 42
space: path:5
'''

FULL = '''
suite: lieb
seed: 7
space:
  kind: lattice
  dim: 2
  extent: 16
instances: 3
workers: 2
epsilon: 0.25
band: 5
sweeps:
  kappa: [0.1, 0.5, 1]
  sizes: [16, 32]
explicit:
  - domain: box:2,2:8,8
    potential: const:-0.5
output: out
'''

PATH = build_path(11)

###############################################################################
# Configuration Documents
###############################################################################

def test_minimal_config():
    cfg = parse_config(MINIMAL)
    assert cfg.suite == 'hitting'
    assert cfg.seed == 42
    assert cfg.space == {'kind': 'path', 'n': 5, 'conductance': 1.0}
    assert cfg.instances == 10
    assert cfg.workers == 1
    assert cfg.sweeps == {}
    assert cfg.explicit is None
    assert cfg.threshold == 0.99
    assert cfg.band is None

def test_full_config():
    cfg = parse_config(FULL)
    assert cfg.suite == 'lieb'
    assert cfg.space['kind'] == 'lattice'
    assert cfg.space['extent'] == 16
    assert cfg.space['periodic'] is False
    assert cfg.epsilon == 0.25
    assert isinstance(cfg.band, float)
    assert cfg.sweeps == {'kappa': [0.1, 0.5, 1.0], 'sizes': [16, 32]}
    assert len(cfg.explicit) == 1
    assert cfg.output == 'out'

def test_json_is_accepted():
    doc = json.dumps({'suite': 'exit', 'seed': 1, 'space': 'gasket:3'})
    cfg = parse_config(doc)
    assert cfg.space == {'kind': 'gasket', 'level': 3}

@given(sampled_from(SUITES))
def test_every_suite_name_is_accepted(suite):
    cfg = parse_config(MINIMAL.replace('hitting', suite))
    assert cfg.suite == suite

def test_missing_key():
    with raises(ConfigError) as e:
        parse_config('suite: hitting\nspace: path:5\n')
    assert 'seed' in str(e.value)

def test_unknown_key_is_line_anchored():
    text = MINIMAL + 'colour: blue\n'
    with raises(ConfigError) as e:
        parse_config(text)
    assert "'colour'" in str(e.value)
    assert '[5:' in str(e.value)

def test_wrong_type_is_line_anchored():
    text = 'suite: hitting\nseed: forty\nspace: path:5\n'
    with raises(ConfigError) as e:
        parse_config(text)
    assert '[2:7]' in str(e.value)

def test_booleans_are_not_numbers():
    with raises(ConfigError):
        parse_config(MINIMAL + 'eta: true\n')

@given(sampled_from((
    'eta: 1.5', 'epsilon: 0', 'instances: 0', 'workers: -1', 'band: 0.5',
    'slack: -1', 'p: 0',
)))
def test_out_of_range_values(line):
    with raises(ConfigError):
        parse_config(MINIMAL + line + '\n')

def test_unknown_suite():
    with raises(ConfigError) as e:
        parse_config(MINIMAL.replace('hitting', 'tetris'))
    assert 'tetris' in str(e.value)

def test_bad_space():
    with raises(ConfigError):
        parse_config(MINIMAL.replace('path:5', 'torus:5'))
    with raises(ConfigError):
        parse_config('suite: exit\nseed: 1\nspace:\n  kind: lattice\n')
    with raises(ConfigError):
        parse_config('suite: exit\nseed: 1\nspace:\n  kind: cube\n')

def test_bad_sweeps():
    with raises(ConfigError):
        parse_config(MINIMAL + 'sweeps:\n  colours: [1]\n')
    with raises(ConfigError):
        parse_config(MINIMAL + 'sweeps:\n  radii: []\n')
    with raises(ConfigError):
        parse_config(MINIMAL + 'sweeps:\n  radii: [a]\n')

def test_explicit_instances_are_mappings():
    with raises(ConfigError):
        parse_config(MINIMAL + 'explicit:\n  - 3\n')

def test_explicit_instances_need_their_keys():
    text = MINIMAL + '''explicit:
  - {o: 10, K: [12], r: 4}
  - {o: 10, K: [12]}
'''
    with raises(ConfigError) as e:
        parse_config(text)
    msg = str(e.value)
    assert 'explicit[1]' in msg
    assert "'r'" in msg
    assert '[7:5]' in msg

def test_explicit_instances_reject_unknown_keys():
    text = MINIMAL + 'explicit:\n  - {o: 10, K: [12], r: 4, colour: 1}\n'
    with raises(ConfigError) as e:
        parse_config(text)
    assert "'colour'" in str(e.value)
    assert '[6:' in str(e.value)

@given(sampled_from(SUITES))
def test_explicit_keys_follow_the_suite(suite):
    required, optional = INSTANCE_KEYS[suite]
    inst = dict.fromkeys(required + optional, 1)
    doc = {'suite': suite, 'seed': 1, 'space': 'path:5', 'explicit': [inst]}
    assert parse_config(json.dumps(doc)).explicit == [inst]
    del inst[required[0]]
    with raises(ConfigError):
        parse_config(json.dumps(doc))
    with raises(ConfigError):
        validate_explicit(suite, [inst])

def test_not_a_mapping():
    with raises(ConfigError):
        parse_config('- 1\n- 2\n')
    with raises(ConfigError):
        parse_config('suite: [\n')

def test_load_config(tmp_path):
    path = tmp_path / 'experiment.yaml'
    path.write_text(FULL, encoding='utf-8')
    assert load_config(path) == parse_config(FULL)

###############################################################################
# Space Specs
###############################################################################

def test_space_specs():
    assert space_spec_from_string('lattice:3:5') == {
        'kind': 'lattice', 'dim': 3, 'extent': 5, 'periodic': False}
    assert space_spec_from_string('lattice:2:5:periodic')['periodic']
    with raises(ConfigError):
        space_spec_from_string('lattice:2:5:twisted')
    with raises(ConfigError):
        space_spec_from_string('path:five')

@given(integers(min_value=2, max_value=30))
def test_build_path_space(n):
    space = build_space(space_spec_from_string('path:{}'.format(n)))
    assert space.n == n

def test_space_from_json_file(tmp_path):
    path = tmp_path / 'space.json'
    path.write_text(json.dumps(PATH.to_JSON_object()), encoding='utf-8')
    space = parse_space_spec(str(path))
    assert space.n == PATH.n
    assert parse_space_spec('gasket:2').n == 15

###############################################################################
# Domains and Potentials
###############################################################################

def test_domain_specs():
    assert parse_domain_spec(PATH, 'all').is_whole
    assert parse_domain_spec(PATH, 'ball:5:2').vertices.tolist() == [4, 5, 6]
    assert parse_domain_spec(PATH, '1,2,3') == DomainMask([1, 2, 3], PATH.n)
    with raises(ConfigError):
        parse_domain_spec(PATH, 'ball:5')
    with raises(ConfigError):
        parse_domain_spec(PATH, 'ball:5:0')

def test_potential_specs():
    assert np.all(parse_potential_spec(PATH, 'zero').values == 0.0)
    assert np.all(parse_potential_spec(PATH, 'const:-2').values == -2.0)
    V = parse_potential_spec(PATH, 'well:5:2:3')
    assert V.theta() == 3.0
    V = parse_potential_spec(PATH, json.dumps(list(range(11))))
    assert V.values[10] == 10.0
    with raises(ConfigError):
        parse_potential_spec(PATH, '[1, 2]')
    with raises(ConfigError):
        parse_potential_spec(PATH, 'well:5:2')

def test_resolve_instance():
    inst = resolve_instance(PATH, {'domain': 'ball:5:3',
                                   'potential': 'const:0.5', 'index': 1})
    assert isinstance(inst['domain'], DomainMask)
    assert isinstance(inst['potential'], PotentialField)
    assert inst['potential'].values[0] == approx(0.5)
    assert inst['index'] == 1
    inst = resolve_instance(PATH, {'domain': [1, 2], 'potential': [0.0] * 11})
    assert len(inst['domain']) == 2
