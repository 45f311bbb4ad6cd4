# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

from argparse import ArgumentParser
import json
import logging
from pathlib import Path
import sys

import numpy as np

from .config import (
    ConfigError, SUITES, load_config, parse_domain_spec,
    parse_potential_spec, parse_space_spec, validate_explicit,
)
from .data_structs import json_value
from .heatkernel import assemble_generator, dump_spectrum, heat_kernel
from .plotting import PlotError, plot
from .runner import (
    EXIT_CONFIG, EXIT_OK, exit_status, run_suite, write_artifacts,
)
from .space import SpaceError
from .special import NormError, lorentz_norm, rearrange
from .stochastic import (
    exact_hitting_prob, exact_hitting_prob_by_time, exact_mean_exit,
    exit_time_mc, hitting_mc, median_exit_time, walk_config,
)

###############################################################################
# Constants
###############################################################################

logger = logging.getLogger(__name__)

###############################################################################
# Helper Functions
###############################################################################

def _print_json(obj, path=None):
    text = json.dumps(json_value(obj), sort_keys=True, indent=2)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + '\n', encoding='utf-8')

def _vertex_list(text):
    return [int(v) for v in text.split(',') if v.strip()]

def _pair(text):
    x, y = text.split(':')
    return int(x), int(y)

def _read_values(text):
    # a JSON file or a comma-separated list of numbers
    path = Path(text)
    if path.is_file():
        return np.asarray(json.loads(path.read_text(encoding='utf-8')),
                          dtype=float)
    return np.asarray([float(v) for v in text.split(',') if v.strip()])


###############################################################################
# Workflow
###############################################################################

def workflow_build_space(args):
    space = parse_space_spec(args.space)
    _print_json(space.to_JSON_object(), args.out)
    return EXIT_OK

def workflow_eigs(args):
    space = parse_space_spec(args.space)
    domain = parse_domain_spec(space, args.domain)
    potential = parse_potential_spec(space, args.potential)
    spec = assemble_generator(space, domain, potential)
    k = min(args.k, spec.n_modes)
    if args.out is not None:
        dump_spectrum(spec, args.out, k=k)
    _print_json({
        'space': space.name,
        'domain_size': len(domain),
        'eigenvalues': spec.eigenvalues[:k],
    })
    return EXIT_OK

def workflow_heat(args):
    space = parse_space_spec(args.space)
    spec = assemble_generator(space)
    rows = []
    for t in args.t:
        for x, y in args.pairs:
            rows.append({'t': t, 'x': x, 'y': y,
                         'p': heat_kernel(spec, t, x, y)})
    _print_json(rows)
    return EXIT_OK

def workflow_hitting(args):
    space = parse_space_spec(args.space)
    target = _vertex_list(args.target)
    o = space.check_vertex(args.start)
    if args.deadline is None:
        exact = float(exact_hitting_prob(space, target)[o])
    else:
        exact = exact_hitting_prob_by_time(space, target, o, args.deadline)
    result = {'space': space.name, 'start': o, 'target': target,
              'deadline': args.deadline, 'exact': exact}
    if args.paths > 0:
        cfg = walk_config(args.seed, args.paths)
        est = hitting_mc(space, target, o, args.deadline, cfg,
                         workers=args.workers)
        result['monte_carlo'] = est.to_JSON_object()
        result['agrees'] = est.agrees_with(exact)
    _print_json(result)
    return EXIT_OK

def workflow_exit_time(args):
    space = parse_space_spec(args.space)
    domain = parse_domain_spec(space, args.domain)
    o = space.check_vertex(args.start)
    mean = float(exact_mean_exit(space, domain)[o])
    result = {
        'space': space.name,
        'start': o,
        'mean': mean,
        'median': median_exit_time(space, domain, o),
    }
    if args.paths > 0:
        cfg = walk_config(args.seed, args.paths)
        est = exit_time_mc(space, domain, o, cfg, workers=args.workers)
        result['monte_carlo'] = est.to_JSON_object()
        result['agrees'] = est.agrees_with(mean)
    _print_json(result)
    return EXIT_OK

def workflow_norms(args):
    f = _read_values(args.values)
    mu = np.ones(f.size) if args.measure is None else _read_values(args.measure)
    if mu.size != f.size:
        raise NormError('measure has {} values, function has {}'.format(
            mu.size, f.size))
    support = np.arange(f.size)
    q = 'inf' if args.q == 'inf' else 1
    _print_json({
        'p': args.p,
        'q': q,
        'norm': lorentz_norm(f, mu, support, args.p, q),
        'rearranged': rearrange(f, mu, support).to_JSON_object(),
    })
    return EXIT_OK

def workflow_verify(args):
    cfg = load_config(args.config)
    if cfg.explicit is not None and args.mode != cfg.suite:
        validate_explicit(args.mode, cfg.explicit)
    cfg = cfg._replace(suite=args.mode)
    if args.seed is not None:
        cfg = cfg._replace(seed=args.seed)
    if args.workers is not None:
        cfg = cfg._replace(workers=args.workers)
    out = args.out or cfg.output
    if out is None:
        raise ConfigError.missing_key('output')
    result = run_suite(cfg)
    write_artifacts(cfg.suite, result, out)
    for digest in result.failures:
        print('FAIL {} {}'.format(cfg.suite, digest), file=sys.stderr)
    return exit_status(result)

def workflow_plot(args):
    data = json.loads(Path(args.series).read_text(encoding='utf-8'))
    plot(data, args.out)
    return EXIT_OK


###############################################################################
# Arguments
###############################################################################

def _add_space(parser):
    parser.add_argument('--space', required=True,
        help='path:N, lattice:DIM:EXTENT[:periodic], gasket:LEVEL '
             'or a JSON space file')

def _add_walk(parser):
    parser.add_argument('--paths', type=int, default=0,
        help='Monte Carlo paths (0 skips the simulation)')
    parser.add_argument('--seed', type=int, default=0, help='random seed')
    parser.add_argument('--workers', type=int, default=1,
        help='worker threads')

def parse_args(argv):
    parser = ArgumentParser(prog='dirichlet-lab',
        description='Dirichlet heat kernel and Schrodinger inequality lab')
    parser.add_argument('-v', '--verbose', action='store_true',
        help='debug logging')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p = sub.add_parser('build-space', help='print a space as JSON')
    _add_space(p)
    p.add_argument('--out', help='output file')
    p.set_defaults(workflow=workflow_build_space)

    p = sub.add_parser('eigs', help='Dirichlet spectrum on a domain')
    _add_space(p)
    p.add_argument('--domain', default='all',
        help='all, ball:X:R, box:L:U or vertex ids')
    p.add_argument('--potential', default='zero',
        help='zero, const:V, well:X:R:DEPTH or a JSON list')
    p.add_argument('-k', type=int, default=10, help='number of modes')
    p.add_argument('--out', help='directory for the spectrum files')
    p.set_defaults(workflow=workflow_eigs)

    p = sub.add_parser('heat', help='heat kernel values')
    _add_space(p)
    p.add_argument('--t', type=float, nargs='+', required=True,
        help='times')
    p.add_argument('--pairs', type=_pair, nargs='+', required=True,
        help='vertex pairs x:y')
    p.set_defaults(workflow=workflow_heat)

    p = sub.add_parser('hitting', help='hitting probability')
    _add_space(p)
    p.add_argument('--target', required=True, help='vertex ids')
    p.add_argument('--start', type=int, required=True, help='start vertex')
    p.add_argument('--deadline', type=float, help='time horizon')
    _add_walk(p)
    p.set_defaults(workflow=workflow_hitting)

    p = sub.add_parser('exit-time', help='exit time from a domain')
    _add_space(p)
    p.add_argument('--domain', required=True,
        help='ball:X:R, box:L:U or vertex ids')
    p.add_argument('--start', type=int, required=True, help='start vertex')
    _add_walk(p)
    p.set_defaults(workflow=workflow_exit_time)

    p = sub.add_parser('norms', help='Lorentz norms')
    p.add_argument('--values', required=True,
        help='JSON file or comma-separated values')
    p.add_argument('--measure', help='JSON file or comma-separated values')
    p.add_argument('--p', type=float, required=True, help='exponent p')
    p.add_argument('--q', choices=('1', 'inf'), default='1',
        help='second exponent')
    p.set_defaults(workflow=workflow_norms)

    p = sub.add_parser('verify', help='run an inequality suite')
    p.add_argument('mode', choices=SUITES, help='suite to run')
    p.add_argument('--config', required=True, help='JSON or YAML config')
    p.add_argument('--out', help='artifact directory')
    p.add_argument('--seed', type=int, help='override the config seed')
    p.add_argument('--workers', type=int, help='override the pool size')
    p.set_defaults(workflow=workflow_verify)

    p = sub.add_parser('plot', help='render a series file as SVG')
    p.add_argument('--series', required=True, help='JSON series file')
    p.add_argument('--out', required=True, help='SVG file')
    p.set_defaults(workflow=workflow_plot)

    return parser.parse_args(argv)


###############################################################################
# Entry Point
###############################################################################

def main(argv=None):
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.workflow(args)
    except (ConfigError, SpaceError, PlotError, NormError) as e:
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_CONFIG
    except EnvironmentError as e:
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
