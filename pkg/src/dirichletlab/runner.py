# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

import csv
import io
import json
import logging
import os
from pathlib import Path
import shutil
import tempfile

from .config import build_space, resolve_instance
from .data_structs import json_number
from .inequalities import (
    DEFAULT_EPSILONS, DEFAULT_KAPPAS, STABILITY_BAND, dirichlet_eigenpairs,
    eigenvalue_suite, exit_suite, hitting_far_suite, hitting_suite,
    keller_instances, keller_suite, lieb_suite, liouville_suite,
    local_fk_suite, moment_suite, random_centers, random_far_instances,
    random_hitting_instances, random_potentials, recurrent_suite,
    schrodinger_instances, stability_sweep, wavelength_suite,
)
from .plotting import PlotError, plot, series
from .space import central_vertex

###############################################################################
# Constants
###############################################################################

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

CSV_FIELDS = ('digest', 'tag', 'verdict', 'lhs', 'rhs', 'error')

DEFAULT_SIZES = (16, 32, 64)
CONTROL_SIZES = (16, 24, 32)
DEFAULT_TIMES = (0.5, 1.0, 2.0, 4.0)
DEFAULT_DEPTHS = (0.01, 0.05, 0.1, 0.25, 0.5, 1.0)

# space kind -> spec key that sweeps.sizes sets
SIZE_KEYS = {'lattice': 'extent', 'path': 'n', 'gasket': 'level'}

###############################################################################
# Helper Functions
###############################################################################

def dyadic_radii(space, smallest=2, fraction=0.5):
    # h * 2^k from `smallest` edges up to a fraction of the eccentricity
    h = space.min_edge_length
    limit = fraction * space.eccentricity(central_vertex(space))
    radii = []
    r = smallest * h
    while r <= limit:
        radii.append(r)
        r *= 2.0
    return radii or [smallest * h]

def _radii(cfg, space):
    return cfg.sweeps.get('radii') or dyadic_radii(space)

def _format_number(value):
    value = json_number(value)
    if isinstance(value, float):
        return '{:.17g}'.format(value)
    return '' if value is None else str(value)


###############################################################################
# Suite Dispatch
###############################################################################

def _band(cfg):
    # a configured band overrides the suite's own
    return {} if cfg.band is None else {'band': cfg.band}

def _gen_hitting(cfg, space):
    return random_hitting_instances(space, cfg.instances, cfg.seed)

def _gen_far(cfg, space):
    return random_far_instances(space, cfg.instances, cfg.seed)

def _gen_schrodinger(cfg, space):
    return schrodinger_instances(space, cfg.instances, cfg.seed)

def _gen_keller(cfg, space):
    depths = cfg.sweeps.get('depths') or DEFAULT_DEPTHS
    return keller_instances(space, cfg.instances, cfg.seed, depths=depths)

def _gen_liouville(cfg, space):
    radii = _radii(cfg, space)
    h = space.min_edge_length
    return [{'o': c['center'], 'target_radius': h, 'radii': radii}
            for c in random_centers(space, cfg.instances, cfg.seed)]

def _gen_wavelength(cfg, space):
    return dirichlet_eigenpairs(space, cfg.instances, cfg.seed)

def _gen_recurrent(cfg, space):
    # the recurrent box sequence, and a 3D run that must stay below 1
    sizes = cfg.sweeps.get('sizes') or DEFAULT_SIZES
    dim = cfg.space.get('dim', 2)
    return [
        {'dim': dim, 'sizes': list(sizes)},
        {'dim': 3, 'sizes': list(CONTROL_SIZES), 'control': True},
    ]

def _gen_moment(cfg, space):
    return random_potentials(space, cfg.instances, cfg.seed)

def _gen_centers(cfg, space):
    return random_centers(space, cfg.instances, cfg.seed)


def _run_hitting(cfg, space, insts):
    return hitting_suite(space, insts, eta=cfg.eta, slack=cfg.slack,
                         workers=cfg.workers)

def _run_far(cfg, space, insts):
    return hitting_far_suite(space, insts, workers=cfg.workers, **_band(cfg))

def _run_lieb(cfg, space, insts):
    return lieb_suite(space, insts, epsilon=cfg.epsilon,
                      kappas=cfg.sweeps.get('kappa') or DEFAULT_KAPPAS,
                      epsilons=cfg.sweeps.get('epsilon') or DEFAULT_EPSILONS,
                      eta=cfg.eta, p=cfg.p, workers=cfg.workers)

def _run_keller(cfg, space, insts):
    return keller_suite(space, insts, p=cfg.p or 2.0, workers=cfg.workers)

def _run_liouville(cfg, space, insts):
    return liouville_suite(space, insts, p=cfg.p, kappa=cfg.kappa or 1.0,
                           workers=cfg.workers, **_band(cfg))

def _run_fk(cfg, space, insts):
    return local_fk_suite(space, insts, slack=cfg.slack, workers=cfg.workers)

def _run_wavelength(cfg, space, insts):
    return wavelength_suite(space, insts, workers=cfg.workers, **_band(cfg))

def _run_recurrent(cfg, space, insts):
    return recurrent_suite(space, insts, threshold=cfg.threshold,
                           workers=cfg.workers)

def _run_moment(cfg, space, insts):
    times = cfg.sweeps.get('times') or DEFAULT_TIMES
    return moment_suite(space, insts, cfg.p or 2.0, times,
                        workers=cfg.workers, **_band(cfg))

def _run_exit(cfg, space, insts):
    return exit_suite(space, insts, _radii(cfg, space), workers=cfg.workers,
                      **_band(cfg))

def _run_eigenvalue(cfg, space, insts):
    return eigenvalue_suite(space, insts, _radii(cfg, space),
                            workers=cfg.workers, **_band(cfg))


# suite -> (instance generator, suite evaluator)
SUITES = {
    'hitting': (_gen_hitting, _run_hitting),
    'hitting-far': (_gen_far, _run_far),
    'lieb': (_gen_schrodinger, _run_lieb),
    'keller': (_gen_keller, _run_keller),
    'liouville': (_gen_liouville, _run_liouville),
    'fk-local': (_gen_schrodinger, _run_fk),
    'wavelength': (_gen_wavelength, _run_wavelength),
    'recurrent': (_gen_recurrent, _run_recurrent),
    'moment': (_gen_moment, _run_moment),
    'exit': (_gen_centers, _run_exit),
    'eigenvalue': (_gen_centers, _run_eigenvalue),
}

# suite -> summary constant compared across sweeps.sizes
SIZE_SWEEPS = {
    'keller': 'c_p',
    'fk-local': 'c',
}

def build_instances(cfg, space):
    if cfg.explicit is not None:
        return [resolve_instance(space, obj) for obj in cfg.explicit]
    generate, _run = SUITES[cfg.suite]
    return generate(cfg, space)

def run_size_sweep(cfg):
    """
    Run the suite once per space size in sweeps.sizes, each with instances
    generated from the same seed, and check that the suite constant stays
    within the stability band.
    """
    key = SIZE_SWEEPS[cfg.suite]
    size_key = SIZE_KEYS[cfg.space['kind']]
    _generate, run = SUITES[cfg.suite]
    results = {}
    for n in cfg.sweeps['sizes']:
        spec = dict(cfg.space)
        spec[size_key] = n
        space = build_space(spec)
        instances = build_instances(cfg, space)
        logger.info('running %s on %s with %d instances', cfg.suite,
                    space.name, len(instances))
        results[n] = run(cfg, space, instances)
    band = STABILITY_BAND if cfg.band is None else cfg.band
    return stability_sweep(cfg.suite, results, key, band=band)

def run_suite(cfg, space=None):
    if cfg.suite in SIZE_SWEEPS and cfg.sweeps.get('sizes'):
        if cfg.explicit is None:
            return run_size_sweep(cfg)
        logger.warning('sizes sweep ignored: explicit instances fix the space')
    if space is None:
        space = build_space(cfg.space)
    instances = build_instances(cfg, space)
    logger.info('running %s on %s with %d instances', cfg.suite, space.name,
                len(instances))
    _generate, run = SUITES[cfg.suite]
    return run(cfg, space, instances)


###############################################################################
# Plot Series
###############################################################################

def _rows_series(result, title, xkey, ykey, xlabel, ylabel, log=True):
    lines = []
    for report in result.instances:
        rows = report.details.get('rows') if report.error is None else None
        if rows:
            lines.append((report.digest, [row[xkey] for row in rows],
                          [row[ykey] for row in rows]))
    return series(title, xlabel, ylabel, lines, log=log)

def _instance_series(result, title, ylabel):
    ok = [r for r in result.instances if r.error is None and r.lhs is not None]
    return series(title, 'instance', ylabel,
                  [('lhs', range(len(ok)), [r.lhs for r in ok]),
                   ('rhs', range(len(ok)), [r.rhs for r in ok])])

def suite_series(suite, result):
    # name -> series mapping for every plot of a suite
    if suite == 'lieb':
        return {'coverage': _rows_series(result, 'coverage vs kappa',
            'kappa', 'coverage', 'kappa', 'coverage', log=False)}
    if suite == 'liouville':
        return {'profile': _rows_series(result, 'M(r) vs r', 'radius', 'M',
                                        'r', 'M(r)')}
    if suite in ('eigenvalue', 'exit'):
        label = 'lambda_B F(r)' if suite == 'eigenvalue' else 'E tau / F(r)'
        return {'scaling': _rows_series(result, label + ' vs r', 'radius',
                                        'scaled', 'r', label)}
    if suite == 'moment':
        return {'moments': _rows_series(result, 'sup E exp(int V) vs t',
                                        't', 'lhs', 't', 'moment')}
    return {'instances': _instance_series(result, suite, 'value')}


###############################################################################
# Artifacts
###############################################################################

def summary_csv(result):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(CSV_FIELDS)
    for report in [result.summary] + list(result.instances):
        writer.writerow((
            report.digest,
            report.tag,
            'pass' if report.verdict else 'fail',
            _format_number(report.lhs),
            _format_number(report.rhs),
            report.error or '',
        ))
    return buf.getvalue()

def _dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + '\n'

def write_artifacts(suite, result, out_dir):
    """
    Write the artifact tree to a sibling temporary directory and move it
    into place; on failure nothing is left at `out_dir`.
    """
    out_dir = Path(out_dir).resolve()
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix='.{}-'.format(out_dir.name),
                                dir=str(out_dir.parent)))
    try:
        inst_dir = tmp / 'instances'
        inst_dir.mkdir()
        for report in result.instances:
            path = inst_dir / '{}.json'.format(report.digest)
            path.write_text(_dump_json(report.to_JSON_object()),
                            encoding='utf-8')
        summary = result.summary.to_JSON_object()
        summary['failures'] = result.failures
        (tmp / 'summary.json').write_text(_dump_json(summary),
                                          encoding='utf-8')
        (tmp / 'summary.csv').write_text(summary_csv(result),
                                         encoding='utf-8')
        for name, data in sorted(suite_series(suite, result).items()):
            try:
                plot(data, tmp / '{}.svg'.format(name))
            except PlotError as e:
                logger.warning('plot %s skipped: %s', name, e)
        if out_dir.exists():
            shutil.rmtree(str(out_dir))
        os.replace(str(tmp), str(out_dir))
    except Exception:
        shutil.rmtree(str(tmp), ignore_errors=True)
        raise
    logger.info('artifacts written to %s', out_dir)
    return out_dir

def exit_status(result):
    return EXIT_OK if result.verdict else EXIT_FAILED
