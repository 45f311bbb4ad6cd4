# -*- coding: utf-8 -*-

# SPDX-License-Identifier: MIT
# Copyright © 2023 André Santos

###############################################################################
# Imports
###############################################################################

import io
import logging
import math
from pathlib import Path

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt

###############################################################################
# Constants
###############################################################################

logger = logging.getLogger(__name__)

# fixed element ids and no timestamp: identical input, identical bytes
SVG_RC = {
    'svg.hashsalt': 'dirichlet-lab',
    'svg.fonttype': 'none',
}
SVG_METADATA = {'Date': None}

MARKERS = ('o', 's', '^', 'D', 'v', 'x')

###############################################################################
# Errors and Exceptions
###############################################################################

class PlotError(ValueError):
    @classmethod
    def empty(cls):
        return cls('series must contain at least one point')

    @classmethod
    def length_mismatch(cls, label, nx, ny):
        return cls('line {!r} has {} x values and {} y values'.format(
            label, nx, ny))

    @classmethod
    def not_positive(cls, label):
        return cls('line {!r} has non-positive values on a log axis'.format(
            label))


###############################################################################
# Series
###############################################################################

def series(title, xlabel, ylabel, lines, log=False):
    # lines: iterable of (label, xs, ys)
    return {
        'title': title,
        'xlabel': xlabel,
        'ylabel': ylabel,
        'log': bool(log),
        'lines': [{'label': label, 'x': list(xs), 'y': list(ys)}
                  for label, xs, ys in lines],
    }

def _finite_points(line):
    pts = [(float(x), float(y)) for x, y in zip(line['x'], line['y'])
           if x is not None and y is not None
           and math.isfinite(float(x)) and math.isfinite(float(y))]
    return pts

def _check_series(data):
    lines = data.get('lines') or []
    total = 0
    for line in lines:
        label = line.get('label', '')
        if len(line['x']) != len(line['y']):
            raise PlotError.length_mismatch(label, len(line['x']),
                                            len(line['y']))
        pts = _finite_points(line)
        if data.get('log') and any(x <= 0 or y <= 0 for x, y in pts):
            raise PlotError.not_positive(label)
        total += len(pts)
    if total == 0:
        raise PlotError.empty()


###############################################################################
# Rendering
###############################################################################

def plot(data, path=None):
    """
    Render a series mapping as SVG text; also write it to `path` if given.
    Log-log axes when `data['log']` is set, linear otherwise.
    """
    _check_series(data)
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        try:
            for i, line in enumerate(data['lines']):
                pts = _finite_points(line)
                if not pts:
                    continue
                xs, ys = zip(*pts)
                ax.plot(xs, ys, marker=MARKERS[i % len(MARKERS)],
                        linestyle='-' if len(pts) > 1 else 'none',
                        label=line.get('label') or None)
            if data.get('log'):
                ax.set_xscale('log')
                ax.set_yscale('log')
            ax.set_xlabel(data.get('xlabel', ''))
            ax.set_ylabel(data.get('ylabel', ''))
            if data.get('title'):
                ax.set_title(data['title'])
            if any(line.get('label') for line in data['lines']):
                ax.legend(loc='best', fontsize='small')
            buf = io.StringIO()
            fig.savefig(buf, format='svg', metadata=SVG_METADATA)
        finally:
            plt.close(fig)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding='utf-8')
        logger.debug('wrote plot %s', path)
    return text
