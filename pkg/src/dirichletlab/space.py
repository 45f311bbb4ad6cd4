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
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve

from .data_structs import json_number

###############################################################################
# Constants
###############################################################################

logger = logging.getLogger(__name__)

MAX_GASKET_LEVEL = 10
MAX_LATTICE_VERTICES = 10 ** 5

LOG3_LOG2 = math.log(3.0) / math.log(2.0)
LOG5_LOG2 = math.log(5.0) / math.log(2.0)

# smallest radius used in volume fits, in edge lengths
MIN_FIT_EDGES = 4

###############################################################################
# Errors and Exceptions
###############################################################################

class SpaceError(Exception):
    @classmethod
    def too_large(cls, what, size, limit):
        return cls('{} {} exceeds the guard of {}'.format(what, size, limit))

    @classmethod
    def invalid_param(cls, name, value):
        return cls('{!r} is not a valid value for {!r}'.format(value, name))

    @classmethod
    def not_connected(cls, n_components):
        return cls('graph is not connected ({} components)'.format(
            n_components))

    @classmethod
    def asymmetric(cls):
        return cls('conductances are not symmetric')

    @classmethod
    def self_loop(cls, x):
        return cls('vertex {} has a self-loop'.format(x))

    @classmethod
    def bad_measure(cls):
        return cls('vertex measure must be positive and finite')

    @classmethod
    def unknown_vertex(cls, x, n):
        return cls('vertex {!r} is not in 0..{}'.format(x, n - 1))

    @classmethod
    def empty_domain(cls):
        return cls('domain must not be empty')

    @classmethod
    def empty_ball(cls, x, r):
        return cls('ball B({}, {}) has no vertices'.format(x, r))

    @classmethod
    def no_interior(cls, x, r):
        return cls('ball B({}, {}) has fewer than 2 interior vertices'.format(
            x, r))


class FitError(Exception):
    @classmethod
    def degenerate(cls, n_radii):
        return cls('need 3 radii with distinct unsaturated volumes, got {}'
                   .format(n_radii))


###############################################################################
# Scaling Law
###############################################################################

ScalingLaw = namedtuple('ScalingLaw', (
    'alpha1',   # float > 0, lower volume exponent
    'alpha2',   # float >= alpha1, upper volume exponent
    'beta'      # float > 1, walk exponent
))

def _scaling_F(self, r):
    return r ** self.beta

def _scaling_R(self, t):
    return t ** (1.0 / self.beta)

ScalingLaw.F = _scaling_F
ScalingLaw.R = _scaling_R
ScalingLaw.to_JSON_object = lambda self: {
    'alpha1': self.alpha1, 'alpha2': self.alpha2, 'beta': self.beta}

def scaling_law(alpha1, alpha2, beta):
    alpha1 = float(alpha1)
    alpha2 = float(alpha2)
    beta = float(beta)
    if not alpha1 > 0.0:
        raise SpaceError.invalid_param('alpha1', alpha1)
    if not alpha2 >= alpha1:
        raise SpaceError.invalid_param('alpha2', alpha2)
    if not beta > 1.0:
        raise SpaceError.invalid_param('beta', beta)
    return ScalingLaw(alpha1, alpha2, beta)


###############################################################################
# Domains
###############################################################################

class DomainMask(object):
    __slots__ = ('vertices', 'n_total')

    # absorbing (Dirichlet) boundary: functions vanish off the subset
    BOUNDARY = 'dirichlet'

    def __init__(self, vertices, n_total):
        vertices = np.unique(np.asarray(vertices, dtype=np.int64))
        if vertices.size == 0:
            raise SpaceError.empty_domain()
        if vertices[0] < 0 or vertices[-1] >= n_total:
            bad = vertices[0] if vertices[0] < 0 else vertices[-1]
            raise SpaceError.unknown_vertex(int(bad), n_total)
        vertices.setflags(write=False)
        self.vertices = vertices
        self.n_total = int(n_total)

    @classmethod
    def whole(cls, space):
        return cls(np.arange(space.n), space.n)

    @classmethod
    def of(cls, space, vertices):
        return cls(vertices, space.n)

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        return cls(np.flatnonzero(mask), mask.size)

    @property
    def mask(self):
        m = np.zeros(self.n_total, dtype=bool)
        m[self.vertices] = True
        return m

    @property
    def is_whole(self):
        return self.vertices.size == self.n_total

    def complement(self):
        return DomainMask.from_mask(~self.mask) #!

    def minus(self, vertices):
        m = self.mask
        m[np.asarray(vertices, dtype=np.int64)] = False
        return DomainMask.from_mask(m) #!

    def intersect(self, vertices):
        m = np.zeros(self.n_total, dtype=bool)
        m[np.asarray(vertices, dtype=np.int64)] = True
        return DomainMask.from_mask(m & self.mask) #!

    def contains(self, x):
        i = np.searchsorted(self.vertices, x)
        return i < self.vertices.size and self.vertices[i] == x

    def issubset(self, other):
        return bool(np.all(other.mask[self.vertices]))

    def to_JSON_object(self):
        return {
            'vertices': [int(v) for v in self.vertices],
            'boundary': self.BOUNDARY,
        }

    def __len__(self):
        return self.vertices.size

    def __iter__(self):
        return iter(self.vertices.tolist())

    def __eq__(self, other):
        if not isinstance(other, DomainMask):
            return False
        return (self.n_total == other.n_total
                and np.array_equal(self.vertices, other.vertices))

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self.n_total, self.vertices.tobytes()))

    def __repr__(self):
        return '{}({} of {} vertices)'.format(
            type(self).__name__, self.vertices.size, self.n_total)


###############################################################################
# Graph Space
###############################################################################

class GraphSpace(object):
    __slots__ = ('name', 'measure', 'conductance', 'lengths', 'scaling',
                 'coords', 'degree')

    JSON_SCHEMA = {
        'name': str,
        'vertices': int,
        'edges': list,
        'measure': list,
        'scaling': dict,
    }

    def __init__(self, name, measure, conductance, lengths, scaling,
                 coords=None):
        # conductance and lengths: symmetric CSR matrices, same sparsity
        self.name = name
        self.measure = np.array(measure, dtype=float)
        self.conductance = conductance.tocsr()
        self.lengths = lengths.tocsr()
        self.scaling = scaling
        self.coords = None if coords is None else np.array(coords)
        self.degree = np.asarray(self.conductance.sum(axis=1)).ravel()
        self._check()
        for a in (self.measure, self.degree):
            a.setflags(write=False)
        if self.coords is not None:
            self.coords.setflags(write=False)

    @classmethod
    def from_edges(cls, name, n, edges, measure=None, scaling=None,
                   coords=None):
        # edges: iterable of (i, j, conductance) or (i, j, conductance, length)
        rows, cols, cs, ls = [], [], [], []
        for edge in edges:
            i, j, c = int(edge[0]), int(edge[1]), float(edge[2])
            length = float(edge[3]) if len(edge) > 3 else 1.0
            if i == j:
                raise SpaceError.self_loop(i)
            for k in (i, j):
                if k < 0 or k >= n:
                    raise SpaceError.unknown_vertex(k, n)
            if not (c > 0.0 and length > 0.0):
                raise SpaceError.invalid_param('edge', tuple(edge))
            rows.append(i)
            cols.append(j)
            cs.append(c)
            ls.append(length)
        if measure is None:
            measure = np.ones(n)
        if scaling is None:
            scaling = ScalingLaw(1.0, 1.0, 2.0)
        C, L = _symmetric_matrices(n, rows, cols, cs, ls)
        return cls(name, measure, C, L, scaling, coords=coords)

    @classmethod
    def from_JSON_object(cls, obj):
        for key, expected in cls.JSON_SCHEMA.items():
            if key not in obj:
                raise SpaceError.invalid_param(key, None)
            if not isinstance(obj[key], expected):
                raise SpaceError.invalid_param(key, obj[key])
        s = obj['scaling']
        scaling = scaling_law(s['alpha1'], s['alpha2'], s['beta'])
        return cls.from_edges(obj['name'], obj['vertices'], obj['edges'],
                              measure=obj['measure'], scaling=scaling,
                              coords=obj.get('coords'))

    @property
    def n(self):
        return self.measure.size

    @property
    def n_edges(self):
        return self.conductance.nnz // 2

    @property
    def total_measure(self):
        return float(self.measure.sum())

    @property
    def rates(self):
        # jump rate q(x) of the continuous-time walk
        return self.degree / self.measure

    @property
    def min_edge_length(self):
        return float(self.lengths.data.min())

    def edges(self):
        # sorted by (i, j) with i < j
        upper = sparse.triu(self.conductance, k=1).tocoo()
        lengths = sparse.triu(self.lengths, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        for k in order:
            i, j = int(upper.row[k]), int(upper.col[k])
            yield i, j, float(upper.data[k]), float(lengths.data[k])

    def check_vertex(self, x):
        if not (0 <= int(x) < self.n):
            raise SpaceError.unknown_vertex(x, self.n)
        return int(x)

    def distances(self, x, limit=None):
        # shortest-path distances from `x` (int or array of ints)
        limit = np.inf if limit is None else float(limit)
        return csgraph.dijkstra(self.lengths, directed=False, indices=x,
                                limit=limit)

    def ball(self, x, r):
        # open ball {y : d(x, y) < r}
        if r <= 0:
            return np.zeros(0, dtype=np.int64)
        d = self.distances(self.check_vertex(x), limit=r)
        return np.flatnonzero(d < r)

    def closed_ball(self, x, r):
        if r < 0:
            return np.zeros(0, dtype=np.int64)
        d = self.distances(self.check_vertex(x), limit=r)
        return np.flatnonzero(d <= r)

    def eccentricity(self, x):
        return float(self.distances(self.check_vertex(x)).max())

    def boundary_vertices(self):
        # vertices with fewer neighbors than the bulk (lattice faces, corners)
        counts = np.diff(self.conductance.indptr)
        return np.flatnonzero(counts < counts.max())

    def laplacian(self, f):
        # (Delta f)(x) = mu(x)^-1 sum_y c(x, y) (f(y) - f(x))
        f = np.asarray(f, dtype=float)
        return (self.conductance.dot(f) - self.degree * f) / self.measure

    def energy(self, f, g=None):
        # E(f, g) = 1/2 sum c(x, y) (f(x) - f(y)) (g(x) - g(y))
        g = f if g is None else g
        return float(np.dot(f, self.measure * -self.laplacian(g)))

    def to_JSON_object(self):
        return {
            'name': self.name,
            'vertices': self.n,
            'edges': [[i, j, json_number(c), json_number(l)]
                      for i, j, c, l in self.edges()],
            'measure': [json_number(m) for m in self.measure],
            'scaling': self.scaling.to_JSON_object(),
            'coords': (None if self.coords is None
                       else self.coords.tolist()),
        }

    def _check(self):
        C = self.conductance
        if C.shape != (self.n, self.n):
            raise SpaceError.invalid_param('conductance', C.shape)
        if (C != C.T).nnz > 0:
            raise SpaceError.asymmetric()
        diag = C.diagonal()
        if np.any(diag != 0):
            raise SpaceError.self_loop(int(np.flatnonzero(diag)[0]))
        if self.n == 0:
            raise SpaceError.empty_domain()
        if not (np.all(np.isfinite(self.measure)) and np.all(self.measure > 0)):
            raise SpaceError.bad_measure()
        n_comp, _labels = csgraph.connected_components(C, directed=False)
        if n_comp != 1:
            raise SpaceError.not_connected(n_comp)

    def __repr__(self):
        return '{}({!r}, n={}, edges={})'.format(
            type(self).__name__, self.name, self.n, self.n_edges)


###############################################################################
# Helper Functions
###############################################################################

def _symmetric_matrices(n, rows, cols, cs, ls):
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    r = np.concatenate((rows, cols))
    c = np.concatenate((cols, rows))
    C = sparse.coo_matrix((np.concatenate((cs, cs)), (r, c)), shape=(n, n))
    L = sparse.coo_matrix((np.concatenate((ls, ls)), (r, c)), shape=(n, n))
    return C.tocsr(), L.tocsr()

def _as_vertices(vertices):
    return np.unique(np.asarray(vertices, dtype=np.int64).ravel())


###############################################################################
# Builders
###############################################################################

def build_sierpinski_gasket(level):
    level = int(level)
    if level < 0:
        raise SpaceError.invalid_param('level', level)
    if level > MAX_GASKET_LEVEL:
        raise SpaceError.too_large('gasket level', level, MAX_GASKET_LEVEL)
    # smallest cells in integer coordinates (i, j) of the triangular basis
    cells = [(0, 0)]
    size = 2 ** level
    while size > 1:
        half = size // 2
        cells = [(a + da, b + db) for (a, b) in cells
                 for (da, db) in ((0, 0), (half, 0), (0, half))]
        size = half
    index = {}
    coords = []
    incident = []
    rows, cols = [], []
    for (a, b) in cells:
        corners = []
        for point in ((a, b), (a + 1, b), (a, b + 1)):
            k = index.get(point)
            if k is None:
                k = len(coords)
                index[point] = k
                coords.append(point)
                incident.append(0)
            incident[k] += 1
            corners.append(k)
        u, v, w = corners
        rows.extend((u, v, u))
        cols.extend((v, w, w))
    n = len(coords)
    m = len(rows)
    cs = np.full(m, (5.0 / 3.0) ** level)
    ls = np.full(m, 2.0 ** -level)
    measure = np.asarray(incident, dtype=float) * 3.0 ** -level
    C, L = _symmetric_matrices(n, rows, cols, cs, ls)
    scaling = ScalingLaw(LOG3_LOG2, LOG3_LOG2, LOG5_LOG2)
    name = 'gasket-{}'.format(level)
    logger.debug('built %s: %d vertices, %d edges', name, n, m)
    return GraphSpace(name, measure, C, L, scaling, coords=coords)

def build_lattice(dim, extent, periodic=False):
    dim = int(dim)
    extent = int(extent)
    if dim not in (1, 2, 3):
        raise SpaceError.invalid_param('dim', dim)
    if extent < 3:
        raise SpaceError.invalid_param('extent', extent)
    n = extent ** dim
    if n > MAX_LATTICE_VERTICES:
        raise SpaceError.too_large('lattice size', n, MAX_LATTICE_VERTICES)
    shape = (extent,) * dim
    coords = np.indices(shape).reshape(dim, -1).T
    rows, cols = [], []
    for axis in range(dim):
        if periodic:
            src = coords
        else:
            src = coords[coords[:, axis] < extent - 1]
        dst = src.copy()
        dst[:, axis] = (dst[:, axis] + 1) % extent
        rows.append(np.ravel_multi_index(src.T, shape))
        cols.append(np.ravel_multi_index(dst.T, shape))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    m = rows.size
    C, L = _symmetric_matrices(n, rows, cols, np.ones(m), np.ones(m))
    scaling = ScalingLaw(float(dim), float(dim), 2.0)
    name = '{}lattice-{}d-{}'.format('periodic-' if periodic else '',
                                     dim, extent)
    logger.debug('built %s: %d vertices, %d edges', name, n, m)
    return GraphSpace(name, np.ones(n), C, L, scaling, coords=coords)

def build_path(n_vertices, conductance=1.0):
    # path {0..n-1}; conductance 1/2 gives unit jump rates in the interior
    n_vertices = int(n_vertices)
    if n_vertices < 2:
        raise SpaceError.invalid_param('n_vertices', n_vertices)
    if n_vertices > MAX_LATTICE_VERTICES:
        raise SpaceError.too_large('path size', n_vertices,
                                   MAX_LATTICE_VERTICES)
    edges = [(i, i + 1, conductance) for i in range(n_vertices - 1)]
    coords = np.arange(n_vertices).reshape(-1, 1)
    return GraphSpace.from_edges('path-{}'.format(n_vertices), n_vertices,
                                 edges, coords=coords)


###############################################################################
# Balls, Volumes and Domains
###############################################################################

def volume(space, x, r):
    if r <= 0:
        return 0.0
    d = space.distances(space.check_vertex(x), limit=r)
    return float(space.measure[d < r].sum())

def ball_domain(space, x, r):
    vertices = space.ball(x, r)
    if vertices.size == 0:
        raise SpaceError.empty_ball(x, r)
    return DomainMask(vertices, space.n)

def box_domain(space, lower, upper):
    # vertices whose integer coordinates lie in [lower, upper] on every axis
    if space.coords is None:
        raise SpaceError.invalid_param('coords', None)
    lower = np.asarray(lower)
    upper = np.asarray(upper)
    inside = np.all((space.coords >= lower) & (space.coords <= upper), axis=1)
    return DomainMask.from_mask(inside)

def gasket_cell(space, level, depth):
    # interior of the level-`depth` cell at the origin corner
    size = 2 ** (level - depth)
    if size < 2:
        raise SpaceError.invalid_param('depth', depth)
    i, j = space.coords[:, 0], space.coords[:, 1]
    inside = (i >= 0) & (j >= 0) & (i + j <= size)
    corners = (((i == 0) & (j == 0)) | ((i == size) & (j == 0))
               | ((i == 0) & (j == size)))
    return DomainMask.from_mask(inside & ~corners)

def boundary_distance(space):
    # distance from every vertex to the nearest boundary vertex
    bnd = space.boundary_vertices()
    if bnd.size == 0:
        return np.full(space.n, np.inf)
    return csgraph.dijkstra(space.lengths, directed=False, indices=bnd,
                            min_only=True)

def central_vertex(space):
    # farthest from the boundary; lowest index on ties
    return int(np.argmax(boundary_distance(space)))

def is_grid(space):
    # lattices and paths: integer coordinates filling a full box
    if space.coords is None:
        return False
    extent = space.coords.max(axis=0) + 1
    return int(np.prod(extent)) == space.n

def domain_components(space, domain):
    idx = domain.vertices
    sub = space.conductance[idx][:, idx]
    n_comp, labels = csgraph.connected_components(sub, directed=False)
    return [DomainMask(idx[labels == k], space.n) for k in range(n_comp)]

def dirichlet_solve(space, domain, rhs=None, boundary=None):
    """
    Solve (-Delta) h = rhs on the domain with h = boundary off the domain.
    Returns h on the whole vertex set.
    """
    idx = domain.vertices
    mask = domain.mask
    outside = np.flatnonzero(~mask)
    h = np.zeros(space.n)
    if boundary is not None:
        h[outside] = np.asarray(boundary, dtype=float)[outside]
    A = space.conductance[idx][:, idx]
    A = sparse.diags(space.degree[idx]) - A
    b = np.zeros(idx.size)
    if rhs is not None:
        b += space.measure[idx] * np.asarray(rhs, dtype=float)[idx]
    if boundary is not None and outside.size > 0:
        b += space.conductance[idx][:, outside].dot(h[outside])
    logger.debug('sparse Dirichlet solve on %d vertices', idx.size)
    h[idx] = spsolve(A.tocsc(), b)
    return h


###############################################################################
# Volume Exponents
###############################################################################

def fit_volume_exponents(space, centers=None, n_centers=16, seed=0,
                         max_radius=None):
    if centers is None:
        rng = np.random.default_rng(seed)
        k = min(n_centers, space.n)
        centers = np.sort(rng.choice(space.n, size=k, replace=False))
    h = space.min_edge_length
    total = space.total_measure
    slopes = []
    best = 0
    for x in centers:
        d = space.distances(space.check_vertex(x))
        limit = d.max() if max_radius is None else max_radius
        radii = []
        vols = []
        r = MIN_FIT_EDGES * h
        while r <= limit:
            v = float(space.measure[d < r].sum())
            if v >= 0.5 * total:
                break
            if not vols or v > vols[-1]:
                radii.append(r)
                vols.append(v)
            r *= 2.0
        best = max(best, len(radii))
        if len(radii) < 3:
            continue
        slope = np.polyfit(np.log(radii), np.log(vols), 1)[0]
        slopes.append(float(slope))
    if not slopes:
        raise FitError.degenerate(best)
    logger.debug('volume exponents from %d centers: %s', len(slopes), slopes)
    return min(slopes), max(slopes)
