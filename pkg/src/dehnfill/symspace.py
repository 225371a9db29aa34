"""Floating-point geometry of the space of unit-determinant SPD matrices.

A group element g acts by congruence P -> g P g^T; the class of g is
represented by g g^T. Distances and geodesics are the usual affine-invariant
spectral formulas, so dist(point_of(I), point_of(diag(e,1,...,1/e))) = 2*sqrt(2)
(log-eigenvalue coordinates of the squared singular values).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky as _cholesky
from scipy.linalg import eigh as _eigh

SYM_TOL = 1e-9
DET_TOL = 1e-6


class GeometryError(ValueError):
    pass


def _normalize_det(mat):
    sign, logdet = np.linalg.slogdet(mat)
    if sign <= 0 or not np.isfinite(logdet):
        raise GeometryError("matrix is not positive definite")
    return mat * math.exp(-logdet / mat.shape[0])


class SPDPoint:
    """Unit-determinant symmetric positive-definite matrix."""

    __slots__ = ("n", "mat")

    def __init__(self, mat, normalize=True):
        m = np.asarray(mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise GeometryError("need a square matrix")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.T)) > SYM_TOL * scale:
            raise GeometryError("matrix is not symmetric")
        m = 0.5 * (m + m.T)
        if normalize:
            m = _normalize_det(m)
        elif abs(np.linalg.slogdet(m)[1]) > DET_TOL:
            raise GeometryError("determinant is not 1")
        self.mat = m
        self.n = m.shape[0]

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n), normalize=False)

    def __repr__(self):
        return f"SPDPoint(n={self.n})"


def point_of(g) -> SPDPoint:
    """Class of a (near-)unimodular matrix: g g^T, det-normalized."""
    if hasattr(g, "rows"):
        m = np.array(g.rows, dtype=float)
    else:
        m = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(m)):
        raise GeometryError("matrix entries overflow float range")
    return SPDPoint(m @ m.T)


def dist(p: SPDPoint, q: SPDPoint) -> float:
    """sqrt(sum log^2 mu_i) over generalized eigenvalues of (P, Q)."""
    mu = _eigh(p.mat, q.mat, eigvals_only=True)
    if np.any(mu <= 0):
        raise GeometryError("nonpositive generalized eigenvalue")
    return float(np.sqrt(np.sum(np.log(mu) ** 2)))


def _halves(mat):
    w, v = np.linalg.eigh(mat)
    if np.any(w <= 0):
        raise GeometryError("nonpositive spectrum")
    sq = np.sqrt(w)
    return (v * sq) @ v.T, (v / sq) @ v.T


def geodesic(p: SPDPoint, q: SPDPoint, t: float) -> SPDPoint:
    """Constant-speed geodesic with geodesic(p,q,0)=p and geodesic(p,q,1)=q."""
    ph, pih = _halves(p.mat)
    inner = pih @ q.mat @ pih
    w, v = np.linalg.eigh(0.5 * (inner + inner.T))
    w = np.clip(w, 1e-300, None)
    mid = (v * np.power(w, t)) @ v.T
    return SPDPoint(ph @ mid @ ph)


@dataclass
class Loop:
    """Closed piecewise-geodesic loop, arc-length parameterized."""

    n: int
    points: list                      # SPDPoint breakpoints, cyclic (no repeat)
    arcs: list = field(default_factory=list)   # cumulative arc positions
    length: float = 0.0
    _segments: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.arcs:
            acc = [0.0]
            pts = self.points
            for a in range(len(pts)):
                b = (a + 1) % len(pts)
                acc.append(acc[-1] + dist(pts[a], pts[b]))
            self.arcs = acc
            self.length = acc[-1]

    def _segment_data(self, idx):
        while len(self._segments) <= idx:
            self._segments.append(None)
        data = self._segments[idx]
        if data is None:
            p = self.points[idx]
            q = self.points[(idx + 1) % len(self.points)]
            ph, pih = _halves(p.mat)
            inner = pih @ q.mat @ pih
            w, v = np.linalg.eigh(0.5 * (inner + inner.T))
            w = np.clip(w, 1e-300, None)
            data = (ph @ v, w)
            self._segments[idx] = data
        return data

    def locate(self, s):
        s = s % self.length if self.length > 0 else 0.0
        idx = bisect_right(self.arcs, s) - 1
        idx = min(max(idx, 0), len(self.points) - 1)
        span = self.arcs[idx + 1] - self.arcs[idx]
        u = (s - self.arcs[idx]) / span if span > 1e-12 else 0.0
        return idx, u

    def at(self, s) -> SPDPoint:
        idx, u = self.locate(s)
        wv, w = self._segment_data(idx)
        return SPDPoint(_power_sandwich(wv, w, u))

    def at_many(self, svals):
        """Stack of (unnormalized-class) matrices alpha(s) for many s."""
        out = np.empty((len(svals), self.n, self.n))
        for t, s in enumerate(svals):
            idx, u = self.locate(s)
            wv, w = self._segment_data(idx)
            out[t] = _power_sandwich(wv, w, u)
        return out


def _power_sandwich(wv, w, u):
    m = (wv * np.power(w, u)) @ wv.T
    return _normalize_det(0.5 * (m + m.T))


def loop_of_word(word, n, samples_per_edge=1):
    """The closed loop through the classes of the prefix products of a null
    word; geodesic edges, arc-length parameterization."""
    from . import words as _words
    from .intmat import GroupElement

    g = GroupElement.identity(n)
    verts = [point_of(g)]
    for letter in word:
        g = g * _words.evaluate([letter], n)
        verts.append(point_of(g))
    if not g.is_identity():
        raise GeometryError("word does not evaluate to the identity")
    verts.pop()  # cyclic: last equals first
    pts = []
    for a in range(len(verts)):
        b = (a + 1) % len(verts)
        pts.append(verts[a])
        if samples_per_edge > 1:
            for t in range(1, samples_per_edge):
                pts.append(geodesic(verts[a], verts[b], t / samples_per_edge))
    # drop zero-length steps so arc parameterization is well defined
    kept = [pts[0]]
    for p in pts[1:]:
        if dist(kept[-1], p) > 1e-12:
            kept.append(p)
    while len(kept) > 1 and dist(kept[-1], kept[0]) <= 1e-12:
        kept.pop()
    return Loop(n, kept)


# --- disc triangulation -------------------------------------------------------

@dataclass
class DiscTriangulation:
    """Concentric-ring triangulation of the radius-ell disc.

    rings[k] lists vertex ids at radius k*width (ring 0 is the center);
    strips[k] is the ordered triangle strip of annulus k as entries
    ('O', inner, outer_from, outer_to) and ('I', inner_from, inner_to, outer),
    walked counterclockwise from angle 0. All edges have length <= 1.
    """

    ell: float
    width: float
    xy: list
    angles: list
    rings: list
    strips: list

    @property
    def num_rings(self):
        return len(self.rings) - 1

    def radius(self, k):
        return 0.0 if k == 0 else min(k * self.width, self.ell)

    def angle(self, vid):
        return self.angles[vid]

    def triangles(self):
        out = []
        for strip in self.strips:
            for entry in strip:
                kind, a, b, c = entry
                out.append((a, b, c))
        return out

    def edges(self):
        seen = set()
        for strip in self.strips:
            for kind, a, b, c in strip:
                for u, v in ((a, b), (b, c), (a, c)):
                    if u != v:
                        seen.add((min(u, v), max(u, v)))
        return seen

    def boundary_ring(self):
        return self.rings[-1]

    def validate(self):
        xy = np.asarray(self.xy)
        edges = np.asarray(sorted(self.edges()))
        if len(edges):
            d = np.hypot(*(xy[edges[:, 0]] - xy[edges[:, 1]]).T)
            if d.max() > 1.0 + 1e-9:
                raise GeometryError(f"edge of length {d.max():.4f} > 1")
        count = len(self.triangles())
        if count > 16 * self.ell * self.ell + 16:
            raise GeometryError("triangle count exceeds the quadratic budget")
        return True


def triangulate(ell) -> DiscTriangulation:
    """Rings at spacing <= 1/sqrt(2) with O(r) vertices per ring: O(ell^2)
    triangles in annular merge-walk strips, every edge of length <= 1."""
    ell = max(1.0, float(ell))
    if ell <= 1.0:
        nrings = 1
    else:
        nrings = math.ceil(ell * math.sqrt(2.0))
    width = ell / nrings
    xy = [(0.0, 0.0)]
    angles = [0.0]
    rings = [[0]]
    for k in range(1, nrings + 1):
        rk = k * width
        if nrings == 1:
            nk = max(6, math.ceil(2 * math.pi * rk))
        else:
            router = min(k + 1, nrings) * width
            nk = max(7, math.ceil(2 * math.pi * math.sqrt(2.0 * rk * router)))
        ring = []
        for t in range(nk):
            theta = 2 * math.pi * t / nk
            ring.append(len(xy))
            xy.append((rk * math.cos(theta), rk * math.sin(theta)))
            angles.append(theta)
        rings.append(ring)
    strips = []
    for k in range(nrings):
        inner = rings[k]
        outer = rings[k + 1]
        ni, no = len(inner), len(outer)
        strip = []
        ti = to = 0
        while ti < ni or to < no:
            th_i = 2 * math.pi * (ti + 1) / ni if ti < ni else math.inf
            th_o = 2 * math.pi * (to + 1) / no if to < no else math.inf
            if th_o <= th_i:
                strip.append(("O", inner[ti % ni], outer[to], outer[(to + 1) % no]))
                to += 1
            else:
                if ni > 1:
                    strip.append(("I", inner[ti], inner[(ti + 1) % ni],
                                  outer[to % no]))
                ti += 1
        strips.append(strip)
    tri = DiscTriangulation(ell=ell, width=width, xy=xy, angles=angles,
                            rings=rings, strips=strips)
    tri.validate()
    return tri


def cone_disc(loop: Loop, tri: DiscTriangulation):
    """Vertex images of the geodesic coning of the loop over the disc.

    Vertex at (r, theta) maps to the point at parameter r/ell along the
    geodesic from the loop basepoint alpha(0) to alpha(theta * length / 2pi);
    the boundary ring lands on the loop, the center on the basepoint.
    """
    apex = loop.points[0].mat
    a_half, a_ihalf = _halves(apex)
    images = [None] * len(tri.xy)
    images[0] = apex
    for k in range(1, tri.num_rings + 1):
        ring = tri.rings[k]
        u = tri.radius(k) / tri.ell
        svals = [tri.angle(v) / (2 * math.pi) * loop.length for v in ring]
        stack = loop.at_many(svals)
        inner = np.einsum("ab,nbc,cd->nad", a_ihalf, stack, a_ihalf)
        inner = 0.5 * (inner + inner.transpose(0, 2, 1))
        w, v = np.linalg.eigh(inner)
        w = np.clip(w, 1e-300, None)
        mid = np.einsum("nab,nb,ncb->nac", v, np.power(w, u), v)
        out = np.einsum("ab,nbc,cd->nad", a_half, mid, a_half)
        for row, vid in enumerate(ring):
            m = 0.5 * (out[row] + out[row].T)
            images[vid] = _normalize_det(m)
    return images


def coning_stretch(loop, tri, images):
    """Measured coning Lipschitz constant: max image/domain edge ratio."""
    worst = 0.0
    for (a, b) in tri.edges():
        dom = math.dist(tri.xy[a], tri.xy[b])
        if dom <= 1e-12:
            continue
        im = dist(SPDPoint(images[a], normalize=False),
                  SPDPoint(images[b], normalize=False))
        worst = max(worst, im / dom)
    return worst
