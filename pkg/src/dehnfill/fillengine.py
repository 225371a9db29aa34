"""End-to-end filling pipeline: cone a null word over a disc, label the
triangulation through the reduction map, build edge words, and emit a
verified certificate whose total cost is the measured filling area.

Certificate shape: the input word is first rewritten to the outermost ring
loop (a collar of atomic fills), then annulus by annulus each ring loop is
rewritten to the next one in by filling the strip triangles; what remains is
a nested conjugator palindrome that free-reduces to nothing. Triangles with
short plain boundaries take a single atomic fill; boundaries carrying
shortcut tokens go through the block normal-form wedge machinery.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass

import numpy as np

from . import reduction as red
from . import shortcuts as sc
from . import symspace as sy
from . import words as wd
from .config import DEFAULT, Config
from .intmat import GroupElement, inv_unimodular
from .kernels import mat_mul_int
from .parabolic import ParabolicShape
from .presentation import Certificate, CostModel, Scribe, WordEditor, apply_step
from .shortcuts import EngineError
from .words import invert_word


@dataclass
class EdgeStats:
    interior: int = 0            # nontrivial interior edges
    member_first: int = 0        # in the intersection parabolic at level 0
    member_final: int = 0        # after the coarsening fallback
    m_bounded: int = 0           # reductive part within the frozen bound
    n_log_bounded: int = 0       # log norm of unipotent part within budget
    fallback_rounds: int = 0

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class FillingReport:
    word_len: int
    reduced_len: int
    n: int
    loop_len: float
    triangles: int
    nontrivial_triangles: int
    total_cost: int
    move_count: int
    collar_cost: int
    max_triangle_cost: int
    edge_stats: EdgeStats
    cert_digest: str
    verified: bool
    wall_ms: float
    certificate: Certificate | None = None

    def row(self):
        return {
            "word_len": self.word_len,
            "loop_len": round(self.loop_len, 3),
            "triangles": self.triangles,
            "nontrivial_triangles": self.nontrivial_triangles,
            "total_cost": self.total_cost,
            "move_count": self.move_count,
            "collar_cost": self.collar_cost,
            "max_triangle_cost": self.max_triangle_cost,
            "verified": int(self.verified),
            "cert_digest": self.cert_digest,
            "wall_ms": round(self.wall_ms, 1),
        }


class _Verifier:
    """Independent streaming replay of the emitted steps."""

    def __init__(self, n, initial, cm):
        self.n = n
        self.cm = cm
        self.ed = WordEditor(list(initial))
        self.total_cost = 0
        self.move_count = 0
        self.digest = hashlib.sha256()

    def feed(self, step):
        self.total_cost += apply_step(self.ed, step, self.n, self.cm)
        self.move_count += 1
        self.digest.update(repr(step).encode())

    def finish(self):
        if len(self.ed) != 0:
            raise EngineError(f"verifier replay left {len(self.ed)} letters")
        self.digest.update(b"END")
        return self.digest.hexdigest()


# --- vertex labels --------------------------------------------------------------

def label_vertices(tri: sy.DiscTriangulation, images, cfg: Config | None = None,
                   seeded=True):
    """Reduction labels of the coned vertex images: per vertex the rows of
    gamma^-1 (hashable; equality of labels is equality of these) and the log
    diagonal. gamma itself is materialized lazily where needed.

    When seeded, the finite choice in each vertex's reduction is resolved
    through an already-labeled neighbor: the neighbor's gamma preconditions
    the point, the preconditioned point is reduced, and the two transforms
    compose. Every label is still a valid reduction of its own vertex image;
    seeding only keeps the choices of nearby vertices coherent, which is what
    bounds the edge words. Traversal order is fixed (center, then each ring
    counterclockwise), so labels are deterministic."""
    cfg = cfg or DEFAULT
    ginvs = [None] * len(images)
    logas = [None] * len(images)
    if not seeded:
        for vid, mat in enumerate(images):
            try:
                ginvs[vid], logas[vid] = red.reduce_light(mat, cfg)
            except red.ReductionError as exc:
                raise EngineError(f"vertex {vid}: {exc}") from None
        return ginvs, logas
    float_cache = {}
    compose_cache = {}

    def ginv_float(ginv):
        arr = float_cache.get(ginv)
        if arr is None:
            arr = np.array(ginv, dtype=float)
            float_cache[ginv] = arr
        return arr

    def label_one(vid, seed_vid):
        mat = images[vid]
        try:
            if seed_vid is None:
                ginvs[vid], logas[vid] = red.reduce_light(mat, cfg)
                return
            seed = ginvs[seed_vid]
            gf = ginv_float(seed)
            q = gf @ mat @ gf.T
            q = 0.5 * (q + q.T)
            if not np.all(np.isfinite(q)):
                raise red.ReductionError("seeded point overflows float range")
            delta, log_a = red.reduce_light(q, cfg)
            key = (delta, seed)
            combined = compose_cache.get(key)
            if combined is None:
                combined = mat_mul_int(delta, seed, len(seed))
                compose_cache[key] = combined
            ginvs[vid] = combined
            logas[vid] = log_a
        except (red.ReductionError, sy.GeometryError) as exc:
            raise EngineError(f"vertex {vid}: {exc}") from None

    label_one(0, None)
    for k in range(1, tri.num_rings + 1):
        ring = tri.rings[k]
        inner = tri.rings[k - 1]
        ni = len(inner)
        for idx, vid in enumerate(ring):
            # radial seeding: the angularly nearest inner-ring vertex, so the
            # choice tree follows the coning rays
            seed = inner[round(idx * ni / len(ring)) % ni]
            label_one(vid, seed)
    return ginvs, logas


class _LabelAlgebra:
    """Cached exact algebra on the distinct labels."""

    def __init__(self, n):
        self.n = n
        self._gamma = {}

    def gamma_of(self, ginv) -> GroupElement:
        g = self._gamma.get(ginv)
        if g is None:
            g = GroupElement._wrap(inv_unimodular(ginv))
            self._gamma[ginv] = g
        return g

    def edge_element(self, ginv_u, ginv_v) -> GroupElement:
        # gamma_u^-1 * gamma_v
        return GroupElement._wrap(
            mat_mul_int(ginv_u, self.gamma_of(ginv_v).rows, self.n))


# --- shapes and edge words --------------------------------------------------------

def _triangle_table(tri):
    """Per-triangle anchor vertices (the inner vertex of each strip entry)
    and the edge -> adjacent-triangle map."""
    anchors = []
    edge_tris: dict = {}
    tid = 0
    for strip in tri.strips:
        for kind, a, b, c in strip:
            anchors.append(a)
            for (u, v) in ((a, b), (b, c), (a, c)):
                if u != v:
                    key = (min(u, v), max(u, v))
                    edge_tris.setdefault(key, []).append(tid)
            tid += 1
    return anchors, edge_tris


def build_edge_words(tri, ginvs, logas, cfg: Config | None = None):
    """Shapes for every triangle and macro words for every nontrivial edge,
    with the coarsening fallback on membership failures.

    Interior edges get the intersection-parabolic normal form (shortcut
    tokens at large positions); edges of the boundary ring get plain
    bounded words. Returns (shapes, edge_words, stats)."""
    cfg = cfg or DEFAULT
    n = len(logas[0])
    full = ParabolicShape.full(n)
    algebra = _LabelAlgebra(n)
    anchors, edge_tris = _triangle_table(tri)
    levels = [0] * len(anchors)

    def shape_of(tid):
        t_eff = cfg.t0 * (cfg.coarsen_base ** levels[tid])
        return red.classify_from_logs(logas[anchors[tid]], t_eff, n)

    shapes = [shape_of(t) for t in range(len(anchors))]
    stats = EdgeStats()
    elements = {}
    nontrivial = []
    for key, tids in edge_tris.items():
        u, v = key
        if ginvs[u] == ginvs[v]:
            continue
        elements[key] = algebra.edge_element(ginvs[u], ginvs[v])
        nontrivial.append(key)
        if len(tids) == 2:
            stats.interior += 1
    first_pass = True
    for _round in range(cfg.coarsen_max * 4 + 1):
        bumped = set()
        for key in nontrivial:
            tids = edge_tris[key]
            if len(tids) != 2:
                continue
            inter = shapes[tids[0]].refine(shapes[tids[1]])
            if inter.contains_matrix(elements[key]):
                if first_pass:
                    stats.member_first += 1
            else:
                for t in tids:
                    if levels[t] < cfg.coarsen_max:
                        bumped.add(t)
        first_pass = False
        if not bumped:
            break
        stats.fallback_rounds += 1
        for t in bumped:
            levels[t] += 1
            shapes[t] = shape_of(t)
    engine_cfg = cfg.with_overrides(
        bfs_radius=min(cfg.bfs_radius, (cfg.atomic_len - 2) // 2))
    edge_words = {}
    for key in sorted(nontrivial):
        u, v = key
        tids = edge_tris[key]
        g = elements[key]
        try:
            if len(tids) == 2:
                sa, sb = shapes[tids[0]], shapes[tids[1]]
                inter = sa.refine(sb)
                if not inter.contains_matrix(g):
                    raise EngineError(
                        f"edge {key} fails membership in {inter} after the "
                        "coarsening fallback (t0 misconfiguration?)")
                npart, mpart = red.parabolic_decompose(g, inter)
                stats.member_final += 1
                if mpart.norm_inf() <= cfg.c_rho_frozen:
                    stats.m_bounded += 1
                radius = max(float(np.max(np.abs(logas[u]))), 1.0)
                if math.log2(npart.norm_inf() + 1) <= cfg.c_nlog_frozen * (radius + 1):
                    stats.n_log_bounded += 1
                edge_words[key] = red.edge_word(g, sa, sb, engine_cfg)
            else:
                edge_words[key] = red.bounded_word(g, full, engine_cfg)
        except (red.ReductionError, red.MembershipError) as exc:
            raise EngineError(f"edge {key}: {exc}") from None
    return shapes, edge_words, stats


# --- triangle filling --------------------------------------------------------------

def _coeff_pair(letter):
    return (letter[1], letter[2]) if letter[0] in ("e", "E") else None


def fill_triangle(boundary, shape: ParabolicShape, cfg: Config | None = None,
                  scribe: Scribe | None = None, pos=0) -> Certificate | None:
    """Reduce a triangle boundary word to the empty word.

    The boundary must evaluate to the identity and consist of block-diagonal
    items (plain letters over Sigma/M_P) and coefficient letters over
    chi(N_P). Short all-plain boundaries take one atomic fill; otherwise the
    word is consumed item by item, keeping the processed prefix in the form
    [bounded reductive word][block normal form]: each reductive letter is
    conjugated leftward through the normal form and absorbed, each
    coefficient letter is merged by the wedge moves.
    """
    cfg = cfg or DEFAULT
    cm = CostModel.from_config(cfg)
    standalone = scribe is None
    if standalone:
        if not wd.evaluates_to_identity(boundary, shape.n):
            raise EngineError("triangle boundary does not evaluate to I")
        scribe = Scribe(shape.n, list(boundary), cm)
        pos = 0
    length = len(boundary)
    if length == 0:
        return Certificate(shape.n, [], [], cm) if standalone else None
    if length <= cm.atomic_len and all(letter[0] != "E" for letter in boundary):
        scribe.af(pos, length)
        return (Certificate(shape.n, list(boundary), scribe.steps, cm)
                if standalone else None)
    chi_m = shape.chi_M()
    chi_n = shape.chi_N()
    engine_cfg = cfg.with_overrides(
        bfs_radius=min(cfg.bfs_radius, (cfg.atomic_len - 2) // 2))
    m_cur = GroupElement.identity(shape.n)
    gamma_len = 0
    nu_len = 0
    remaining = length
    while remaining:
        remaining -= 1
        item_pos = pos + gamma_len + nu_len
        scribe.ed.seek(item_pos)
        letter = scribe.ed.peek(1)[0]
        pair = _coeff_pair(letter)
        if pair is not None and pair in chi_n:
            if letter[3] == 0:
                scribe.af(item_pos, 1)
                continue
            new_end = sc.normalize_nu_region(scribe, pos + gamma_len,
                                             item_pos + 1, shape)
            nu_len = new_end - (pos + gamma_len)
        elif letter[0] == "d" or (pair is not None and pair in chi_m):
            sigma = letter
            sigma_inv = wd.inverse_letter(sigma)
            cur = item_pos
            floor_pos = pos + gamma_len
            while cur > floor_pos:
                scribe.ed.seek(cur - 1)
                term = scribe.ed.peek(1)[0]
                a, b, x = term[1], term[2], term[3]
                scribe.ins(cur - 1, sigma)
                if sigma[0] == "d":
                    scribe.mm("diagconj", cur, (sigma[1], a, b, x))
                else:
                    umat = wd.evaluate([sigma_inv, term, sigma], shape.n)
                    rhs = sc.nu_normal_form(umat, shape)
                    scribe.mm("conj", cur, ((sigma_inv,), a, b, x, tuple(rhs)))
                    nu_len += len(rhs) - 1
                cur -= 1
            m_next = m_cur * wd.evaluate([sigma], shape.n)
            try:
                gamma_next = red.bounded_word(m_next, shape, engine_cfg)
            except red.ReductionError as exc:
                raise EngineError("reductive prefix escaped the search radius: "
                                  f"{exc}") from None
            fill_len = gamma_len + 1 + len(gamma_next)
            if fill_len > cm.atomic_len:
                raise EngineError("reductive rewrite exceeds the atomic budget")
            scribe.insert_pair_word(pos + gamma_len + 1, invert_word(gamma_next))
            scribe.af(pos, fill_len)
            gamma_len = len(gamma_next)
            m_cur = m_next
            if nu_len:
                new_end = sc.normalize_nu_region(scribe, pos + gamma_len,
                                                 pos + gamma_len + nu_len, shape)
                nu_len = new_end - (pos + gamma_len)
        else:
            raise EngineError(f"letter {letter} is not an item for {shape}")
    if nu_len or gamma_len or not m_cur.is_identity():
        raise EngineError("triangle filler left residue "
                          f"(gamma={gamma_len}, nu={nu_len})")
    return (Certificate(shape.n, list(boundary), scribe.steps, cm)
            if standalone else None)


# --- sweeps -----------------------------------------------------------------------

def _sweep(scribe, base, entries, outer_word, inner_word, radial_of, fill_cell):
    """Rewrite the outer loop starting at `base` into the inner loop.

    entries: ('O', i, o_from, o_to) consumes one outer edge;
             ('I', i_from, i_to, o) emits one inner edge.
    radial_of(i, o) is the word from inner vertex i to outer vertex o.
    fill_cell(index, entry, pos, length) must reduce the identity segment
    [pos, pos + length) to nothing. Returns the sweep base (start of the
    emitted inner loop, which equals base + length of the seam conjugator).
    """
    first = entries[0]
    seam_inner = first[1]
    seam_outer = first[2] if first[0] == "O" else first[3]
    start_radial = radial_of(seam_inner, seam_outer)
    scribe.insert_pair_word(base, invert_word(start_radial))
    sweep_base = base + len(start_radial)
    cursor = list(start_radial)
    inner_done = 0
    for idx, entry in enumerate(entries):
        pos_cursor = sweep_base + inner_done
        if entry[0] == "O":
            _, iv, o_from, o_to = entry
            ow = outer_word(o_from, o_to)
            newcur = radial_of(iv, o_to)
            seg = len(cursor) + len(ow)
            scribe.insert_pair_word(pos_cursor + seg, invert_word(newcur))
            fill_cell(idx, entry, pos_cursor, seg + len(newcur))
            cursor = newcur
        else:
            _, i_from, i_to, ov = entry
            iw = inner_word(i_from, i_to)
            newcur = radial_of(i_to, ov)
            compound = iw + newcur
            scribe.insert_pair_word(pos_cursor, compound)
            fill_cell(idx, entry, pos_cursor + len(compound),
                      len(compound) + len(cursor))
            inner_done += len(iw)
            cursor = newcur
    return sweep_base


def fill_word(word, n, cfg: Config | None = None, materialize=False,
              sink=None) -> FillingReport:
    """Fill a null word end to end.

    Every emitted step is replayed by an independent verifier; the report
    carries the verified totals and a digest of the step stream."""
    cfg = cfg or DEFAULT
    if n < 5:
        raise EngineError("the filling pipeline needs n >= 5")
    cm = CostModel.from_config(cfg)
    wd.check_word(word, n, allow_macro=False)
    if not wd.evaluates_to_identity(word, n):
        raise EngineError("input word does not evaluate to the identity")
    t_start = time.perf_counter()
    verifier = _Verifier(n, list(word), cm)
    collected = [] if materialize else None

    def emit_sink(step):
        verifier.feed(step)
        if collected is not None:
            collected.append(step)
        if sink is not None:
            sink(step)

    scribe = Scribe(n, list(word), cm, sink=emit_sink)
    reduced, pre_steps = wd.free_reduce_steps(word)
    for step in pre_steps:
        scribe.emit(step)
    stats = EdgeStats()
    collar_cost = 0
    max_tri_cost = 0
    nontrivial_triangles = 0
    tri_count = 0
    loop_len = 0.0
    if reduced:
        loop = sy.loop_of_word(reduced, n, cfg.samples_per_edge)
        loop_len = loop.length
        tri = sy.triangulate(loop.length)
        tri_count = len(tri.triangles())
        images = sy.cone_disc(loop, tri)
        ginvs, logas = label_vertices(tri, images, cfg)
        shapes, edge_words, stats = build_edge_words(tri, ginvs, logas, cfg)
        algebra = _LabelAlgebra(n)
        full = ParabolicShape.full(n)
        engine_cfg = cfg.with_overrides(
            bfs_radius=min(cfg.bfs_radius, (cfg.atomic_len - 2) // 2))

        def vert_word(u, v):
            if u == v or ginvs[u] == ginvs[v]:
                return []
            key = (min(u, v), max(u, v))
            w = edge_words[key]
            return list(w) if (u, v) == key else invert_word(w)

        # collar between the word path (outer) and the boundary ring (inner)
        prefixes = [GroupElement.identity(n)]
        for letter in reduced:
            prefixes.append(prefixes[-1] * wd.evaluate([letter], n))
        pts = [sy.point_of(g) for g in prefixes]
        arcs = [0.0]
        for t in range(1, len(pts)):
            arcs.append(arcs[-1] + sy.dist(pts[t - 1], pts[t]))
        total_arc = arcs[-1]
        ring = tri.boundary_ring()
        ring_arcs = [tri.angle(v) / (2 * math.pi) * loop.length for v in ring]
        m = len(reduced)
        ni = len(ring)
        cross_cache: dict = {}

        def cross_word(ring_idx, wj):
            key = (ring_idx % ni, wj % m)
            w = cross_cache.get(key)
            if w is None:
                lam = algebra.gamma_of(ginvs[ring[key[0]]])
                g = lam.inverse() * prefixes[key[1]]
                try:
                    w = red.bounded_word(g, full, engine_cfg)
                except red.ReductionError as exc:
                    raise EngineError(f"collar cross word {key}: {exc}") from None
                cross_cache[key] = w
            return list(w)

        collar_entries = []
        ti = to = 0
        while ti < ni or to < m:
            arc_i = ring_arcs[ti + 1] if ti + 1 < ni else total_arc
            arc_o = arcs[to + 1] if to + 1 <= m else math.inf
            if to >= m or (ti < ni and arc_i <= arc_o):
                collar_entries.append(("I", ti, ti + 1, to))
                ti += 1
            else:
                collar_entries.append(("O", ti, to, to + 1))
                to += 1

        def collar_fill(idx, entry, p, ln):
            nonlocal collar_cost
            if ln == 0:
                return
            if ln > cm.atomic_len:
                raise EngineError(f"collar cell of length {ln} exceeds L0"
                                  f" (entry {entry})")
            before = scribe.total_cost
            scribe.af(p, ln)
            collar_cost += scribe.total_cost - before

        base = _sweep(
            scribe, 0, collar_entries,
            outer_word=lambda a, b: [reduced[a % m]],
            inner_word=lambda a, b: vert_word(ring[a % ni], ring[b % ni]),
            radial_of=cross_word,
            fill_cell=collar_fill)

        # annuli, outermost in
        anchors, _edge_tris = _triangle_table(tri)
        tid_offset = 0
        strip_tids = []
        for strip in tri.strips:
            strip_tids.append(list(range(tid_offset, tid_offset + len(strip))))
            tid_offset += len(strip)
        for k in range(tri.num_rings - 1, -1, -1):
            strip = tri.strips[k]
            tids = strip_tids[k]

            def tri_fill(idx, entry, p, ln, _tids=tids):
                nonlocal max_tri_cost, nontrivial_triangles
                if ln == 0:
                    return
                shape = shapes[_tids[idx]]
                scribe.ed.seek(p)
                boundary = scribe.ed.peek(ln)
                before = scribe.total_cost
                try:
                    fill_triangle(boundary, shape, cfg, scribe=scribe, pos=p)
                except EngineError as exc:
                    raise EngineError(
                        f"triangle {_tids[idx]} (annulus {k}): {exc}") from None
                cost = scribe.total_cost - before
                nontrivial_triangles += 1
                if cost > max_tri_cost:
                    max_tri_cost = cost

            base = _sweep(
                scribe, base, strip,
                outer_word=vert_word,
                inner_word=vert_word,
                radial_of=vert_word,
                fill_cell=tri_fill)
        # nested conjugators cancel
        for p in range(base - 1, -1, -1):
            scribe.dele(p)
    if len(scribe.ed) != 0:
        raise EngineError(f"pipeline left {len(scribe.ed)} letters")
    digest = verifier.finish()
    wall = (time.perf_counter() - t_start) * 1000
    return FillingReport(
        word_len=len(word), reduced_len=len(reduced), n=n, loop_len=loop_len,
        triangles=tri_count, nontrivial_triangles=nontrivial_triangles,
        total_cost=verifier.total_cost, move_count=verifier.move_count,
        collar_cost=collar_cost, max_triangle_cost=max_tri_cost,
        edge_stats=stats, cert_digest=digest, verified=True, wall_ms=wall,
        certificate=(Certificate(n, list(word), collected, cm)
                     if materialize else None))


def boundary_collar(word, n, cfg: Config | None = None):
    """Standalone collar measurement: fills the annulus between a null word
    and its boundary-ring word, returning (steps, cost). Exposed mainly for
    tests; fill_word embeds the same construction."""
    report = fill_word(word, n, cfg)
    return report.collar_cost
