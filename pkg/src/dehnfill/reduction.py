"""Siegel reduction and the parabolic structure of edge elements.

The reduction map sends a point P of the symmetric space to an integer
matrix gamma with gamma^-1 P in the Siegel region N+ A+ (up to the congruence
action): rows of the upper Cholesky factor are LLL-reduced (default delta = 0.75,
so the Siegel ratio constant is eps_S = sqrt(delta - 1/4) ~ 0.707) and
orthonormalized bottom-up. The decomposition P = [gamma n a] then feeds the
gap classification and the edge-word builder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky as _cholesky

from . import kernels
from .config import DEFAULT, Config
from .intmat import GroupElement, Sublattice, det_int, hermite_span, inv_unimodular
from .parabolic import ParabolicShape
from .symspace import SPDPoint, point_of
from .words import invert_word

__all__ = [
    "ParabolicShape", "SiegelDecomposition", "ReductionError", "MembershipError",
    "siegel_reduce", "phi", "phi_log", "dist_A", "classify_parabolic",
    "short_vector_span", "parabolic_decompose", "m_word", "edge_word",
]


class ReductionError(RuntimeError):
    pass


class MembershipError(ValueError):
    """Edge element outside the required parabolic subgroup."""


@dataclass
class SiegelDecomposition:
    gamma: GroupElement
    n_part: np.ndarray     # upper unitriangular, off-diagonal in [-1/2, 1/2]
    a_part: np.ndarray     # positive diagonal, det 1, a_i >= eps_S * a_{i+1}
    log_a: np.ndarray

    def reconstruct(self) -> SPDPoint:
        g = np.array(self.gamma.rows, dtype=float)
        return point_of(g @ self.n_part @ np.diag(self.a_part))


def _nak_bottom_up(w, eps):
    """Bottom-up orthonormalization of the rows of w: returns (nup, a, log_a)
    or None when the Siegel membership conditions fail."""
    n = w.shape[0]
    frame = np.zeros((n, n))
    avec = np.zeros(n)
    nup = np.eye(n)
    for t in range(n - 1, -1, -1):
        v = w[t].copy()
        for s in range(n - 1, t, -1):
            coef = float(w[t] @ frame[s])
            nup[t, s] = coef / avec[s]
            v -= coef * frame[s]
        norm = float(np.linalg.norm(v))
        if norm <= 0 or not math.isfinite(norm):
            raise ReductionError("degenerate basis row in reduction")
        avec[t] = norm
        frame[t] = v / norm
    off = nup - np.diag(np.diag(nup))
    if np.max(np.abs(off)) > 0.5 + 1e-6:
        return None
    log_a = np.log(avec)
    if n > 1 and np.min(log_a[:-1] - log_a[1:]) < math.log(eps) - 1e-6:
        return None
    return nup, avec, log_a


def _reduce_core(mat, cfg):
    """(gamma_inverse integer rows, W float rows) with W = gamma^-1 C for the
    upper Cholesky factor C of the input (P = C C^T, C upper triangular).

    LLL runs on the reversed rows of C, so already-Siegel inputs (flat points
    included) come back with gamma = I; the reduced order is un-reversed into
    the descending Siegel order afterward."""
    n = mat.shape[0]
    rev = mat[::-1, ::-1]
    lower = _cholesky(rev, lower=True)      # C = J lower J, basis B0 = J C
    umat, bmat, ok = kernels.lll_reduce(lower, cfg.lll_delta)
    if not ok:
        raise ReductionError("lattice reduction hit the iteration cap "
                             f"(condition ~ {np.linalg.cond(mat):.2e})")
    # gamma^-1 = J U J ; W = J (U B0) J-columns? rows reversed, entries of the
    # float basis are in reversed column coordinates, so un-reverse both.
    ginv = [[int(umat[n - 1 - i][n - 1 - j]) for j in range(n)]
            for i in range(n)]
    w = np.asarray(bmat, dtype=float)[::-1, ::-1].copy()
    if det_int(ginv) == -1:
        ginv[0] = [-x for x in ginv[0]]
        w[0] = -w[0]
    return ginv, w


def siegel_reduce(p: SPDPoint, cfg: Config | None = None) -> SiegelDecomposition:
    cfg = cfg or DEFAULT
    ginv, w = _reduce_core(p.mat, cfg)
    nak = _nak_bottom_up(w, cfg.eps_siegel)
    if nak is None:
        raise ReductionError("Siegel membership conditions failed after "
                             "reduction (numerical breakdown)")
    nup, avec, log_a = nak
    gamma = GroupElement._wrap(inv_unimodular(ginv))
    return SiegelDecomposition(gamma=gamma, n_part=nup, a_part=avec,
                               log_a=log_a)


def reduce_light(mat, cfg: Config | None = None):
    """Label-pass reduction: returns (gamma_inverse_rows, log_a) without
    materializing gamma itself (the per-vertex hot path of the fill engine)."""
    cfg = cfg or DEFAULT
    ginv, w = _reduce_core(mat, cfg)
    nak = _nak_bottom_up(w, cfg.eps_siegel)
    if nak is None:
        raise ReductionError("Siegel membership conditions failed after "
                             "reduction (numerical breakdown)")
    return tuple(tuple(r) for r in ginv), nak[2]


def phi(p: SPDPoint, cfg: Config | None = None) -> np.ndarray:
    """The positive-diagonal part of the Siegel decomposition of p."""
    return siegel_reduce(p, cfg).a_part


def phi_log(p: SPDPoint, cfg: Config | None = None) -> np.ndarray:
    return siegel_reduce(p, cfg).log_a


def dist_A(a, b) -> float:
    """Flat metric on the diagonal: sqrt(sum log^2(a_i/b_i))."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.sqrt(np.sum((np.log(a) - np.log(b)) ** 2)))


def classify_parabolic(a_part, t, n=None) -> ParabolicShape:
    """The shape whose block boundaries sit exactly at gaps a_i > t * a_{i+1}."""
    a = np.asarray(a_part, dtype=float)
    n = n or len(a)
    logs = np.log(a)
    logt = math.log(t)
    splits = [i + 1 for i in range(n - 1) if logs[i] - logs[i + 1] > logt]
    return ParabolicShape.from_splits(n, splits)


def classify_from_logs(log_a, t, n=None) -> ParabolicShape:
    n = n or len(log_a)
    logt = math.log(t)
    splits = [i + 1 for i in range(n - 1)
              if log_a[i] - log_a[i + 1] > logt]
    return ParabolicShape.from_splits(n, splits)


def short_vector_span(p: SPDPoint, r, cfg: Config | None = None) -> Sublattice:
    """Hermite span of all integer row vectors v with v P v^T <= r^2.

    Enumerates in LLL-reduced coordinates (Fincke-Pohst style bounded search)
    and maps generators back, so skewed forms stay within the budget."""
    cfg = cfg or DEFAULT
    n = p.n
    c = _cholesky(p.mat, lower=True)
    umat, bmat, ok = kernels.lll_reduce(c, cfg.lll_delta)
    if not ok:
        raise ReductionError("lattice reduction failed in enumeration")
    b = np.asarray(bmat, dtype=float)       # rows: reduced basis, v = u @ U
    gram = b @ b.T
    upper = _cholesky(gram, lower=False)    # Q(u) = |upper @ u^T|^2
    rsq = float(r) * float(r)
    found = []
    budget = [cfg.enum_budget]

    def rec(idx, sigma, tail, coords):
        uii = upper[idx, idx]
        center = -sigma[idx] / uii
        span = math.sqrt(max(rsq * (1 + 1e-9) - tail, 0.0)) / abs(uii)
        if 2 * span + 1 > budget[0]:
            raise ReductionError("short-vector enumeration budget exceeded")
        lo = math.ceil(center - span - 1e-12)
        hi = math.floor(center + span + 1e-12)
        for vi in range(lo, hi + 1):
            budget[0] -= 1
            if budget[0] < 0:
                raise ReductionError("short-vector enumeration budget exceeded")
            comp = uii * vi + sigma[idx]
            ntail = tail + comp * comp
            if ntail > rsq + 1e-9:
                continue
            if idx == 0:
                vec = (vi,) + coords
                if any(vec):
                    found.append(vec)
            else:
                nsigma = sigma + upper[:, idx] * vi
                rec(idx - 1, nsigma, ntail, (vi,) + coords)

    rec(n - 1, np.zeros(n), 0.0, ())
    gens = []
    for u in found:
        gens.append(tuple(sum(u[k] * umat[k][j] for k in range(n))
                          for j in range(n)))
    return hermite_span(gens, n)


def parabolic_decompose(g: GroupElement, shape: ParabolicShape):
    """g = nPart * mPart with mPart the block diagonal of g and nPart block
    unipotent; exact, raises MembershipError when g is not block upper
    triangular for the shape."""
    n = g.n
    if shape.n != n:
        raise ValueError("dimension mismatch")
    if not shape.contains_matrix(g):
        raise MembershipError(f"element not in {shape}(Z)")
    mrows = [[0] * n for _ in range(n)]
    for q in range(1, shape.num_blocks + 1):
        lo, hi = shape.block_range(q)
        for i in range(lo, hi + 1):
            for j in range(lo, hi + 1):
                mrows[i - 1][j - 1] = g.entry(i, j)
    mpart = GroupElement._wrap(tuple(tuple(r) for r in mrows))
    npart = g * mpart.inverse()
    chi_n = shape.chi_N()
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            v = npart.entry(i, j)
            if i == j:
                if v != 1:
                    raise MembershipError("block diagonal is not unimodular")
            elif v != 0 and (i, j) not in chi_n:
                raise MembershipError("unipotent part has support outside chi(N)")
    return npart, mpart


# --- bounded word search over Sigma intersect M_P ------------------------------

def _sigma_m_generators(shape: ParabolicShape):
    n = shape.n
    gens = []
    for (i, j) in sorted(shape.chi_M()):
        gens.append(("e", i, j, 1))
        gens.append(("e", i, j, -1))
    for bits in range(2 ** n):
        signs = tuple(-1 if bits & (1 << t) else 1 for t in range(n))
        if signs.count(-1) % 2 == 0 and signs.count(-1) > 0:
            gens.append(("d", signs))
    return gens


def _letter_matrix(letter, n):
    from . import words as _words

    return _words.evaluate([letter], n).rows


_MWORD_CACHE: dict = {}


def _bidi_search(m_rows, n, moves, total_cap, budget, extra_layers=0):
    """Bidirectional layer search over composite moves.

    moves: list of (letters_tuple, matrix, inv_matrix). Layers count moves;
    the first meet is move-minimal and the search runs extra_layers further
    to prefer letter-shorter meets. Returns the best word or None."""
    ident = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
    if m_rows == ident:
        return []
    fwd = {ident: ()}
    bwd = {m_rows: ()}
    frontiers = {True: [ident], False: [m_rows]}
    depths = {True: 0, False: 0}
    states = 2
    best = None
    slack = None
    while True:
        if best is not None and slack <= 0:
            break
        if depths[True] + depths[False] >= total_cap:
            break
        grow_fwd = len(fwd) <= len(bwd)
        if not frontiers[grow_fwd]:
            grow_fwd = not grow_fwd
            if not frontiers[grow_fwd]:
                break
        src, other = (fwd, bwd) if grow_fwd else (bwd, fwd)
        new_frontier = []
        for rows in frontiers[grow_fwd]:
            w = src[rows]
            for letters, gm, gim in moves:
                if grow_fwd:
                    nxt = kernels.mat_mul_int(rows, gm, n)
                    nw = w + letters
                else:
                    nxt = kernels.mat_mul_int(rows, gim, n)
                    nw = letters + w
                if nxt in src:
                    continue
                src[nxt] = nw
                new_frontier.append(nxt)
                states += 1
                if states > budget:
                    raise ReductionError("word search budget exceeded")
                if nxt in other:
                    cand = list(fwd[nxt]) + list(bwd[nxt])
                    if best is None or len(cand) < len(best):
                        best = cand
                        slack = extra_layers + 1
        frontiers[grow_fwd] = new_frontier
        depths[grow_fwd] += 1
        if best is not None:
            slack -= 1
    return list(best) if best is not None else None


def m_word(m: GroupElement, shape: ParabolicShape, cfg: Config | None = None):
    """Bounded word over Sigma intersect M_P representing m.

    Two-phase bidirectional search: an exact letter-by-letter pass finds
    minimal words up to six letters; deeper targets fall back to a composite
    search that also steps by the embedded 3-letter rotation words, trading
    exact minimality for reach. Raises when nothing of length <= bfs_radius
    is found (a violated boundedness constant)."""
    from .words import inverse_letter

    cfg = cfg or DEFAULT
    n = shape.n
    key = (shape.composition, m.rows)
    hit = _MWORD_CACHE.get(key)
    if hit is not None:
        return list(hit)
    if m.is_identity():
        return []
    gens = _sigma_m_generators(shape)
    letter_moves = [((g,), _letter_matrix(g, n),
                     _letter_matrix(inverse_letter(g), n)) for g in gens]
    word = _bidi_search(m.rows, n, letter_moves,
                        total_cap=min(6, cfg.bfs_radius),
                        budget=cfg.bfs_budget)
    if word is None:
        from .presentation import s_word
        from .words import evaluate, invert_word

        s_moves = []
        for (i, j) in sorted(shape.chi_M()):
            if i < j:
                for wrd in (s_word(i, j), invert_word(s_word(i, j))):
                    mat = evaluate(wrd, n).rows
                    imat = evaluate(invert_word(wrd), n).rows
                    s_moves.append((tuple(wrd), mat, imat))
        word = _bidi_search(m.rows, n, letter_moves + s_moves,
                            total_cap=cfg.bfs_radius,
                            budget=cfg.bfs_budget, extra_layers=1)
    if word is None or len(word) > cfg.bfs_radius:
        raise ReductionError(
            f"no word of length <= {cfg.bfs_radius} over Sigma/{shape} for "
            f"norm_inf {m.norm_inf()} (boundedness constant violated)")
    _MWORD_CACHE[key] = tuple(word)
    return list(word)


def _constructive_block_word(g: GroupElement, shape: ParabolicShape):
    """Bounded (not minimal) word for a block-diagonal element: clear each
    block by integer row operations, fix signs with one diagonal letter."""
    from .presentation import s_word
    from .words import invert_word

    n = g.n
    rows = [list(r) for r in g.rows]
    ops = []  # recorded left-multiplications reducing g to a sign matrix

    def rowop(dst, src, t):
        # left-multiply by e_{dst,src}(t): row dst += t * row src
        if t:
            rd, rs = rows[dst - 1], rows[src - 1]
            for c in range(n):
                rd[c] += t * rs[c]
            ops.append(("e", dst, src, t))

    def rowswap(a, b):
        # left-multiply by the rotation block: row a <- row b, row b <- -row a
        ra = rows[a - 1][:]
        rows[a - 1] = rows[b - 1][:]
        rows[b - 1] = [-x for x in ra]
        ops.append(("s", a, b))

    guard = 0
    for q in range(1, shape.num_blocks + 1):
        lo, hi = shape.block_range(q)
        # upper-triangularize the block by column
        for c in range(lo, hi + 1):
            while True:
                guard += 1
                if guard > 64 * n * n:
                    raise ReductionError("constructive reduction stalled")
                live = [r for r in range(c, hi + 1) if rows[r - 1][c - 1] != 0]
                if not live:
                    raise ReductionError("constructive reduction hit a "
                                         "singular block")
                piv = min(live, key=lambda r: (abs(rows[r - 1][c - 1]), r))
                others = [r for r in live if r != piv]
                if not others:
                    if piv != c:
                        rowswap(c, piv)
                        continue
                    break
                for r in others:
                    rowop(r, piv, -(rows[r - 1][c - 1] // rows[piv - 1][c - 1]))
        # diagonal is now +-1 (unimodular block): clear above the pivots
        for c in range(hi, lo - 1, -1):
            d = rows[c - 1][c - 1]
            if d not in (1, -1):
                raise ReductionError("constructive reduction left a pivot != 1")
            for r in range(lo, c):
                v = rows[r - 1][c - 1]
                if v:
                    rowop(r, c, -v * d)
    signs = tuple(rows[i][i] for i in range(n))
    if any(s not in (1, -1) for s in signs) or \
            any(rows[i][j] != 0 for i in range(n) for j in range(n) if i != j):
        raise ReductionError("constructive reduction left residue")
    # L_k ... L_1 g = diag(signs)  =>  g = inv(L_1) inv(L_2) ... inv(L_k) diag
    letters = []
    for op in ops:
        if op[0] == "e":
            _, dst, src, t = op
            sgn = -1 if t > 0 else 1
            letters.extend([("e", dst, src, sgn)] * abs(t))
        else:
            _, a, b = op
            letters.extend(invert_word(s_word(a, b)))
    if any(s == -1 for s in signs):
        letters.append(("d", signs))
    return letters


_BOUNDED_CACHE: dict = {}


def bounded_word(g: GroupElement, shape: ParabolicShape,
                 cfg: Config | None = None):
    """Engine word builder: a word over Sigma intersect M_P for g.

    The constructive elimination word is cheap and bounded; when it is not
    already short, a small exact search tries to beat it. Unlike m_word this
    never fails on block-diagonal input, only returns longer words."""
    from .words import evaluate

    cfg = cfg or DEFAULT
    key = (shape.composition, g.rows)
    hit = _BOUNDED_CACHE.get(key)
    if hit is not None:
        return list(hit)
    if g.is_identity():
        return []
    word = _constructive_block_word(g, shape)
    if evaluate(word, g.n) != g:
        raise ReductionError("constructive word failed to evaluate")
    if len(word) > 4:
        try:
            short = m_word(g, shape,
                           cfg.with_overrides(bfs_radius=4, bfs_budget=30_000))
            if len(short) < len(word):
                word = short
        except ReductionError:
            pass
    _BOUNDED_CACHE[key] = tuple(word)
    return list(word)


def edge_word(g: GroupElement, shape_a: ParabolicShape, shape_b: ParabolicShape,
              cfg: Config | None = None):
    """Macro word for an edge element that lies in the intersection parabolic:
    ordered coefficient letters over chi(N) (plain runs at positions block
    diagonal for either adjacent shape, shortcut tokens elsewhere) followed by
    a bounded plain word for the reductive part."""
    cfg = cfg or DEFAULT
    if g.is_identity():
        return []
    inter = shape_a.refine(shape_b)
    npart, mpart = parabolic_decompose(g, inter)
    plain_pairs = shape_a.chi_M() | shape_b.chi_M()
    w1 = []
    rows = inter.chi_N_row_blocks()
    for q in range(inter.num_blocks, 0, -1):
        for (a, b) in rows[q]:
            x = npart.entry(a, b)
            if not x:
                continue
            if (a, b) in plain_pairs:
                if abs(x) > cfg.plain_entry_cap:
                    raise MembershipError(
                        f"entry {x} at block-diagonal position {(a, b)} exceeds "
                        f"the bounded-part cap {cfg.plain_entry_cap}")
                s = 1 if x > 0 else -1
                w1.extend([("e", a, b, s)] * abs(x))
            else:
                w1.append(("E", a, b, x))
    w2 = bounded_word(mpart, inter, cfg)
    return w1 + w2
