"""Logarithmic shortcut words, macro-move schemas, and the unipotent filler.

Shortcut scheme. A coefficient x is reached in O(log|x|) letters by writing
the target column vector in a matrix numeration system: embed a hyperbolic
seed A in SL({i,d},Z) for an auxiliary index d, use the conjugation identity
A^k u(v) A^-k = u(A^k v) on the column pair ((i,j),(d,j)), and expand
A^m (x,0) greedily in the A-orbit with digit vectors bounded by D_max.  The
conjugates telescope, so the word is

    A^-m u(d_0) A u(d_1) A ... A u(d_M) A^(m-M)

of length O(M) = O(log|x|).  The greedy digit choice minimizes the component
along the contracting eigendirection of A (compared exactly in Z[sqrt(disc)]),
which keeps remainders bounded; the expanding component contracts by 1/lambda
per digit regardless of choice.  Negative coefficients take the exact
reversed inverse of the positive word, so shortcut tokens with opposite
coefficients are formal inverses of each other.
"""

from __future__ import annotations

from functools import lru_cache

from .config import DEFAULT, Config
from .parabolic import ParabolicShape
from .presentation import Certificate, CostModel, Scribe, s_word
from .words import (concat, evaluate, evaluates_to_identity, inverse_letter,
                    invert_word)


class EngineError(RuntimeError):
    pass


# --- exact arithmetic in Z[sqrt(disc)] ---------------------------------------

def _sign_sqrt(p, q, disc):
    """Sign of p + q*sqrt(disc), exactly."""
    if p >= 0 and q >= 0:
        return 1 if (p or q) else 0
    if p <= 0 and q <= 0:
        return -1 if (p or q) else 0
    if p > 0:
        lhs, rhs = p * p, disc * q * q
    else:
        lhs, rhs = disc * q * q, p * p
    if lhs > rhs:
        return 1
    if lhs < rhs:
        return -1
    return 0


def _abs_cmp_sqrt(a, b, disc):
    """Compare |a1 + a2*sqrt(disc)| with |b1 + b2*sqrt(disc)| exactly."""
    sa = (a[0] * a[0] + disc * a[1] * a[1], 2 * a[0] * a[1])
    sb = (b[0] * b[0] + disc * b[1] * b[1], 2 * b[0] * b[1])
    return _sign_sqrt(sa[0] - sb[0], sa[1] - sb[1], disc)


# --- shortcut scheme ----------------------------------------------------------

class ShortcutScheme:
    """Frozen data for shortcut construction with a given seed matrix."""

    def __init__(self, seed=((2, 1), (1, 1)), plain_cap=3):
        (a, b), (c, d) = seed
        if a * d - b * c != 1:
            raise ValueError("seed must lie in SL(2,Z)")
        if a + d <= 2:
            raise ValueError("seed must have trace > 2")
        self.seed = ((a, b), (c, d))
        self.inv_seed = ((d, -b), (-c, a))
        self.trace = a + d
        self.disc = self.trace * self.trace - 4
        # digit entries bounded by ceil(lambda); lambda < trace
        lam_ceil = self.trace
        while (2 * lam_ceil - self.trace) ** 2 > self.disc and lam_ceil > 1:
            lam_ceil -= 1
        self.digit_max = lam_ceil + 1
        self.plain_cap = plain_cap
        self._digit_box = [(d1, d2)
                           for d1 in range(-self.digit_max, self.digit_max + 1)
                           for d2 in range(-self.digit_max, self.digit_max + 1)]

    def _contract_form(self, v):
        """(p, q) with p + q*sqrt(disc) proportional to the contracting
        eigencoordinate of v."""
        (a, b), _ = self.seed
        return ((self.trace - 2 * a) * v[0] - 2 * b * v[1], v[0])

    def _apply(self, mat, v):
        (a, b), (c, d) = mat
        return (a * v[0] + b * v[1], c * v[0] + d * v[1])

    def digits(self, x):
        """MSD shift m and LSD-first digit vectors: sum_k A^k d_k = A^m (x,0)."""
        if x <= 0:
            raise ValueError("digits defined for positive x")
        thresh = self.digit_max * (self.trace - 1)
        v = (x, 0)
        m = 0
        cap = 6 * x.bit_length() + 96
        while True:
            p, q = self._contract_form(v)
            if _sign_sqrt(p - thresh, q, self.disc) <= 0 \
                    and _sign_sqrt(p + thresh, q, self.disc) >= 0:
                break
            v = self._apply(self.seed, v)
            m += 1
            if m > cap:
                raise EngineError("seed matrix failed to balance target; recalibrate")
        target = v
        digits = []
        guard = 0
        while max(abs(v[0]), abs(v[1])) > self.digit_max:
            best = None
            best_key = None
            for dg in self._digit_box:
                u = (v[0] - dg[0], v[1] - dg[1])
                form = self._contract_form(u)
                if best is None:
                    best, best_key, best_u = dg, form, u
                    continue
                cmp = _abs_cmp_sqrt(form, best_key, self.disc)
                if cmp < 0 or (cmp == 0 and
                               (max(abs(u[0]), abs(u[1])), dg)
                               < (max(abs(best_u[0]), abs(best_u[1])), best)):
                    best, best_key, best_u = dg, form, u
            digits.append(best)
            v = self._apply(self.inv_seed, (v[0] - best[0], v[1] - best[1]))
            guard += 1
            if guard > cap:
                raise EngineError("digit expansion did not terminate; recalibrate")
        if v != (0, 0) or not digits:
            digits.append(v)
        # exact reconstruction check: fold back up and compare
        acc = digits[-1]
        for dg in reversed(digits[:-1]):
            acc = self._apply(self.seed, acc)
            acc = (acc[0] + dg[0], acc[1] + dg[1])
        if acc != target:
            raise EngineError("digit expansion reconstruction mismatch")
        return m, digits


def _two_by_two_word(mat, i, d):
    """Plain word over rows/cols {i, d} evaluating to the embedded 2x2 matrix.

    Reduces the matrix to the identity by right column operations (Euclid on
    the bottom row, sign fix through the rotation word); the recorded
    operations, inverted and reversed, spell the matrix.
    """
    m = tuple(tuple(int(v) for v in row) for row in mat)
    ops = []  # right-multiplications that reduce mat to I

    def rmul_e12(t, mm):
        (a, b), (c, dd) = mm
        return ((a, b + t * a), (c, dd + t * c))

    def rmul_e21(t, mm):
        (a, b), (c, dd) = mm
        return ((a + t * b, b), (c + t * dd, dd))

    guard = 0
    while m[1][0] != 0:
        guard += 1
        if guard > 128:
            raise ValueError("seed reduction did not terminate")
        c, dd = m[1]
        if dd == 0:
            ops.append(("12", 1))
            m = rmul_e12(1, m)
            continue
        q = c // dd
        if c % dd == 0 and q != 0:
            ops.append(("21", -q))
            m = rmul_e21(-q, m)
        elif q != 0:
            ops.append(("21", -q))
            m = rmul_e21(-q, m)
        else:
            # |c| < |dd|: swap roles via the rotation
            ops.append(("s", 1))
            (a, b), (c2, d2) = m
            m = ((-b, a), (-d2, c2))
    if m[0][0] == -1:
        ops.append(("s", 2))
        (a, b), (c2, d2) = m
        m = ((-b, a), (-d2, c2))
        (a, b), (c2, d2) = m
        m = ((-b, a), (-d2, c2))
    if m[0][1] != 0:
        ops.append(("12", -m[0][1]))
        m = rmul_e12(-m[0][1], m)
    if m != ((1, 0), (0, 1)):
        raise ValueError(f"seed reduction failed: {m}")
    letters = []
    for kind, t in reversed(ops):
        if kind == "s":
            w = s_word(i, d) * t
            letters.extend(invert_word(w))
        elif kind == "12":
            sgn = 1 if t > 0 else -1
            letters.extend([("e", i, d, -sgn)] * abs(t))
        else:
            sgn = 1 if t > 0 else -1
            letters.extend([("e", d, i, -sgn)] * abs(t))
    return letters


_SCHEME_CACHE: dict = {}


def get_scheme(cfg: Config | None = None) -> ShortcutScheme:
    cfg = cfg or DEFAULT
    key = (cfg.seed_matrix, cfg.shortcut_plain_cap)
    sch = _SCHEME_CACHE.get(key)
    if sch is None:
        sch = ShortcutScheme(cfg.seed_matrix, cfg.shortcut_plain_cap)
        _SCHEME_CACHE[key] = sch
    return sch


def aux_index(i, j, n):
    """Deterministic auxiliary index: the smallest index outside {i, j}."""
    for d in range(1, n + 1):
        if d != i and d != j:
            return d
    raise ValueError("need n >= 3")


@lru_cache(maxsize=65536)
def _shortcut_word_default(i, j, x, n):
    return tuple(_build_shortcut(i, j, x, n, get_scheme(None)))


def shortcut_word(i, j, x, n, cfg: Config | None = None):
    """Plain word evaluating to e_ij(x), length <= c_short*(1+log2(|x|+1))."""
    if not (1 <= i <= n and 1 <= j <= n and i != j):
        raise ValueError("need 1 <= i != j <= n")
    if n < 3:
        raise ValueError("shortcut words need n >= 3")
    x = int(x)
    if cfg is None or (cfg.seed_matrix, cfg.shortcut_plain_cap) == \
            (DEFAULT.seed_matrix, DEFAULT.shortcut_plain_cap):
        if abs(x) <= 2 ** 128:
            return list(_shortcut_word_default(i, j, x, n))
        return _build_shortcut(i, j, x, n, get_scheme(None))
    return _build_shortcut(i, j, x, n, get_scheme(cfg))


def _build_shortcut(i, j, x, n, sch: ShortcutScheme):
    if x == 0:
        return []
    if x < 0:
        return invert_word(_build_shortcut(i, j, -x, n, sch))
    if x <= sch.plain_cap:
        return [("e", i, j, 1)] * x
    d = aux_index(i, j, n)
    a_word = _two_by_two_word(sch.seed, i, d)
    a_inv = invert_word(a_word)
    m, digits = sch.digits(x)

    def u_word(dg):
        w = []
        if dg[0]:
            s = 1 if dg[0] > 0 else -1
            w.extend([("e", i, j, s)] * abs(dg[0]))
        if dg[1]:
            s = 1 if dg[1] > 0 else -1
            w.extend([("e", d, j, s)] * abs(dg[1]))
        return w

    out = []
    for _ in range(m):
        out.extend(a_inv)
    out.extend(u_word(digits[0]))
    for dg in digits[1:]:
        out.extend(a_word)
        out.extend(u_word(dg))
    tail = len(digits) - 1 - m
    closer = a_inv if tail > 0 else a_word
    for _ in range(abs(tail)):
        out.extend(closer)
    return out


def shortcut_length_bound(x, cfg: Config | None = None):
    import math

    cfg = cfg or DEFAULT
    return cfg.c_short * (1 + math.log2(abs(x) + 1))


# --- block-unipotent normal form ---------------------------------------------

def nu_normal_form(u, shape: ParabolicShape):
    """nu_P(u): ordered shortcut tokens (row blocks descending, row-major
    within each block) whose product is the block-unipotent element u."""
    n = shape.n
    if u.n != n:
        raise ValueError("dimension mismatch")
    chi_n = shape.chi_N()
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            v = u.entry(i, j)
            if i == j:
                if v != 1:
                    raise ValueError("not block-unitriangular for this shape")
            elif (i, j) not in chi_n and v != 0:
                raise ValueError("nonzero entry outside chi(N_P)")
    out = []
    rows = shape.chi_N_row_blocks()
    for q in range(shape.num_blocks, 0, -1):
        for (a, b) in rows[q]:
            v = u.entry(a, b)
            if v:
                out.append(("E", a, b, v))
    return out


nu_P = nu_normal_form


# --- macro move schemas -------------------------------------------------------

SCHEMAS = ("add", "mul", "commute", "swapconj", "diagconj", "uni", "conj")


def _coeff_pattern(i, j, x):
    return ("C", i, j, x)


def pattern_matches(pat, letter):
    if pat[0] == "C":
        _, i, j, x = pat
        if letter[0] == "E":
            return letter[1] == i and letter[2] == j and letter[3] == x
        if letter[0] == "e":
            return x in (1, -1) and letter[1] == i and letter[2] == j \
                and letter[3] == x
        return False
    return pat == letter


def _like(template, i, j, x):
    """Coefficient letter preserving plain form when possible."""
    if template[0] == "e" and x in (1, -1):
        return ("e", i, j, x)
    return ("E", i, j, x)


def schema_fragments(schema, params, n):
    """(lhs pattern, rhs builder) for a macro move; raises ValueError on any
    violated index constraint. The rhs builder maps the matched letters to
    the replacement letters."""
    if schema == "add":
        i, j, x, y = params
        if i == j or x == 0 or y == 0:
            raise ValueError("add needs i != j and nonzero coefficients")
        lhs = [_coeff_pattern(i, j, x), _coeff_pattern(i, j, y)]
        rhs = [] if x + y == 0 else [("E", i, j, x + y)]
        return lhs, lambda got: list(rhs)
    if schema == "mul":
        i, j, k, x, y = params
        if len({i, j, k}) != 3 or x == 0 or y == 0:
            raise ValueError("mul needs distinct i,j,k and nonzero coefficients")
        lhs = [_coeff_pattern(i, j, x), _coeff_pattern(j, k, y),
               _coeff_pattern(i, j, -x), _coeff_pattern(j, k, -y)]
        return lhs, lambda got: [("E", i, k, x * y)]
    if schema == "commute":
        i, j, k, l, x, y = params
        if i == l or j == k:
            raise ValueError("commute needs i != l and j != k")
        if i == j or k == l:
            raise ValueError("bad indices")
        lhs = [_coeff_pattern(i, j, x), _coeff_pattern(k, l, y)]
        return lhs, lambda got: [got[1], got[0]]
    if schema == "uni":
        a, b, d, x, y = params
        if len({a, b, d}) != 3 or x == 0 or y == 0:
            raise ValueError("uni needs distinct a,b,d and nonzero coefficients")
        lhs = [_coeff_pattern(a, b, x), _coeff_pattern(b, d, y)]
        return lhs, lambda got: [got[1], ("E", a, d, x * y), got[0]]
    if schema == "swapconj":
        i, j, k, l, x = params
        if i == j or k == l:
            raise ValueError("bad indices")
        perm = {i: j, j: i}
        sk = perm.get(k, k)
        sl = perm.get(l, l)
        tau = -1 if (k == i or l == i) else 1
        sw = s_word(i, j)
        lhs = list(sw) + [_coeff_pattern(k, l, x)] + invert_word(sw)
        val = tau * x
        return lhs, lambda got: ([] if val == 0
                                 else [_like(got[3], sk, sl, val)])
    if schema == "diagconj":
        signs, i, j, x = params
        if i == j or len(signs) != n or any(s not in (1, -1) for s in signs) \
                or signs.count(-1) % 2:
            raise ValueError("bad diagonal conjugation")
        dl = ("d", tuple(signs))
        lhs = [dl, _coeff_pattern(i, j, x), dl]
        val = signs[i - 1] * signs[j - 1] * x
        return lhs, lambda got: ([] if val == 0 else [_like(got[1], i, j, val)])
    if schema == "conj":
        gamma, i, j, x, rhs = params
        gamma = list(gamma)
        if not 1 <= len(gamma) <= 8:
            raise ValueError("conjugator length must be 1..8")
        if any(letter[0] == "E" for letter in gamma):
            raise ValueError("conjugator must be plain")
        if len(rhs) > 2 * n * n:
            raise ValueError("conjugation rebase output too long")
        lhs = gamma + [_coeff_pattern(i, j, x)] + invert_word(gamma)
        return lhs, lambda got: list(rhs)
    raise ValueError(f"unknown schema {schema!r}")


def schema_cost_params(schema, params):
    """('xy', x, y) or ('conj', len_gamma, x) for the cost formula."""
    if schema in ("add", "mul", "commute", "uni"):
        return ("xy", params[-2], params[-1])
    if schema == "swapconj":
        return ("xy", params[4], 0)
    if schema == "diagconj":
        return ("xy", params[3], 0)
    if schema == "conj":
        return ("conj", len(params[0]), params[3])
    raise ValueError(f"unknown schema {schema!r}")


def macro_add(i, j, x, y, pos=0):
    return ("mm", "add", pos, (i, j, x, y))


def macro_mul(i, j, k, x, y, pos=0):
    return ("mm", "mul", pos, (i, j, k, x, y))


def macro_commute(i, j, k, l, x, y, pos=0):
    return ("mm", "commute", pos, (i, j, k, l, x, y))


def macro_swap(i, j, k, l, x, pos=0):
    return ("mm", "swapconj", pos, (i, j, k, l, x))


def macro_diag(signs, i, j, x, pos=0):
    return ("mm", "diagconj", pos, (tuple(signs), i, j, x))


def macro_conj(gamma, i, j, x, rhs, pos=0):
    return ("mm", "conj", pos, (tuple(gamma), i, j, x, tuple(rhs)))


# --- the unipotent filler -----------------------------------------------------

def _coeff_info(letter):
    if letter[0] in ("e", "E"):
        return letter[1], letter[2], letter[3]
    raise EngineError(f"not a coefficient letter: {letter}")


def normalize_nu_region(scribe: Scribe, start, end, shape: ParabolicShape):
    """Rewrite the coefficient letters in [start, end) into nu_P form.

    Selection sort into canonical order (row block descending, then row-major)
    using commute swaps and the spawn move, then merge equal index pairs.
    Returns the new end position.
    """
    scribe.ed.seek(start)
    seg = scribe.ed.peek(end - start)
    key_cache = {}

    def key(letter):
        i, j, x = _coeff_info(letter)
        k = key_cache.get((i, j))
        if k is None:
            k = (-shape.block_of(i), i, j)
            key_cache[(i, j)] = k
        return k

    guard = 0
    sorted_len = 0
    while sorted_len < len(seg):
        best_rel = 0
        best_key = key(seg[sorted_len])
        for rel in range(1, len(seg) - sorted_len):
            k = key(seg[sorted_len + rel])
            if k < best_key:
                best_key = k
                best_rel = rel
        cur = sorted_len + best_rel
        while cur > sorted_len:
            guard += 1
            if guard > 100000:
                raise EngineError("normalization did not terminate")
            t_left = seg[cur - 1]
            t_mov = seg[cur]
            a1, b1, x1 = _coeff_info(t_left)
            a2, b2, x2 = _coeff_info(t_mov)
            pos = start + cur - 1
            if b1 == a2:
                scribe.mm("uni", pos, (a1, b1, b2, x1, x2))
                seg[cur - 1:cur + 1] = [t_mov, ("E", a1, b2, x1 * x2), t_left]
            else:
                scribe.mm("commute", pos, (a1, b1, a2, b2, x1, x2))
                seg[cur - 1], seg[cur] = t_mov, t_left
            cur -= 1
        sorted_len += 1
    p = 0
    while p + 1 < len(seg):
        i1, j1, x1 = _coeff_info(seg[p])
        i2, j2, x2 = _coeff_info(seg[p + 1])
        if (i1, j1) == (i2, j2):
            scribe.mm("add", start + p, (i1, j1, x1, x2))
            if x1 + x2 == 0:
                seg[p:p + 2] = []
                p = max(p - 1, 0)
            else:
                seg[p:p + 2] = [("E", i1, j1, x1 + x2)]
        else:
            p += 1
    return start + len(seg)


def fill_unipotent(word, shape: ParabolicShape, cfg: Config | None = None,
                   scribe: Scribe | None = None, offset=0) -> Certificate | None:
    """Certificate reducing a null word of chi(N_P) coefficient letters to
    the empty word with macro moves (wedge-by-wedge block normal forms).

    With an external scribe the steps are appended at the given offset and
    None is returned (pipeline mode); otherwise a standalone Certificate is
    produced.
    """
    cfg = cfg or DEFAULT
    if shape.n < 5:
        raise EngineError("unipotent filler needs n >= 5")
    chi_n = shape.chi_N()
    for letter in word:
        i, j, _ = _coeff_info(letter)
        if (i, j) not in chi_n:
            raise EngineError(f"index pair {(i, j)} outside chi(N_P) of {shape}")
    if not evaluates_to_identity(word, shape.n):
        raise EngineError("word does not evaluate to the identity")
    standalone = scribe is None
    if standalone:
        scribe = Scribe(shape.n, list(word), CostModel.from_config(cfg))
    boundary = offset
    remaining = len(word)
    while remaining:
        scribe.ed.seek(boundary)
        letter = scribe.ed.peek(1)[0]
        remaining -= 1
        _, _, x = _coeff_info(letter)
        if x == 0:
            scribe.af(boundary, 1)
            continue
        boundary = normalize_nu_region(scribe, offset, boundary + 1, shape)
    if boundary != offset:
        raise EngineError("unipotent filler left residue")
    if standalone:
        return Certificate(shape.n, list(word), scribe.steps,
                           CostModel.from_config(cfg))
    return None
