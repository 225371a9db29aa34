"""Finite presentation, filling certificates, and the certificate verifier.

A certificate is an initial macro word plus a sequence of steps; replaying
the steps must end at the empty word. Step kinds (plain tuples):

  ('ins', pos, letter)                  free insertion of letter * letter^-1
  ('del', pos)                          free deletion of an inverse pair
  ('rel', pos, rel_id, rot, orient, take)  application of relator rel_id
  ('mm', schema, pos, params)           macro move (see shortcuts.SCHEMAS)
  ('af', pos, length)                   atomic fill: delete a short subword
                                        that evaluates to the identity

Free moves cost 0, relator applications and atomic fills cost 1, macro moves
are charged ceil(c_mm * (log2(|x|+2) + log2(|y|+2))^2) on their coefficient
parameters (quadratic-in-log model; the one declared knob is c_mm).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import words
from .words import (check_letter, evaluate, evaluates_to_identity, format_word,
                    inverse_letter, invert_word, parse_word)


class StepError(ValueError):
    """A certificate step that cannot be applied legally."""


# --- relators ---------------------------------------------------------------

_S_WORD_CACHE = {}


def s_word(i, j):
    """The 3-letter word for the rotation matrix embedded at (i, j)."""
    key = (i, j)
    w = _S_WORD_CACHE.get(key)
    if w is None:
        w = [("e", j, i, -1), ("e", i, j, 1), ("e", j, i, -1)]
        _S_WORD_CACHE[key] = w
    return list(w)


@dataclass(frozen=True)
class Relator:
    kind: str          # 'commute' | 'multiply' | 'torsion' | 'diagexpr'
    params: tuple
    word: tuple        # cyclic word, evaluates to the identity

    def __len__(self):
        return len(self.word)


def _build_relators(n):
    if n < 3:
        raise ValueError("presentation defined for n >= 3")
    rels = []

    def add(kind, params, word):
        if not evaluates_to_identity(word, n):
            raise AssertionError(f"relator {kind}{params} does not evaluate to I")
        rels.append(Relator(kind, params, tuple(word)))

    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    for a, (i, j) in enumerate(pairs):
        for (k, l) in pairs[a + 1:]:
            if i != l and j != k:
                add("commute", (i, j, k, l),
                    [("e", i, j, 1), ("e", k, l, 1), ("e", i, j, -1), ("e", k, l, -1)])
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            for k in range(1, n + 1):
                if len({i, j, k}) == 3:
                    add("multiply", (i, j, k),
                        [("e", i, j, 1), ("e", j, k, 1), ("e", i, j, -1),
                         ("e", j, k, -1), ("e", i, k, -1)])
    for (i, j) in pairs:
        block = [("e", i, j, 1), ("e", j, i, -1), ("e", i, j, 1)]
        add("torsion", (i, j), block * 4)
    for bits in range(2 ** n):
        signs = tuple(-1 if bits & (1 << t) else 1 for t in range(n))
        if signs.count(-1) % 2:
            continue
        neg = [t + 1 for t in range(n) if signs[t] == -1]
        expr = []
        for a in range(0, len(neg), 2):
            i, j = neg[a], neg[a + 1]
            expr.extend(s_word(i, j) + s_word(i, j))
        add("diagexpr", (signs,), [("d", signs)] + invert_word(expr))
    return rels


_RELATORS_CACHE = {}


def relators(n):
    """The complete relator list for dimension n (cached, order-stable)."""
    if n not in _RELATORS_CACHE:
        _RELATORS_CACHE[n] = _build_relators(n)
    return _RELATORS_CACHE[n]


def relator_index(n, kind, params):
    for idx, r in enumerate(relators(n)):
        if r.kind == kind and r.params == params:
            return idx
    raise KeyError((kind, params))


# --- cost model --------------------------------------------------------------

@dataclass(frozen=True)
class CostModel:
    c_mm: int = 1
    atomic_len: int = 24

    @classmethod
    def from_config(cls, cfg):
        return cls(c_mm=cfg.c_mm, atomic_len=cfg.atomic_len)


def _log2p2(x):
    return math.log2(abs(x) + 2)


def step_cost(step, cm: CostModel) -> int:
    kind = step[0]
    if kind in ("ins", "del"):
        return 0
    if kind in ("rel", "af"):
        return 1
    if kind == "mm":
        from . import shortcuts  # deferred; shortcuts imports this module

        mode, a, b = shortcuts.schema_cost_params(step[1], step[3])
        if mode == "conj":
            return math.ceil(cm.c_mm * (a + _log2p2(b)) ** 2)
        return math.ceil(cm.c_mm * (_log2p2(a) + _log2p2(b)) ** 2)
    raise StepError(f"unknown step kind {kind!r}")


# --- word editing -------------------------------------------------------------

class WordEditor:
    """Zipper over the live word: cheap local splices during replay."""

    __slots__ = ("left", "right")

    def __init__(self, word):
        self.left = []
        self.right = list(reversed(word))

    def __len__(self):
        return len(self.left) + len(self.right)

    def seek(self, pos):
        if pos < 0 or pos > len(self):
            raise StepError(f"position {pos} outside word of length {len(self)}")
        left, right = self.left, self.right
        while len(left) > pos:
            right.append(left.pop())
        while len(left) < pos:
            left.append(right.pop())

    def peek(self, count):
        if count > len(self.right):
            raise StepError("fragment extends past end of word")
        return [self.right[-1 - t] for t in range(count)]

    def pop(self, count):
        out = self.peek(count)
        del self.right[len(self.right) - count:]
        return out

    def push(self, letters):
        for letter in reversed(letters):
            self.right.append(letter)

    def to_list(self):
        return self.left + self.right[::-1]


def apply_step(ed: WordEditor, step, n, cm: CostModel) -> int:
    """Apply one step to the live word; returns its cost or raises StepError."""
    kind = step[0]
    if kind == "ins":
        _, pos, letter = step
        try:
            check_letter(letter, n)
        except ValueError as exc:
            raise StepError(str(exc)) from None
        ed.seek(pos)
        ed.push([letter, inverse_letter(letter)])
        return 0
    if kind == "del":
        _, pos = step
        ed.seek(pos)
        a, b = ed.peek(2)
        if b != inverse_letter(a):
            raise StepError(f"letters at {pos} are not an inverse pair")
        ed.pop(2)
        return 0
    if kind == "rel":
        _, pos, rel_id, rot, orient, take = step
        rels = relators(n)
        if not 0 <= rel_id < len(rels):
            raise StepError(f"no relator {rel_id}")
        rword = list(rels[rel_id].word)
        if orient == -1:
            rword = invert_word(rword)
        elif orient != 1:
            raise StepError("orientation must be +-1")
        if not 0 <= rot < len(rword):
            raise StepError("bad rotation")
        rword = rword[rot:] + rword[:rot]
        if not 0 <= take <= len(rword):
            raise StepError("bad take length")
        ed.seek(pos)
        got = ed.peek(take)
        if got != rword[:take]:
            raise StepError("word does not contain the claimed relator prefix")
        ed.pop(take)
        ed.push(invert_word(rword[take:]))
        return 1
    if kind == "mm":
        from . import shortcuts

        _, schema, pos, params = step
        if n < 5:
            raise StepError("macro moves require n >= 5")
        try:
            lhs_pat, rhs_of = shortcuts.schema_fragments(schema, params, n)
        except ValueError as exc:
            raise StepError(f"bad macro move: {exc}") from None
        ed.seek(pos)
        got = ed.peek(len(lhs_pat))
        for pat, letter in zip(lhs_pat, got):
            if not shortcuts.pattern_matches(pat, letter):
                raise StepError(f"fragment letter {letter} does not match {pat}")
        rhs = rhs_of(got)
        for letter in rhs:
            check_letter(letter, n)
        if evaluate(got, n) != evaluate(rhs, n):
            raise StepError("macro move fragments evaluate differently")
        ed.pop(len(lhs_pat))
        ed.push(rhs)
        return step_cost(step, cm)
    if kind == "af":
        _, pos, length = step
        if length > cm.atomic_len:
            raise StepError(f"atomic fill of length {length} exceeds L0={cm.atomic_len}")
        ed.seek(pos)
        got = ed.peek(length)
        if not evaluates_to_identity(got, n):
            raise StepError("atomic fill subword does not evaluate to the identity")
        ed.pop(length)
        return 1
    raise StepError(f"unknown step kind {kind!r}")


# --- certificates -------------------------------------------------------------

@dataclass
class Certificate:
    n: int
    initial: list
    steps: list = field(default_factory=list)
    cost_model: CostModel = field(default_factory=CostModel)

    def to_json_obj(self):
        res = verify(self)
        return {
            "n": self.n,
            "initial": format_word(self.initial),
            "cost_model": {"c_mm": self.cost_model.c_mm,
                           "L0": self.cost_model.atomic_len},
            "steps": [_step_to_json(s) for s in self.steps],
            "total_cost": res.total_cost if res.accepted else None,
        }

    def dump(self, fh):
        json.dump(self.to_json_obj(), fh)
        fh.write("\n")

    @classmethod
    def from_json_obj(cls, obj):
        cm = CostModel(c_mm=obj["cost_model"]["c_mm"],
                       atomic_len=obj["cost_model"]["L0"])
        return cls(n=int(obj["n"]),
                   initial=parse_word(obj["initial"]),
                   steps=[_step_from_json(s) for s in obj["steps"]],
                   cost_model=cm), obj.get("total_cost")

    @classmethod
    def load(cls, fh):
        return cls.from_json_obj(json.load(fh))


def _enc(v):
    if isinstance(v, bool):
        raise TypeError("no booleans in step params")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (tuple, list)):
        return [_enc(t) for t in v]
    return v


def _dec(v):
    if isinstance(v, str):
        try:
            return int(v)
        except ValueError:
            return v
    if isinstance(v, list):
        return tuple(_dec(t) for t in v)
    return v


def _step_to_json(step):
    kind = step[0]
    if kind == "ins":
        return ["ins", step[1], words.format_letter(step[2])]
    if kind == "del":
        return ["del", step[1]]
    if kind == "rel":
        return ["rel", step[1], step[2], step[3], step[4], step[5]]
    if kind == "mm":
        return ["mm", step[1], step[2], _enc(step[3])]
    if kind == "af":
        return ["af", step[1], step[2]]
    raise StepError(f"unknown step kind {kind!r}")


def _step_from_json(obj):
    kind = obj[0]
    if kind == "ins":
        return ("ins", int(obj[1]), words.parse_letter(obj[2]))
    if kind == "del":
        return ("del", int(obj[1]))
    if kind == "rel":
        return ("rel", int(obj[1]), int(obj[2]), int(obj[3]), int(obj[4]),
                int(obj[5]))
    if kind == "mm":
        return ("mm", obj[1], int(obj[2]), _dec(obj[3]))
    if kind == "af":
        return ("af", int(obj[1]), int(obj[2]))
    raise StepError(f"unknown step kind {kind!r}")


@dataclass
class VerifyResult:
    accepted: bool
    total_cost: int
    move_count: int
    reason: str | None = None
    step_index: int | None = None

    def __bool__(self):
        return self.accepted


def verify_steps(n, initial, steps, cost_model: CostModel) -> VerifyResult:
    """Replay steps over the initial word; accept iff the final word is empty.

    `steps` may be any iterable (certificates for large fillings are streamed).
    """
    try:
        words.check_word(initial, n)
    except ValueError as exc:
        return VerifyResult(False, 0, 0, f"bad initial word: {exc}", None)
    ed = WordEditor(list(initial))
    total = 0
    count = 0
    for idx, step in enumerate(steps):
        try:
            total += apply_step(ed, step, n, cost_model)
        except StepError as exc:
            return VerifyResult(False, total, count, str(exc), idx)
        count += 1
    if len(ed) != 0:
        return VerifyResult(False, total, count,
                            f"replay left {len(ed)} letters", None)
    return VerifyResult(True, total, count)


def verify(cert: Certificate) -> VerifyResult:
    return verify_steps(cert.n, cert.initial, cert.steps, cert.cost_model)


class Scribe:
    """Engine-side step builder: applies each step to its own live word (the
    same code path the verifier uses, so emitted certificates replay exactly)
    and forwards it to a sink."""

    def __init__(self, n, word, cost_model: CostModel, sink=None):
        self.n = n
        self.ed = WordEditor(list(word))
        self.cm = cost_model
        self.steps = [] if sink is None else None
        self.sink = sink if sink is not None else self.steps.append
        self.total_cost = 0
        self.move_count = 0

    def emit(self, step):
        self.total_cost += apply_step(self.ed, step, self.n, self.cm)
        self.move_count += 1
        self.sink(step)

    def ins(self, pos, letter):
        self.emit(("ins", pos, letter))

    def insert_pair_word(self, pos, letters):
        """Insert letters + their reversed inverses at pos via nested pairs."""
        for off, letter in enumerate(letters):
            self.emit(("ins", pos + off, letter))

    def dele(self, pos):
        self.emit(("del", pos))

    def rel(self, pos, rel_id, rot=0, orient=1, take=0):
        self.emit(("rel", pos, rel_id, rot, orient, take))

    def mm(self, schema, pos, params):
        self.emit(("mm", schema, pos, params))

    def af(self, pos, length):
        self.emit(("af", pos, length))

    def word(self):
        return self.ed.to_list()
