"""Words over the elementary/diagonal generating set, plus macro words.

Letter encoding (plain tuples, hashable):
  ('e', i, j, s)   elementary generator e_ij^s with s in {+1,-1}, 1-based i != j
  ('d', signs)     a diagonal generator, signs a tuple of +-1 with even -1 count
  ('E', i, j, x)   shortcut token for e_ij(x), arbitrary integer x

Shortcut tokens are macro letters; a word is *plain* when it contains none.
By construction (see shortcuts.shortcut_word) the expansion of ('E',i,j,-x)
is the exact reversed inverse of the expansion of ('E',i,j,x), so the formal
inverse of a shortcut token is the token with negated coefficient and free
cancellation of such pairs is genuine free reduction.
"""

from __future__ import annotations

from . import kernels
from .intmat import GroupElement


def elem(i, j, s=1):
    return ("e", i, j, s)


def diag(signs):
    return ("d", tuple(signs))


def shortcut(i, j, x):
    return ("E", i, j, int(x))


def check_letter(letter, n):
    kind = letter[0]
    if kind == "e":
        _, i, j, s = letter
        if not (1 <= i <= n and 1 <= j <= n and i != j and s in (1, -1)):
            raise ValueError(f"bad elementary letter {letter}")
    elif kind == "d":
        signs = letter[1]
        if len(signs) != n or any(s not in (1, -1) for s in signs) \
                or signs.count(-1) % 2:
            raise ValueError(f"bad diagonal letter {letter}")
    elif kind == "E":
        _, i, j, x = letter
        if not (1 <= i <= n and 1 <= j <= n and i != j):
            raise ValueError(f"bad shortcut letter {letter}")
    else:
        raise ValueError(f"unknown letter {letter}")


def check_word(word, n, allow_macro=True):
    for letter in word:
        check_letter(letter, n)
        if not allow_macro and letter[0] == "E":
            raise ValueError("macro letter in plain word context")


def inverse_letter(letter):
    kind = letter[0]
    if kind == "e":
        return ("e", letter[1], letter[2], -letter[3])
    if kind == "d":
        return letter
    return ("E", letter[1], letter[2], -letter[3])


def is_plain(word):
    return all(letter[0] != "E" for letter in word)


def word_to_ops(word):
    """Kernel op encoding (0-based column operations)."""
    ops = []
    for letter in word:
        kind = letter[0]
        if kind == "e":
            ops.append((0, letter[1] - 1, letter[2] - 1, letter[3]))
        elif kind == "E":
            ops.append((0, letter[1] - 1, letter[2] - 1, letter[3]))
        else:
            ops.append((1, letter[1]))
    return ops


def evaluate(word, n) -> GroupElement:
    """Exact product of the letter matrices; the empty word gives the identity."""
    return GroupElement._wrap(kernels.eval_ops(word_to_ops(word), n))


def evaluates_to_identity(word, n) -> bool:
    return kernels.is_identity_ops(word_to_ops(word), n)


def concat(*parts):
    out = []
    for p in parts:
        out.extend(p)
    return out


def invert_word(word):
    return [inverse_letter(letter) for letter in reversed(word)]


def free_reduce(word):
    """Delete adjacent inverse pairs until none remain."""
    stack = []
    for letter in word:
        if stack and stack[-1] == inverse_letter(letter):
            stack.pop()
        else:
            stack.append(letter)
    return stack


def free_reduce_steps(word):
    """Like free_reduce but also returns replayable FreeDelete positions."""
    stack = []
    steps = []
    for letter in word:
        if stack and stack[-1] == inverse_letter(letter):
            stack.pop()
            steps.append(("del", len(stack)))
        else:
            stack.append(letter)
    return stack, steps


def word_length(word) -> int:
    return len(word)


def expand(word, n, cfg=None):
    """Replace every shortcut token by its primitive shortcut word."""
    from . import shortcuts  # deferred: shortcuts imports this module

    out = []
    for letter in word:
        if letter[0] == "E":
            out.extend(shortcuts.shortcut_word(letter[1], letter[2], letter[3], n,
                                               cfg=cfg))
        else:
            out.append(letter)
    return out


# --- text format -----------------------------------------------------------
# one word per line, whitespace-separated tokens:
#   e{i},{j}   e{i},{j}^-1   d[{+-1},...,{+-1}]   E{i},{j}[{decimal x}]

def format_letter(letter) -> str:
    kind = letter[0]
    if kind == "e":
        _, i, j, s = letter
        return f"e{i},{j}" if s == 1 else f"e{i},{j}^-1"
    if kind == "d":
        return "d[" + ",".join("+1" if s == 1 else "-1" for s in letter[1]) + "]"
    _, i, j, x = letter
    return f"E{i},{j}[{x}]"


def format_word(word) -> str:
    return " ".join(format_letter(letter) for letter in word)


def parse_letter(tok: str):
    if tok.startswith("e"):
        body = tok[1:]
        s = 1
        if body.endswith("^-1"):
            s = -1
            body = body[:-3]
        i_str, j_str = body.split(",")
        return ("e", int(i_str), int(j_str), s)
    if tok.startswith("d["):
        if not tok.endswith("]"):
            raise ValueError(f"bad diagonal token {tok!r}")
        signs = tuple(int(p) for p in tok[2:-1].split(","))
        return ("d", signs)
    if tok.startswith("E"):
        body, _, coeff = tok[1:].partition("[")
        if not coeff.endswith("]"):
            raise ValueError(f"bad shortcut token {tok!r}")
        i_str, j_str = body.split(",")
        return ("E", int(i_str), int(j_str), int(coeff[:-1]))
    raise ValueError(f"unknown token {tok!r}")


def parse_word(text: str):
    return [parse_letter(tok) for tok in text.split()]
