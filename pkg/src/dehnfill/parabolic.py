"""Standard parabolic shapes: ordered block-size compositions of n.

A shape U(d_1,...,d_r) is stored as its composition; the split set
{d_1, d_1+d_2, ...} (excluding n) determines it, and refinement of shapes is
union of split sets. Index-pair classes:

  chi_M: (i, j), i != j, same block          (block-diagonal directions)
  chi_N: (i, j), block(i) < block(j)         (block-unipotent directions)
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ParabolicShape:
    n: int
    composition: tuple

    def __post_init__(self):
        if sum(self.composition) != self.n or any(d <= 0 for d in self.composition):
            raise ValueError(f"bad composition {self.composition} for n={self.n}")

    @classmethod
    def from_splits(cls, n, splits):
        """Shape with block boundaries after the listed indices (1-based)."""
        cuts = sorted(set(splits))
        if any(not 1 <= s < n for s in cuts):
            raise ValueError(f"bad split set {splits}")
        sizes = []
        prev = 0
        for s in cuts + [n]:
            sizes.append(s - prev)
            prev = s
        return cls(n, tuple(sizes))

    @classmethod
    def full(cls, n):
        """The whole group: a single block."""
        return cls(n, (n,))

    @classmethod
    def finest(cls, n):
        return cls(n, (1,) * n)

    @property
    def splits(self):
        out = []
        acc = 0
        for d in self.composition[:-1]:
            acc += d
            out.append(acc)
        return tuple(out)

    @property
    def num_blocks(self):
        return len(self.composition)

    def block_of(self, i):
        """1-based block index of coordinate i."""
        acc = 0
        for q, d in enumerate(self.composition, start=1):
            acc += d
            if i <= acc:
                return q
        raise IndexError(i)

    def block_range(self, q):
        """1-based [start, end] of block q."""
        start = 1 + sum(self.composition[:q - 1])
        return start, start + self.composition[q - 1] - 1

    def chi_M(self):
        out = set()
        for q in range(1, self.num_blocks + 1):
            a, b = self.block_range(q)
            for i in range(a, b + 1):
                for j in range(a, b + 1):
                    if i != j:
                        out.add((i, j))
        return out

    def chi_N(self):
        out = set()
        for i in range(1, self.n + 1):
            bi = self.block_of(i)
            for j in range(1, self.n + 1):
                if self.block_of(j) > bi:
                    out.add((i, j))
        return out

    def chi_N_row_blocks(self):
        """chi_N split by row block: {q: sorted pairs with row in block q}."""
        out = {q: [] for q in range(1, self.num_blocks + 1)}
        for (i, j) in sorted(self.chi_N()):
            out[self.block_of(i)].append((i, j))
        return out

    def refine(self, other: "ParabolicShape") -> "ParabolicShape":
        """Shape of the intersection subgroup (union of the split sets)."""
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return ParabolicShape.from_splits(self.n, set(self.splits) | set(other.splits))

    def coarsens(self, other: "ParabolicShape") -> bool:
        return set(self.splits) <= set(other.splits)

    def contains_matrix(self, g) -> bool:
        """Membership of a GroupElement in the block upper triangular subgroup."""
        for i in range(1, self.n + 1):
            for j in range(1, self.n + 1):
                if self.block_of(i) > self.block_of(j) and g.entry(i, j) != 0:
                    return False
        return True

    def __str__(self):
        return "U(" + ",".join(map(str, self.composition)) + ")"
