"""Run configuration: the tunable constants shared by all subsystems.

Most of these are measured rather than derived; ``calibrate`` (see cli.py)
re-measures the empirical ones and writes a config file that the other
subcommands can consume via ``--config`` or the DEHNFILL_CONFIG env var.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace


@dataclass(frozen=True)
class Config:
    # shortcut scheme
    seed_matrix: tuple = ((2, 1), (1, 1))  # hyperbolic seed in SL(2,Z), trace 3
    c_short: int = 48          # frozen length constant: len <= c_short*(1+log2(|x|+1))
    shortcut_plain_cap: int = 3  # |x| at or below this emits a plain run

    # certificate cost model
    c_mm: int = 1              # macro-move cost multiplier
    atomic_len: int = 48       # L0: max length removable by one AtomicFill
    # (cells of the coning mesh have three sides, each a bounded label-jump
    #  word that can reach ~12-14 letters at Siegel tile boundaries)

    # Siegel reduction / classification
    lll_delta: float = 0.51    # Lovasz parameter; eps_S = sqrt(delta - 1/4)
    # (aggressive delta sorts float-noise-level ties into permutations and
    #  destabilizes labels of nearby points; 0.51 swaps only on genuine
    #  hierarchy, at the price of the weaker Siegel ratio eps_S ~ 0.51)
    t0: int = 2 ** 16          # parabolic gap threshold
    coarsen_base: int = 16     # t multiplier per fallback level
    coarsen_max: int = 6       # max fallback levels before hard failure

    # word search
    bfs_radius: int = 12       # m_word search radius (total, bidirectional)
    bfs_budget: int = 1_000_000  # max states explored per search
    plain_entry_cap: int = 64  # max |entry| written as a plain run in edge words

    # short vector enumeration
    enum_budget: int = 1_000_000

    # loop sampling
    samples_per_edge: int = 1

    # frozen empirical constants (re-measured by `calibrate`)
    c_rho_frozen: int = 12     # bound on norm_inf of edge reductive parts
    c_nlog_frozen: float = 8.0  # log2 norm_inf(nPart) <= c_nlog*(radius+1)

    @property
    def eps_siegel(self) -> float:
        return (self.lll_delta - 0.25) ** 0.5

    def with_overrides(self, **kw) -> "Config":
        kw = {k: v for k, v in kw.items() if v is not None}
        if not kw:
            return self
        return replace(self, **kw)

    def to_json(self) -> str:
        d = asdict(self)
        d["seed_matrix"] = [list(r) for r in self.seed_matrix]
        return json.dumps(d, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Config":
        d = json.loads(text)
        if "seed_matrix" in d:
            d["seed_matrix"] = tuple(tuple(int(v) for v in r) for r in d["seed_matrix"])
        return cls(**d)

    @classmethod
    def load(cls, path: str | None = None) -> "Config":
        """Config from an explicit path, else DEHNFILL_CONFIG, else defaults."""
        path = path or os.environ.get("DEHNFILL_CONFIG")
        if path:
            with open(path) as fh:
                return cls.from_json(fh.read())
        return cls()


DEFAULT = Config()
