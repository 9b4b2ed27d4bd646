"""Partitioned parameter vector ``[shared, source_0 .. source_{N-1}, target]``.

Blocks are addressed by ``"shared"``, ``"target"`` or an integer source index.
All blocks live in one flat float64 array; a :class:`ParamVector` is immutable
and every update returns a new one.

A layout without source blocks (``N == 0``) still exposes source ``0`` as an
empty block. Pure two-objective problems such as ZDT-1 use this: the first
objective is owned by that empty source block, the second by the target.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

Owner = Union[int, str]  # source index or "target"
Block = Union[int, str]  # Owner or "shared"


@dataclass(frozen=True)
class ParamLayout:
    shared_dim: int
    source_dims: tuple[int, ...] = ()
    target_dim: int = 0

    def __post_init__(self):
        object.__setattr__(self, "source_dims", tuple(int(d) for d in self.source_dims))
        dims = (self.shared_dim, self.target_dim, *self.source_dims)
        if any(int(d) != d or d < 0 for d in dims):
            raise ValueError(f"block dimensions must be nonnegative integers: {dims}")

    @property
    def n_sources(self) -> int:
        return len(self.source_dims)

    @property
    def total_dim(self) -> int:
        return self.shared_dim + sum(self.source_dims) + self.target_dim

    @property
    def owners(self) -> list[Owner]:
        return [*range(max(self.n_sources, 1)), "target"]

    def check_owner(self, owner: Owner) -> None:
        if owner == "shared":
            raise ValueError("the shared block cannot own an objective")
        self.span(owner)

    def span(self, block: Block) -> tuple[int, int]:
        """Half-open ``(start, stop)`` range of a block in the flat vector."""
        if block == "shared":
            return 0, self.shared_dim
        if block == "target":
            start = self.total_dim - self.target_dim
            return start, self.total_dim
        if isinstance(block, (int, np.integer)) and not isinstance(block, bool):
            if self.n_sources == 0 and block == 0:
                return self.shared_dim, self.shared_dim
            if 0 <= block < self.n_sources:
                start = self.shared_dim + sum(self.source_dims[:block])
                return start, start + self.source_dims[block]
        raise KeyError(f"unknown block {block!r} for layout {self}")

    def block_dim(self, block: Block) -> int:
        start, stop = self.span(block)
        return stop - start

    def header(self) -> str:
        src = ",".join(str(d) for d in self.source_dims)
        return f"layout sh={self.shared_dim} src={src} tgt={self.target_dim}"

    @classmethod
    def from_header(cls, line: str) -> "ParamLayout":
        parts = line.split()
        if len(parts) != 4 or parts[0] != "layout":
            raise ValueError(f"bad layout header: {line!r}")
        fields = dict(part.split("=", 1) for part in parts[1:])
        src = fields["src"]
        return cls(
            int(fields["sh"]),
            tuple(int(d) for d in src.split(",")) if src else (),
            int(fields["tgt"]),
        )


@dataclass(frozen=True, eq=False)
class ParamVector:
    layout: ParamLayout
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.size != self.layout.total_dim:
            raise ValueError(f"expected {self.layout.total_dim} values, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("parameter values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, layout: ParamLayout) -> "ParamVector":
        return cls(layout, np.zeros(layout.total_dim))

    def block(self, block: Block) -> np.ndarray:
        start, stop = self.layout.span(block)
        return self.values[start:stop]

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class GradSlices:
    """Gradient of one domain objective: shared part plus the owner's block."""

    layout: ParamLayout
    g_shared: np.ndarray
    g_specific: np.ndarray
    owner: Owner

    def __post_init__(self):
        g_sh = np.asarray(self.g_shared, dtype=np.float64).reshape(-1)
        g_spec = np.asarray(self.g_specific, dtype=np.float64).reshape(-1)
        if g_sh.size != self.layout.shared_dim:
            raise ValueError(f"shared gradient has {g_sh.size} entries, layout wants {self.layout.shared_dim}")
        if g_spec.size != self.layout.block_dim(self.owner):
            raise ValueError(
                f"specific gradient has {g_spec.size} entries, block {self.owner!r} "
                f"has {self.layout.block_dim(self.owner)}"
            )
        object.__setattr__(self, "g_shared", g_sh)
        object.__setattr__(self, "g_specific", g_spec)

    def embed_full(self) -> np.ndarray:
        return embed_full(self)

    def sq_norm(self) -> float:
        return float(self.g_shared @ self.g_shared + self.g_specific @ self.g_specific)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.g_shared)) and np.all(np.isfinite(self.g_specific)))


def slice(p: ParamVector, block: Block) -> np.ndarray:  # noqa: A001 - mirrors the block-slicing vocabulary
    return p.block(block).copy()


def embed_full(g: GradSlices) -> np.ndarray:
    out = np.zeros(g.layout.total_dim)
    out[: g.layout.shared_dim] = g.g_shared
    start, stop = g.layout.span(g.owner)
    out[start:stop] = g.g_specific
    return out


def block_perturb(p: ParamVector, block: Block, delta) -> ParamVector:
    start, stop = p.layout.span(block)
    delta = np.asarray(delta, dtype=np.float64).reshape(-1)
    if delta.size != stop - start:
        raise ValueError(f"delta has {delta.size} entries, block {block!r} has {stop - start}")
    values = p.values.copy()
    values[start:stop] += delta
    return ParamVector(p.layout, values)


def dump_params(p: ParamVector, path) -> None:
    lines = [p.layout.header()] + [format(float(v), ".17g") for v in p.values]
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path) -> ParamVector:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty parameter file")
    layout = ParamLayout.from_header(lines[0])
    return ParamVector(layout, np.array([float(v) for v in lines[1:] if v.strip()]))
