"""Shifted dyadic lattices and the lattice-restricted maximal function.

Three lattices with mutual shifts of one third of the cube length at every
level make every interval comparable to some lattice cube (the one-third
trick), so suprema over "all cubes" are realized over the union of the
three cube sets. An exhaustive all-intervals oracle is kept behind a flag
for small grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Domain1D, GridFunction


class AlignmentError(ValueError):
    """Cube boundaries cannot be snapped onto grid cell boundaries."""


@dataclass(frozen=True)
class DyadicLattice:
    """One shifted dyadic system over an enlarged root containing the domain.

    The root has length 3 * len(domain); the three shifts delta in
    {0, 1/3, 2/3} of the root length all keep the domain inside the root.
    Cube boundaries land on grid cell boundaries by construction.
    """

    domain: Domain1D
    shift_index: int  # 0, 1 or 2, shift = shift_index / 3 of the root length
    depth: int

    @property
    def shift(self) -> float:
        return self.shift_index / 3.0

    @property
    def root_cells(self) -> int:
        return 3 * self.domain.cells

    @property
    def root_left(self) -> float:
        # base root [left - 2 len, left + len), shifted right by shift * 3 len
        d = self.domain
        return d.left - 2.0 * d.length + self.shift * 3.0 * d.length

    @property
    def offset_cells(self) -> int:
        """Domain-grid cell index of the root's left edge (<= 0)."""
        return -2 * self.domain.cells + self.shift_index * self.domain.cells

    def width_cells(self, level: int) -> int:
        return self.root_cells // (1 << level)

    def cube(self, level: int, index: int) -> "Cube":
        return Cube(self, level, index)

    def cubes(self, min_level: int = 0, max_level: int | None = None,
              intersecting_domain: bool = True):
        """Iterate cubes level by level, optionally only those meeting the domain."""
        top = self.depth if max_level is None else min(max_level, self.depth)
        n = self.domain.cells
        for level in range(min_level, top + 1):
            w = self.width_cells(level)
            for j in range(1 << level):
                start = self.offset_cells + j * w
                if intersecting_domain and (start >= n or start + w <= 0):
                    continue
                yield Cube(self, level, j)


@dataclass(frozen=True)
class Cube:
    lattice: DyadicLattice
    level: int
    index: int

    def __post_init__(self):
        if not 0 <= self.level <= self.lattice.depth:
            raise ValueError("cube level outside lattice depth")
        if not 0 <= self.index < (1 << self.level):
            raise ValueError("cube index outside level range")

    @property
    def width_cells(self) -> int:
        return self.lattice.width_cells(self.level)

    @property
    def length(self) -> float:
        return self.width_cells * self.lattice.domain.h

    @property
    def left(self) -> float:
        return self.lattice.root_left + self.index * self.length

    @property
    def right(self) -> float:
        return self.left + self.length

    def children(self) -> tuple["Cube", "Cube"]:
        if self.level >= self.lattice.depth:
            raise ValueError("cube at maximum depth has no recorded children")
        return (Cube(self.lattice, self.level + 1, 2 * self.index),
                Cube(self.lattice, self.level + 1, 2 * self.index + 1))

    def root_cell_range(self) -> tuple[int, int]:
        """Half-open cell range in root-grid coordinates (3N cells)."""
        w = self.width_cells
        start = self.index * w
        return start, start + w

    def domain_cell_range(self) -> tuple[int, int]:
        """Half-open cell range in domain coordinates, clipped to [0, N)."""
        w = self.width_cells
        start = self.lattice.offset_cells + self.index * w
        n = self.lattice.domain.cells
        return max(start, 0), min(start + w, n)

    def contains_x(self, x: float) -> bool:
        return self.left <= x < self.right

    def tripled_domain_cell_range(self) -> tuple[int, int]:
        """Cell range of the concentric tripling 3Q, clipped to the domain."""
        w = self.width_cells
        start = self.lattice.offset_cells + self.index * w - w
        n = self.lattice.domain.cells
        return max(start, 0), min(start + 3 * w, n)


def lattices_for_domain(domain: Domain1D, depth: int) -> list[DyadicLattice]:
    """The three shifted lattices over an enlarged root containing the domain."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    root_cells = 3 * domain.cells
    if root_cells % (1 << depth) != 0:
        need = (1 << depth)
        raise AlignmentError(
            f"3N = {root_cells} not divisible by 2^{depth}; "
            f"choose N so that 3N is a multiple of {need} (e.g. N = {need})")
    return [DyadicLattice(domain, k, depth) for k in range(3)]


def max_aligned_depth(domain: Domain1D) -> int:
    """Largest depth whose cube boundaries stay on cell boundaries."""
    n3 = 3 * domain.cells
    depth = 0
    while n3 % 2 == 0:
        n3 //= 2
        depth += 1
    return depth


def default_lattices(domain: Domain1D, depth: int | None = None) -> list[DyadicLattice]:
    if depth is None:
        depth = max_aligned_depth(domain)
    return lattices_for_domain(domain, depth)


def cube_domain_ranges(lattices, min_cells: int = 1,
                       full_cubes_only: bool = False) -> list[tuple[int, int]]:
    """Deduplicated clipped cell ranges of all lattice cubes meeting the domain."""
    seen = set()
    out = []
    n = lattices[0].domain.cells
    for lat in lattices:
        for cube in lat.cubes():
            s, e = cube.domain_cell_range()
            if e - s < min_cells:
                continue
            if full_cubes_only and e - s != cube.width_cells:
                continue
            if (s, e) not in seen:
                seen.add((s, e))
                out.append((s, e))
    out.sort(key=lambda r: (r[1] - r[0], r[0]))
    assert all(0 <= s < e <= n for s, e in out)
    return out


def hl_maximal(f: GridFunction, lattices=None, exhaustive: bool = False) -> GridFunction:
    """Hardy-Littlewood maximal function over shifted-lattice cubes.

    M f(x_i) = max over lattice cubes Q containing x_i of the average of |f|
    over Q (f extended by zero outside the domain, full cube measure).
    exhaustive=True replaces the cube set with all grid-aligned intervals
    (slow oracle, N <= 2048).
    """
    if exhaustive:
        return _hl_maximal_exhaustive(f)
    if lattices is None:
        lattices = default_lattices(f.domain)
    n = f.domain.cells
    a = np.abs(f.values)
    idx = np.arange(n)
    out = np.zeros(n)
    for lat in lattices:
        for level in range(lat.depth + 1):
            w = lat.width_cells(level)
            cube_idx = (idx - lat.offset_cells) // w
            sums = np.bincount(cube_idx, weights=a, minlength=cube_idx.max() + 1)
            np.maximum(out, sums[cube_idx] / w, out=out)
    return GridFunction(f.domain, out)


def _hl_maximal_exhaustive(f: GridFunction) -> GridFunction:
    n = f.domain.cells
    if n > 2048:
        raise ValueError("exhaustive maximal oracle limited to N <= 2048")
    s = np.concatenate([[0.0], np.cumsum(np.abs(f.values))])
    lengths = np.arange(1, n + 1, dtype=float)
    # avg[a, b-1] = mean of |f| over cells [a, b)
    avg = np.full((n, n), -np.inf)
    for a in range(n):
        avg[a, a:] = (s[a + 1:] - s[a]) / lengths[: n - a]
    # best_b[a, i] = max over b >= i+1 of avg[a, b-1]
    suffix = np.maximum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
    out = np.full(n, -np.inf)
    running = np.full(n, -np.inf)
    for a in range(n):
        running[a:] = np.maximum(running[a:], suffix[a, a:])
        # points i < a cannot use start a; finalize nothing yet
    out = running
    return GridFunction(f.domain, out)


def m_half(f: GridFunction, lattices=None, exhaustive: bool = False) -> GridFunction:
    """M_{1/2} f = (M(|f|^{1/2}))^2."""
    root = GridFunction(f.domain, np.sqrt(np.abs(f.values)))
    m = hl_maximal(root, lattices=lattices, exhaustive=exhaustive)
    return GridFunction(f.domain, m.values ** 2)
