"""Dyadic grids on the unit circle, Carleson boxes, and quadrature meshes on the disk.

Conventions used throughout the package:

* the circle has unit length (arc positions are "turns" in [0, 1)),
* the disk has unit area (area element ``(1/pi) r dr dtheta``),
* two grids are carried everywhere: ``G1`` is the plain dyadic grid,
  ``G2`` is ``G1`` rotated by one third of a turn,
* a mesh of depth ``d`` is the collection of top-half cells of all
  intervals of level <= d; integrals over Carleson boxes are truncated
  at that depth and every report carries the depth.

Cells are indexed heap-style: cell ``(level k, index j)`` has id
``2**k - 1 + j``, so the cells of level <= d occupy a prefix of any
array indexed by cell id.  Children of id ``i`` are ``2i+1`` and
``2i+2`` in heap terms; in (level, index) terms they are
``(k+1, 2j)`` and ``(k+1, 2j+1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TAU = 2.0 * np.pi

GRIDS = ("G1", "G2")
_GRID_SHIFT = {"G1": 0.0, "G2": 1.0 / 3.0}

#: hard cap on mesh/search depth; beyond this the node count is no longer
#: desk scale and float ties at cell boundaries stop being harmless.
MAX_DEPTH = 16

#: absolute slack for the closed boundary conditions of boxes and arcs.
#: |exp(i theta)| rounds to 1 +- 1e-16, which would otherwise flip
#: membership of exact corner points.
BOUNDARY_TOL = 1e-12


def _check_grid(grid: str) -> None:
    if grid not in GRIDS:
        raise ValueError(f"unknown grid {grid!r}; expected one of {GRIDS}")


def _check_depth(depth: int) -> None:
    if not (0 <= depth <= MAX_DEPTH):
        raise ValueError(f"depth {depth} outside [0, {MAX_DEPTH}]")


def circular_distance(a, b):
    """Distance between arc positions ``a`` and ``b`` in turns (mod 1)."""
    return np.abs(np.mod(np.asarray(a) - b + 0.5, 1.0) - 0.5)


@dataclass(frozen=True)
class Arc:
    """An arc of the circle given by its start position and length, in turns."""

    start: float
    length: float

    def __post_init__(self):
        if not (0.0 < self.length <= 1.0):
            raise ValueError(f"arc length {self.length} outside (0, 1]")
        object.__setattr__(self, "start", float(self.start) % 1.0)

    @property
    def center(self) -> float:
        return (self.start + 0.5 * self.length) % 1.0

    @property
    def center_theta(self) -> float:
        return TAU * self.center

    def contains_position(self, t) -> np.ndarray:
        """Closed membership of arc positions (turns), wrap-safe."""
        off = np.mod(np.asarray(t, dtype=float) - self.start, 1.0)
        inside = off <= self.length + BOUNDARY_TOL
        # positions just below start wrap to ~1; treat the shared endpoint
        # as inside (closed conditions).
        at_start = off >= 1.0 - BOUNDARY_TOL
        return inside | at_start

    def contains_arc(self, other: "Arc") -> bool:
        if self.length >= 1.0 - BOUNDARY_TOL:
            return True
        off = (other.start - self.start) % 1.0
        return off + other.length <= self.length + BOUNDARY_TOL

    def intersects(self, other: "Arc") -> bool:
        gap = circular_distance(self.center, other.center)
        return gap <= 0.5 * (self.length + other.length) + BOUNDARY_TOL

    def union_with_adjacent(self, other: "Arc") -> "Arc":
        """Union of two arcs sharing an endpoint (used for neighbor checks)."""
        for a, b in ((self, other), (other, self)):
            if abs((a.start + a.length) % 1.0 - b.start % 1.0) <= BOUNDARY_TOL:
                return Arc(a.start, a.length + b.length)
        raise ValueError("arcs are not adjacent (no shared endpoint)")


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """Interval ``[j 2^-k, (j+1) 2^-k)`` of grid G1, or its 1/3-rotation in G2."""

    grid: str
    level: int
    index: int

    def __post_init__(self):
        _check_grid(self.grid)
        if self.level < 0:
            raise ValueError(f"negative level {self.level}")
        if not (0 <= self.index < 2 ** self.level):
            raise ValueError(
                f"index {self.index} outside [0, 2^{self.level}) for level {self.level}"
            )

    @property
    def length(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def start(self) -> float:
        return (self.index * self.length + _GRID_SHIFT[self.grid]) % 1.0

    @property
    def arc(self) -> Arc:
        return Arc(self.start, self.length)

    @property
    def center_theta(self) -> float:
        return self.arc.center_theta

    @property
    def cell_id(self) -> int:
        return (1 << self.level) - 1 + self.index

    def parent(self) -> "DyadicInterval":
        if self.level == 0:
            raise ValueError("the root interval has no parent")
        return DyadicInterval(self.grid, self.level - 1, self.index // 2)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (
            DyadicInterval(self.grid, self.level + 1, 2 * self.index),
            DyadicInterval(self.grid, self.level + 1, 2 * self.index + 1),
        )

    def generation(self, k: int) -> list["DyadicInterval"]:
        """All descendants ``k`` levels below this interval."""
        if k < 0:
            raise ValueError("generation depth must be >= 0")
        lo = self.index << k
        return [
            DyadicInterval(self.grid, self.level + k, j)
            for j in range(lo, lo + (1 << k))
        ]

    def ancestors(self) -> list["DyadicInterval"]:
        """This interval and its ancestors, root last."""
        out = [self]
        cur = self
        while cur.level > 0:
            cur = cur.parent()
            out.append(cur)
        return out

    def contains(self, other: "DyadicInterval") -> bool:
        if other.grid != self.grid or other.level < self.level:
            return False
        return (other.index >> (other.level - self.level)) == self.index


def cell_id(level: int, index: int) -> int:
    return (1 << level) - 1 + index


def n_cells(depth: int) -> int:
    return (1 << (depth + 1)) - 1


def level_slice(level: int) -> slice:
    return slice((1 << level) - 1, (1 << (level + 1)) - 1)


def interval_of_cell(grid: str, cid: int) -> DyadicInterval:
    level = int(np.log2(cid + 1))
    # guard against float log rounding at powers of two
    while (1 << (level + 1)) - 1 <= cid:
        level += 1
    while (1 << level) - 1 > cid:
        level -= 1
    return DyadicInterval(grid, level, cid - ((1 << level) - 1))


def locate_cells(grid: str, depth: int, z) -> np.ndarray:
    """Cell id of the depth-truncated region containing each interior point.

    Points in the collar below the truncation map to the level-``depth``
    sector containing them.
    """
    z = np.asarray(z, dtype=complex)
    s = 1.0 - np.abs(z)
    if np.any(s <= 0):
        raise ValueError("locate expects points strictly inside the disk")
    k = np.floor(-np.log2(s)).astype(np.int64)
    k = np.clip(k, 0, depth)
    t = np.mod(np.angle(z) / TAU - _GRID_SHIFT[grid], 1.0)
    j = np.minimum((t * (1 << k)).astype(np.int64), (1 << k) - 1)
    return ((1 << k) - 1 + j).astype(np.int64)


# ---------------------------------------------------------------------------
# Carleson boxes and top halves


def box_area(length: float) -> float:
    """Closed-form normalized area of the Carleson box over an arc."""
    return length * length * (2.0 - length)


def top_area(length: float) -> float:
    """Closed-form normalized area of the top half of a Carleson box."""
    return length * length * (1.0 - 0.75 * length)


def truncated_box_area(length: float, depth: int) -> float:
    """Area of a Carleson box with the collar ``1 - r < 2^{-depth-1}`` removed."""
    rim = 1.0 - 2.0 ** (-depth - 1)
    inner = 1.0 - length
    return length * (rim * rim - inner * inner)


def box_contains(arc: Arc, z, tol: float = BOUNDARY_TOL) -> np.ndarray:
    """Closed membership of complex points in the Carleson box over ``arc``."""
    z = np.asarray(z, dtype=complex)
    s = 1.0 - np.abs(z)
    radial = (s >= -tol) & (s <= arc.length + tol)
    t = np.angle(z) / TAU
    angular = circular_distance(t, arc.center) <= 0.5 * arc.length + tol
    return radial & angular


def top_contains(arc: Arc, z, tol: float = BOUNDARY_TOL) -> np.ndarray:
    """Closed membership in the top half ``l/2 <= 1-r <= l`` of the box."""
    z = np.asarray(z, dtype=complex)
    s = 1.0 - np.abs(z)
    radial = (s >= 0.5 * arc.length - tol) & (s <= arc.length + tol)
    t = np.angle(z) / TAU
    angular = circular_distance(t, arc.center) <= 0.5 * arc.length + tol
    return radial & angular


# ---------------------------------------------------------------------------
# Quadrature mesh


def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


class DiskMesh:
    """Tensor Gauss-Legendre quadrature on the top-half cells of one grid.

    Cells are all top halves ``T_I`` for intervals of level <= depth; the
    leftover collar ``{1 - r < 2^{-depth-1}}`` carries no nodes.  Node
    weights include the normalized area density, so ``weights.sum()``
    equals the truncated area ``(1 - 2^{-depth-1})**2``.

    Arrays are shaped ``(ncells, n_r * n_theta)`` and ordered by
    (level, index) and, within a cell, by (radial node, angular node);
    summation helpers preserve that order, so results are deterministic.
    """

    def __init__(self, grid: str, depth: int, n_r: int = 4, n_theta: int = 4):
        _check_grid(grid)
        _check_depth(depth)
        if n_r < 1 or n_theta < 1:
            raise ValueError("quadrature orders must be >= 1")
        self.grid = grid
        self.depth = depth
        self.n_r = n_r
        self.n_theta = n_theta
        self.nq = n_r * n_theta
        self.ncells = n_cells(depth)
        shift = _GRID_SHIFT[grid]

        xr, wr = _gauss(n_r)
        xt, wt = _gauss(n_theta)

        levels = np.empty(self.ncells, dtype=np.int64)
        indices = np.empty(self.ncells, dtype=np.int64)
        r = np.empty((self.ncells, self.nq))
        theta = np.empty((self.ncells, self.nq))
        w = np.empty((self.ncells, self.nq))

        for k in range(depth + 1):
            ell = 2.0 ** (-k)
            r0, r1 = 1.0 - ell, 1.0 - 0.5 * ell
            rn = 0.5 * (r1 - r0) * xr + 0.5 * (r1 + r0)
            rw = 0.5 * (r1 - r0) * wr
            sl = level_slice(k)
            idx = np.arange(1 << k)
            levels[sl] = k
            indices[sl] = idx
            ta = TAU * ((idx * ell + shift) % 1.0)
            tn = ta[:, None] + TAU * ell * (0.5 * xt + 0.5)[None, :]
            tw = TAU * ell * 0.5 * wt
            # tensor nodes: radial index major, angular index minor
            theta[sl] = np.tile(tn, (1, n_r))
            r[sl] = np.repeat(rn, n_theta)[None, :]
            cellw = (np.repeat(rw * rn, n_theta) * np.tile(tw, n_r)) / np.pi
            w[sl] = cellw[None, :]

        self.levels = levels
        self.indices = indices
        self.r = r
        self.theta = np.mod(theta, TAU)
        self.w = w
        self.z = r * np.exp(1j * self.theta)
        self.cell_area = w.sum(axis=1)
        if not (np.all(self.r > 0.0) and np.all(self.r < 1.0)):
            raise AssertionError("mesh nodes must be strictly interior")

    # -- structure ---------------------------------------------------------

    def interval(self, cid: int) -> DyadicInterval:
        return interval_of_cell(self.grid, cid)

    def intervals(self, depth: int | None = None):
        d = self.depth if depth is None else depth
        for cid in range(n_cells(d)):
            yield self.interval(cid)

    def locate(self, z) -> np.ndarray:
        """Cell id of the region containing each point.

        Points in the collar below the truncation are assigned to the
        deepest ancestor cell (the level-``depth`` sector containing them).
        """
        return locate_cells(self.grid, self.depth, z)

    # -- tree reductions ----------------------------------------------------

    def box_sums(self, cell_values: np.ndarray, depth: int | None = None) -> np.ndarray:
        """Sums over truncated Carleson boxes, for every interval of level <= depth.

        ``cell_values[cid]`` is the contribution of one top-half cell; the
        returned array gives, at position ``cid``, the sum over all cells of
        the subtree of that interval down to ``depth``.
        """
        d = self.depth if depth is None else depth
        _check_depth(d)
        if d > self.depth:
            raise ValueError(f"depth {d} exceeds mesh depth {self.depth}")
        out = np.array(cell_values[: n_cells(d)], dtype=float, copy=True)
        for k in range(d - 1, -1, -1):
            child = out[level_slice(k + 1)].reshape(-1, 2).sum(axis=1)
            out[level_slice(k)] += child
        return out

    def box_reduce(self, cell_values: np.ndarray, op, depth: int | None = None) -> np.ndarray:
        """Like :meth:`box_sums` with an arbitrary pairwise reduction (max, min)."""
        d = self.depth if depth is None else depth
        out = np.array(cell_values[: n_cells(d)], dtype=float, copy=True)
        for k in range(d - 1, -1, -1):
            pairs = out[level_slice(k + 1)].reshape(-1, 2)
            out[level_slice(k)] = op(out[level_slice(k)], op(pairs[:, 0], pairs[:, 1]))
        return out

    def path_accumulate(self, box_values: np.ndarray, op, depth: int | None = None) -> np.ndarray:
        """Accumulate box values along root-to-leaf paths (running max or sum).

        ``box_values`` is indexed by cell id (one value per interval of
        level <= depth); the result at a cell is the reduction of the values
        of the cell's interval and all its ancestors.
        """
        d = self.depth if depth is None else depth
        out = np.array(box_values[: n_cells(d)], dtype=float, copy=True)
        for k in range(1, d + 1):
            out[level_slice(k)] = op(out[level_slice(k)], np.repeat(out[level_slice(k - 1)], 2))
        return out

    def subtree_slices(self, interval: DyadicInterval, depth: int | None = None):
        """Per-level contiguous id ranges of the subtree of ``interval``."""
        d = self.depth if depth is None else depth
        for k in range(interval.level, d + 1):
            width = 1 << (k - interval.level)
            lo = (1 << k) - 1 + interval.index * width
            yield slice(lo, lo + width)

    # -- integration ---------------------------------------------------------

    def node_values(self, f) -> np.ndarray:
        """Evaluate a callable (or pass through an array) on all mesh nodes."""
        if callable(f):
            vals = np.asarray(f(self.z), dtype=float)
        else:
            vals = np.asarray(f, dtype=float)
        if vals.shape != self.z.shape:
            raise ValueError(f"node values have shape {vals.shape}, expected {self.z.shape}")
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            zbad = self.z[bad[0], bad[1]]
            raise ValueError(
                f"non-finite integrand at node (cell {bad[0]}, node {bad[1]}), z = {zbad}"
            )
        return vals

    def cell_integrals(self, f) -> np.ndarray:
        vals = self.node_values(f)
        return (vals * self.w).sum(axis=1)

    def integrate_top(self, interval: DyadicInterval, f) -> float:
        """Integral of ``f`` over one top-half cell."""
        self._check_interval(interval)
        cid = interval.cell_id
        vals = np.asarray(f(self.z[cid]) if callable(f) else f, dtype=float)
        return float((vals * self.w[cid]).sum())

    def integrate_box(self, interval: DyadicInterval, f, depth: int | None = None) -> float:
        """Depth-truncated integral of ``f`` over the Carleson box of ``interval``.

        Sums cell integrals level by level, in index order, so the result is
        deterministic for a fixed mesh.
        """
        self._check_interval(interval)
        d = self.depth if depth is None else depth
        cells = self.cell_integrals(f)
        total = 0.0
        for sl in self.subtree_slices(interval, d):
            total += float(cells[sl].sum())
        return total

    def _check_interval(self, interval: DyadicInterval) -> None:
        if interval.grid != self.grid:
            raise ValueError(f"interval grid {interval.grid} != mesh grid {self.grid}")
        if interval.level > self.depth:
            raise ValueError(f"interval level {interval.level} exceeds mesh depth {self.depth}")


class MeshPair:
    """The two rotated meshes at a common depth and quadrature order."""

    def __init__(self, depth: int, n_r: int = 4, n_theta: int = 4):
        self.depth = depth
        self.g1 = DiskMesh("G1", depth, n_r, n_theta)
        self.g2 = DiskMesh("G2", depth, n_r, n_theta)

    def __iter__(self):
        return iter((self.g1, self.g2))

    def mesh(self, grid: str) -> DiskMesh:
        _check_grid(grid)
        return self.g1 if grid == "G1" else self.g2


def build_mesh_pair(depth: int, n_r: int = 4, n_theta: int = 4) -> MeshPair:
    return MeshPair(depth, n_r, n_theta)


# ---------------------------------------------------------------------------
# Two-grid approximation of arbitrary arcs


def approximating_pair(arc: Arc, search_depth: int = 12) -> tuple[DyadicInterval, DyadicInterval, float]:
    """Best dyadic sandwich ``Q_inner <= Q_arc <= Q_outer`` across both grids.

    Returns ``(inner, outer, factor)`` where ``factor`` is the larger of the
    two closed-form box-area ratios ``|Q_arc|/|Q_inner|`` and
    ``|Q_outer|/|Q_arc|``.
    """
    _check_depth(search_depth)
    inner = None
    outer = None
    for grid in GRIDS:
        shift = _GRID_SHIFT[grid]
        for k in range(search_depth + 1):
            ell = 2.0 ** (-k)
            if inner is not None and ell < inner.length:
                break
            # candidate contained intervals: starts inside [arc.start, ...)
            lo = int(np.ceil(((arc.start - shift) % 1.0) * (1 << k) - 1e-9))
            for j in (lo % (1 << k),):
                cand = DyadicInterval(grid, k, j)
                if arc.contains_arc(cand.arc):
                    if inner is None or cand.length > inner.length:
                        inner = cand
        for k in range(search_depth, -1, -1):
            if outer is not None and 2.0 ** (-k) > outer.length:
                continue
            t = (arc.start - shift) % 1.0
            j = min(int(t * (1 << k)), (1 << k) - 1)
            cand = DyadicInterval(grid, k, j)
            if cand.arc.contains_arc(arc):
                if outer is None or cand.length < outer.length:
                    outer = cand
    if outer is None:
        outer = DyadicInterval("G1", 0, 0)
    if inner is None:
        raise ValueError(
            f"arc of length {arc.length} has no dyadic subinterval at search depth {search_depth}"
        )
    a = box_area(arc.length)
    factor = max(a / box_area(inner.length), box_area(outer.length) / a)
    return inner, outer, factor
