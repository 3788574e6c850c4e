"""Weight classes on the disk: characteristics, regularization, exponent algebra.

All class characteristics are depth-truncated: the supremum runs over the
intervals of both grids up to the report depth, box integrals use the mesh
quadrature of that depth, and essential suprema/infima are node extrema.
Divergence therefore shows up as growth of the truncated value with depth,
never as an exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .conformal import ConformalMap, parse_map
from .dyadic import (
    DiskMesh,
    DyadicInterval,
    MeshPair,
    interval_of_cell,
    level_slice,
    locate_cells,
    n_cells,
)


# ---------------------------------------------------------------------------
# Weight catalog


class Weight:
    """Base class: strictly positive finite function of z on the disk."""

    name = "weight"

    def values(self, z) -> np.ndarray:
        raise NotImplementedError

    def __pow__(self, e: float) -> "Weight":
        return PowerOf(self, float(e))

    def __mul__(self, other: "Weight") -> "Weight":
        return Product((self, other))

    def validate(self, mesh: DiskMesh) -> None:
        vals = self.values(mesh.z)
        if not np.all(np.isfinite(vals) & (vals > 0.0)):
            bad = np.argwhere(~(np.isfinite(vals) & (vals > 0.0)))[0]
            raise ValueError(
                f"weight {self.name} not positive-finite at node (cell {bad[0]}, node {bad[1]})"
            )


@dataclass(frozen=True)
class Constant(Weight):
    c: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ValueError(f"constant weight must be positive finite, got {self.c}")

    @property
    def name(self):
        return f"const:{self.c}"

    def values(self, z):
        return np.full(np.shape(z), self.c, dtype=float)


@dataclass(frozen=True)
class PowerDistance(Weight):
    """(1 - |z|)^alpha."""

    alpha: float = 0.5

    @property
    def name(self):
        return f"power:{self.alpha}"

    def values(self, z):
        return (1.0 - np.abs(np.asarray(z, dtype=complex))) ** self.alpha


@dataclass(frozen=True)
class ConformalDeriv(Weight):
    """|psi'(z)|^s for a catalog map psi (s = 2 gives the pullback area density)."""

    map: ConformalMap
    s: float = 2.0

    @property
    def name(self):
        tag = "derivsq" if self.s == 2.0 else f"derivpow[{self.s}]"
        return f"{tag}:{self.map.name}"

    def values(self, z):
        return np.abs(self.map.deriv_values(z)) ** self.s


@dataclass(frozen=True)
class PowerOf(Weight):
    base: Weight
    e: float

    @property
    def name(self):
        return f"({self.base.name})^{self.e}"

    def values(self, z):
        return self.base.values(z) ** self.e


@dataclass(frozen=True)
class Product(Weight):
    factors: tuple

    @property
    def name(self):
        return "*".join(f.name for f in self.factors)

    def values(self, z):
        out = self.factors[0].values(z)
        for f in self.factors[1:]:
            out = out * f.values(z)
        return out


class Regularized(Weight):
    """Piecewise-constant weight: the v-average of a base weight on each cell.

    Points below the truncation depth take the value of the deepest ancestor
    cell (the level-``depth`` sector containing them).
    """

    def __init__(self, base: Weight, reference: Weight | None, mesh: DiskMesh):
        self.base = base
        self.reference = reference
        self.grid = mesh.grid
        self.depth = mesh.depth
        U = base.values(mesh.z)
        V = reference.values(mesh.z) if reference is not None else np.ones_like(U)
        num = (U * V * mesh.w).sum(axis=1)
        den = (V * mesh.w).sum(axis=1)
        self.cell_values = num / den

    @property
    def name(self):
        ref = self.reference.name if self.reference is not None else "1"
        return f"reg:{self.base.name}@{self.grid}:{self.depth}[v={ref}]"

    def values(self, z):
        cid = locate_cells(self.grid, self.depth, np.asarray(z, dtype=complex))
        return self.cell_values[cid]


def regularize(base: Weight, reference: Weight | None, mesh: DiskMesh) -> Regularized:
    return Regularized(base, reference, mesh)


def parse_weight(name: str) -> Weight:
    """Parse catalog names: const:C, power:A, derivsq:MAP, reg:BASE@GRID:DEPTH."""
    if name.startswith("reg:"):
        body = name[4:]
        base_name, _, where = body.rpartition("@")
        grid, _, depth = where.partition(":")
        mesh = DiskMesh(grid, int(depth))
        return Regularized(parse_weight(base_name), None, mesh)
    head, _, arg = name.partition(":")
    if head == "const":
        return Constant(float(arg or 1.0))
    if head == "power":
        return PowerDistance(float(arg))
    if head == "derivsq":
        return ConformalDeriv(parse_map(arg), 2.0)
    if head == "derivpow":
        mapname, _, s = arg.rpartition("^")
        return ConformalDeriv(parse_map(mapname), float(s))
    raise ValueError(f"unknown weight name {name!r}")


def weight_nodes(w: Weight | None, mesh: DiskMesh) -> np.ndarray:
    if w is None:
        return np.ones_like(mesh.r)
    return np.asarray(w.values(mesh.z), dtype=float)


# ---------------------------------------------------------------------------
# Characteristic reports


@dataclass
class CharacteristicReport:
    kind: str
    param: float | None
    weight: str
    reference: str
    depths: tuple
    values: tuple
    extremal: tuple
    meta: dict = field(default_factory=dict)

    def value(self, depth: int) -> float:
        return self.values[self.depths.index(depth)]

    @property
    def final(self) -> float:
        return self.values[-1]

    def growth_ratios(self) -> list[float]:
        return [b / a for a, b in zip(self.values, self.values[1:])]

    def is_growing(self, factor: float, runs: int = 3) -> bool:
        """Growth-in-depth divergence: ratio > factor on >= runs consecutive steps."""
        streak = 0
        for r in self.growth_ratios():
            streak = streak + 1 if r > factor else 0
            if streak >= runs:
                return True
        return False

    def is_plateaued(self, tol: float = 0.05, window: int = 3) -> bool:
        tail = self.values[-window:]
        lo, hi = min(tail), max(tail)
        return hi - lo <= tol * hi


def _depth_list(depths, mesh_depth: int) -> tuple:
    if depths is None:
        return (mesh_depth,)
    out = tuple(int(d) for d in depths)
    if any(d > mesh_depth for d in out):
        raise ValueError(f"requested depth beyond mesh depth {mesh_depth}")
    return out


def _mesh_list(meshes) -> list[DiskMesh]:
    if isinstance(meshes, DiskMesh):
        return [meshes]
    return list(meshes)


def _sup_with_argmax(per_grid: dict[str, np.ndarray]) -> tuple[float, DyadicInterval]:
    best_val, best_iv = -np.inf, None
    for grid, vals in per_grid.items():
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = float(vals[i])
            best_iv = interval_of_cell(grid, i)
    return best_val, best_iv


class _GridData:
    """Node and cell arrays for one (u, v, mesh) triple, reused across depths."""

    def __init__(self, u: Weight, v: Weight | None, mesh: DiskMesh):
        self.mesh = mesh
        self.U = weight_nodes(u, mesh)
        self.V = weight_nodes(v, mesh)
        self.VW = self.V * mesh.w
        self.cell_v = self.VW.sum(axis=1)
        self.cell_uv = (self.U * self.VW).sum(axis=1)

    def cell_power(self, e: float) -> np.ndarray:
        with np.errstate(over="ignore", divide="ignore"):
            return ((self.U ** e) * self.VW).sum(axis=1)

    def box_mean(self, cells: np.ndarray, depth: int) -> np.ndarray:
        return self.mesh.box_sums(cells, depth) / self.mesh.box_sums(self.cell_v, depth)

    def box_u_mean(self, depth: int) -> np.ndarray:
        return self.box_mean(self.cell_uv, depth)

    def box_node_min_u(self, depth: int) -> np.ndarray:
        cmin = self.U.min(axis=1)
        return self.mesh.box_reduce(cmin, np.minimum, depth)


def bp_characteristic(
    u: Weight,
    v: Weight | None,
    p: float,
    meshes: MeshPair | DiskMesh,
    depths=None,
) -> CharacteristicReport:
    """Truncated two-weight B_p characteristic over both grids.

    ``sup_I <u>_{v,Q_I} <u^{-1}>_{1/(p-1),v,Q_I}``; for p = 1 the second
    factor is the node maximum of ``u^{-1}`` over the box.
    """
    if p < 1:
        raise ValueError(f"B_p requires p >= 1, got {p}")
    mesh_list = _mesh_list(meshes)
    dl = _depth_list(depths, mesh_list[0].depth)
    data = {m.grid: _GridData(u, v, m) for m in mesh_list}
    values, extremal = [], []
    for d in dl:
        per_grid = {}
        for g, gd in data.items():
            first = gd.box_u_mean(d)
            with np.errstate(divide="ignore", over="ignore"):
                if p == 1:
                    second = 1.0 / gd.box_node_min_u(d)
                else:
                    e = 1.0 / (p - 1.0)
                    second = gd.box_mean(gd.cell_power(-e), d) ** (p - 1.0)
            per_grid[g] = first * second
        val, iv = _sup_with_argmax(per_grid)
        values.append(val)
        extremal.append(iv)
    return CharacteristicReport(
        kind="Bp",
        param=p,
        weight=u.name,
        reference=v.name if v is not None else "lebesgue",
        depths=dl,
        values=tuple(values),
        extremal=tuple(extremal),
        meta={"nodes": {d: len(mesh_list) * n_cells(d) * mesh_list[0].nq for d in dl}},
    )


def rh_characteristic(
    u: Weight,
    v: Weight | None,
    s: float,
    meshes: MeshPair | DiskMesh,
    depths=None,
) -> CharacteristicReport:
    """Reverse-Hölder characteristic ``sup_I <u>_{s,v,Q_I} / <u>_{v,Q_I}`` for s > 1."""
    if s <= 1:
        raise ValueError(f"RH_s requires s > 1, got {s}")
    mesh_list = _mesh_list(meshes)
    dl = _depth_list(depths, mesh_list[0].depth)
    data = {m.grid: _GridData(u, v, m) for m in mesh_list}
    values, extremal = [], []
    for d in dl:
        per_grid = {}
        for g, gd in data.items():
            mean_s = gd.box_mean(gd.cell_power(s), d) ** (1.0 / s)
            per_grid[g] = mean_s / gd.box_u_mean(d)
        val, iv = _sup_with_argmax(per_grid)
        values.append(val)
        extremal.append(iv)
    return CharacteristicReport(
        kind="RHs", param=s, weight=u.name,
        reference=v.name if v is not None else "lebesgue",
        depths=dl, values=tuple(values), extremal=tuple(extremal),
    )


def weak_rh_check(
    u: Weight,
    v: Weight | None,
    s: float,
    meshes: MeshPair | DiskMesh,
    depths=None,
) -> CharacteristicReport:
    """Weak reverse Hölder: smallest C with <u>_{v,Q} <= C <u>_{s,v,Q}, 0 < s < 1."""
    if not (0.0 < s < 1.0):
        raise ValueError(f"weak RH requires 0 < s < 1, got {s}")
    mesh_list = _mesh_list(meshes)
    dl = _depth_list(depths, mesh_list[0].depth)
    data = {m.grid: _GridData(u, v, m) for m in mesh_list}
    values, extremal = [], []
    for d in dl:
        per_grid = {}
        for g, gd in data.items():
            mean_s = gd.box_mean(gd.cell_power(s), d) ** (1.0 / s)
            per_grid[g] = gd.box_u_mean(d) / mean_s
        val, iv = _sup_with_argmax(per_grid)
        values.append(val)
        extremal.append(iv)
    return CharacteristicReport(
        kind="weakRH", param=s, weight=u.name,
        reference=v.name if v is not None else "lebesgue",
        depths=dl, values=tuple(values), extremal=tuple(extremal),
    )


def _binfty_grid(gd: _GridData, depth: int) -> np.ndarray:
    """Per-box <M_v(u chi_{Q_I})>_{v,Q_I} / <u>_{v,Q_I} for one grid.

    The restricted maximal function on the subtree of I is the running
    maximum of box averages along root(I)-to-leaf paths.
    """
    mesh = gd.mesh
    avg = gd.box_u_mean(depth)
    box_uv = mesh.box_sums(gd.cell_uv, depth)
    out = np.empty(n_cells(depth))
    for cid in range(n_cells(depth)):
        iv = interval_of_cell(mesh.grid, cid)
        total = 0.0
        rm = None
        for sl in mesh.subtree_slices(iv, depth):
            seg = avg[sl]
            rm = seg.copy() if rm is None else np.maximum(np.repeat(rm, 2), seg)
            total += float((rm * gd.cell_v[sl]).sum())
        out[cid] = total / box_uv[cid]
    return out


def binfty_characteristic(
    u: Weight,
    v: Weight | None,
    meshes: MeshPair | DiskMesh,
    depths=None,
) -> CharacteristicReport:
    """Fujii-Wilson style B_infinity characteristic over the given grid(s)."""
    mesh_list = _mesh_list(meshes)
    dl = _depth_list(depths, mesh_list[0].depth)
    data = {m.grid: _GridData(u, v, m) for m in mesh_list}
    values, extremal = [], []
    for d in dl:
        per_grid = {g: _binfty_grid(gd, d) for g, gd in data.items()}
        val, iv = _sup_with_argmax(per_grid)
        values.append(val)
        extremal.append(iv)
    return CharacteristicReport(
        kind="Binfty", param=None, weight=u.name,
        reference=v.name if v is not None else "lebesgue",
        depths=dl, values=tuple(values), extremal=tuple(extremal),
        meta={"grids": [m.grid for m in mesh_list]},
    )


@dataclass
class DoublingReport:
    weight: str
    grid: str
    depths: tuple
    apr: tuple          # max over cells of node-max/node-min
    parent_child: tuple  # c1: sup of box-mass parent/child ratios
    box_top: tuple       # c2: sup of box-mass / top-half-mass ratios
    weakly_doubling: tuple

    def doubling_constant(self, depth: int) -> float:
        i = self.depths.index(depth)
        return max(self.parent_child[i], self.box_top[i])

    @property
    def final_constant(self) -> float:
        return max(self.parent_child[-1], self.box_top[-1])


def apr_and_doubling(
    u: Weight,
    mesh: DiskMesh,
    depths=None,
    weak_threshold: float = 1e6,
) -> DoublingReport:
    """Cell oscillation (APR) and the two doubling ratios of the measure u dA."""
    dl = _depth_list(depths, mesh.depth)
    U = weight_nodes(u, mesh)
    cell_mass = (U * mesh.w).sum(axis=1)
    node_ratio = U.max(axis=1) / U.min(axis=1)
    apr, c1s, c2s, weak = [], [], [], []
    for d in dl:
        bu = mesh.box_sums(cell_mass, d)
        c1 = 1.0
        for k in range(1, d + 1):
            parents = np.repeat(bu[level_slice(k - 1)], 2)
            c1 = max(c1, float((parents / bu[level_slice(k)]).max()))
        c2 = float((bu / cell_mass[: n_cells(d)]).max())
        apr.append(float(node_ratio[: n_cells(d)].max()))
        c1s.append(c1)
        c2s.append(c2)
        weak.append(bool(c2 > weak_threshold >= c1))
    return DoublingReport(
        weight=u.name, grid=mesh.grid, depths=dl,
        apr=tuple(apr), parent_child=tuple(c1s), box_top=tuple(c2s),
        weakly_doubling=tuple(weak),
    )


# ---------------------------------------------------------------------------
# Regularization lemma diagnostics and the reverse-Hölder gain


@dataclass
class RegularizationSuite:
    """Measured checks of the elementary regularization properties."""

    average_gap: float        # max over boxes of |<u>_{v,Q} - <u_reg>_{v,Q}| (relative)
    power_mean_gap: float     # max over cells of (u^s)_reg - (u_reg)^s (should be <= 0)
    apr: float
    weak_rh_base: float | None
    weak_rh_reg: float | None


def regularization_suite(
    base: Weight,
    reference: Weight | None,
    mesh: DiskMesh,
    s: float = 0.5,
    check_weak_rh: bool = False,
    pair: MeshPair | None = None,
) -> tuple[Regularized, RegularizationSuite]:
    reg = Regularized(base, reference, mesh)
    gd_base = _GridData(base, reference, mesh)
    gd_reg = _GridData(reg, reference, mesh)
    d = mesh.depth

    a = gd_base.box_u_mean(d)
    b = gd_reg.box_u_mean(d)
    average_gap = float(np.max(np.abs(a - b) / np.abs(a)))

    s_reg_cells = gd_base.cell_power(s) / gd_base.cell_v   # cell values of (u^s)_reg
    gap = s_reg_cells - gd_reg.U[:, 0] ** s                # reg is cellwise constant
    power_mean_gap = float(gap.max())

    U = gd_reg.U
    apr = float((U.max(axis=1) / U.min(axis=1)).max())

    wr_base = wr_reg = None
    if check_weak_rh and pair is not None:
        wr_base = weak_rh_check(base, reference, s, pair).final
        wr_reg = weak_rh_check(reg, reference, s, pair).final
    return reg, RegularizationSuite(average_gap, power_mean_gap, apr, wr_base, wr_reg)


@dataclass
class ReverseHolderGain:
    tau: float
    binfty: float
    c_v: float
    apr: float
    rh_tau: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.rh_tau <= self.bound * (1.0 + 1e-12)


def reverse_holder_gain(
    w: Weight,
    v: Weight | None,
    mesh: DiskMesh,
    depth: int | None = None,
) -> ReverseHolderGain:
    """Self-improvement exponent tau > 1 and the certified RH_tau bound.

    For a weight satisfying the cell-oscillation condition (e.g. any
    regularized weight), tau = 2 c_v B / (2 c_v B - 1) with B its
    B_infinity characteristic, and [w]_{RH_tau(D,v)} <= APR_w c_v (2B)^{1/tau}.
    """
    d = mesh.depth if depth is None else depth
    binf = binfty_characteristic(w, v, mesh, depths=[d]).final
    vref = v if v is not None else Constant(1.0)
    dbl = apr_and_doubling(vref, mesh, depths=[d])
    c_v = dbl.final_constant
    apr_w = apr_and_doubling(w, mesh, depths=[d]).apr[-1]
    tau = 2.0 * c_v * binf / (2.0 * c_v * binf - 1.0)

    gd = _GridData(w, v, mesh)
    mean_tau = gd.box_mean(gd.cell_power(tau), d) ** (1.0 / tau)
    rh_tau = float((mean_tau / gd.box_u_mean(d)).max())
    bound = apr_w * c_v * (2.0 * binf) ** (1.0 / tau)
    return ReverseHolderGain(tau, binf, c_v, apr_w, rh_tau, bound)


def mean_comparison_constant(
    u: Weight,
    q: float,
    v: Weight,
    mesh: DiskMesh,
    r: float,
    depth: int | None = None,
    theta: float = 0.0,
) -> dict:
    """sup_I <u v^theta>_{Q_I} / ([v]_{B_r}^{1/r} <u>_{q,v,Q_I} <v^{-1}>_{1/(r-1),Q_I}^{-theta}).

    theta = 0 gives the plain comparison of the unweighted box mean with the
    q-th v-weighted mean; the reported constant should be depth-stable when
    u^q satisfies the weak reverse-Hölder condition.  Returns the constant
    together with the single-grid [v]_{B_r} at the same depth; an infinite
    characteristic makes the comparison vacuous and the constant drops to 0.
    """
    d = mesh.depth if depth is None else depth
    U = weight_nodes(u, mesh)
    V = weight_nodes(v, mesh)
    W = mesh.w
    area = mesh.box_sums(W.sum(axis=1), d)
    vmass = mesh.box_sums((V * W).sum(axis=1), d)

    num_cells = ((U * V ** theta) * W).sum(axis=1)
    lhs = mesh.box_sums(num_cells, d) / area

    uq = mesh.box_sums(((U ** q) * V * W).sum(axis=1), d)
    mean_q = (uq / vmass) ** (1.0 / q)

    e = 1.0 / (r - 1.0)
    with np.errstate(over="ignore"):
        vneg_mean = mesh.box_sums(((V ** (-e)) * W).sum(axis=1), d) / area
        br = float(((vmass / area) * vneg_mean ** (r - 1.0)).max())
        rhs = br ** (1.0 / r) * mean_q
        if theta != 0.0:
            rhs = rhs * (vneg_mean ** (r - 1.0)) ** (-theta)
    return {"r": r, "constant": float((lhs / rhs).max()), "v_br": br, "depth": d}


def r_scan(
    u: Weight,
    q: float,
    v: Weight,
    mesh: DiskMesh,
    depth: int | None = None,
    m_range: int = 7,
    theta: float = 0.0,
) -> list[dict]:
    """Comparison constants on the exponent grid r = q(1 + 2^-m), m = 0..m_range-1."""
    return [
        mean_comparison_constant(u, q, v, mesh, q * (1.0 + 2.0 ** (-m)), depth, theta)
        for m in range(m_range)
    ]


def best_r(scan: list[dict]) -> dict:
    """Smallest constant among scan rows with a finite reference characteristic."""
    finite = [row for row in scan if np.isfinite(row["v_br"])]
    if not finite:
        return min(scan, key=lambda row: row["r"])
    return min(finite, key=lambda row: row["constant"])


def b1_bp_product_check(
    u: Weight,
    v: Weight,
    p: float,
    meshes: MeshPair,
    depth: int | None = None,
) -> dict:
    """Per-box check of [u v^{1-p/2}]_{B_p} <= [v]_{B_1}^p [u]_{B_p(D,v)}."""
    d = _mesh_list(meshes)[0].depth if depth is None else depth
    lhs = bp_characteristic(Product((u, PowerOf(v, 1.0 - p / 2.0))), None, p, meshes, depths=[d]).final
    v_b1 = bp_characteristic(v, None, 1.0, meshes, depths=[d]).final
    u_bpv = bp_characteristic(u, v, p, meshes, depths=[d]).final
    rhs = v_b1 ** p * u_bpv
    return {
        "lhs": lhs,
        "rhs": rhs,
        "v_b1": v_b1,
        "u_bpv": u_bpv,
        "holds": bool(lhs <= rhs * (1.0 + 1e-10)),
    }


# ---------------------------------------------------------------------------
# Exact rational exponent bookkeeping


class _Infinity:
    """Symbolic +infinity for conjugate-exponent algebra."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "oo"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("bergmanlab-oo")

    def __gt__(self, other):
        return other is not self

    def __lt__(self, other):
        return False

    def __ge__(self, other):
        return True

    def __le__(self, other):
        return other is self

    def __mul__(self, other):
        if other is self or other > 0:
            return self
        raise ArithmeticError("oo * nonpositive")

    __rmul__ = __mul__

    def __truediv__(self, other):
        if other is self:
            raise ArithmeticError("oo / oo")
        return self


INF = _Infinity()


def holder_conjugate(x):
    """Conjugate exponent x' = x/(x-1) with the 1 <-> oo convention, exactly."""
    if x is INF:
        return Fraction(1)
    x = Fraction(x)
    if x < 1:
        raise ValueError(f"conjugate needs x >= 1, got {x}")
    if x == 1:
        return INF
    return x / (x - 1)


@dataclass(frozen=True)
class ExponentTable:
    """Exact rational exponent chain for the two-index bookkeeping.

    q0 = p0/(2-p0); q1 = p0'/(p0'-p); q2 = (p-1)/(p/p0-1);
    theta1 = 1 - p/2; theta2 = -(1 - p/2)/(p-1).
    """

    p0: Fraction
    p: Fraction
    p0_conj: object
    q0: Fraction
    q0_conj: Fraction
    q1: Fraction
    q2: Fraction
    theta1: Fraction
    theta2: Fraction

    def identity_holds(self) -> bool:
        """((1-theta_j) q_j')' == q0 for j = 1, 2, and p0'/2 == q0', exactly."""
        for qj, thj in ((self.q1, self.theta1), (self.q2, self.theta2)):
            qjc = holder_conjugate(qj)
            prod = (1 - thj) * qjc if qjc is not INF else INF * (1 - thj)
            if holder_conjugate(prod) != self.q0:
                return False
        if self.p0_conj is INF:
            return self.q0_conj is INF
        return self.p0_conj / 2 == self.q0_conj


def exponent_table(p0, p) -> ExponentTable:
    """Build and validate the exact exponent chain; raises naming any violated constraint."""
    p0 = Fraction(p0)
    p = Fraction(p)
    if not (1 <= p0 < 2):
        raise ValueError(f"constraint violated: p0 in [1, 2) (got p0 = {p0})")
    p0c = holder_conjugate(p0)
    if not (p > p0 and (p0c is INF or p < p0c)):
        raise ValueError(f"constraint violated: p in (p0, p0') (got p = {p}, p0 = {p0})")
    q0 = p0 / (2 - p0)
    q0c = holder_conjugate(q0)
    q1 = Fraction(1) if p0c is INF else p0c / (p0c - p)
    q2 = (p - 1) / (p / p0 - 1)
    theta1 = 1 - p / 2
    theta2 = -(1 - p / 2) / (p - 1)
    for name, th in (("theta1", theta1), ("theta2", theta2)):
        if not th < Fraction(1, 2):
            raise ValueError(f"constraint violated: {name} < 1/2 (got {th})")
    for name, qj, thj in (("q1", q1, theta1), ("q2", q2, theta2)):
        qjc = holder_conjugate(qj)
        prod = INF if qjc is INF else (1 - thj) * qjc
        if not (prod is INF or prod >= 1):
            raise ValueError(f"constraint violated: (1-theta) {name}' >= 1 (got {prod})")
    return ExponentTable(p0, p, p0c, q0, q0c, q1, q2, theta1, theta2)
