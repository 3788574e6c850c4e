"""Image-side analysis through the conformal map: measures, characteristics, transfer laws.

A weight sigma on the image domain always enters by its pullback
u = sigma o psi, and every integral over psi(Q_I) or over a boundary disk
is a disk integral against the pullback density v = |psi'|^2.  The strong
and weak transfer laws are verified as identities on individual test
functions with matched quadrature on both sides, never as operator-norm
equalities (norms are only estimable from below).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import ConformalMap, boundary_trace
from .dyadic import (
    TAU,
    Arc,
    DiskMesh,
    DyadicInterval,
    box_contains,
    circular_distance,
    interval_of_cell,
)
from .operators import (
    CellFunction,
    SourcePanels,
    as_node_matrix,
    bergman_project,
    indicator_box,
    lambda_grid,
    maximal_dyadic,
)
from .weights import (
    CharacteristicReport,
    ConformalDeriv,
    Weight,
    bp_characteristic,
    weight_nodes,
)

_ADJ_TOL = 1e-12


class DomainSpec:
    """A planar domain given as the image of the disk under a catalog map."""

    def __init__(self, m: ConformalMap):
        self.map = m
        self.v = ConformalDeriv(m, 2.0)   # pullback of the area measure
        self.w = ConformalDeriv(m, 1.0)

    @property
    def name(self) -> str:
        return self.map.name

    def validate(self, mesh: DiskMesh) -> None:
        self.v.validate(mesh)

    def boundary_points(self, depth: int) -> np.ndarray:
        """Image boundary sampled at the 2^depth + 1 dyadic angles."""
        t = np.arange(2 ** depth + 1) / 2.0 ** depth
        return boundary_trace(self.map, TAU * t, depth)

    def diameter(self, depth: int = 7) -> float:
        p = self.boundary_points(min(depth, 8))
        return float(np.abs(p[:, None] - p[None, :]).max())


@dataclass(frozen=True)
class BoundaryDisk:
    """Euclidean disk centered at a boundary point of the image domain."""

    center: complex
    radius: float

    def contains(self, points) -> np.ndarray:
        return np.abs(np.asarray(points) - self.center) < self.radius


@dataclass(frozen=True)
class CellWeight(Weight):
    """Weight given cellwise on one grid, constant below the truncation."""

    cf: CellFunction

    @property
    def name(self):
        return f"cells@{self.cf.grid}:{self.cf.depth}"

    def values(self, z):
        return self.cf.evaluate(z)


# ---------------------------------------------------------------------------
# image measures


def _as_arc(box) -> Arc:
    return box.arc if isinstance(box, DyadicInterval) else box


def image_measure(domain: DomainSpec, box, u: Weight | None, mesh: DiskMesh) -> float:
    """sigma-area of psi(Q_box): the disk integral of u v over the truncated box."""
    uvw = (weight_nodes(u, mesh) * weight_nodes(domain.v, mesh) * mesh.w)
    if isinstance(box, DyadicInterval) and box.level > mesh.depth:
        raise ValueError("box deeper than the mesh truncation")
    mask = box_contains(_as_arc(box), mesh.z.ravel())
    return float(uvw.ravel()[mask].sum())


def bp_omega(u: Weight, domain: DomainSpec, p: float, meshes, depths=None) -> CharacteristicReport:
    """Image-side B_p characteristic; by change of variables it is the
    two-weight disk characteristic of the pullback, same quadrature bit for bit."""
    rep = bp_characteristic(u, domain.v, p, meshes, depths)
    rep.kind = "Bp(Omega)"
    rep.meta["domain"] = domain.name
    return rep


# ---------------------------------------------------------------------------
# boundary-disk characteristics


def _disk_scan(domain: DomainSpec, mesh: DiskMesh, center_depth: int | None,
               n_radii: int | None):
    """Yield (disk, node mask) over the sampling plan; the caller reduces."""
    cd = mesh.depth if center_depth is None else center_depth
    nr = mesh.depth if n_radii is None else n_radii
    centers = domain.boundary_points(min(cd, 10))
    diam = domain.diameter()
    psi_nodes = domain.map.map_values(mesh.z.ravel())
    for c in centers:
        dist = np.abs(psi_nodes - c)
        for j in range(nr + 1):
            r = diam * 0.5 ** j
            yield BoundaryDisk(complex(c), float(r)), dist < r


def dp_characteristic(
    u: Weight,
    domain: DomainSpec,
    p: float,
    mesh: DiskMesh,
    center_depth: int | None = None,
    n_radii: int | None = None,
) -> CharacteristicReport:
    """Truncated sup of the B_p functional over sampled boundary disks.

    All disk integrals are pulled back to masked node sums on the mesh;
    under-resolved disks (empty mask) are skipped and counted.
    """
    if p < 1:
        raise ValueError(f"D_p requires p >= 1, got {p}")
    U = weight_nodes(u, mesh).ravel()
    vw = (weight_nodes(domain.v, mesh) * mesh.w).ravel()
    uvw = U * vw
    with np.errstate(divide="ignore", over="ignore"):
        neg = U ** (-1.0 / (p - 1.0)) * vw if p > 1 else None
    best, best_disk, skipped, total = -np.inf, None, 0, 0
    for disk, mask in _disk_scan(domain, mesh, center_depth, n_radii):
        total += 1
        b = vw[mask].sum()
        if not mask.any() or b <= 0.0:
            skipped += 1
            continue
        first = uvw[mask].sum() / b
        if p == 1:
            second = float((1.0 / U[mask]).max())
        else:
            second = (neg[mask].sum() / b) ** (p - 1.0)
        val = first * second
        if val > best:
            best, best_disk = float(val), disk
    return CharacteristicReport(
        kind="Dp(Omega)",
        param=p,
        weight=u.name,
        reference=domain.name,
        depths=(mesh.depth,),
        values=(best,),
        extremal=(best_disk,),
        meta={"disks": total, "skipped": skipped},
    )


def rhd_characteristic(
    u: Weight,
    domain: DomainSpec,
    s: float,
    mesh: DiskMesh,
    center_depth: int | None = None,
    n_radii: int | None = None,
) -> CharacteristicReport:
    """Reverse Holder functional <sigma>_{s,D cap Omega} / <sigma>_{D cap Omega}
    over the same boundary-disk plan as dp_characteristic."""
    if s <= 1:
        raise ValueError(f"RH exponent must exceed 1, got {s}")
    U = weight_nodes(u, mesh).ravel()
    vw = (weight_nodes(domain.v, mesh) * mesh.w).ravel()
    uvw = U * vw
    pos = U ** s * vw
    best, best_disk, skipped, total = -np.inf, None, 0, 0
    for disk, mask in _disk_scan(domain, mesh, center_depth, n_radii):
        total += 1
        b = vw[mask].sum()
        if not mask.any() or b <= 0.0:
            skipped += 1
            continue
        mean = uvw[mask].sum() / b
        smean = (pos[mask].sum() / b) ** (1.0 / s)
        val = smean / mean
        if val > best:
            best, best_disk = float(val), disk
    return CharacteristicReport(
        kind="RHD(Omega)",
        param=s,
        weight=u.name,
        reference=domain.name,
        depths=(mesh.depth,),
        values=(best,),
        extremal=(best_disk,),
        meta={"disks": total, "skipped": skipped},
    )


# ---------------------------------------------------------------------------
# the image-box maximal operator


def m_psi_apply(g, domain: DomainSpec, mesh: DiskMesh) -> CellFunction:
    """Maximal function over image boxes, as the v-weighted dyadic maximal.

    The pullback identity <f>_{psi(Q_I)} = <g>_{v,Q_I} for g = f o psi makes
    this exactly the v-weighted maximal function of the pullback.
    """
    G = as_node_matrix(g, mesh)
    if np.iscomplexobj(G) and np.abs(G.imag).max() > 0:
        raise ValueError("m_psi needs f >= 0")
    if G.real.min() < 0:
        raise ValueError("m_psi needs f >= 0")
    return maximal_dyadic(g, domain.v, mesh)


def m_psi_weak_check(g, domain: DomainSpec, mesh: DiskMesh, lambdas=None) -> dict:
    """lam |{M_psi f > lam}|_Omega <= C ||f||_{L1(Omega)}: measured C per lam."""
    M = m_psi_apply(g, domain, mesh).values
    G = np.abs(as_node_matrix(g, mesh))
    vw = weight_nodes(domain.v, mesh) * mesh.w
    cell_omega = vw.sum(axis=1)
    norm = float((G * vw).sum())
    if lambdas is None:
        lambdas = lambda_grid(float(M.max()) / 2.0 or 1.0)
    rows, worst = [], 0.0
    for lam in np.asarray(lambdas, dtype=float):
        measure = float(cell_omega[M > lam].sum())
        rows.append((lam, measure))
        worst = max(worst, lam * measure / norm)
    return {"rows": rows, "worst": worst, "holds": worst <= 1.0 + 1e-12}


def maximal_power_b1(g, domain: DomainSpec, mesh: DiskMesh, q: float = 0.5) -> CharacteristicReport:
    """Image-side B_1 characteristic of (M_psi f)^q for q < 1."""
    if not 0 < q < 1:
        raise ValueError("the maximal-power weight needs 0 < q < 1")
    mq = m_psi_apply(g, domain, mesh)
    w = CellWeight(CellFunction(mq.grid, mq.depth, mq.values ** q))
    rep = bp_characteristic(w, domain.v, 1.0, mesh)
    rep.kind = "B1(Omega) of maximal power"
    rep.meta["q"] = q
    return rep


# ---------------------------------------------------------------------------
# covering lemmas


def _arcs_disjoint(a: Arc, b: Arc) -> bool:
    gap = circular_distance(a.center, b.center)
    return gap >= 0.5 * (a.length + b.length) - _ADJ_TOL


def vitali_select(intervals, domain: DomainSpec, mesh: DiskMesh) -> dict:
    """Greedy disjoint subfamily by descending image-box area.

    Repeatedly keeps the remaining interval with the largest |psi(Q_I)| and
    discards everything meeting it.  Reports the covering ratio
    sum_k |psi(Q_{I_k})| / |union psi(Q_I)|.
    """
    items = list(intervals)
    if not items:
        raise ValueError("vitali selection needs a nonempty family")
    arcs = [_as_arc(i) for i in items]
    vw = (weight_nodes(domain.v, mesh) * mesh.w).ravel()
    flat = mesh.z.ravel()
    masks = [box_contains(a, flat) for a in arcs]
    measures = np.array([vw[m].sum() for m in masks])
    remaining = list(range(len(items)))
    selected: list[int] = []
    while remaining:
        k = max(remaining, key=lambda i: measures[i])
        selected.append(k)
        remaining = [i for i in remaining if _arcs_disjoint(arcs[i], arcs[k])]
    union = np.zeros_like(masks[0])
    for m in masks:
        union |= m
    union_measure = float(vw[union].sum())
    total = float(measures[selected].sum())
    return {
        "selected": [items[i] for i in selected],
        "ratio": total / union_measure,
        "count": len(selected),
        "union_measure": union_measure,
    }


def neighbor_check(i1, i2, domain: DomainSpec, mesh: DiskMesh) -> dict:
    """|psi(Q_{I1 cup I2})| against |psi(Q_{I1})| + |psi(Q_{I2})| for adjacent arcs."""
    a1, a2 = _as_arc(i1), _as_arc(i2)
    end1 = a1.start + a1.length
    end2 = a2.start + a2.length
    if circular_distance(end1, a2.start) <= _ADJ_TOL:
        union = Arc(a1.start, a1.length + a2.length)
    elif circular_distance(end2, a1.start) <= _ADJ_TOL:
        union = Arc(a2.start, a1.length + a2.length)
    else:
        raise ValueError("neighbor check needs intervals sharing an endpoint")
    if union.length > 1.0:
        raise ValueError("the union must still be an arc")
    num = image_measure(domain, union, None, mesh)
    den = image_measure(domain, a1, None, mesh) + image_measure(domain, a2, None, mesh)
    return {"ratio": num / den, "union": union, "parts": (num, den)}


# ---------------------------------------------------------------------------
# transfer laws


def transfer_identity_check(f, domain: DomainSpec, mesh: DiskMesh, panels: SourcePanels | None = None) -> dict:
    """Fixed-point residual of the pulled-back projection on holomorphic data.

    For holomorphic f on the image, g = (f o psi) psi' is holomorphic on the
    disk, so the projection should reproduce it; the max-node relative
    residual is the transfer-law defect on this test.
    """
    dpsi = domain.map.deriv_values(mesh.z)
    g_nodes = np.asarray(f(domain.map.map_values(mesh.z))) * dpsi

    def g(z):
        return np.asarray(f(domain.map.map_values(z))) * domain.map.deriv_values(z)

    P = bergman_project(g, mesh, panels)
    scale = np.abs(g_nodes).max()
    return {
        "residual": float(np.abs(P - g_nodes).max() / scale),
        "scale": float(scale),
    }


def _default_strong_tests(mesh: DiskMesh):
    tests = [("const", lambda z: np.ones(z.shape, dtype=complex))]
    for cid in (1, 4, 3 + 4):
        iv = interval_of_cell(mesh.grid, cid)
        tests.append((f"box{cid}", indicator_box(iv, mesh)))
    tests.append(("radial", lambda z: (1.0 - np.abs(z)) ** 0.25))
    return tests


def transfer_strong_norms(
    u: Weight,
    p: float,
    domain: DomainSpec,
    mesh: DiskMesh,
    tests=None,
    panels: SourcePanels | None = None,
) -> dict:
    """Matched lower estimates of the projection norm on both sides.

    The image-side quotient uses the sigma measure and divides the projected
    values by psi'; the disk side uses the transferred weight u |psi'|^{2-p}
    directly.  The change of variables is exact on each test pair, so the
    two estimates differ only by floating-point association.
    """
    if not (1.0 < p < np.inf):
        raise ValueError("strong transfer needs 1 < p < inf")
    pan = panels if panels is not None else SourcePanels(mesh)
    U = weight_nodes(u, mesh)
    V = weight_nodes(domain.v, mesh)
    W = weight_nodes(domain.w, mesh)
    dpsi = domain.map.deriv_values(mesh.z)
    m_omega = U * V * mesh.w
    m_disk = U * W ** (2.0 - p) * mesh.w
    rows = []
    for name, g in (tests if tests is not None else _default_strong_tests(mesh)):
        G = as_node_matrix(g, mesh)
        P = bergman_project(g, mesh, pan)
        ratio_o = (
            float(((np.abs(P / dpsi) ** p) * m_omega).sum())
            / float(((np.abs(G / dpsi) ** p) * m_omega).sum())
        ) ** (1.0 / p)
        ratio_d = (
            float(((np.abs(P) ** p) * m_disk).sum())
            / float(((np.abs(G) ** p) * m_disk).sum())
        ) ** (1.0 / p)
        rows.append((name, ratio_o, ratio_d))
    omega = max(r[1] for r in rows)
    disk = max(r[2] for r in rows)
    gap = max(abs(r[1] - r[2]) / max(r[1], r[2]) for r in rows)
    return {"omega": omega, "disk": disk, "agreement": gap, "rows": rows}


def transfer_weak_check(
    g,
    lambdas,
    domain: DomainSpec,
    u: Weight,
    mesh: DiskMesh,
    panels: SourcePanels | None = None,
) -> dict:
    """Tail measures of the weak transfer identity on matched nodes.

    For g = (f o psi) psi', the sigma measure of {|Pi_Omega f| > lam} is the
    (u v)-mass of {|Pi g / psi'| > lam} while the disk side masks
    {|Pi g| / |psi'| > lam}; the sets agree up to node resolution.
    """
    pan = panels if panels is not None else SourcePanels(mesh)
    P = bergman_project(g, mesh, pan)
    dpsi = domain.map.deriv_values(mesh.z)
    W = weight_nodes(domain.w, mesh)
    m_uv = weight_nodes(u, mesh) * weight_nodes(domain.v, mesh) * mesh.w
    omega_vals = np.abs(P / dpsi)
    disk_vals = np.abs(P) / W
    rows, gap = [], 0.0
    for lam in np.atleast_1d(np.asarray(lambdas, dtype=float)):
        s_omega = float(m_uv[omega_vals > lam].sum())
        s_disk = float(m_uv[disk_vals > lam].sum())
        rows.append((float(lam), s_omega, s_disk))
        gap = max(gap, abs(s_omega - s_disk))
    total = float(m_uv.sum())
    return {"rows": rows, "max_gap": gap, "relative_gap": gap / total}


def necessity_probe(domain: DomainSpec, p: float, mesh: DiskMesh, depths=None) -> CharacteristicReport:
    """Per-box ratio of the necessity display for v = |psi'|^2.

    LHS is the 1/p-average over Q_I of M_v(chi_{Q_I} v^{-p/(p-1)}) times the
    plain average of v; RHS the plain average of v^{-1/(p-1)}; the sup of
    LHS/RHS is reported per depth.
    """
    if p <= 1:
        raise ValueError("necessity probe needs p > 1")
    dl = tuple(depths) if depths is not None else (mesh.depth,)
    q = 1.0 / p
    values, extremal = [], []
    for d in dl:
        m = DiskMesh(mesh.grid, d, 4, 4) if d != mesh.depth else mesh
        V = weight_nodes(domain.v, m)
        g_nodes = V ** (-p / (p - 1.0))
        area = m.box_sums(m.cell_area)
        avg_v = m.box_sums((V * m.w).sum(axis=1)) / area
        avg_neg = m.box_sums((V ** (-1.0 / (p - 1.0)) * m.w).sum(axis=1)) / area
        ratios = np.empty(m.ncells)
        for cid in range(m.ncells):
            iv_mask = np.zeros(m.ncells, dtype=bool)
            for sl in m.subtree_slices(interval_of_cell(m.grid, cid), d):
                iv_mask[sl] = True
            F = np.where(iv_mask[:, None], g_nodes, 0.0)
            M = maximal_dyadic(F, domain.v, m).values
            qavg = (float((M ** q * m.cell_area)[iv_mask].sum()) / area[cid]) ** p
            ratios[cid] = qavg * avg_v[cid] / avg_neg[cid]
        k = int(np.argmax(ratios))
        values.append(float(ratios[k]))
        extremal.append(interval_of_cell(m.grid, k))
    return CharacteristicReport(
        kind="necessity",
        param=p,
        weight=domain.v.name,
        reference=domain.name,
        depths=dl,
        values=tuple(values),
        extremal=tuple(extremal),
    )
