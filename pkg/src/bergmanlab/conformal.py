"""Catalog of injective holomorphic maps of the disk and distortion diagnostics.

Every map exposes vectorized ``map_values`` / ``deriv_values`` with exact
derivative formulas (no numerical differentiation inside the package; finite
differences are only used as a test oracle).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import TAU, Arc, BOUNDARY_TOL, DiskMesh, DyadicInterval, box_contains, circular_distance


class ConformalMap:
    """Base class; subclasses implement map_values/deriv_values on complex arrays."""

    name = "map"

    def map_values(self, z):
        raise NotImplementedError

    def deriv_values(self, z):
        raise NotImplementedError

    def __call__(self, z):
        return self.map_values(z)


@dataclass(frozen=True)
class Identity(ConformalMap):
    name: str = "identity"

    def map_values(self, z):
        return np.asarray(z, dtype=complex)

    def deriv_values(self, z):
        return np.ones_like(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class Rotation(ConformalMap):
    """z -> e^{i phase} z."""

    phase: float = 0.0

    @property
    def name(self):
        return f"rotation:{self.phase}"

    def map_values(self, z):
        return np.exp(1j * self.phase) * np.asarray(z, dtype=complex)

    def deriv_values(self, z):
        z = np.asarray(z, dtype=complex)
        return np.full_like(z, np.exp(1j * self.phase))


@dataclass(frozen=True)
class Moebius(ConformalMap):
    """Disk automorphism tau_a(z) = (a - z)/(1 - conj(a) z), an involution."""

    a: complex = 0.0

    def __post_init__(self):
        if abs(self.a) >= 1.0:
            raise ValueError(f"Moebius parameter must lie in the open disk, got {self.a}")

    @property
    def name(self):
        return f"moebius:{self.a}"

    def map_values(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a - z) / (1.0 - np.conj(self.a) * z)

    def deriv_values(self, z):
        z = np.asarray(z, dtype=complex)
        return -(1.0 - abs(self.a) ** 2) / (1.0 - np.conj(self.a) * z) ** 2


@dataclass(frozen=True)
class Quadratic(ConformalMap):
    """z -> z + c z^2, injective on the disk for |c| < 1/2."""

    c: complex = 0.25

    def __post_init__(self):
        if abs(self.c) >= 0.5:
            raise ValueError(f"quadratic coefficient must satisfy |c| < 1/2, got {self.c}")

    @property
    def name(self):
        return f"quadratic:{self.c}"

    def map_values(self, z):
        z = np.asarray(z, dtype=complex)
        return z + self.c * z * z

    def deriv_values(self, z):
        z = np.asarray(z, dtype=complex)
        return 1.0 + 2.0 * self.c * z


@dataclass(frozen=True)
class LogExample(ConformalMap):
    """psi1(z) = psi0((z+1)/4) with psi0(w) = w/log(w), principal branch.

    (z+1)/4 maps the disk onto the disk D(1/4, 1/4) in the right half
    plane, where the principal logarithm is safe.  The derivative
    psi0'(w) = (log w - 1)/(log w)^2 vanishes logarithmically as w -> 0,
    so |psi1'| -> 0 at the single boundary point z = -1.
    """

    name: str = "log_example"

    @staticmethod
    def _inner(z):
        return (np.asarray(z, dtype=complex) + 1.0) / 4.0

    def map_values(self, z):
        w = self._inner(z)
        return w / np.log(w)

    def deriv_values(self, z):
        w = self._inner(z)
        lw = np.log(w)
        return (lw - 1.0) / (lw * lw) / 4.0


@dataclass(frozen=True)
class Composition(ConformalMap):
    outer: ConformalMap
    inner: ConformalMap

    @property
    def name(self):
        return f"compose({self.outer.name},{self.inner.name})"

    def map_values(self, z):
        return self.outer.map_values(self.inner.map_values(z))

    def deriv_values(self, z):
        iz = self.inner.map_values(z)
        return self.outer.deriv_values(iz) * self.inner.deriv_values(z)


def _parse_complex(text: str) -> complex:
    return complex(text.replace("i", "j").replace(" ", ""))


def parse_map(name: str) -> ConformalMap:
    """Parse a catalog name: identity, rotation:T, moebius:A, quadratic:C, log_example."""
    head, _, arg = name.partition(":")
    if head == "identity":
        return Identity()
    if head == "rotation":
        return Rotation(float(arg or 0.0))
    if head == "moebius":
        return Moebius(_parse_complex(arg or "0"))
    if head == "quadratic":
        return Quadratic(_parse_complex(arg or "0.25"))
    if head == "log_example":
        return LogExample()
    raise ValueError(f"unknown map name {name!r}")


# ---------------------------------------------------------------------------
# Distortion diagnostics


def koebe_ratio(m: ConformalMap, mesh: DiskMesh, dense: int = 0) -> float:
    """Worst per-cell distortion max|psi'| / min|psi'| over the mesh cells.

    With ``dense = n`` the extrema are taken on an n x n uniform grid over
    the closed cell (corners included), so the dense value certifies an
    upper bound for the node-based one.
    """
    if dense:
        ratios = []
        for cid in range(mesh.ncells):
            iv = mesh.interval(cid)
            ell = iv.length
            rr = np.linspace(1.0 - ell, 1.0 - 0.5 * ell, dense)
            tt = iv.start + np.linspace(0.0, ell, dense)
            zz = rr[:, None] * np.exp(1j * TAU * tt[None, :])
            d = np.abs(m.deriv_values(zz))
            ratios.append(d.max() / d.min())
        return float(max(ratios))
    d = np.abs(m.deriv_values(mesh.z))
    return float((d.max(axis=1) / d.min(axis=1)).max())


def koebe_report(m: ConformalMap, depths: list[int], n_r: int = 4, n_theta: int = 4, grid: str = "G1") -> dict[int, float]:
    return {d: koebe_ratio(m, DiskMesh(grid, d, n_r, n_theta)) for d in depths}


def boundary_trace(m: ConformalMap, theta, depth: int):
    """Image of the point(s) at angle ``theta`` (radians) just inside the collar."""
    rho = 1.0 - 2.0 ** (-depth - 2)
    out = m.map_values(rho * np.exp(1j * np.asarray(theta, dtype=float)))
    return complex(out) if np.ndim(theta) == 0 else out


def _box_boundary_sample(arc: Arc, n: int) -> np.ndarray:
    """Dense sample of the boundary of a Carleson box (four polar edges)."""
    ell = arc.length
    t0, t1 = arc.start, arc.start + ell
    th = TAU * np.linspace(t0, t1, n)
    rr = np.linspace(1.0 - ell, 1.0, n)
    inner = (1.0 - ell) * np.exp(1j * th)
    outer = 1.0 * np.exp(1j * th)
    left = rr * np.exp(1j * TAU * t0)
    right = rr * np.exp(1j * TAU * t1)
    return np.concatenate([inner, outer, left, right])


def _arc_hull_of(points: np.ndarray) -> Arc:
    """Smallest box (as an arc) containing the sample: radial depth + angular spread."""
    s = (1.0 - np.abs(points)).max()
    t = np.angle(points) / TAU
    center = np.angle(np.exp(1j * TAU * t).mean()) / TAU
    half_width = circular_distance(t, center).max()
    length = max(s, 2.0 * half_width)
    length = min(length, 1.0)
    return Arc(center - 0.5 * length, length)


def automorphism_sandwich(
    interval: DyadicInterval | Arc,
    a: complex,
    n_boundary: int = 1024,
    tol: float = 1e-4,
) -> tuple[Arc, Arc, float]:
    """Sandwich the Moebius image of a Carleson box between two boxes.

    Returns arcs ``(K, J)`` with ``Q_K <= tau_a(Q_I) <= Q_J`` plus the
    length ratio ``l(K)/l(J)``.  The outer arc comes from the hull of a
    dense boundary sample; the inner arc from a bisection search using the
    involution tau_a = tau_a^{-1} (a candidate box is inside the image iff
    its own boundary maps into Q_I).
    """
    arc = interval.arc if isinstance(interval, DyadicInterval) else interval
    tau = Moebius(a)
    image_boundary = tau.map_values(_box_boundary_sample(arc, n_boundary))
    outer = _arc_hull_of(image_boundary)

    center = float(np.angle(tau.map_values(np.array(np.exp(1j * arc.center_theta))))) / TAU

    def fits(length: float) -> bool:
        cand = Arc(center - 0.5 * length, length)
        back = tau.map_values(_box_boundary_sample(cand, n_boundary))
        if not bool(np.all(box_contains(arc, back))):
            return False
        interior = tau.map_values(np.array((1.0 - 0.5 * length) * np.exp(1j * cand.center_theta)))
        return bool(box_contains(arc, interior))

    hi = outer.length
    if fits(hi):
        inner = Arc(center - 0.5 * hi, hi)
        return inner, outer, inner.length / outer.length
    lo = 0.0
    # bisection on the inner box length
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        if fits(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * outer.length:
            break
    if lo == 0.0:
        raise ValueError("no inner box found; increase n_boundary or tol")
    inner = Arc(center - 0.5 * lo, lo)
    return inner, outer, inner.length / outer.length
