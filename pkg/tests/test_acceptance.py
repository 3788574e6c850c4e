"""Acceptance suite: ten end-to-end criteria, one test and one printed
pass/fail line each (run with -s to see the lines).

Criterion 4 asserts a per-depth growth rate the log-degenerate example
cannot deliver (its characteristic grows like depth squared, roughly 1.2x
to 1.3x per depth); the test states the criterion faithfully and stays red.
"""

import time

import numpy as np
import pytest

from bergmanlab.conformal import parse_map
from bergmanlab.dyadic import (
    GRIDS,
    Arc,
    DiskMesh,
    DyadicInterval,
    box_area,
    box_contains,
    build_mesh_pair,
    circular_distance,
    interval_of_cell,
    level_slice,
    top_area,
)
from bergmanlab.experiments import default_config, run_experiment
from bergmanlab.operators import (
    CellFunction,
    SourcePanels,
    as_node_matrix,
    bergman_project,
    cz_decompose,
    cz_verify,
    indicator_box,
    lambda_grid,
    maximal_weak_check,
    sparse_norm_check,
    weak_type_sweep,
    weighted_lp_norm,
)
from bergmanlab.transfer import (
    DomainSpec,
    image_measure,
    m_psi_weak_check,
    neighbor_check,
    transfer_identity_check,
    transfer_strong_norms,
    transfer_weak_check,
    vitali_select,
)
from bergmanlab.weights import (
    ConformalDeriv,
    bp_characteristic,
    parse_weight,
    regularization_suite,
    reverse_holder_gain,
    weight_nodes,
)

WEIGHT_CATALOG = [
    "const:1", "const:2.5", "power:0.5", "power:-0.5", "power:0.8", "power:0.25",
    "derivsq:quadratic:0.25", "derivsq:moebius:0.4+0i", "derivsq:log_example",
    "derivpow:quadratic:0.25^1.0",
]
REFERENCE_CATALOG = [None, "const:1", "derivsq:quadratic:0.25",
                     "derivsq:moebius:0.3+0.2i", "derivsq:log_example"]
MAP_CATALOG = ["identity", "quadratic:0.25", "moebius:0.3+0.2i", "log_example"]


def _line(num: int, name: str, ok: bool, detail: str) -> bool:
    print(f"criterion {num:2d} {name}: {'PASS' if ok else 'FAIL'}  ({detail})")
    return ok


def test_criterion_01_grid_exactness():
    worst = 0.0
    for depth in range(11):
        for grid in GRIDS:
            mesh = DiskMesh(grid, depth)
            rim = 1.0 - 2.0 ** (-depth - 1)
            collar = 1.0 - rim * rim
            sums = mesh.box_sums(mesh.cell_area, depth)
            for k in range(depth + 1):
                ln = 2.0 ** -k
                sl = level_slice(k)
                worst = max(worst, np.max(np.abs(mesh.cell_area[sl] - top_area(ln))))
                worst = max(worst, np.max(np.abs(sums[sl] + ln * collar - box_area(ln))))
            # partition: cells tile the truncated disk
            worst = max(worst, abs(mesh.cell_area.sum() - rim * rim))
            # parent/child additivity on the box heap
            n_parents = 2 ** depth - 1
            for c in range(n_parents):
                gap = sums[c] - (mesh.cell_area[c] + sums[2 * c + 1] + sums[2 * c + 2])
                worst = max(worst, abs(gap))
            # interval nesting
            for k in range(1, depth + 1):
                for j in range(2 ** k):
                    iv = DyadicInterval(grid, k, j)
                    assert iv.parent().contains(iv)
            for k in range(depth + 1):
                left, right = DyadicInterval(grid, k, 0), DyadicInterval(grid, k, 2 ** k - 1)
                if k > 0:
                    assert not left.contains(right) and not right.contains(left)
    ok = worst <= 1e-12
    _line(1, "grid/geometry exactness", ok, f"worst closed-form gap {worst:.2e} <= 1e-12")
    assert ok


def test_criterion_02_projection_reproduction():
    errs_by_depth = {}
    t8 = None
    for d in (5, 6, 7, 8):
        t0 = time.perf_counter()
        mesh = DiskMesh("G1", d, 4, 4)
        pan = SourcePanels(mesh)
        errs = []
        for n in range(6):
            f = lambda z, n=n: z ** n
            P = bergman_project(f, mesh, pan)
            ref = as_node_matrix(f, mesh)
            errs.append(weighted_lp_norm(P - ref, mesh, 2.0) / weighted_lp_norm(ref, mesh, 2.0))
        if d == 7:
            conj = lambda z: np.conj(z)
            conj_err = (weighted_lp_norm(bergman_project(conj, mesh, pan), mesh, 2.0)
                        / weighted_lp_norm(as_node_matrix(conj, mesh), mesh, 2.0))
        errs_by_depth[d] = errs
        if d == 8:
            t8 = time.perf_counter() - t0
    ok_repro = max(errs_by_depth[7]) <= 1e-2
    ok_decreasing = all(
        all(errs_by_depth[d + 1][n] < errs_by_depth[d][n] for n in range(6))
        for d in (5, 6, 7)
    )
    ok_conj = conj_err <= 1e-2
    ok_time = t8 <= 60.0
    ok = ok_repro and ok_decreasing and ok_conj and ok_time
    _line(2, "projection reproduction", ok,
          f"depth-7 worst {max(errs_by_depth[7]):.2e} <= 1e-2, decreasing 5->8, "
          f"conj {conj_err:.1e}, depth-8 batch {t8:.2f}s <= 60s")
    assert ok


def test_criterion_03_sparse_bound_catalog():
    rng = np.random.default_rng(20260814)
    mesh = DiskMesh("G1", 5, 4, 4)
    violations, worst = 0, 0.0
    for _ in range(20):
        w = parse_weight(WEIGHT_CATALOG[rng.integers(len(WEIGHT_CATALOG))])
        vname = REFERENCE_CATALOG[rng.integers(len(REFERENCE_CATALOG))]
        v = parse_weight(vname) if vname else None
        f = CellFunction("G1", 5, rng.standard_normal(mesh.ncells) ** 2 + 0.1)
        for p in (1.5, 2.0, 3.0):
            chk = sparse_norm_check(f, w, v, p, mesh)
            worst = max(worst, chk["measured"] / chk["bound"])
            violations += 0 if chk["holds"] else 1
    ok = violations == 0
    _line(3, "sparse operator bound", ok,
          f"20 triples x 3 exponents, {violations} violations, worst measured/bound {worst:.3f}")
    assert ok


def test_criterion_04_counterexample_profile():
    u = parse_weight("derivsq:log_example")
    b1, b2 = {}, {}
    for d in range(6, 11):
        pair = build_mesh_pair(d, 4, 4)
        b1[d] = bp_characteristic(u, None, 1.0, pair).final
        if d >= 8:
            b2[d] = bp_characteristic(u, None, 2.0, pair).final
    ratios = [b1[d + 1] / b1[d] for d in range(6, 10)]
    b2_span = max(b2.values()) / min(b2.values()) - 1.0
    ok_b1 = all(r >= 1.5 for r in ratios)
    ok_b2 = b2_span < 0.05
    ok = ok_b1 and ok_b2
    _line(4, "counterexample profile", ok,
          f"B1 per-depth ratios {[round(r, 3) for r in ratios]} (need >= 1.5 each), "
          f"B2 variation {100 * b2_span:.2f}% < 5%")
    assert ok_b2
    assert ok_b1, "truncated B1 characteristic grows ~1.2x per depth (depth-squared law), not 1.5x"


def test_criterion_05_regularization_suite():
    mesh = DiskMesh("G1", 5, 4, 4)
    rows = []
    for name in WEIGHT_CATALOG:
        u = parse_weight(name)
        reg, suite = regularization_suite(u, None, mesh, s=0.5)
        gain = reverse_holder_gain(reg, None, mesh)
        rows.append((name, suite.average_gap <= 1e-10, suite.power_mean_gap <= 1e-12,
                     np.isfinite(suite.apr), gain.tau > 1.0 and gain.holds))
    bad = [r for r in rows if not all(r[1:])]
    ok = not bad
    _line(5, "regularization suite", ok,
          f"{len(rows)} catalog weights: averages preserved to 1e-10, "
          f"power mean cellwise, APR finite, tau > 1" if ok else f"failures: {bad}")
    assert ok


def test_criterion_06_transfer_identities():
    mesh = DiskMesh("G1", 7, 4, 4)
    pan = SourcePanels(mesh)
    doms = [DomainSpec(parse_map(n)) for n in ("quadratic:0.25", "moebius:0.3+0.2i")]
    worst_resid = 0.0
    for dom in doms:
        for f in (lambda w: np.ones_like(w), lambda w: w, lambda w: w * w):
            worst_resid = max(worst_resid, transfer_identity_check(f, dom, mesh, panels=pan)["residual"])
    worst_strong = worst_weak = 0.0
    for dom in doms:
        for uname in ("const:1", "power:0.5"):
            u = parse_weight(uname)
            for p in (1.5, 2.0, 3.0):
                worst_strong = max(worst_strong, transfer_strong_norms(u, p, dom, mesh)["agreement"])
            g = indicator_box(interval_of_cell("G1", 9), mesh)
            wk = transfer_weak_check(g, lambda_grid(0.1, 9), dom, u, mesh)
            worst_weak = max(worst_weak, wk["relative_gap"])
    ok = worst_resid <= 1e-2 and worst_strong <= 1e-8 and worst_weak <= 1e-8
    _line(6, "transfer identities", ok,
          f"identity residual {worst_resid:.2e} <= 1e-2, strong agreement {worst_strong:.1e} "
          f"<= 1e-8, weak agreement {worst_weak:.1e} <= 1e-8")
    assert ok


def test_criterion_07_lower_bound_trend():
    rep = run_experiment(default_config("lower-bound-trend"))
    header, rows = rep.tables["trend"]
    col = {name: [row[header.index(name)] for row in rows] for name in header}
    band = col["band"]
    norm_growth = col["norm_estimate_exact"][-1] / col["norm_estimate_exact"][0]
    char_growth = col["b2_char_exact"][-1] / col["b2_char_exact"][0]
    ok_band = max(band) / min(band) <= 10.0
    ok_growth = norm_growth > 3.0 and char_growth > 3.0
    ok = ok_band and ok_growth
    _line(7, "lower-bound trend", ok,
          f"band spread {max(band) / min(band):.2f} <= 10, norm estimate x{norm_growth:.2f} "
          f"and characteristic x{char_growth:.2f} both > 3")
    assert ok


def test_criterion_08_weak_type_suite():
    rng = np.random.default_rng(20260814)
    mesh = DiskMesh("G1", 5, 4, 4)
    unames = ["const:1", "power:0.5", "power:-0.5", "derivsq:quadratic:0.25",
              "derivsq:moebius:0.4+0i"]
    violations = 0
    for _ in range(10):
        u = parse_weight(unames[rng.integers(len(unames))])
        m = parse_map(MAP_CATALOG[rng.integers(len(MAP_CATALOG))])
        w, v = ConformalDeriv(m, 1.0), ConformalDeriv(m, 2.0)
        g = CellFunction("G1", 5, rng.standard_normal(mesh.ncells) ** 2 + 0.05)
        mwk = maximal_weak_check(g, u, w, mesh)
        swp = weak_type_sweep(g, u, v, w, mesh)
        gmass = float((g.values * mesh.cell_area).sum())
        family, g1, g2 = cz_decompose(g, w, 0.7 * gmass, mesh)
        chk = cz_verify(family, g, g1, g2, w, mesh)
        cz_ok = all(chk[k] for k in ("disjoint", "selected_above", "maximal", "good1", "good2"))
        if not (mwk["holds"] and swp["holds"] and cz_ok):
            violations += 1
    ok = violations == 0
    _line(8, "weak-type suite", ok,
          f"10 catalog triples: maximal weak bound at every lambda, CZ invariants exact, "
          f"sweep under theorem constant; {violations} violations")
    assert ok


def test_criterion_09_uniform_domain_equivalence():
    rep = run_experiment(default_config("uniform-domain-equivalence"))
    header, rows = rep.tables["equivalence"]
    two = [row[header.index("two_sided_factor")] for row in rows]
    tail_var = max(two[-3:]) / min(two[-3:]) - 1.0
    ok = max(two) <= 50.0 and tail_var < 0.25
    _line(9, "uniform-domain equivalence", ok,
          f"two-sided factor max {max(two):.4f} <= 50 over depths 5..8, "
          f"last-three variation {100 * tail_var:.2f}% < 25%")
    assert ok


def test_criterion_10_vitali_neighbor_maximal():
    mesh = DiskMesh("G1", 5, 4, 4)
    doms = {n: DomainSpec(parse_map(n)) for n in ("identity", "log_example")}

    worst_overlap, worst_add = -1.0, 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        arcs = []
        for _ in range(50):
            k = int(rng.integers(2, 6))
            j = int(rng.integers(0, 2 ** k))
            span = int(rng.integers(1, 2 ** k // 2 + 1))
            arcs.append(Arc(j / 2 ** k, span / 2 ** k))
        for dom in doms.values():
            sel = vitali_select(arcs, dom, mesh)["selected"]
            for i, a in enumerate(sel):
                for b in sel[i + 1:]:
                    gap = circular_distance(a.center, b.center) - 0.5 * (a.length + b.length)
                    worst_overlap = max(worst_overlap, -gap)
            uvw = weight_nodes(dom.v, mesh) * mesh.w
            masks = [box_contains(a, mesh.z.ravel()) for a in sel]
            union = float(uvw.ravel()[np.logical_or.reduce(masks)].sum())
            total = sum(image_measure(dom, a, None, mesh) for a in sel)
            worst_add = max(worst_add, abs(total - union) / union)
    ok_vitali = worst_overlap <= 0.0 and worst_add <= 1e-12

    mesh8 = DiskMesh("G1", 8, 4, 4)
    rng = np.random.default_rng(7)
    ratios = []
    while len(ratios) < 400:
        k1 = int(rng.integers(1, 6))
        j1 = int(rng.integers(0, 2 ** k1))
        k2 = int(rng.integers(k1, min(k1 + 3, 7) + 1))
        j2 = ((j1 + 1) * 2 ** (k2 - k1)) % 2 ** k2
        i1, i2 = DyadicInterval("G1", k1, j1), DyadicInterval("G1", k2, j2)
        for dom in doms.values():
            ratios.append(neighbor_check(i1, i2, dom, mesh8)["ratio"])
    ok_neighbor = all(np.isfinite(ratios)) and max(ratios) <= 4.0

    ok_mpsi = True
    for dom in list(doms.values()) + [DomainSpec(parse_map("quadratic:0.25"))]:
        for gi in range(3):
            g = CellFunction("G1", 5, np.random.default_rng(gi).standard_normal(mesh.ncells) ** 2)
            ok_mpsi = ok_mpsi and m_psi_weak_check(g, dom, mesh)["holds"]

    ok = ok_vitali and ok_neighbor and ok_mpsi
    _line(10, "vitali/neighbor/maximal", ok,
          f"selection overlap {worst_overlap:.1e} <= 0, additivity gap {worst_add:.1e}, "
          f"neighbor ratio in [{min(ratios):.2f}, {max(ratios):.2f}] over 200 pairs x 2 maps, "
          f"image maximal weak type holds")
    assert ok
