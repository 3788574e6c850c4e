"""Named experiment runners assembling the library into end-to-end checks.

Each experiment emits per-depth tables plus a verdict per tracked quantity:
"bounded" when the series stays under its bound and stable, "growing" when
consecutive depth ratios clear the configured factor (or a bound is
violated), "inconclusive" otherwise.  Verdicts are pure functions of the
emitted tables, so they can be recomputed offline from the CSV.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .conformal import parse_map
from .dyadic import DiskMesh, build_mesh_pair, interval_of_cell
from .operators import (
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
from .transfer import DomainSpec, bp_omega, dp_characteristic
from .weights import (
    ConformalDeriv,
    PowerDistance,
    PowerOf,
    Product,
    b1_bp_product_check,
    best_r,
    bp_characteristic,
    exponent_table,
    parse_weight,
    r_scan,
    regularization_suite,
    reverse_holder_gain,
    weight_nodes,
)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the constraint."""


_NEEDS_P = {"b1-implies-bp", "lower-bound-trend", "uniform-domain-equivalence"}


@dataclass
class ExperimentConfig:
    experiment: str
    map: str = "identity"
    weight: str = "const:1"
    p: float = 2.0
    p0: float = 1.5
    s: float = 0.5
    q: float = 2.0
    theta: float = 0.25
    depth_min: int = 4
    depth_max: int = 7
    quad_order: int = 4
    lambda_count: int = 13
    growth_factor: float = 1.15
    seed: int = 0
    out: str = "runs"

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"constraint violated: experiment in {sorted(EXPERIMENTS)} (got {self.experiment!r})"
            )
        if self.experiment in _NEEDS_P and not self.p > 1:
            raise ConfigError(f"constraint violated: p > 1 (got p = {self.p})")
        if self.experiment == "lower-bound-trend" and self.p != 2.0:
            raise ConfigError(
                f"constraint violated: p = 2 for lower-bound-trend (got p = {self.p})"
            )
        if not self.theta < 0.5:
            raise ConfigError(f"constraint violated: theta < 1/2 (got theta = {self.theta})")
        if not 1 <= self.p0 < 2:
            raise ConfigError(f"constraint violated: p0 in [1, 2) (got p0 = {self.p0})")
        if not 0 < self.s < 1:
            raise ConfigError(f"constraint violated: s in (0, 1) (got s = {self.s})")
        if not self.q >= 1:
            raise ConfigError(f"constraint violated: q >= 1 (got q = {self.q})")
        if self.q > 1 and (1.0 - self.theta) * self.q / (self.q - 1.0) < 1.0:
            raise ConfigError(
                f"constraint violated: (1 - theta) * q' >= 1 (got q = {self.q}, theta = {self.theta})"
            )
        if self.depth_min < 2 or self.depth_max < self.depth_min:
            raise ConfigError(
                f"constraint violated: 2 <= depth_min <= depth_max (got {self.depth_min}..{self.depth_max})"
            )
        if self.depth_max > 10:
            raise ConfigError(f"constraint violated: depth_max <= 10 (got {self.depth_max})")
        if self.quad_order < 2:
            raise ConfigError(f"constraint violated: quad_order >= 2 (got {self.quad_order})")
        if self.lambda_count < 3:
            raise ConfigError(f"constraint violated: lambda_count >= 3 (got {self.lambda_count})")
        if not self.growth_factor > 1:
            raise ConfigError(
                f"constraint violated: growth_factor > 1 (got {self.growth_factor})"
            )
        parse_map(self.map)
        parse_weight(self.weight)

    @property
    def q0(self) -> float:
        return self.p0 / (2.0 - self.p0)

    @property
    def depths(self) -> range:
        return range(self.depth_min, self.depth_max + 1)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def parse_config(text: str) -> ExperimentConfig:
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError("constraint violated: config must be a JSON object")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"constraint violated: unknown config fields {unknown}")
    if "experiment" not in data:
        raise ConfigError("constraint violated: config needs an 'experiment' field")
    cfg = ExperimentConfig(**data)
    cfg.validate()
    return cfg


@dataclass
class RunReport:
    config: ExperimentConfig
    tables: dict           # name -> (header tuple, list of row tuples)
    verdicts: dict         # quantity -> bounded | growing | inconclusive
    expected: dict         # quantity -> bounded | growing
    wall_clock: float
    version: str = field(default=__version__)

    @property
    def exit_code(self) -> int:
        bad = [q for q, v in self.verdicts.items() if v == "growing" and self.expected[q] == "bounded"]
        if bad:
            return 2
        if any(v != self.expected[q] for q, v in self.verdicts.items()):
            return 3
        return 0


def growth_verdict(values, factor: float, tol: float = 0.05) -> str:
    """Classify a depth series: tail ratios over the factor mean growing,
    a tail spread under tol means bounded."""
    v = [float(x) for x in values]
    if len(v) < 3 or not all(np.isfinite(x) and x > 0 for x in v):
        return "inconclusive"
    ratios = [v[i + 1] / v[i] for i in range(len(v) - 1)]
    tail = ratios[-3:] if len(ratios) >= 3 else ratios
    if all(r >= factor for r in tail):
        return "growing"
    window = v[-3:]
    if max(window) / min(window) - 1.0 <= tol:
        return "bounded"
    if all(r < factor for r in tail):
        return "bounded"
    return "inconclusive"


def _bound_verdict(flags) -> str:
    return "bounded" if all(flags) else "growing"


# ---------------------------------------------------------------------------
# runners


def _run_b1_implies_bp(cfg: ExperimentConfig):
    u = parse_weight(cfg.weight)
    v = ConformalDeriv(parse_map(cfg.map), 2.0)
    rows, ratios, shapes, within = [], [], [], []
    for d in cfg.depths:
        pair = build_mesh_pair(d, cfg.quad_order, cfg.quad_order)
        chk = b1_bp_product_check(u, v, cfg.p, pair)
        ones = indicator_box(interval_of_cell("G1", 0), pair.g1)
        sp = sparse_norm_check(ones, Product((u, PowerOf(v, 1.0 - cfg.p / 2.0))), v, cfg.p, pair.g1)
        ratio = chk["lhs"] / chk["rhs"]
        rows.append((d, chk["lhs"], chk["v_b1"], chk["u_bpv"], chk["rhs"], ratio,
                     sp["measured"], sp["bound"], int(chk["holds"]), int(sp["holds"])))
        ratios.append(ratio)
        shapes.append(chk["rhs"])
        within.append(chk["holds"] and sp["holds"])
    header = ("depth", "product_char", "v_b1", "u_bp_v", "product_bound", "product_ratio",
              "sparse_quotient", "sparse_bound", "product_holds", "sparse_holds")
    verdicts = {
        "product_ratio": "growing" if any(r > 1.0 + 1e-10 for r in ratios) else "bounded",
        "sparse_within_bound": _bound_verdict(within),
        "constant_shape": growth_verdict(shapes, cfg.growth_factor),
    }
    expected = {"product_ratio": "bounded", "sparse_within_bound": "bounded", "constant_shape": "bounded"}
    return {"estimate": (header, rows)}, verdicts, expected


def _run_regularization_chain(cfg: ExperimentConfig):
    u = parse_weight(cfg.weight)
    v = ConformalDeriv(parse_map(cfg.map), 2.0)
    tab = exponent_table(cfg.p0, cfg.p)
    exp_rows = [(str(tab.p0), str(tab.p), str(tab.q0), str(tab.q1), str(tab.q2),
                 str(tab.theta1), str(tab.theta2), int(tab.identity_holds()))]
    rows, gaps, rh_ok, chain = [], [], [], []
    for d in cfg.depths:
        mesh = DiskMesh("G1", d, cfg.quad_order, cfg.quad_order)
        reg, suite = regularization_suite(u, v, mesh, s=cfg.s)
        gain = reverse_holder_gain(reg, v, mesh)
        best = best_r(r_scan(u, cfg.q, v, mesh, theta=cfg.theta))
        rows.append((d, suite.average_gap, suite.power_mean_gap, suite.apr,
                     gain.tau, gain.rh_tau, gain.bound, int(gain.holds),
                     best["r"], best["constant"]))
        gaps.append(suite.average_gap <= 1e-10 and suite.power_mean_gap <= 1e-12)
        rh_ok.append(gain.holds and gain.tau > 1.0)
        chain.append(best["constant"])
    header = ("depth", "average_gap", "power_mean_gap", "apr_reg", "tau", "rh_tau",
              "rh_bound", "rh_holds", "best_r", "chain_constant")
    exp_header = ("p0", "p", "q0", "q1", "q2", "theta1", "theta2", "identities_hold")
    verdicts = {
        "average_preservation": _bound_verdict(gaps),
        "reverse_holder_gain": _bound_verdict(rh_ok),
        "chain_constant": growth_verdict(chain, cfg.growth_factor),
    }
    expected = {k: "bounded" for k in verdicts}
    return {"chain": (header, rows), "exponents": (exp_header, exp_rows)}, verdicts, expected


def _run_counterexample(cfg: ExperimentConfig):
    u = ConformalDeriv(parse_map(cfg.map), 2.0)
    rows, b1s, b2s = [], [], []
    for d in cfg.depths:
        pair = build_mesh_pair(d, cfg.quad_order, cfg.quad_order)
        b1 = bp_characteristic(u, None, 1.0, pair).final
        b2 = bp_characteristic(u, None, 2.0, pair).final
        rows.append((d, b1, b1 / b1s[-1] if b1s else float("nan"), b2))
        b1s.append(b1)
        b2s.append(b2)
    header = ("depth", "b1_char", "b1_ratio", "b2_char")
    verdicts = {
        "b1_char": growth_verdict(b1s, cfg.growth_factor),
        "b2_char": growth_verdict(b2s, cfg.growth_factor),
    }
    expected = {"b1_char": "growing", "b2_char": "bounded"}
    return {"profile": (header, rows)}, verdicts, expected


_TREND_ALPHAS = (0.5, 0.8, 0.9, 0.95)


def _beta(a: float, b: float) -> float:
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def power_weight_b2_exact(alpha: float) -> float:
    """Untruncated B_2 characteristic of (1 - |z|)^alpha over dyadic boxes.

    The box product 4 (1/(1+a) - l/(2+a)) (1/(1-a) - l/(2-a)) / (2-l)^2 is
    increasing in the box length l, so the root box is extremal."""
    if not -1.0 < alpha < 1.0:
        raise ValueError(f"power weight is in B_2 only for alpha in (-1, 1), got {alpha}")
    return 4.0 / ((1.0 - alpha ** 2) * (4.0 - alpha ** 2))


def projection_mode_quotient_exact(m: int, alpha: float) -> float:
    """||Pi f||_sigma / ||f||_sigma for f = (1 - |z|)^(-alpha) z^m, sigma = (1 - |z|)^alpha.

    Pi f = 2 (m+1) B(2m+2, 1-alpha) z^m, and the two norms are Beta moments,
    so the quotient is 2 (m+1) sqrt(B(2m+2, 1+alpha) B(2m+2, 1-alpha));
    it increases to sqrt(pi alpha / sin(pi alpha)) as m grows."""
    return (m + 1) * 2.0 * math.sqrt(_beta(2 * m + 2, 1 + alpha) * _beta(2 * m + 2, 1 - alpha))


def _run_lower_bound_trend(cfg: ExperimentConfig):
    d = cfg.depth_max
    mesh = DiskMesh("G1", d, cfg.quad_order, cfg.quad_order)
    pan = SourcePanels(mesh)
    m_grid = [m for m in (0, 1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64) if m <= 2 ** (d - 1)]
    mode_rows, trend_rows = [], []
    chars_exact, sups_exact, bands = [], [], []
    for alpha in _TREND_ALPHAS:
        sigma = PowerDistance(alpha)
        sup_measured = sup_exact = 0.0
        for m in m_grid:
            fm = lambda z, m=m, a=alpha: (1.0 - np.abs(z)) ** (-a) * z ** m
            P = bergman_project(fm, mesh, pan)
            num = weighted_lp_norm(P, mesh, 2.0, sigma)
            den = weighted_lp_norm(as_node_matrix(fm, mesh), mesh, 2.0, sigma)
            measured = num / den
            exact = projection_mode_quotient_exact(m, alpha)
            mode_rows.append((alpha, m, measured, exact))
            sup_measured = max(sup_measured, measured)
            sup_exact = max(sup_exact, exact)
        char_box = bp_characteristic(sigma, None, 2.0, mesh).final
        char_exact = power_weight_b2_exact(alpha)
        limit = math.sqrt(math.pi * alpha / math.sin(math.pi * alpha))
        band = sup_measured / char_exact ** 0.25
        trend_rows.append((alpha, char_box, char_exact, char_exact ** 0.25,
                           sup_measured, sup_exact, limit, band,
                           sup_exact / char_exact ** 0.25))
        chars_exact.append(char_exact)
        sups_exact.append(sup_exact)
        bands.append(band)
    trend_header = ("alpha", "b2_char_box", "b2_char_exact", "b2_char_exact_fourth_root",
                    "norm_estimate", "norm_estimate_exact", "mode_limit", "band", "band_exact")
    mode_header = ("alpha", "m", "mode_quotient", "mode_quotient_exact")
    verdicts = {
        "band": "bounded" if max(bands) / min(bands) <= 10.0 else "growing",
        "char_growth": "growing" if chars_exact[-1] / chars_exact[0] > 3.0 else "inconclusive",
        "norm_growth": "growing" if sups_exact[-1] / sups_exact[0] > 3.0 else "inconclusive",
    }
    expected = {"band": "bounded", "char_growth": "growing", "norm_growth": "growing"}
    return {"trend": (trend_header, trend_rows), "modes": (mode_header, mode_rows)}, verdicts, expected


def _run_uniform_domain(cfg: ExperimentConfig):
    dom = DomainSpec(parse_map(cfg.map))
    u = parse_weight(cfg.weight)
    rows, factors = [], []
    for d in cfg.depths:
        mesh = DiskMesh("G1", d, cfg.quad_order, cfg.quad_order)
        bp = bp_omega(u, dom, cfg.p, mesh).final
        dp = dp_characteristic(u, dom, cfg.p, mesh)
        factor = dp.values[0] / bp
        two_sided = max(factor, 1.0 / factor)
        rows.append((d, bp, dp.values[0], factor, two_sided, dp.meta["skipped"], dp.meta["disks"]))
        factors.append(two_sided)
    header = ("depth", "bp_char", "dp_char", "factor", "two_sided_factor", "disks_skipped", "disks_total")
    tail = factors[-3:]
    stable = len(tail) == 3 and max(tail) / min(tail) - 1.0 < 0.25
    verdicts = {"comparability": "bounded" if max(factors) <= 50.0 and stable else
                ("inconclusive" if max(factors) <= 50.0 else "growing")}
    expected = {"comparability": "bounded"}
    return {"equivalence": (header, rows)}, verdicts, expected


def _run_weak_type(cfg: ExperimentConfig):
    m = parse_map(cfg.map)
    w = ConformalDeriv(m, 1.0)
    v = ConformalDeriv(m, 2.0)
    u = parse_weight(cfg.weight)
    const_rows, sweep_rows = [], []
    prod_ok, cz_ok_all, sweep_ok = [], [], []
    for d in cfg.depths:
        mesh = DiskMesh("G1", d, cfg.quad_order, cfg.quad_order)
        uw_b1w = bp_characteristic(u * w, w, 1.0, mesh).final
        uw_b1 = bp_characteristic(u * w, None, 1.0, mesh).final
        rhs = bp_characteristic(v, None, 1.0, mesh).final * bp_characteristic(u, v, 1.0, mesh).final
        holds = max(uw_b1w, uw_b1) <= rhs * (1.0 + 1e-10)

        g = indicator_box(interval_of_cell("G1", 4), mesh)
        base = float((g.values * mesh.cell_area).sum() / (weight_nodes(w, mesh) * mesh.w).sum())
        family, g1, g2 = cz_decompose(g, w, base, mesh)
        chk = cz_verify(family, g, g1, g2, w, mesh)
        cz_ok = all(chk[k] for k in ("disjoint", "selected_above", "maximal", "good1", "good2"))

        swp = weak_type_sweep(g, u, v, w, mesh, lambdas=lambda_grid(base, cfg.lambda_count))
        mwk = maximal_weak_check(g, u, w, mesh, lambdas=lambda_grid(base, cfg.lambda_count))
        const_rows.append((d, uw_b1w, uw_b1, rhs, int(holds), int(cz_ok), chk["n_boxes"],
                           swp["worst"], swp["constant"], int(swp["holds"]), int(mwk["holds"])))
        sweep_rows.extend((d, lam, ratio) for lam, ratio in swp["rows"])
        prod_ok.append(holds)
        cz_ok_all.append(cz_ok)
        sweep_ok.append(swp["holds"] and mwk["holds"])
    const_header = ("depth", "uw_b1_weighted", "uw_b1", "product_bound", "product_holds",
                    "cz_invariants_hold", "cz_boxes", "sweep_worst", "sweep_constant",
                    "sweep_holds", "maximal_weak_holds")
    sweep_header = ("depth", "lambda", "weak_ratio")
    verdicts = {
        "uwb1_product": _bound_verdict(prod_ok),
        "cz_invariants": _bound_verdict(cz_ok_all),
        "weak_ratio": _bound_verdict(sweep_ok),
    }
    expected = {k: "bounded" for k in verdicts}
    return {"constants": (const_header, const_rows), "sweep": (sweep_header, sweep_rows)}, verdicts, expected


EXPERIMENTS = {
    "b1-implies-bp": (_run_b1_implies_bp,
                      "reference-weight product estimate and the strong-bound constant shape"),
    "regularization-chain": (_run_regularization_chain,
                             "regularized weights: average preservation, reverse Holder gain, mean comparison"),
    "counterexample-psi1": (_run_counterexample,
                            "membership profile of the log-degenerate derivative weight"),
    "lower-bound-trend": (_run_lower_bound_trend,
                          "projection norm lower estimates against the characteristic power on power weights"),
    "uniform-domain-equivalence": (_run_uniform_domain,
                                   "box-based versus boundary-disk characteristics on a quadratic image domain"),
    "weak-type": (_run_weak_type,
                  "end-to-end mixed weak-type pipeline: product estimate, stopping split, lambda sweep"),
}


def default_config(experiment: str) -> ExperimentConfig:
    """Per-experiment defaults; JSON fields and flags override these."""
    cfg = ExperimentConfig(experiment=experiment)
    if experiment == "counterexample-psi1":
        cfg.map = "log_example"
        cfg.depth_max = 10
    elif experiment == "uniform-domain-equivalence":
        cfg.map = "quadratic:0.25"
        cfg.weight = "power:0.5"
        cfg.depth_min = 5
        cfg.depth_max = 8
    elif experiment == "b1-implies-bp":
        cfg.weight = "power:0.5"
    elif experiment == "regularization-chain":
        cfg.weight = "power:0.5"
    return cfg


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    cfg.validate()
    runner, _ = EXPERIMENTS[cfg.experiment]
    start = time.perf_counter()
    tables, verdicts, expected = runner(cfg)
    return RunReport(
        config=cfg,
        tables=tables,
        verdicts=verdicts,
        expected=expected,
        wall_clock=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# report emission


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def emit_report(report: RunReport, fmt: str, out_dir=None) -> list:
    """Write the report under the config's output directory; deterministic bytes."""
    if fmt not in ("csv", "human"):
        raise ValueError(f"format must be 'csv' or 'human', got {fmt!r}")
    out = Path(out_dir if out_dir is not None else report.config.out)
    out.mkdir(parents=True, exist_ok=True)
    name = report.config.experiment
    written = []
    if fmt == "csv":
        for tname, (header, rows) in report.tables.items():
            path = out / f"{name}-{tname}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([_fmt(x) for x in row])
            written.append(path)
        return written
    path = out / f"{name}.txt"
    lines = [f"experiment: {name}", f"version: {report.version}", "", "config:"]
    lines.extend("  " + ln for ln in report.config.to_json().splitlines())
    for tname, (header, rows) in report.tables.items():
        lines.append("")
        lines.append(f"table {tname}:")
        lines.append("  " + "  ".join(header))
        for row in rows:
            lines.append("  " + "  ".join(_fmt(x) for x in row))
    lines.append("")
    for q in sorted(report.verdicts):
        lines.append(f"verdict {q}: {report.verdicts[q]} (expected {report.expected[q]})")
    lines.append(f"exit: {report.exit_code}")
    path.write_text("\n".join(lines) + "\n")
    written.append(path)
    return written
