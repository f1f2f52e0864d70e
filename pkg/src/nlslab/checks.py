"""Lemma-keyed property suites runnable from the CLI and the self-test.

Every check compares both sides of an inequality or identity produced by the
package itself; the pytest suite layers independent oracles on top.  Slack
levels match the acceptance contract: identities at 1e-12 relative, ordering
inequalities at absolute slack 1e-12.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import rearrange
from .energy import ModelParams, energy_pair, holder_bound, validate
from .fields import (GridSpec, ScalarField, StatePair, dirichlet_energy,
                     lp_norm_p, mass, mixed_integral, potential_moment,
                     translate_x3)
from .sampling import column_decreasing_bump, random_compact_array

IDENTITY_RTOL = 1e-12
ORDER_SLACK = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed),
                "margin": float(self.margin), "detail": self.detail}


def _agg(name: str, margins, threshold: float, detail: str = "") -> CheckResult:
    worst = float(np.min(margins))
    return CheckResult(name=name, passed=worst >= -threshold, margin=worst,
                       detail=detail)


def rearrange_suite(grid: GridSpec | None = None, n_fields: int = 200,
                    seed: int = 0, r1: float = 1.5, r2: float = 1.5):
    """Rearrangement identities and inequalities on seeded random pairs."""
    grid = grid or GridSpec(16, 16, 64, 8.0, 8.0, 16.0)
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()

    lp_margins, coupled_lp_margins = [], []
    grad_margins, coupled_grad_margins = [], []
    hl_margins, moment_margins = [], []
    product_margins, level_gaps, equi_gaps = [], [], []

    for _ in range(n_fields):
        u = ScalarField(grid, random_compact_array(grid, rng))
        v = ScalarField(grid, random_compact_array(grid, rng))
        rep = rearrange.rearrangement_report(u, v, r1, r2)

        equi_gaps.append(-rep["equimeasurable_max_gap"])
        for row in rep["lp"]:
            for c in ("u", "v"):
                scale = max(abs(row[f"{c}_before"]), 1e-300)
                lp_margins.append(-abs(row[f"{c}_after"] - row[f"{c}_before"]) / scale)
            total = row["u_before"] + row["v_before"]
            coupled_lp_margins.append(-abs(row["coupled"] - total) / max(abs(total), 1e-300))
        for row in rep["gradient_axes"]:
            grad_margins.append(row["u_before"] - row["u_after"])
            grad_margins.append(row["v_before"] - row["v_after"])
            coupled_grad_margins.append(row["sum"] - row["coupled"])
        hl_margins.append(rep["product_integral"]["after"]
                          - rep["product_integral"]["before"])
        pm = rep["potential_moment"]
        for c in ("u", "v"):
            scale = max(abs(pm[f"{c}_before"]), 1e-300)
            moment_margins.append(-abs(pm[f"{c}_after"] - pm[f"{c}_before"]) / scale)
        product_margins.append(rep["coupled_product"]["rhs"]
                               - rep["coupled_product"]["lhs"])
        level_gaps.append(-rep["level_count_max_gap"])

    elapsed = time.perf_counter() - t0
    results = [
        _agg("equimeasurability: sorted column multisets preserved", equi_gaps, 0.0),
        _agg("Lp preservation under single rearrangement", lp_margins, IDENTITY_RTOL),
        _agg("Lp additivity under coupled rearrangement", coupled_lp_margins, IDENTITY_RTOL),
        _agg("per-axis gradient non-increase", grad_margins, ORDER_SLACK),
        _agg("coupled gradient-sum bound", coupled_grad_margins, ORDER_SLACK),
        _agg("product integral non-decrease", hl_margins, ORDER_SLACK),
        _agg("transverse moment identity", moment_margins, IDENTITY_RTOL),
        _agg("coupled product bound", product_margins, ORDER_SLACK),
        _agg("level-count additivity", level_gaps, 0.0),
    ]
    return results, elapsed


def strict_coupled_suite(grid: GridSpec | None = None, n_pairs: int = 20,
                         seed: int = 0):
    """Strict gradient drop of the coupled rearrangement on positive,
    column-decreasing compact pairs; margins are relative."""
    grid = grid or GridSpec(16, 16, 64, 8.0, 8.0, 16.0)
    rng = np.random.default_rng(seed)
    margins = []
    quarter = grid.n3 // 4
    for _ in range(n_pairs):
        hw_u = int(rng.integers(2, quarter - 1))
        hw_v = int(rng.integers(2, quarter - 1))
        cu = grid.n3 // 2 + int(rng.integers(-2, 3))
        cv = grid.n3 // 2 + int(rng.integers(-2, 3))
        u = ScalarField(grid, column_decreasing_bump(
            grid, cu, hw_u, transverse_width=float(rng.uniform(1.0, 2.5)),
            amplitude=float(rng.uniform(0.5, 2.0))))
        v = ScalarField(grid, column_decreasing_bump(
            grid, cv, hw_v, transverse_width=float(rng.uniform(1.0, 2.5)),
            amplitude=float(rng.uniform(0.5, 2.0))))
        w = rearrange.coupled_x3(u, v)
        separate = dirichlet_energy(u) + dirichlet_energy(v)
        margins.append((separate - dirichlet_energy(w)) / separate)
    worst = float(np.min(margins))
    return [CheckResult(
        name="strict coupled gradient drop (relative margin)",
        passed=worst > 1e-3, margin=worst,
        detail=f"min relative margin over {n_pairs} pairs")]


def holder_suite(grid: GridSpec | None = None, n_pairs: int = 50, seed: int = 0,
                 r1: float = 1.5, r2: float = 1.5):
    grid = grid or GridSpec(12, 12, 32, 6.0, 6.0, 8.0)
    rng = np.random.default_rng(seed)
    margins = []
    for _ in range(n_pairs):
        u = ScalarField(grid, random_compact_array(grid, rng))
        v = ScalarField(grid, random_compact_array(grid, rng))
        lhs, rhs = holder_bound(u, v, r1, r2)
        margins.append(rhs - lhs + ORDER_SLACK * max(rhs, 1.0))
    return [_agg("product-integral interpolation bound", margins, 0.0)]


def coercivity_suite(params: ModelParams, grid: GridSpec | None = None,
                     n_pairs: int = 200, seed: int = 0):
    """Fit the lower-bound constant on even draws, verify it on odd draws."""
    validate(params)
    grid = grid or GridSpec(12, 12, 32, 6.0, 6.0, 8.0)
    rng = np.random.default_rng(seed)
    from .variational import project_mass
    deficits = []
    for _ in range(n_pairs):
        u = project_mass(ScalarField(grid, random_compact_array(grid, rng)), params.a1)
        v = project_mass(ScalarField(grid, random_compact_array(grid, rng)), params.a2)
        b = energy_pair(StatePair(u, v), params)
        deficits.append(0.25 * (b.kinetic + b.potential) - b.total)
    deficits = np.array(deficits)
    fitted = float(np.max(deficits[0::2]))
    held = float(np.max(deficits[1::2]))
    slack = 0.5 * abs(fitted) + 1.0
    return [CheckResult(
        name="coercivity: quarter-quadratic lower bound with one constant",
        passed=held <= fitted + slack, margin=fitted + slack - held,
        detail=f"fitted C={fitted:.6g}, held-out max deficit={held:.6g}")]


def brezis_lieb_decay(grid: GridSpec | None = None, r1: float = 1.5,
                      r2: float = 1.5, amplitude: float = 1.3):
    """Cross-term splitting defect versus bump separation.

    Returns the separations, the defects, and checks: monotone decay once the
    supports begin to separate and an exact (1e-10) zero at full separation.
    """
    grid = grid or GridSpec(12, 12, 96, 6.0, 6.0, 24.0)
    n3 = grid.n3
    hw = 6
    base1 = ScalarField(grid, column_decreasing_bump(grid, n3 // 2, hw))
    base2 = ScalarField(grid, 0.8 * column_decreasing_bump(grid, n3 // 2, hw))
    bump1 = ScalarField(grid, amplitude * column_decreasing_bump(grid, n3 // 2, hw))
    bump2 = ScalarField(grid, 0.7 * amplitude * column_decreasing_bump(grid, n3 // 2, hw))

    ref = mixed_integral(base1, base2, r1, r2)
    bump_ref = mixed_integral(bump1, bump2, r1, r2)
    seps = np.arange(0, n3 // 2 - hw, 2)
    defects = []
    for s in seps:
        t1 = base1 + translate_x3(bump1, int(s))
        t2 = base2 + translate_x3(bump2, int(s))
        defects.append(abs(mixed_integral(t1, t2, r1, r2) - ref - bump_ref))
    defects = np.array(defects)

    tail = defects[1:] - defects[:-1]
    results = [
        CheckResult(name="splitting defect decays monotonically",
                    passed=bool(np.all(tail <= 1e-12)),
                    margin=float(-np.max(tail))),
        CheckResult(name="splitting defect vanishes at full separation",
                    passed=float(defects[-1]) < 1e-10, margin=1e-10 - float(defects[-1]),
                    detail=f"final defect {defects[-1]:.3e}"),
    ]
    return seps, defects, results


def spectral_suite(seed: int = 0):
    from .spectral import TransverseGrid, ground_2d, ground_3d
    results = []
    grid2 = TransverseGrid(64, 64, 8.0, 8.0)
    gs2 = ground_2d(grid2)
    results.append(CheckResult(
        name="transverse ground energy near the trapped value",
        passed=abs(gs2.energy - 2.0) < 2e-2, margin=2e-2 - abs(gs2.energy - 2.0),
        detail=f"lambda0={gs2.energy:.6f}"))
    energies = []
    for n3, L3 in ((32, 4.0), (64, 8.0), (128, 16.0)):
        grid = GridSpec(16, 16, n3, 8.0, 8.0, L3)
        energies.append(ground_3d(grid).energy)
    lam0_16 = ground_2d(TransverseGrid(16, 16, 8.0, 8.0)).energy
    mono = all(energies[i] > energies[i + 1] for i in range(len(energies) - 1))
    results.append(CheckResult(
        name="boxed ground energy monotone in box length",
        passed=mono and energies[-1] > lam0_16,
        margin=float(min(energies[i] - energies[i + 1]
                         for i in range(len(energies) - 1)))))
    gap = energies[-1] - lam0_16
    bound = np.pi ** 2 / (2 * 16.0) ** 2 + 1e-3
    results.append(CheckResult(
        name="box gap below the free-axis bound",
        passed=0.0 <= gap <= bound, margin=bound - gap,
        detail=f"gap={gap:.5f}, bound={bound:.5f}"))
    return results


def variational_suite(seed: int = 0):
    """Descent contract on a small coupled solve."""
    from .variational import minimize_pair
    from .descent import SolverOptions
    from .energy import multipliers, el_gradient
    from . import rearrange as rearr
    params = ModelParams(mu1=1.0, mu2=1.0, beta=1.0, p1=3.0, p2=3.0,
                         r1=1.5, r2=1.5, a1=1.0, a2=1.0)
    grid = GridSpec(12, 12, 32, 6.0, 6.0, 8.0)
    opts = SolverOptions(tol_residual=1e-7, max_iter=20000)
    res = minimize_pair(params, "gaussian", opts, grid=grid, starts=2, seed=seed)
    results = [CheckResult(name="solver converged", passed=res.converged,
                           margin=float(res.converged))]
    diffs = np.diff(res.trace)
    results.append(CheckResult(name="energy trace nonincreasing",
                               passed=bool(np.all(diffs <= 0.0)),
                               margin=float(-np.max(diffs)) if len(diffs) else 0.0))
    m1 = mass(res.state.first)
    m2 = mass(res.state.second)
    results.append(CheckResult(
        name="masses on constraint",
        passed=abs(m1 - 1.0) < 1e-12 and abs(m2 - 1.0) < 1e-12,
        margin=1e-12 - max(abs(m1 - 1.0), abs(m2 - 1.0))))
    g = el_gradient(res.state, params)
    lams = multipliers(res.state, params)
    r1 = g.first - lams.lambda1 * res.state.first
    r2 = g.second - lams.lambda2 * res.state.second
    resid = max(np.sqrt(mass(r1)), np.sqrt(mass(r2)))
    results.append(CheckResult(name="stationarity residual below tolerance",
                               passed=resid < 1e-6, margin=1e-6 - resid,
                               detail=f"residual {resid:.2e}"))
    star = StatePair(rearr.steiner_x3(res.state.first),
                     rearr.steiner_x3(res.state.second))
    before = energy_pair(res.state, params).total
    after = energy_pair(star, params).total
    results.append(CheckResult(name="rearrangement does not raise the minimum",
                               passed=after <= before + 1e-10,
                               margin=before + 1e-10 - after))
    return results


def selftest(seed: int = 0) -> tuple[list, bool]:
    """Run every suite at desk scale; returns (results, all_passed)."""
    params = ModelParams(mu1=1.0, mu2=1.0, beta=1.0, p1=3.0, p2=3.0,
                         r1=1.5, r2=1.5, a1=1.0, a2=1.0)
    results = []
    suite, _ = rearrange_suite(n_fields=60, seed=seed)
    results.extend(suite)
    results.extend(strict_coupled_suite(n_pairs=10, seed=seed))
    results.extend(holder_suite(n_pairs=30, seed=seed))
    results.extend(coercivity_suite(params, n_pairs=100, seed=seed))
    _, _, bl = brezis_lieb_decay()
    results.extend(bl)
    results.extend(spectral_suite(seed=seed))
    results.extend(variational_suite(seed=seed))
    return results, all(r.passed for r in results)
