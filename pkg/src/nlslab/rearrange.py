"""Per-column symmetric-decreasing rearrangement along x3 and the coupled
(merged) rearrangement of two fields, with a one-pass inequality report.

Placement rule: on a column of n cells the sorted values v1 >= v2 >= ... go to
indices c, c-1, c+1, c-2, c+2, ... with c = n // 2.  The rule is deterministic
and center-symmetric up to one cell; every rearranged column is a fixed point.
"""

from __future__ import annotations

import functools

import numpy as np

from .fields import GridSpec, ScalarField, _abs2, _require_same_grid


@functools.lru_cache(maxsize=64)
def _placement_order(n: int) -> np.ndarray:
    c = n // 2
    order = [c]
    k = 1
    while len(order) < n:
        if c - k >= 0:
            order.append(c - k)
        if c + k < n and len(order) < n:
            order.append(c + k)
        k += 1
    arr = np.array(order, dtype=np.intp)
    arr.setflags(write=False)
    return arr


def _place_columns(sorted_desc: np.ndarray, n3: int) -> np.ndarray:
    out = np.empty(sorted_desc.shape[:-1] + (n3,), dtype=sorted_desc.dtype)
    out[..., _placement_order(n3)] = sorted_desc
    return out


def steiner_x3(u: ScalarField) -> ScalarField:
    """Rearrange |u| symmetric-decreasing along every x3 column.

    The per-column multiset of moduli is preserved exactly; the output is a
    real nonnegative field.
    """
    vals = np.abs(u.values)
    sorted_desc = np.sort(vals, axis=-1)[..., ::-1]
    return ScalarField(u.grid, _place_columns(sorted_desc, u.grid.n3))


def coupled_x3(u: ScalarField, v: ScalarField) -> ScalarField:
    """Merge the column multisets of |u| and |v| and place them
    symmetric-decreasing.

    Requires room: per column the nonzero entries of |u| plus those of |v|
    must fit in n3 cells, otherwise nonzero values would be truncated and the
    additivity identities would fail.
    """
    _require_same_grid(u, v)
    a = np.abs(u.values)
    b = np.abs(v.values)
    nnz = np.count_nonzero(a, axis=-1) + np.count_nonzero(b, axis=-1)
    n3 = u.grid.n3
    if np.any(nnz > n3):
        raise ValueError("insufficient grid extent along x3 for the coupled rearrangement")
    merged = np.concatenate([a, b], axis=-1)
    top = np.sort(merged, axis=-1)[..., ::-1][..., :n3]
    return ScalarField(u.grid, _place_columns(top, n3))


def column_level_count_gap(u: ScalarField, v: ScalarField, w: ScalarField,
                           thresholds) -> int:
    """Worst per-column mismatch of #{|w| > t} vs #{|u| > t} + #{|v| > t}."""
    gap = 0
    a = np.abs(u.values)
    b = np.abs(v.values)
    c = np.abs(w.values)
    for t in thresholds:
        lhs = np.count_nonzero(c > t, axis=-1)
        rhs = np.count_nonzero(a > t, axis=-1) + np.count_nonzero(b > t, axis=-1)
        gap = max(gap, int(np.max(np.abs(lhs - rhs))))
    return gap


def coupled_product_quantities(u1: ScalarField, u2: ScalarField,
                               v1: ScalarField, v2: ScalarField,
                               r1: float, r2: float) -> tuple[float, float]:
    """Both sides of the coupled product bound on a quadruple of fields.

    lhs = integral of |u1|^r1 |u2|^r2 + |v1|^r1 |v2|^r2,
    rhs = integral of (|u1|^r1 * |v1|^r1)(|u2|^r2 * |v2|^r2), where * pairs the
    first-component fields at exponent r1 and the second-component fields at
    exponent r2 under the coupled rearrangement.
    """
    for f in (u2, v1, v2):
        _require_same_grid(u1, f)
    vol = u1.grid.cell_volume
    a1 = np.abs(u1.values) ** r1
    a2 = np.abs(u2.values) ** r2
    b1 = np.abs(v1.values) ** r1
    b2 = np.abs(v2.values) ** r2
    lhs = float(np.sum(a1 * a2) + np.sum(b1 * b2)) * vol
    grid = u1.grid
    c1 = coupled_x3(ScalarField(grid, a1), ScalarField(grid, b1))
    c2 = coupled_x3(ScalarField(grid, a2), ScalarField(grid, b2))
    rhs = float(np.sum(c1.values * c2.values)) * vol
    return lhs, rhs


def _axis_gradient_energies(field: ScalarField) -> list[float]:
    arr = field.values
    grid = field.grid
    out = []
    for ax, h in enumerate(grid.h):
        d = np.diff(arr, axis=ax)
        s = float(np.sum(_abs2(d)))
        s += float(np.sum(_abs2(np.take(arr, 0, axis=ax))))
        s += float(np.sum(_abs2(np.take(arr, -1, axis=ax))))
        out.append(s / h ** 2 * grid.cell_volume)
    return out


def _lp(field: ScalarField, p: float) -> float:
    return float(np.sum(np.abs(field.values) ** p)) * field.grid.cell_volume


def _moment(field: ScalarField) -> float:
    return float(np.sum(field.grid.transverse_potential() * _abs2(field.values))) \
        * field.grid.cell_volume


LP_EXPONENTS = (1.0, 2.0, 3.0, 4.0)


def rearrangement_report(u: ScalarField, v: ScalarField,
                         r1: float, r2: float) -> dict:
    """Evaluate both sides of every rearrangement inequality in one pass.

    Covers, for the pair (u, v): multiset preservation, L^p preservation, the
    per-axis gradient non-increase and product-integral non-decrease of the
    single rearrangement; and level-count additivity, L^p additivity, the
    gradient-sum bound with its margin, and the product bound of the coupled
    rearrangement (evaluated on the quadruple (u, v, u, v)).
    """
    us = steiner_x3(u)
    vs = steiner_x3(v)
    w = coupled_x3(u, v)

    sorted_gap = 0.0
    for orig, star in ((u, us), (v, vs)):
        a = np.sort(np.abs(orig.values), axis=-1)
        b = np.sort(star.values, axis=-1)
        sorted_gap = max(sorted_gap, float(np.max(np.abs(a - b))))

    lp_rows = []
    for p in LP_EXPONENTS:
        lp_rows.append({
            "p": p,
            "u_before": _lp(u, p), "u_after": _lp(us, p),
            "v_before": _lp(v, p), "v_after": _lp(vs, p),
            "coupled": _lp(w, p),
        })

    grad_u = _axis_gradient_energies(u)
    grad_us = _axis_gradient_energies(us)
    grad_v = _axis_gradient_energies(v)
    grad_vs = _axis_gradient_energies(vs)
    grad_w = _axis_gradient_energies(w)

    thresholds = _level_thresholds(u, v)
    mixed_before = float(np.sum(np.abs(u.values) ** r1 * np.abs(v.values) ** r2)) \
        * u.grid.cell_volume
    mixed_after = float(np.sum(us.values ** r1 * vs.values ** r2)) * u.grid.cell_volume
    prod_lhs, prod_rhs = coupled_product_quantities(u, v, u, v, r1, r2)

    return {
        "r1": r1,
        "r2": r2,
        "equimeasurable_max_gap": sorted_gap,
        "lp": lp_rows,
        "gradient_axes": [
            {"axis": i,
             "u_before": grad_u[i], "u_after": grad_us[i],
             "v_before": grad_v[i], "v_after": grad_vs[i],
             "coupled": grad_w[i], "sum": grad_u[i] + grad_v[i]}
            for i in range(3)
        ],
        "gradient_total": {
            "coupled": sum(grad_w),
            "sum": sum(grad_u) + sum(grad_v),
            "margin": sum(grad_u) + sum(grad_v) - sum(grad_w),
        },
        "potential_moment": {
            "u_before": _moment(u), "u_after": _moment(us),
            "v_before": _moment(v), "v_after": _moment(vs),
        },
        "product_integral": {"before": mixed_before, "after": mixed_after},
        "coupled_product": {"lhs": prod_lhs, "rhs": prod_rhs},
        "level_count_max_gap": column_level_count_gap(u, v, w, thresholds),
    }


def _level_thresholds(u: ScalarField, v: ScalarField, count: int = 8) -> np.ndarray:
    top = max(float(np.max(np.abs(u.values))), float(np.max(np.abs(v.values))))
    if top == 0.0:
        return np.array([1.0])
    return np.linspace(0.0, top, count + 2)[1:-1]
