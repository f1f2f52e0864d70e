"""Model parameters, the coupled energy functional, its L2 gradient, and
interpolation-inequality diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fields import (GridSpec, ScalarField, StatePair, _abs2, _dirichlet_arr,
                     _inner_arr, _potential_arr, _require_same_grid, mass)

P_EXPONENT_SUP = 10.0 / 3.0  # strict upper bound for p1, p2 and r1 + r2


@dataclass(frozen=True)
class ModelParams:
    """Couplings, exponents and target masses of the two-component model.

    Construction does not validate; call validate() to enforce the admissible
    ranges (positive couplings, 2 < p_i < 10/3, r_i > 1, r1 + r2 < 10/3,
    positive masses).
    """

    mu1: float
    mu2: float
    beta: float
    p1: float
    p2: float
    r1: float
    r2: float
    a1: float
    a2: float

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in
                ("mu1", "mu2", "beta", "p1", "p2", "r1", "r2", "a1", "a2")}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(**{k: float(v) for k, v in d.items()})


def validate(params: ModelParams) -> ModelParams:
    """Return params unchanged iff every admissibility bound holds strictly."""
    v = []
    for name in ("mu1", "mu2", "beta"):
        if not getattr(params, name) > 0:
            v.append(f"{name} must be positive")
    for name in ("p1", "p2"):
        p = getattr(params, name)
        if not (2.0 < p < P_EXPONENT_SUP):
            v.append(f"{name} out of (2,10/3)")
    for name in ("r1", "r2"):
        if not getattr(params, name) > 1:
            v.append(f"{name} must be > 1")
    if not params.r1 + params.r2 < P_EXPONENT_SUP:
        v.append("r1+r2 must be < 10/3")
    for name in ("a1", "a2"):
        if not getattr(params, name) > 0:
            v.append(f"{name} must be positive")
    if v:
        raise ValidationError(v)
    return params


@dataclass(frozen=True)
class EnergyBreakdown:
    """Raw ingredients of the coupled energy.

    total = kinetic/2 + potential/2 - self1 - self2 - cross, where kinetic and
    potential sum both components and self_i = (mu_i/p_i) ||u_i||_{p_i}^{p_i},
    cross = beta * integral |u1|^{r1} |u2|^{r2}.
    """

    kinetic: float
    potential: float
    self1: float
    self2: float
    cross: float
    total: float


@dataclass(frozen=True)
class Multipliers:
    lambda1: float
    lambda2: float


@dataclass(frozen=True)
class GNExponent:
    """Interpolation exponent alpha = N (p - 2) / (2 p) with N = 3."""

    p: float
    alpha: float = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", 3.0 * (self.p - 2.0) / (2.0 * self.p))
        if not (0.0 <= self.alpha <= 1.0):
            raise ValidationError(f"p = {self.p} outside [2, 6]")


def _safe_power(m: np.ndarray, q: float) -> np.ndarray:
    """m**q with the q < 0 singularity at m = 0 replaced by 0.

    Used for the |u|^(r-2) u factors: for r > 1 the product still vanishes as
    u -> 0, so 0 is the continuous extension.
    """
    if q >= 0:
        return m ** q
    with np.errstate(divide="ignore"):
        out = np.where(m > 0, m, 1.0) ** q
    return np.where(m > 0, out, 0.0)


def _pair_terms(u1: np.ndarray, u2: np.ndarray, grid: GridSpec, params: ModelParams):
    vol = grid.cell_volume
    kinetic = _dirichlet_arr(u1, grid) + _dirichlet_arr(u2, grid)
    potential = _potential_arr(u1, grid) + _potential_arr(u2, grid)
    m1 = np.abs(u1)
    m2 = np.abs(u2)
    self1 = params.mu1 / params.p1 * float(np.sum(m1 ** params.p1)) * vol
    self2 = params.mu2 / params.p2 * float(np.sum(m2 ** params.p2)) * vol
    cross = params.beta * float(np.sum(m1 ** params.r1 * m2 ** params.r2)) * vol
    return kinetic, potential, self1, self2, cross


def _pair_energy_arrays(u1, u2, grid, params) -> float:
    k, p, s1, s2, c = _pair_terms(u1, u2, grid, params)
    return 0.5 * k + 0.5 * p - s1 - s2 - c


def _pair_gradient_arrays(u1, u2, grid, params):
    """L2 gradient (G1, G2) of the discrete coupled energy."""
    pot = grid.transverse_potential()
    m1 = np.abs(u1)
    m2 = np.abs(u2)
    cross1 = params.beta * params.r1 * _safe_power(m1, params.r1 - 2.0) * (m2 ** params.r2)
    cross2 = params.beta * params.r2 * (m1 ** params.r1) * _safe_power(m2, params.r2 - 2.0)
    g1 = _apply_stencil(u1, grid) + pot * u1 \
        - params.mu1 * m1 ** (params.p1 - 2.0) * u1 - cross1 * u1
    g2 = _apply_stencil(u2, grid) + pot * u2 \
        - params.mu2 * m2 ** (params.p2 - 2.0) * u2 - cross2 * u2
    return g1, g2


def _single_energy_arrays(u, grid, mu, p) -> float:
    vol = grid.cell_volume
    lp = float(np.sum(np.abs(u) ** p)) * vol
    return 0.5 * (_dirichlet_arr(u, grid) + _potential_arr(u, grid)) - mu / p * lp


def _single_gradient_arrays(u, grid, mu, p):
    g = _apply_stencil(u, grid) + grid.transverse_potential() * u
    if mu != 0.0:
        g = g - mu * np.abs(u) ** (p - 2.0) * u
    return g


def _apply_stencil(arr: np.ndarray, grid: GridSpec) -> np.ndarray:
    """7-point Dirichlet Laplacian with sign convention -Delta."""
    out = np.zeros_like(arr)
    for ax, h in enumerate(grid.h):
        pad = [(0, 0)] * 3
        pad[ax] = (1, 1)
        padded = np.pad(arr, pad)
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        out += (2.0 * arr - padded[tuple(lo)] - padded[tuple(hi)]) / h ** 2
    return out


def energy_pair(s: StatePair, params: ModelParams) -> EnergyBreakdown:
    """Evaluate the coupled energy of a state pair, component by component."""
    k, p, s1, s2, c = _pair_terms(s.first.values, s.second.values, s.grid, params)
    total = 0.5 * k + 0.5 * p - s1 - s2 - c
    return EnergyBreakdown(kinetic=k, potential=p, self1=s1, self2=s2,
                           cross=c, total=total)


def energy_single(u: ScalarField, mu: float, p: float) -> float:
    """One-component energy: half the seminorm minus (mu/p) ||u||_p^p."""
    if not mu > 0:
        raise ValidationError("mu must be positive")
    if not (2.0 < p < P_EXPONENT_SUP):
        raise ValidationError("p out of (2,10/3)")
    return _single_energy_arrays(u.values, u.grid, mu, p)


def el_gradient(s: StatePair, params: ModelParams) -> StatePair:
    """Euler-Lagrange gradient pair of the discrete energy.

    <G, v> reproduces the directional derivative of the discrete energy
    exactly; the nonlinear terms follow the stationary system with the
    |u|^(r-2) u factors extended by 0 where a component vanishes.
    """
    g1, g2 = _pair_gradient_arrays(s.first.values, s.second.values, s.grid, params)
    return StatePair(ScalarField(s.grid, g1), ScalarField(s.grid, g2))


def multipliers(s: StatePair, params: ModelParams) -> Multipliers:
    """Frequencies lambda_i = <G_i, u_i> / a_i; the residual G_i - lambda_i u_i
    is then L2-orthogonal to u_i."""
    vol = s.grid.cell_volume
    a1 = mass(s.first)
    a2 = mass(s.second)
    if a1 <= 0 or a2 <= 0:
        raise ValueError("multipliers require both components nonzero")
    g1, g2 = _pair_gradient_arrays(s.first.values, s.second.values, s.grid, params)
    lam1 = _inner_arr(g1, s.first.values, vol) / a1
    lam2 = _inner_arr(g2, s.second.values, vol) / a2
    return Multipliers(lambda1=lam1, lambda2=lam2)


def gn_ratio(u: ScalarField, p: float) -> float:
    """Interpolation ratio ||u||_p / (||grad u||_2^alpha ||u||_2^(1-alpha)).

    Diagnostic only; no sharp constant is assumed.
    """
    if not (2.0 <= p <= 6.0):
        raise ValidationError("gn_ratio requires 2 <= p <= 6")
    vol = u.grid.cell_volume
    lp_p = float(np.sum(np.abs(u.values) ** p)) * vol
    l2_sq = float(np.sum(_abs2(u.values))) * vol
    if l2_sq == 0.0:
        raise ValueError("gn_ratio of the zero field")
    alpha = GNExponent(p).alpha
    grad_sq = _dirichlet_arr(u.values, u.grid)
    return lp_p ** (1.0 / p) / (grad_sq ** (alpha / 2.0) * l2_sq ** ((1.0 - alpha) / 2.0))


def holder_bound(u: ScalarField, v: ScalarField, r1: float, r2: float) -> tuple[float, float]:
    """Both sides of the product-integral bound with exponent q = (r1+r2)/r1.

    Returns (mixed integral, ||u||_{r1+r2}^r1 * ||v||_{r1+r2}^r2); the first
    never exceeds the second on any pair of fields.
    """
    _require_same_grid(u, v)
    s = r1 + r2
    vol = u.grid.cell_volume
    lhs = float(np.sum(np.abs(u.values) ** r1 * np.abs(v.values) ** r2)) * vol
    nu = (float(np.sum(np.abs(u.values) ** s)) * vol) ** (1.0 / s)
    nv = (float(np.sum(np.abs(v.values) ** s)) * vol) ** (1.0 / s)
    return lhs, nu ** r1 * nv ** r2
