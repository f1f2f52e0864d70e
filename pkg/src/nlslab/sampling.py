"""Deterministic field samplers shared by solvers, property suites and the CLI."""

from __future__ import annotations

import numpy as np

from .fields import GridSpec, ScalarField

TIE_BREAK_AMPLITUDE = 1e-3


def gaussian_arrays(grid: GridSpec, center=(0.0, 0.0, 0.0),
                    widths=(1.0, 1.0, 1.0)) -> np.ndarray:
    x1 = grid.axis(0) - center[0]
    x2 = grid.axis(1) - center[1]
    x3 = grid.axis(2) - center[2]
    g1 = np.exp(-x1 ** 2 / (2 * widths[0] ** 2))
    g2 = np.exp(-x2 ** 2 / (2 * widths[1] ** 2))
    g3 = np.exp(-x3 ** 2 / (2 * widths[2] ** 2))
    return g1[:, None, None] * g2[None, :, None] * g3[None, None, :]


def normalized_gaussian(grid: GridSpec) -> ScalarField:
    """The unit-mass profile pi^(-3/4) exp(-|x|^2 / 2) sampled on the grid."""
    return ScalarField(grid, np.pi ** -0.75 * gaussian_arrays(grid))


def solver_seed_array(grid: GridSpec) -> np.ndarray:
    """Default initial profile: a Gaussian with a small asymmetric tie-break."""
    base = gaussian_arrays(grid)
    tilt = gaussian_arrays(grid, center=(0.37, 0.0, 0.91))
    return base + TIE_BREAK_AMPLITUDE * tilt


def smooth_random_array(grid: GridSpec, rng: np.random.Generator,
                        modes: int = 3) -> np.ndarray:
    """Boundary-clean random field: Gaussian envelope times a random
    low-order trigonometric polynomial."""
    x1 = grid.axis(0) / grid.L1
    x2 = grid.axis(1) / grid.L2
    x3 = grid.axis(2) / grid.L3
    poly = np.zeros(grid.shape)
    for k in range(1, modes + 1):
        c = rng.standard_normal(6)
        poly += (c[0] * np.cos(k * np.pi * x1) + c[1] * np.sin(k * np.pi * x1))[:, None, None] \
            * (c[2] * np.cos(k * np.pi * x2) + c[3] * np.sin(k * np.pi * x2))[None, :, None] \
            * (c[4] * np.cos(k * np.pi * x3) + c[5] * np.sin(k * np.pi * x3))[None, None, :]
    envelope = gaussian_arrays(grid, widths=(grid.L1 / 3.0, grid.L2 / 3.0, grid.L3 / 3.0))
    return envelope * poly


def random_compact_array(grid: GridSpec, rng: np.random.Generator,
                         max_support: int | None = None,
                         nonnegative: bool = False) -> np.ndarray:
    """Random values on a compact interior x3 window, Gaussian-damped in the
    transverse plane with the outermost layer zeroed.

    The window never exceeds max_support cells (default n3 // 2 - 1), so pairs
    drawn this way always satisfy the coupled-rearrangement room condition,
    and the explicit zero rim keeps every draw boundary-clean.
    """
    n3 = grid.n3
    cap = max_support if max_support is not None else n3 // 2 - 1
    width = int(rng.integers(1, max(2, cap)))
    start = int(rng.integers(1, max(2, n3 - width)))
    vals = rng.random((grid.n1, grid.n2, width))
    if not nonnegative:
        vals = vals - 0.5
    s1 = grid.L1 / 3.0
    s2 = grid.L2 / 3.0
    envelope = np.exp(-(grid.axis(0)[:, None] / s1) ** 2
                      - (grid.axis(1)[None, :] / s2) ** 2)
    out = np.zeros(grid.shape)
    out[:, :, start:start + width] = vals * envelope[:, :, None]
    out[0, :, :] = 0.0
    out[-1, :, :] = 0.0
    out[:, 0, :] = 0.0
    out[:, -1, :] = 0.0
    return out


def cosine_bump_1d(n3: int, center: int, half_width: int) -> np.ndarray:
    """Compactly supported cos^2 profile on cells [center-hw, center+hw]."""
    out = np.zeros(n3)
    for j in range(max(0, center - half_width), min(n3, center + half_width + 1)):
        t = (j - center) / (half_width + 1)
        out[j] = np.cos(0.5 * np.pi * t) ** 2
    return out


def column_decreasing_bump(grid: GridSpec, center: int, half_width: int,
                           transverse_width: float = 1.5,
                           amplitude: float = 1.0) -> np.ndarray:
    """Positive bump, compact along x3 and nonincreasing in |x3 - center|."""
    profile = cosine_bump_1d(grid.n3, center, half_width)
    x1 = grid.axis(0)
    x2 = grid.axis(1)
    trans = np.exp(-(x1[:, None] ** 2 + x2[None, :] ** 2) / (2 * transverse_width ** 2))
    return amplitude * trans[:, :, None] * profile[None, None, :]


def perturbation_arrays(grid: GridSpec, rng: np.random.Generator,
                        complex_: bool = True) -> np.ndarray:
    out = smooth_random_array(grid, rng)
    if complex_:
        out = out + 1j * smooth_random_array(grid, rng)
    return out
