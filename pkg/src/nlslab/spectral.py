"""Ground energies of the confined operator: the 2D trapped problem and the
3D problem with a Dirichlet box along the free axis."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .descent import SolverOptions, projected_descent
from .errors import NumericalError
from .fields import GridSpec, ScalarField, _axis_coords
from .sampling import gaussian_arrays


@dataclass(frozen=True)
class TransverseGrid:
    """Cell-centered 2D restriction of a GridSpec to the confined plane."""

    n1: int
    n2: int
    L1: float
    L2: float

    def __post_init__(self):
        for name in ("n1", "n2"):
            v = getattr(self, name)
            if int(v) != v or int(v) < 4:
                raise ValueError(f"{name} must be an integer >= 4")
            object.__setattr__(self, name, int(v))
        for name in ("L1", "L2"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_grid(cls, grid: GridSpec) -> "TransverseGrid":
        return cls(grid.n1, grid.n2, grid.L1, grid.L2)

    @property
    def h(self) -> tuple[float, float]:
        return (2 * self.L1 / self.n1, 2 * self.L2 / self.n2)

    @property
    def cell_area(self) -> float:
        h1, h2 = self.h
        return h1 * h2

    def axis(self, i: int) -> np.ndarray:
        n = (self.n1, self.n2)[i]
        L = (self.L1, self.L2)[i]
        return _axis_coords(n, L)

    def potential(self) -> np.ndarray:
        return _potential_2d(self)


@functools.lru_cache(maxsize=64)
def _potential_2d(grid2: TransverseGrid) -> np.ndarray:
    pot = grid2.axis(0)[:, None] ** 2 + grid2.axis(1)[None, :] ** 2
    pot.setflags(write=False)
    return pot


@dataclass(frozen=True)
class TransverseField:
    grid: TransverseGrid
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64).reshape(grid_shape := (self.grid.n1, self.grid.n2))
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class GroundState:
    """Lowest energy and unit-mass minimizer of the quadratic form."""

    energy: float
    field: object  # ScalarField (3D) or TransverseField (2D)
    iterations: int


def _seminorm_2d(arr: np.ndarray, grid2: TransverseGrid) -> float:
    area = grid2.cell_area
    total = 0.0
    for ax, h in enumerate(grid2.h):
        d = np.diff(arr, axis=ax)
        s = float(np.sum(d * d))
        s += float(np.sum(np.take(arr, 0, axis=ax) ** 2))
        s += float(np.sum(np.take(arr, -1, axis=ax) ** 2))
        total += s / h ** 2
    return total * area + float(np.sum(grid2.potential() * arr * arr)) * area


def _stencil_2d(arr: np.ndarray, grid2: TransverseGrid) -> np.ndarray:
    out = np.zeros_like(arr)
    for ax, h in enumerate(grid2.h):
        pad = [(0, 0), (0, 0)]
        pad[ax] = (1, 1)
        padded = np.pad(arr, pad)
        lo = [slice(None)] * 2
        hi = [slice(None)] * 2
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        out += (2.0 * arr - padded[tuple(lo)] - padded[tuple(hi)]) / h ** 2
    return out


SPECTRAL_OPTS = SolverOptions(tau0=0.25, armijo=0.5, tol_energy=1e-13,
                              tol_residual=1e-9, max_iter=60000)


def ground_2d(grid2: TransverseGrid, opts: SolverOptions | None = None) -> GroundState:
    """Minimize the 2D confined quadratic form on the unit mass sphere.

    Runs the shared projected-descent engine on the halved form, so the
    reported energy is the quadratic form of the returned unit-mass field.
    """
    if min(grid2.L1, grid2.L2) < 6.0:
        raise ValueError("transverse half-widths below 6 truncate the trapped state")
    opts = opts or SPECTRAL_OPTS
    area = grid2.cell_area

    def energy_fn(states):
        return 0.5 * _seminorm_2d(states[0], grid2)

    def gradient_fn(states):
        arr = states[0]
        return (_stencil_2d(arr, grid2) + grid2.potential() * arr,)

    x1 = grid2.axis(0)
    x2 = grid2.axis(1)
    init = np.exp(-(x1[:, None] ** 2 + x2[None, :] ** 2) / 2.0)
    result = projected_descent((init,), (1.0,), energy_fn, gradient_fn, area, opts)
    if not result.converged:
        raise NumericalError("2D ground-state descent did not converge")
    w = result.states[0]
    if float(np.sum(w)) < 0:
        w = -w
    return GroundState(energy=2.0 * result.energy,
                       field=TransverseField(grid2, w),
                       iterations=result.iterations)


def dirichlet_gap_1d(n3: int, h3: float) -> float:
    """Smallest eigenvalue of the 1D Dirichlet difference Laplacian."""
    return 4.0 / h3 ** 2 * np.sin(np.pi / (2.0 * (n3 + 1))) ** 2


def box_mode_1d(n3: int) -> np.ndarray:
    """Its eigenvector, the discrete half-sine."""
    return np.sin(np.pi * (np.arange(n3) + 1.0) / (n3 + 1.0))


def ground_3d(grid: GridSpec, opts: SolverOptions | None = None) -> GroundState:
    """Minimize the 3D confined quadratic form with the Dirichlet box.

    Seeds the descent with the product of the 2D ground state and the exact
    discrete box mode along x3 (the discrete operator is a tensor sum, so the
    product already solves it up to the 2D convergence error) and lets the
    engine verify stationarity on the full 3D grid.
    """
    opts = opts or SPECTRAL_OPTS
    from .energy import _apply_stencil  # local import avoids a cycle at import time
    vol = grid.cell_volume
    pot = grid.transverse_potential()

    gs2 = ground_2d(TransverseGrid.from_grid(grid), opts)
    init = gs2.field.values[:, :, None] * box_mode_1d(grid.n3)[None, None, :]

    def energy_fn(states):
        arr = states[0]
        from .fields import _dirichlet_arr, _potential_arr
        return 0.5 * (_dirichlet_arr(arr, grid) + _potential_arr(arr, grid))

    def gradient_fn(states):
        arr = states[0]
        return (_apply_stencil(arr, grid) + pot * arr,)

    result = projected_descent((init,), (1.0,), energy_fn, gradient_fn, vol, opts)
    if not result.converged:
        raise NumericalError("3D ground-state descent did not converge")
    u = result.states[0]
    if float(np.sum(u)) < 0:
        u = -u
    return GroundState(energy=2.0 * result.energy,
                       field=ScalarField(grid, u),
                       iterations=result.iterations + gs2.iterations)


def spectrum_report(grid: GridSpec, opts: SolverOptions | None = None) -> dict:
    """Transverse and boxed ground energies with their gap."""
    lam0 = ground_2d(TransverseGrid.from_grid(grid), opts).energy
    Lam0 = ground_3d(grid, opts).energy
    return {
        "lambda0": lam0,
        "Lambda0": Lam0,
        "gap": Lam0 - lam0,
        "grid": grid.to_dict(),
    }
