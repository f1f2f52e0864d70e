"""Uniform box grids, sampled scalar fields, quadrature, and x3 shift utilities.

Fields live on a cell-centered grid over the box [-L1,L1] x [-L2,L2] x [-L3,L3]
with zero Dirichlet ghost cells outside.  All integrals are midpoint sums, the
gradient energy is the forward-difference sum over every cell link including
the two boundary links per axis, so the 7-point Laplacian is the exact
gradient of the discrete kinetic energy.
"""

from __future__ import annotations

import functools
import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Outermost-layer mass fraction below which a field counts as boundary-clean.
BOUNDARY_CLEAN_FRACTION = 1e-10


class BoundaryContaminationWarning(UserWarning):
    """Field carries enough boundary-layer mass to bias Dirichlet energies."""


@dataclass(frozen=True)
class GridSpec:
    """Cell counts and half-widths of the computation box.

    Spacings are h_i = 2 L_i / n_i and cell centers x_i(k) = -L_i + (k + 1/2) h_i,
    symmetric about the origin per axis.
    """

    n1: int
    n2: int
    n3: int
    L1: float
    L2: float
    L3: float

    def __post_init__(self):
        for name in ("n1", "n2", "n3"):
            v = getattr(self, name)
            if int(v) != v or int(v) < 4:
                raise ValueError(f"{name} must be an integer >= 4, got {v!r}")
            object.__setattr__(self, name, int(v))
        for name in ("L1", "L2", "L3"):
            v = float(getattr(self, name))
            if not (v > 0 and np.isfinite(v)):
                raise ValueError(f"{name} must be a positive finite length, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def size(self) -> int:
        return self.n1 * self.n2 * self.n3

    @property
    def h(self) -> tuple[float, float, float]:
        return (2 * self.L1 / self.n1, 2 * self.L2 / self.n2, 2 * self.L3 / self.n3)

    @property
    def cell_volume(self) -> float:
        h1, h2, h3 = self.h
        return h1 * h2 * h3

    def axis(self, i: int) -> np.ndarray:
        """Cell-center coordinates along axis i (0, 1 or 2)."""
        n = (self.n1, self.n2, self.n3)[i]
        L = (self.L1, self.L2, self.L3)[i]
        return _axis_coords(n, L)

    def meshgrid(self):
        return np.meshgrid(self.axis(0), self.axis(1), self.axis(2), indexing="ij")

    def transverse_potential(self) -> np.ndarray:
        """x1^2 + x2^2 sampled at cell centers, shaped (n1, n2, 1) for broadcasting."""
        return _transverse_potential(self)

    def to_dict(self) -> dict:
        return {"n1": self.n1, "n2": self.n2, "n3": self.n3,
                "L1": self.L1, "L2": self.L2, "L3": self.L3}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(**d)

    @classmethod
    def default(cls) -> "GridSpec":
        # Elongated x3 axis where the translation symmetry lives.
        return cls(32, 32, 128, 8.0, 8.0, 16.0)


@functools.lru_cache(maxsize=256)
def _axis_coords_cached(n: int, L: float) -> np.ndarray:
    h = 2 * L / n
    x = -L + (np.arange(n) + 0.5) * h
    x.setflags(write=False)
    return x


def _axis_coords(n: int, L: float) -> np.ndarray:
    return _axis_coords_cached(n, L)


@functools.lru_cache(maxsize=64)
def _transverse_potential(grid: GridSpec) -> np.ndarray:
    x1 = grid.axis(0)
    x2 = grid.axis(1)
    pot = (x1[:, None] ** 2 + x2[None, :] ** 2)[:, :, None]
    pot.setflags(write=False)
    return pot


@dataclass(frozen=True)
class ScalarField:
    """One sampled component: a real or complex amplitude per grid cell.

    Values are stored C-ordered with shape (n1, n2, n3), so flattening gives
    index (i1*n2 + i2)*n3 + i3 and x3 columns are contiguous.
    """

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.size != self.grid.size:
            raise ValueError(
                f"values length {arr.size} does not match grid size {self.grid.size}")
        dtype = np.complex128 if np.iscomplexobj(arr) else np.float64
        arr = np.array(arr, dtype=dtype, order="C").reshape(self.grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must all be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, grid: GridSpec, complex_: bool = False) -> "ScalarField":
        dtype = np.complex128 if complex_ else np.float64
        return cls(grid, np.zeros(grid.shape, dtype=dtype))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "ScalarField":
        X1, X2, X3 = grid.meshgrid()
        return cls(grid, fn(X1, X2, X3))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _require_same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _require_same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "ScalarField":
        return ScalarField(self.grid, self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class StatePair:
    """Two components sharing one grid."""

    first: ScalarField
    second: ScalarField

    def __post_init__(self):
        if self.first.grid != self.second.grid:
            raise ValueError("state pair components must share one grid")

    @property
    def grid(self) -> GridSpec:
        return self.first.grid


def _require_same_grid(u: ScalarField, v: ScalarField) -> None:
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")


def _abs2(arr: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(arr):
        return arr.real ** 2 + arr.imag ** 2
    return arr * arr


# ---------------------------------------------------------------------------
# quadrature

def mass(u: ScalarField) -> float:
    """Midpoint quadrature of |u|^2 over the box."""
    return float(np.sum(_abs2(u.values))) * u.grid.cell_volume


def lp_norm_p(u: ScalarField, p: float) -> float:
    """The p-th power of the L^p norm, i.e. the midpoint sum of |u|^p."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(np.sum(np.abs(u.values) ** p)) * u.grid.cell_volume


def mixed_integral(u: ScalarField, v: ScalarField, r1: float, r2: float) -> float:
    """Midpoint sum of |u|^r1 |v|^r2; zero iff the grid supports are disjoint."""
    _require_same_grid(u, v)
    if r1 <= 0 or r2 <= 0:
        raise ValueError("exponents r1, r2 must be positive")
    return float(np.sum(np.abs(u.values) ** r1 * np.abs(v.values) ** r2)) * u.grid.cell_volume


def inner(u: ScalarField, v: ScalarField) -> float:
    """Real L^2 pairing Re <u, v>."""
    _require_same_grid(u, v)
    return _inner_arr(u.values, v.values, u.grid.cell_volume)


def _inner_arr(a: np.ndarray, b: np.ndarray, vol: float) -> float:
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        return float(np.real(np.vdot(a, b))) * vol
    return float(np.dot(a.reshape(-1), b.reshape(-1))) * vol


# ---------------------------------------------------------------------------
# Dirichlet gradient energy and confinement moment

def _dirichlet_arr(arr: np.ndarray, grid: GridSpec) -> float:
    total = 0.0
    for ax, h in enumerate(grid.h):
        d = np.diff(arr, axis=ax)
        s = float(np.sum(_abs2(d)))
        # boundary links against the zero ghost cells
        lead = np.take(arr, 0, axis=ax)
        tail = np.take(arr, -1, axis=ax)
        s += float(np.sum(_abs2(lead))) + float(np.sum(_abs2(tail)))
        total += s / h ** 2
    return total * grid.cell_volume


def _potential_arr(arr: np.ndarray, grid: GridSpec) -> float:
    return float(np.sum(grid.transverse_potential() * _abs2(arr))) * grid.cell_volume


def dirichlet_energy(u: ScalarField) -> float:
    """Forward-difference gradient energy with zero Dirichlet ghost cells."""
    return _dirichlet_arr(u.values, u.grid)


def potential_moment(u: ScalarField) -> float:
    """Transverse confinement moment, the integral of (x1^2 + x2^2) |u|^2."""
    return _potential_arr(u.values, u.grid)


def h_seminorm_sq(u: ScalarField) -> float:
    """Squared energy seminorm: gradient energy plus transverse moment.

    Emits BoundaryContaminationWarning when the outermost cell layer holds
    more than BOUNDARY_CLEAN_FRACTION of the mass; the Dirichlet closure is
    then a poor model of the unbounded problem.
    """
    if not is_boundary_clean(u):
        warnings.warn(
            "field is not boundary-clean; Dirichlet energy may be contaminated",
            BoundaryContaminationWarning, stacklevel=2)
    return _dirichlet_arr(u.values, u.grid) + _potential_arr(u.values, u.grid)


def h_norm_sq(u: ScalarField) -> float:
    """Squared full norm: seminorm plus mass."""
    return h_seminorm_sq(u) + mass(u)


def boundary_mass(u: ScalarField) -> float:
    """Mass held in the outermost cell layer."""
    arr = u.values
    total = float(np.sum(_abs2(arr)))
    interior = float(np.sum(_abs2(arr[1:-1, 1:-1, 1:-1])))
    return (total - interior) * u.grid.cell_volume


def is_boundary_clean(u: ScalarField) -> bool:
    m = mass(u)
    if m == 0.0:
        return True
    return boundary_mass(u) < BOUNDARY_CLEAN_FRACTION * m


# ---------------------------------------------------------------------------
# x3 translations and strips

def _translate_arr(arr: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros_like(arr)
    if k == 0:
        out[...] = arr
    elif k > 0:
        out[..., k:] = arr[..., :-k]
    else:
        out[..., :k] = arr[..., -k:]
    return out


def translate_x3(u: ScalarField, k: int) -> ScalarField:
    """Shift by k cells along x3, zero-filling the vacated cells."""
    if abs(int(k)) >= u.grid.n3:
        raise ValueError(f"|k| = {abs(k)} must be smaller than n3 = {u.grid.n3}")
    return ScalarField(u.grid, _translate_arr(u.values, int(k)))


def strip_masses(u: ScalarField) -> np.ndarray:
    """Mass per x3 cell layer; the layers partition the grid."""
    return np.sum(_abs2(u.values), axis=(0, 1)) * u.grid.cell_volume


def recenter_x3(u: ScalarField) -> tuple[ScalarField, int]:
    """Translate the maximal-mass x3 layer to the center layer.

    Returns the recentred field and the applied shift in cells.  Idempotent
    up to one cell (ties are broken toward the lowest index).
    """
    strips = strip_masses(u)
    if not np.any(strips > 0):
        raise ValueError("cannot recenter the zero field")
    k_best = int(np.argmax(strips))
    shift = u.grid.n3 // 2 - k_best
    return translate_x3(u, shift), shift


# ---------------------------------------------------------------------------
# on-disk format: JSON sidecar + raw little-endian array

def save_field(u: ScalarField, prefix) -> tuple[Path, Path]:
    """Write <prefix>.json metadata and <prefix>.bin raw values.

    The raw file is the flat row-major array as little-endian 8-byte reals,
    re/im interleaved for complex fields.
    """
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    dtype = "c128" if u.is_complex else "f64"
    meta = dict(u.grid.to_dict(), dtype=dtype, order="(i1*n2+i2)*n3+i3")
    json_path = prefix.with_suffix(".json")
    bin_path = prefix.with_suffix(".bin")
    json_path.write_text(json.dumps(meta, indent=2) + "\n")
    wire = u.flat.astype("<c16" if u.is_complex else "<f8")
    bin_path.write_bytes(wire.tobytes())
    return json_path, bin_path


def load_field(prefix) -> ScalarField:
    prefix = Path(prefix)
    meta = json.loads(prefix.with_suffix(".json").read_text())
    order = meta.pop("order", "(i1*n2+i2)*n3+i3")
    if order != "(i1*n2+i2)*n3+i3":
        raise ValueError(f"unsupported storage order {order!r}")
    dtype = meta.pop("dtype")
    if dtype not in ("f64", "c128"):
        raise ValueError(f"unsupported dtype {dtype!r}")
    grid = GridSpec.from_dict(meta)
    raw = prefix.with_suffix(".bin").read_bytes()
    arr = np.frombuffer(raw, dtype="<c16" if dtype == "c128" else "<f8")
    return ScalarField(grid, arr)


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()
