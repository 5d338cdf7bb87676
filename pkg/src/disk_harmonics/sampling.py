"""Disk-supported fields on a square grid and their square-window Fourier sums.

A :class:`DiskFunction` lives on a uniform grid over ``[-a, a]^2``; inputs use
cell centres (``G`` cells per axis, no sample at the origin), convolution
outputs use nodes (``G + 1`` points including the origin).  All Fourier sums
are Riemann sums ``h^2 * sum f(x) exp(-i pi x.k / a)`` evaluated as separable
matrix products, so both layouts are handled by the same code.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import AliasingError, ShapeError, SupportError, ValidationError

MIN_GRID = 16
SUPPORT_TOL = 1e-12


def cell_centers(a: float, grid_size: int) -> np.ndarray:
    h = 2.0 * a / grid_size
    return -a + h * (np.arange(grid_size) + 0.5)


def grid_nodes(a: float, grid_size: int) -> np.ndarray:
    h = 2.0 * a / grid_size
    return h * (np.arange(grid_size + 1) - grid_size // 2)


@dataclass(frozen=True, eq=False)
class DiskFunction:
    """Sampled field on ``[-a, a]^2`` that vanishes outside ``|x| <= support``.

    ``values[iy, ix]`` is the sample at ``(coords[ix], coords[iy])``; ``y``
    increases with the row index.
    """

    radius: float
    coords: np.ndarray
    values: np.ndarray
    support: float

    mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        values = np.asarray(self.values)
        if values.shape != (coords.size, coords.size):
            raise ShapeError(f"values shape {values.shape} does not match {coords.size} coords")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values: non-finite samples")
        if self.support > self.radius * (1 + 1e-12) or self.support <= 0:
            raise ValidationError(f"b: support radius {self.support} must lie in (0, a={self.radius}]")
        x, y = np.meshgrid(coords, coords)
        mask = np.hypot(x, y) <= self.support
        values = np.where(mask, values, 0).astype(complex)
        values.setflags(write=False)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def spacing(self) -> float:
        return float(self.coords[1] - self.coords[0])

    @property
    def grid_size(self) -> int:
        """Nominal cells per axis, ``2a / h``."""
        return int(round(2 * self.radius / self.spacing))

    @property
    def is_real(self) -> bool:
        return not np.any(self.values.imag)

    def mesh(self):
        return np.meshgrid(self.coords, self.coords)

    def l1_norm(self) -> float:
        return float(self.spacing ** 2 * np.abs(self.values).sum())

    def l2_norm(self) -> float:
        return math.sqrt(self.spacing ** 2 * float((np.abs(self.values) ** 2).sum()))

    def scaled(self, factor) -> "DiskFunction":
        return DiskFunction(self.radius, self.coords, factor * self.values, self.support)

    def reflect_conjugate(self) -> "DiskFunction":
        """``f*(x) = conj(f(-x))``; exact because the grid is symmetric about 0."""
        return DiskFunction(self.radius, self.coords, np.conj(self.values[::-1, ::-1]),
                            self.support)


Source = Union[Callable, np.ndarray]


def _sample_raster(raster: np.ndarray, b: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Raster covers [-b, b]^2 with row 0 at the top; nearest-cell lookup.
    rows, cols = raster.shape
    col = np.clip(np.floor((x + b) / (2 * b) * cols).astype(int), 0, cols - 1)
    row = np.clip(np.floor((b - y) / (2 * b) * rows).astype(int), 0, rows - 1)
    return raster[row, col]


def restrict_and_pad(f: Source, a: float = 1.0, b: float = 0.5, grid_size: int = 256) -> DiskFunction:
    """Sample ``f`` on the ``[-a, a]^2`` cell grid and zero it outside radius ``b``.

    ``f`` is either a vectorised callable ``f(x, y)`` or a 2-D raster covering
    ``[-b, b]^2`` (row 0 at the top), sampled by nearest cell.
    """
    if not (a > 0 and 0 < b <= a):
        raise ValidationError(f"b: need 0 < b <= a, got a={a}, b={b}")
    if grid_size < MIN_GRID:
        raise ValidationError(f"G: grid size must be at least {MIN_GRID}, got {grid_size}")
    coords = cell_centers(a, grid_size)
    x, y = np.meshgrid(coords, coords)
    if callable(f):
        vals = np.asarray(f(x, y))
        vals = np.broadcast_to(vals, x.shape)
    else:
        raster = np.asarray(f)
        if raster.ndim != 2 or raster.size == 0:
            raise ValidationError(f"raster: expected a 2-D array, got shape {raster.shape}")
        vals = _sample_raster(raster, b, x, y)
    inside = np.hypot(x, y) <= b
    if not np.all(np.isfinite(vals[inside])):
        raise ValidationError("f: non-finite samples inside the support disk")
    return DiskFunction(a, coords, np.where(inside, vals, 0), b)


def _phase_matrix(freqs: np.ndarray, coords: np.ndarray, scale: float) -> np.ndarray:
    return np.exp(-1j * math.pi * scale * np.multiply.outer(freqs, coords))


def _separable_sum(values, coords, h, fx, fy, scale) -> np.ndarray:
    ex = _phase_matrix(fx, coords, scale)
    ey = _phase_matrix(fy, coords, scale)
    # out[i, j] = h^2 sum_{iy, ix} v[iy, ix] ex[i, ix] ey[j, iy]
    return h * h * (ey @ (values @ ex.T)).T


def pointwise_product(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Complex product whose parts are sums of two rounded terms.

    Unlike the fused complex multiply this is bitwise symmetric in ``u`` and ``v``.
    """
    re = u.real * v.real - u.imag * v.imag
    im = u.real * v.imag + u.imag * v.real
    return re + 1j * im


@dataclass(frozen=True, eq=False)
class FourierTable:
    """Square-window coefficients ``xi^{k}`` for ``k in [-K, K]^2``.

    ``entries[k1 + K, k2 + K]`` approximates
    ``integral xi(x) exp(-i pi x.k / a) dx`` over the padded window.
    """

    cutoff: int
    radius: float
    entries: np.ndarray

    def __post_init__(self):
        n = 2 * self.cutoff + 1
        if self.entries.shape != (n, n):
            raise ShapeError(f"entries shape {self.entries.shape} does not match cutoff {self.cutoff}")

    def __getitem__(self, k):
        k1, k2 = k
        return complex(self.entries[k1 + self.cutoff, k2 + self.cutoff])

    def lattice(self):
        """Integer grids ``(k1, k2)`` aligned with ``entries``."""
        ks = np.arange(-self.cutoff, self.cutoff + 1)
        return np.meshgrid(ks, ks, indexing="ij")

    def conjugate(self) -> "FourierTable":
        """Table of ``f*``: its transform is the conjugate of ``f``'s."""
        return FourierTable(self.cutoff, self.radius, np.conj(self.entries))

    def __mul__(self, other: "FourierTable") -> "FourierTable":
        if other.cutoff != self.cutoff or other.radius != self.radius:
            raise ShapeError("tables differ in cutoff or window radius")
        return FourierTable(self.cutoff, self.radius, pointwise_product(self.entries, other.entries))

    def to_csv(self) -> str:
        k1, k2 = self.lattice()
        lines = ["k1,k2,re,im"]
        for a, b, v in zip(k1.ravel(), k2.ravel(), self.entries.ravel()):
            lines.append(f"{a},{b},{v.real:.17g},{v.imag:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, radius: float) -> "FourierTable":
        rows = np.loadtxt(text.splitlines()[1:], delimiter=",", ndmin=2)
        cutoff = int(np.abs(rows[:, :2]).max())
        entries = np.zeros((2 * cutoff + 1,) * 2, dtype=complex)
        entries[rows[:, 0].astype(int) + cutoff, rows[:, 1].astype(int) + cutoff] = rows[:, 2] + 1j * rows[:, 3]
        return cls(cutoff, radius, entries)


def square_fourier_coeff(xi: DiskFunction, cutoff: int) -> FourierTable:
    """Riemann-sum Fourier coefficients of the zero-padded window."""
    if cutoff < 1:
        raise ValidationError("K: cutoff must be positive")
    if 2 * cutoff >= xi.grid_size:
        raise AliasingError(f"K={cutoff} must stay below G/2={xi.grid_size / 2}")
    ks = np.arange(-cutoff, cutoff + 1, dtype=float)
    entries = _separable_sum(xi.values, xi.coords, xi.spacing, ks, ks, 1.0 / xi.radius)
    return FourierTable(cutoff, xi.radius, entries)


def support_leak(f: DiskFunction, b: float) -> float:
    """Fraction of ``|f|^2`` sitting outside radius ``b``."""
    x, y = f.mesh()
    power = np.abs(f.values) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    return float(power[np.hypot(x, y) > b].sum() / total)


def windowed_ft(f: DiskFunction, omega, b: float) -> complex:
    """``integral_{|x| <= b} f(x) exp(-i pi omega.x) dx`` as a grid sum."""
    leak = support_leak(f, b * (1 + 1e-12))
    if leak > SUPPORT_TOL:
        raise SupportError(f"f has {leak:.3e} of its energy outside radius b={b}")
    w1, w2 = (float(v) for v in omega)
    val = _separable_sum(f.values, f.coords, f.spacing, np.array([w1]), np.array([w2]), 1.0)
    return complex(val[0, 0])


def windowed_table(f: DiskFunction, a: float, cutoff: int) -> FourierTable:
    """``f^[k / a; b]`` on ``[-K, K]^2``: the lattice of a radius-``a`` disk.

    For ``a = 2b`` these are exactly the square-window coefficients of the
    zero-padded embedding of ``f`` into ``[-a, a]^2``.
    """
    if cutoff < 1:
        raise ValidationError("K: cutoff must be positive")
    if f.support > a * (1 + 1e-12):
        raise ValidationError(f"a: lattice radius {a} is smaller than the support radius {f.support}")
    # phase step per cell is pi K h / a; keep it below pi like the padded window would
    if cutoff * f.spacing >= a:
        raise AliasingError(f"K={cutoff} aliases on a grid with spacing {f.spacing} (need K h < a)")
    ks = np.arange(-cutoff, cutoff + 1, dtype=float)
    entries = _separable_sum(f.values, f.coords, f.spacing, ks, ks, 1.0 / a)
    return FourierTable(cutoff, a, entries)


def read_raster(path) -> np.ndarray:
    """Load an 8-bit PGM (P5) or a CSV matrix as floats in ``[0, 1]``.

    PGM samples are divided by the header maxval.  CSV values are kept when
    they already lie in ``[0, 1]`` and min-max rescaled otherwise.
    """
    ext = os.path.splitext(str(path))[1].lower()
    try:
        if ext in (".pgm", ".pnm"):
            from PIL import Image

            with Image.open(path) as img:
                if img.format != "PPM" or img.mode not in ("L", "I", "I;16", "I;16B"):
                    raise ValidationError(f"{path}: expected a grayscale PGM, got {img.mode}")
                data = np.asarray(img, dtype=float)
                maxval = 255.0 if img.mode == "L" else float(img.info.get("maxval", data.max() or 1))
            data = data / maxval
        else:
            data = np.loadtxt(path, delimiter=",", ndmin=2)
            if data.size and (data.min() < 0 or data.max() > 1):
                span = data.max() - data.min()
                data = (data - data.min()) / span if span > 0 else np.zeros_like(data)
    except ValidationError:
        raise
    except (OSError, ValueError) as exc:
        raise ValidationError(f"{path}: cannot read raster ({exc})") from exc
    if data.ndim != 2 or data.shape[0] != data.shape[1]:
        raise ValidationError(f"{path}: raster must be square, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValidationError(f"{path}: raster contains non-finite values")
    return data


def write_raster(path, data: np.ndarray) -> None:
    """Write a real 2-D array; ``.pgm`` clips to ``[0, 1]`` and quantises to 8 bits."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".pgm", ".pnm"):
        from PIL import Image

        img = np.clip(np.rint(np.clip(data, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(img, mode="L").save(path, format="PPM")
    else:
        with open(path, "w") as fh:
            for row in np.asarray(data, dtype=float):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def to_raster(f: DiskFunction) -> np.ndarray:
    """Real part with row 0 at the top, the inverse of raster ingestion."""
    return np.real(f.values)[::-1, :]
