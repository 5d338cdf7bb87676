"""Fourier-Bessel basis on a disk of radius ``a``.

``Psi_nm(r, theta) = J_m(z_mn r / a) / sqrt(N_nm(a)) * exp(i m theta) / sqrt(2 pi)``
with ``z_mn`` the n-th admissible zero for the chosen boundary condition.
Negative orders reuse the ``|m|`` zero table; ``J_{-m} = (-1)^m J_m`` carries
the sign.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .bessel import (
    BoundaryCondition,
    bessel_j_table,
    bessel_jp_table,
    eval_j,
    find_zeros,
)
from .errors import ConsistencyError, DomainError, ValidationError

LOMMEL_SWITCH = 1e-6


@dataclass(frozen=True)
class BasisSpec:
    """Disk radius, boundary condition and truncation orders.

    Coefficients are indexed by ``n = 1..max_radial`` and
    ``m = -max_angular..max_angular``; ``lattice_cutoff`` bounds the
    ``k`` window ``[-K, K]^2`` used by the spectral paths.
    """

    radius: float = 1.0
    condition: BoundaryCondition = BoundaryCondition.ZERO_VALUE
    max_angular: int = 8
    max_radial: int = 8
    lattice_cutoff: int = 32

    def __post_init__(self):
        object.__setattr__(self, "condition", BoundaryCondition.parse(self.condition))
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValidationError(f"a: radius must be positive, got {self.radius}")
        if self.max_angular < 0:
            raise ValidationError("M: max angular order must be non-negative")
        if self.max_radial < 1:
            raise ValidationError("N: max radial order must be positive")
        if self.lattice_cutoff < 1:
            raise ValidationError("K: lattice cutoff must be positive")

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.max_angular, self.max_angular + 1)

    def zero(self, m: int, n: int) -> float:
        return _zeros(abs(m), self.max_radial, self.condition)[n - 1]

    def zeros(self) -> np.ndarray:
        """``z[n-1, |m|]`` for ``|m| <= M``."""
        return _zero_grid(self.max_angular, self.max_radial, self.condition)

    def eigenvalue(self, m: int, n: int) -> float:
        """``rho_nm = z_mn / a``."""
        return self.zero(m, n) / self.radius

    def with_radius(self, radius: float) -> "BasisSpec":
        return BasisSpec(radius, self.condition, self.max_angular, self.max_radial,
                         self.lattice_cutoff)

    def check_index(self, m: int, n: int) -> None:
        if not 1 <= n <= self.max_radial or abs(m) > self.max_angular:
            raise ValidationError(
                f"index (n={n}, m={m}) outside 1..{self.max_radial} x "
                f"-{self.max_angular}..{self.max_angular}"
            )


@functools.lru_cache(maxsize=None)
def _zeros(m: int, count: int, condition: BoundaryCondition) -> tuple:
    return find_zeros(m, count, condition).zeros


@functools.lru_cache(maxsize=None)
def _zero_grid(max_angular: int, max_radial: int, condition: BoundaryCondition) -> np.ndarray:
    z = np.array([_zeros(m, max_radial, condition) for m in range(max_angular + 1)]).T
    z.setflags(write=False)
    return z


def _unit_normalization(m: int, z: float, condition: BoundaryCondition) -> float:
    """``D_n^(m) = N_n^(m)(1)``."""
    m = abs(m)
    if condition is BoundaryCondition.ZERO_VALUE:
        return 0.5 * eval_j(m + 1, z) ** 2
    if z == 0.0:
        if m == 0:
            return 0.5
        raise ConsistencyError(f"derivative-condition zero z=0 is only admissible for m=0 (m={m})")
    return 0.5 * (1.0 - (m / z) ** 2) * eval_j(m, z) ** 2


def normalization(m: int, n: int, spec: BasisSpec) -> float:
    """``N_n^(m)(a) = integral_0^a J_m(rho_nm r)^2 r dr``."""
    spec.check_index(m, n)
    return spec.radius ** 2 * _unit_normalization(m, spec.zero(m, n), spec.condition)


@dataclass(frozen=True)
class NormalizationTable:
    """``N_n^(m)(a)`` for a whole spec, stored as ``values[n-1, |m|]``.

    ``unit`` holds ``D_n^(m) = N_n^(m)(1)``; ``values = a**2 * unit``.
    """

    spec: BasisSpec
    unit: np.ndarray

    @classmethod
    def build(cls, spec: BasisSpec) -> "NormalizationTable":
        return _norm_table(spec)

    @property
    def values(self) -> np.ndarray:
        return self.spec.radius ** 2 * self.unit

    def __call__(self, m: int, n: int) -> float:
        return float(self.spec.radius ** 2 * self.unit[n - 1, abs(m)])


@functools.lru_cache(maxsize=None)
def _norm_table(spec: BasisSpec) -> NormalizationTable:
    z = spec.zeros()
    unit = np.array([[_unit_normalization(m, z[n, m], spec.condition)
                      for m in range(spec.max_angular + 1)]
                     for n in range(spec.max_radial)])
    if not np.all(unit > 0):
        raise ConsistencyError("normalization table has non-positive entries")
    unit.setflags(write=False)
    return NormalizationTable(spec, unit)


def _check_radius(r, a: float) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    slack = 1e-12 * a
    if np.any(r < -slack) or np.any(r > a + slack) or not np.all(np.isfinite(r)):
        raise DomainError(f"r must lie in [0, {a}]")
    return np.clip(r, 0.0, a)


def eval_radial(m: int, n: int, r, spec: BasisSpec):
    """Normalised radial function ``J_m(rho_nm r) / sqrt(N_n^(m)(a))``."""
    spec.check_index(m, n)
    r = _check_radius(r, spec.radius)
    vals = eval_j(m, spec.eigenvalue(m, n) * r) / math.sqrt(normalization(m, n, spec))
    return float(vals) if np.ndim(vals) == 0 else vals


def eval_basis(m: int, n: int, r, theta, spec: BasisSpec):
    """Polar harmonic ``Psi_nm(r, theta)``."""
    radial = eval_radial(m, n, r, spec)
    vals = radial * np.exp(1j * m * np.asarray(theta, dtype=float)) / math.sqrt(2 * math.pi)
    return complex(vals) if np.ndim(vals) == 0 else vals


def radial_table(spec: BasisSpec, r) -> np.ndarray:
    """All normalised radial functions at once: ``out[n-1, |m|, ...]``.

    Order ``-m`` equals ``(-1)^m`` times order ``m``; callers apply the sign.
    """
    r = _check_radius(r, spec.radius)
    # grids repeat radii many times over (eightfold symmetry); evaluate each once
    ru, inverse = np.unique(r, return_inverse=True)
    z = spec.zeros()
    norm = NormalizationTable.build(spec).values
    out = np.empty((spec.max_radial, spec.max_angular + 1, ru.size))
    for n in range(spec.max_radial):
        j = bessel_j_table(spec.max_angular, np.multiply.outer(z[n] / spec.radius, ru))
        for m in range(spec.max_angular + 1):
            out[n, m] = j[m, m] / math.sqrt(norm[n, m])
    return out[:, :, inverse.reshape(r.shape)]


def _lommel_confluent(m: int, x: float, a: float) -> float:
    # m J_m(x) / x = (J_{m-1} + J_{m+1}) / 2 keeps the limit finite as x -> 0
    j = bessel_j_table(m + 1, np.array([x]))[:, 0]
    jp = bessel_jp_table(m, np.array([x]))[m, 0]
    ratio = 0.0 if m == 0 else 0.5 * (j[m - 1] + j[m + 1])
    return 0.5 * a * a * (jp * jp + j[m] * j[m] - ratio * ratio)


def lommel_integral(m: int, alpha: float, beta: float, a: float) -> float:
    """``integral_0^a J_m(alpha r) J_m(beta r) r dr`` in closed form.

    Below ``|alpha - beta| * a < 1e-6`` the difference quotient is replaced by
    its confluent limit, evaluated at the midpoint so the error stays second
    order in the gap.
    """
    if alpha < 0 or beta < 0:
        raise ValidationError("alpha and beta must be non-negative")
    if a <= 0:
        raise ValidationError("a must be positive")
    m = abs(int(m))  # the product J_m J_m is even in the sign of m
    if abs(alpha - beta) * a < LOMMEL_SWITCH:
        return _lommel_confluent(m, 0.5 * (alpha + beta) * a, a)
    xa, xb = alpha * a, beta * a
    j = bessel_j_table(m + 1, np.array([xa, xb]))
    jp = bessel_jp_table(m, np.array([xa, xb]))[m]
    ja, jb = j[m]
    return a * (beta * ja * jp[1] - alpha * jb * jp[0]) / (alpha * alpha - beta * beta)
