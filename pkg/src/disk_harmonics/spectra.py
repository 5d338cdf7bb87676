"""Fourier-Bessel coefficients from square-window Fourier tables.

For ``xi`` supported in the disk of radius ``a`` and extended by zero to
``[-a, a]^2``, the Fourier series on the square gives

    C_nm = sum_k c(k; n, m) * xi^{k},    c(k) = W_nm(k) / (4 a^2),

with ``W_nm(k) = integral_disk exp(i pi k.x / a) conj(Psi_nm(x)) dx``.  The
Jacobi-Anger expansion and the Lommel integral reduce ``W`` to one Bessel
evaluation per lattice point:

* zero-value condition::

      c = c0 (-1)^n i^m rho J_|m|(pi|k|) e^{-i m Phi(k)} / (pi^2 |k|^2 - z^2)

* derivative condition::

      c = c1 (-1)^n i^m |k| rho J_|m|'(pi|k|) e^{-i m Phi(k)}
          / (sqrt(z^2 - m^2) (z^2 - pi^2 |k|^2))

  with ``rho / sqrt(z^2 - m^2)`` read as ``1 / a`` for ``m = 0``.

The constants ``c0`` and ``c1`` are fitted once against a quadrature oracle
(:func:`calibrate`) and frozen in :data:`WEIGHT_CONSTANTS`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .basis import BasisSpec, NormalizationTable, radial_table
from .bessel import BoundaryCondition, bessel_j_table, bessel_jp_table
from .errors import (
    ConsistencyError,
    NearSingularWeightError,
    ShapeError,
    ValidationError,
)
from .sampling import DiskFunction, FourierTable

RESONANCE_TOL = 1e-9
MIN_CUTOFF = 8

WEIGHT_CONSTANTS = {
    BoundaryCondition.ZERO_VALUE: 0.5 * math.sqrt(math.pi),
    BoundaryCondition.DERIVATIVE: -0.5 * math.pi * math.sqrt(math.pi),
}

_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


def _i_power(m):
    return np.array([_I_POWERS[int(v) % 4] for v in np.atleast_1d(m)])


# ---------------------------------------------------------------- coefficients


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """Coefficients ``C[n, m]`` stored as ``entries[n - 1, m + M]``.

    ``magnitude`` caches ``|C|``.  Rotations are unitary, so
    :func:`rotate_coefficients` carries it over unchanged and rotation
    descriptors stay bit-identical for every angle.
    """

    spec: BasisSpec
    entries: np.ndarray
    magnitude: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        shape = (self.spec.max_radial, 2 * self.spec.max_angular + 1)
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != shape:
            raise ShapeError(f"coefficient entries have shape {entries.shape}, expected {shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        mag = np.abs(entries) if self.magnitude is None else np.array(self.magnitude, dtype=float)
        mag.setflags(write=False)
        object.__setattr__(self, "magnitude", mag)

    @classmethod
    def zeros(cls, spec: BasisSpec) -> "CoefficientMatrix":
        return cls(spec, np.zeros((spec.max_radial, 2 * spec.max_angular + 1), dtype=complex))

    @classmethod
    def unit(cls, spec: BasisSpec, n: int, m: int) -> "CoefficientMatrix":
        spec.check_index(m, n)
        e = np.zeros((spec.max_radial, 2 * spec.max_angular + 1), dtype=complex)
        e[n - 1, m + spec.max_angular] = 1.0
        return cls(spec, e)

    def __getitem__(self, index) -> complex:
        n, m = index
        self.spec.check_index(m, n)
        return complex(self.entries[n - 1, m + self.spec.max_angular])

    def __add__(self, other: "CoefficientMatrix") -> "CoefficientMatrix":
        if other.spec != self.spec:
            raise ShapeError("coefficient matrices come from different specs")
        return CoefficientMatrix(self.spec, self.entries + other.entries)

    def scaled(self, factor) -> "CoefficientMatrix":
        return CoefficientMatrix(self.spec, factor * self.entries)

    def max_abs_diff(self, other: "CoefficientMatrix") -> float:
        return float(np.abs(self.entries - other.entries).max())

    def to_csv(self, grid_size: int | None = None) -> str:
        s = self.spec
        lines = [
            f"# M={s.max_angular},N={s.max_radial},K={s.lattice_cutoff},"
            f"G={'' if grid_size is None else grid_size},bc={s.condition.value},a={s.radius:.17g}",
            "bc,a,n,m,re,im",
        ]
        for n in range(1, s.max_radial + 1):
            for m in range(-s.max_angular, s.max_angular + 1):
                v = self.entries[n - 1, m + s.max_angular]
                lines.append(f"{s.condition.value},{s.radius:.17g},{n},{m},{v.real:.17g},{v.imag:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "CoefficientMatrix":
        lines = text.splitlines()
        if len(lines) < 2 or not lines[0].startswith("#"):
            raise ValidationError("coefficients: missing '# M=..,N=..' header line")
        meta = {}
        for item in lines[0][1:].split(","):
            key, _, val = item.strip().partition("=")
            meta[key] = val
        try:
            spec = BasisSpec(float(meta["a"]), meta["bc"], int(meta["M"]), int(meta["N"]),
                             int(meta["K"]))
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"coefficients: malformed header ({exc})") from exc
        entries = np.zeros((spec.max_radial, 2 * spec.max_angular + 1), dtype=complex)
        for line in lines[2:]:
            if not line.strip():
                continue
            parts = line.split(",")
            try:
                n, m = int(parts[2]), int(parts[3])
                spec.check_index(m, n)
                entries[n - 1, m + spec.max_angular] = float(parts[4]) + 1j * float(parts[5])
            except (IndexError, ValueError) as exc:
                raise ValidationError(f"coefficients: malformed row {line!r}") from exc
        return cls(spec, entries)


def rotate_coefficients(C: CoefficientMatrix, alpha: float) -> CoefficientMatrix:
    """Coefficients of ``xi`` rotated by ``alpha``: ``C'_nm = exp(-i m alpha) C_nm``."""
    phase = np.exp(-1j * C.spec.orders * float(alpha))
    return CoefficientMatrix(C.spec, C.entries * phase, magnitude=C.magnitude)


# ---------------------------------------------------------------- lattice shells


@dataclass(frozen=True)
class LatticeShells:
    """Lattice window ``[-K, K]^2`` grouped by exact squared norm.

    ``norms[s]`` is the integer ``|k|^2`` of shell ``s`` (ascending);
    ``members[s]`` lists its points ``(k1, k2)`` in row-major window order.
    """

    cutoff: int
    norms: Tuple[int, ...]
    members: Tuple[Tuple[Tuple[int, int], ...], ...]

    @property
    def radii(self) -> np.ndarray:
        return np.sqrt(np.array(self.norms, dtype=float))

    def shell(self, norm_sq: int) -> Tuple[Tuple[int, int], ...]:
        try:
            return self.members[self.norms.index(int(norm_sq))]
        except ValueError:
            return ()

    def angles(self, norm_sq: int) -> np.ndarray:
        pts = np.array(self.shell(norm_sq), dtype=float).reshape(-1, 2)
        return _angle(pts[:, 0], pts[:, 1])

    def points(self) -> set:
        return {p for group in self.members for p in group}

    def flat_indices(self, s: int) -> np.ndarray:
        """Row-major indices of shell ``s`` in the flattened window."""
        n = 2 * self.cutoff + 1
        pts = np.array(self.members[s]).reshape(-1, 2)
        return (pts[:, 0] + self.cutoff) * n + (pts[:, 1] + self.cutoff)


@functools.lru_cache(maxsize=None)
def lattice_shells(cutoff: int) -> LatticeShells:
    if cutoff < 1:
        raise ValidationError("K: cutoff must be positive")
    groups: Dict[int, list] = {}
    for k1 in range(-cutoff, cutoff + 1):
        for k2 in range(-cutoff, cutoff + 1):
            groups.setdefault(k1 * k1 + k2 * k2, []).append((k1, k2))
    norms = tuple(sorted(groups))
    return LatticeShells(cutoff, norms, tuple(tuple(groups[q]) for q in norms))


def _angle(k1, k2):
    """``Phi(k)`` in ``[0, 2 pi)`` with ``Phi(0) = 0``."""
    phi = np.arctan2(k2, k1)
    return np.where(phi < 0, phi + 2 * math.pi, phi)


# ---------------------------------------------------------------- weights


def _radial_factor(spec: BasisSpec, norm_sq: np.ndarray, probe=None) -> np.ndarray:
    """Shell scalar ``R[n-1, m+M, s]`` with ``c(k) = R(|k|) exp(-i m Phi(k))``.

    ``probe`` maps a shell index to a representative ``k`` for error messages.
    """
    cond = spec.condition
    M, N, a = spec.max_angular, spec.max_radial, spec.radius
    tau = np.sqrt(np.asarray(norm_sq, dtype=float))
    x = math.pi * tau
    z = spec.zeros()  # [n-1, |m|]
    gap = np.abs(np.multiply.outer(z * z, np.ones_like(x)) - x * x)  # [n, |m|, s]
    # the constant mode (derivative condition, n = 1, m = 0) has z = 0 and a finite limit at k = 0
    benign = np.zeros_like(gap, dtype=bool)
    if cond is BoundaryCondition.DERIVATIVE:
        benign[0, 0] = tau == 0
    bad = (gap < RESONANCE_TOL) & ~benign
    if bad.any():
        n0, m0, s0 = (int(v[0]) for v in np.nonzero(bad))
        k = probe(s0) if probe is not None else (float(tau[s0]), 0.0)
        raise NearSingularWeightError(n0 + 1, m0, k, float(gap[n0, m0, s0]))

    sign_n = np.where(np.arange(1, N + 1) % 2 == 0, 1.0, -1.0)[:, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        if cond is BoundaryCondition.ZERO_VALUE:
            j = bessel_j_table(M, x)  # [|m|, s]
            rho = z[:, :, None] / a
            core = rho * j[None] / (x * x - (z * z)[:, :, None])
        else:
            jp = bessel_jp_table(M, x)
            mm = np.arange(M + 1, dtype=float)
            root = np.sqrt(np.maximum(z * z - mm * mm, 0.0))
            scale = np.where(mm == 0, 1.0 / a, z / a / np.where(root > 0, root, 1.0))
            core = scale[:, :, None] * tau * jp[None] / ((z * z)[:, :, None] - x * x)
            core[0, 0] = np.where(tau == 0, 1.0 / (2 * math.pi * a), core[0, 0])
    core = WEIGHT_CONSTANTS[cond] * sign_n * core  # [n, |m|, s]
    orders = spec.orders
    out = core[:, np.abs(orders), :] * _i_power(orders)[None, :, None]
    return out


@functools.lru_cache(maxsize=8)
def _window_weights(spec: BasisSpec, cutoff: int) -> np.ndarray:
    """Weight tensor ``w[n-1, m+M, flat k]`` over the row-major window."""
    ks = np.arange(-cutoff, cutoff + 1)
    k1, k2 = np.meshgrid(ks, ks, indexing="ij")
    q = (k1 * k1 + k2 * k2).ravel()
    norms, inverse = np.unique(q, return_inverse=True)
    k1f, k2f = k1.ravel(), k2.ravel()

    def probe(s):
        i = int(np.flatnonzero(inverse == s)[0])
        return (int(k1f[i]), int(k2f[i]))

    radial = _radial_factor(spec, norms, probe)[:, :, inverse]
    phi = _angle(k1f.astype(float), k2f.astype(float))
    phase = np.exp(-1j * np.multiply.outer(spec.orders, phi))
    w = radial * phase[None]
    w.setflags(write=False)
    return w


def spectral_weight(k, n: int, m: int, spec: BasisSpec) -> complex:
    """Closed-form lattice weight ``c(k; n, m)``."""
    spec.check_index(m, n)
    k1, k2 = (int(v) for v in k)
    radial = _radial_factor(spec, np.array([k1 * k1 + k2 * k2]), lambda s: (k1, k2))
    phi = float(_angle(float(k1), float(k2)))
    return complex(radial[n - 1, m + spec.max_angular, 0] * np.exp(-1j * m * phi))


def weight_tensor(spec: BasisSpec, cutoff: int | None = None) -> np.ndarray:
    """All weights, shaped ``(N, 2M+1, 2K+1, 2K+1)`` and indexed ``[n-1, m+M, k1+K, k2+K]``."""
    K = spec.lattice_cutoff if cutoff is None else int(cutoff)
    return _window_weights(spec, K).reshape(spec.max_radial, 2 * spec.max_angular + 1,
                                            2 * K + 1, 2 * K + 1)


# ---------------------------------------------------------------- analysis


def _check_table(table: FourierTable, spec: BasisSpec) -> None:
    if table.cutoff < MIN_CUTOFF:
        raise ValidationError(f"K: table cutoff {table.cutoff} is below the minimum {MIN_CUTOFF}")
    if not math.isclose(table.radius, spec.radius, rel_tol=1e-12):
        raise ValidationError(f"a: table window radius {table.radius} differs from basis radius {spec.radius}")


def lattice_sum(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``sum_k w[..., k] v[k]`` in row-major order with extended-precision accumulation."""
    prod = weights.astype(np.clongdouble) * values.astype(np.clongdouble)
    return prod.sum(axis=-1).astype(complex)


def analyze_spectral(table: FourierTable, spec: BasisSpec) -> CoefficientMatrix:
    """Truncated lattice sum ``C_nm = sum_{|k|_inf <= K} c(k; n, m) xi^{k}``."""
    _check_table(table, spec)
    w = _window_weights(spec, table.cutoff)
    return CoefficientMatrix(spec, lattice_sum(w, table.entries.ravel()))


def analyze_polar(table: FourierTable, shells: LatticeShells, spec: BasisSpec) -> CoefficientMatrix:
    """Same sum regrouped by lattice shells.

    The radial scalar is evaluated once per shell and multiplied into the
    per-shell phase sum ``sum_alpha exp(-i m alpha) xi^{tau u_alpha}``.
    """
    _check_table(table, spec)
    if shells.cutoff != table.cutoff:
        raise ValidationError(f"K: shells cutoff {shells.cutoff} differs from table cutoff {table.cutoff}")
    radial = _radial_factor(spec, np.array(shells.norms), lambda s: shells.members[s][0])
    values = table.entries.ravel()
    orders = spec.orders
    phase_sums = np.empty((orders.size, len(shells.norms)), dtype=complex)
    for s in range(len(shells.norms)):
        idx = shells.flat_indices(s)
        pts = np.array(shells.members[s], dtype=float).reshape(-1, 2)
        phase = np.exp(-1j * np.multiply.outer(orders, _angle(pts[:, 0], pts[:, 1])))
        phase_sums[:, s] = lattice_sum(phase, values[idx])
    return CoefficientMatrix(spec, lattice_sum(radial, phase_sums[None]))


def _polar_grid(spec: BasisSpec, n_radial: int, n_angular: int):
    x, w = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * spec.radius * (x + 1.0)
    w = 0.5 * spec.radius * w
    theta = 2 * math.pi * np.arange(n_angular) / n_angular
    return r, w, theta


def angular_moments(values: np.ndarray, orders: np.ndarray) -> np.ndarray:
    """``integral_0^{2 pi} f(theta) e^{-i m theta} dtheta`` by the trapezoid rule.

    ``values[..., j]`` holds samples at ``theta_j = 2 pi j / L``.
    """
    L = values.shape[-1]
    F = np.fft.fft(values, axis=-1) * (2 * math.pi / L)
    return F[..., np.asarray(orders) % L]


def coefficients_from_polar(samples: np.ndarray, r: np.ndarray, w: np.ndarray,
                            spec: BasisSpec) -> CoefficientMatrix:
    """Project polar samples ``samples[ir, itheta]`` onto the basis."""
    orders = spec.orders
    ang = angular_moments(samples, orders)  # [r, m]
    rad = radial_table(spec, r)[:, np.abs(orders), :]  # [n, m, r]
    sign = np.where((orders < 0) & (orders % 2 == 1), -1.0, 1.0)
    rad = rad * sign[None, :, None]
    C = np.einsum("nmr,r,rm->nm", rad, w * r, ang) / math.sqrt(2 * math.pi)
    return CoefficientMatrix(spec, C)


def analyze_direct(xi, spec: BasisSpec, n_radial: int | None = None,
                   n_angular: int | None = None) -> CoefficientMatrix:
    """Quadrature oracle for ``C_nm = integral xi conj(Psi_nm) r dr dtheta``.

    Gauss-Legendre in ``r`` times the trapezoid rule in ``theta``.  A
    :class:`DiskFunction` is read through bilinear interpolation of its grid
    samples; a vectorised callable ``xi(x, y)`` is sampled exactly on the
    polar nodes, which removes the grid from the oracle altogether.
    """
    from scipy.interpolate import RegularGridInterpolator

    if isinstance(xi, DiskFunction):
        if not math.isclose(xi.radius, spec.radius, rel_tol=1e-12):
            raise ValidationError(f"a: field radius {xi.radius} differs from basis radius {spec.radius}")
        G = xi.grid_size
    elif callable(xi):
        G = 256
    else:
        raise ValidationError("xi: expected a DiskFunction or a callable")
    n_radial = n_radial or max(64, G // 2)
    n_angular = n_angular or max(128, 2 * G)
    r, w, theta = _polar_grid(spec, n_radial, n_angular)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    x, y = rr * np.cos(tt), rr * np.sin(tt)
    if isinstance(xi, DiskFunction):
        lo, hi = xi.coords[0], xi.coords[-1]
        pts = np.stack([np.clip(y, lo, hi), np.clip(x, lo, hi)], axis=-1)
        interp = RegularGridInterpolator((xi.coords, xi.coords), xi.values, method="linear")
        samples = interp(pts)
    else:
        samples = np.broadcast_to(np.asarray(xi(x, y), dtype=complex), x.shape)
        if not np.all(np.isfinite(samples)):
            raise ValidationError("xi: non-finite samples on the polar grid")
    return coefficients_from_polar(samples, r, w, spec)


def synthesize(C: CoefficientMatrix, r, theta):
    """Truncated expansion ``sum_{n,m} C_nm Psi_nm(r, theta)``; broadcasts ``r`` and ``theta``."""
    spec = C.spec
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    orders = spec.orders
    rad = radial_table(spec, r)[:, np.abs(orders)]  # [n, m, ...]
    sign = np.where((orders < 0) & (orders % 2 == 1), -1.0, 1.0)
    # sum over n first, then the angular series
    per_m = np.einsum("nm,nm...->m...", C.entries * sign, rad)
    phase = np.exp(1j * np.multiply.outer(orders, theta))
    out = (per_m * phase).sum(axis=0) / math.sqrt(2 * math.pi)
    return complex(out) if out.ndim == 0 else out


def synthesize_grid(C: CoefficientMatrix, coords: np.ndarray, support: float | None = None) -> DiskFunction:
    """Evaluate the expansion on a square grid, zero outside ``support`` (default ``a``)."""
    a = C.spec.radius
    b = a if support is None else support
    x, y = np.meshgrid(coords, coords)
    rad = np.hypot(x, y)
    inside = rad <= b
    vals = np.zeros(x.shape, dtype=complex)
    vals[inside] = synthesize(C, np.minimum(rad[inside], a), np.arctan2(y[inside], x[inside]))
    return DiskFunction(a, coords, vals, b)


def parseval_partial_sums(C: CoefficientMatrix) -> np.ndarray:
    """``sum_{n <= N'} sum_m |C_nm|^2`` for ``N' = 1..N``."""
    return np.cumsum((C.magnitude ** 2).sum(axis=1))


# ---------------------------------------------------------------- calibration

PROBE_RADIAL = (1, 2, 3, 4, 5)
PROBE_ANGULAR = (-2, -1, 0, 1, 2)
PROBE_LATTICE = ((1, 0), (0, 1), (1, 1), (2, 1), (-1, 2), (3, -2), (-2, -3), (4, 1), (0, -3))
CALIBRATION_TOL = 1e-6


@dataclass(frozen=True)
class CalibrationResult:
    condition: BoundaryCondition
    fitted: complex
    frozen: float
    max_residual: float
    oracle: np.ndarray = field(repr=False)
    shape: np.ndarray = field(repr=False)

    @property
    def ok(self) -> bool:
        return (self.max_residual <= CALIBRATION_TOL
                and abs(self.fitted - self.frozen) <= CALIBRATION_TOL * abs(self.frozen))


def oracle_weight(n: int, m: int, ks, spec: BasisSpec, n_angular: int = 128) -> np.ndarray:
    """``W_nm(k) / (4 a^2)`` by adaptive radial quadrature and an angular trapezoid rule.

    Independent of the closed form: uses scipy's Bessel functions and zeros
    only through the basis radial profile.
    """
    from scipy.integrate import quad_vec
    from scipy.special import jv

    a = spec.radius
    rho = spec.eigenvalue(m, n)
    norm = NormalizationTable.build(spec)(m, n)
    ks = np.asarray(ks, dtype=float).reshape(-1, 2)
    theta = 2 * math.pi * np.arange(n_angular) / n_angular
    proj = np.cos(theta)[None, :] * ks[:, :1] + np.sin(theta)[None, :] * ks[:, 1:]
    ang = np.exp(-1j * m * theta)[None, :] / math.sqrt(2 * math.pi)

    def integrand(s):
        radial = jv(m, rho * s) / math.sqrt(norm)
        vals = (np.exp(1j * math.pi * s * proj / a) * ang).sum(axis=1) * (2 * math.pi / n_angular)
        vals = vals * radial * s
        return np.concatenate([vals.real, vals.imag])

    res, _ = quad_vec(integrand, 0.0, a, epsabs=1e-13, epsrel=1e-12, limit=400)
    half = res.size // 2
    return (res[:half] + 1j * res[half:]) / (4 * a * a)


def calibrate(condition, radius: float = 1.0) -> CalibrationResult:
    """Fit the weight constant over the 5 x 5 x 9 probe set.

    The residual is the largest probe misfit relative to the largest oracle
    magnitude.
    """
    condition = BoundaryCondition.parse(condition)
    spec = BasisSpec(radius, condition, max(map(abs, PROBE_ANGULAR)), max(PROBE_RADIAL), 8)
    frozen = WEIGHT_CONSTANTS[condition]
    oracle, shape = [], []
    for n in PROBE_RADIAL:
        for m in PROBE_ANGULAR:
            oracle.append(oracle_weight(n, m, PROBE_LATTICE, spec))
            shape.append([spectral_weight(k, n, m, spec) / frozen for k in PROBE_LATTICE])
    oracle = np.array(oracle).ravel()
    shape = np.array(shape).ravel()
    fitted = complex(np.vdot(shape, oracle) / np.vdot(shape, shape))
    resid = float(np.abs(oracle - fitted * shape).max() / np.abs(oracle).max())
    return CalibrationResult(condition, fitted, frozen, resid, oracle, shape)


def check_calibration(result: CalibrationResult) -> None:
    if not result.ok:
        raise ConsistencyError(
            f"weight constant for {result.condition.value} drifted: fitted {result.fitted}, "
            f"frozen {result.frozen}, residual {result.max_residual:.3e}"
        )
