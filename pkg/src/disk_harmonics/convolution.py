"""Zero-padded convolution of disk-supported functions.

Two functions supported in the disk of radius ``b`` are extended by zero and
convolved; the result is supported in radius ``a = 2b`` and is expanded in
the radius-``a`` basis.  The spectral path never forms the convolution:

    C_nm[f1 * f2] = sum_k c(k; n, m) f1^[k/a; b] f2^[k/a; b].
"""

from __future__ import annotations

import hashlib
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from .basis import BasisSpec, NormalizationTable, lommel_integral, normalization
from .bessel import BoundaryCondition, bessel_j_table, bessel_jp_table, eval_j, eval_j_prime
from .errors import ShapeError, SupportError, ValidationError
from .sampling import DiskFunction, FourierTable, pointwise_product, windowed_table
from .spectra import (
    CoefficientMatrix,
    LatticeShells,
    _window_weights,
    analyze_direct,
    analyze_polar,
    lattice_sum,
)

SUPPORT_TOL = 1e-12
IMAG_TOL = 1e-8
DRUM_SWITCH = 1e-6


@dataclass(frozen=True, eq=False)
class ConvolutionResult:
    """Coefficients of ``f1 * f2`` over the radius-``a`` basis and, for the direct
    path, the spatial field on the node grid of ``[-a, a]^2``."""

    coefficients: CoefficientMatrix
    provenance: str
    spatial: Optional[DiskFunction] = None


def _check_pair(f1: DiskFunction, f2: DiskFunction) -> None:
    if f1.coords.shape != f2.coords.shape or not np.array_equal(f1.coords, f2.coords):
        raise ShapeError("convolution inputs must share one grid")
    if f1.radius != f2.radius:
        raise ShapeError("convolution inputs must share the window radius")


def convolve_grid(f1: DiskFunction, f2: DiskFunction) -> DiskFunction:
    """Riemann-sum convolution ``h^2 sum f1(x_i) f2(x - x_i)`` without wrap-around.

    Inputs live on the cell grid of ``[-b, b]^2``; pairwise sums of cell
    centres land on the node grid ``-2b + j h`` (``j = 0..2G``), which includes
    the origin and the radius-``b`` nodes on the axes.
    """
    _check_pair(f1, f2)
    b = f1.radius
    h = f1.spacing
    G = f1.coords.size
    full = fftconvolve(f1.values, f2.values, mode="full") * (h * h)  # (2G - 1)^2
    values = np.zeros((2 * G + 1, 2 * G + 1), dtype=complex)
    values[1:-1, 1:-1] = full
    if f1.is_real and f2.is_real:
        values = values.real
    a = 2 * b
    coords = h * (np.arange(2 * G + 1) - G)
    x, y = np.meshgrid(coords, coords)
    support = f1.support + f2.support
    outside = np.hypot(x, y) > support * (1 + 1e-12)
    power = np.abs(values) ** 2
    total = power.sum()
    if total > 0 and power[outside].sum() > SUPPORT_TOL * total:
        raise SupportError(f"convolution leaks {power[outside].sum() / total:.3e} of its energy "
                           f"outside radius {support}")
    return DiskFunction(a, coords, values, min(support, a))


def convolve_direct(f1: DiskFunction, f2: DiskFunction, spec: BasisSpec | None = None) -> ConvolutionResult:
    """Spatial oracle: grid convolution, then quadrature analysis on the radius-``2b`` basis."""
    spatial = convolve_grid(f1, f2)
    spec = spec or BasisSpec(radius=spatial.radius)
    if not math.isclose(spec.radius, spatial.radius, rel_tol=1e-12):
        raise ValidationError(f"a: basis radius {spec.radius} must be twice the input window {f1.radius}")
    return ConvolutionResult(analyze_direct(spatial, spec), "direct", spatial)


def lattice_tables(f1: DiskFunction, f2: DiskFunction, spec: BasisSpec):
    """``f^[k/a; b]`` for both inputs at the spec's cutoff."""
    _check_pair(f1, f2)
    K = spec.lattice_cutoff
    return windowed_table(f1, spec.radius, K), windowed_table(f2, spec.radius, K)


def convolve_spectral(t1: FourierTable, t2: FourierTable, spec: BasisSpec) -> CoefficientMatrix:
    """Coefficients of ``f1 * f2`` from the two windowed transform tables."""
    if t1.cutoff != t2.cutoff:
        raise ValidationError(f"K: table cutoffs differ ({t1.cutoff} vs {t2.cutoff})")
    for t in (t1, t2):
        if not math.isclose(t.radius, spec.radius, rel_tol=1e-12):
            raise ValidationError(f"a: table lattice radius {t.radius} differs from basis radius {spec.radius}")
    w = _window_weights(spec, t1.cutoff)
    return CoefficientMatrix(spec, lattice_sum(w, pointwise_product(t1.entries, t2.entries).ravel()))


# ---------------------------------------------------------------- drums


def drum_hat(n: int, m: int, omega, b: float, condition) -> complex | np.ndarray:
    """Windowed transform of the radius-``b`` basis element ``Psi_nm``.

    ``omega`` is a 2-vector or an array whose last axis has length 2.  Uses

        sqrt(2 pi / N) i^{-m} e^{i m Phi(omega)} L(omega),

    where ``L`` keeps only the Lommel boundary term that survives the
    boundary condition.  Within ``1e-6`` of a resonance ``pi |omega| = z / b``
    the confluent Lommel limit is used instead.
    """
    condition = BoundaryCondition.parse(condition)
    spec = BasisSpec(b, condition, abs(int(m)), int(n), 1)
    spec.check_index(m, n)
    omega = np.asarray(omega, dtype=float)
    if omega.shape[-1] != 2 or not np.all(np.isfinite(omega)):
        raise ValidationError("omega: expected finite 2-vectors")
    am = abs(int(m))
    z = spec.zero(m, n)
    alpha = z / b
    w = np.hypot(omega[..., 0], omega[..., 1])
    beta = math.pi * w
    phi = np.arctan2(omega[..., 1], omega[..., 0])
    jt = bessel_j_table(am, beta * b)[am]
    jpt = bessel_jp_table(am, beta * b)[am]
    with np.errstate(divide="ignore", invalid="ignore"):
        if condition is BoundaryCondition.ZERO_VALUE:
            lom = z * jt * eval_j_prime(am, z) / (beta * beta - alpha * alpha)
        else:
            lom = -b * beta * eval_j(am, z) * jpt / (beta * beta - alpha * alpha)
    near = np.abs(alpha - beta) * b < DRUM_SWITCH
    if np.any(near):
        lom = np.array(lom, dtype=float).reshape(-1)
        flat_beta = np.broadcast_to(beta, near.shape).reshape(-1)
        for i in np.flatnonzero(near):
            lom[i] = lommel_integral(am, alpha, float(flat_beta[i]), b)
        lom = lom.reshape(near.shape)
    # J_{-m} = (-1)^m J_m enters twice (basis and Jacobi-Anger), so no sign survives
    phase = (1j) ** (-m % 4) * np.exp(1j * m * phi)
    out = math.sqrt(2 * math.pi / normalization(m, n, spec)) * phase * lom
    return complex(out) if np.ndim(out) == 0 else out


def drum_table(n: int, m: int, b: float, condition, a: float, cutoff: int) -> FourierTable:
    """``Psi_nm^b ^[k/a; b]`` for ``k`` in ``[-K, K]^2``."""
    ks = np.arange(-cutoff, cutoff + 1, dtype=float)
    k1, k2 = np.meshgrid(ks, ks, indexing="ij")
    omega = np.stack([k1, k2], axis=-1) / a
    return FourierTable(cutoff, a, drum_hat(n, m, omega, b, condition))


def sample_drum(n: int, m: int, b: float, condition, grid_size: int) -> DiskFunction:
    """Radius-``b`` basis element on the cell grid of ``[-b, b]^2``."""
    from .basis import eval_basis
    from .sampling import restrict_and_pad

    spec = BasisSpec(b, condition, abs(m), n, 1)

    def f(x, y):
        r = np.minimum(np.hypot(x, y), b)
        return eval_basis(m, n, r, np.arctan2(y, x), spec)

    return restrict_and_pad(f, b, b, grid_size)


def basis_pair_coeffs(n: int, m: int, n2: int, m2: int, spec: BasisSpec) -> CoefficientMatrix:
    """Coefficients of ``Psi_nm^b * Psi_n2m2^b`` (``b = a/2``) in the radius-``a`` basis."""
    b = spec.radius / 2
    K = spec.lattice_cutoff
    t1 = drum_table(n, m, b, spec.condition, spec.radius, K)
    t2 = drum_table(n2, m2, b, spec.condition, spec.radius, K)
    return convolve_spectral(t1, t2, spec)


class KernelCache:
    """Basis-pair kernels on disk, one CSV per key ``(bc, N, M, K, G)``.

    Rows are ``k,l,n,m,n',m',re,im``: output radial/angular index ``(k, l)``
    and input drum indices ``(n, m)``, ``(n', m')``.  Files are written to a
    temporary name and renamed, so readers never see a partial table.
    """

    HEADER = "k,l,n,m,n',m',re,im"

    def __init__(self, directory: str | None = None):
        self.directory = directory or os.environ.get("DISK_HARMONICS_CACHE")

    @staticmethod
    def key(spec: BasisSpec, grid_size: int, order: int) -> str:
        return (f"bc={spec.condition.value},N={spec.max_radial},M={spec.max_angular},"
                f"K={spec.lattice_cutoff},G={grid_size},a={spec.radius:.17g},order={order}")

    def path(self, key: str) -> str | None:
        if not self.directory:
            return None
        digest = hashlib.sha256(key.encode()).hexdigest()[:16]
        return os.path.join(self.directory, f"kernels-{digest}.csv")

    def load(self, key: str):
        path = self.path(key)
        if path is None or not os.path.exists(path):
            return None
        with open(path) as fh:
            first = fh.readline().strip()
            if first != f"# {key}":
                return None
            fh.readline()
            rows = np.loadtxt(fh, delimiter=",", ndmin=2)
        return rows

    def store(self, key: str, rows: np.ndarray) -> None:
        path = self.path(key)
        if path is None:
            return
        os.makedirs(self.directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(f"# {key}\n{self.HEADER}\n")
            for r in rows:
                fh.write(",".join(str(int(v)) for v in r[:6]) + f",{r[6]:.17g},{r[7]:.17g}\n")
        os.replace(tmp, path)


def kernel_rows(spec: BasisSpec, order: int = 2, grid_size: int = 256,
                cache: KernelCache | None = None) -> np.ndarray:
    """All basis-pair kernels with drum indices ``n <= order``, ``|m| <= order``.

    Returns rows ``(k, l, n, m, n', m', re, im)``; served from ``cache`` when
    a table with the same key exists.
    """
    cache = cache or KernelCache()
    key = KernelCache.key(spec, grid_size, order)
    rows = cache.load(key)
    if rows is not None:
        return rows
    out = []
    drums = [(n, m) for n in range(1, order + 1) for m in range(-order, order + 1)]
    for n, m in drums:
        for n2, m2 in drums:
            C = basis_pair_coeffs(n, m, n2, m2, spec)
            for k in range(1, spec.max_radial + 1):
                for l in range(-spec.max_angular, spec.max_angular + 1):
                    v = C.entries[k - 1, l + spec.max_angular]
                    out.append((k, l, n, m, n2, m2, v.real, v.imag))
    rows = np.array(out, dtype=float)
    cache.store(key, rows)
    return rows


# ---------------------------------------------------------------- Plancherel


def autocorrelation_table(f: DiskFunction, a: float, cutoff: int) -> FourierTable:
    """Transform table of ``f * f~`` with ``f~(x) = conj(f(-x))``: ``|f^|^2``."""
    t = windowed_table(f, a, cutoff)
    return t * t.conjugate()


def _plancherel_sum(C: CoefficientMatrix) -> float:
    spec = C.spec
    norm = NormalizationTable.build(spec).values[:, 0]
    col = C.entries[:, spec.max_angular]
    # f * f~ at the origin; only m = 0 harmonics are nonzero there
    total = complex(np.sum(col / np.sqrt(norm)) / math.sqrt(2 * math.pi))
    if abs(total.imag) > IMAG_TOL * max(1.0, abs(total.real)):
        from .errors import ConsistencyError

        raise ConsistencyError(f"Plancherel sum has imaginary residue {total.imag:.3e}; "
                               "input is not an autocorrelation")
    return total.real


def plancherel_norm(C: CoefficientMatrix, spec: BasisSpec | None = None) -> float:
    """``||f||^2`` from the ``m = 0`` coefficients of ``f * f~``."""
    if spec is not None and spec != C.spec:
        raise ShapeError("coefficients were produced by a different spec")
    return _plancherel_sum(C)


def plancherel_polar(table: FourierTable, shells: LatticeShells, spec: BasisSpec) -> float:
    """Polarized form: the autocorrelation coefficients regrouped by lattice shells."""
    return _plancherel_sum(analyze_polar(table, shells, spec))


def rotation_descriptors(C: CoefficientMatrix) -> np.ndarray:
    """``|C_nm|`` flattened with ``n`` outer and ``m`` ascending inner."""
    return np.array(C.magnitude).ravel()
