"""Bessel functions of the first kind, their derivatives and their zeros.

Evaluation is self-contained (no special-function library): the ascending
power series is used for ``x <= 3`` and Miller's backward recurrence,
normalised by ``J_0 + 2 * sum J_2k = 1``, above that.  Both paths are
vectorised over ``x`` and return every order ``0..mmax`` at once, which is
what the lattice sums need.

Zeros are located by scanning for sign changes on a ``1e-3`` grid and then
refined with Brent's method.
"""

from __future__ import annotations

import csv
import enum
import functools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import RootScanError, UnsupportedOrderError, ValidationError

MAX_ORDER = 128
SERIES_LIMIT = 3.0
SCAN_STEP = 1e-3
SCAN_START = 1e-9
ROOT_TOL = 1e-12

_SERIES_TERMS = 22  # (x/2)^2k / (k!)^2 < 1e-25 by k = 22 for x <= 3
_RESCALE_EVERY = 8
_RESCALE = 1e250


class BoundaryCondition(enum.Enum):
    """Which Sturm-Liouville condition selects the radial eigenvalues."""

    ZERO_VALUE = "zero"  # J_m(z) = 0
    DERIVATIVE = "derivative"  # J_m'(z) = 0

    @classmethod
    def parse(cls, text: "str | BoundaryCondition") -> "BoundaryCondition":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        aliases = {
            "zero": cls.ZERO_VALUE, "zbc": cls.ZERO_VALUE, "zero_value": cls.ZERO_VALUE,
            "derivative": cls.DERIVATIVE, "dbc": cls.DERIVATIVE, "neumann": cls.DERIVATIVE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValidationError(f"bc: unknown boundary condition {text!r}") from None


def _check_order(m: int) -> int:
    m = int(m)
    if abs(m) > MAX_ORDER:
        raise UnsupportedOrderError(f"order {m} exceeds the supported maximum {MAX_ORDER}")
    return m


def _series(x: np.ndarray, mmax: int) -> np.ndarray:
    out = np.zeros((mmax + 1, x.size))
    pos = x > 0
    out[0, ~pos] = 1.0
    xp = x[pos]
    if xp.size == 0:
        return out
    half = 0.5 * xp
    q = half * half
    with np.errstate(divide="ignore"):
        log_half = np.log(half)  # -inf when x is subnormal
    for m in range(mmax + 1):
        term = np.ones_like(xp) if m == 0 else np.exp(m * log_half - math.lgamma(m + 1))
        total = term.copy()
        for k in range(1, _SERIES_TERMS):
            term = term * (-q / (k * (k + m)))
            total += term
        out[m, pos] = total
    return out


def _miller(x: np.ndarray, mmax: int) -> np.ndarray:
    top = np.maximum(float(mmax), x)
    start = 2 * ((top + 30.0 + 2.0 * np.sqrt(40.0 * top)).astype(int) // 2) + 2
    seeds = {int(n): start == n for n in np.unique(start)}
    out = np.zeros((mmax + 1, x.size))
    j_up = np.zeros(x.size)
    j_cur = np.zeros(x.size)
    norm = np.zeros(x.size)
    inv_x = 2.0 / x
    for n in range(int(start.max()), 0, -1):
        seed = seeds.get(n)
        if seed is not None:
            j_up[seed] = 0.0
            j_cur[seed] = 1.0
            norm[seed] += 2.0  # start orders are even
        j_dn = n * inv_x * j_cur - j_up
        j_up, j_cur = j_cur, j_dn
        order = n - 1
        if order <= mmax:
            out[order] = j_cur
        if order == 0:
            norm += j_cur
        elif order % 2 == 0:
            norm += 2.0 * j_cur
        # growth per step is below 2n/x < 1e3, so checking every few steps stays far from overflow
        if n % _RESCALE_EVERY == 0:
            big = np.abs(j_cur) > _RESCALE
            if big.any():
                j_up[big] /= _RESCALE
                j_cur[big] /= _RESCALE
                norm[big] /= _RESCALE
                out[:, big] /= _RESCALE
    return out / norm


def bessel_j_table(mmax: int, x) -> np.ndarray:
    """Return ``J_0 .. J_mmax`` at ``x``; shape ``(mmax + 1,) + shape(x)``."""
    mmax = _check_order(mmax)
    if mmax < 0:
        raise ValidationError("mmax must be non-negative")
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if not np.all(np.isfinite(flat)):
        raise ValidationError("Bessel argument must be finite")
    if np.any(flat < 0):
        raise ValidationError("Bessel argument must be non-negative")
    out = np.empty((mmax + 1, flat.size))
    small = flat <= SERIES_LIMIT
    if small.any():
        out[:, small] = _series(flat[small], mmax)
    if (~small).any():
        out[:, ~small] = _miller(flat[~small], mmax)
    return out.reshape((mmax + 1,) + x.shape)


def bessel_jp_table(mmax: int, x) -> np.ndarray:
    """Derivatives ``J_0' .. J_mmax'`` at ``x`` via the three-term identity."""
    j = bessel_j_table(mmax + 1, x)
    d = np.empty_like(j[:-1])
    d[0] = -j[1]
    if mmax >= 1:
        d[1:] = 0.5 * (j[:-2] - j[2:])[: mmax]
    return d


def _signed(m: int, values):
    return -values if (m < 0 and m % 2) else values


def eval_j(m: int, x):
    """``J_m(x)`` for integer ``m`` (negative allowed) and ``x >= 0``."""
    m = _check_order(m)
    vals = bessel_j_table(abs(m), x)[abs(m)]
    vals = _signed(m, vals)
    return float(vals) if np.ndim(vals) == 0 else vals


def eval_j_prime(m: int, x):
    """``J_m'(x)``, computed as ``(J_{m-1} - J_{m+1}) / 2`` (``-J_1`` for m = 0)."""
    m = _check_order(m)
    vals = bessel_jp_table(abs(m), x)[abs(m)]
    vals = _signed(m, vals)
    return float(vals) if np.ndim(vals) == 0 else vals


@dataclass(frozen=True)
class ZeroTable:
    """First zeros of ``J_m`` or ``J_m'`` in ascending order."""

    order: int
    condition: BoundaryCondition
    zeros: tuple
    tol: float = ROOT_TOL

    def __len__(self):
        return len(self.zeros)

    def __getitem__(self, n):
        return self.zeros[n]

    def as_array(self) -> np.ndarray:
        return np.array(self.zeros)


def _target(m: int, condition: BoundaryCondition):
    if condition is BoundaryCondition.ZERO_VALUE:
        return lambda x: bessel_j_table(m, x)[m]
    return lambda x: bessel_jp_table(m, x)[m]


@functools.lru_cache(maxsize=None)
def _positive_zeros(m: int, count: int, condition: BoundaryCondition) -> tuple:
    f = _target(m, condition)
    # McMahon: z_{m,n} ~ (n + m/2 - 1/4) pi; the limit leaves a couple of spacings spare.
    limit = (count + 0.5 * m + 2.0) * math.pi + m + 10.0
    found = []
    lo = SCAN_START
    window = 2.0 * math.pi
    while len(found) < count:
        if lo >= limit:
            raise RootScanError(
                f"root scan for m={m}, {condition.value} found {len(found)} of {count} "
                f"roots below x={limit:.3f}"
            )
        hi = min(lo + window, limit)
        xs = lo + SCAN_STEP * np.arange(int(math.ceil((hi - lo) / SCAN_STEP)) + 1)
        vs = f(xs)
        hits = np.flatnonzero((vs[:-1] == 0.0) | (vs[:-1] * vs[1:] < 0.0))
        for i in hits:
            if vs[i] == 0.0:
                root = float(xs[i])
            else:
                root = brentq(lambda t: float(f(t)), xs[i], xs[i + 1],
                              xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            found.append(float(root))
            if len(found) == count:
                break
        lo = float(xs[-1])
    return tuple(found)


def find_zeros(m: int, count: int, condition: "BoundaryCondition | str") -> ZeroTable:
    """First ``count`` admissible zeros for order ``m``.

    For the derivative condition with ``m = 0`` the constant mode ``z = 0``
    is counted as the first zero; for ``m != 0`` the origin is never a zero.
    ``J_{-m}`` differs from ``J_m`` by a sign, so ``m`` and ``-m`` share zeros.
    """
    m = _check_order(m)
    condition = BoundaryCondition.parse(condition)
    count = int(count)
    if count < 1:
        raise ValidationError("count must be a positive integer")
    am = abs(m)
    if condition is BoundaryCondition.DERIVATIVE and am == 0:
        zeros = (0.0,) + _positive_zeros(0, count - 1, condition) if count > 1 else (0.0,)
    else:
        zeros = _positive_zeros(am, count, condition)
    return ZeroTable(order=m, condition=condition, zeros=zeros)


def write_zero_tables(path, tables: Iterable[ZeroTable]) -> None:
    """Write tables as CSV rows ``m,condition,n,z`` (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        fh.write(format_zero_tables(tables))


def format_zero_tables(tables: Iterable[ZeroTable]) -> str:
    lines = ["m,condition,n,z"]
    for t in tables:
        for n, z in enumerate(t.zeros, start=1):
            lines.append(f"{t.order},{t.condition.value},{n},{z:.17g}")
    return "\n".join(lines) + "\n"


def read_zero_tables(path) -> list:
    rows: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                key = (int(row["m"]), BoundaryCondition.parse(row["condition"]))
                rows.setdefault(key, []).append((int(row["n"]), float(row["z"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"zero table {path}: malformed row {row}") from exc
    tables = []
    for (m, cond), entries in rows.items():
        entries.sort()
        tables.append(ZeroTable(order=m, condition=cond, zeros=tuple(z for _, z in entries)))
    return tables


def zeros_matrix(max_order: int, count: int, condition) -> np.ndarray:
    """``z[m, n-1]`` for ``m = 0..max_order``; used by the basis tables."""
    return np.array([find_zeros(m, count, condition).zeros for m in range(max_order + 1)])


def interlaces(lower: Sequence[float], upper: Sequence[float]) -> bool:
    """True when exactly one entry of ``upper`` lies between consecutive ``lower`` entries."""
    upper = np.asarray(upper)
    for a, b in zip(lower[:-1], lower[1:]):
        if np.count_nonzero((upper > a) & (upper < b)) != 1:
            return False
    return True
