import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from disk_harmonics import spectra
from disk_harmonics.basis import BasisSpec, eval_basis
from disk_harmonics.bessel import BoundaryCondition
from disk_harmonics.errors import NearSingularWeightError, ShapeError, ValidationError
from disk_harmonics.sampling import restrict_and_pad, square_fourier_coeff
from disk_harmonics.spectra import (
    WEIGHT_CONSTANTS,
    CoefficientMatrix,
    analyze_direct,
    analyze_polar,
    analyze_spectral,
    calibrate,
    lattice_shells,
    oracle_weight,
    parseval_partial_sums,
    rotate_coefficients,
    spectral_weight,
    synthesize,
    weight_tensor,
)

from conftest import gaussian, smooth_family

ZBC = BoundaryCondition.ZERO_VALUE
DBC = BoundaryCondition.DERIVATIVE

# fitted against the quadrature oracle; see calibrate()
FROZEN = {ZBC: 0.88622692545275794, DBC: -2.7841639984158535}


def basis_field(spec, terms, G=256):
    def f(x, y):
        r = np.minimum(np.hypot(x, y), spec.radius)
        t = np.arctan2(y, x)
        return sum(c * eval_basis(m, n, r, t, spec) for (n, m), c in terms.items())
    return restrict_and_pad(f, spec.radius, spec.radius, G)


def test_frozen_constants_regression():
    for cond, value in FROZEN.items():
        assert WEIGHT_CONSTANTS[cond] == value
        res = calibrate(cond)
        assert res.ok
        assert res.max_residual <= 1e-6
        assert abs(res.fitted - value) <= 1e-9


def test_calibration_independent_of_radius():
    res = calibrate("zero", radius=2.5)
    assert res.ok


def test_weight_at_origin():
    for cond in BoundaryCondition:
        spec = BasisSpec(1.0, cond, 3, 4)
        for m in (-3, -1, 1, 2):
            assert spectral_weight((0, 0), 1, m, spec) == 0
    spec = BasisSpec(1.3, ZBC, 2, 4)
    for n in range(1, 5):
        z = spec.zero(0, n)
        expect = FROZEN[ZBC] * (-1) ** (n + 1) * (z / 1.3) / z ** 2
        assert spectral_weight((0, 0), n, 0, spec) == pytest.approx(expect, rel=1e-14)
        oracle = oracle_weight(n, 0, [(0, 0)], spec)[0]
        assert spectral_weight((0, 0), n, 0, spec) == pytest.approx(oracle, rel=1e-9)


def test_dbc_constant_mode_weight():
    spec = BasisSpec(0.7, DBC, 2, 3)
    # the constant mode weight at k = 0 is integral Psi_10 / (4 a^2)
    assert spectral_weight((0, 0), 1, 0, spec) == pytest.approx(math.sqrt(math.pi) / (4 * 0.7), rel=1e-14)
    assert spectral_weight((0, 0), 2, 0, spec) == 0


def test_weight_symmetries():
    for cond in BoundaryCondition:
        spec = BasisSpec(1.0, cond, 4, 4)
        for k in [(1, 2), (3, -1), (0, 5), (-4, -4)]:
            mk = (-k[0], -k[1])
            for n in (1, 3):
                for m in range(-4, 5):
                    w = spectral_weight(k, n, m, spec)
                    assert spectral_weight(mk, n, m, spec) == pytest.approx((-1) ** m * w, abs=1e-15)
                    assert spectral_weight(k, n, -m, spec) == pytest.approx(np.conj(w), abs=1e-15)


def test_weights_against_oracle_off_probe_set():
    for cond in BoundaryCondition:
        spec = BasisSpec(0.8, cond, 5, 6)
        ks = [(5, 2), (-7, 3), (0, 9)]
        for n, m in [(6, 5), (4, -3), (1, 0)]:
            oracle = oracle_weight(n, m, ks, spec)
            closed = [spectral_weight(k, n, m, spec) for k in ks]
            np.testing.assert_allclose(closed, oracle, atol=1e-11)


def test_weight_tensor_layout():
    spec = BasisSpec(1.0, ZBC, 2, 2, 3)
    w = weight_tensor(spec)
    assert w.shape == (2, 5, 7, 7)
    assert w[1, 0, 3 + 2, 3 - 1] == spectral_weight((2, -1), 2, -2, spec)


def test_near_singular_guard(monkeypatch):
    spec = BasisSpec(1.0, ZBC, 1, 2, 8)
    fake = np.array(spec.zeros(), dtype=float)
    fake[1, 1] = math.pi * math.sqrt(2)  # resonates with |k| = sqrt(2)
    monkeypatch.setattr(BasisSpec, "zeros", lambda self: fake)
    with pytest.raises(NearSingularWeightError) as info:
        spectral_weight((1, 1), 2, 1, spec)
    assert info.value.n == 2 and info.value.m == 1 and info.value.k == (1, 1)
    assert "(n=2, m=1, k=(1, 1))" in str(info.value)
    table = square_fourier_coeff(restrict_and_pad(gaussian(0, 0, 0.1), 1, 1, 64), 8)
    with pytest.raises(NearSingularWeightError) as info:
        analyze_spectral(table, spec)
    assert abs(info.value.k[0]) == 1 and abs(info.value.k[1]) == 1


def test_analyze_direct_single_basis_element():
    spec = BasisSpec(1.0, ZBC, 8, 8)
    C = analyze_direct(basis_field(spec, {(1, 0): 1.0}), spec)
    assert abs(C[1, 0] - 1) <= 2e-3
    others = np.abs(C.entries).ravel()
    others = np.delete(others, 8)
    assert others.max() <= 2e-3


def test_analyze_direct_zero_and_pair():
    spec = BasisSpec(1.0, ZBC, 8, 8)
    zero = restrict_and_pad(lambda x, y: np.zeros_like(x), 1, 1, 64)
    assert not np.any(analyze_direct(zero, spec).entries)
    C = analyze_direct(basis_field(spec, {(2, 1): 1.0, (1, -1): 1.0}), spec)
    assert abs(C[2, 1] - 1) <= 2e-3 and abs(C[1, -1] - 1) <= 2e-3
    e = np.abs(C.entries).copy()
    e[1, 9] = e[0, 7] = 0
    assert e.max() <= 2e-3


def test_analyze_direct_validates_radius():
    with pytest.raises(ValidationError):
        analyze_direct(restrict_and_pad(gaussian(0, 0, 0.1), 2.0, 1.0, 32), BasisSpec(1.0))


def test_analyze_spectral_basis_element():
    spec = BasisSpec(1.0, ZBC, 8, 8)
    xi = basis_field(spec, {(1, 0): 1.0})
    C = analyze_spectral(square_fourier_coeff(xi, 32), spec)
    assert abs(C[1, 0] - 1) <= 1e-2


def test_spectral_real_symmetry():
    for cond in BoundaryCondition:
        spec = BasisSpec(1.0, cond, 8, 8)
        xi = restrict_and_pad(smooth_family(3, 1)[0], 1, 1, 128)
        C = analyze_spectral(square_fourier_coeff(xi, 32), spec).entries
        sign = (-1.0) ** np.abs(spec.orders)
        np.testing.assert_allclose(C[:, ::-1], sign * np.conj(C), atol=1e-10)


def test_spectral_converges_in_k():
    for cond in BoundaryCondition:
        spec = BasisSpec(1.0, cond, 6, 6)
        f = gaussian(0.1, -0.2, 0.09)
        xi = restrict_and_pad(f, 1, 1, 256)
        exact = analyze_direct(f, spec)
        errs = [analyze_spectral(square_fourier_coeff(xi, K), spec).max_abs_diff(exact) for K in (8, 16, 32)]
        assert errs[0] > errs[1] > errs[2]


def test_cutoff_validation():
    xi = restrict_and_pad(gaussian(0, 0, 0.1), 1, 1, 64)
    with pytest.raises(ValidationError):
        analyze_spectral(square_fourier_coeff(xi, 4), BasisSpec())
    with pytest.raises(ValidationError):
        analyze_polar(square_fourier_coeff(xi, 10), lattice_shells(12), BasisSpec())


def test_lattice_shell_examples():
    s = lattice_shells(1)
    assert s.norms == (0, 1, 2)
    assert set(s.shell(1)) == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    np.testing.assert_allclose(sorted(s.angles(1)), [0, math.pi / 2, math.pi, 3 * math.pi / 2])
    s5 = lattice_shells(5).shell(25)
    brute = {(i, j) for i in range(-5, 6) for j in range(-5, 6) if i * i + j * j == 25}
    assert len(s5) == 12 and set(s5) == brute


@given(st.integers(1, 20))
def test_shells_partition_window(K):
    s = lattice_shells(K)
    window = {(i, j) for i in range(-K, K + 1) for j in range(-K, K + 1)}
    assert s.points() == window
    assert sum(len(g) for g in s.members) == len(window)
    assert list(s.norms) == sorted(set(s.norms))
    assert s.radii.max() <= K * math.sqrt(2)


def test_polar_equals_spectral():
    for cond in BoundaryCondition:
        spec = BasisSpec(1.0, cond, 8, 8)
        xi = restrict_and_pad(smooth_family(9, 1)[0], 1, 1, 128)
        t = square_fourier_coeff(xi, 32)
        assert analyze_polar(t, lattice_shells(32), spec).max_abs_diff(analyze_spectral(t, spec)) <= 1e-12


def test_polar_radial_symmetry():
    spec = BasisSpec(1.0, ZBC, 6, 6)
    xi = restrict_and_pad(gaussian(0, 0, 0.15), 1, 1, 256)
    C = analyze_polar(square_fourier_coeff(xi, 32), lattice_shells(32), spec)
    off = np.abs(C.entries[:, np.arange(13) != 6])
    assert off.max() <= 1e-3
    assert np.isfinite(spectra._radial_factor(spec, np.array([0]))[:, 6, 0]).all()


def test_synthesize_examples():
    spec = BasisSpec(1.0, ZBC, 4, 4)
    r = np.linspace(0, 1, 11)
    t = np.linspace(0, 6, 11)
    np.testing.assert_allclose(synthesize(CoefficientMatrix.unit(spec, 1, 0), r, t), eval_basis(0, 1, r, t, spec),
                               atol=1e-15)
    np.testing.assert_allclose(synthesize(CoefficientMatrix.unit(spec, 3, -2), r, t),
                               eval_basis(-2, 3, r, t, spec), atol=1e-15)
    assert not np.any(synthesize(CoefficientMatrix.zeros(spec), r, t))
    with pytest.raises(ValidationError):
        synthesize(CoefficientMatrix.zeros(spec), 1.5, 0.0)


def test_round_trip_smooth_bump():
    spec = BasisSpec(1.0, ZBC, 8, 8)
    f = gaussian(0.1, 0.05, 0.25)
    C = analyze_direct(restrict_and_pad(f, 1, 1, 256), spec)
    r = np.linspace(0, 0.9, 30)
    t = np.linspace(0, 2 * math.pi, 40)
    rr, tt = np.meshgrid(r, t)
    err = np.abs(synthesize(C, rr, tt) - f(rr * np.cos(tt), rr * np.sin(tt)))
    assert err.max() <= 5e-2


def test_rotation_examples():
    spec = BasisSpec(1.0, ZBC, 5, 5)
    rng = np.random.default_rng(4)
    C = CoefficientMatrix(spec, rng.normal(size=(5, 11)) + 1j * rng.normal(size=(5, 11)))
    assert np.array_equal(rotate_coefficients(C, 0.0).entries, C.entries)
    assert rotate_coefficients(C, 2 * math.pi).max_abs_diff(C) <= 1e-12
    r, t = 0.4, 0.9
    for alpha in (0.3, -1.2, 2.5):
        assert synthesize(rotate_coefficients(C, alpha), r, t) == pytest.approx(synthesize(C, r, t - alpha),
                                                                               abs=1e-12)


@given(st.floats(-100, 100), st.floats(-100, 100))
def test_rotation_magnitudes_exact(alpha, beta):
    spec = BasisSpec(1.0, DBC, 3, 3)
    C = CoefficientMatrix(spec, np.arange(21).reshape(3, 7) * (1 - 2j))
    R = rotate_coefficients(rotate_coefficients(C, alpha), beta)
    assert np.array_equal(R.magnitude, C.magnitude)
    np.testing.assert_allclose(np.abs(R.entries), C.magnitude, rtol=1e-14)


def test_parseval_partial_sums():
    spec = BasisSpec(1.0, ZBC, 8, 8)
    f = gaussian(0.2, -0.1, 0.2)
    xi = restrict_and_pad(f, 1, 1, 256)
    sums = parseval_partial_sums(analyze_direct(xi, spec))
    assert np.all(np.diff(sums) >= 0)
    assert sums[-1] <= xi.l2_norm() ** 2 + 5e-2


def test_coefficient_csv_round_trip():
    spec = BasisSpec(0.75, DBC, 2, 3, 16)
    rng = np.random.default_rng(7)
    C = CoefficientMatrix(spec, rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5)))
    text = C.to_csv(128)
    lines = text.splitlines()
    assert lines[0] == "# M=2,N=3,K=16,G=128,bc=derivative,a=0.75"
    assert lines[1] == "bc,a,n,m,re,im"
    back = CoefficientMatrix.from_csv(text)
    assert back.spec == spec
    assert np.array_equal(back.entries, C.entries)
    with pytest.raises(ValidationError):
        CoefficientMatrix.from_csv("bc,a,n,m,re,im\n")


def test_coefficient_shape_guard():
    with pytest.raises(ShapeError):
        CoefficientMatrix(BasisSpec(1.0, ZBC, 2, 2), np.zeros((2, 4)))
    with pytest.raises(ValidationError):
        CoefficientMatrix.zeros(BasisSpec(1.0, ZBC, 2, 2))[3, 0]
