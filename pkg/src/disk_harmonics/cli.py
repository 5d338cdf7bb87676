"""Command-line front end.

Every subcommand reads rasters (PGM or CSV) and writes CSV with 17
significant digits, so repeated runs are byte-identical.  Exit status is 0 on
success, 2 for invalid input or configuration and 3 when a numerical guard
trips.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .basis import BasisSpec
from .bessel import BoundaryCondition, find_zeros, format_zero_tables
from . import convolution, spectra
from .convolution import (
    autocorrelation_table,
    convolve_direct,
    convolve_spectral,
    lattice_tables,
    plancherel_norm,
    plancherel_polar,
    rotation_descriptors,
)
from .errors import NumericalGuardError, ValidationError
from .sampling import (
    cell_centers,
    read_raster,
    restrict_and_pad,
    square_fourier_coeff,
    to_raster,
    write_raster,
)
from .spectra import (
    CoefficientMatrix,
    analyze_direct,
    analyze_polar,
    analyze_spectral,
    calibrate,
    lattice_shells,
    synthesize_grid,
)

CACHE_ENV = "DISK_HARMONICS_CACHE"
# --tol NAME=VALUE targets: (module, attribute)
TOLERANCES = {
    "resonance": (spectra, "RESONANCE_TOL"),
    "plancherel-imag": (convolution, "IMAG_TOL"),
}
COMMANDS = ("zeros", "analyze", "synth", "convolve", "plancherel", "descriptors", "calibrate")


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs.

    ``b`` defaults to ``a / 2``; convolution and Plancherel commands require
    exactly that.  Analysis-type commands read rasters that span the whole
    radius-``a`` disk.
    """

    command: str
    bc: str = "zero"
    a: float = 1.0
    b: Optional[float] = None
    M: int = 8
    N: int = 8
    K: int = 32
    G: int = 256
    inputs: Tuple[str, ...] = ()
    output: Optional[str] = None
    method: str = "direct"
    spatial_output: Optional[str] = None
    m: int = 0
    count: int = 10
    tolerances: dict = field(default_factory=dict)

    @property
    def support(self) -> float:
        return self.a / 2 if self.b is None else self.b

    def spec(self) -> BasisSpec:
        return BasisSpec(self.a, self.bc, self.M, self.N, self.K)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"command: unknown command {self.command!r}")
        BoundaryCondition.parse(self.bc)
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValidationError(f"a: must be positive, got {self.a}")
        for name in ("M", "N", "K", "G", "count"):
            value = getattr(self, name)
            if value < (0 if name == "M" else 1):
                raise ValidationError(f"{name}: must be positive, got {value}")
        lattice = ("analyze", "convolve", "plancherel", "descriptors")
        if self.command in lattice and self.K >= self.G / 2:
            raise ValidationError(f"K: cutoff {self.K} must be below G/2 = {self.G / 2}")
        if self.command in ("convolve", "plancherel") and not math.isclose(self.support, self.a / 2):
            raise ValidationError(f"b: must equal a/2 = {self.a / 2} for {self.command}, got {self.b}")
        needed = {"analyze": 1, "synth": 1, "convolve": 2, "plancherel": 1, "descriptors": 1}
        if len(self.inputs) != needed.get(self.command, 0):
            raise ValidationError(
                f"inputs: {self.command} takes {needed.get(self.command, 0)} input path(s), "
                f"got {len(self.inputs)}"
            )
        for name, value in self.tolerances.items():
            if name not in TOLERANCES:
                raise ValidationError(f"tol: unknown tolerance {name!r}; known: {', '.join(TOLERANCES)}")
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"tol: {name} must be positive, got {value}")
        methods = {"analyze": ("direct", "spectral", "polar"), "convolve": ("direct", "spectral")}
        if self.command in methods and self.method not in methods[self.command]:
            raise ValidationError(f"method: {self.method!r} is not one of {methods[self.command]}")


@contextlib.contextmanager
def _overrides(tolerances: dict):
    saved = {name: getattr(*TOLERANCES[name]) for name in tolerances}
    try:
        for name, value in tolerances.items():
            setattr(*TOLERANCES[name], value)
        spectra._window_weights.cache_clear()  # cached weights were screened at the old tolerance
        yield
    finally:
        for name, value in saved.items():
            setattr(*TOLERANCES[name], value)
        if saved:
            spectra._window_weights.cache_clear()


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _load(path: str, a: float, support: float, G: int):
    if not os.path.exists(path):
        raise ValidationError(f"input: no such file {path!r}")
    return restrict_and_pad(read_raster(path), a, support, G)


def _zero_text(cfg: RunConfig) -> str:
    cond = BoundaryCondition.parse(cfg.bc)
    cache = os.environ.get(CACHE_ENV)
    name = f"zeros-{cond.value}-m{cfg.m}-n{cfg.count}.csv"
    if cache:
        path = os.path.join(cache, name)
        if os.path.exists(path):
            with open(path) as fh:
                return fh.read()
    text = format_zero_tables([find_zeros(cfg.m, cfg.count, cond)])
    if cache:
        os.makedirs(cache, exist_ok=True)
        _emit(text, os.path.join(cache, name))
    return text


def _analyze(cfg: RunConfig, xi, spec: BasisSpec) -> CoefficientMatrix:
    if cfg.method == "direct":
        return analyze_direct(xi, spec)
    table = square_fourier_coeff(xi, spec.lattice_cutoff)
    if cfg.method == "spectral":
        return analyze_spectral(table, spec)
    return analyze_polar(table, lattice_shells(spec.lattice_cutoff), spec)


def _raster_text(values: np.ndarray) -> str:
    return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in values)


def _write_field(path: str, values: np.ndarray) -> None:
    if path.lower().endswith((".pgm", ".pnm")):
        write_raster(path, values)
    else:
        _emit(_raster_text(values), path)


def _run(cfg: RunConfig) -> None:
    cfg.validate()
    if cfg.command == "zeros":
        _emit(_zero_text(cfg), cfg.output)
        return
    if cfg.command == "calibrate":
        lines = ["bc,fitted_re,fitted_im,frozen,max_residual,ok"]
        results = [calibrate(bc, cfg.a) for bc in BoundaryCondition]
        for r in results:
            lines.append(f"{r.condition.value},{r.fitted.real:.17g},{r.fitted.imag:.17g},"
                         f"{r.frozen:.17g},{r.max_residual:.17g},{int(r.ok)}")
        _emit("\n".join(lines) + "\n", cfg.output)
        bad = [r for r in results if not r.ok]
        if bad:
            from .spectra import check_calibration

            check_calibration(bad[0])
        return

    spec = cfg.spec()
    if cfg.command == "analyze":
        xi = _load(cfg.inputs[0], cfg.a, cfg.b or cfg.a, cfg.G)
        _emit(_analyze(cfg, xi, spec).to_csv(cfg.G), cfg.output)
    elif cfg.command == "descriptors":
        xi = _load(cfg.inputs[0], cfg.a, cfg.b or cfg.a, cfg.G)
        C = _analyze(cfg, xi, spec)
        d = rotation_descriptors(C)
        ns, ms = np.meshgrid(np.arange(1, spec.max_radial + 1), spec.orders, indexing="ij")
        lines = ["n,m,magnitude"] + [f"{n},{m},{v:.17g}" for n, m, v in zip(ns.ravel(), ms.ravel(), d)]
        _emit("\n".join(lines) + "\n", cfg.output)
    elif cfg.command == "synth":
        if not os.path.exists(cfg.inputs[0]):
            raise ValidationError(f"input: no such file {cfg.inputs[0]!r}")
        with open(cfg.inputs[0]) as fh:
            C = CoefficientMatrix.from_csv(fh.read())
        f = synthesize_grid(C, cell_centers(C.spec.radius, cfg.G))
        values = to_raster(f)
        if cfg.output and cfg.output.lower().endswith((".pgm", ".pnm")):
            write_raster(cfg.output, values)
        else:
            _emit(_raster_text(values), cfg.output)
    elif cfg.command == "convolve":
        b = cfg.support
        f1 = _load(cfg.inputs[0], b, b, cfg.G)
        f2 = _load(cfg.inputs[1], b, b, cfg.G)
        if cfg.method == "direct":
            res = convolve_direct(f1, f2, spec)
            C = res.coefficients
            spatial = res.spatial
        else:
            C = convolve_spectral(*lattice_tables(f1, f2, spec), spec)
            spatial = synthesize_grid(C, cell_centers(spec.radius, cfg.G)) if cfg.spatial_output else None
        _emit(C.to_csv(cfg.G), cfg.output)
        if cfg.spatial_output:
            _write_field(cfg.spatial_output, to_raster(spatial))
    elif cfg.command == "plancherel":
        b = cfg.support
        f = _load(cfg.inputs[0], b, b, cfg.G)
        table = autocorrelation_table(f, spec.radius, spec.lattice_cutoff)
        identity = plancherel_norm(analyze_spectral(table, spec))
        polar = plancherel_polar(table, lattice_shells(spec.lattice_cutoff), spec)
        grid = f.l2_norm() ** 2
        rel = abs(identity - grid) / grid if grid > 0 else abs(identity)
        lines = [
            f"bc={spec.condition.value}", f"N={spec.max_radial}", f"K={spec.lattice_cutoff}",
            f"G={cfg.G}", f"identity={identity:.17g}", f"polar={polar:.17g}",
            f"grid={grid:.17g}", f"relative_error={rel:.17g}",
        ]
        _emit("\n".join(lines) + "\n", cfg.output)


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        config.validate()
        with _overrides(config.tolerances):
            _run(config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalGuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disk-harmonics",
                                     description="Fourier-Bessel analysis and zero-padded convolution on disks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--bc", default="zero", help="boundary condition: zero or derivative")
    common.add_argument("--a", type=float, default=1.0, help="disk radius")
    common.add_argument("--b", type=float, default=None, help="support radius (default a/2)")
    common.add_argument("--M", type=int, default=8, help="max angular order")
    common.add_argument("--N", type=int, default=8, help="max radial order")
    common.add_argument("--K", type=int, default=32, help="lattice cutoff")
    common.add_argument("--G", type=int, default=256, help="grid cells per axis")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                        help=f"override a numerical guard ({', '.join(TOLERANCES)})")
    common.add_argument("-o", "--output", default=None, help="output path (default stdout)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zeros", parents=[common], help="Bessel zero table as CSV")
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--count", type=int, default=10)

    p = sub.add_parser("analyze", parents=[common], help="raster to coefficient CSV")
    p.add_argument("input")
    p.add_argument("--method", default="direct", choices=("direct", "spectral", "polar"))

    p = sub.add_parser("synth", parents=[common], help="coefficient CSV to raster")
    p.add_argument("input")

    p = sub.add_parser("convolve", parents=[common], help="zero-padded convolution of two rasters")
    p.add_argument("input", nargs=2)
    p.add_argument("--method", default="spectral", choices=("direct", "spectral"))
    p.add_argument("--spatial", default=None, help="also write the convolved field here")

    p = sub.add_parser("plancherel", parents=[common], help="norm via the Plancherel identity")
    p.add_argument("input")

    p = sub.add_parser("descriptors", parents=[common], help="rotation-invariant |C_nm| vector")
    p.add_argument("input")
    p.add_argument("--method", default="direct", choices=("direct", "spectral", "polar"))

    sub.add_parser("calibrate", parents=[common], help="refit the spectral weight constants")
    return parser


def _parse_tolerances(items) -> dict:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            sep = ""
        if not sep:
            raise ValidationError(f"tol: expected NAME=VALUE, got {item!r}")
    return out


def config_from_args(args: argparse.Namespace) -> RunConfig:
    inputs = getattr(args, "input", None)
    if inputs is None:
        inputs = ()
    elif isinstance(inputs, str):
        inputs = (inputs,)
    b = args.b
    if b is None and args.command in ("analyze", "synth", "descriptors"):
        b = args.a
    return RunConfig(
        command=args.command, bc=args.bc, a=args.a, b=b, M=args.M, N=args.N, K=args.K, G=args.G,
        inputs=tuple(inputs), output=args.output, method=getattr(args, "method", "direct"),
        spatial_output=getattr(args, "spatial", None), m=getattr(args, "m", 0),
        count=getattr(args, "count", 10), tolerances=_parse_tolerances(args.tol),
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
