"""Local convergence of FEM/BEM near the root, via their z-domain pencils.

Linearized at the root, both schemes act as a scalar multiple of the
identity, so each pencil has one eigenvalue of multiplicity n and the
analysis is closed form. ``s = log(z) / h`` gives the equivalent
continuous-time decay rate (real part) and oscillation frequency
(imaginary part).
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

__all__ = [
    "Scheme",
    "PencilSpec",
    "RegionPoint",
    "PencilSpectrum",
    "pencil_eigen",
    "z_to_s",
    "stability_bound",
    "region_scan",
    "parse_grid",
    "write_region",
    "REGION_HEADER",
]

DEAD_BEAT = complex(-math.inf, 0.0)


class Scheme(enum.Enum):
    FEM = "FEM"
    BEM = "BEM"


@dataclass(frozen=True)
class PencilSpec:
    """``eta`` models factorization error, ``eps_res`` accumulated residual error."""

    scheme: Scheme = Scheme.FEM
    eta: float | None = None
    eps_res: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(str(getattr(self.scheme, "value", self.scheme)).upper()))
        if (self.eta is None) != (self.eps_res is None):
            raise ValueError("distortion needs both eta and eps_res")
        if self.distorted and self.scheme is not Scheme.FEM:
            raise ValueError("distortion is only modelled for FEM")

    @property
    def distorted(self) -> bool:
        return self.eta is not None


def pencil_eigen(spec: PencilSpec, h: float) -> complex:
    if not h > 0:
        raise ValueError("step must be positive")
    if spec.scheme is Scheme.BEM:
        return complex(1.0 / (1.0 + h))
    if spec.distorted:
        return complex((1.0 - h + spec.eps_res) * (1.0 + spec.eta))
    return complex(1.0 - h)


def z_to_s(z: complex, h: float) -> complex:
    """Principal-branch ``log(z) / h``; ``z = 0`` maps to ``-inf`` (dead-beat)."""
    if not h > 0:
        raise ValueError("step must be positive")
    z = complex(z)
    if z == 0:
        return DEAD_BEAT
    arg = cmath.phase(z)
    if arg == -math.pi:
        arg = math.pi
    return complex(math.log(abs(z)), arg) / h


def stability_bound(spec: PencilSpec) -> tuple[float, float] | None:
    """Open interval of steps with ``|z| < 1``; ``None`` when empty.

    The upper end is ``math.inf`` when every positive step is stable.
    """
    if spec.scheme is Scheme.BEM:
        return (0.0, math.inf)
    gain = abs(1.0 + spec.eta) if spec.distorted else 1.0
    shift = spec.eps_res if spec.distorted else 0.0
    if gain == 0.0:
        return (0.0, math.inf)
    # |1 - h + shift| < 1/gain
    lo = max(0.0, 1.0 + shift - 1.0 / gain)
    hi = 1.0 + shift + 1.0 / gain
    if hi <= lo:
        return None
    return (lo, hi)


@dataclass(frozen=True)
class RegionPoint:
    h: float
    z: complex
    s: complex
    stable: bool


@dataclass(frozen=True)
class PencilSpectrum:
    spec: PencilSpec
    points: tuple[RegionPoint, ...]

    @property
    def h_grid(self) -> list[float]:
        return [p.h for p in self.points]


def region_scan(spec: PencilSpec, h_grid: Sequence[float]) -> PencilSpectrum:
    grid = [float(h) for h in h_grid]
    if any(h <= 0 for h in grid):
        raise ValueError("grid steps must be positive")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be sorted")
    pts = []
    for h in grid:
        z = pencil_eigen(spec, h)
        pts.append(RegionPoint(h, z, z_to_s(z, h), abs(z) < 1.0))
    return PencilSpectrum(spec, tuple(pts))


def parse_grid(text: str) -> list[float]:
    """``lo:step:hi`` (inclusive) or a comma-separated list of steps."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            lo, step, hi = parts
            if not step > 0 or hi < lo:
                raise ValueError
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return [round(float(v), 12) for v in lo + step * np.arange(count)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValueError(f"malformed grid spec {text!r}; use lo:step:hi or a,b,c") from None


REGION_HEADER = "h,z_re,z_im,s_re,s_im,stable"


def _fmt(v: float) -> str:
    if v == -math.inf:
        return "-inf"
    return f"{v + 0.0:.12g}"


def write_region(spectrum: PencilSpectrum, sink: IO[str]) -> None:
    sink.write(REGION_HEADER + "\n")
    for p in spectrum.points:
        sink.write(
            f"{_fmt(p.h)},{_fmt(p.z.real)},{_fmt(p.z.imag)},{_fmt(p.s.real)},{_fmt(p.s.imag)},"
            f"{int(p.stable)}\n"
        )
