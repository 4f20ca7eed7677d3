"""Truncated Fourier transform of piecewise-constant functions.

Kernel convention: ``F_N f(xi) = int_{Q_N} f(x) exp(-i <xi, x>) dx`` with no
2*pi factor; ``Q_N`` is the cube of edge N centred at the origin.  For a
piecewise-constant f the integral over each cell is a product of
one-dimensional closed forms, so transforms are exact at the sample points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import Axis, GridError, GridFunction, WeightedNormSpec, as_axis, weighted_integral

# below this |u| = |xi| * width / 2 the sinc factor uses its Taylor expansion
SINC_SWITCH = 0.5e-6


def sinc(u) -> np.ndarray:
    """Unnormalized ``sin(u)/u`` with a 3-term Taylor branch near 0."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < SINC_SWITCH
    with np.errstate(invalid="ignore", divide="ignore"):
        big = np.sin(u) / np.where(small, 1.0, u)
    u2 = u * u
    return np.where(small, 1.0 - u2 / 6.0 + u2 * u2 / 120.0, big)


def check_frequency_grid(axes: Sequence) -> tuple[Axis, ...]:
    """Validate that every axis is symmetric about 0 and has 0 as a breakpoint."""
    out = tuple(as_axis(a) for a in axes)
    for a in out:
        b = a.breakpoints
        if not np.allclose(b, -b[::-1], rtol=0, atol=1e-12 * max(1.0, abs(b[-1]))):
            raise GridError("frequency axes must be symmetric about 0")
        if not np.any(b == 0.0):
            raise GridError("frequency axes must have 0 as a breakpoint")
    return out


def frequency_grid(extent: float, cells: int, d: int = 1) -> tuple[Axis, ...]:
    """Uniform symmetric grid on [-extent, extent] with an even number of cells."""
    if cells < 2 or cells % 2:
        raise GridError("the number of frequency cells must be even and >= 2")
    half = np.linspace(0.0, extent, cells // 2 + 1)
    b = np.concatenate([-half[:0:-1], half])
    return check_frequency_grid([b] * d)


def _clip_cells(axis: Axis, N: float):
    b = axis.breakpoints
    if math.isinf(N):
        return b[:-1], b[1:]
    h = 0.5 * N
    lo = np.clip(b[:-1], -h, h)
    hi = np.clip(b[1:], -h, h)
    return lo, hi


def axis_factor(axis: Axis, xi, N: float = math.inf) -> np.ndarray:
    """Matrix ``E[j, c] = int_{cell c within [-N/2, N/2]} exp(-i xi_j x) dx``."""
    lo, hi = _clip_cells(axis, N)
    w = hi - lo
    m = 0.5 * (hi + lo)
    xi = np.asarray(xi, dtype=float)[:, None]
    return w * np.exp(-1j * xi * m) * sinc(0.5 * xi * w)


def _contract(values: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    out = values
    for i, E in enumerate(factors):
        out = np.moveaxis(np.tensordot(E, out, axes=([1], [i])), 0, i)
    return out


def truncated_fourier(f: GridFunction, N: float, xi_grid: Sequence) -> GridFunction:
    """``F_N f`` sampled at the cell midpoints of ``xi_grid``.

    The result is a complex grid function on the frequency grid whose cell
    values are the exact transform at the cell midpoints.
    """
    if not N > 0:
        raise GridError("truncation size N must be positive")
    axes = check_frequency_grid(xi_grid)
    if len(axes) != f.d:
        raise GridError("frequency grid dimension does not match the function")
    factors = [axis_factor(a, xa.midpoints, N) for a, xa in zip(f.axes, axes)]
    return GridFunction(axes, _contract(f.values, factors))


def fourier_at(f: GridFunction, points, N: float = math.inf) -> np.ndarray:
    """``F_N f`` at arbitrary frequencies (rows of ``points``, or a 1-D array when d = 1)."""
    pts = np.asarray(points, dtype=float)
    if f.d == 1 and pts.ndim <= 1:
        pts = pts.reshape(-1, 1)
    pts = np.atleast_2d(pts)
    facs = [axis_factor(a, pts[:, i], N) for i, a in enumerate(f.axes)]
    if f.d == 1:
        return facs[0] @ f.values
    if f.d == 2:
        return np.einsum("pi,pj,ij->p", facs[0], facs[1], f.values)
    return np.einsum("pi,pj,pk,ijk->p", facs[0], facs[1], facs[2], f.values)


def decay_constants(f: GridFunction) -> np.ndarray:
    """Per-axis C_i with ``|F f(xi)| <= C_i / |xi_i|`` for every xi."""
    absv = np.abs(f.values)
    out = []
    for i in range(f.d):
        w = np.ones(())
        for j, a in enumerate(f.axes):
            w = np.multiply.outer(w, np.ones(a.ncells) if j == i else a.widths)
        out.append(2.0 * float(np.sum(absv * w)))
    return np.array(out)


@dataclass(frozen=True)
class NetNormSpec:
    """Selects a net norm N_{p,q} in :func:`fourier_cauchy_gap`."""

    p: float
    q: float


def _norm_of(g: GridFunction, norm) -> float:
    if norm == "sup":
        return float(np.max(np.abs(g.values))) if g.values.size else 0.0
    if isinstance(norm, WeightedNormSpec):
        return weighted_integral(g, norm)
    if isinstance(norm, NetNormSpec):
        from .netspace import default_lattice, net_norm, net_profile

        prof = net_profile(g, default_lattice(g))
        return net_norm(prof, norm.p, norm.q).value
    raise GridError(f"unknown norm {norm!r}")


def fourier_cauchy_gap(f: GridFunction, N1: float, N2: float, xi_grid: Sequence, norm="sup") -> float:
    """``||F_{N2} f - F_{N1} f||`` on a common frequency grid."""
    if not N1 < N2:
        raise GridError("need N1 < N2")
    a = truncated_fourier(f, N1, xi_grid)
    b = truncated_fourier(f, N2, xi_grid)
    return _norm_of(b.with_values(b.values - a.values), norm)


def plancherel_check(f: GridFunction, xi_grid: Sequence) -> tuple[float, float, float]:
    """Return ``(||F f||_2 on the grid, (2 pi)^{d/2} ||f||_2, tail bound)``.

    The tail bound controls the squared transform mass outside the frequency box
    and is expressed in the same units as the first entry.
    """
    axes = check_frequency_grid(xi_grid)
    g = truncated_fourier(f, math.inf, axes)
    lhs = weighted_integral(g, WeightedNormSpec.uniform(f.d, 0.0, 2.0))
    rhs = (2 * math.pi) ** (f.d / 2) * weighted_integral(f, WeightedNormSpec.uniform(f.d, 0.0, 2.0))
    tail_sq = 0.0
    for i, xa in enumerate(axes):
        tv = _total_variation_sq(f, i)
        tail_sq += 2.0 * (2 * math.pi) ** (f.d - 1) * tv / xa.hi
    tail = math.sqrt(lhs ** 2 + tail_sq) - lhs
    return lhs, rhs, tail


def _total_variation_sq(f: GridFunction, axis: int) -> float:
    """``int (TV_axis f(., x'))^2 dx'`` with jumps to 0 at both ends."""
    v = np.moveaxis(f.values, axis, -1)
    pad = np.zeros(v.shape[:-1] + (1,))
    tv = np.sum(np.abs(np.diff(np.concatenate([pad, v, pad], axis=-1), axis=-1)), axis=-1)
    w = np.ones(())
    for j, a in enumerate(f.axes):
        if j != axis:
            w = np.multiply.outer(w, a.widths)
    return float(np.sum(tv ** 2 * w))
