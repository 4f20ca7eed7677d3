"""Piecewise-constant functions on rectilinear grids over R^d.

Every function handled by the package is a :class:`GridFunction`: a finite
rectilinear grid with one complex value per cell and the value 0 outside the
grid.  Cells never straddle the origin on any axis, so power weights
``|x_i|**s`` have a single closed-form antiderivative on every cell.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 3


class GridError(ValueError):
    """Raised for malformed grids or values."""


class IntegrabilityError(GridError):
    """A power weight is not integrable at the origin on the support."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Axis:
    breakpoints: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float).ravel()
        if b.size < 2:
            raise GridError("an axis needs at least 2 breakpoints")
        if not np.all(np.isfinite(b)):
            raise GridError("breakpoints must be finite")
        if np.any(np.diff(b) <= 0):
            raise GridError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", _frozen(b))

    @property
    def ncells(self) -> int:
        return self.breakpoints.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def midpoints(self) -> np.ndarray:
        b = self.breakpoints
        return 0.5 * (b[:-1] + b[1:])

    @property
    def lo(self) -> float:
        return float(self.breakpoints[0])

    @property
    def hi(self) -> float:
        return float(self.breakpoints[-1])

    def straddles_zero(self) -> bool:
        b = self.breakpoints
        return bool(np.any((b[:-1] < 0) & (b[1:] > 0)))

    def split_at_zero(self) -> tuple["Axis", np.ndarray]:
        """Return the axis with 0 inserted, plus the old-cell index of each new cell."""
        b = self.breakpoints
        k = np.nonzero((b[:-1] < 0) & (b[1:] > 0))[0]
        if k.size == 0:
            return self, np.arange(self.ncells)
        j = int(k[0])
        nb = np.concatenate([b[: j + 1], [0.0], b[j + 1:]])
        src = np.concatenate([np.arange(j + 1), np.arange(j, self.ncells)])
        return Axis(nb), src

    def __eq__(self, other):
        return isinstance(other, Axis) and np.array_equal(self.breakpoints, other.breakpoints)

    def __hash__(self):
        return hash(self.breakpoints.tobytes())

    def __repr__(self):
        return f"Axis({self.ncells} cells on [{self.lo:g}, {self.hi:g}])"


def as_axis(a) -> Axis:
    return a if isinstance(a, Axis) else Axis(np.asarray(a, dtype=float))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant complex function; use :func:`make_grid_function` to build one."""

    axes: tuple[Axis, ...]
    values: np.ndarray

    def __post_init__(self):
        axes = tuple(as_axis(a) for a in self.axes)
        if not 1 <= len(axes) <= MAX_DIM:
            raise GridError(f"dimension must be between 1 and {MAX_DIM}, got {len(axes)}")
        vals = np.asarray(self.values, dtype=complex)
        shape = tuple(a.ncells for a in axes)
        if vals.shape != shape:
            if vals.size == math.prod(shape):
                vals = vals.reshape(shape)
            else:
                raise GridError(f"values of shape {vals.shape} do not match cell counts {shape}")
        for a in axes:
            if a.straddles_zero():
                raise GridError("a cell straddles 0; build through make_grid_function")
        if not np.all(np.isfinite(vals)):
            raise GridError("values must be finite")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def is_real(self) -> bool:
        return not np.any(self.values.imag)

    def cell_volumes(self) -> np.ndarray:
        vol = np.ones(())
        for a in self.axes:
            vol = np.multiply.outer(vol, a.widths)
        return vol

    def integral(self) -> complex:
        return complex(np.sum(self.values * self.cell_volumes()))

    def abs(self) -> "GridFunction":
        return GridFunction(self.axes, np.abs(self.values))

    def scale(self, c) -> "GridFunction":
        return GridFunction(self.axes, self.values * c)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.axes, values)

    def support_box(self) -> list[tuple[float, float]]:
        """Bounding box of the cells carrying a nonzero value (empty list if f == 0)."""
        nz = self.values != 0
        if not nz.any():
            return []
        box = []
        for i, a in enumerate(self.axes):
            other = tuple(j for j in range(self.d) if j != i)
            idx = np.nonzero(nz.any(axis=other) if other else nz)[0]
            box.append((float(a.breakpoints[idx[0]]), float(a.breakpoints[idx[-1] + 1])))
        return box

    def refine(self, new_axes: Sequence) -> "GridFunction":
        """Re-express f on a grid whose breakpoints contain the current ones.

        Cells of the new grid outside the current grid get the value 0.
        """
        vals = self.values
        out_axes = []
        for i, (old, new) in enumerate(zip(self.axes, new_axes)):
            nb = np.union1d(as_axis(new).breakpoints, old.breakpoints)
            mids = 0.5 * (nb[:-1] + nb[1:])
            j = np.searchsorted(old.breakpoints, mids, side="right") - 1
            inside = (j >= 0) & (j < old.ncells)
            jj = np.clip(j, 0, old.ncells - 1)
            vals = np.take(vals, jj, axis=i)
            mask_shape = [1] * vals.ndim
            mask_shape[i] = -1
            vals = vals * inside.reshape(mask_shape)
            out_axes.append(Axis(nb))
        return make_grid_function(out_axes, vals)

    def evaluate(self, points) -> np.ndarray:
        """Cell value at each point (rows of ``points``); 0 outside the grid.

        Points on a breakpoint take the value of the cell to their right.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.d:
            pts = pts.T
        idx = []
        inside = np.ones(pts.shape[0], dtype=bool)
        for i, a in enumerate(self.axes):
            j = np.searchsorted(a.breakpoints, pts[:, i], side="right") - 1
            inside &= (j >= 0) & (j < a.ncells)
            idx.append(np.clip(j, 0, a.ncells - 1))
        out = self.values[tuple(idx)]
        return np.where(inside, out, 0.0)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        f, g = common_refinement(self, other)
        return GridFunction(f.axes, f.values + g.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return self + other.scale(-1.0)

    def __repr__(self):
        return f"GridFunction(d={self.d}, shape={self.shape})"


def make_grid_function(axes: Iterable, values) -> GridFunction:
    """Build a grid function, splitting any cell that straddles 0.

    >>> f = make_grid_function([[-1.0, 1.0]], [1.0])
    >>> f.axes[0].breakpoints.tolist(), f.values.real.tolist()
    ([-1.0, 0.0, 1.0], [1.0, 1.0])
    """
    axes = [as_axis(a) for a in axes]
    if not 1 <= len(axes) <= MAX_DIM:
        raise GridError(f"dimension must be between 1 and {MAX_DIM}, got {len(axes)}")
    vals = np.asarray(values, dtype=complex)
    shape = tuple(a.ncells for a in axes)
    if vals.shape != shape:
        if vals.size != math.prod(shape):
            raise GridError(f"values of shape {vals.shape} do not match cell counts {shape}")
        vals = vals.reshape(shape)
    out = []
    for i, a in enumerate(axes):
        while a.straddles_zero():
            a, src = a.split_at_zero()
            vals = np.take(vals, src, axis=i)
        out.append(a)
    return GridFunction(tuple(out), vals)


def common_refinement(f: GridFunction, g: GridFunction) -> tuple[GridFunction, GridFunction]:
    if f.d != g.d:
        raise GridError("dimension mismatch")
    axes = [np.union1d(a.breakpoints, b.breakpoints) for a, b in zip(f.axes, g.axes)]
    return f.refine(axes), g.refine(axes)


def zero_function(d: int = 1) -> GridFunction:
    return GridFunction(tuple(Axis([0.0, 1.0]) for _ in range(d)), np.zeros((1,) * d))


def indicator(box: Sequence[tuple[float, float]], value: complex = 1.0) -> GridFunction:
    """``value`` times the indicator of an axis-parallel box."""
    return make_grid_function([list(iv) for iv in box], np.full((1,) * len(box), value))


# --- power-weight integration -------------------------------------------------

def power_integral(lo, hi, s) -> np.ndarray:
    """Elementwise ``int_lo^hi |x|**s dx`` for cells that do not straddle 0.

    Returns ``inf`` where the weight is not integrable (``s <= -1`` and the cell
    touches 0).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    neg = hi <= 0
    a = np.where(neg, -hi, lo)
    b = np.where(neg, -lo, hi)
    h = b - a
    out = np.empty(np.broadcast(a, b).shape)
    at0 = a == 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if s == -1:
            out = np.where(at0, np.inf, np.log1p(h / np.where(at0, 1.0, a)))
        else:
            e = s + 1.0
            pos = a > 0
            safe_a = np.where(pos, a, 1.0)
            from_a = safe_a ** e * np.expm1(e * np.log1p(h / safe_a)) / e
            if e > 0:
                from0 = b ** e / e
            else:
                from0 = np.full_like(b, np.inf)
            out = np.where(pos, from_a, from0)
    return out


@dataclass(frozen=True)
class WeightedNormSpec:
    """Weight ``prod |x_i|**exponent_i`` inside an outer L_p quasi-norm."""

    exponent_per_axis: tuple[float, ...]
    outer_power: float

    def __post_init__(self):
        object.__setattr__(self, "exponent_per_axis", tuple(float(e) for e in self.exponent_per_axis))
        if not self.outer_power > 0:
            raise GridError("outer_power must be positive")

    @classmethod
    def uniform(cls, d: int, exponent: float, p: float) -> "WeightedNormSpec":
        return cls((exponent,) * d, p)


def weighted_cell_masses(f: GridFunction, w: WeightedNormSpec) -> np.ndarray:
    """Per-cell ``int_cell (prod|x_i|^{a_i} |f|)^p dx`` (exact for piecewise constants)."""
    if len(w.exponent_per_axis) != f.d:
        raise GridError("weight dimension does not match the function")
    p = w.outer_power
    fac = np.ones(())
    for a, e in zip(f.axes, w.exponent_per_axis):
        b = a.breakpoints
        fac = np.multiply.outer(fac, power_integral(b[:-1], b[1:], e * p))
    absval = np.abs(f.values)
    nz = absval > 0
    if np.any(np.isinf(fac) & nz):
        raise IntegrabilityError("power weight not integrable at the origin on the support")
    with np.errstate(invalid="ignore"):
        masses = np.where(nz, absval ** p * fac, 0.0)
    return masses


def weighted_integral(f: GridFunction, w: WeightedNormSpec) -> float:
    """``(int (prod|x_i|^{a_i} |f(x)|)^p dx)^{1/p}``, exact for piecewise-constant f."""
    total = float(np.sum(weighted_cell_masses(f, w)))
    return total ** (1.0 / w.outer_power)


def lp_norm(f: GridFunction, p: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(f.values))) if f.values.size else 0.0
    return weighted_integral(f, WeightedNormSpec.uniform(f.d, 0.0, p))


# --- CSV serialization --------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_grid_csv(f: GridFunction, target) -> None:
    """Write f as CSV: one ``axis<i>_breakpoints`` row per axis, a header, one row per cell."""
    own = isinstance(target, (str, Path))
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        w = csv.writer(fh, lineterminator="\n")
        for i, a in enumerate(f.axes):
            w.writerow([f"axis{i}_breakpoints"] + [_fmt(x) for x in a.breakpoints])
        w.writerow([f"i{k}" for k in range(f.d)] + ["re", "im"])
        for idx in np.ndindex(*f.shape):
            v = f.values[idx]
            w.writerow(list(idx) + [_fmt(v.real), _fmt(v.imag)])
    finally:
        if own:
            fh.close()


def read_grid_csv(source) -> GridFunction:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    axes = []
    k = 0
    while k < len(rows) and rows[k][0].startswith("axis") and rows[k][0].endswith("_breakpoints"):
        axes.append([float(x) for x in rows[k][1:]])
        k += 1
    if not axes:
        raise GridError("missing axis<i>_breakpoints rows")
    d = len(axes)
    header = rows[k]
    if len(header) != d + 2:
        raise GridError("cell header does not match the number of axes")
    shape = tuple(len(b) - 1 for b in axes)
    vals = np.zeros(shape, dtype=complex)
    seen = 0
    for r in rows[k + 1:]:
        idx = tuple(int(x) for x in r[:d])
        vals[idx] = complex(float(r[d]), float(r[d + 1]))
        seen += 1
    if seen != math.prod(shape):
        raise GridError(f"expected {math.prod(shape)} cell rows, found {seen}")
    return make_grid_function(axes, vals)


def grid_to_csv_text(f: GridFunction) -> str:
    buf = io.StringIO()
    write_grid_csv(f, buf)
    return buf.getvalue()
