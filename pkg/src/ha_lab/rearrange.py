"""Non-increasing rearrangements, iterated Lorentz norms and the HLP pairing."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Axis, GridError, GridFunction, common_refinement, make_grid_function

# breakpoints closer than this (relative to the axis length) are merged
_MERGE_RTOL = 1e-13


@dataclass(frozen=True)
class LorentzParams:
    p: tuple[float, ...]
    q: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(x) for x in np.atleast_1d(self.p))
        q = tuple(float(x) for x in np.atleast_1d(self.q))
        if len(p) != len(q):
            raise GridError("p and q must have the same length")
        if not all(0 < x < math.inf for x in p):
            raise GridError("Lorentz p must lie in (0, inf)")
        if not all(0 < x <= math.inf for x in q):
            raise GridError("Lorentz q must lie in (0, inf]")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def uniform(cls, d: int, p: float, q: float) -> "LorentzParams":
        return cls((p,) * d, (q,) * d)


def _merge_close(x: np.ndarray, scale: float) -> np.ndarray:
    x = np.unique(x)
    if x.size < 2:
        return x
    keep = np.concatenate([[True], np.diff(x) > _MERGE_RTOL * max(scale, 1e-300)])
    return x[keep]


def _sorted_profile(values: np.ndarray, widths: np.ndarray):
    """Stable decreasing sort of |values| with widths; returns (sorted vals, right ends)."""
    order = np.argsort(-values, kind="stable")
    v = values[order]
    ends = np.cumsum(widths[order])
    return v, ends


def rearrange_axis(f: GridFunction, axis: int) -> GridFunction:
    """Non-increasing rearrangement of |f| along one axis, fiber by fiber.

    The output axis starts at 0.  Since fibers generally produce different
    breakpoints, the output uses the union of all fiber breakpoints.
    """
    if not 0 <= axis < f.d:
        raise GridError(f"axis {axis} out of range for d={f.d}")
    vals = np.moveaxis(np.abs(f.values), axis, -1)
    lead = vals.shape[:-1]
    fibers = vals.reshape(-1, vals.shape[-1])
    widths = f.axes[axis].widths
    total = float(widths.sum())

    profiles = []
    cuts = [np.zeros(1)]
    for row in fibers:
        v, ends = _sorted_profile(row, widths)
        nz = v > 0
        profiles.append((v[nz], ends[nz]))
        cuts.append(ends[nz])
    bp = _merge_close(np.concatenate(cuts), total)
    if bp.size < 2:
        bp = np.array([0.0, total])
    mids = 0.5 * (bp[:-1] + bp[1:])

    out = np.zeros((fibers.shape[0], mids.size))
    for k, (v, ends) in enumerate(profiles):
        if v.size == 0:
            continue
        j = np.searchsorted(ends, mids, side="right")
        inside = j < v.size
        out[k, inside] = v[j[inside]]
    out = np.moveaxis(out.reshape(lead + (mids.size,)), -1, axis)
    axes = list(f.axes)
    axes[axis] = Axis(bp)
    return make_grid_function(axes, out)


def iterative_rearrange(f: GridFunction) -> GridFunction:
    """Apply :func:`rearrange_axis` along axes 0, 1, ..., d-1 in turn."""
    g = f
    for i in range(f.d):
        g = rearrange_axis(g, i)
    return g


def lorentz_norm(f: GridFunction, lp: LorentzParams) -> float:
    """Iterated Lorentz (quasi-)norm built on the iterated rearrangement.

    Exact for piecewise-constant f: each one-dimensional integral of
    ``(t^{1/p} G)^q dt/t`` over a cell [a, b] is ``G^q (p/q)(b^{q/p} - a^{q/p})``.
    """
    if len(lp.p) != f.d:
        raise GridError("Lorentz parameters do not match the dimension")
    g = iterative_rearrange(f)
    G = g.values.real.copy()
    for i in range(f.d):
        b = g.axes[i].breakpoints
        p, q = lp.p[i], lp.q[i]
        shape = (-1,) + (1,) * (G.ndim - 1)
        if math.isinf(q):
            G = np.max(G * (b[1:] ** (1.0 / p)).reshape(shape), axis=0)
        else:
            s = q / p
            w = (p / q) * (b[1:] ** s - b[:-1] ** s)
            acc = np.sum((G ** q) * w.reshape(shape), axis=0)
            if not np.all(np.isfinite(acc)):
                raise GridError("Lorentz integral diverges")
            G = acc ** (1.0 / q)
    return float(G)


# --- Hardy-Littlewood-Polya pairing -------------------------------------------

def _step_product_integral(v1, e1, v2, e2, length: float) -> float:
    """int_0^length of the product of two step functions given by (values, right ends)."""
    cuts = np.unique(np.concatenate([[0.0], e1[e1 < length], e2[e2 < length], [length]]))
    mids = 0.5 * (cuts[:-1] + cuts[1:])

    def at(v, e):
        j = np.searchsorted(e, mids, side="right")
        return np.where(j < v.size, v[np.minimum(j, v.size - 1)], 0.0)

    return float(np.sum(at(v1, e1) * at(v2, e2) * np.diff(cuts)))


def _is_monotone(x: np.ndarray) -> bool:
    d = np.diff(x)
    return bool(np.all(d >= 0) or np.all(d <= 0))


def hlp_pairing(g: GridFunction, phi: GridFunction) -> tuple[float, float]:
    """Both sides of ``int_0^inf g*(t) / (1/phi)*(t) dt <= int g phi``.

    The pairing lives on the support Omega of phi: ``1/phi`` is rearranged on
    Omega, and g is restricted to Omega before rearranging.  Returns (lhs, rhs).
    """
    if g.d != 1 or phi.d != 1:
        raise GridError("hlp_pairing is one-dimensional")
    if not (g.is_real and phi.is_real):
        raise GridError("hlp_pairing needs real functions")
    if np.any(g.values.real < 0) or np.any(phi.values.real < 0):
        raise GridError("hlp_pairing needs nonnegative g and phi")
    gg, pp = common_refinement(g, phi)
    gv = gg.values.real
    pv = pp.values.real
    w = gg.axes[0].widths
    on = pv > 0
    if not _is_monotone(pv[on]):
        raise GridError("phi must be monotone on its support")
    rhs = float(np.sum(gv * pv * w))
    if not on.any():
        return 0.0, rhs
    wo = w[on]
    omega = float(wo.sum())
    gs, ge = _sorted_profile(gv[on], wo)
    rs, re = _sorted_profile(1.0 / pv[on], wo)
    lhs = _step_product_integral(gs, ge, 1.0 / rs, re, omega)
    return lhs, rhs
