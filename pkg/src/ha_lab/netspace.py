"""Net averages over rectangles, dyadic net norms and the doubling/tail lemmas.

The net average of f at side lengths t is

    fbar(t) = sup { |int_I f| / |I| : I a box with |I_i| >= t_i }.

For a piecewise-constant f the box integral is multi-affine in the corner
coordinates inside every cell box, so on each axis the supremum is attained at
an interval whose ends are grid lines, or whose length is exactly t_i with one
end on a grid line.  Those candidate intervals make the supremum exact.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import GridError, GridFunction

# lengths within this relative slack of t_i count as admissible
_LEN_RTOL = 1e-12


class SummedAreaTable:
    """Prefix integrals of f at the grid lines, queried at arbitrary corners.

    The prefix integral is piecewise linear in each coordinate separately, so
    per-axis linear interpolation between grid lines is exact.
    """

    def __init__(self, f: GridFunction):
        self.f = f
        S = f.values * f.cell_volumes()
        for i in range(f.d):
            S = np.cumsum(S, axis=i)
            pad = [(0, 0)] * f.d
            pad[i] = (1, 0)
            S = np.pad(S, pad)
        self.table = S
        self.table.setflags(write=False)

    def interp_matrix(self, axis: int, x) -> np.ndarray:
        """Rows of linear-interpolation weights onto the grid lines of ``axis``."""
        b = self.f.axes[axis].breakpoints
        x = np.clip(np.asarray(x, dtype=float), b[0], b[-1])
        j = np.clip(np.searchsorted(b, x, side="right") - 1, 0, b.size - 2)
        lam = (x - b[j]) / (b[j + 1] - b[j])
        W = np.zeros((x.size, b.size))
        rows = np.arange(x.size)
        W[rows, j] = 1.0 - lam
        W[rows, j + 1] += lam
        return W

    def difference_matrix(self, axis: int, lo, hi) -> np.ndarray:
        return self.interp_matrix(axis, hi) - self.interp_matrix(axis, lo)

    def box_integrals(self, intervals: Sequence[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
        """Integrals over every product of the per-axis candidate intervals."""
        out = self.table
        for i, (lo, hi) in enumerate(intervals):
            D = self.difference_matrix(i, lo, hi)
            out = np.moveaxis(np.tensordot(D, out, axes=([1], [i])), 0, i)
        return out

    def integral(self, box: Sequence[tuple[float, float]]) -> complex:
        ivs = [(np.array([a]), np.array([b])) for a, b in box]
        return complex(self.box_integrals(ivs).reshape(-1)[0])


def _candidates(bp: np.ndarray, ts: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Candidate intervals on one axis for side-length bounds ``ts``."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    tmin = float(ts.min())
    i, j = np.triu_indices(bp.size, k=1)
    keep = bp[j] - bp[i] >= tmin * (1 - _LEN_RTOL)
    lo = [bp[i][keep]]
    hi = [bp[j][keep]]
    for t in ts:
        lo += [bp, bp - t]
        hi += [bp + t, bp.copy()]
    lo = np.concatenate(lo)
    hi = np.concatenate(hi)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    return pairs[:, 0], pairs[:, 1]


def _sup_last_axis(sat: SummedAreaTable, lead: list, last_ts: np.ndarray) -> np.ndarray:
    """fbar for fixed candidate sets on the leading axes and each t in ``last_ts``."""
    f = sat.f
    d = f.d
    bp = f.axes[d - 1].breakpoints
    lo, hi = _candidates(bp, last_ts)
    ivs = list(lead) + [(lo, hi)]
    vals = np.abs(sat.box_integrals(ivs))
    for i, (a, b) in enumerate(ivs):
        shape = [1] * d
        shape[i] = -1
        vals = vals / (b - a).reshape(shape)
    best = vals.reshape(-1, lo.size).max(axis=0) if d > 1 else vals
    ell = hi - lo
    order = np.argsort(-ell, kind="stable")
    run = np.maximum.accumulate(best[order])
    counts = np.searchsorted(-ell[order], -last_ts * (1 - _LEN_RTOL), side="right")
    return np.where(counts > 0, run[np.maximum(counts - 1, 0)], 0.0)


def net_average(f: GridFunction, t: Sequence[float]) -> float:
    """``fbar(t)``: the largest |mean| of f over boxes with sides at least t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.size != f.d or np.any(t <= 0):
        raise GridError("net_average needs d positive side lengths")
    sat = SummedAreaTable(f)
    lead = [_candidates(f.axes[i].breakpoints, [t[i]]) for i in range(f.d - 1)]
    return float(_sup_last_axis(sat, lead, t[-1:])[0])


# --- dyadic profiles -------------------------------------------------------------

@dataclass(frozen=True)
class DyadicLattice:
    k_min: tuple[int, ...]
    k_max: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(int(k) for k in np.atleast_1d(self.k_min))
        hi = tuple(int(k) for k in np.atleast_1d(self.k_max))
        if len(lo) != len(hi) or not lo:
            raise GridError("lattice bounds must have the same non-zero length")
        if any(a > b for a, b in zip(lo, hi)):
            raise GridError("empty lattice: k_min > k_max on some axis")
        object.__setattr__(self, "k_min", lo)
        object.__setattr__(self, "k_max", hi)

    @property
    def d(self) -> int:
        return len(self.k_min)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a + 1 for a, b in zip(self.k_min, self.k_max))

    def exponents(self, axis: int) -> np.ndarray:
        return np.arange(self.k_min[axis], self.k_max[axis] + 1)

    def points(self):
        return itertools.product(*(range(a, b + 1) for a, b in zip(self.k_min, self.k_max)))


def default_lattice(f: GridFunction, pad: int = 3) -> DyadicLattice:
    """Exponents from below the finest cell width to beyond the grid extent."""
    lo, hi = [], []
    for a in f.axes:
        lo.append(int(math.floor(math.log2(a.widths.min()))) - pad)
        hi.append(int(math.ceil(math.log2(a.hi - a.lo))) + pad)
    return DyadicLattice(tuple(lo), tuple(hi))


@dataclass(frozen=True)
class NetProfile:
    lattice: DyadicLattice
    values: np.ndarray

    def is_monotone(self, rtol: float = 1e-12) -> bool:
        v = self.values
        scale = float(v.max()) if v.size else 0.0
        return all(bool(np.all(np.diff(v, axis=i) <= rtol * scale)) for i in range(v.ndim))

    def scaled(self, c: float) -> "NetProfile":
        return NetProfile(self.lattice, abs(c) * self.values)

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.lattice.d
        w.writerow([f"k{i}" for i in range(d)] + ["value"])
        for k in self.lattice.points():
            idx = tuple(ki - k0 for ki, k0 in zip(k, self.lattice.k_min))
            w.writerow(list(k) + [repr(float(self.values[idx]))])
        text = buf.getvalue()
        if target is not None:
            with open(target, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def net_profile(f: GridFunction, lattice: DyadicLattice) -> NetProfile:
    """``fbar(2^k)`` at every point of ``lattice``."""
    if lattice.d != f.d:
        raise GridError("lattice dimension does not match the function")
    sat = SummedAreaTable(f)
    last = 2.0 ** lattice.exponents(f.d - 1).astype(float)
    out = np.zeros(lattice.shape)
    lead_ranges = [lattice.exponents(i) for i in range(f.d - 1)]
    for idx in itertools.product(*(range(r.size) for r in lead_ranges)):
        lead = [
            _candidates(f.axes[i].breakpoints, [2.0 ** float(lead_ranges[i][j])])
            for i, j in enumerate(idx)
        ]
        out[idx] = _sup_last_axis(sat, lead, last)
    return NetProfile(lattice, out)


@dataclass(frozen=True)
class NetNormResult:
    value: float
    tail: float
    truncated: bool


def net_norm(profile: NetProfile, p: float, q: float, tail_rtol: float = 1e-3) -> NetNormResult:
    """Dyadic form ``(sum_k (2^{|k|/p} fbar(2^k))^q)^{1/q}`` over the lattice.

    Beyond the lattice the terms are continued geometrically from the boundary
    layers: fbar is constant below the finest cell, giving ratio ``2^{-q/p}``
    per step down, and decays like ``2^{-k}`` above the support, giving ratio
    ``2^{q(1/p - 1)}`` per step up (a divergent tail when p <= 1).  ``tail`` is
    the resulting increase of the norm; ``truncated`` flags a relative tail
    above ``tail_rtol``.
    """
    if not 0 < p < math.inf:
        raise GridError("net norm needs 0 < p < inf")
    if not 0 < q <= math.inf:
        raise GridError("net norm needs 0 < q <= inf")
    lat = profile.lattice
    v = np.asarray(profile.values, dtype=float)
    ks = np.meshgrid(*(lat.exponents(i) for i in range(lat.d)), indexing="ij")
    ksum = sum(ks)
    terms = 2.0 ** (ksum / p) * v
    if not np.any(terms > 0):
        return NetNormResult(0.0, 0.0, False)
    if math.isinf(q):
        val = float(terms.max())
        arg = np.unravel_index(int(np.argmax(terms)), terms.shape)
        on_edge = any(a in (0, n - 1) for a, n in zip(arg, terms.shape))
        return NetNormResult(val, 0.0, bool(on_edge))
    r_lo = 2.0 ** (-q / p)
    r_hi = 2.0 ** (q * (1.0 / p - 1.0))
    weight = np.ones_like(terms)
    for i in range(lat.d):
        shape = [1] * lat.d
        shape[i] = -1
        n = lat.shape[i]
        w = np.ones(n)
        w[0] += r_lo / (1 - r_lo)
        w[-1] += r_hi / (1 - r_hi) if r_hi < 1 else math.inf
        weight = weight * w.reshape(shape)
    tq = terms ** q
    val = float(tq.sum() ** (1.0 / q))
    with np.errstate(invalid="ignore"):
        ext = float(np.sum(np.where(tq > 0, tq * weight, 0.0)))
    tail = ext ** (1.0 / q) - val
    return NetNormResult(val, tail, bool(tail > tail_rtol * val))


# --- lemma-level bounds ----------------------------------------------------------

def doubling_check(f: GridFunction, box: Sequence[tuple[float, float]], t: Sequence[float]) -> tuple[float, float]:
    """``(|int_I f| / prod t_i, 2^d fbar(t/2))`` for a box I with |I_i| <= t_i."""
    t = np.asarray(t, dtype=float)
    if len(box) != f.d or t.size != f.d:
        raise GridError("box and t must match the dimension")
    for (a, b), ti in zip(box, t):
        if not (b > a and b - a <= ti * (1 + _LEN_RTOL)):
            raise GridError("doubling_check needs 0 < |I_i| <= t_i")
    lhs = abs(SummedAreaTable(f).integral(box)) / float(np.prod(t))
    rhs = 2.0 ** f.d * net_average(f, t / 2)
    return lhs, rhs


def _shell_samples(axis_bp: np.ndarray, k: int, n: int) -> np.ndarray:
    lo, hi = 2.0 ** k, 2.0 ** (k + 1)
    ab = np.abs(axis_bp)
    s = np.concatenate([np.linspace(lo, hi, n), ab[(ab >= lo) & (ab <= hi)]])
    s = np.unique(s)
    return np.concatenate([-s[::-1], s])


def hardy_tail_bound(f: GridFunction, eps, k: Sequence[int], samples: int = 33) -> tuple[float, float]:
    """Both sides of the dyadic-shell bound for ``H_eps f``.

    ``lhs`` is the largest ``|H_eps f(t)|`` over sampled t with
    ``2^{k_i} <= |t_i| <= 2^{k_i+1}`` (all sign patterns, every grid line in the
    shell).  ``rhs`` is ``2^d sum_{m >= k} fbar(2^{m-1})``; once ``2^{m_i - 1}``
    exceeds the extent of the grid along axis i, fbar halves with each step in
    m_i, so the sum beyond that point is summed in closed form.
    """
    from .hardy import as_mask, hardy_eval

    m = as_mask(eps, f.d)
    k = [int(x) for x in k]
    if len(k) != f.d:
        raise GridError("k must have one entry per axis")
    per_axis = [_shell_samples(a.breakpoints, ki, samples) for a, ki in zip(f.axes, k)]
    pts = np.stack([g.ravel() for g in np.meshgrid(*per_axis, indexing="ij")], axis=1)
    lhs = float(np.max(np.abs(hardy_eval(f, m, pts))))
    K = []
    for a, ki in zip(f.axes, k):
        K.append(max(ki, int(math.ceil(math.log2(a.hi - a.lo))) + 1))
    lat = DyadicLattice(tuple(ki - 1 for ki in k), tuple(Ki - 1 for Ki in K))
    prof = net_profile(f, lat).values
    weight = np.ones(prof.shape)
    for i in range(f.d):
        shape = [1] * f.d
        shape[i] = -1
        w = np.ones(lat.shape[i])
        w[-1] = 2.0
        weight = weight * w.reshape(shape)
    rhs = 2.0 ** f.d * float(np.sum(prof * weight))
    return lhs, rhs
