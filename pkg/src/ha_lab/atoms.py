"""Simple p-atoms, the measure eta and the decay scans of their transforms.

An atom is supported in a box ``I_1 x ... x I_j x A``: dyadic intervals on the
moment-bearing axes and a bounded box A on the rest.  Its moments of order
``k <= N = floor(2/p - 3/2)`` vanish along each moment axis, its mean over A
vanishes, and ``||a||_2 <= (|I_1|...|I_j| |A|)^{1/2 - 1/p}``.

Because the low moments vanish, the transform may use the Taylor remainder
kernel ``exp(-itx) - sum_{k<=N} (-itx)^k/k!`` instead of ``exp(-itx)``.  The
value is the same for an exact atom, and the remainder form does not suffer
from the rounding residue of the moments when |t| is small.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre

from .fourier import axis_factor
from .grid import Axis, GridError, GridFunction, make_grid_function

# |t| * max|x| below this uses the power series for the cell kernels
SERIES_SWITCH = 2.0
_SERIES_TERMS = 60


class AtomError(GridError):
    pass


def moment_order(p) -> int:
    """``N = floor(2/p - 3/2)``, computed exactly."""
    pf = Fraction(p).limit_denominator(10 ** 9) if not isinstance(p, Fraction) else p
    if not 0 < pf <= 1:
        raise AtomError("atoms need 0 < p <= 1")
    return math.floor(2 / pf - Fraction(3, 2))


def dyadic(k: int, n: int) -> tuple[float, float]:
    """The dyadic interval ``(k 2^-n, (k+1) 2^-n)``."""
    return (k * 2.0 ** -n, (k + 1) * 2.0 ** -n)


def _is_dyadic(iv) -> bool:
    lo, hi = iv
    w = hi - lo
    if not w > 0:
        return False
    n = -math.log2(w)
    if abs(n - round(n)) > 1e-12:
        return False
    k = lo / w
    return abs(k - round(k)) < 1e-9


@dataclass(frozen=True)
class AtomSpec:
    """``intervals``: dyadic support intervals of the moment axes (the first j
    axes); ``A``: box on the remaining axes (empty when j = d)."""

    p: float
    intervals: tuple
    A: tuple = ()
    cells: int = 8

    def __post_init__(self):
        ivs = tuple(tuple(float(x) for x in iv) for iv in self.intervals)
        A = tuple(tuple(float(x) for x in iv) for iv in self.A)
        if not ivs:
            raise AtomError("an atom needs at least one moment axis")
        if not all(_is_dyadic(iv) for iv in ivs):
            raise AtomError("moment-axis support intervals must be dyadic")
        if any(not b > a for a, b in A):
            raise AtomError("A must be a non-degenerate box")
        if not 1 <= len(ivs) + len(A) <= 3:
            raise AtomError("atoms live in dimension 1 to 3")
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "A", A)
        moment_order(self.p)

    @property
    def N(self) -> int:
        return moment_order(self.p)

    @property
    def d(self) -> int:
        return len(self.intervals) + len(self.A)

    @property
    def j(self) -> int:
        return len(self.intervals)

    @property
    def box(self) -> tuple:
        return self.intervals + self.A

    @property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in self.box]))

    @property
    def l2_bound(self) -> float:
        return self.volume ** (0.5 - 1.0 / self.p)

    def axis_orders(self) -> list[int]:
        """Moment order per axis used by the remainder kernels.

        Moment axes carry N; a single A axis carries order 0 (its mean vanishes).
        """
        extra = [0] if len(self.A) == 1 else [-1] * len(self.A)
        return [self.N] * self.j + extra


def _legendre_moments(axis: Axis, lo: float, hi: float, N: int) -> np.ndarray:
    """``M[k, c] = int_cell P_k(s(x)) dx`` with s mapping [lo, hi] onto [-1, 1]."""
    b = axis.breakpoints
    s = (2.0 * b - (lo + hi)) / (hi - lo)
    M = np.empty((N + 1, axis.ncells))
    for k in range(N + 1):
        c = np.zeros(k + 2)
        c[k] = 1.0
        P = legendre.legint(c)
        vals = legendre.legval(s, P)
        M[k] = np.diff(vals) * 0.5 * (hi - lo)
    return M


def _project_rows(V: np.ndarray, M: np.ndarray, axis: int) -> np.ndarray:
    """Project every fiber along ``axis`` onto the null space of M."""
    Q, _ = np.linalg.qr(M.T)
    Vm = np.moveaxis(V, axis, -1)
    Vm = Vm - (Vm @ Q) @ Q.T
    return np.moveaxis(Vm, -1, axis)


def _project(V: np.ndarray, spec: AtomSpec, axes: Sequence[Axis]) -> np.ndarray:
    for i, (lo, hi) in enumerate(spec.intervals):
        V = _project_rows(V, _legendre_moments(axes[i], lo, hi, spec.N), i)
    if spec.A:
        j = spec.j
        vol = np.ones(())
        for a in axes[j:]:
            vol = np.multiply.outer(vol, a.widths)
        lead = V.shape[:j]
        flat = V.reshape(lead + (-1,))
        w = vol.ravel()
        flat = flat - np.outer(flat.reshape(-1, w.size) @ w / (w @ w), w).reshape(flat.shape)
        V = flat.reshape(V.shape)
    return V


def atom_grid(spec: AtomSpec) -> list[Axis]:
    n = max(spec.cells, spec.N + 2)
    return [Axis(np.linspace(a, b, n + 1)) for a, b in spec.box]


def make_simple_atom(spec: AtomSpec, seed: int = 0, max_tries: int = 8) -> GridFunction:
    """Random atom: project a random candidate, then scale to the L_2 bound."""
    axes = atom_grid(spec)
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        V = rng.standard_normal(tuple(a.ncells for a in axes))
        V = _project(V, spec, axes)
        vol = np.ones(())
        for a in axes:
            vol = np.multiply.outer(vol, a.widths)
        norm = math.sqrt(float(np.sum(V ** 2 * vol)))
        if norm > 1e-12:
            V = _project(V * (spec.l2_bound / norm), spec, axes)
            a = make_grid_function(axes, V)
            bad = validate_atom(a, spec)
            if bad:
                raise AtomError("; ".join(bad))
            return a
    raise AtomError("projection annihilated every candidate")


def atom_moments(a: GridFunction, axis: int, N: int) -> np.ndarray:
    """Raw moments ``int a x_axis^k dx_axis`` for k <= N, per fiber."""
    b = a.axes[axis].breakpoints
    V = np.moveaxis(a.values.real, axis, -1)
    out = []
    for k in range(N + 1):
        m = (b[1:] ** (k + 1) - b[:-1] ** (k + 1)) / (k + 1)
        out.append(V @ m)
    return np.stack(out)


def validate_atom(a: GridFunction, spec: AtomSpec, tol: float = 1e-12) -> list[str]:
    """Violated atom conditions (support, L_2 size, moments); empty means valid."""
    out = []
    if a.d != spec.d:
        return ["dimension mismatch"]
    for i, (lo, hi) in enumerate(spec.box):
        b = a.axes[i].breakpoints
        V = np.moveaxis(a.values, i, 0)
        outside = (b[1:] <= lo) | (b[:-1] >= hi) | (b[:-1] < lo) | (b[1:] > hi)
        if np.any(V[outside] != 0):
            out.append(f"support leaves the box on axis {i}")
    l2 = math.sqrt(float(np.sum(np.abs(a.values) ** 2 * a.cell_volumes())))
    if l2 > spec.l2_bound * (1 + 1e-12):
        out.append("L2 size bound")
    for i in range(spec.j):
        if np.max(np.abs(atom_moments(a, i, spec.N))) > tol:
            out.append(f"moments on axis {i}")
    if spec.A:
        vol = np.ones(())
        for ax in a.axes[spec.j:]:
            vol = np.multiply.outer(vol, ax.widths)
        means = a.values.reshape(a.values.shape[: spec.j] + (-1,)) @ vol.ravel()
        if np.max(np.abs(means)) > tol:
            out.append("mean over A")
    return out


# --- cell kernels --------------------------------------------------------------

def _power_cells(b: np.ndarray, k: int) -> np.ndarray:
    return (b[1:] ** (k + 1) - b[:-1] ** (k + 1)) / (k + 1)


def kernel_matrix(axis: Axis, t, order: int = -1, hardy: bool = False) -> np.ndarray:
    """``K[n, c] = int_cell kappa(t_n x) dx`` for the remainder kernels.

    Fourier (``hardy=False``): ``kappa(z) = exp(-iz) - sum_{k<=order} (-iz)^k/k!``.
    Averaged (``hardy=True``): ``(1/t) int_0^t`` of that in t, i.e.
    ``sum_{k>order} (-iz)^k/(k+1)!``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    b = axis.breakpoints
    xmax = float(np.max(np.abs(b)))
    small = np.abs(t) * xmax <= SERIES_SWITCH
    K = np.zeros((t.size, axis.ncells), dtype=complex)

    # power series
    if np.any(small):
        ts = t[small][:, None]
        acc = np.zeros((ts.shape[0], axis.ncells), dtype=complex)
        fact = 1.0
        for k in range(_SERIES_TERMS):
            fact *= max(k, 1)
            if k <= order:
                continue
            denom = fact * (k + 1) if hardy else fact
            acc = acc + ((-1j * ts) ** k / denom) * _power_cells(b, k)[None, :]
        K[small] = acc

    # closed forms minus the Taylor head
    big = ~small
    if np.any(big):
        tb = t[big]
        if hardy:
            from scipy.special import sici

            def G(x):
                z = np.abs(np.outer(tb, x))
                si, ci = sici(np.where(z > 0, z, 1.0))
                cin = np.where(z > 0, np.euler_gamma + np.log(np.where(z > 0, z, 1.0)) - ci, 0.0)
                si_signed = np.sign(np.outer(tb, x)) * np.where(z > 0, si, 0.0)
                return (si_signed - 1j * cin) / tb[:, None]

            full = G(b[1:]) - G(b[:-1])
        else:
            full = axis_factor(axis, tb)
        fact = 1.0
        for k in range(order + 1):
            fact *= max(k, 1)
            denom = fact * (k + 1) if hardy else fact
            full = full - ((-1j * tb[:, None]) ** k / denom) * _power_cells(b, k)[None, :]
        K[big] = full
    return K


def atom_transform(a: GridFunction, points, orders: Sequence[int], hardy: bool = False) -> np.ndarray:
    """``a-hat`` (or ``H a-hat`` with ``hardy``) at the rows of ``points``."""
    pts = np.asarray(points, dtype=float)
    if a.d == 1 and pts.ndim <= 1:
        pts = pts.reshape(-1, 1)
    Ks = [kernel_matrix(ax, pts[:, i], orders[i], hardy) for i, ax in enumerate(a.axes)]
    if a.d == 1:
        return Ks[0] @ a.values
    if a.d == 2:
        return np.einsum("pi,pj,ij->p", Ks[0], Ks[1], a.values)
    return np.einsum("pi,pj,pk,ijk->p", Ks[0], Ks[1], Ks[2], a.values)


def atom_transform_grid(a: GridFunction, ts: Sequence[np.ndarray], orders, hardy: bool = False) -> np.ndarray:
    """Transform on the tensor grid ``ts[0] x ts[1] x ...``."""
    out = a.values
    for i, ax in enumerate(a.axes):
        K = kernel_matrix(ax, ts[i], orders[i], hardy)
        out = np.moveaxis(np.tensordot(K, out, axes=([1], [i])), 0, i)
    return out


# --- eta -----------------------------------------------------------------------

@dataclass(frozen=True)
class EtaRegion:
    """Product of per-axis unions of intervals (ends may be +-inf), away from 0."""

    axes: tuple

    def __post_init__(self):
        out = []
        for ivs in self.axes:
            clean = []
            for lo, hi in ivs:
                lo, hi = float(lo), float(hi)
                if hi <= lo:
                    continue
                if lo <= 0 <= hi:
                    raise GridError("eta regions must stay away from 0 on every axis")
                clean.append((lo, hi))
            out.append(tuple(_merge(clean)))
        object.__setattr__(self, "axes", tuple(out))


def _merge(ivs):
    ivs = sorted(ivs)
    out = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def eta_measure(region: EtaRegion) -> float:
    """``eta(region) = int prod_j t_j^{-2} dt``, exactly."""
    total = 1.0
    for ivs in region.axes:
        total *= sum(abs(_inv(lo) - _inv(hi)) for lo, hi in ivs)
    return total


def reflected(intervals: Sequence[tuple[float, float]], two_sided: bool = False) -> EtaRegion:
    """The reflected region of a box of intervals: ``|t_i| > 1/|I_i|`` per axis.

    By default only the positive half-line is used, as in the substitution
    ``x = 1/t`` that turns it back into a box of the same size; ``two_sided``
    adds the mirror image.
    """
    axes = []
    for lo, hi in intervals:
        s = 1.0 / (hi - lo)
        ivs = [(s, math.inf)]
        if two_sided:
            ivs.append((-math.inf, -s))
        axes.append(tuple(ivs))
    return EtaRegion(tuple(axes))


# --- decay scans ---------------------------------------------------------------

def _panels(lo: float, hi: float, octaves: int, nodes: int):
    """Gauss-Legendre nodes/weights on (lo, hi] refined geometrically toward lo."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    if lo == 0.0:
        edges = hi * 2.0 ** -np.arange(octaves, -1, -1, dtype=float)
        edges = np.concatenate([[0.0], edges])
    else:
        edges = np.linspace(lo, hi, octaves + 1)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * x + 0.5 * (a + b)).ravel(), (0.5 * (b - a) * w).ravel()


def _symmetric(nodes, weights):
    return np.concatenate([-nodes[::-1], nodes]), np.concatenate([weights[::-1], weights])


@dataclass
class DecayScan:
    p: float
    N: int
    r: list[int]
    J: list[float]
    slope: float
    predicted: float
    side: str
    operator: str
    flags: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return math.isfinite(self.slope) and self.slope <= self.predicted + 0.15

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "N", "r", "J", "slope", "predicted"])
        for r, J in zip(self.r, self.J):
            w.writerow([repr(self.p), self.N, r, repr(J), repr(self.slope), repr(self.predicted)])
        return buf.getvalue()


def predicted_slope(p: float, N: int) -> float:
    return -(N * p + 2 * p - 1)


def _fit(rs, Js) -> float:
    J = np.asarray(Js, dtype=float)
    if np.any(J <= 0) or not np.all(np.isfinite(J)):
        return math.nan
    return float(np.polyfit(np.asarray(rs, dtype=float), np.log2(J), 1)[0])


def _scan(a: GridFunction, spec: AtomSpec, r_range, side: str, hardy: bool, octaves=48, nodes=24, t2_cells=4096) -> DecayScan:
    p, N = float(spec.p), spec.N
    rs = [int(r) for r in r_range]
    if len(rs) < 4:
        raise AtomError("fit needs at least four r values")
    if spec.d > 2:
        raise AtomError("decay scans are implemented for d <= 2")
    orders = spec.axis_orders()
    flags = []
    K1 = -math.log2(spec.intervals[0][1] - spec.intervals[0][0])
    Js = []
    if spec.d == 1:
        if side != "interior":
            raise AtomError("the exterior scan needs d = 2 (an A axis)")
        for r in rs:
            T = 2.0 ** (K1 - r)
            t, w = _symmetric(*_panels(0.0, T, octaves, nodes))
            v = atom_transform(a, t, orders, hardy)
            Js.append(float(np.sum(w * np.abs(t) ** (p - 2) * np.abs(v) ** p)))
    else:
        lo, hi = spec.A[0]
        K2 = -math.log2(hi - lo)
        if side == "interior":
            # t2 over the reflected region |t2| > 2^K2, cut at 2^{K2+12} with the
            # |a-hat| <= C/|t2| tail bound reported
            top = 2.0 ** (K2 + 12)
            u, wu = _symmetric(*_panels(2.0 ** K2, top, t2_cells // nodes, nodes))
            u = np.concatenate([u[u < 0], u[u > 0]])
            wu = np.concatenate([wu[: wu.size // 2], wu[wu.size // 2:]])
            flags.append(f"t2_cut={top:g}")
        elif side == "exterior":
            u, wu = _symmetric(*_panels(0.0, 2.0 ** K2, octaves, nodes))
        else:
            raise AtomError(f"unknown side {side!r}")
        for r in rs:
            T = 2.0 ** (K1 - r)
            t, w = _symmetric(*_panels(0.0, T, octaves, nodes))
            F = atom_transform_grid(a, [t, u], orders, hardy)
            dens = np.outer(w * np.abs(t) ** (p - 2), wu * np.abs(u) ** (p - 2))
            Js.append(float(np.sum(dens * np.abs(F) ** p)))
    slope = _fit(rs, Js)
    if not math.isfinite(slope):
        flags.append("zero" if all(J == 0 for J in Js) else "undefined")
    return DecayScan(p, N, rs, Js, slope, predicted_slope(p, N), side, "HF" if hardy else "F", flags)


def atom_decay_scan(a: GridFunction, spec: AtomSpec, r_range, side: str = "interior") -> DecayScan:
    """``J(r)`` for ``T a = (prod t) a-hat`` over the shrinking regions, with the fitted slope of log2 J."""
    return _scan(a, spec, r_range, side, hardy=False)


def hardy_variant_decay(a: GridFunction, spec: AtomSpec, r_range, side: str = "interior") -> DecayScan:
    """As :func:`atom_decay_scan` with ``H a-hat`` in place of ``a-hat``."""
    return _scan(a, spec, r_range, side, hardy=True)


def hardy_support_check(a: GridFunction, spec: AtomSpec) -> float:
    """Largest ``|H a|`` outside the support box, from the exact grid operator."""
    from .hardy import hardy_eps

    Ha = hardy_eps(a, (0,) * a.d)
    mids = np.meshgrid(*(ax.midpoints for ax in Ha.axes), indexing="ij")
    inside = np.ones(Ha.shape, dtype=bool)
    for m, (lo, hi) in zip(mids, spec.box):
        inside &= (m > lo) & (m < hi)
    outside = np.abs(Ha.values)[~inside]
    return float(outside.max()) if outside.size else 0.0
