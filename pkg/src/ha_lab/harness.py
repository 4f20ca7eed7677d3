"""Parameter validation and left/right evaluation of the weighted inequalities.

Every inequality is evaluated as an :class:`InequalityReport`.  Both sides use
the same grid and tail policies: values on the grid are exact for the
piecewise-constant input, and the part of each weighted integral beyond the
grid is continued with ``c/|t|`` decay from the boundary cells.  The tail is
added to the side it belongs to and reported separately.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .fourier import frequency_grid, truncated_fourier
from .grid import (
    GridError,
    GridFunction,
    WeightedNormSpec,
    make_grid_function,
    power_integral,
    weighted_cell_masses,
)
from .hardy import HardyGridOptions, as_mask, hardy_eps, t_epsilon
from .parallel import pmap

KINDS = (
    "hausdorff_young",
    "pitt",
    "pitt_diag",
    "thm2",
    "thm2_diag",
    "thm3",
    "thm3_diag",
    "hardy_lp",
    "hardy_HB",
    "reverse_hardy",
    "hardy_averages",
)
VARIANTS = ("pitt", "thm2", "thm3")
UNRELIABLE_TAIL = 0.10
GROWTH_LIMIT = 1.25
# lattice padding (octaves) around the transform grid for the net norm; the
# boundary-layer tails decay like 2^{-pad q/p}
NET_PAD = 12


class InvalidParams(GridError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# --- parameters ----------------------------------------------------------------

def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(float(x)).limit_denominator(10 ** 12)


@dataclass(frozen=True)
class PittParams:
    d: int
    r: float
    q: float
    alpha: float
    beta: float
    variant: str = "thm2"

    @classmethod
    def balanced(cls, d: int, r, q, beta, variant: str = "thm2") -> "PittParams":
        """Fill alpha from the balance condition ``alpha = 1/r' - 1/q - beta``."""
        r_, q_, b_ = _exact(r), _exact(q), _exact(beta)
        alpha = 1 - 1 / r_ - 1 / q_ - b_
        return cls(d, float(r_), float(q_), float(alpha), float(b_), variant)

    @classmethod
    def diag(cls, kind: str, d: int, r: float) -> "PittParams":
        """The r = q special cases: thm2_diag / pitt_diag and thm3_diag."""
        r_ = _exact(r)
        if kind in ("thm2_diag", "pitt_diag"):
            return cls(d, float(r_), float(r_), 0.0, float(1 - 2 / r_), "thm2")
        if kind == "thm3_diag":
            return cls(d, float(r_), float(r_), float(1 - 2 / r_), 0.0, "thm3")
        raise GridError(f"no diagonal case for {kind}")


def validate_params(p: PittParams) -> list[str]:
    """Violated clauses of the variant's constraint chain; empty means valid.

    The check is exact: every number is converted to a fraction first.
    """
    out = []
    if p.variant not in VARIANTS:
        return [f"unknown variant {p.variant!r}"]
    if not 1 <= p.d <= 3:
        out.append("1 <= d <= 3")
    if math.isinf(float(p.q)):
        out.append("q < inf")
        return out
    r, q, a, b = (_exact(x) for x in (p.r, p.q, p.alpha, p.beta))
    if not r > 1:
        out.append("1 < r")
        return out
    if not r <= q:
        out.append("r <= q")
    inv_rp = 1 - 1 / r
    if a != inv_rp - 1 / q - b:
        out.append("alpha = 1/r' - 1/q - beta")
    if p.variant in ("pitt", "thm2") and not a >= 0:
        out.append("0 <= alpha")
    if p.variant == "thm3" and not inv_rp - 1 / q <= a:
        out.append("1/r' - 1/q <= alpha")
    if not a < inv_rp:
        out.append("alpha < 1/r'")
    if p.variant == "pitt" and not b <= 0:
        out.append("beta <= 0")
    return out


# --- reports -------------------------------------------------------------------

@dataclass
class InequalityReport:
    kind: str
    lhs: float
    rhs: float
    tail_lhs: float = 0.0
    tail_rhs: float = 0.0
    level: int | None = None
    N: float | None = None
    flags: list[str] = field(default_factory=list)
    discretization: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return math.nan if self.lhs == 0 else math.inf
        return self.lhs / self.rhs

    @property
    def unreliable(self) -> bool:
        return "unreliable" in self.flags

    def row(self) -> list:
        def num(x):
            return "" if x is None else repr(float(x))

        return [
            self.kind,
            "" if self.level is None else str(self.level),
            num(self.N),
            num(self.lhs),
            num(self.rhs),
            num(self.ratio),
            num(self.tail_lhs),
            num(self.tail_rhs),
            ";".join(self.flags),
        ]


REPORT_HEADER = ["kind", "level", "N", "lhs", "rhs", "ratio", "tail_lhs", "tail_rhs", "flags"]


def reports_to_csv(reports: Sequence[InequalityReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


# --- weighted integrals with decay tails ----------------------------------------

def _tail_integral(g: GridFunction, spec: WeightedNormSpec, masses: np.ndarray, decay_axes) -> float:
    """Mass beyond the grid, continuing each boundary cell with ``c/|t|`` decay
    along the axes flagged in ``decay_axes``."""
    p = spec.outer_power
    extra = 0.0
    for i, (ax, a) in enumerate(zip(g.axes, spec.exponent_per_axis)):
        if not decay_axes[i]:
            continue
        b = ax.breakpoints
        k = (1.0 - a) * p - 1.0
        for end, idx in ((b[-1], -1), (b[0], 0)):
            T = abs(end)
            if T == 0:
                continue
            sl = np.take(masses, [idx if idx == 0 else masses.shape[i] - 1], axis=i)
            if not np.any(sl > 0):
                continue
            if k <= 0:
                return math.inf
            cell = power_integral(b[idx] if idx == 0 else b[-2], b[1] if idx == 0 else b[-1], a * p)
            cell = float(np.atleast_1d(cell)[0])
            factor = T ** (a * p + 1.0) / k
            extra += float(np.sum(sl)) * factor / cell
    return extra


def weighted_with_tail(
    g: GridFunction, exponent: float, p: float, root: bool = True, decay_axes=True
) -> tuple[float, float]:
    """Weighted integral of g over R^d plus its decay tail: (value, tail part).

    ``decay_axes`` (one bool per axis, or a single bool) marks the axes along
    which g keeps decaying like ``1/|t|`` past the grid; along the others g is
    zero off the grid.  With ``root`` the result is ``(int ...)^{1/p}`` and the
    tail is the increase of that root.
    """
    spec = WeightedNormSpec.uniform(g.d, exponent, p)
    masses = weighted_cell_masses(g, spec)
    body = float(np.sum(masses))
    if isinstance(decay_axes, (bool, np.bool_)):
        decay_axes = (bool(decay_axes),) * g.d
    tail = _tail_integral(g, spec, masses, decay_axes)
    if not root:
        return body + tail, tail
    if math.isinf(tail):
        return math.inf, math.inf
    full = (body + tail) ** (1.0 / p)
    return full, full - body ** (1.0 / p)


def _lp(g: GridFunction, p: float) -> float:
    """Plain L_p norm of a function that vanishes off its grid."""
    if math.isinf(p):
        return float(np.max(np.abs(g.values))) if g.values.size else 0.0
    return weighted_with_tail(g, 0.0, p, decay_axes=False)[0]


def _cesaro_axes(m) -> tuple[bool, ...]:
    # H_0 outputs decay like 1/|t| past the grid; H_1 outputs of a
    # finitely supported function vanish there
    return tuple(b == 0 for b in m.bits)


# --- the inequality kinds --------------------------------------------------------

@dataclass
class HarnessGrid:
    """Frequency grid, truncation and Hardy output-grid settings."""

    xi_extent: float = 16.0
    xi_cells: int | None = None
    N: float = math.inf
    schedule: tuple[float, ...] | None = None
    tol: float = 1e-10
    hardy: HardyGridOptions = field(default_factory=HardyGridOptions)

    def cells(self, d: int) -> int:
        if self.xi_cells is not None:
            return self.xi_cells
        return {1: 256, 2: 48, 3: 16}[d]

    def xi_grid(self, d: int):
        return frequency_grid(self.xi_extent, self.cells(d), d)


def _get(params, name: str, default=None):
    if params is None:
        return default
    if isinstance(params, Mapping):
        return params.get(name, default)
    return getattr(params, name, default)


def _pitt_from(kind: str, f: GridFunction, params) -> PittParams:
    if isinstance(params, PittParams):
        return params
    r = _get(params, "r", _get(params, "p"))
    if r is None:
        raise GridError(f"{kind} needs r")
    if kind.endswith("_diag"):
        return PittParams.diag(kind, f.d, r)
    variant = {"pitt": "pitt", "thm2": "thm2", "thm3": "thm3"}[kind]
    q = _get(params, "q", r)
    if _get(params, "alpha") is None:
        return PittParams.balanced(f.d, r, q, _get(params, "beta", 0.0), variant)
    return PittParams(f.d, float(r), float(q), float(_get(params, "alpha")), float(_get(params, "beta", 0.0)), variant)


def _finish(kind, lhs, rhs, tl, tr, meta, N=None) -> InequalityReport:
    rep = InequalityReport(kind, float(lhs), float(rhs), float(tl), float(tr), N=N, discretization=meta)
    if lhs == 0 and rhs == 0:
        rep.flags.append("zero")
    if (math.isinf(tl) or (lhs > 0 and tl > UNRELIABLE_TAIL * lhs)) or (
        math.isinf(tr) or (rhs > 0 and tr > UNRELIABLE_TAIL * rhs)
    ):
        rep.flags.append("unreliable")
    return rep


def _meta(f: GridFunction, **kw) -> dict:
    meta = {"d": f.d, "cells": tuple(int(n) for n in f.shape)}
    meta.update(kw)
    return meta


def _transform_side(f: GridFunction, grid: HarnessGrid) -> GridFunction:
    return truncated_fourier(f, grid.N, grid.xi_grid(f.d))


def _t_eps(f: GridFunction, eps, grid: HarnessGrid):
    xi = grid.xi_grid(f.d)
    sched = grid.schedule or ((grid.N,) if math.isfinite(grid.N) else (math.inf,))
    return t_epsilon(f, eps, sched, xi, tol=grid.tol, options=grid.hardy)


def inequality_ratio(
    kind: str,
    f: GridFunction,
    params=None,
    eps=None,
    N: float | None = None,
    grid: HarnessGrid | None = None,
) -> InequalityReport:
    """Evaluate both sides of inequality ``kind`` for f.

    ``params`` is a :class:`PittParams` for the Pitt-type kinds (``r`` alone
    suffices for the diagonal ones) and a mapping with ``p`` (plus ``beta`` for
    ``hardy_averages``) for the Hardy kinds.
    """
    if kind not in KINDS:
        raise GridError(f"unknown inequality kind {kind!r}")
    grid = replace(grid or HarnessGrid(), **({"N": N} if N is not None else {}))
    d = f.d

    if kind in ("hardy_lp", "hardy_HB"):
        p = float(_get(params, "p", 2.0))
        m = as_mask(0 if eps is None else eps, d)
        if kind == "hardy_HB":
            if len(set(m.bits)) != 1:
                raise InvalidParams(["hardy_HB needs eps all zeros (H) or all ones (B)"])
            ok = (1 < p <= math.inf) if m.bits[0] == 0 else (1 <= p < math.inf)
            if not ok:
                raise InvalidParams(["p outside the range of the H/B inequality"])
        elif not 1 < p < math.inf:
            raise InvalidParams(["1 < p < inf"])
        Hf = hardy_eps(f, m, grid.hardy)
        if math.isinf(p):
            lhs, tl = _lp(Hf, p), 0.0
        else:
            lhs, tl = weighted_with_tail(Hf, 0.0, p, decay_axes=_cesaro_axes(m))
        rhs = _lp(f, p)
        return _finish(kind, lhs, rhs, tl, 0.0, _meta(f, eps=str(m), p=p, out_cells=Hf.shape))

    if kind == "reverse_hardy":
        p = float(_get(params, "p", 1.0))
        if not 0 < p <= 1:
            raise InvalidParams(["0 < p <= 1"])
        if not f.is_real or np.any(f.values.real < 0):
            raise InvalidParams(["reverse_hardy needs g >= 0"])
        a = (p - 2.0) / p
        lhs = weighted_with_tail(f, a, p, root=False, decay_axes=False)[0]
        Hf = hardy_eps(f, as_mask(0, d), grid.hardy)
        rhs, tr = weighted_with_tail(Hf, a, p, root=False, decay_axes=True)
        return _finish(kind, lhs, rhs, 0.0, tr, _meta(f, p=p, out_cells=Hf.shape))

    if kind == "hardy_averages":
        q = float(_get(params, "q", _get(params, "p", 2.0)))
        beta = float(_get(params, "beta", 0.0))
        if not q > 1:
            raise InvalidParams(["q > 1"])
        if not -1.0 / q < beta < 1.0 - 1.0 / q:
            raise InvalidParams(["-1/q < beta < 1 - 1/q"])
        if d != 1:
            raise InvalidParams(["hardy_averages is one-dimensional"])
        if not f.is_real or np.any(f.values.real < 0):
            raise InvalidParams(["hardy_averages needs g >= 0"])
        H = hardy_eps(f, (0,), grid.hardy)
        B = hardy_eps(f, (1,), grid.hardy)
        lh, th = weighted_with_tail(H, beta, q, root=False)
        lb, tb = weighted_with_tail(B, beta, q, root=False, decay_axes=False)
        rhs = weighted_with_tail(f, beta, q, root=False, decay_axes=False)[0]
        return _finish(kind, lh + lb, rhs, th + tb, 0.0, _meta(f, q=q, beta=beta))

    if kind == "hausdorff_young":
        r = float(_get(params, "r", _get(params, "p", 2.0)))
        if not 1 < r <= 2:
            raise InvalidParams(["1 < r <= 2"])
        rp = r / (r - 1.0)
        F = _transform_side(f, grid)
        lhs, tl = weighted_with_tail(F, 0.0, rp)
        rhs = _lp(f, r)
        return _finish(kind, lhs, rhs, tl, 0.0, _meta(f, r=r, xi_cells=F.shape), N=grid.N)

    if kind == "pitt_diag":
        r = float(_get(params, "r", _get(params, "p", 2.0)))
        if not 1 < r <= 2:
            raise InvalidParams(["1 < p <= 2"])
        F = _transform_side(f, grid)
        lhs, tl = weighted_with_tail(F, (r - 2.0) / r, r)
        rhs = _lp(f, r)
        return _finish(kind, lhs, rhs, tl, 0.0, _meta(f, r=r, xi_cells=F.shape), N=grid.N)

    pp = _pitt_from(kind, f, params)
    bad = validate_params(pp)
    if bad:
        raise InvalidParams(bad)
    rhs, tr = weighted_with_tail(f, pp.alpha, pp.r, decay_axes=False)
    if kind == "pitt":
        F = _transform_side(f, grid)
        lhs, tl = weighted_with_tail(F, pp.beta, pp.q)
        return _finish(kind, lhs, rhs, tl, tr, _meta(f, r=pp.r, q=pp.q, xi_cells=F.shape), N=grid.N)

    # weighted T_eps kinds
    m = as_mask(0 if eps is None else eps, d)
    T, rep = _t_eps(f, m, grid)
    lhs, tl = weighted_with_tail(T, pp.beta, pp.q)
    out = _finish(
        kind, lhs, rhs, tl, tr,
        _meta(f, r=pp.r, q=pp.q, alpha=pp.alpha, beta=pp.beta, eps=str(m), out_cells=T.shape,
              gaps=rep.gaps, transform_tail=rep.tail_estimate),
        N=rep.schedule[-1],
    )
    if not rep.converged:
        out.flags.append("not_converged")
    return out


def hlp_net_ratio(f: GridFunction, p: float, q: float, N: float, grid: HarnessGrid | None = None) -> InequalityReport:
    """``||F_N f||_{N_{p',q}}`` against the iterated Lorentz norm ``||f||_{L_{p,q}}``."""
    from .netspace import default_lattice, net_norm, net_profile
    from .rearrange import LorentzParams, lorentz_norm

    if not 1 < p < math.inf:
        raise InvalidParams(["1 < p < inf"])
    grid = grid or HarnessGrid(xi_cells=64 if f.d == 1 else 16)
    F = truncated_fourier(f, N, grid.xi_grid(f.d))
    pp = p / (p - 1.0)
    if np.any(F.values != 0):
        res = net_norm(net_profile(F, default_lattice(F, pad=NET_PAD)), pp, q)
    else:
        from .netspace import NetNormResult

        res = NetNormResult(0.0, 0.0, False)
    rhs = lorentz_norm(f, LorentzParams.uniform(f.d, p, q))
    rep = _finish("hlp_net", res.value, rhs, res.tail, 0.0, _meta(f, p=p, q=q, xi_cells=F.shape), N=N)
    if res.truncated:
        rep.flags.append("lattice_truncated")
    return rep


def hlp_net_sweep(f: GridFunction, p: float, q: float, Ns: Sequence[float], grid: HarnessGrid | None = None):
    return pmap(lambda n: hlp_net_ratio(f, p, q, n, grid), Ns)


# --- function families -----------------------------------------------------------

@dataclass(frozen=True)
class FamilySpec:
    """A function family: the same underlying function at every refinement level.

    Level L splits the base cells ``2**L`` ways on every axis.
    """

    name: str
    d: int = 1
    params: tuple = ()

    def get(self, key, default=None):
        return dict(self.params).get(key, default)

    def build(self, level: int) -> GridFunction:
        return FAMILIES[self.name](self, int(level))


def _split(bp: np.ndarray, k: int) -> np.ndarray:
    if k <= 1:
        return np.asarray(bp, dtype=float)
    t = np.linspace(0.0, 1.0, k + 1)[:-1]
    inner = (bp[:-1, None] + np.diff(bp)[:, None] * t[None, :]).ravel()
    return np.concatenate([inner, bp[-1:]])


def _tensor(vals1d: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(())
    for v in vals1d:
        out = np.multiply.outer(out, v)
    return out


def _fam_indicator(s: FamilySpec, level: int) -> GridFunction:
    a, b = float(s.get("a", 0.0)), float(s.get("b", 1.0))
    k = int(s.get("cells", 1)) * 2 ** level
    bp = np.linspace(a, b, k + 1)
    return make_grid_function([bp] * s.d, np.ones((k,) * s.d))


def _fam_gaussian(s: FamilySpec, level: int) -> GridFunction:
    from scipy.special import erf

    L = float(s.get("L", 6.0))
    k = int(s.get("cells", 24)) * 2 ** level
    bp = np.linspace(-L, L, k + 1)
    c = math.sqrt(math.pi / 2)
    avg = c * np.diff(erf(bp / math.sqrt(2))) / np.diff(bp)
    return make_grid_function([bp] * s.d, _tensor([avg] * s.d))


def _fam_hat(s: FamilySpec, level: int) -> GridFunction:
    k = int(s.get("cells", 4)) * 2 ** level
    bp = np.linspace(-1.0, 1.0, 2 * (k // 2) + 1 if k > 1 else 3)
    mid = 0.5 * (bp[:-1] + bp[1:])
    return make_grid_function([bp] * s.d, _tensor([1 - np.abs(mid)] * s.d))


def _fam_random(s: FamilySpec, level: int) -> GridFunction:
    rng = np.random.default_rng(int(s.get("seed", 0)))
    n = int(s.get("cells", 6))
    lo, hi = float(s.get("a", -1.0)), float(s.get("b", 1.0))
    base = [np.linspace(lo, hi, n + 1) for _ in range(s.d)]
    vals = rng.uniform(0.0, 1.0, (n,) * s.d)
    if s.get("signed", False) in (True, "1", "true", "yes"):
        vals = vals - 0.5
    k = 2 ** level
    axes = [_split(b, k) for b in base]
    for i in range(s.d):
        vals = np.repeat(vals, k, axis=i)
    return make_grid_function(axes, vals)


def _fam_zero(s: FamilySpec, level: int) -> GridFunction:
    k = 2 ** level
    return make_grid_function([np.linspace(0.0, 1.0, k + 1)] * s.d, np.zeros((k,) * s.d))


def _fam_signed(s: FamilySpec, level: int) -> GridFunction:
    n = int(s.get("cells", 4))
    k = 2 ** level
    bp = _split(np.arange(n + 1, dtype=float) + 1.0, k)
    vals = np.repeat((-1.0) ** np.arange(n), k)
    if s.d != 1:
        raise GridError("the signed family is one-dimensional")
    return make_grid_function([bp], vals)


FAMILIES: dict[str, Callable[[FamilySpec, int], GridFunction]] = {
    "indicator": _fam_indicator,
    "gaussian": _fam_gaussian,
    "hat": _fam_hat,
    "random": _fam_random,
    "zero": _fam_zero,
    "signed": _fam_signed,
}


def refinement_sweep(
    kind: str,
    family: FamilySpec,
    levels: Sequence[int],
    params=None,
    eps=None,
    grid: HarnessGrid | None = None,
) -> list[InequalityReport]:
    """One report per refinement level; a level is flagged ``growing`` when its
    ratio exceeds the previous one by more than 25%."""
    if family.name not in FAMILIES:
        raise GridError(f"unknown family {family.name!r}")

    def one(level):
        rep = inequality_ratio(kind, family.build(level), params, eps, grid=grid)
        rep.level = int(level)
        return rep

    reports = pmap(one, list(levels))
    for a, b in zip(reports, reports[1:]):
        if math.isfinite(a.ratio) and math.isfinite(b.ratio) and b.ratio > GROWTH_LIMIT * a.ratio:
            b.flags.append("growing")
    return reports


def ratio_spread(reports: Sequence[InequalityReport]) -> float:
    """``max ratio / min ratio - 1`` over the reports."""
    r = np.array([x.ratio for x in reports], dtype=float)
    return float(r.max() / r.min() - 1.0)


# --- configuration -------------------------------------------------------------

def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GridError(f"config line {n}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


_FAMILY_KEYS = ("a", "b", "L", "cells", "seed", "signed")


def family_from_config(cfg: Mapping[str, str]) -> FamilySpec:
    name = cfg.get("family", "gaussian")
    d = int(cfg.get("d", "1"))
    params = tuple((k, _num(cfg[k])) for k in _FAMILY_KEYS if k in cfg)
    return FamilySpec(name, d, params)


def _num(s: str):
    try:
        v = float(Fraction(s)) if "/" in s else float(s)
    except ValueError:
        return s
    return int(v) if v.is_integer() and "." not in s and "e" not in s.lower() else v


def levels_from(value: str | int) -> list[int]:
    """``"4"`` means levels 0..3, ``"0,2,3"`` lists them."""
    s = str(value)
    if "," in s:
        return [int(x) for x in s.split(",") if x.strip()]
    return list(range(int(s)))


def params_from_config(cfg: Mapping[str, str]) -> dict:
    out = {}
    for k in ("p", "q", "r", "alpha", "beta"):
        if k in cfg:
            out[k] = float(Fraction(cfg[k])) if "/" in cfg[k] else float(cfg[k])
    return out


def grid_from_config(cfg: Mapping[str, str]) -> HarnessGrid:
    g = HarnessGrid()
    if "xi_extent" in cfg:
        g.xi_extent = float(cfg["xi_extent"])
    if "xi_cells" in cfg:
        g.xi_cells = int(cfg["xi_cells"])
    if "N" in cfg:
        g.N = float(cfg["N"])
    if "schedule" in cfg:
        g.schedule = tuple(float(x) for x in cfg["schedule"].split(","))
    if "tol" in cfg:
        g.tol = float(cfg["tol"])
    return g
