"""Explicit counterexamples: reverse-Hardy sharpness, the signed failure of the
reverse Hardy inequality, and the Rudin-Shapiro step function whose transform
is bounded and continuous yet has no L_p control for p < 2.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import hyp2f1, roots_jacobi

from .grid import GridFunction, make_grid_function, power_integral

_JACOBI_NODES = 48

# sup_k a_k (k+1)^{3/2} ln^2(k+2) over k < 2^20, rounded up and frozen
# (see calibrate_carleman_constant)
CARLEMAN_C = 2.0


# --- reverse Hardy -------------------------------------------------------------

@dataclass(frozen=True)
class StepSequenceSpec:
    """Parameters of the step-sequence counterexamples.

    ``reverse_hardy`` uses ``g = a_n`` on ``(b_n, b_n + d_n)`` with
    ``b_n = b_base^n`` and ``d_n = d_base^n``; ``signed`` uses alternating
    blocks with ``a_n = n^{(1-p)/p}`` for ``n < N``.
    """

    mode: str
    p: float
    n: int
    b_base: float = 4.0
    d_base: float = 2.0

    def __post_init__(self):
        if self.mode == "reverse_hardy":
            if not 0 < self.p <= 1:
                raise ValueError("reverse_hardy needs 0 < p <= 1")
            if not self.b_base > self.d_base > 1:
                raise ValueError("need b_base > d_base > 1 so that b_n/d_n grows")
        elif self.mode == "signed":
            if not 0 < self.p < 1:
                raise ValueError("signed needs 0 < p < 1")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.n < 1:
            raise ValueError("index must be at least 1")


def _log_int_power(log_b: float, log_d: float, s: float) -> float:
    """``log int_b^{b+d} t^s dt`` from ``log b`` and ``log d``.

    Works when ``b + d`` is not representable (``d/b`` below machine epsilon)
    or ``b`` itself overflows.
    """
    lr = log_d - log_b
    r = math.exp(lr)
    e = s + 1.0
    if lr < -30:
        # r may underflow: the integral is b^e r (1 + (e-1) r/2 + O(r^2))
        return e * log_b + lr + math.log1p(0.5 * (e - 1.0) * r)
    if e == 0:
        return math.log(math.log1p(r))
    return e * log_b + math.log(math.expm1(e * math.log1p(r)) / e)


def _jacobi_01(p: float, fn) -> float:
    """``int_0^1 s^p fn(s) ds`` by Gauss-Jacobi."""
    x, w = roots_jacobi(_JACOBI_NODES, 0.0, p)
    s = 0.5 * (x + 1.0)
    return float(np.sum(w * fn(s))) * 0.5 ** (p + 1)


def _reverse_hardy_logs(p: float, log_b: float, log_d: float) -> tuple[float, float]:
    log_ap = -_log_int_power(log_b, log_d, p - 2)
    r = math.exp(log_d - log_b)
    # int_0^d u^p (b+u)^{-2} du = d^{p+1} b^{-2} int_0^1 s^p (1 + (d/b) s)^{-2} ds
    inner = _jacobi_01(p, lambda s: (1.0 + r * s) ** -2)
    log_block = (p + 1) * log_d - 2 * log_b + math.log(inner)
    log_after = p * log_d - (log_b + math.log1p(r))
    return log_ap, float(log_ap + np.logaddexp(log_block, log_after))


def reverse_hardy_integrals(p: float, b: float, d: float) -> tuple[float, float]:
    """``(log a^p, log I2)`` for ``g = a`` on ``(b, b+d)`` with ``a^p`` normalising I1 to 1.

    ``Hg`` is ``a (t-b)/t`` on the block and ``a d/t`` after it, so
    ``I2 = a^p [int_0^d u^p (b+u)^{-2} du + d^p/(b+d)]``.
    """
    return _reverse_hardy_logs(p, math.log(b), math.log(d))


def reverse_hardy_block_oracle(p: float, b: float, d: float) -> float:
    """Hypergeometric closed form of ``int_0^d u^p (b+u)^{-2} du``."""
    return d ** (p + 1) / ((p + 1) * b * b) * hyp2f1(2.0, p + 1.0, p + 2.0, -d / b)


def reverse_hardy_pair(spec: StepSequenceSpec) -> tuple[float, float]:
    """``(I1, I2)`` of the reverse-Hardy counterexample at index ``spec.n``.

    I1 is 1 by the choice of ``a_n``.  Raises OverflowError only if I2 itself
    is not representable; use :func:`reverse_hardy_integrals` for logs.
    """
    if spec.mode != "reverse_hardy":
        raise ValueError("spec.mode must be reverse_hardy")
    _, log_I2 = _reverse_hardy_logs(spec.p, spec.n * math.log(spec.b_base), spec.n * math.log(spec.d_base))
    return 1.0, math.exp(log_I2)


def reverse_hardy_scan(p: float, ns, b_base: float = 4.0, d_base: float = 2.0) -> list[tuple[int, float, float]]:
    """Rows ``(n, I1, log I2)``."""
    out = []
    for n in ns:
        _, log_I2 = _reverse_hardy_logs(p, n * math.log(b_base), n * math.log(d_base))
        out.append((int(n), 1.0, log_I2))
    return out


# --- signed counterexample -----------------------------------------------------

def _signed_amplitudes(p: float, N: int) -> np.ndarray:
    n = np.arange(1, N, dtype=float)
    return n ** ((1.0 - p) / p)


def signed_g(p: float, N: int) -> GridFunction:
    """0 on (0,1), ``a_n`` on ``(2n-1, 2n)``, ``-a_n`` on ``(2n, 2n+1)`` for n < N."""
    a = _signed_amplitudes(p, N)
    if a.size == 0:
        return make_grid_function([[0.0, 1.0]], [0.0])
    vals = np.concatenate([[0.0], np.column_stack([a, -a]).ravel()])
    return make_grid_function([np.arange(0.0, 2 * N)], vals)


def signed_hardy_pair(p: float, N: int) -> tuple[float, float]:
    """``(I1, I2)`` for the signed step function, in closed form.

    ``int_0^x g`` vanishes at every odd integer, so on ``(2n-1, 2n+1)`` it is a
    tent of height ``a_n`` and ``Hg`` is the tent divided by t.
    """
    if not 0 < p < 1:
        raise ValueError("signed needs 0 < p < 1")
    a = _signed_amplitudes(p, N)
    if a.size == 0:
        return 0.0, 0.0
    n = np.arange(1, N, dtype=float)
    ap = a ** p
    I1 = float(np.sum(ap * power_integral(2 * n - 1, 2 * n + 1, p - 2)))
    # int_0^1 u^p (c +- u)^{-2} du = 2F1(2, p+1; p+2; -+1/c) / ((p+1) c^2)
    up = hyp2f1(2.0, p + 1.0, p + 2.0, -1.0 / (2 * n - 1)) / ((p + 1) * (2 * n - 1) ** 2)
    down = hyp2f1(2.0, p + 1.0, p + 2.0, 1.0 / (2 * n + 1)) / ((p + 1) * (2 * n + 1) ** 2)
    I2 = float(np.sum(ap * (up + down)))
    return I1, I2


def pairs_to_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


# --- Rudin-Shapiro and the Carleman-type function -------------------------------

def rudin_shapiro(n: int) -> int:
    """``(-1)^{number of '11' blocks in binary n}`` (overlapping blocks count)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return -1 if bin(n & (n >> 1)).count("1") % 2 else 1


def rudin_shapiro_recursive(n: int) -> int:
    """Same sequence via ``e_{2n} = e_n``, ``e_{2n+1} = (-1)^n e_n``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    sign = 1
    while n > 0:
        if n & 1:
            m = n >> 1
            if m & 1:
                sign = -sign
            n = m
        else:
            n >>= 1
    return sign


@lru_cache(maxsize=8)
def _rs_array(n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=np.int64)
    x = k & (k >> 1)
    par = np.zeros_like(x)
    while np.any(x):
        par ^= x & 1
        x >>= 1
    out = 1 - 2 * par
    out.flags.writeable = False
    return out


def rudin_shapiro_array(n_max: int) -> np.ndarray:
    """``e_0 .. e_{n_max}`` as an int array."""
    return _rs_array(int(n_max))


def carleman_weights(n_max: int) -> np.ndarray:
    """``|c_n| = 1 / (sqrt(n+1) ln^2(n+2))``."""
    n = np.arange(n_max + 1, dtype=float)
    return 1.0 / (np.sqrt(n + 1) * np.log(n + 2) ** 2)


@dataclass
class CarlemanState:
    n_max: int
    signs: np.ndarray = field(init=False, repr=False)
    coeffs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be nonnegative")
        self.signs = rudin_shapiro_array(self.n_max)
        self.coeffs = self.signs * carleman_weights(self.n_max)


def carleman_g(n_max: int) -> GridFunction:
    """Step function ``c_n`` on ``(n - 1/2, n + 1/2)`` for n = 0..n_max."""
    st = CarlemanState(n_max)
    return make_grid_function([np.arange(n_max + 2) - 0.5], st.coeffs)


def rs_partial_sums(t, k_max: int) -> np.ndarray:
    """``P_k(t) = sum_{r<=k} e_r exp(-irt)``, shape (len(t), k_max+1)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    eps = rudin_shapiro_array(k_max)
    r = np.arange(k_max + 1)
    return np.cumsum(eps[None, :] * np.exp(-1j * np.outer(t, r)), axis=1)


def carleman_f_direct(n: int, t) -> np.ndarray:
    """``f_n(t) = sum_{k<=n} c_k exp(-ikt)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    c = CarlemanState(n).coeffs
    return np.exp(-1j * np.outer(t, np.arange(n + 1))) @ c


def carleman_f_abel(n: int, t) -> np.ndarray:
    """``f_n`` after summation by parts: ``sum_{k<n} a_k P_k + w_n P_n``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    w = carleman_weights(n + 1)
    a = w[:-1] - w[1:]  # a_k for k = 0..n
    P = rs_partial_sums(t, n)
    return P[:, :n] @ a[:n] + w[n] * P[:, n]


def calibrate_carleman_constant(k_max: int = 1 << 20) -> float:
    """``max_k a_k (k+1)^{3/2} ln^2(k+2)`` over k <= k_max."""
    w = carleman_weights(k_max + 1)
    a = w[:-1] - w[1:]
    k = np.arange(k_max + 1, dtype=float)
    return float(np.max(a * (k + 1) ** 1.5 * np.log(k + 2) ** 2))


def _log_tail(n: int) -> float:
    """``sum_{k>=n} 1/((k+1) ln^2(k+2))``: explicit to 2^22, then the integral bound."""
    top = max(n, 1 << 22)
    k = np.arange(n, top, dtype=float)
    s = float(np.sum(1.0 / ((k + 1) * np.log(k + 2) ** 2)))
    # for x >= top: 1/((x+1) ln^2(x+2)) <= 1/((x+1) ln^2(x+1)), integral from top
    return s + 1.0 / math.log(top)


def carleman_tail_bound(n: int, m: int, C: float = CARLEMAN_C) -> float:
    """Bound on ``sup_t |f_m - f_n|`` (n < m) from ``|P_k| <= 5 sqrt(k+1)``.

    ``f_m - f_n = sum_{n<=k<m} a_k P_k + w_m P_m - w_n P_n``; the sum is
    bounded by the full tail ``sum_{k>=n} 5 C/((k+1) ln^2(k+2))``.
    """
    w = carleman_weights(m)
    return 5.0 * (C * _log_tail(n) + w[m] * math.sqrt(m + 1) + w[n] * math.sqrt(n + 1))


@dataclass
class CauchyReport:
    n: int
    abel_gap: float
    sup_diff: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.abel_gap < 1e-10 and self.sup_diff <= self.bound


def carleman_partial_f(n: int, tgrid) -> tuple[np.ndarray, CauchyReport]:
    """``f_n`` on ``tgrid`` with the direct/Abel agreement and the Cauchy check
    ``sup_t |f_{2n} - f_n|`` against :func:`carleman_tail_bound`."""
    t = np.atleast_1d(np.asarray(tgrid, dtype=float))
    f = carleman_f_direct(n, t)
    if n == 0:
        return f, CauchyReport(0, 0.0, 0.0, math.inf)
    gap = float(np.max(np.abs(f - carleman_f_abel(n, t))))
    diff = float(np.max(np.abs(carleman_f_direct(2 * n, t) - f)))
    return f, CauchyReport(n, gap, diff, carleman_tail_bound(n, 2 * n))


def carleman_h(t) -> np.ndarray:
    """``2 sin(t/2)/t``, the transform of the unit cell centred at 0."""
    t = np.asarray(t, dtype=float)
    return np.sinc(t / (2 * np.pi))


@dataclass
class DivergenceScan:
    """Dyadic block sums ``B_k = sum_{2^k <= n < 2^{k+1}}`` of a series.

    ``slope`` is the fitted power exponent s in ``log B_k ~ s k ln 2 - m ln k + c``.
    A raw log-log slope of the partial sums is useless here: the logarithmic
    factors hide the power growth until astronomically large n.
    """

    label: str
    k: np.ndarray
    blocks: np.ndarray
    partial: np.ndarray
    slope: float
    log_power: float

    @property
    def diverges(self) -> bool:
        return self.slope > 0.05

    @property
    def cauchy(self) -> bool:
        """Block sums eventually decrease and the slope vanishes."""
        return abs(self.slope) < 0.05 and bool(np.all(np.diff(self.blocks[-4:]) < 0))

    def to_csv(self) -> str:
        rows = [(1 << int(k), float(s), self.slope) for k, s in zip(self.k, self.partial)]
        return pairs_to_csv(rows, ["index", "partial_sum", "fitted_slope"])


def _carleman_terms(n: np.ndarray, p: float, weighted: bool) -> np.ndarray:
    w = (1.0 / (np.sqrt(n + 1) * np.log(n + 2) ** 2)) ** p
    if weighted:
        w = w * power_integral(np.maximum(n - 0.5, 0.0), n + 0.5, p - 2) * np.where(n == 0, 2.0, 1.0)
    return w


def carleman_partial_sums(p: float, n_max: int, weighted: bool = False) -> np.ndarray:
    """Partial sums of ``int |g|^p`` (or ``int |x|^{p-2} |g|^p``) cell by cell."""
    return np.cumsum(_carleman_terms(np.arange(n_max + 1, dtype=float), p, weighted))


def divergence_scan(p: float, weighted: bool = False, k_lo: int = 6, k_hi: int = 24) -> DivergenceScan:
    """Block sums for ``k_lo <= k <= k_hi`` and the fitted power exponent."""
    head = float(np.sum(_carleman_terms(np.arange(1 << k_lo, dtype=float), p, weighted)))
    ks = np.arange(k_lo, k_hi + 1)
    blocks = []
    for k in ks:
        total = 0.0
        for lo in range(1 << k, 1 << (k + 1), 1 << 22):
            n = np.arange(lo, min(lo + (1 << 22), 1 << (k + 1)), dtype=float)
            total += float(np.sum(_carleman_terms(n, p, weighted)))
        blocks.append(total)
    blocks = np.array(blocks)
    X = np.column_stack([ks * math.log(2), -np.log(ks), np.ones(ks.size)])
    coef, *_ = np.linalg.lstsq(X, np.log(blocks), rcond=None)
    label = f"{'weighted ' if weighted else ''}p={p:g}"
    return DivergenceScan(label, ks, blocks, head + np.cumsum(blocks), float(coef[0]), float(coef[1]))
