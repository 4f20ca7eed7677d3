"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line with its runtime against the time budget;
the lines are printed together in the pytest terminal summary.
"""
import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
from scipy.special import erf

from ha_lab import atoms
from ha_lab import counterexamples as cx
from ha_lab import harness as h
from ha_lab.fourier import frequency_grid
from ha_lab.grid import indicator, lp_norm, make_grid_function
from ha_lab.hardy import all_masks, commute_check, hardy_eps, hardy_eval, t_epsilon
from ha_lab.netspace import doubling_check, hardy_tail_bound
from ha_lab.rearrange import hlp_pairing, iterative_rearrange

from _helpers import ACCEPTANCE_LINES, random_function


class Outcome:
    def __init__(self):
        self.ok = True
        self.detail = ""

    def check(self, cond, detail):
        self.ok = self.ok and bool(cond)
        self.detail = detail


@contextmanager
def criterion(n, title, budget):
    out = Outcome()
    t0 = time.perf_counter()
    try:
        yield out
    except Exception as e:
        out.ok = False
        out.detail = f"raised {type(e).__name__}: {e}"
        raise
    finally:
        dt = time.perf_counter() - t0
        ok = out.ok and dt < budget
        ACCEPTANCE_LINES.append(
            f"{'PASS' if ok else 'FAIL'} criterion {n}: {title} | {out.detail} | {dt:.2f}s of {budget:g}s"
        )
    assert out.ok, out.detail
    assert dt < budget, f"took {dt:.1f}s, budget {budget}s"


def _gaussian(cells, L=8.0):
    bp = np.linspace(-L, L, cells + 1)
    return make_grid_function([bp], math.sqrt(math.pi / 2) * np.diff(erf(bp / math.sqrt(2))) / np.diff(bp))


# 1 ------------------------------------------------------------------------------

def _avg_H(s, e):
    """Exact cell average of min(1, 1/t) on (s, e), 0 <= s < e."""
    a = min(e, 1.0) - s if s < 1 else 0.0
    b = math.log(e / max(s, 1.0)) if e > 1 else 0.0
    return (max(a, 0.0) + b) / (e - s)


def _avg_B(s, e):
    """Exact cell average of -ln t on (s, e) cut at 1."""
    if s >= 1:
        return 0.0
    top = min(e, 1.0)

    def prim(t):
        return 0.0 if t == 0 else t - t * math.log(t)

    return (prim(top) - prim(s)) / (e - s)


def test_closed_form_operators():
    with criterion(1, "H and B of chi_(0,1) in closed form", 1.0) as out:
        f = indicator([(0, 1)])
        t = np.concatenate([np.geomspace(1e-6, 1e3, 301), [0.5, 1.0, 2.0]])
        H = hardy_eval(f, "0", t).real
        B = hardy_eval(f, "1", t).real
        eH = np.max(np.abs(H - np.minimum(1.0, 1.0 / t)))
        eB = np.max(np.abs(B - np.where(t < 1, -np.log(t), 0.0)))
        # negative side: f(sign(t) x) vanishes there
        neg = np.max(np.abs(hardy_eval(f, "0", -t))) + np.max(np.abs(hardy_eval(f, "1", -t)))
        # grid form: exact cell averages of the same closed forms
        gH, gB = hardy_eps(f, "0"), hardy_eps(f, "1")
        errs = []
        for g, avg in ((gH, _avg_H), (gB, _avg_B)):
            b = g.axes[0].breakpoints
            pos = b[:-1] >= 0
            ref = np.array([avg(s, e) for s, e in zip(b[:-1][pos], b[1:][pos])])
            errs.append(np.max(np.abs(g.values.real[pos] - ref)))
            errs.append(float(np.max(np.abs(g.values[~pos]), initial=0.0)))
        worst = max(eH, eB, neg, *errs)
        out.check(worst < 1e-10, f"max error {worst:.2e} (pointwise H {eH:.1e}, B {eB:.1e}; grid {max(errs):.1e})")


# 2 ------------------------------------------------------------------------------

def test_atom_integral_ln2():
    with criterion(2, "int Ha = ln 2 for the +-1/2 atom", 1.0) as out:
        a = make_grid_function([(0, 1, 2)], [0.5, -0.5])
        val = hardy_eps(a, 0).integral().real
        out.check(abs(val - math.log(2)) < 1e-8, f"int Ha = {val:.12f}, error {abs(val - math.log(2)):.1e}")


# 3 ------------------------------------------------------------------------------

def test_commutation_identity():
    with criterion(3, "F(Hg) = B(g-hat) on a Gaussian", 30.0) as out:
        e1 = commute_check(_gaussian(800), frequency_grid(4.0, 400))[2]
        e2 = commute_check(_gaussian(1600), frequency_grid(4.0, 800))[2]
        out.check(e1 < 1e-3 and e2 < e1, f"max rel error {e1:.2e} -> {e2:.2e} under refinement")


# 4 ------------------------------------------------------------------------------

def test_equimeasurability_suite():
    with criterion(4, "rearrangement preserves L_p norms", 10.0) as out:
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(100):
            f = random_function(rng, int(rng.integers(1, 4)))
            g = iterative_rearrange(f)
            for p in (0.5, 1.0, 2.0, 4.0):
                a, b = lp_norm(f, p), lp_norm(g, p)
                worst = max(worst, abs(a - b) / a)
        out.check(worst < 1e-12, f"100 functions x 4 exponents, worst rel diff {worst:.1e}")


# 5 ------------------------------------------------------------------------------

def test_doubling_lemma():
    with criterion(5, "doubling lemma on 500 random trials", 30.0) as out:
        rng = np.random.default_rng(55)
        violations, worst = 0, 0.0
        for trial in range(500):
            d = 1 + trial % 2
            f = random_function(rng, d)
            t = rng.uniform(0.02, 4.0, d)
            box = []
            for i in range(d):
                w = rng.uniform(0.05, 1.0) * t[i]
                a = rng.uniform(f.axes[i].lo - w, f.axes[i].hi)
                box.append((a, a + w))
            lhs, rhs = doubling_check(f, box, t)  # rhs carries the 2^d factor
            if lhs > rhs * (1 + 1e-12):
                violations += 1
            if rhs > 0:
                worst = max(worst, lhs / rhs)
        out.check(violations == 0, f"{violations} violations, worst lhs/rhs {worst:.3f}")


# 6 ------------------------------------------------------------------------------

def test_tail_lemma():
    with criterion(6, "dyadic-shell bound for H_eps f", 60.0) as out:
        rng = np.random.default_rng(66)
        violations, checks, worst = 0, 0, 0.0
        for n in range(20):
            d = 1 + n % 2
            f = random_function(rng, d, signed=False)
            for m in all_masks(d):
                for k in np.ndindex(*(6,) * d):
                    kk = [int(x) - 3 for x in k]
                    lhs, rhs = hardy_tail_bound(f, m, kk, samples=9 if d == 2 else 33)
                    checks += 1
                    if lhs > rhs:
                        violations += 1
                    if rhs > 0:
                        worst = max(worst, lhs / rhs)
        out.check(violations == 0, f"{checks} shell checks, {violations} violations, worst lhs/rhs {worst:.3f}")


# 7 ------------------------------------------------------------------------------

NET_FUNCTIONS = {
    "gaussian": h.FamilySpec("gaussian", 1),
    "gaussian 2-D": h.FamilySpec("gaussian", 2, (("L", 3.0), ("cells", 8))),
    "indicator": h.FamilySpec("indicator", 1),
    "hat": h.FamilySpec("hat", 1),
    "random": h.FamilySpec("random", 1, (("seed", 0),)),
}


def test_net_space_n_stability():
    with criterion(7, "transform net norm vs Lorentz norm, N-stability", 120.0) as out:
        spreads = {}
        for name, fam in NET_FUNCTIONS.items():
            f = fam.build(0)
            for p in (1.5, 2.0, 3.0):
                reps = h.hlp_net_sweep(f, p, p, [2.0, 4.0, 8.0, 16.0])
                assert all(not r.unreliable for r in reps)
                spreads[(name, p)] = h.ratio_spread(reps)
        key = max(spreads, key=spreads.get)
        out.check(spreads[key] < 0.25, f"15 cases, max spread {spreads[key]:.3f} ({key[0]}, p={key[1]})")


# 8 ------------------------------------------------------------------------------

T2_FAMILIES = [
    (h.FamilySpec("indicator", 1), ("0", "1")),
    (h.FamilySpec("gaussian", 1), ("0", "1")),
    (h.FamilySpec("hat", 1), ("0", "1")),
    (h.FamilySpec("random", 1, (("seed", 3),)), ("0", "1")),
    (h.FamilySpec("gaussian", 2, (("L", 4.0), ("cells", 16))), ("00", "11", "01")),
]


def test_diagonal_ratio_stability():
    with criterion(8, "thm2/thm3 diagonal ratios stable, T_eps gaps converge", 300.0) as out:
        worst, where, bad_flags = 0.0, None, []
        for kind, rs in (("thm2_diag", (3, 4)), ("thm3_diag", (1.5, 4))):
            for r in rs:
                for fam, masks in T2_FAMILIES:
                    for eps in masks:
                        reps = h.refinement_sweep(kind, fam, [0, 1, 2], {"r": r}, eps)
                        s = h.ratio_spread(reps)
                        if s > worst:
                            worst, where = s, (kind, r, fam.name, fam.d, eps)
                        bad_flags += [(kind, r, fam.name, eps, rep.flags) for rep in reps if rep.flags]
        # T_eps gaps: nonincreasing, and zero once Q_N covers the support
        gaps_ok = True
        for f, sched, first_full in (
            (indicator([(0, 1)]), [1, 2, 4, 8, 16], 2),
            (h.FamilySpec("gaussian", 1).build(0), [2, 4, 8, 16, 32], 16),
            (h.FamilySpec("gaussian", 2, (("L", 4.0), ("cells", 16))).build(0), [2, 4, 8, 16], 8),
        ):
            for eps in all_masks(f.d):
                _, rep = t_epsilon(f, eps, sched, frequency_grid(16.0, 256 if f.d == 1 else 48, f.d))
                g = rep.gaps
                mono = all(b <= a for a, b in zip(g, g[1:]))
                after = [gap for N, gap in zip(sched[1:], g) if sched[sched.index(N) - 1] >= first_full]
                gaps_ok = gaps_ok and mono and all(x < rep.tol for x in after) and rep.converged
        out.check(
            worst < 0.25 and not bad_flags and gaps_ok,
            f"max spread {worst:.3f} at {where}; flags {bad_flags or 'none'}; T_eps gaps ok={gaps_ok}",
        )


# 9 ------------------------------------------------------------------------------

def test_hlp_pairing():
    with criterion(9, "HLP pairing on 1000 monotone pairs", 10.0) as out:
        rng = np.random.default_rng(99)
        violations, worst = 0, 0.0
        for _ in range(1000):
            n = int(rng.integers(2, 12))
            bp = np.unique(np.round(rng.uniform(0.0, 4.0, n + 1), 6))
            k = bp.size - 1
            g = rng.uniform(0.0, 1.0, k)
            lo = int(rng.integers(0, k))
            hi = int(rng.integers(lo + 1, k + 1))
            phi = np.zeros(k)
            seg = np.sort(rng.uniform(0.1, 2.0, hi - lo))
            phi[lo:hi] = seg if rng.uniform() < 0.5 else seg[::-1]
            lhs, rhs = hlp_pairing(make_grid_function([bp], g), make_grid_function([bp], phi))
            if lhs > rhs * (1 + 1e-12) + 1e-15:
                violations += 1
            if rhs > 0:
                worst = max(worst, lhs / rhs)
        out.check(violations == 0, f"{violations} violations, worst lhs/rhs {worst:.4f}")


# 10 -----------------------------------------------------------------------------

def test_atom_decay():
    with criterion(10, "atom decay slopes for F and H-F", 120.0) as out:
        rows = []
        for p in (Fraction(1), Fraction(2, 3)):
            for seed, iv in ((0, atoms.dyadic(1, 1)), (1, atoms.dyadic(-3, 2)), (2, atoms.dyadic(5, 3))):
                spec = atoms.AtomSpec(p, [iv])
                a = atoms.make_simple_atom(spec, seed)
                assert atoms.validate_atom(a, spec, tol=1e-10) == []
                for fn in (atoms.atom_decay_scan, atoms.hardy_variant_decay):
                    scan = fn(a, spec, range(2, 9))
                    rows.append((float(p), scan.operator, scan.slope, scan.predicted, scan.ok))
        worst = max(rows, key=lambda r: r[2] - r[3])
        out.check(
            all(r[4] for r in rows),
            f"{len(rows)} scans; tightest slope {worst[2]:.4f} vs predicted {worst[3]:.4f} (p={worst[0]:.3g}, {worst[1]})",
        )


# 11 -----------------------------------------------------------------------------

def test_reverse_hardy_counterexample():
    with criterion(11, "reverse-Hardy I1 = 1, I2 grows by sqrt 2 per step", 30.0) as out:
        rows = cx.reverse_hardy_scan(0.5, range(1, 9))
        I1s = [cx.reverse_hardy_pair(cx.StepSequenceSpec("reverse_hardy", 0.5, n))[0] for n in range(1, 9)]
        ratios = np.exp(np.diff([r[2] for r in rows]))
        target = 2 ** 0.5
        dev = float(np.max(np.abs(ratios / target - 1)))
        out.check(
            all(x == 1.0 for x in I1s) and dev < 0.20,
            f"I1 = 1 for n=1..8; per-step ratios {ratios.min():.3f}..{ratios.max():.3f}, max dev {dev:.1%}",
        )


# 12 -----------------------------------------------------------------------------

def test_signed_counterexample():
    with criterion(12, "signed step function: I1 ~ ln N, I2 ~ 1", 30.0) as out:
        Ns = (16, 64, 256)
        pairs = [cx.signed_hardy_pair(0.5, N) for N in Ns]
        c = np.array([I1 / math.log(N) for (I1, _), N in zip(pairs, Ns)])
        I2 = np.array([I2 for _, I2 in pairs])
        dev = float(np.max(np.abs(c / c.mean() - 1)))
        spread = float(I2.max() / I2.min() - 1)
        out.check(dev < 0.15 and spread < 0.25, f"I1/lnN {np.round(c, 3).tolist()} (dev {dev:.1%}); I2 spread {spread:.1%}")


# 13 -----------------------------------------------------------------------------

def test_rudin_shapiro_construction():
    with criterion(13, "Rudin-Shapiro bound, Abel form, Cauchy vs divergence", 60.0) as out:
        rng = np.random.default_rng(13)
        t = rng.uniform(-math.pi, math.pi, 1000)
        k = np.arange(4097)
        viol = 0
        worst = 0.0
        for chunk in np.array_split(t, 10):
            P = np.abs(cx.rs_partial_sums(chunk, 4096)) / np.sqrt(k + 1)
            viol += int(np.sum(P > 5))
            worst = max(worst, float(P.max()))
        tg = np.linspace(-math.pi, math.pi, 513)
        reports = [cx.carleman_partial_f(n, tg)[1] for n in (64, 256, 1024, 4096)]
        abel = max(r.abel_gap for r in reports)
        cauchy = all(r.ok for r in reports) and all(b.bound < a.bound for a, b in zip(reports, reports[1:]))
        l2 = cx.divergence_scan(2.0)
        p15 = cx.divergence_scan(1.5)
        w3 = cx.divergence_scan(3.0, weighted=True)
        ok = viol == 0 and abel < 1e-10 and cauchy and l2.cauchy and p15.diverges and w3.diverges
        out.check(
            ok,
            f"max |P_k|/sqrt(k+1) {worst:.2f}, {viol} violations; Abel gap {abel:.1e}; "
            f"slopes L2 {l2.slope:.3f}, p=1.5 {p15.slope:.3f}, weighted p=3 {w3.slope:.3f}",
        )


# 14 -----------------------------------------------------------------------------

F = Fraction
INF = math.inf
TRUTH_TABLE = [
    # variant, r, q, beta, alpha, accepted
    ("thm2", 4, 4, F(1, 2), F(0), True),
    ("thm3", 4, 4, F(0), F(1, 2), True),
    ("pitt", 4, 2, F(5, 4), F(-1), False),
    ("pitt", 2, 2, F(0), F(0), True),
    ("pitt", 2, 4, F(-1, 4), F(1, 2), False),
    ("pitt", 2, 4, F(-1, 8), F(3, 8), True),
    ("pitt", 3, 3, F(1, 3), F(0), False),
    ("thm2", 3, 3, F(1, 3), F(0), True),
    ("thm3", 3, 3, F(1, 3), F(0), False),
    ("thm3", 3, 3, F(0), F(1, 3), True),
    ("thm3", 3, 3, F(-1, 6), F(1, 2), True),
    ("thm3", 3, 3, F(-1, 3), F(2, 3), False),
    ("thm2", 3, 6, F(1, 2), F(0), True),
    ("thm2", 3, 6, F(3, 5), F(-1, 10), False),
    ("thm2", 1, 2, F(0), F(-1, 2), False),
    ("thm2", 2, INF, F(0), F(1, 2), False),
    ("thm2", 4, 4, F(1, 2), F(1, 10), False),
    ("thm3", F(3, 2), F(3, 2), F(0), F(-1, 3), True),
    ("thm3", F(3, 2), 3, F(0), F(0), True),
    ("thm2", F(3, 2), 3, F(0), F(0), True),
    ("pitt", F(3, 2), 3, F(0), F(0), True),
    ("pitt", F(3, 2), F(3, 2), F(-1, 3), F(0), True),
    ("thm2", F(3, 2), F(3, 2), F(1, 3), F(-2, 3), False),
    ("thm3", 2, 2, F(1, 4), F(-1, 4), False),
    ("thm3", 2, 2, F(-1, 4), F(1, 4), True),
    ("pitt", 5, 5, F(-1, 10), F(7, 10), True),
    ("pitt", 5, 5, F(-1, 5), F(4, 5), False),
    ("thm2", 5, 10, F(7, 10), F(0), True),
    ("thm2", 5, 10, F(3, 4), F(-1, 20), False),
    ("thm3", 6, 4, F(0), F(7, 12), False),
]


def test_parameter_truth_table():
    with criterion(14, "parameter validation truth table", 1.0) as out:
        assert len(TRUTH_TABLE) == 30
        wrong = []
        for variant, r, q, beta, alpha, expected in TRUTH_TABLE:
            params = h.PittParams(1, float(r), float(q), float(alpha), float(beta), variant)
            got = not h.validate_params(params)
            if got != expected:
                wrong.append((variant, r, q, beta, alpha, expected))
        out.check(not wrong, f"30 tuples, {len(wrong)} misclassified {wrong or ''}")
