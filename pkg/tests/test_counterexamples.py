import math

import numpy as np
import pytest
from scipy.integrate import quad

from ha_lab import counterexamples as cx
from ha_lab import harness
from ha_lab.fourier import fourier_at
from ha_lab.grid import make_grid_function
from ha_lab.hardy import HardyGridOptions, hardy_eps


# --- reverse Hardy ---------------------------------------------------------------

def test_step_spec_validation():
    with pytest.raises(ValueError):
        cx.StepSequenceSpec("reverse_hardy", 1.5, 1)
    with pytest.raises(ValueError):
        cx.StepSequenceSpec("reverse_hardy", 0.5, 1, b_base=2.0, d_base=4.0)
    with pytest.raises(ValueError):
        cx.StepSequenceSpec("signed", 1.0, 1)
    with pytest.raises(ValueError):
        cx.StepSequenceSpec("other", 0.5, 1)
    with pytest.raises(ValueError):
        cx.StepSequenceSpec("signed", 0.5, 0)


@pytest.mark.parametrize("p", [0.25, 0.5, 1.0])
@pytest.mark.parametrize("b, d", [(4.0, 2.0), (16.0, 4.0), (1024.0, 32.0)])
def test_reverse_hardy_integrals_quadrature(p, b, d):
    log_ap, log_I2 = cx.reverse_hardy_integrals(p, b, d)
    ap = math.exp(log_ap)
    assert ap * quad(lambda t: t ** (p - 2), b, b + d)[0] == pytest.approx(1.0, rel=1e-10)
    # algebraic-weight quadrature resolves the u^p endpoint
    block = quad(lambda u: (b + u) ** -2, 0, d, weight="alg", wvar=(p, 0.0))[0]
    assert math.exp(log_I2) == pytest.approx(ap * (block + d ** p / (b + d)), rel=1e-8)
    assert block == pytest.approx(cx.reverse_hardy_block_oracle(p, b, d), rel=1e-8)


def test_reverse_hardy_matches_harness():
    # the grid pipeline on g = a on (4, 6) gives I1 = 1 and the same I2
    p = 0.5
    log_ap, log_I2 = cx.reverse_hardy_integrals(p, 4.0, 2.0)
    g = make_grid_function([[4.0, 6.0]], [math.exp(log_ap / p)])
    rep = harness.inequality_ratio("reverse_hardy", g, {"p": p})
    assert rep.lhs == pytest.approx(1.0, rel=1e-12)
    assert rep.rhs == pytest.approx(math.exp(log_I2), rel=1e-5)


def test_reverse_hardy_pair_and_scan():
    I1, I2 = cx.reverse_hardy_pair(cx.StepSequenceSpec("reverse_hardy", 0.5, 3))
    assert I1 == 1.0
    rows = cx.reverse_hardy_scan(0.5, [3])
    assert rows[0][:2] == (3, 1.0)
    assert math.log(I2) == pytest.approx(rows[0][2], rel=1e-14)
    # large indices stay finite in log form even where b + d rounds to b
    big = cx.reverse_hardy_scan(0.5, [100, 400, 2000])
    assert all(math.isfinite(r[2]) for r in big)
    # for d/b -> 0 the log grows by (1 - p) ln 2 per step
    slope = (big[2][2] - big[1][2]) / 1600
    assert slope == pytest.approx(0.5 * math.log(2), rel=1e-6)


# --- signed ----------------------------------------------------------------------

def test_signed_g_shape():
    g = cx.signed_g(0.5, 4)
    assert g.values.tolist() == [0.0, 1.0, -1.0, 2.0, -2.0, 3.0, -3.0]
    assert g.integral() == 0.0
    assert cx.signed_hardy_pair(0.5, 1) == (0.0, 0.0)


@pytest.mark.parametrize("p", [0.3, 0.5, 0.8])
def test_signed_pair_matches_grid(p):
    N = 12
    g = cx.signed_g(p, N)
    I1, I2 = cx.signed_hardy_pair(p, N)
    a = (p - 2.0) / p
    assert I1 == pytest.approx(harness.weighted_with_tail(g, a, p, root=False, decay_axes=False)[0], rel=1e-12)
    # Hg vanishes past the support because int g = 0; the grid integral of
    # |Hg|^p converges to the closed form as the output grid refines (slowly for
    # small p: |x|^p is not Lipschitz at the zeros of Hg)
    errs = []
    for rtol in (1e-6, 1e-8):
        Hg = hardy_eps(g, (0,), HardyGridOptions(rtol=rtol))
        grid_I2 = harness.weighted_with_tail(Hg, a, p, root=False, decay_axes=False)[0]
        errs.append(abs(grid_I2 / I2 - 1))
    assert errs[1] < errs[0] / 5 and errs[1] < 5e-5


def test_pairs_csv():
    text = cx.pairs_to_csv([(16, 0.5, 0.25)], ["N", "I1", "I2"])
    assert text == "N,I1,I2\n16,0.5,0.25\n"


# --- Rudin-Shapiro ---------------------------------------------------------------

def test_rudin_shapiro_prefix():
    known = [1, 1, 1, -1, 1, 1, -1, 1, 1, 1, 1, -1, -1, -1, 1, -1]
    assert [cx.rudin_shapiro(n) for n in range(16)] == known
    assert cx.rudin_shapiro_array(15).tolist() == known


def test_rudin_shapiro_recursion_agrees():
    arr = cx.rudin_shapiro_array(5000)
    assert all(cx.rudin_shapiro_recursive(n) == arr[n] for n in range(5001))
    with pytest.raises(ValueError):
        cx.rudin_shapiro(-1)


def test_rs_partial_sum_bound():
    rng = np.random.default_rng(0)
    t = rng.uniform(-math.pi, math.pi, 200)
    P = cx.rs_partial_sums(t, 2048)
    k = np.arange(2049)
    assert np.all(np.abs(P) <= 5 * np.sqrt(k + 1))
    # at t = 0 the partial sums are sums of signs, still within the bound
    assert np.all(np.abs(cx.rs_partial_sums([0.0], 2048)[0]) <= 5 * np.sqrt(k + 1))


def test_carleman_g_transform_factorises():
    n = 64
    g = cx.carleman_g(n)
    t = np.linspace(-3.0, 3.0, 41)
    direct = fourier_at(g, t[:, None])
    assert np.allclose(direct, cx.carleman_h(t) * cx.carleman_f_direct(n, t), atol=1e-13)


@pytest.mark.parametrize("n", [1, 17, 512])
def test_abel_form_matches_direct(n):
    t = np.linspace(-math.pi, math.pi, 101)
    assert np.max(np.abs(cx.carleman_f_abel(n, t) - cx.carleman_f_direct(n, t))) < 1e-10


def test_calibrated_constant_below_frozen():
    assert cx.calibrate_carleman_constant(1 << 16) <= cx.CARLEMAN_C


def test_cauchy_reports():
    t = np.linspace(-math.pi, math.pi, 257)
    prev = math.inf
    for n in (64, 256, 1024):
        f, rep = cx.carleman_partial_f(n, t)
        assert f.shape == t.shape
        assert rep.ok
        assert rep.bound < prev
        prev = rep.bound


def test_divergence_scans():
    l2 = cx.divergence_scan(2.0, k_hi=20)
    assert l2.cauchy and not l2.diverges
    p15 = cx.divergence_scan(1.5, k_hi=20)
    assert p15.diverges and p15.slope == pytest.approx(0.25, abs=0.05)
    w3 = cx.divergence_scan(3.0, weighted=True, k_hi=20)
    assert w3.diverges and w3.slope == pytest.approx(0.5, abs=0.05)
    assert np.all(np.diff(p15.partial) > 0)
    assert p15.to_csv().splitlines()[0] == "index,partial_sum,fitted_slope"


def test_partial_sums_match_terms():
    s = cx.carleman_partial_sums(2.0, 10)
    n = np.arange(11.0)
    assert np.allclose(s, np.cumsum(1.0 / ((n + 1) * np.log(n + 2) ** 4)), rtol=1e-14)
