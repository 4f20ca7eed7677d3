"""Command-line front end: ``ha-lab <subcommand> ...``, CSV on stdout or ``--out``.

Exit codes: 0 success, 2 invalid input or parameters, 3 flagged non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import atoms, counterexamples as cx, harness
from .fourier import frequency_grid, truncated_fourier
from .grid import GridError, WeightedNormSpec, grid_to_csv_text, lp_norm, read_grid_csv, weighted_integral
from .hardy import as_mask, hardy_eps, t_epsilon
from .netspace import default_lattice, net_norm, net_profile
from .rearrange import LorentzParams, lorentz_norm

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 2, 3


def _real(s: str) -> float:
    s = s.strip()
    if s in ("inf", "+inf", "infinity"):
        return math.inf
    return float(Fraction(s)) if "/" in s else float(s)


def _interval(s: str) -> tuple[float, float]:
    lo, hi = (_real(x) for x in s.split(","))
    return lo, hi


def _range(s: str) -> list[int]:
    """``"2:9"`` is 2..8; ``"2,4,6"`` lists values."""
    if ":" in s:
        a, b = s.split(":")
        return list(range(int(a), int(b)))
    return [int(x) for x in s.split(",")]


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- subcommands ---------------------------------------------------------------

def cmd_norms(a) -> int:
    f = read_grid_csv(a.input)
    rows = []
    for p in a.lp or []:
        rows.append(("lp", f"p={p!r}", lp_norm(f, p)))
    for p, q in a.lorentz or []:
        rows.append(("lorentz", f"p={p!r};q={q!r}", lorentz_norm(f, LorentzParams.uniform(f.d, p, q))))
    for p, q in a.net or []:
        res = net_norm(net_profile(f, default_lattice(f)), p, q)
        rows.append(("net", f"p={p!r};q={q!r}" + (";truncated" if res.truncated else ""), res.value))
    for e, p in a.weighted or []:
        val = weighted_integral(f, WeightedNormSpec.uniform(f.d, e, p)) ** (1.0 / p)
        rows.append(("weighted", f"exponent={e!r};p={p!r}", val))
    if not rows:
        raise GridError("ask for at least one norm (--lp, --lorentz, --net, --weighted)")
    _emit(_rows_csv(["norm", "params", "value"], rows), a.out)
    return EXIT_OK


def cmd_fourier(a) -> int:
    f = read_grid_csv(a.input)
    g = truncated_fourier(f, a.N, frequency_grid(a.extent, a.cells, f.d))
    _emit(grid_to_csv_text(g), a.out)
    return EXIT_OK


def cmd_hardy(a) -> int:
    f = read_grid_csv(a.input)
    eps = as_mask(a.eps, f.d)
    if a.schedule is None:
        _emit(grid_to_csv_text(hardy_eps(f, eps)), a.out)
        return EXIT_OK
    sched = [_real(x) for x in a.schedule.split(",")]
    g, rep = t_epsilon(f, eps, sched, frequency_grid(a.extent, a.cells, f.d), tol=a.tol)
    _emit(grid_to_csv_text(g), a.out)
    rows = [(n, gap) for n, gap in zip(rep.schedule[1:], rep.gaps)]
    text = _rows_csv(["N", "gap"], rows) + f"# converged={rep.converged} tail_estimate={rep.tail_estimate!r}\n"
    if a.report:
        Path(a.report).write_text(text, encoding="utf-8")
    else:
        sys.stderr.write(text)
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def cmd_verify(a) -> int:
    cfg = harness.parse_config(Path(a.config).read_text(encoding="utf-8"))
    kind = a.kind or cfg.get("kind")
    if kind is None:
        raise GridError("no inequality kind given (--kind or 'kind =' in the config)")
    levels = harness.levels_from(a.levels if a.levels is not None else cfg.get("levels", "3"))
    fam = harness.family_from_config(cfg)
    params = harness.params_from_config(cfg)
    eps = cfg.get("eps")
    if kind in ("pitt", "thm2", "thm3", "pitt_diag", "thm2_diag", "thm3_diag"):
        params = harness._pitt_from(kind, fam.build(0), params)
        bad = harness.validate_params(params) if not kind.endswith("_diag") else []
        if bad:
            raise harness.InvalidParams(bad)
    reports = harness.refinement_sweep(kind, fam, levels, params, eps, harness.grid_from_config(cfg))
    _emit(harness.reports_to_csv(reports), a.out)
    if any("not_converged" in r.flags for r in reports):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_atoms(a) -> int:
    spec = atoms.AtomSpec(_real(a.p), tuple(a.interval), tuple(a.A or ()), cells=a.cells)
    atom = atoms.make_simple_atom(spec, a.seed)
    if a.atom_out:
        Path(a.atom_out).write_text(grid_to_csv_text(atom), encoding="utf-8")
    scan = (atoms.hardy_variant_decay if a.operator == "HF" else atoms.atom_decay_scan)(atom, spec, _range(a.r), a.side)
    _emit(scan.to_csv(), a.out)
    return EXIT_OK


def cmd_counterexample(a) -> int:
    p = _real(a.p)
    if a.mode == "signed":
        if a.N is None:
            raise GridError("--mode signed needs --N")
        I1, I2 = cx.signed_hardy_pair(p, a.N)
        text = _rows_csv(["N", "I1", "I2"], [(a.N, I1, I2)])
    else:
        cx.StepSequenceSpec("reverse_hardy", p, max(a.n_max, 1), a.b_base, a.d_base)
        rows = cx.reverse_hardy_scan(p, range(1, a.n_max + 1), a.b_base, a.d_base)
        text = _rows_csv(["index", "I1", "log_I2"], rows)
    _emit(text, a.out)
    return EXIT_OK


def cmd_carleman(a) -> int:
    if a.what == "g":
        text = grid_to_csv_text(cx.carleman_g(a.n))
    elif a.what == "f":
        import numpy as np

        t = np.linspace(-math.pi, math.pi, a.samples)
        f, rep = cx.carleman_partial_f(a.n, t)
        text = _rows_csv(["t", "re", "im"], [(float(x), float(v.real), float(v.imag)) for x, v in zip(t, f)])
        text += f"# abel_gap={rep.abel_gap!r} sup_diff={rep.sup_diff!r} bound={float(rep.bound)!r}\n"
    else:
        scans = [cx.divergence_scan(2.0), cx.divergence_scan(1.5), cx.divergence_scan(3.0, weighted=True)]
        rows = [(s.label, int(1 << int(k)), float(v), s.slope) for s in scans for k, v in zip(s.k, s.partial)]
        text = _rows_csv(["series", "index", "partial_sum", "fitted_slope"], rows)
    _emit(text, a.out)
    return EXIT_OK


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ha-lab", description="Hardy-type operators, Fourier inequalities and counterexamples.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("norms", help="norms of a grid function CSV")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--lp", type=_real, action="append")
    s.add_argument("--lorentz", type=_real, nargs=2, action="append", metavar=("P", "Q"))
    s.add_argument("--net", type=_real, nargs=2, action="append", metavar=("P", "Q"))
    s.add_argument("--weighted", type=_real, nargs=2, action="append", metavar=("EXPONENT", "P"))
    s.add_argument("--out")
    s.set_defaults(func=cmd_norms)

    s = sub.add_parser("fourier", help="truncated Fourier transform on a frequency grid")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--N", type=_real, default=math.inf)
    s.add_argument("--extent", type=_real, default=16.0)
    s.add_argument("--cells", type=int, default=256)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fourier)

    s = sub.add_parser("hardy", help="H_eps of a grid function, or T_eps with --schedule")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--eps", default="0")
    s.add_argument("--schedule", help="comma-separated increasing N values")
    s.add_argument("--extent", type=_real, default=16.0)
    s.add_argument("--cells", type=int, default=256)
    s.add_argument("--tol", type=_real, default=1e-10)
    s.add_argument("--report", help="convergence report path (default stderr)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_hardy)

    s = sub.add_parser("verify", help="inequality sweeps from a key = value config file")
    s.add_argument("--config", required=True)
    s.add_argument("--kind", choices=harness.KINDS)
    s.add_argument("--levels")
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("atoms", help="random simple atom and its decay scan")
    s.add_argument("--p", required=True)
    s.add_argument("--interval", type=_interval, action="append", required=True, help="lo,hi (dyadic); repeat per moment axis")
    s.add_argument("--A", type=_interval, action="append", help="lo,hi of the remaining axes")
    s.add_argument("--cells", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--r", default="2:9")
    s.add_argument("--side", choices=("interior", "exterior"), default="interior")
    s.add_argument("--operator", choices=("F", "HF"), default="F")
    s.add_argument("--atom-out")
    s.add_argument("--out")
    s.set_defaults(func=cmd_atoms)

    s = sub.add_parser("counterexample", help="reverse-Hardy or signed step-sequence counterexample")
    s.add_argument("--mode", choices=("reverse_hardy", "signed"), required=True)
    s.add_argument("--p", required=True)
    s.add_argument("--N", type=int)
    s.add_argument("--n-max", type=int, default=8)
    s.add_argument("--b-base", type=_real, default=4.0)
    s.add_argument("--d-base", type=_real, default=2.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_counterexample)

    s = sub.add_parser("carleman", help="Rudin-Shapiro step function, partial transforms, divergence scans")
    s.add_argument("--what", choices=("g", "f", "divergence"), default="g")
    s.add_argument("--n", type=int, default=256)
    s.add_argument("--samples", type=int, default=257)
    s.add_argument("--out")
    s.set_defaults(func=cmd_carleman)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_INVALID
    try:
        return args.func(args)
    except (GridError, ValueError, OSError, KeyError) as e:
        sys.stderr.write(f"ha-lab {args.command}: {e}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
