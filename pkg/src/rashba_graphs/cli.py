"""Command-line driver: scans, sweeps and consistency checks with CSV/JSON output.

Every subcommand accepts ``--config FILE`` with ``key=value`` lines (keys are
flag names without the leading dashes); explicit flags win over the file.
Angles may be written as ``pi/2``, ``-pi/6``, ``3pi/4``, ``2*pi/3`` or decimals.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .edge_solver import EdgePotential, dirichlet_eigenvalues, fundamental_values, load_potential
from .errors import InvalidInputError
from .graph_core import parse_graph_file
from .susy_core import SusyBlock, susy_membership_pm_m, susy_spectrum
from .t3_lattice import (
    T3Params,
    T3Torus,
    assemble_t3_spectrum,
    butterfly_sweep,
    flatband_map,
    smallest_commensurate_N,
)
from .vertex_analysis import coupling_matrix, scan_spectrum

log = logging.getLogger("rashba_graphs")

_PI_TOKEN = re.compile(r"^\s*([+-]?)\s*(\d+(?:\.\d+)?)?\s*\*?\s*pi\s*(?:/\s*(\d+))?\s*$")


def parse_angle(text: str) -> float:
    """``pi/2`` -> 1.5707..., ``-3pi/4``, ``2*pi``, ``0.25``."""
    t = str(text).strip().lower()
    m = _PI_TOKEN.match(t)
    if m:
        sign = -1.0 if m.group(1) == "-" else 1.0
        num = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        den = int(m.group(3)) if m.group(3) else 1
        if den == 0:
            raise InvalidInputError(f"bad angle {text!r}")
        return sign * float(num / den) * math.pi
    try:
        val = float(t)
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse angle {text!r}") from exc
    if not math.isfinite(val):
        raise InvalidInputError(f"angle must be finite, got {text!r}")
    return val


def _finite(text: str) -> float:
    try:
        val = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not math.isfinite(val):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return val


def _angle(text: str) -> float:
    try:
        return parse_angle(text)
    except InvalidInputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _grid(text: str) -> int:
    n = int(text)
    if n < 2:
        raise argparse.ArgumentTypeError("grids need at least 2 points")
    return n


def _window(values) -> tuple[float, float]:
    lo, hi = values
    if not lo < hi:
        raise InvalidInputError(f"window must satisfy E_min < E_max, got [{lo}, {hi}]")
    return lo, hi


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    return str(v)


def _write_outputs(out: str | None, header, rows, formats, extra=None, plot: str | None = None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    text = buf.getvalue()
    payload = {"columns": list(header), "rows": [[_json_val(x) for x in r] for r in rows]}
    if extra:
        payload.update(extra)
    if out is None:
        if "csv" in formats:
            sys.stdout.write(text)
        if "json" in formats:
            sys.stdout.write(json.dumps(payload) + "\n")
        return
    base = Path(out)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    if "csv" in formats:
        base.with_suffix(".csv").write_text(text)
    if "json" in formats:
        base.with_suffix(".json").write_text(json.dumps(payload, indent=1) + "\n")
    if plot:
        base.with_suffix(".gp").write_text(plot.format(csv=base.with_suffix(".csv").name))


def _json_val(x):
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _complex_pairs(v: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v).ravel()]


# --------------------------------------------------------------------------
# commands


def _potential(args, length: float = 1.0) -> EdgePotential:
    if getattr(args, "potential", None):
        pot = load_potential(args.potential)
        if abs(pot.length - length) > 1e-9:
            raise InvalidInputError(f"potential grid ends at {pot.length}, edge length is {length}")
        return pot
    if getattr(args, "u0", 0.0):
        return EdgePotential.constant(args.u0, length)
    return EdgePotential.zero(length)


def cmd_edge_bands(args) -> int:
    pot = _potential(args, args.length)
    lo, hi = _window(args.window)
    E = np.linspace(lo, hi, args.samples)
    z = E + args.kr ** 2
    s, sp, c, cp = fundamental_values(pot, z)
    t = c + args.eps * s
    rows = [(e, a, b, cc, d, tt, abs(tt) <= 1.0) for e, a, b, cc, d, tt in zip(E, s, sp, c, cp, t)]
    dir_pts = dirichlet_eigenvalues(pot, args.kr, (lo, hi))
    plot = ("set datafile separator ','\nset xlabel 'E'\n"
            "plot '{csv}' every ::1 using 1:6 with lines title 't_eps(E)', 1 notitle, -1 notitle\n")
    _write_outputs(args.out, ("E", "s", "s_prime", "c", "c_prime", "t_eps", "in_band"), rows, args.formats,
                   {"dirichlet": dir_pts}, plot if args.gnuplot else None)
    return 0


def cmd_graph_scan(args) -> int:
    g = parse_graph_file(args.graph)
    res = scan_spectrum(g, coupling_matrix(g), _window(args.window), args.step, tol=args.tol)
    rows = [(E, gap, flag) for E, gap, flag in res.rows()]
    kernels = []
    from .vertex_analysis import spectral_condition
    for E in res.eigenvalues:
        chk = spectral_condition(g, coupling_matrix(g), E, tol=max(args.tol, 1e-8))
        kernels.append({"E": E, "kernel": [_complex_pairs(v) for v in chk.kernel_basis]})
    plot = ("set datafile separator ','\nset logscale y\nset xlabel 'E'\n"
            "plot '{csv}' every ::1 using 1:2 with lines title 'gap'\n")
    _write_outputs(args.out, ("E", "gap", "in_spectrum"), rows, args.formats,
                   {"eigenvalues": res.eigenvalues, "dirichlet_coincident": res.dirichlet_coincident,
                    "kernels": kernels}, plot if args.gnuplot else None)
    return 0


def _resolve_N(N, omega: float) -> int:
    if N == "auto":
        n = smallest_commensurate_N(omega, 48)
        if n is None:
            raise InvalidInputError(f"no commensurate torus with N <= 48 for omega={omega!r}")
        return n
    return int(N)


def _t3_params(args) -> T3Params:
    return T3Params(args.omega, args.kr, args.lam, args.mu, _potential(args, 1.0))


def cmd_t3_spectrum(args) -> int:
    params = _t3_params(args)
    torus = T3Torus(_resolve_N(args.N, args.omega))
    res = assemble_t3_spectrum(params, torus, _window(args.window))
    rows = res.rows()
    plot = ("set datafile separator ','\nset xlabel 'E'\nset yrange [-1:1]\n"
            "plot '{csv}' every ::1 using 1:(0):($2-$1):(0) with vectors nohead title 'spectrum'\n")
    _write_outputs(args.out, ("E_lo", "E_hi", "label", "source"), rows, args.formats,
                   {"N": torus.N, "kernel_dims": {"AAstar": res.kernel_dims[0], "AstarA": res.kernel_dims[1]}},
                   plot if args.gnuplot else None)
    return 0


def cmd_t3_butterfly(args) -> int:
    params = T3Params(0.0, args.kr, args.lam, args.mu, _potential(args, 1.0))
    pairs = []
    for p in range(args.omega_grid):
        omega = 2 * math.pi * p / args.omega_grid
        pairs.append((omega, _resolve_N(args.N, omega) if args.N == "auto" else int(args.N)))
    data = butterfly_sweep(params, pairs)
    for omega, N, msg in data.errors:
        log.warning("omega=%.12g N=%d skipped: %s", omega, N, msg)
    plot = ("set datafile separator ','\nset xlabel 'omega'\nset ylabel 'spec A*A'\n"
            "plot '{csv}' every ::1 using 1:4 with dots notitle\n")
    _write_outputs(args.out, data.header, data.rows, args.formats,
                   {"skipped": [[o, n] for o, n, _ in data.errors]}, plot if args.gnuplot else None)
    return 0


def cmd_t3_flatband_map(args) -> int:
    N = None if args.N == "auto" else int(args.N)
    fmap = flatband_map(args.omega_grid, args.kr_grid, N=N)
    for omega in fmap.skipped:
        log.warning("omega=%.12g skipped: no commensurate torus", omega)
    plot = ("set datafile separator ','\nset xlabel 'omega'\nset ylabel 'k_R'\n"
            "plot '{csv}' every ::1 using 1:2:4 with points palette pt 5 notitle\n")
    _write_outputs(args.out, fmap.header, fmap.rows, args.formats,
                   {"skipped": fmap.skipped}, plot if args.gnuplot else None)
    return 0


def cmd_susy_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    for i in range(args.random):
        p = int(rng.integers(1, args.max_dim + 1))
        q = int(rng.integers(1, args.max_dim + 1))
        A = rng.normal(size=(p, q)) + 1j * rng.normal(size=(p, q))
        m = float(rng.uniform(-3, 3))
        b = SusyBlock(A, m)
        ours = susy_spectrum(b)
        dense = np.linalg.eigvalsh(b.dense())
        dev = float(np.max(np.abs(ours - dense)))
        plus, minus = susy_membership_pm_m(b)
        rows.append((i, p, q, m, dev, plus, minus))
    worst = max((r[4] for r in rows), default=0.0)
    _write_outputs(args.out, ("trial", "p", "q", "m", "max_deviation", "plus_m_in", "minus_m_in"), rows,
                   args.formats, {"max_deviation": worst})
    print(f"susy-check: {len(rows)} trials, max deviation {worst:.3e}", file=sys.stderr)
    return 0 if worst <= 1e-9 else 1


# --------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; explicit flags override it")
    p.add_argument("--out", help="output path stem; CSV/JSON written next to it (default: stdout)")
    p.add_argument("--formats", default="csv", type=lambda s: set(s.split(",")),
                   help="comma list of csv,json")
    p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")


def _pot_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--potential", help="two-column 't value' file")
    p.add_argument("--u0", type=_finite, default=0.0, help="constant edge potential")


class _Parser(argparse.ArgumentParser):
    """Argument errors as a single ``error: ...`` line, exit status 2."""

    def error(self, message):
        self.exit(2, f"error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rashba-graphs", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("edge-bands", help="fundamental solutions and t_eps(E) on an energy grid")
    _common(p)
    _pot_flags(p)
    p.add_argument("--length", type=_finite, default=1.0)
    p.add_argument("--eps", type=_finite, default=0.0)
    p.add_argument("--kr", type=_angle, default=0.0)
    p.add_argument("--window", type=_finite, nargs=2, default=(0.0, 50.0))
    p.add_argument("--samples", type=_grid, default=1001)
    p.set_defaults(func=cmd_edge_bands)

    p = sub.add_parser("graph-scan", help="scan the vertex condition on a graph file")
    _common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--window", type=_finite, nargs=2, default=(0.0, 50.0))
    p.add_argument("--step", type=_finite, default=0.01)
    p.add_argument("--tol", type=_finite, default=1e-8)
    p.set_defaults(func=cmd_graph_scan)

    for name, func, help_ in (("t3-spectrum", cmd_t3_spectrum, "classified dice-lattice spectrum"),
                              ("t3-butterfly", cmd_t3_butterfly, "spec A*A over a flux grid")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        _pot_flags(p)
        p.add_argument("--kr", type=_angle, default=0.0)
        p.add_argument("--lambda", dest="lam", type=_finite, default=0.0)
        p.add_argument("--mu", type=_finite, default=0.0)
        p.add_argument("--N", default="auto", type=_torus_size)
        if name == "t3-spectrum":
            p.add_argument("--omega", type=_angle, default=math.pi / 2)
            p.add_argument("--window", type=_finite, nargs=2, default=(0.0, 40.0))
        else:
            p.add_argument("--omega-grid", type=_grid, default=24)
        p.set_defaults(func=func)

    p = sub.add_parser("t3-flatband-map", help="||A*A - 6|| over a (omega, k_R) grid")
    _common(p)
    p.add_argument("--omega-grid", type=_grid, default=24)
    p.add_argument("--kr-grid", type=_grid, default=24)
    p.add_argument("--N", default="auto", type=_torus_size)
    p.set_defaults(func=cmd_t3_flatband_map)

    p = sub.add_parser("susy-check", help="random SUSY block identity checks")
    _common(p)
    p.add_argument("--random", type=int, default=50)
    p.add_argument("--max-dim", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_susy_check)
    return ap


def _torus_size(text: str):
    if text == "auto":
        return "auto"
    try:
        n = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"N must be a positive integer or 'auto', got {text!r}") from exc
    if n < 1:
        raise argparse.ArgumentTypeError("N must be positive")
    return n


def _config_args(argv: list[str]) -> list[str]:
    """Expand ``--config FILE`` into flags placed before the explicit ones."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise InvalidInputError("--config needs a file")
    path = Path(argv[i + 1])
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
    rest = argv[:i] + argv[i + 2:]
    if not rest:
        raise InvalidInputError("missing command")
    cmd_pos = next((k for k, a in enumerate(rest) if not a.startswith("-")), None)
    if cmd_pos is None:
        raise InvalidInputError("missing command")
    given = {a.split("=", 1)[0] for a in rest if a.startswith("--")}
    injected: list[str] = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}: expected key=value, got {raw!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        flag = "--" + key.replace("_", "-") if key not in ("N", "lambda") else "--" + key
        if flag in given:
            continue
        if val.lower() in ("true", "yes") and key == "gnuplot":
            injected.append(flag)
        else:
            injected.extend([flag, *val.split()])
    return rest[:cmd_pos + 1] + injected + rest[cmd_pos + 1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _config_args(argv)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if hasattr(args, "formats"):
        bad = args.formats - {"csv", "json"}
        if bad:
            print(f"error: unknown format(s) {sorted(bad)}", file=sys.stderr)
            return 2
    try:
        return int(args.func(args))
    except (InvalidInputError, ValueError, OSError) as exc:
        print(f"error: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
