"""Command-line front end.

Each subcommand maps to one library call and writes CSV or JSON to
``--out`` (stdout by default).  Options can also come from an INI file given
with ``--config``; values on the command line win.  Exit status is 0 on
success, 1 on usage errors and 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import _io
from .baseline import limit_mass, sphere_subset_mass_simulation
from .experiments import (RunReport, TrialError, deloc_experiment, dist_tail, normal_vector_experiment,
                          opnorm_experiment, slope_estimate, smin_tail)
from .linalg import NumericalError, eigen_decompose, read_matrix, write_matrix
from .randgen import DISTRIBUTIONS, MatrixEnsemble, derive_stream, sample_matrix
from .structure import (CompressParams, LcdQuery, classify, compress_distance, lcd,
                        levy_concentration)

__all__ = ["main", "run"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# option parsing helpers
# --------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    """``a,b,c`` or ``lo:hi:count`` (geometric grid)."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid {text!r} must be lo:hi:count")
        lo, hi, cnt = float(parts[0]), float(parts[1]), int(parts[2])
        if not (0 < lo < hi and cnt >= 2):
            raise argparse.ArgumentTypeError(f"grid {text!r} needs 0 < lo < hi and count >= 2")
        return [float(x) for x in np.geomspace(lo, hi, cnt)]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def _cplx(text: str) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _vector(text: str) -> np.ndarray:
    vals = [_cplx(x) for x in str(text).split(",") if x.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("empty vector")
    arr = np.array(vals)
    return arr if np.any(arr.imag) or "j" in text or "i" in text else arr.real


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _common(p: argparse.ArgumentParser, trials: Optional[int]) -> None:
    p.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    if trials is not None:
        p.add_argument("--trials", type=int, default=trials, help=f"Monte Carlo trials (default {trials})")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; never changes output")
    p.add_argument("--config", default=None, help="INI file with option defaults")


def _ensemble_opts(p, rows: Optional[int] = None, cols: Optional[int] = None, square=False):
    p.add_argument("--field", choices=("real", "complex"), default="complex")
    p.add_argument("--dist", default="standard-gaussian",
                   help=f"entry law: one of {', '.join(DISTRIBUTIONS)}")
    if square:
        p.add_argument("--n", type=int, default=rows)
    else:
        p.add_argument("--rows", type=int, default=rows)
        p.add_argument("--cols", type=int, default=cols)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nogaps", description="Eigenvector delocalization experiments.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="emit a sampled matrix")
    _ensemble_opts(p, 4, 4)
    p.add_argument("--index", type=int, default=0, help="stream index within the seed")
    _common(p, None)

    p = sub.add_parser("spectrum", help="eigenpairs of a matrix file or a fresh draw")
    p.add_argument("--matrix", default=None, help="matrix file in the text format")
    _ensemble_opts(p, 10, square=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--vectors", action="store_true", help="also emit eigenvector entries")
    _common(p, None)

    p = sub.add_parser("deloc", help="worst eigenvector subset mass sweep")
    _ensemble_opts(p, 30, square=True)
    p.add_argument("--m", type=_ints, default=[3])
    _common(p, 100)

    p = sub.add_parser("smin-tail", help="smallest singular value tail curve")
    _ensemble_opts(p, 10, 10)
    p.add_argument("--lam", type=_cplx, default=0j)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--eps", type=_floats, default=_floats("0.05:0.5:16"))
    p.add_argument("--min-hits", type=int, default=20)
    p.add_argument("--report", default=None, help="write a JSON run report here")
    _common(p, 2000)

    p = sub.add_parser("dist-tail", help="distance to a random subspace tail curve")
    p.add_argument("--N", type=int, default=60)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--field", choices=("real", "complex"), default="complex")
    p.add_argument("--dist", default="standard-gaussian")
    p.add_argument("--eps", type=_floats, default=_floats("0.2:0.7:12"))
    p.add_argument("--min-hits", type=int, default=20)
    p.add_argument("--report", default=None, help="write a JSON run report here")
    _common(p, 2000)

    p = sub.add_parser("normal-vector", help="subset masses of kernel vectors")
    _ensemble_opts(p, 200, square=True)
    p.add_argument("--delta", type=_floats, default=[0.1, 0.2])
    _common(p, 20)

    p = sub.add_parser("lcd", help="least common denominator of a vector")
    p.add_argument("--vector", type=_vector, required=True, help="comma list; complex as 1+2j")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--r-max", type=float, default=10.0)
    p.add_argument("--grid-step", type=float, default=1e-2)
    p.add_argument("--refine-iters", type=int, default=40)
    _common(p, None)

    p = sub.add_parser("compress", help="distance to sparse vectors and class")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--vector", type=_vector)
    g.add_argument("--flat", type=int, help="use the flat unit vector of this dimension")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--rho", type=float, default=0.5)
    _common(p, None)

    p = sub.add_parser("levy", help="Levy concentration of a Rademacher or Gaussian sum")
    p.add_argument("--source", choices=("rademacher", "gaussian"), default="rademacher")
    p.add_argument("--terms", type=int, default=1, help="number of summed variables")
    p.add_argument("--eps", type=float, default=0.5)
    _common(p, 10_000)

    p = sub.add_parser("baseline", help="subset masses of uniform sphere vectors")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--field", choices=("real", "complex"), default="complex")
    _common(p, 50)

    p = sub.add_parser("quantile", help="limiting subset masses for a fraction delta")
    p.add_argument("--delta", type=float, required=True)
    _common(p, None)

    p = sub.add_parser("opnorm", help="operator norm distribution")
    _ensemble_opts(p, 200, square=True)
    p.add_argument("--quantile", type=float, default=0.999)
    _common(p, 100)
    return ap


# --------------------------------------------------------------------------
# config files
# --------------------------------------------------------------------------


def _config_path(argv: Sequence[str]) -> Optional[str]:
    for k, tok in enumerate(argv):
        if tok == "--config" and k + 1 < len(argv):
            return argv[k + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str], path_text: str) -> None:
    """Install defaults from an INI file on the chosen subparser.

    Keys may sit in any section (or none); explicit flags still win because
    they are parsed afterwards.
    """
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    choices = parser._subparsers._group_actions[0].choices
    if command not in choices:
        return  # let argparse report the missing or unknown command
    path = Path(path_text)
    if not path.is_file():
        raise UsageError(f"--config: no such file {path_text!r}")
    text = path.read_text()
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text if text.lstrip().startswith("[") else "[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"--config: {exc}") from None
    sub = choices[command]
    known = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    defaults = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            dest = key.replace("-", "_")
            if dest == "command":
                continue
            if dest not in known:
                raise UsageError(f"--config: unknown key {key!r} for {command}")
            action = known[dest]
            if isinstance(action, argparse._StoreTrueAction):
                defaults[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                try:
                    defaults[dest] = action.type(raw)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"--config: bad value for {key!r}: {exc}") from None
            else:
                defaults[dest] = raw
            action.required = False
            for group in sub._mutually_exclusive_groups:
                if action in group._group_actions:
                    group.required = False
    sub.set_defaults(**defaults)


# --------------------------------------------------------------------------
# command implementations
# --------------------------------------------------------------------------


def _positive(name: str, value) -> None:
    if value is None or value < 1:
        raise UsageError(f"{name} must be positive")


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _ensemble(args, rows, cols) -> MatrixEnsemble:
    return MatrixEnsemble(field=args.field, rows=rows, cols=cols, dist=args.dist)


def _square_ensemble(args) -> MatrixEnsemble:
    n = args.n
    _positive("n", n)
    return _ensemble(args, n, n)


def cmd_gen(args) -> str:
    ens = _ensemble(args, args.rows, args.cols)
    A = sample_matrix(ens, derive_stream(args.seed, args.index))
    return write_matrix(A, field=ens.field)


def cmd_spectrum(args) -> str:
    if args.matrix:
        A, _ = read_matrix(Path(args.matrix).read_text())
    else:
        A = sample_matrix(_square_ensemble(args), derive_stream(args.seed, 0))
    sp = eigen_decompose(A, tol=args.tol)
    f = _io.fmt_float
    lines = ["index,re,im,residual"]
    for k in range(len(sp)):
        lines.append(f"{k},{f(sp.values[k].real)},{f(sp.values[k].imag)},{f(sp.residuals[k])}")
    if args.vectors:
        lines.append("vector,coord,re,im")
        for k in range(len(sp)):
            for i, z in enumerate(sp.vectors[:, k]):
                lines.append(f"{k},{i},{f(z.real)},{f(z.imag)}")
    return "\n".join(lines) + "\n"


def cmd_deloc(args) -> str:
    _positive("trials", args.trials)
    ens = _square_ensemble(args)
    rep = deloc_experiment(args.n, ens, args.m, args.trials, args.seed, threads=args.threads)
    return rep.to_json()


def _tail_outputs(args, curve) -> str:
    try:
        fit = slope_estimate(curve, args.min_hits).as_dict()
    except ValueError as exc:
        fit = {"error": str(exc)}
    if args.report:
        metrics = {"eps": [float(e) for e in curve.eps_grid],
                   "hits": [int(h) for h in curve.hits],
                   "phat": [float(p) for p in curve.phat]}
        if curve.oracle is not None:
            metrics["oracle"] = [float(o) for o in curve.oracle]
        rep = RunReport(curve.config, args.seed, metrics, fit)
        Path(args.report).write_text(rep.to_json())
    return curve.to_csv()


def cmd_smin_tail(args) -> str:
    _positive("trials", args.trials)
    _positive("rows", args.rows)
    _positive("cols", args.cols)
    ens = _ensemble(args, args.rows, args.cols)
    curve = smin_tail(ens, args.lam, args.eps, args.trials, args.seed, M=args.M,
                      threads=args.threads)
    return _tail_outputs(args, curve)


def cmd_dist_tail(args) -> str:
    _positive("trials", args.trials)
    curve = dist_tail(args.N, args.m, args.trials, args.eps, args.seed, dist=args.dist,
                      field=args.field, threads=args.threads)
    return _tail_outputs(args, curve)


def cmd_normal_vector(args) -> str:
    _positive("trials", args.trials)
    ens = _square_ensemble(args)
    rep = normal_vector_experiment(args.n, ens, args.delta, args.trials, args.seed,
                                   threads=args.threads)
    return rep.to_json()


def cmd_lcd(args) -> str:
    q = LcdQuery(args.vector, alpha=args.alpha, gamma=args.gamma, r_max=args.r_max,
                 grid_step=args.grid_step, refine_iters=args.refine_iters)
    return _io.dumps(lcd(q).record()) + "\n"


def cmd_compress(args) -> str:
    x = np.full(args.flat, 1.0 / math.sqrt(args.flat)) if args.flat else args.vector
    x = x / np.linalg.norm(x)
    params = CompressParams(args.delta, args.rho)
    out = {"n": int(x.size), "delta": args.delta, "rho": args.rho,
           "distance": compress_distance(x, args.delta), "class": classify(x, params)}
    return _io.dumps(out) + "\n"


def cmd_levy(args) -> str:
    _positive("trials", args.trials)
    _positive("terms", args.terms)
    terms = args.terms

    def sampler(rng, size):
        if args.source == "rademacher":
            return np.sum(2.0 * rng.integers(0, 2, size=(size, terms)) - 1.0, axis=1)
        return np.sum(rng.standard_normal((size, terms)), axis=1)

    est = levy_concentration(sampler, args.eps, args.trials, derive_stream(args.seed, 0))
    out = {"source": args.source, "terms": terms, "eps": args.eps, "trials": args.trials,
           "master_seed": args.seed, "estimate": est.estimate, "upper_conf": est.upper_conf}
    return _io.dumps(out) + "\n"


def cmd_baseline(args) -> str:
    _positive("trials", args.trials)
    if args.m is None and args.delta is None:
        args.delta = 0.2
    res = sphere_subset_mass_simulation(args.n, args.field, args.trials, args.seed,
                                        m=args.m, delta=args.delta)
    out = {**res.summary(), "master_seed": args.seed}
    return _io.dumps(out) + "\n"


def cmd_quantile(args) -> str:
    d = args.delta
    out = {"delta": d, "limit_min": limit_mass(d, "min"), "limit_max": limit_mass(d, "max")}
    return _io.dumps(out) + "\n"


def cmd_opnorm(args) -> str:
    _positive("trials", args.trials)
    ens = _square_ensemble(args)
    rep = opnorm_experiment(args.n, ens, args.trials, args.seed, threads=args.threads,
                            quantile=args.quantile)
    return rep.to_json()


COMMANDS: dict[str, Callable] = {
    "gen": cmd_gen, "spectrum": cmd_spectrum, "deloc": cmd_deloc,
    "smin-tail": cmd_smin_tail, "dist-tail": cmd_dist_tail,
    "normal-vector": cmd_normal_vector, "lcd": cmd_lcd, "compress": cmd_compress,
    "levy": cmd_levy, "baseline": cmd_baseline, "quantile": cmd_quantile,
    "opnorm": cmd_opnorm,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Execute one subcommand; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        cfg = _config_path(argv)
        if cfg is not None:
            _apply_config(parser, argv, cfg)
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise UsageError("threads must be positive")
        t0 = time.perf_counter()
        text = COMMANDS[args.command](args)
        _emit(args, text)
        print(f"{args.command}: done in {time.perf_counter() - t0:.3f} s", file=sys.stderr)
        return 0
    except UsageError as exc:
        print(f"nogaps: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"nogaps: error: {exc}", file=sys.stderr)
        return 1
    except TrialError as exc:
        print(f"nogaps: numerical failure in trial {exc.trial} (seed {exc.seed}): {exc.cause}",
              file=sys.stderr)
        return 2
    except NumericalError as exc:
        seed = getattr(args, "seed", None)
        print(f"nogaps: numerical failure (trial 0, seed {seed}): {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
