"""Command-line front end.

Examples::

    python3 -m sparsevolterra solve set1a --adaptive
    python3 -m sparsevolterra solve --kernel "exp(y - x)" --rhs "x" --kind 1 --n 32
    python3 -m sparsevolterra convergence set2a --ns 32,64,128 --out results
    python3 -m sparsevolterra symbol --kernel "x - y"
    python3 -m sparsevolterra examples set1a set2a --out results
    python3 -m sparsevolterra dump-operator --kernel "x*y" --n 8

A problem comes from exactly one source: a catalog name, a ``--config`` file
or inline ``--kernel``/``--rhs`` flags.  Config files hold one ``key = value``
per line; ``#`` starts a comment.  Errors exit with status 1 and print
``error: <ErrorClass>: <message>`` on stderr; files written by the failed run
are removed.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import InputError, VolterraError
from .expr import parse_expression, to_function
from .kernels import KernelSpec
from .operators import Limits
from .problems import REFERENCE_N, builtin_problems, get_problem
from .solvers import METHODS, Kind, ProblemSpec, Truncation, assemble, solve, solve_fixed
from .symbol import fredholm_check

CONFIG_KEYS = (
    "problem", "kind", "limits", "kernel", "rhs", "exact", "n", "adaptive", "tol",
    "n_max", "grid", "method", "kernel_degree", "x_power",
)

EXAMPLE_NS = {
    "set1a": (8, 16, 32, 64, 128, 256),
    "set1b": (64, 128, 256, 512),
    "set2a": (32, 64, 128, 256, 512),
    "set2b": (32, 64, 128, 256, 512),
    "set2c": (32, 64, 128, 256, 512),
    "set3a": (4, 8, 12, 16),
    "set3b": (8, 12, 16, 20, 24),
    "set3c": (8, 12, 16, 20, 24),
}
DEFAULT_NS = (16, 32, 64, 128, 256)


# ---------------------------------------------------------------------------
# config and problem construction


def read_config(path):
    """Flat ``key = value`` file to a dict."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise InputError(f"cannot read config {path}: {e.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep or not key:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        if key not in CONFIG_KEYS:
            raise InputError(f"{path}:{lineno}: unknown key {key!r}")
        if key in out:
            raise InputError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise InputError(f"expected a boolean, got {text!r}")


def _int(text, name):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be an integer, got {text!r}") from None


def _float(text, name):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be a number, got {text!r}") from None


def _rhs_function(text):
    return to_function(parse_expression(text, variables=("x",)), variables=("x",))


def _from_settings(s, kind_default):
    if "problem" in s:
        extra = set(s) & {"kind", "limits", "kernel", "rhs", "exact"}
        if extra:
            raise InputError(f"'problem' cannot be combined with {sorted(extra)}")
        return get_problem(s["problem"])
    if "kernel" not in s or "rhs" not in s:
        raise InputError("a problem needs both a kernel and a right-hand side")
    kind = Kind.parse(s.get("kind", kind_default))
    exact = _rhs_function(s["exact"]) if s.get("exact") else None
    return ProblemSpec(
        kind,
        Limits.parse(s.get("limits", "x")),
        KernelSpec.coerce(s["kernel"]),
        _rhs_function(s["rhs"]),
        x_power=_int(s.get("x_power", 0), "x_power"),
        exact=exact,
        name="custom",
    )


def _apply_overrides(problem, s):
    t = problem.truncation
    kw = {}
    if "n" in s:
        kw["N"] = _int(s["n"], "n")
    if "adaptive" in s:
        kw["adaptive"] = _bool(s["adaptive"])
    if "tol" in s:
        kw["tol"] = _float(s["tol"], "tol")
    if "n_max" in s:
        kw["N_max"] = _int(s["n_max"], "n_max")
    if kw:
        problem = replace(problem, truncation=replace(t, **kw))
    if "method" in s:
        problem = replace(problem, method=s["method"])
    if "kernel_degree" in s:
        problem = replace(problem, kernel_degree=_int(s["kernel_degree"], "kernel_degree"))
    return problem


def build_problem(args, kind_default="2"):
    """ProblemSpec from the parsed arguments (exactly one problem source)."""
    inline = {
        k: getattr(args, k)
        for k in ("kernel", "rhs", "exact")
        if getattr(args, k, None) is not None
    }
    sources = [
        bool(getattr(args, "problem", None)),
        bool(getattr(args, "config", None)),
        bool(inline),
    ]
    if sum(sources) != 1:
        raise InputError("give exactly one problem source: a name, --config or --kernel/--rhs")
    settings = {}
    if args.config:
        settings = read_config(args.config)
    elif args.problem:
        settings = {"problem": args.problem}
    else:
        settings = dict(inline)
    for key, attr in (("kind", "kind"), ("limits", "limits")):
        value = getattr(args, attr, None)
        if value is not None:
            if "problem" in settings:
                raise InputError(f"--{attr} cannot change a catalog problem")
            settings[key] = value
    problem = _from_settings(settings, kind_default)
    if "grid" in settings and getattr(args, "grid", None) is None:
        args.grid = _int(settings["grid"], "grid")
    flags = {}
    if getattr(args, "n", None) is not None:
        flags["n"] = args.n
    if getattr(args, "adaptive", False):
        flags["adaptive"] = "true"
    if getattr(args, "tol", None) is not None:
        flags["tol"] = args.tol
    if getattr(args, "method", None) is not None:
        flags["method"] = args.method
    return _apply_overrides(problem, {**settings, **flags})


# ---------------------------------------------------------------------------
# output


def fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def csv_text(header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


class Outputs:
    """Files of one run, written atomically and removed again on failure."""

    def __init__(self, directory):
        self.directory = Path(directory) if directory else None
        self.written = []
        self.created_dir = False

    def write(self, name, text, stdout=None):
        if self.directory is None:
            (stdout or sys.stdout).write(text)
            return None
        if not self.directory.exists():
            self.directory.mkdir(parents=True)
            self.created_dir = True
        path = self.directory / name
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        self.written.append(path)
        return path

    def rollback(self):
        for path in self.written:
            path.unlink(missing_ok=True)
        self.written.clear()
        if self.created_dir:
            try:
                self.directory.rmdir()
            except OSError:
                pass


def _grid(args, a=0.0, b=1.0):
    count = args.grid if args.grid is not None else 101
    if count < 2:
        raise InputError("--grid needs at least 2 points")
    return np.linspace(a, b, count)


def _info(text):
    print(text, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def cmd_integrate(args, out):
    problem = replace(build_problem(args, "integrate"), kind=Kind.INTEGRATE)
    sol = solve_fixed(problem)
    x = _grid(args)
    out.write("integral.csv", csv_text(["x", "value"], zip(x, sol(x))))
    _info(f"N={sol.truncation_used} tail_ratio={sol.tail_ratio:.3e}")


def cmd_solve(args, out):
    problem = build_problem(args)
    sol = solve(problem)
    x = _grid(args)
    header, cols = ["x", "u"], [x, sol(x)]
    if problem.exact is not None:
        ex = problem.exact(x)
        header += ["exact", "abs_err"]
        cols += [ex, np.abs(cols[1] - ex)]
    name = problem.name or "solution"
    out.write(f"{name}_solution.csv", csv_text(header, zip(*cols)))
    if out.directory is not None:
        c = sol.coeffs.coeffs
        out.write(f"{name}_coefficients.csv", csv_text(["n", "coefficient"], zip(range(c.size), c)))
    _info(
        f"N={sol.truncation_used} residual={sol.residual_norm:.3e} "
        f"tail_ratio={sol.tail_ratio:.3e} condition={sol.condition:.3e}"
    )


def _parse_ns(text):
    try:
        ns = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise InputError(f"--ns expects comma-separated integers, got {text!r}") from None
    if not ns or min(ns) < 1:
        raise InputError("--ns needs positive integers")
    return ns


def convergence_rows(problem, ns, timing=True, reference_n=REFERENCE_N):
    """``(N, max_abs_err, residual, seconds)`` for each ``N``.

    The error is measured against the exact solution when known, otherwise
    against a self-reference solve at ``reference_n``.
    """
    a, b = problem.error_interval
    x = np.linspace(a, b, 50)
    fixed = replace(problem, truncation=Truncation(N=max(ns)))
    if problem.exact is not None:
        ref = problem.exact(x)
    else:
        ref = solve_fixed(fixed, reference_n)(x)
    rows = []
    for N in ns:
        t0 = time.perf_counter()
        sol = solve_fixed(fixed, N)
        dt = time.perf_counter() - t0 if timing else 0.0
        rows.append((N, float(np.max(np.abs(sol(x) - ref))), sol.residual_norm, dt))
    return rows


CONVERGENCE_HEADER = ["N", "max_abs_err", "residual", "seconds"]


def cmd_convergence(args, out):
    problem = build_problem(args)
    ns = _parse_ns(args.ns) if args.ns else EXAMPLE_NS.get(problem.name, DEFAULT_NS)
    rows = convergence_rows(problem, ns, timing=not args.no_timing)
    out.write(f"{problem.name or 'custom'}_convergence.csv", csv_text(CONVERGENCE_HEADER, rows))


def cmd_examples(args, out):
    catalog = builtin_problems()
    names = args.names or sorted(catalog)
    for name in names:
        if name not in catalog:
            get_problem(name)  # raises the lookup error
    for name in names:
        rows = convergence_rows(catalog[name], EXAMPLE_NS.get(name, DEFAULT_NS), not args.no_timing)
        out.write(f"{name}.csv", csv_text(CONVERGENCE_HEADER, rows))
        _info(f"{name}: final error {rows[-1][1]:.3e} at N={rows[-1][0]}")


def cmd_symbol(args, out):
    if not args.kernel:
        raise InputError("symbol needs --kernel")
    grid = args.grid if args.grid is not None else 4096
    report = fredholm_check(args.kernel, limits=args.limits or "x", grid=grid)
    print(report)
    if out.directory is not None:
        out.write("symbol.csv", csv_text(["theta", "f"], zip(report.theta, report.values)))


def cmd_dump(args, out):
    problem = build_problem(args) if (args.problem or args.config) else None
    if problem is None:
        if not args.kernel:
            raise InputError("dump-operator needs --kernel, a catalog name or --config")
        problem = ProblemSpec(
            Kind.INTEGRATE, Limits.parse(args.limits or "x"), KernelSpec.coerce(args.kernel), None,
            method=args.method or "auto",
        )
    N = args.n if args.n is not None else problem.truncation.N
    op = assemble(problem, N)
    M = op.weighted() if args.weighted else op.matrix
    lines = [f"{i} {j} {v:.17g}" for i, j, v in M.triplets()]
    out.write("operator.txt", "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# argument parsing


def _problem_args(p, positional=True):
    if positional:
        p.add_argument("problem", nargs="?", help="catalog problem name")
    p.add_argument("--config", help="key = value problem file")
    p.add_argument("--kernel", help="kernel expression in x and y")
    p.add_argument("--rhs", help="right-hand side expression in x")
    p.add_argument("--exact", help="exact solution expression in x, for error columns")
    p.add_argument("--kind", choices=["1", "2"], help="first or second kind")
    p.add_argument("--limits", choices=["x", "1-x"], help="upper limit of integration")
    p.add_argument("--n", type=int, help="truncation size")
    p.add_argument("--adaptive", action="store_true", help="double N until converged")
    p.add_argument("--tol", type=float, help="adaptive tolerance")
    p.add_argument("--method", choices=METHODS, help="operator assembly path")


def make_parser():
    parser = argparse.ArgumentParser(
        prog="sparsevolterra", description="Sparse spectral Volterra integral equation solver"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="apply a Volterra operator to --rhs")
    _problem_args(p)
    p.add_argument("--grid", type=int, help="output sample count on [0, 1]")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("solve", help="solve a first- or second-kind equation")
    _problem_args(p)
    p.add_argument("--grid", type=int, help="output sample count on [0, 1]")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("convergence", help="error against N as CSV")
    _problem_args(p)
    p.add_argument("--ns", help="comma-separated truncation sizes")
    p.add_argument("--no-timing", action="store_true", help="write 0 in the seconds column")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("symbol", help="Fredholm diagnostic for a first-kind kernel")
    p.add_argument("--kernel", help="kernel expression in x and y")
    p.add_argument("--limits", choices=["x", "1-x"])
    p.add_argument("--grid", type=int, help="symbol sample count (default 4096)")
    p.add_argument("--out", help="directory for symbol.csv")
    p.set_defaults(func=cmd_symbol)

    p = sub.add_parser("examples", help="convergence CSVs for catalog problems")
    p.add_argument("names", nargs="*", help="problem names (default: all)")
    p.add_argument("--no-timing", action="store_true", help="write 0 in the seconds column")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("dump-operator", help="write an operator as 'i j value' triplets")
    _problem_args(p)
    p.add_argument("--weighted", action="store_true", help="include the weight factor")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.set_defaults(func=cmd_dump)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {category.__name__}: {message}", file=sys.stderr)


def main(argv=None):
    args = make_parser().parse_args(argv)
    out = Outputs(getattr(args, "out", None))
    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        try:
            args.func(args, out)
        except (VolterraError, OSError) as e:
            out.rollback()
            lines = str(e).splitlines() or [""]
            print(f"error: {type(e).__name__}: {lines[0]}", file=sys.stderr)
            for extra in lines[1:]:
                print(extra, file=sys.stderr)
            return 1
        except BaseException:
            out.rollback()
            raise
    return 0


if __name__ == "__main__":
    sys.exit(main())
