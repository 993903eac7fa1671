"""Batch command-line front end: exact verification, auxiliary solves and
coefficient sweeps.

Subcommands: ``verify``, ``solve``, ``coeffs``.  Configuration precedence is
flags > config file (flat ``key = value`` lines) > built-in defaults, and the
effective configuration is echoed into every report.  Exit codes: 0 success,
1 verification failure, 2 solver failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import exact
from .coefficients import (
    CurvatureInputs,
    FieldLibrary,
    SolverConfig,
    combine_nonumbilic_terms,
    combine_umbilic_terms,
    exploratory,
    lambda2_coefficient,
    lambda4_coefficients,
    nonumbilic_terms,
    umbilic_terms,
    NONUMBILIC_THRESHOLD,
    UMBILIC_THRESHOLD,
)
from .exact import ExactQuantity
from .grids import Grid2D, read_field, write_field
from .quadrature import QuadratureConvergenceError, TailModelError
from .reports import (
    build_report,
    render_json,
    write_coeffs_csv,
    write_coeffs_svg,
    write_json,
)
from .solver import (
    AuxProblem,
    GridResolutionError,
    SolverDivergenceError,
    solve_reduced,
)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_SOLVER = 2
EXIT_CONFIG = 3


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); route to exit code 3
        raise ConfigError(message)


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

_DEFAULTS = {
    "verify": {"n_min": 6, "n_max": 64, "fuzz": False, "format": "text",
               "out": None, "seed": 0},
    "solve": {"case": None, "n": None, "rmax": 40.0, "smax": 40.0,
              "nr": 1024, "ns": 1024, "tol": 1e-10, "out": "field.isoqf",
              "format": "text", "seed": 0},
    "coeffs": {"case": None, "n_min": None, "n_max": None, "rmax": 40.0,
               "smax": 40.0, "nr": 1024, "ns": 1024, "tol": 1e-10,
               "csv": None, "svg": None, "exploratory": False,
               "format": "text", "out": None, "seed": 0,
               "h2": 1.0, "rninj2": 1.0, "wbar2": 1.0, "rnn2": 0.0},
}

_TYPES = {"n_min": int, "n_max": int, "n": int, "nr": int, "ns": int,
          "seed": int, "rmax": float, "smax": float, "tol": float,
          "h2": float, "rninj2": float, "wbar2": float, "rnn2": float,
          "fuzz": bool, "exploratory": bool, "case": str, "format": str,
          "out": str, "csv": str, "svg": str}


def _coerce(key: str, raw: str):
    typ = _TYPES.get(key)
    if typ is None:
        raise ConfigError(f"unknown config key {key!r}")
    if typ is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"bad boolean for {key!r}: {raw!r}")
    try:
        return typ(raw.strip())
    except ValueError as err:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from err


def load_config_file(path) -> dict:
    """Flat ``key = value`` configuration, one pair per line, # comments."""
    values = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        values[key.strip()] = _coerce(key.strip(), raw)
    return values


def _merge_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS[command])
    if args.config is not None:
        for key, value in load_config_file(args.config).items():
            if key in cfg:
                cfg[key] = value
    for key in cfg:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            cfg[key] = flag_val
    cfg["command"] = command
    return cfg


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------

def _verify_checks(n_min: int, n_max: int, fuzz: bool):
    """Yield (name, passed, detail) for the exact-identity suite."""
    bump = Fraction(10**12 + 1, 10**12) if fuzz else Fraction(1)

    for n in range(n_min, n_max + 1):
        identities = [
            ("reduction[n-2,n]", exact.radial_ratio_to_base(n - 2, n, n),
             Fraction(1)),
            ("reduction[n-2,n-1]", exact.radial_ratio_to_base(n - 2, n - 1, n),
             Fraction(2)),
            ("reduction[n+2,n+1]", exact.radial_ratio_to_base(n + 2, n + 1, n),
             Fraction(n + 1, 2 * n)),
            ("reduction[n,n+1]", exact.radial_ratio_to_base(n, n + 1, n),
             Fraction(n - 1, 2 * n)),
        ]
        for name, got, want in identities:
            yield f"{name}@n={n}", got == want, f"{got} vs {want}"

        m4 = exact.sphere_moment4(n)
        m22 = exact.sphere_moment22(n)
        ok = (m4.coeff == Fraction(3, (n - 1) * (n + 1))
              and m4.same_value(m22 * 3))
        yield f"sphere-moments@n={n}", ok, f"m4={m4.coeff}"

        i1, i2, i3 = nonumbilic_terms(n)
        combo = combine_nonumbilic_terms(n, i1 * bump, i2, i3)
        want = Fraction(n - 12, 2 * n * (n - 1) * (n - 3))
        yield (f"nonumbilic-step1@n={n}", combo.coeff == want,
               f"{combo.coeff} vs {want}")

        terms = umbilic_terms(n)
        first = terms[0]
        terms[0] = type(first)(first.rninj2_mult * bump, first.wbar2_mult,
                               first.rnn_mult * bump)
        closed = combine_umbilic_terms(terms)
        want_r = Fraction(3 * (n - 10),
                          n * (n - 1) * (n - 3) * (n - 4) * (n - 5))
        want_w = Fraction(n - 2,
                          24 * (n - 1) * (n - 3) * (n - 4) * (n - 5))
        yield (f"umbilic-multipliers@n={n}",
               closed.rninj2_mult.coeff == want_r
               and closed.wbar2_mult.coeff == want_w,
               f"r={closed.rninj2_mult.coeff} w={closed.wbar2_mult.coeff}")
        yield (f"scalar-curvature-cancellation@n={n}",
               closed.rnn_mult.coeff == 0, f"{closed.rnn_mult.coeff}")

    for n in range(3, 21):
        omega = exact.ball_volume(n)
        lhs = (2.0**-n * omega) / (2.0 ** (-(n - 1)) * n * omega) ** (n / (n - 1))
        rhs = exact.theta_ball(n)
        ok = abs(lhs - rhs) <= 1e-12 * abs(rhs)
        yield f"equality-case@n={n}", ok, f"{lhs!r} vs {rhs!r}"

    for n in range(5, 21):
        lhs = exact.sphere_area(n - 2) * exact.beta_half(n - 2, n) / n
        rhs = 2.0**-n * exact.ball_volume(n)
        ok = abs(lhs - rhs) <= 1e-12 * abs(rhs)
        yield f"volume-normalization@n={n}", ok, f"{lhs!r} vs {rhs!r}"


def cmd_verify(cfg: dict) -> int:
    results = []
    passed = True
    first_failure = None
    for name, ok, detail in _verify_checks(cfg["n_min"], cfg["n_max"],
                                           cfg["fuzz"]):
        results.append({"name": name, "passed": ok, "detail": detail})
        if not ok and first_failure is None:
            first_failure = name
        passed = passed and ok

    report = build_report("verify", cfg, results, passed)
    if cfg["format"] == "json":
        sys.stdout.write(render_json(report))
    else:
        print(f"verify: {sum(r['passed'] for r in results)}/{len(results)} "
              f"identities hold over n in [{cfg['n_min']}, {cfg['n_max']}]")
        if first_failure is not None:
            print(f"verify: FIRST FAILURE {first_failure}")
    if cfg["out"]:
        write_json(cfg["out"], report)
    return EXIT_OK if passed else EXIT_VERIFY


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------

def cmd_solve(cfg: dict) -> int:
    if cfg["case"] not in ("v", "lambda"):
        raise ConfigError("solve needs --case v or --case lambda")
    if cfg["n"] is None:
        raise ConfigError("solve needs --n")
    p = 1 if cfg["case"] == "v" else 2
    problem = AuxProblem(cfg["n"], p)
    grid = Grid2D(cfg["rmax"], cfg["smax"], cfg["nr"], cfg["ns"])

    start = time.perf_counter()
    field, report = solve_reduced(problem, grid, tol=cfg["tol"])
    elapsed = time.perf_counter() - start
    write_field(cfg["out"], field, problem.n, problem.p, report)

    summary = {
        "name": f"solve[n={problem.n},p={p}]",
        "passed": report.residual_rel <= cfg["tol"],
        "detail": (f"residual={report.residual_rel:.3e} "
                   f"iterations={report.iterations} "
                   f"decay={report.decay_fit_exponent:.2f} "
                   f"negatives={report.positivity_violations} "
                   f"seconds={elapsed:.1f}"),
    }
    out_report = build_report("solve", cfg, [summary], summary["passed"])
    if cfg["format"] == "json":
        sys.stdout.write(render_json(out_report))
    else:
        print(f"solve: wrote {cfg['out']} ({summary['detail']})")
    return EXIT_OK


# --------------------------------------------------------------------------
# coeffs
# --------------------------------------------------------------------------

def _coeff_rows(cfg: dict) -> list[dict]:
    case = cfg["case"]
    threshold = (NONUMBILIC_THRESHOLD if case == "nonumbilic"
                 else UMBILIC_THRESHOLD)
    n_min = cfg["n_min"] if cfg["n_min"] is not None else threshold
    n_max = cfg["n_max"] if cfg["n_max"] is not None else 20
    if n_min > n_max:
        raise ConfigError(f"n_min={n_min} exceeds n_max={n_max}")
    if n_min < threshold and not cfg["exploratory"]:
        raise ConfigError(
            f"n_min={n_min} is below the proven threshold {threshold} for the "
            f"{case} case; pass --exploratory to sweep it anyway"
        )
    curvature = CurvatureInputs(h2=cfg["h2"], rninj2=cfg["rninj2"],
                                wbar2=cfg["wbar2"], rnn2=cfg["rnn2"])
    library = FieldLibrary(SolverConfig(cfg["rmax"], cfg["smax"], cfg["nr"],
                                        cfg["ns"], cfg["tol"]))
    rows = []
    for n in range(n_min, n_max + 1):
        if case == "nonumbilic":
            coeffs, cert = lambda2_coefficient(n, curvature, library)
            rows.append({
                "n": n, "case": case,
                "A1": float(coeffs.a1), "A2": coeffs.a2.value,
                "A3": coeffs.a3.value, "K": coeffs.k_value,
                "a_n": None, "b_n": None, "err": coeffs.k_error,
                "positive": cert.positive,
                "exploratory": exploratory(n, case),
            })
        else:
            coeffs, cert = lambda4_coefficients(n, curvature, library)
            rows.append({
                "n": n, "case": case,
                "A1": None, "A2": None, "A3": None, "K": None,
                "a_n": coeffs.a_value, "b_n": float(coeffs.b),
                "err": coeffs.a_error, "positive": cert.positive,
                "exploratory": exploratory(n, case),
            })
    return rows


def cmd_coeffs(cfg: dict) -> int:
    if cfg["case"] not in ("nonumbilic", "umbilic"):
        raise ConfigError("coeffs needs --case nonumbilic or --case umbilic")
    rows = _coeff_rows(cfg)
    if cfg["csv"]:
        write_coeffs_csv(cfg["csv"], rows)
    if cfg["svg"]:
        write_coeffs_svg(cfg["svg"], rows, cfg["case"])

    results = [{"name": f"coeffs[n={row['n']}]", "n": row["n"],
                "case": row["case"], "A1": row["A1"], "A2": row["A2"],
                "A3": row["A3"], "K": row["K"], "a_n": row["a_n"],
                "b_n": row["b_n"], "error_bar": row["err"],
                "positive": row["positive"],
                "exploratory": row["exploratory"]} for row in rows]
    report = build_report("coeffs", cfg, results, True)
    if cfg["format"] == "json":
        sys.stdout.write(render_json(report))
    else:
        for row in rows:
            value = row["K"] if row["K"] is not None else row["a_n"]
            print(f"coeffs: n={row['n']} {row['case']} value={value!r} "
                  f"err={row['err']!r} positive={row['positive']} "
                  f"exploratory={row['exploratory']}")
    if cfg["out"]:
        write_json(cfg["out"], report)
    return EXIT_OK


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="isoquot",
                     description="Verification suite for the sharp "
                                 "isoperimetric quotient expansions")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--format", choices=["json", "text"], default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None)

    p_verify = sub.add_parser("verify", help="run the exact-identity suite")
    p_verify.add_argument("--n-min", dest="n_min", type=int, default=None)
    p_verify.add_argument("--n-max", dest="n_max", type=int, default=None)
    p_verify.add_argument("--fuzz", action="store_const", const=True,
                          default=None,
                          help="perturb one rational; the suite must fail")
    common(p_verify)

    p_solve = sub.add_parser("solve", help="solve an auxiliary field")
    p_solve.add_argument("--case", choices=["v", "lambda"], default=None)
    p_solve.add_argument("--n", type=int, default=None)
    for key in ("rmax", "smax", "tol"):
        p_solve.add_argument(f"--{key}", type=float, default=None)
    for key in ("nr", "ns"):
        p_solve.add_argument(f"--{key}", type=int, default=None)
    common(p_solve)

    p_coeffs = sub.add_parser("coeffs", help="sweep expansion coefficients")
    p_coeffs.add_argument("--case", choices=["nonumbilic", "umbilic"],
                          default=None)
    p_coeffs.add_argument("--n-min", dest="n_min", type=int, default=None)
    p_coeffs.add_argument("--n-max", dest="n_max", type=int, default=None)
    for key in ("rmax", "smax", "tol", "h2", "rninj2", "wbar2", "rnn2"):
        p_coeffs.add_argument(f"--{key}", type=float, default=None)
    for key in ("nr", "ns"):
        p_coeffs.add_argument(f"--{key}", type=int, default=None)
    p_coeffs.add_argument("--csv", type=str, default=None)
    p_coeffs.add_argument("--svg", type=str, default=None)
    p_coeffs.add_argument("--exploratory", action="store_const", const=True,
                          default=None)
    common(p_coeffs)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _merge_config(args.command, args)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        return cmd_coeffs(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverDivergenceError, GridResolutionError,
            QuadratureConvergenceError, TailModelError) as err:
        print(f"solver error: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
