"""Command-line front end.

Three subcommands:

* ``run``     stream observations through a test, write a trajectory CSV
              (``n,statistic,log10_e,e,rejected``), print a first-crossing
              summary on stderr, optionally render the path as SVG;
* ``verify``  run one of the numerical verification checks and emit its
              versioned JSON report on stdout;
* ``plot``    render an existing trajectory CSV as SVG.

Exit codes: 0 clean (``verify`` additionally requires all verdicts to pass,
else 1), 64 configuration problems, 65 malformed data rows (row number
reported), 70 internal numerical failures.  Numbers are serialized with 17
significant digits so trajectories round-trip doubles exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Iterator, Optional

import numpy as np

from . import core, verify
from .core import EffectSpec, PriorGrid, StoppingRule
from .errors import ConfigError, ContractError, DataError, NumericalError, StateError

EX_CONFIG = 64
EX_DATA = 65
EX_NUMERIC = 70

_TRAJ_HEADER = ("n", "statistic", "log10_e", "e", "rejected")
_LOG10 = math.log(10.0)


def _g17(v: float) -> str:
    return format(float(v), ".17g")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract says configuration errors are 64
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# shared flag groups
# ---------------------------------------------------------------------------

_PARAM_NAMES = {
    "t": ("delta0", "delta_plus"),
    "linreg": ("delta0", "delta_plus"),
    "chisq": ("sigma0", "sigma_plus"),
    "bernoulli": ("theta0", "theta_plus"),
}

_RUN_PARAM_FLAGS = {
    "delta0": "--delta0", "delta_plus": "--delta-plus",
    "sigma0": "--sigma0", "sigma_plus": "--sigma-plus",
    "theta0": "--theta0", "theta_plus": "--theta-plus",
}

_VERIFY_PARAM_FLAGS = {
    "delta0": "--delta0", "delta_plus": "--dplus",
    "sigma0": "--sigma0", "sigma_plus": "--splus",
    "theta0": "--theta0", "theta_plus": "--tplus",
}


def _add_model_flags(p: argparse.ArgumentParser, flags: dict) -> None:
    p.add_argument("--model", required=True, choices=sorted(_PARAM_NAMES))
    seen = set()
    for name, flag in flags.items():
        if flag not in seen:
            p.add_argument(flag, dest=name, type=float, default=None)
            seen.add(flag)
    p.add_argument("--prior", default=None, metavar="PATH",
                   help="CSV file 'delta,weight' with a discrete prior over alternatives")


def _load_prior(path: str) -> PriorGrid:
    try:
        f = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read prior file {path}: {exc}") from exc
    with f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"prior file {path} is empty") from None
        if [h.strip() for h in header] != ["delta", "weight"]:
            raise ConfigError(f"prior file {path} must have header 'delta,weight'")
        atoms = []
        for i, row in enumerate(reader, 1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                atoms.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                raise ConfigError(f"prior file {path}, row {i}: expected two numbers") from None
    if not atoms:
        raise ConfigError(f"prior file {path} has no atoms")
    total = math.fsum(w for _, w in atoms)
    if abs(total - 1.0) > 1e-6:
        raise ConfigError(
            f"prior weights in {path} sum to {total!r}; must be within 1e-6 of 1"
        )
    return PriorGrid.normalized(atoms)


def _build_spec(args) -> EffectSpec:
    null_name, alt_name = _PARAM_NAMES[args.model]
    flags = args._param_flags
    for name in ("delta0", "delta_plus", "sigma0", "sigma_plus", "theta0", "theta_plus"):
        if name not in (null_name, alt_name) and getattr(args, name, None) is not None:
            raise ConfigError(f"{flags[name]} does not apply to model '{args.model}'")
    null_val = getattr(args, null_name)
    if null_val is None:
        raise ConfigError(f"{flags[null_name]} is required for model '{args.model}'")
    point = getattr(args, alt_name)
    if (point is None) == (args.prior is None):
        raise ConfigError(f"give exactly one of {flags[alt_name]} or --prior")
    prior = _load_prior(args.prior) if args.prior is not None else None
    return EffectSpec(delta0=null_val, delta_plus=point, prior=prior)


# ---------------------------------------------------------------------------
# input readers
# ---------------------------------------------------------------------------

def _open_input(path: str):
    if path == "-":
        return sys.stdin, False
    try:
        return open(path, newline="", encoding="utf-8"), True
    except OSError as exc:
        raise ConfigError(f"cannot read input {path}: {exc}") from exc


def _linreg_columns(names: list[str], where: str) -> list[str]:
    rest = [c for c in names if c not in ("y", "x")]
    if "y" not in names or "x" not in names:
        raise DataError(f"{where}: linreg input needs columns y, x, z1..zd")
    d = len(rest)
    expected = [f"z{k}" for k in range(1, d + 1)]
    if sorted(rest) != sorted(expected):
        raise DataError(
            f"{where}: nuisance columns must be named z1..z{d}, got {rest!r}"
        )
    return expected


def _iter_csv(f, model: str) -> Iterator:
    reader = csv.reader(f)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        return
    if model == "linreg":
        zcols = _linreg_columns(header, "header")
        idx = {name: header.index(name) for name in ["y", "x"] + zcols}
    else:
        if "y" not in header:
            raise DataError("header: expected a column named 'y'")
        idx = {"y": header.index("y")}
    for i, row in enumerate(reader, 1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            if model == "linreg":
                yield (
                    float(row[idx["y"]]),
                    float(row[idx["x"]]),
                    [float(row[idx[z]]) for z in zcols],
                )
            else:
                yield float(row[idx["y"]])
        except (ValueError, IndexError):
            raise DataError(f"row {i}: could not parse {row!r}") from None


def _iter_jsonl(f, model: str) -> Iterator:
    zcols: Optional[list[str]] = None
    for i, line in enumerate(f, 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"row {i}: invalid JSON ({exc})") from None
        if not isinstance(rec, dict):
            raise DataError(f"row {i}: expected a JSON object")
        try:
            if model == "linreg":
                if zcols is None:
                    zcols = _linreg_columns(sorted(rec.keys()), f"row {i}")
                yield (rec["y"], rec["x"], [rec[z] for z in zcols])
            else:
                yield rec["y"]
        except KeyError as exc:
            raise DataError(f"row {i}: missing field {exc}") from None


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _cmd_run(args) -> int:
    spec = _build_spec(args)
    rule = StoppingRule(alpha=args.alpha)
    f_in, close_in = _open_input(args.input)
    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="", encoding="utf-8")
    reader = _iter_jsonl(f_in, args.model) if args.format == "jsonl" else _iter_csv(f_in, args.model)
    records = []  # (n, log10_e, rejected) kept for the optional plot
    state = core.initial_state(args.model)
    rejected = False
    tau = None
    try:
        out.write(",".join(_TRAJ_HEADER) + "\n")
        for obs in reader:
            row_no = state.n + 1
            try:
                state = core.step(state, obs, spec)
            except DataError as exc:
                raise DataError(f"row {row_no}: {exc}") from None
            rejected = rejected or core.should_reject(state, rule)
            if rejected and tau is None:
                tau = state.n
            log10_e = state.log_e / _LOG10
            out.write(
                f"{state.n},{_g17(core.statistic(state))},{_g17(log10_e)},"
                f"{_g17(core.evalue(state))},{'true' if rejected else 'false'}\n"
            )
            out.flush()
            records.append((state.n, log10_e, rejected))
    finally:
        if close_in:
            f_in.close()
        if out is not sys.stdout:
            out.close()
    if tau is not None:
        print(
            f"rejected: e-value first reached 1/alpha = {_g17(1.0 / rule.alpha)} "
            f"at tau = {tau}",
            file=sys.stderr,
        )
    else:
        print(
            f"no rejection in {state.n} observations "
            f"(threshold 1/alpha = {_g17(1.0 / rule.alpha)})",
            file=sys.stderr,
        )
    if args.plot is not None:
        _render_plot(records, rule.alpha, args.plot)
    return 0


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------

def _render_plot(records: list[tuple[int, float, bool]], alpha: float, path: str) -> None:
    if not records:
        raise DataError("empty trajectory: nothing to plot")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed hash salt + dateless metadata make the SVG byte-deterministic
    plt.rcParams["svg.hashsalt"] = "evseq"
    ns = [r[0] for r in records]
    log10_e = [r[1] for r in records]
    tau = next((n for n, _, rej in records if rej), None)
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(ns, log10_e, lw=1.5, label="e-process")
    ax.axhline(
        math.log10(1.0 / alpha), color="crimson", ls="--", lw=1.0,
        label=f"1/alpha = {1.0 / alpha:g}",
    )
    if tau is not None:
        val = next(v for n, v, _ in records if n == tau)
        ax.plot([tau], [val], "o", color="crimson", ms=6, label=f"first crossing (n = {tau})")
    ax.set_xlabel("n")
    ax.set_ylabel("log10 e-value")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _cmd_plot(args) -> int:
    f_in, close_in = _open_input(args.input)
    records = []
    try:
        reader = csv.reader(f_in)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("empty trajectory: missing header") from None
        if header != list(_TRAJ_HEADER):
            raise DataError(f"unexpected trajectory header {header!r}")
        for i, row in enumerate(reader, 1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                n = int(row[0])
                log10_e = float(row[2])
                rej = {"true": True, "false": False}[row[4].strip().lower()]
            except (ValueError, IndexError, KeyError):
                raise DataError(f"row {i}: could not parse {row!r}") from None
            records.append((n, log10_e, rej))
    finally:
        if close_in:
            f_in.close()
    _render_plot(records, args.alpha, args.output)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _floats_csv(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _ints_csv(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.strip().split(","))
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None


def _add_gen_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", type=float, default=None, help="gaussian generator mean")
    p.add_argument("--sigma", type=float, default=None, help="gaussian generator scale")
    p.add_argument("--rademacher", action="store_true", help="fair +-1 signs (t model only)")
    p.add_argument("--theta", type=float, default=None, help="bernoulli generator parameter")
    p.add_argument("--gen-delta", type=float, default=None, help="regression generator effect")
    p.add_argument("--gen-sigma", type=float, default=None, help="regression error scale")
    p.add_argument("--beta", default="", help="regression nuisance coefficients, comma-separated")
    p.add_argument("--x-mode", choices=["normal", "ones"], default="normal")
    p.add_argument("--seed", type=int, default=1729)
    p.add_argument("--reps", type=int, default=10_000)


def _build_generator(args):
    if args.model == "t" and args.rademacher:
        return verify.RademacherGen()
    if args.model in ("t", "chisq"):
        if args.mu is None or args.sigma is None:
            raise ConfigError(f"model '{args.model}' needs --mu and --sigma (or --rademacher for t)")
        return verify.GaussianGen(mu=args.mu, sigma=args.sigma)
    if args.model == "bernoulli":
        if args.theta is None:
            raise ConfigError("model 'bernoulli' needs --theta")
        return verify.BernoulliGen(theta=args.theta)
    if args.gen_delta is None or args.gen_sigma is None:
        raise ConfigError("model 'linreg' needs --gen-delta and --gen-sigma")
    return verify.RegressionGen(
        delta=args.gen_delta, beta=tuple(_floats_csv(args.beta)),
        sigma=args.gen_sigma, x_mode=args.x_mode,
    )


def _emit_report(report: verify.VerificationReport) -> int:
    print(report.to_json())
    print(f"runtime: {report.runtime_seconds:.3f}s", file=sys.stderr)
    return 0 if report.passed else 1


def _cmd_verify_mc(args) -> int:
    spec = _build_spec(args)
    sim = verify.SimConfig(
        generator=_build_generator(args), seed=args.seed, reps=args.reps,
        checkpoints=_ints_csv(args.checkpoints),
    )
    return _emit_report(verify.mc_expectation(args.model, spec, sim))


def _cmd_verify_type1(args) -> int:
    spec = _build_spec(args)
    sim = verify.SimConfig(
        generator=_build_generator(args), seed=args.seed, reps=args.reps,
        checkpoints=(args.horizon,),
    )
    rule = StoppingRule(alpha=args.alpha)
    return _emit_report(verify.type1_error_mc(args.model, spec, rule, args.horizon, sim))


def _cmd_verify_epower(args) -> int:
    spec = _build_spec(args)
    sim = verify.SimConfig(
        generator=_build_generator(args), seed=args.seed, reps=args.reps,
        checkpoints=(args.n,),
    )
    return _emit_report(verify.epower_estimate(args.model, spec, args.n, sim))


def _print_doc(doc: dict) -> int:
    print(json.dumps(doc, sort_keys=True, separators=(",", ":")))
    return 0 if doc["passed"] else 1


def _cmd_verify_mlr(args) -> int:
    if args.tstep <= 0 or args.tmax <= args.tmin:
        raise ConfigError("need tmin < tmax and tstep > 0")
    grid = np.arange(args.tmin, args.tmax + 0.5 * args.tstep, args.tstep)
    violations = verify.mlr_grid_check(args.nu, args.lplus, args.l0, grid)
    return _print_doc({
        "schema": "evseq-report/1",
        "check": "mlr",
        "config": {"nu": args.nu, "lambda_plus": args.lplus, "lambda_0": args.l0,
                   "tmin": args.tmin, "tmax": args.tmax, "tstep": args.tstep},
        "violations": [list(v) for v in violations],
        "passed": not violations,
    })


def _cmd_verify_evariable(args) -> int:
    lambdas = _floats_csv(args.lambdas)
    if not lambdas:
        raise ConfigError("--lambdas must list at least one true noncentrality")
    pairs = verify.evariable_quadrature_check(args.nu, args.lplus, args.l0, lambdas)
    failures = []
    for lam, h in pairs:
        if lam == args.l0 and abs(h - 1.0) > 1e-6:
            failures.append(f"h({lam}) = {h!r} differs from 1 beyond 1e-6")
        if lam <= args.l0 and h > 1.0 + 1e-6:
            failures.append(f"h({lam}) = {h!r} exceeds 1 + 1e-6 inside the null")
    hs = [h for _, h in sorted(pairs)]
    for a, b in zip(hs, hs[1:]):
        if b < a - 1e-8:
            failures.append(f"h decreases from {a!r} to {b!r} along the true-lambda grid")
    return _print_doc({
        "schema": "evseq-report/1",
        "check": "evariable",
        "config": {"nu": args.nu, "lambda_plus": args.lplus, "lambda_0": args.l0,
                   "lambdas": lambdas},
        "h": [[lam, h] for lam, h in pairs],
        "failures": failures,
        "passed": not failures,
    })


def _cmd_verify_counterexample(args) -> int:
    deltas = _floats_csv(args.deltas)
    values = [(d, verify.rademacher_exact_expectation(args.n, d)) for d in deltas]
    coeff = verify.taylor_coeff_fit(args.n, deltas)
    target = (args.n - 1) / 6.0
    failures = []
    for d, e in values:
        if d > 0 and e <= 1.0:
            failures.append(f"E[M_{args.n}^{d}] = {e!r} does not exceed 1")
    if abs(coeff - target) > 0.05 * target:
        failures.append(f"fitted coefficient {coeff!r} is not within 5% of {target!r}")
    return _print_doc({
        "schema": "evseq-report/1",
        "check": "counterexample",
        "config": {"n": args.n, "deltas": deltas},
        "expectations": [[d, e] for d, e in values],
        "coefficient": coeff,
        "target": target,
        "failures": failures,
        "passed": not failures,
    })


def _cmd_verify_positivity(args) -> int:
    thetas = _floats_csv(args.thetas)
    violations = verify.bern_positivity_check(thetas, args.nmax)
    return _print_doc({
        "schema": "evseq-report/1",
        "check": "positivity",
        "config": {"thetas": thetas, "n_max": args.nmax},
        "violations": [list(v) for v in violations],
        "passed": not violations,
    })


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="evseq", description="Anytime-valid one-sided sequential tests")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="stream data through a test, write a trajectory CSV")
    _add_model_flags(p_run, _RUN_PARAM_FLAGS)
    p_run.set_defaults(_param_flags=_RUN_PARAM_FLAGS)
    p_run.add_argument("--alpha", type=float, default=0.05)
    p_run.add_argument("--input", default="-", help="CSV/JSONL path, '-' for stdin")
    p_run.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p_run.add_argument("--output", default="-", help="trajectory CSV path, '-' for stdout")
    p_run.add_argument("--plot", default=None, metavar="SVG", help="also render the path")
    p_run.set_defaults(func=_cmd_run)

    p_plot = sub.add_parser("plot", help="render a trajectory CSV as SVG")
    p_plot.add_argument("--input", default="-")
    p_plot.add_argument("--output", required=True, metavar="SVG")
    p_plot.add_argument("--alpha", type=float, default=0.05)
    p_plot.set_defaults(func=_cmd_plot)

    p_verify = sub.add_parser("verify", help="run a numerical verification check")
    vsub = p_verify.add_subparsers(dest="check", required=True)

    for name, fn, extra in (
        ("mc", _cmd_verify_mc, "checkpoints"),
        ("type1", _cmd_verify_type1, "type1"),
        ("epower", _cmd_verify_epower, "epower"),
    ):
        p = vsub.add_parser(name)
        _add_model_flags(p, _VERIFY_PARAM_FLAGS)
        p.set_defaults(_param_flags=_VERIFY_PARAM_FLAGS)
        _add_gen_flags(p)
        if extra == "checkpoints":
            p.add_argument("--checkpoints", default="2,5,10,25")
        elif extra == "type1":
            p.add_argument("--alpha", type=float, default=0.05)
            p.add_argument("--horizon", type=int, required=True)
        else:
            p.add_argument("--n", type=int, required=True)
        p.set_defaults(func=fn)

    p_mlr = vsub.add_parser("mlr")
    p_mlr.add_argument("--nu", type=float, required=True)
    p_mlr.add_argument("--lplus", type=float, required=True)
    p_mlr.add_argument("--l0", type=float, required=True)
    p_mlr.add_argument("--tmin", type=float, default=-15.0)
    p_mlr.add_argument("--tmax", type=float, default=15.0)
    p_mlr.add_argument("--tstep", type=float, default=0.01)
    p_mlr.set_defaults(func=_cmd_verify_mlr)

    p_ev = vsub.add_parser("evariable")
    p_ev.add_argument("--nu", type=float, required=True)
    p_ev.add_argument("--lplus", type=float, required=True)
    p_ev.add_argument("--l0", type=float, required=True)
    p_ev.add_argument("--lambdas", required=True, help="true noncentralities, comma-separated")
    p_ev.set_defaults(func=_cmd_verify_evariable)

    p_ce = vsub.add_parser("counterexample")
    p_ce.add_argument("--n", type=int, required=True)
    p_ce.add_argument("--deltas", default="0.2,0.1,0.05")
    p_ce.set_defaults(func=_cmd_verify_counterexample)

    p_pos = vsub.add_parser("positivity")
    p_pos.add_argument("--thetas", default="0.51,0.6,0.75,0.9,0.99")
    p_pos.add_argument("--nmax", type=int, default=30)
    p_pos.set_defaults(func=_cmd_verify_positivity)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (ConfigError, ContractError) as exc:
        print(f"evseq: configuration error: {exc}", file=sys.stderr)
        return EX_CONFIG
    except DataError as exc:
        print(f"evseq: data error: {exc}", file=sys.stderr)
        return EX_DATA
    except (NumericalError, StateError) as exc:
        print(f"evseq: numerical error: {exc}", file=sys.stderr)
        return EX_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
