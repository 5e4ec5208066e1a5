"""Command-line front end.

Subcommands: ``rates``, ``measures``, ``cost``, ``mitigate``, ``figure``.
Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 mitigation gate failure.

All times are in seconds, rates in 1/s and angular frequencies in rad/s. The
``gamma`` column of every CSV is the Pauli-channel rate ``g(t)`` of
``g (Z rho Z - rho)``; coherences decay at ``decay_rate = 2 g``.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import DivergenceError, IntegrationError, PreconditionError, RateBoundError, TruncationError
from .measures import cost_identity_check, cumulative_measures, qem_cost_unital
from .canonical import is_cp_divisible
from .models import (
    ConstantDephasing,
    DispersiveDephasing,
    DispersiveModelParams,
    NmrDephasing,
    NmrModelParams,
)
from .operators import PAULIS
from .sampler import ideal_expectation, run_mitigated_estimate

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_GATE = 0, 1, 2, 3
NUMERIC_ERRORS = (DivergenceError, IntegrationError, TruncationError, RateBoundError)

DEFAULT_T_MAX = {"nmr": 15e-3, "dispersive": 5.0, "custom-dephasing": 1.0}
FIG2_SETS = ((1.0, 3.0), (0.25, 12.0))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    return format(float(x), ".17g")


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes and underscores are interchangeable."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _add_model_args(p):
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=sorted(DEFAULT_T_MAX), default="nmr")
    g.add_argument("--J", type=float, help="nmr coupling, rad/s")
    g.add_argument("--gamma", type=float, help="nmr bath rate, 1/s")
    g.add_argument("--t2", type=float, help="nmr bath time 1/gamma, s")
    g.add_argument("--s", type=float, help="nmr temperature parameter in [0, 1/2]")
    g.add_argument("--abs-alpha-sq", type=float, help="dispersive mean photon number")
    g.add_argument("--chi-over-kappa", type=float)
    g.add_argument("--kappa", type=float, help="dispersive resonator decay, 1/s")
    g.add_argument("--form", choices=("printed", "exact"), default="printed",
                   help="dispersive rate formulas: published closed form or exact solution")
    g.add_argument("--gamma-const", type=float, help="custom-dephasing channel rate, 1/s")
    g.add_argument("--S-const", type=float, help="custom-dephasing Lamb shift, rad/s")
    t = p.add_argument_group("grid")
    t.add_argument("--t-min", type=float, default=0.0)
    t.add_argument("--t-max", type=float)
    t.add_argument("--steps", type=int, default=3000)


def _common(p):
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--out", help="output path (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qemcost", description="Error-mitigation cost of non-Markovian dephasing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rates", help="CSV of t, gamma, S, cost, F, D on a uniform grid")
    _add_model_args(p)
    _common(p)

    p = sub.add_parser("measures", help="F, D and cost over [t-min, t-max]")
    _add_model_args(p)
    _common(p)

    p = sub.add_parser("cost", help="QEM cost C(t-max)")
    _add_model_args(p)
    _common(p)

    p = sub.add_parser("mitigate", help="Monte Carlo mitigation at t-max with a z-score gate")
    _add_model_args(p)
    _common(p)
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--observable", choices=("X", "Y", "Z"), default="X")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--gate", type=float, default=5.0, help="maximum |mean - ideal| / std_error")

    p = sub.add_parser("figure", help="CSV data behind the published figures")
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--id", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--outdir", default=".")
    p.add_argument("--steps", type=int, default=3000)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            cfg = read_config(args.config)
        except UsageError as exc:
            parser.error(str(exc))
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, raw in cfg.items():
            if key not in known or key in ("config", "help"):
                parser.error(f"unknown config key {key!r}")
            action = known[key]
            try:
                value = action.type(raw) if action.type else raw
            except ValueError:
                parser.error(f"bad value for {key}: {raw!r}")
            if action.choices is not None and value not in action.choices:
                parser.error(f"bad value for {key}: {raw!r}")
            defaults[key] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def make_model(args):
    if args.model == "nmr":
        ref = NmrModelParams.reference()
        if args.gamma is not None and args.t2 is not None:
            raise UsageError("give either --gamma or --t2, not both")
        J = ref.J if args.J is None else args.J
        s = ref.s if args.s is None else args.s
        if args.t2 is not None:
            params = NmrModelParams.from_t2(J, args.t2, s)
        else:
            params = NmrModelParams(J, ref.gamma if args.gamma is None else args.gamma, s)
        return NmrDephasing(params)
    if args.model == "dispersive":
        a2 = 1.0 if args.abs_alpha_sq is None else args.abs_alpha_sq
        ratio = 3.0 if args.chi_over_kappa is None else args.chi_over_kappa
        kappa = 1.0 if args.kappa is None else args.kappa
        if a2 < 0:
            raise UsageError("--abs-alpha-sq must be nonnegative")
        return DispersiveDephasing(DispersiveModelParams.from_ratios(a2, ratio, kappa), args.form)
    gamma = 0.0 if args.gamma_const is None else args.gamma_const
    shift = 0.0 if args.S_const is None else args.S_const
    return ConstantDephasing(gamma, shift)


def _grid(args) -> np.ndarray:
    t_max = DEFAULT_T_MAX[args.model] if args.t_max is None else args.t_max
    if not (t_max > args.t_min >= 0):
        raise UsageError(f"need t-max > t-min >= 0, got [{args.t_min}, {t_max}]")
    if args.steps < 4:
        raise UsageError("--steps must be at least 4")
    return np.linspace(args.t_min, t_max, args.steps + 1)


def _header(model, extra: dict | None = None) -> str:
    items = dict(model.describe())
    if isinstance(model, NmrDephasing):
        items["t2"] = 1.0 / model.params.gamma if model.params.gamma > 0 else math.inf
    if extra:
        items.update(extra)
    parts = [f"{k}={fmt(v) if isinstance(v, float) else v}" for k, v in items.items()]
    return "# " + " ".join(parts) + " units=s,1/s,rad/s gamma=pauli-channel-rate\n"


class _Output:
    """Write to a file (removed again if the block fails) or to stdout."""

    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if self.path is None:
            self.fh = sys.stdout
        else:
            parent = Path(self.path).parent
            parent.mkdir(parents=True, exist_ok=True)
            self.fh = open(self.path, "w", newline="", encoding="utf-8")
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        if self.path is None:
            self.fh.flush()
            return False
        self.fh.close()
        if exc_type is not None and os.path.exists(self.path):
            os.remove(self.path)
        return False


def _write_csv(fh, header: str, columns: dict):
    fh.write(header)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns.keys())
    for row in zip(*columns.values()):
        w.writerow([fmt(v) for v in row])


def cmd_rates(args) -> int:
    model = make_model(args)
    times = _grid(args)
    with _Output(args.out) as fh:
        trace = model.rate_trace(times)
        F, D, cost = cumulative_measures(trace)
        _write_csv(fh, _header(model, {"steps": args.steps}),
                   {"t": times, "gamma": trace.gammas[0], "S": trace.lamb_shift, "cost": cost, "F": F, "D": D})
    return EXIT_OK


def _report(fh, items: dict):
    for k, v in items.items():
        fh.write(f"{k}={fmt(v) if isinstance(v, (float, np.floating)) else v}\n")


def cmd_measures(args) -> int:
    model = make_model(args)
    times = _grid(args)
    trace = model.rate_trace(times)
    rep = cost_identity_check(trace, trace.t1, trace.t0)
    cp, spans = is_cp_divisible(trace)
    with _Output(args.out) as fh:
        fh.write(_header(model, {"steps": args.steps}))
        _report(fh, {
            "t_from": rep.t_from, "t_to": rep.t_to, "F": rep.F, "D": rep.D,
            "cost_direct": rep.cost_direct, "cost_via_identity": rep.cost_via_identity,
            "relative_identity_error": rep.relative_identity_error,
            "cp_divisible": str(cp).lower(),
            "negative_intervals": ";".join(f"{fmt(a)}:{fmt(b)}" for a, b in spans),
        })
    return EXIT_OK


def cmd_cost(args) -> int:
    model = make_model(args)
    times = _grid(args)
    trace = model.rate_trace(times)
    with _Output(args.out) as fh:
        fh.write(_header(model, {"steps": args.steps}))
        _report(fh, {"T": trace.t1, "cost": qem_cost_unital(trace, trace.t1, trace.t0)})
    return EXIT_OK


def cmd_mitigate(args) -> int:
    model = make_model(args)
    if args.t_min != 0:
        raise UsageError("mitigate starts from t = 0; --t-min is not supported")
    T = DEFAULT_T_MAX[args.model] if args.t_max is None else args.t_max
    if not T > 0:
        raise UsageError("--t-max must be positive")
    if args.shots < 100:
        raise UsageError("--shots must be at least 100")
    obs = PAULIS[args.observable]
    est = run_mitigated_estimate(model, obs, T, args.shots, args.seed, workers=args.workers)
    ideal = ideal_expectation(model, obs, T)
    z = est.z_score(ideal)
    ok = abs(est.mean - ideal) <= args.gate * est.std_error + 1e-12
    with _Output(args.out) as fh:
        fh.write(_header(model, {"seed": args.seed, "shots": args.shots}))
        _report(fh, {
            "T": float(T), "observable": args.observable, "mean": est.mean, "std_error": est.std_error,
            "cost": est.cost, "ideal": ideal, "z_score": float(z), "n_trajectories": est.n_trajectories,
            "n_plus": est.raw_sign_counts[0], "n_minus": est.raw_sign_counts[1],
            "gate": "pass" if ok else "fail",
        })
    return EXIT_OK if ok else EXIT_GATE


def figure_data(fig_id: int, steps: int = 3000) -> dict[str, tuple[str, dict]]:
    """File name -> (comment header, columns) for one published figure."""
    if fig_id == 1:
        model = NmrDephasing(NmrModelParams.reference())
        times = np.linspace(0.0, 15e-3, steps + 1)
        trace = model.rate_trace(times)
        F, D, cost = cumulative_measures(trace)
        head = _header(model, {"steps": steps, "note": "gamma-read-as-1/gamma=6.5ms"})
        g = trace.gammas[0]
        return {
            "gamma.csv": (head, {"t": times, "gamma": g, "decay_rate": 2 * g, "S": trace.lamb_shift}),
            "cost.csv": (head, {"t": times, "cost": cost, "F": F, "D": D}),
        }
    kt = np.linspace(0.0, 5.0, steps + 1)
    traces = [DispersiveDephasing(DispersiveModelParams.from_ratios(a2, r)).rate_trace(kt) for a2, r in FIG2_SETS]
    head = ("# model=dispersive kappa=1 set_a=abs_alpha_sq:1,chi_over_kappa:3 "
            f"set_b=abs_alpha_sq:0.25,chi_over_kappa:12 form=printed steps={steps} gamma=pauli-channel-rate\n")
    if fig_id == 2:
        cols = {"kappa_t": kt}
        for tag, tr in zip("ab", traces):
            cols[f"gamma_{tag}"] = tr.gammas[0]
        for tag, tr in zip("ab", traces):
            cols[f"decay_rate_{tag}"] = 2 * tr.gammas[0]
        return {"gamma.csv": (head, cols)}
    cols = {"kappa_t": kt}
    for tag, tr in zip("ab", traces):
        F, D, cost = cumulative_measures(tr)
        cols[f"cost_{tag}"], cols[f"F_{tag}"], cols[f"D_{tag}"] = cost, F, D
    return {"cost.csv": (head, cols)}


def cmd_figure(args) -> int:
    if args.steps < 4:
        raise UsageError("--steps must be at least 4")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, (head, cols) in figure_data(args.id, args.steps).items():
        with _Output(outdir / name) as fh:
            _write_csv(fh, head, cols)
    return EXIT_OK


COMMANDS = {"rates": cmd_rates, "measures": cmd_measures, "cost": cmd_cost,
            "mitigate": cmd_mitigate, "figure": cmd_figure}


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, PreconditionError) as exc:
        print(f"qemcost: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"qemcost: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
