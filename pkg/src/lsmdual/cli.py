"""Command-line harness: ``lsmdual`` with scenario-driven verification suites.

Subcommands: dual (closed-form dual rates), verify-exact, verify-mc,
simulate, meanfield, oracle, poisson-check (each runs a matching scenario
file), and suite (a directory of scenarios, optionally in parallel). Global
flags: --mode rational|float, --seed, --jobs, --out DIR. The default output
directory may also come from the LSMDUAL_OUT environment variable.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from .duality import cvp_dual_family, dual_rates, self_duality_parameter
from .models import Config, CvpParams, LsmRates, Variant
from .numeric import as_fraction
from .scenarios import ScenarioError, load_scenario, run, suite
from .serialize import kernel_from_spec, load_yaml, model_from_dict

_SCENARIO_KINDS = {
    "verify-exact": ("verify_exact", "thinning_exact"),
    "verify-mc": ("verify_mc",),
    "meanfield": ("meanfield_cv", "meanfield_srw"),
    "oracle": ("oracle",),
    "poisson-check": ("poisson_check",),
}


def _out_dir(args) -> Optional[Path]:
    if args.out:
        return Path(args.out)
    env = os.environ.get("LSMDUAL_OUT")
    return Path(env) if env else None


def _format_rate(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return f"{float(v):.10g}"


def _print_dual_report(report) -> None:
    inp = report.input_rates
    if isinstance(inp, CvpParams):
        in_pairs = [("r", inp.r), ("s", inp.s), ("m", inp.m)]
    else:
        in_pairs = list(zip("abcde", inp.as_tuple()))
    out_pairs = list(zip("abcde", report.output.as_tuple()))
    print("dual_pair:")
    print(f"  eta: {_format_rate(report.eta)}")
    print(f"  gamma: {_format_rate(report.gamma)}")
    print("  input: {" + ", ".join(f"{k}: {_format_rate(v)}" for k, v in in_pairs) + "}")
    print("  output: {" + ", ".join(f"{k}: {_format_rate(v)}" for k, v in out_pairs) + "}")
    print(f"  valid: {str(report.valid).lower()}")
    if report.violated_constraints:
        print("  violated:")
        for v in report.violated_constraints:
            print(f"    - {v}")
    print()
    names = ["rate"] + [k for k, _ in out_pairs]
    rows = [
        ["input"] + [_format_rate(v) for _, v in in_pairs] + ([""] * (5 - len(in_pairs))),
        ["dual"] + [_format_rate(v) for _, v in out_pairs],
    ]
    widths = [max(len(names[i]), *(len(r[i]) for r in rows)) for i in range(len(names))]
    print("  ".join(n.ljust(w) for n, w in zip(names, widths)))
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)))


def _cmd_dual(args) -> int:
    eta_list = None
    if args.eta_scan:
        lo, hi, step = (as_fraction(p) for p in args.eta_scan.split(":"))
        eta_list = []
        v = lo
        while v <= hi:
            if v != 1:
                eta_list.append(v)
            v += step
    if args.rates:
        vals = [as_fraction(v) for v in args.rates.split(",")]
        if len(vals) != 5:
            print("--rates needs a,b,c,d,e", file=sys.stderr)
            return 2
        rates = LsmRates(*vals, formal=True)
        maker = lambda eta: dual_rates(rates, eta)
        self_eta = None
        if rates.b > 0 and (rates.d - rates.a - rates.c) != rates.b:
            self_eta = self_duality_parameter(rates).eta
    elif args.cvp:
        vals = [as_fraction(v) for v in args.cvp.split(",")]
        if len(vals) != 3:
            print("--cvp needs r,s,m", file=sys.stderr)
            return 2
        p = CvpParams(*vals)
        maker = lambda eta: cvp_dual_family(p, eta)
        self_eta = p.r / (p.r + p.s) if (p.r + p.s) > 0 else None
    else:
        print("one of --rates or --cvp is required", file=sys.stderr)
        return 2

    if eta_list is None:
        if args.eta is None:
            print("--eta or --eta-scan is required", file=sys.stderr)
            return 2
        report = maker(as_fraction(args.eta))
        _print_dual_report(report)
        if self_eta is not None:
            print(f"\nself-duality parameter: {_format_rate(self_eta)}")
        return 0
    print("eta".ljust(12), "valid".ljust(6), "output (a', b', c', d', e')")
    for eta in eta_list:
        rep = maker(eta)
        out = ", ".join(_format_rate(v) for v in rep.output.as_tuple())
        print(_format_rate(eta).ljust(12), str(rep.valid).lower().ljust(6), f"({out})")
    return 0


def _cmd_scenario(args, allowed_kinds) -> int:
    try:
        data = load_scenario(args.scenario)
        if data["kind"] not in allowed_kinds:
            print(
                f"scenario kind {data['kind']!r} does not belong to this subcommand "
                f"(expected one of {allowed_kinds})",
                file=sys.stderr,
            )
            return 2
        report, code = run(args.scenario, _out_dir(args), args.mode, args.seed)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    payload = report.payload
    print(f"{payload['scenario']['name']}: verdict={payload['verdict']} "
          f"expect={payload['expect']} final={payload['final']}")
    if payload["unresolved"]:
        print("  (unresolved: oracle could not pin the constant)")
    return code


def _cmd_simulate(args) -> int:
    from .gillespie import simulate_jump_process
    from .sde import simulate_srw, simulate_ssm
    from .models import SrwParams, SsmParams
    from .rng import Seed, stream_id

    try:
        data = load_yaml(Path(args.scenario).read_text())
    except Exception as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    name = data.get("name", Path(args.scenario).stem)
    try:
        model = model_from_dict(data["model"])
        seed = Seed(int(args.seed if args.seed is not None else data.get("seed", 0)),
                    stream_id(name))
        t_end = float(data["t_end"])
        times = data.get("sample_times")
        if isinstance(model, SsmParams):
            q = kernel_from_spec(data["kernel"]) if "kernel" in data else None
            traj, _ = simulate_ssm(model, q, Config.unit_real(data["x0"]), t_end,
                                   dt=float(data.get("dt", 1e-3)), seed=seed,
                                   sample_times=times)
        elif isinstance(model, SrwParams):
            q = kernel_from_spec(data["kernel"]) if "kernel" in data else None
            traj, _ = simulate_srw(model, q, Config.nonneg_real(data["x0"]), t_end,
                                   dt=float(data.get("dt", 1e-3)), seed=seed,
                                   sample_times=times)
        else:
            q = kernel_from_spec(data["kernel"])
            x0 = (Config.count(data["x0"]) if model.variant() is Variant.COUNT
                  else Config.spin(data["x0"]))
            traj = simulate_jump_process(model, q, x0, t_end, times, seed)
    except (KeyError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    out_dir = _out_dir(args) or Path(args.scenario).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{name}.trajectory.csv"
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        n_sites = len(traj.states[0].values)
        writer.writerow(["time"] + [f"site{i}" for i in range(n_sites)])
        for t, state in zip(traj.times, traj.states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in state.values])
    print(f"wrote {out}")
    return 0


def _cmd_suite(args) -> int:
    rows, code = suite(args.directory, _out_dir(args), jobs=args.jobs,
                       mode=args.mode, seed=args.seed)
    if not rows:
        print("no scenarios found")
        return 0
    width = max(len(r["scenario"]) for r in rows)
    print(f"{'scenario'.ljust(width)}  final  verdict     time")
    for r in rows:
        t = f"{r.get('wall_time_s', 0):.2f}s" if "wall_time_s" in r else "-"
        print(f"{r['scenario'].ljust(width)}  {r['final']:<5}  {r['verdict']:<10}  {t}")
        if r.get("error"):
            print(f"    error: {r['error']}")
    n_pass = sum(r["final"] == "pass" for r in rows)
    print(f"{n_pass}/{len(rows)} scenarios pass")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsmdual",
        description="duality/thinning verification harness for interacting particle systems",
    )
    parser.add_argument("--mode", choices=("rational", "float"), default=None,
                        help="override the numeric mode of scenario runs")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--jobs", type=int, default=1, help="parallel scenarios in suite runs")
    parser.add_argument("--out", default=None, help="output directory for reports")
    sub = parser.add_subparsers(dest="command", required=True)

    p_dual = sub.add_parser("dual", help="closed-form dual rates for a model")
    p_dual.add_argument("--rates", help="five-mechanism rates a,b,c,d,e")
    p_dual.add_argument("--cvp", help="contact-voter parameters r,s,m")
    p_dual.add_argument("--eta", help="duality parameter")
    p_dual.add_argument("--eta-scan", help="tabulate validity over lo:hi:step")

    for cmd in _SCENARIO_KINDS:
        p = sub.add_parser(cmd, help=f"run a {' / '.join(_SCENARIO_KINDS[cmd])} scenario")
        p.add_argument("scenario", help="scenario file (.scn)")

    p_sim = sub.add_parser("simulate", help="run one trajectory and write a CSV")
    p_sim.add_argument("scenario", help="simulation description file")

    p_suite = sub.add_parser("suite", help="run every scenario in a directory")
    p_suite.add_argument("directory")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "dual":
        return _cmd_dual(args)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "suite":
        return _cmd_suite(args)
    return _cmd_scenario(args, _SCENARIO_KINDS[args.command])


if __name__ == "__main__":
    sys.exit(main())
