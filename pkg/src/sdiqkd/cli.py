"""Command-line entry point: ``sdiqkd <subcommand> [options]``.

Exit codes: 0 on success, 1 on domain errors (no secure key, failed
purification, failed validation), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import List, Optional, Sequence

from . import channels as ch
from . import experiments as ex
from . import protocol as pr
from . import purify as pu
from . import validate as val
from .errors import DomainError

KINDS = [k.value for k in ch.NOISE_KINDS]


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser, fmt: str = "json") -> None:
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    p.add_argument("--out", help="write output to this path instead of standard output")


def _security(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, default=1.0, help="Bob's detection efficiency")
    p.add_argument("--binning", choices=[b.value for b in pr.Binning], default=pr.Binning.ASSIGN_ZERO.value)
    p.add_argument("--bound", choices=[b.value for b in pr.BoundMethod], default=pr.BoundMethod.STEERING_ANALYTIC.value)


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="JSON scenario file; explicit flags override its fields")
    p.add_argument("--noise", action="append", choices=KINDS, help="noise channel (repeat to compose, in order)")
    p.add_argument("--param", action="append", type=float, help="noise parameter, one per --noise")
    p.add_argument("--length-km", type=float, help="fibre length; sets the parameter via the distance law")
    p.add_argument("--lc-km", type=float, help="coherence length (default per channel)")
    p.add_argument("--side", choices=[s.value for s in ch.Side], default=None)
    p.add_argument("--theta", type=float, default=None, help="source angle in radians")
    _security(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdiqkd", description="1SDI-QKD noise analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keyrate", help="evaluate one scenario")
    _scenario_flags(p)
    _common(p)

    p = sub.add_parser("threshold", help="efficiency or noise threshold search")
    tsub = p.add_subparsers(dest="target", required=True)
    q = tsub.add_parser("eta", help="minimum detection efficiency for a positive key rate")
    _scenario_flags(q)
    q.add_argument("--tol", type=float, default=1e-4)
    _common(q)
    q = tsub.add_parser("noise", help="critical noise strength")
    q.add_argument("--noise", required=True, choices=KINDS)
    q.add_argument("--theta", type=float, default=math.pi / 4)
    q.add_argument("--side", choices=[s.value for s in ch.Side], default=ch.Side.TRAVELING.value)
    q.add_argument("--steering-only", action="store_true", help="report only where S2 reaches 1/sqrt(2)")
    q.add_argument("--tol", type=float, default=1e-4)
    _security(q)
    _common(q)

    p = sub.add_parser("esd", help="noise strength where concurrence reaches zero")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--tol", type=float, default=1e-4)
    _common(p)

    p = sub.add_parser("purify", help="BBPSSW purification trace")
    _scenario_flags(p)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--no-twirl-each-round", action="store_true")
    p.add_argument("--policy", choices=[r.value for r in pu.RoundPolicy], default=None)
    _common(p)

    p = sub.add_parser("sweep", help="parameter sweeps")
    ssub = p.add_subparsers(dest="axis", required=True)
    q = ssub.add_parser("eta", help="key rate over detection efficiency")
    _scenario_flags(q)
    q.add_argument("--points", type=int, default=100)
    q.add_argument("--eta-min", type=float, default=0.4)
    q.add_argument("--eta-max", type=float, default=1.0)
    _common(q, "csv")
    q = ssub.add_parser("noise", help="key rate, S2 and concurrence over noise strength")
    q.add_argument("--noise", required=True, choices=KINDS)
    q.add_argument("--step", type=float, default=0.01)
    q.add_argument("--points", type=int, default=None)
    q.add_argument("--theta", type=float, default=math.pi / 4)
    q.add_argument("--side", choices=[s.value for s in ch.Side], default=ch.Side.TRAVELING.value)
    _security(q)
    _common(q, "csv")
    q = ssub.add_parser("theta", help="key rate over the source angle")
    q.add_argument("--points", type=int, default=100)
    _security(q)
    _common(q, "csv")

    p = sub.add_parser("contour", help="key rate over fibre length and purification round")
    p.add_argument("--noise", required=True, choices=KINDS)
    p.add_argument("--lc-km", type=float, default=None)
    p.add_argument("--l-max", type=float, default=60.0)
    p.add_argument("--l-step", type=float, default=1.0)
    p.add_argument("--max-round", type=int, default=10)
    p.add_argument("--policy", choices=[r.value for r in pu.RoundPolicy], default=pu.RoundPolicy.CYCLIC.value)
    _security(p)
    p.set_defaults(eta=0.9)
    _common(p, "csv")

    p = sub.add_parser("table", help="threshold summary for all channels")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--length-km", type=float, default=30.0)
    _common(p)

    p = sub.add_parser("validate", help="run the invariant suite")
    _common(p, "csv")
    return parser


def scenario_from_args(a: argparse.Namespace) -> ex.Scenario:
    base = ex.Scenario()
    if getattr(a, "scenario", None):
        with open(a.scenario) as fh:
            base = ex.Scenario.from_json(fh.read())
    d = base.to_dict()
    pur = d.pop("purification")
    d.update(pur)
    if a.noise:
        params = a.param or []
        if params and len(params) != len(a.noise):
            raise UsageError("give one --param per --noise")
        if not params and a.length_km is None:
            raise UsageError("--noise needs --param or --length-km")
        stages = []
        for i, kind in enumerate(a.noise):
            if params:
                stages.append({"kind": kind, "param": params[i]})
            else:
                stages.append({"kind": kind, "length_km": a.length_km, "lc_km": a.lc_km})
        d["channels"] = stages
    elif a.param:
        raise UsageError("--param given without --noise")
    if a.side is not None:
        d["side"] = a.side
    if a.theta is not None:
        d["theta"] = a.theta
    d["eta_b"] = a.eta
    d["binning"] = a.binning
    d["bound_method"] = a.bound
    if getattr(a, "rounds", None) is not None:
        d["rounds"] = a.rounds
    if getattr(a, "no_twirl_each_round", False):
        d["twirl_each_round"] = False
    if getattr(a, "policy", None) is not None:
        d["round_policy"] = a.policy
    return ex.Scenario(**d)


def _record_csv(rec: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(rec))
    w.writerow([ex._fmt(v) for v in rec.values()])
    return buf.getvalue()


def _render(obj, fmt: str) -> str:
    if isinstance(obj, ex.SweepResult):
        return obj.to_csv() if fmt == "csv" else obj.to_json() + "\n"
    if isinstance(obj, pu.PurificationTrace):
        return obj.to_csv() if fmt == "csv" else obj.to_json() + "\n"
    if fmt == "csv":
        return _record_csv(obj)
    return json.dumps(obj, indent=2) + "\n"


def _run(a: argparse.Namespace) -> tuple:
    cmd = a.command
    if cmd == "keyrate":
        sc = scenario_from_args(a)
        return ex.evaluate(sc).to_dict(), 0
    if cmd == "threshold" and a.target == "eta":
        sc = scenario_from_args(a)
        eta = pr.min_efficiency(sc.state(), sc.bound_method, sc.binning, a.tol)
        return {"noise_kind": sc.noise_kind(), "param": sc.noise_param(), "eta_min": eta}, 0
    if cmd == "threshold":
        if a.steering_only:
            m = pr.MeasurementModel(a.eta)

            def steers(x):
                return pr.steering_s2(pr.statistics(pr.noisy_state(a.noise, x, a.theta, a.side), m), a.binning) > pr.STEERING_BOUND

            root = pr._noise_root(a.noise, steers, a.tol)
            return {"noise_kind": a.noise, "eta_b": a.eta, "steering_critical": root}, 0
        crit = pr.critical_noise(a.noise, a.eta, a.bound, a.binning, a.tol, a.theta, a.side)
        d = crit.to_dict()
        d["noise_kind"] = d.pop("kind")
        return d, 0
    if cmd == "esd":
        e = ex._esd(ch.ChannelKind(a.kind), a.tol)
        return {"noise_kind": a.kind, "esd": e["value"], "sudden_death": e["sudden_death"]}, 0
    if cmd == "purify":
        sc = scenario_from_args(a)
        return ex.purify(sc), 0
    if cmd == "sweep":
        if a.axis == "eta":
            return ex.sweep_efficiency(scenario_from_args(a), a.points, (a.eta_min, a.eta_max)), 0
        if a.axis == "noise":
            return ex.sweep_noise(a.noise, a.eta, a.points, a.step, a.theta, a.binning, a.bound, a.side), 0
        return ex.sweep_theta(a.eta, a.points, a.binning, a.bound), 0
    if cmd == "contour":
        n = int(round(a.l_max / a.l_step))
        ls = [i * a.l_step for i in range(n + 1)]
        return ex.contour_grid(a.noise, a.lc_km, ls, a.max_round, a.eta, a.binning, a.bound, a.policy), 0
    if cmd == "table":
        return ex.threshold_table(a.eta, length_km=a.length_km), 0
    if cmd == "validate":
        results = val.run_all()
        rows = [{"check": n, "passed": bool(ok), "detail": d} for n, ok, d in results]
        code = 0 if all(r["passed"] for r in rows) else 1
        if a.format == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["check", "passed", "detail"])
            for r in rows:
                w.writerow([r["check"], "true" if r["passed"] else "false", r["detail"]])
            return buf.getvalue(), code
        return {"passed": code == 0, "checks": rows}, code
    raise UsageError(f"unknown command {cmd}")  # pragma: no cover


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        obj, code = _run(a)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"sdiqkd: error: {exc}\n")
        return 2
    except DomainError as exc:
        _emit(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n", None)
        return 1
    except ValueError as exc:
        sys.stderr.write(f"sdiqkd: error: {exc}\n")
        return 2
    _emit(obj if isinstance(obj, str) else _render(obj, a.format), a.out)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
