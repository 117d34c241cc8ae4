"""Command-line front end: ``tdsched {simulate,solve,analyze,generate,mechanism}``.

Every command prints one JSON report (or writes it to ``--out``). Exit codes:
0 success, 1 input or parameter problem, 2 class mismatch, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .core import NumericMode, classify
from .equilibrium import (
    DEFAULT_BUDGET,
    POLICIES,
    Converged,
    brd,
    compute_poa_pos,
    is_nash,
    ne_set,
    optimal_makespan,
)
from .errors import (
    BudgetExceeded,
    ClassMismatch,
    InfeasibleSpec,
    InvalidInstance,
    MalformedProfile,
    ParameterInfeasible,
    ParseError,
    SchedulingError,
    StepBudgetExceeded,
)
from . import generators as gen
from .io import (
    instance_digest,
    instance_json,
    load_3dm,
    load_instance,
    parse_profile,
    profile_to_dict,
    render_number,
    schedule_to_dict,
)
from .mechanisms import mechanism_outcome, poa_bound
from .schedule import build_schedule
from .solvers import TIE_BREAKS, greedy_general, list_scheduling, solve_symmetric, solve_two_machines

EXIT_OK, EXIT_INPUT, EXIT_CLASS, EXIT_BUDGET = 0, 1, 2, 3

FAMILIES = (
    "noNE2",
    "noNE3",
    "poa_r",
    "exponential",
    "arb_lb",
    "global_lb",
    "sdr_lb",
    "sbpt_tight",
    "reduce3dm",
    "random",
)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--numeric", choices=("rational", "float"), help="override the instance's numeric mode")
    parser.add_argument("--tol", type=float, default=1e-9, help="float comparison tolerance")
    parser.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="largest m^n for exhaustive search")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=Path, default=None, help="write the output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdsched", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="build the schedule of a profile")
    p.add_argument("instance", type=Path)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--profile", help='e.g. "u:0,v:1", "0,1" or "[0,1]"')
    src.add_argument("--profile-file", type=Path)
    _common(p)

    p = sub.add_parser("solve", help="run a constructive equilibrium algorithm")
    p.add_argument("instance", type=Path)
    p.add_argument("--algorithm", required=True, choices=("symmetric", "two_machines", "ls", "greedy"))
    p.add_argument("--tie-break", default="lowest_index", choices=TIE_BREAKS)
    _common(p)

    p = sub.add_parser("analyze", help="dynamics, equilibrium enumeration or PoA/PoS")
    p.add_argument("instance", type=Path)
    p.add_argument("task", choices=("brd", "enumerate", "poa"))
    p.add_argument("--policy", default="round_robin", choices=POLICIES)
    p.add_argument("--start", help="initial profile for brd (default: everyone on machine 0)")
    p.add_argument("--max-steps", type=int, default=100_000)
    p.add_argument("--method", default="brute", choices=("brute", "ls", "search"))
    _common(p)

    p = sub.add_parser("generate", help="write a named or random instance")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--B", dest="big_b")
    p.add_argument("--tau")
    p.add_argument("--eps")
    p.add_argument("--in", dest="infile", type=Path, help="3DM text file for reduce3dm")
    p.add_argument("--class", dest="cls", default="any", help="class alias or flags joined by '+'")
    p.add_argument("--b-max", default="10")
    p.add_argument("--rate-max", default="1")
    p.add_argument("--den", type=int, default=4)
    _common(p)

    p = sub.add_parser("mechanism", help="apply a coordination mechanism")
    p.add_argument("instance", type=Path)
    p.add_argument("--policy", required=True, choices=("sdr", "sdr_dynamic", "lbdr", "sbpt"))
    p.add_argument("--tie-break", default="lowest_index", choices=TIE_BREAKS)
    _common(p)
    return parser


# ------------------------------------------------------------------ helpers


def _load(args: argparse.Namespace):
    game = load_instance(args.instance)
    if args.numeric:
        game = game.with_mode(NumericMode(args.numeric, args.tol))
    elif not game.numeric_mode.exact and args.tol != game.numeric_mode.tol:
        game = game.with_mode(NumericMode("float", args.tol))
    return game


def _report(command: str, game, results: dict[str, Any], seed: int | None) -> dict[str, Any]:
    return {
        "command": command,
        "instance_digest": instance_digest(game),
        "results": results,
        "seed": seed,
        "version": __version__,
    }


def _require(value, flag: str, family: str):
    if value is None:
        raise ParameterInfeasible(f"{family} needs --{flag}")
    return value


# ----------------------------------------------------------------- commands


def cmd_simulate(args: argparse.Namespace) -> dict[str, Any]:
    game = _load(args)
    if args.profile_file is not None:
        try:
            text = args.profile_file.read_text()
        except OSError as exc:
            raise ParseError(f"{args.profile_file}: {exc.strerror or exc}") from None
    else:
        text = args.profile
    profile = parse_profile(game, text)
    sched = build_schedule(game, profile)
    return _report("simulate", game, {"schedule": schedule_to_dict(game, sched)}, args.seed)


def cmd_solve(args: argparse.Namespace) -> dict[str, Any]:
    game = _load(args)
    if args.algorithm == "symmetric":
        profile = solve_symmetric(game)
    elif args.algorithm == "two_machines":
        profile = solve_two_machines(game)
    elif args.algorithm == "ls":
        profile = list_scheduling(game, args.tie_break)
    else:
        profile = greedy_general(game)
    sched = build_schedule(game, profile)
    ok, dev = is_nash(game, profile, sched)
    results = {
        "algorithm": args.algorithm,
        "tie_break": args.tie_break if args.algorithm == "ls" else None,
        "profile": profile_to_dict(game, profile),
        "schedule": schedule_to_dict(game, sched),
        "is_nash": ok,
        "violation": None if dev is None else _deviation(game, dev),
    }
    return _report("solve", game, results, args.seed)


def _short(x) -> str | None:
    """Exact text for rationals, the decimal rendering otherwise."""
    rendered = render_number(x)
    if rendered is None:
        return None
    return rendered["exact"] or rendered["decimal"]


def _deviation(game, dev) -> dict[str, Any]:
    return {
        "job": game.label(dev.job),
        "from": dev.source,
        "to": dev.target,
        "old_cost": render_number(dev.old_cost),
        "new_cost": render_number(dev.new_cost),
    }


def cmd_analyze(args: argparse.Namespace) -> dict[str, Any]:
    game = _load(args)
    if args.task == "brd":
        start = parse_profile(game, args.start) if args.start else (0,) * game.n
        out = brd(game, start, policy=args.policy, max_steps=args.max_steps, seed=args.seed)
        if isinstance(out, Converged):
            results = {
                "outcome": "converged",
                "steps": out.steps,
                "profile": profile_to_dict(game, out.profile),
                "makespan": render_number(build_schedule(game, out.profile).makespan),
            }
        else:
            results = {
                "outcome": "cycle",
                "entry_step": out.entry_step,
                "cycle_length": len(out.cycle_profiles),
                "cycle_profiles": [list(p) for p in out.cycle_profiles],
                "deviations": [_deviation(game, d) for d in out.deviations],
            }
        results["policy"] = args.policy
    elif args.task == "enumerate":
        profiles = sorted(ne_set(game, args.method, args.budget))
        results = {
            "method": args.method,
            "ne_count": len(profiles),
            "ne_profiles": [list(p) for p in profiles],
            "makespans": [render_number(build_schedule(game, p).makespan) for p in profiles],
        }
    else:
        rep = compute_poa_pos(game, args.budget, args.method)
        results = {
            "method": args.method,
            "ne_count": len(rep.ne_profiles),
            "opt_makespan": render_number(rep.opt_makespan),
            "opt_profile": list(rep.opt_profile),
            "max_ne_makespan": render_number(rep.max_ne_makespan),
            "min_ne_makespan": render_number(rep.min_ne_makespan),
            "worst_ne": None if rep.worst_ne is None else list(rep.worst_ne),
            "best_ne": None if rep.best_ne is None else list(rep.best_ne),
            "poa": _short(rep.poa),
            "pos": _short(rep.pos),
            "poa_value": render_number(rep.poa),
            "pos_value": render_number(rep.pos),
        }
    return _report(f"analyze {args.task}", game, results, args.seed)


def _generate(args: argparse.Namespace):
    fam = args.family
    mode = NumericMode(args.numeric or "rational", args.tol)
    if fam == "noNE2":
        return gen.gen_noNE2(mode)
    if fam == "noNE3":
        return gen.gen_noNE3(mode)
    if fam == "sbpt_tight":
        return gen.gen_sbpt_tight(mode)
    if fam == "poa_r":
        return gen.gen_poa_r(_require(args.m, "m", fam), _require(args.r, "r", fam), mode)
    if fam == "exponential":
        m, k, a = (_require(getattr(args, f), f, fam) for f in ("m", "k", "a"))
        return gen.gen_exponential(m, k, a, mode)
    if fam == "arb_lb":
        return gen.gen_arbitrary_lb(_require(args.m, "m", fam), _require(args.eps, "eps", fam), mode)
    if fam == "global_lb":
        return gen.gen_global_lb(_require(args.m, "m", fam), _require(args.eps, "eps", fam), mode)
    if fam == "sdr_lb":
        b, a, tau, k, m = (_require(getattr(args, f), f, fam) for f in ("b", "a", "tau", "k", "m"))
        big = _require(args.big_b, "B", fam)
        return gen.gen_sdr_lb(b, a, big, tau, k, m, mode, eps=args.eps)
    if fam == "reduce3dm":
        return gen.reduce_3dm(load_3dm(_require(args.infile, "in", fam)), mode)
    n, m = _require(args.n, "n", fam), _require(args.m, "m", fam)
    seed = 0 if args.seed is None else args.seed
    return gen.sample_random(
        args.cls, n, m, seed, b_max=args.b_max, rate_max=args.rate_max, den=args.den, mode=mode
    )


def cmd_generate(args: argparse.Namespace) -> str:
    return instance_json(_generate(args))


def cmd_mechanism(args: argparse.Namespace) -> dict[str, Any]:
    game = _load(args)
    kind = {"sdr": "SDR", "sdr_dynamic": "SDR_dynamic", "lbdr": "LBDR", "sbpt": "SBPT"}[args.policy]
    ruled, profile, sched = mechanism_outcome(game, kind, args.tie_break)
    opt, source = None, None
    if game.m**game.n <= args.budget:
        opt, source = optimal_makespan(game, args.budget)[0], "brute_force"
    elif "described_opt" in game.meta:
        # a witness schedule bounds the optimum from above
        opt, source = build_schedule(game, game.meta["described_opt"]).makespan, "described_witness"
    rate = game.jobs[0].a if kind == "SBPT" else None
    bound = poa_bound(kind, game.m, rate)
    ratio = None if opt is None or opt == 0 else sched.makespan / opt
    results = {
        "policy": args.policy,
        "priority": [game.label(i) for i in ruled.machines[0].priority],
        "profile": profile_to_dict(game, profile),
        "schedule": schedule_to_dict(game, sched),
        "opt_makespan": render_number(opt),
        "opt_source": source,
        "ratio": render_number(ratio),
        "bound": render_number(bound),
        "within_bound": None if ratio is None else game.numeric_mode.le(ratio, bound),
        "class": sorted(classify(game).flags()),
    }
    return _report("mechanism", game, results, args.seed)


COMMANDS = {
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "analyze": cmd_analyze,
    "generate": cmd_generate,
    "mechanism": cmd_mechanism,
}


def _emit(payload: Any, out: Path | None) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _emit(COMMANDS[args.command](args), args.out)
    except ClassMismatch as exc:
        flag = f" [{exc.flag}]" if exc.flag else ""
        print(f"error: class mismatch{flag}: {exc}", file=sys.stderr)
        return EXIT_CLASS
    except (BudgetExceeded, StepBudgetExceeded) as exc:
        print(f"error: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ParseError, MalformedProfile, InvalidInstance, ParameterInfeasible, InfeasibleSpec) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, SchedulingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
