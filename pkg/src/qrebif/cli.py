"""Command-line front door.

Subcommands: analyze, diagram, qre, plan, simulate.  Structured results go
to JSON, sampled series to CSV (floats at 17 significant digits), figures to
PNG next to the data.  Every run that writes files also writes exactly one
manifest recording the command, input digest, parameters, and output list.

Exit codes: 0 success, 2 input error, 3 infeasible or unsupported mechanism,
4 schedule stall.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation import BifurcationDiagram, threshold_temps, trace_diagram
from .dynamics import (
    DiscreteAgentConfig,
    IntegratorConfig,
    Trajectory,
    integrate,
    q_from_expected_payoffs,
    simulate_discrete_q,
)
from .errors import (
    InfeasibleMechanismError,
    ScheduleStalledError,
    UndefinedRatioError,
    UnsupportedClassError,
)
from .games import (
    PayoffMatrices,
    StrategyProfile,
    classify,
    diagonal_form,
    is_strict_coordination,
    max_welfare,
    mixed_nash,
    poa_pos,
    pure_nash,
    social_welfare,
)
from .mechanism import (
    execute,
    plan_from_json,
    plan_hysteresis,
    plan_optimal_control,
    plan_to_dict,
)
from .numerics import T_MIN
from .qre import TemperaturePair, enumerate_qre

FLOAT_FMT = ".17g"


def _fmt(x: float) -> str:
    return format(float(x), FLOAT_FMT)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _np_scalar(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _write_json(path: Path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, default=_np_scalar) + "\n")


def _load_game(path: str) -> PayoffMatrices:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _InputError(f"cannot read game file {path}: {exc}")
    try:
        return PayoffMatrices.from_json(text)
    except json.JSONDecodeError as exc:
        raise _InputError(f"malformed game JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    except ValueError as exc:
        raise _InputError(f"invalid game file: {exc}")


class _InputError(Exception):
    pass


def _parse_init(text: str) -> StrategyProfile:
    try:
        xs, ys = text.split(",")
        x, y = float(xs), float(ys)
    except ValueError:
        raise _InputError("--init expects 'x,y' with two numbers")
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise _InputError("--init probabilities must lie in [0, 1]")
    return StrategyProfile(x, y)


def _manifest(
    command: str, game_path: str, params: dict, outputs: list[Path], where: Path
) -> None:
    digest = hashlib.sha256(Path(game_path).read_bytes()).hexdigest()
    obj = {
        "command": command,
        "input": Path(game_path).name,
        "input_sha256": digest,
        "parameters": params,
        "tool_version": __version__,
        "outputs": sorted(p.name for p in outputs),
    }
    _write_json(where, obj)


def _temps_or_die(t_x: float, t_y: float) -> TemperaturePair:
    try:
        return TemperaturePair(t_x, t_y)
    except ValueError as exc:
        raise _InputError(str(exc))


# ---------------------------------------------------------------------------
# analyze


def _analysis_dict(game: PayoffMatrices) -> dict:
    diag = diagonal_form(game)
    pnes = pure_nash(game)
    mixed_norm = mixed_nash(diag)
    mixed = diag.orientation.to_original(mixed_norm) if mixed_norm else None
    so, so_sw = max_welfare(game)
    corner_sw = {
        f"({int(p.x)},{int(p.y)})": social_welfare(game, p)
        for p in (StrategyProfile(1, 1), StrategyProfile(1, 0), StrategyProfile(0, 1), StrategyProfile(0, 0))
    }
    th = threshold_temps(diag)
    out = {
        "diagonal_form": {
            "a_x": diag.a_x, "b_x": diag.b_x, "a_y": diag.a_y, "b_y": diag.b_y,
            "swap_p1": diag.orientation.swap_p1, "swap_p2": diag.orientation.swap_p2,
            "degenerate": diag.degenerate,
        },
        "game_class": classify(diag).value,
        "strict_coordination": is_strict_coordination(diag),
        "pure_nash": [[p.x, p.y] for p in pnes],
        "mixed_nash": [mixed.x, mixed.y] if mixed else None,
        "socially_optimal": {"state": [so.x, so.y], "welfare": so_sw},
        "corner_welfare": corner_sw,
        "best_pure_nash_welfare": max((social_welfare(game, p) for p in pnes), default=None),
        "thresholds": {"t_i": th.t_i, "t_b": th.t_b, "t_a": th.t_a, "degenerate": th.degenerate},
    }
    try:
        poa, pos = poa_pos(game, pnes) if pnes else (None, None)
        out["poa"], out["pos"] = poa, pos
        out["efficiency_warning"] = None
    except UndefinedRatioError as exc:
        out["poa"] = out["pos"] = None
        out["efficiency_warning"] = str(exc)
    return out


def _print_analysis(d: dict) -> None:
    df = d["diagonal_form"]
    print(f"diagonal form: a_X={df['a_x']:g} b_X={df['b_x']:g} a_Y={df['a_y']:g} b_Y={df['b_y']:g}"
          + (" (labels swapped)" if df["swap_p1"] or df["swap_p2"] else ""))
    print(f"class: {d['game_class']}" + (" (strict coordination)" if d["strict_coordination"] else ""))
    print("pure Nash equilibria: " + (", ".join(f"({x:g},{y:g})" for x, y in d["pure_nash"]) or "none"))
    if d["mixed_nash"]:
        print(f"mixed Nash equilibrium: ({d['mixed_nash'][0]:.6g}, {d['mixed_nash'][1]:.6g})")
    so = d["socially_optimal"]
    print(f"socially optimal: ({so['state'][0]:g},{so['state'][1]:g}) with welfare {so['welfare']:.6g}")
    print("corner welfare: " + ", ".join(f"{k}={v:.6g}" for k, v in d["corner_welfare"].items()))
    if d["best_pure_nash_welfare"] is not None:
        print(f"best pure-Nash welfare: {d['best_pure_nash_welfare']:.6g}")
    if d["efficiency_warning"]:
        print(f"PoA/PoS undefined: {d['efficiency_warning']}")
    elif d["poa"] is not None:
        print(f"PoA={d['poa']:.6g}  PoS={d['pos']:.6g}  (over pure equilibria)")
    th = d["thresholds"]
    if not th["degenerate"]:
        print(f"thresholds: T_I={th['t_i']:.6g} T_B={th['t_b']:.6g} T_A={th['t_a']:.6g}")
    else:
        print("thresholds: degenerate (ln(a_X/b_X) undefined or zero)")


def cmd_analyze(args) -> int:
    game = _load_game(args.game)
    d = _analysis_dict(game)
    _print_analysis(d)
    if args.out:
        out = Path(args.out)
        _write_json(out, d)
        _manifest("analyze", args.game, {}, [out], out.with_name(out.stem + ".manifest.json"))
    return 0


# ---------------------------------------------------------------------------
# diagram


def _ty_tag(t_y: float) -> str:
    return format(t_y, "g").replace(".", "p").replace("-", "m")


def _diagram_csv(diagram: BifurcationDiagram) -> str:
    lines = ["x,y,t_x,branch_id,principal,stable"]
    for bid, b in enumerate(diagram.branches):
        for k in range(b.x.size):
            lines.append(
                f"{_fmt(b.x[k])},{_fmt(b.y[k])},{_fmt(b.t_x[k])},{bid},"
                f"{int(b.is_principal)},{int(bool(b.stable[k]))}"
            )
    return "\n".join(lines) + "\n"


def cmd_diagram(args) -> int:
    game = _load_game(args.game)
    for t_y in args.ty:
        if t_y < T_MIN:
            raise _InputError(f"--ty must be >= {T_MIN}")
    if args.grid < 256:
        raise _InputError("--grid must be >= 256")
    diag = diagonal_form(game)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    def trace(t_y: float) -> BifurcationDiagram:
        return trace_diagram(diag, t_y, args.grid)

    workers = int(os.environ.get("QREBIF_THREADS", "1"))
    if workers > 1 and len(args.ty) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            diagrams = list(pool.map(trace, args.ty))
    else:
        diagrams = [trace(t) for t in args.ty]

    outputs: list[Path] = []
    for t_y, dg in zip(args.ty, diagrams):
        tag = _ty_tag(t_y)
        csv_path = outdir / f"diagram_ty{tag}.csv"
        _atomic_write(csv_path, _diagram_csv(dg))
        th = dg.thresholds
        sidecar = {
            "t_y": t_y,
            "thresholds": {"t_i": th.t_i, "t_b": th.t_b, "t_a": th.t_a, "degenerate": th.degenerate},
            "critical_temp": dg.critical_temp,
            "n_branches": len(dg.branches),
            "principal_side": dg.principal.side.value,
        }
        json_path = outdir / f"diagram_ty{tag}.json"
        _write_json(json_path, sidecar)
        outputs.extend([csv_path, json_path])
        if not args.no_plot:
            from .plotting import plot_diagram

            png_path = outdir / f"diagram_ty{tag}.png"
            plot_diagram(dg, str(png_path))
            outputs.append(png_path)
    _manifest(
        "diagram", args.game,
        {"ty": list(args.ty), "grid": args.grid, "plot": not args.no_plot},
        outputs, outdir / "manifest.json",
    )
    return 0


# ---------------------------------------------------------------------------
# qre


def cmd_qre(args) -> int:
    game = _load_game(args.game)
    temps = _temps_or_die(args.tx, args.ty)
    if args.grid < 100:
        raise _InputError("--grid must be >= 100")
    diag = diagonal_form(game)
    points = enumerate_qre(diag, temps, args.grid)
    payload = [
        {"x": p.x, "y": p.y, "t_x": p.t_x, "t_y": p.t_y, "stability": p.stability.value}
        for p in points
    ]
    text = json.dumps(payload, indent=2)
    if args.out:
        out = Path(args.out)
        _atomic_write(out, text + "\n")
        _manifest(
            "qre", args.game, {"tx": args.tx, "ty": args.ty, "grid": args.grid},
            [out], out.with_name(out.stem + ".manifest.json"),
        )
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# plan


def cmd_plan(args) -> int:
    game = _load_game(args.game)
    initial = None
    if args.tx is not None or args.ty is not None:
        if args.tx is None or args.ty is None:
            raise _InputError("--tx and --ty must be given together")
        initial = _temps_or_die(args.tx, args.ty)
    if args.mechanism == "hysteresis":
        plan = plan_hysteresis(game, initial_temps=initial)
    else:
        plan = plan_optimal_control(
            game, initial_temps=initial, delta=args.delta,
            on_principal_branch=args.on_principal_branch,
        )
    obj = plan_to_dict(plan)
    text = json.dumps(obj, indent=2)
    if args.out:
        out = Path(args.out)
        _atomic_write(out, text + "\n")
        _manifest(
            "plan", args.game,
            {"mechanism": args.mechanism, "delta": args.delta,
             "tx": args.tx, "ty": args.ty},
            [out], out.with_name(out.stem + ".manifest.json"),
        )
    else:
        print(text)
    return 0


# ---------------------------------------------------------------------------
# simulate


def _trajectory_csv(traj: Trajectory) -> str:
    lines = ["t,x,y,t_x,t_y,sw,entropy"]
    for k in range(len(traj)):
        lines.append(
            ",".join(
                _fmt(col[k])
                for col in (traj.t, traj.x, traj.y, traj.t_x, traj.t_y, traj.sw, traj.entropy)
            )
        )
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    game = _load_game(args.game)
    init = _parse_init(args.init)
    cfg = IntegratorConfig(
        step=args.step, max_time=args.max_time, record_every=args.record_every
    )
    out = Path(args.out)
    report: dict
    if args.plan:
        try:
            plan = plan_from_json(Path(args.plan).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise _InputError(f"cannot load plan file {args.plan}: {exc}")
        result = execute(plan, game, init, cfg)
        traj = result.trajectory
        report = {
            "mode": "plan",
            "kind": plan.kind.value,
            "case_id": plan.case_id,
            "target_state": [plan.target_state.x, plan.target_state.y],
            "expected_sw": plan.expected_sw,
            "best_ne_sw": plan.best_ne_sw,
            "final_state": [result.final_state.x, result.final_state.y],
            "final_sw": result.final_sw,
            "improved": result.improved,
            "phase_endpoints": [
                {"phase": label, "state": [s.x, s.y]} for label, s in result.phase_endpoints
            ],
            "converged": traj.converged,
            "final_residual": traj.final_residual,
        }
    else:
        if args.tx is None or args.ty is None:
            raise _InputError("either --plan or both --tx and --ty are required")
        temps = _temps_or_die(args.tx, args.ty)
        if args.discrete:
            dcfg = DiscreteAgentConfig(
                alpha=args.alpha, horizon=args.rounds, seed=args.seed,
                initial_q=q_from_expected_payoffs(game, init),
            )
            traj = simulate_discrete_q(game, temps, dcfg)
            mode = "discrete"
        else:
            diag = diagonal_form(game)
            traj = integrate(diag, init, temps, cfg, welfare_game=game)
            mode = "ode"
        report = {
            "mode": mode,
            "final_state": [traj.final_state.x, traj.final_state.y],
            "final_sw": float(traj.sw[-1]),
            "converged": traj.converged,
            "final_residual": traj.final_residual,
        }
    _atomic_write(out, _trajectory_csv(traj))
    report_path = out.with_name(out.stem + ".report.json")
    _write_json(report_path, report)
    outputs = [out, report_path]
    if not args.no_plot:
        from .plotting import plot_trajectory

        png_path = out.with_name(out.stem + ".png")
        plot_trajectory(traj, str(png_path))
        outputs.append(png_path)
    _manifest(
        "simulate", args.game,
        {"plan": args.plan, "tx": args.tx, "ty": args.ty, "init": args.init,
         "discrete": args.discrete, "alpha": args.alpha, "rounds": args.rounds,
         "seed": args.seed, "step": args.step, "max_time": args.max_time,
         "record_every": args.record_every, "plot": not args.no_plot},
        outputs, out.with_name(out.stem + ".manifest.json"),
    )
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qrebif",
        description="Boltzmann Q-learning equilibrium analysis and temperature-control "
                    "mechanisms for 2x2 games",
    )
    p.add_argument("--version", action="version", version=f"qrebif {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="game summary: equilibria, welfare, thresholds")
    pa.add_argument("game", help="game JSON file {'A': [[..]], 'B': [[..]]}")
    pa.add_argument("--out", help="also write the summary as JSON")
    pa.set_defaults(func=cmd_analyze)

    pd = sub.add_parser("diagram", help="trace bifurcation diagrams at fixed T_y values")
    pd.add_argument("game")
    pd.add_argument("--ty", type=float, action="append", required=True,
                    help="column-player temperature (repeatable: one output set per value)")
    pd.add_argument("--grid", type=int, default=4096)
    pd.add_argument("--out", default="diagrams", help="output directory")
    pd.add_argument("--no-plot", action="store_true")
    pd.set_defaults(func=cmd_diagram)

    pq = sub.add_parser("qre", help="enumerate equilibria at fixed temperatures")
    pq.add_argument("game")
    pq.add_argument("--tx", type=float, required=True)
    pq.add_argument("--ty", type=float, required=True)
    pq.add_argument("--grid", type=int, default=4096)
    pq.add_argument("--out")
    pq.set_defaults(func=cmd_qre)

    pp = sub.add_parser("plan", help="plan a temperature-control mechanism")
    pp.add_argument("game")
    pp.add_argument("--mechanism", choices=("hysteresis", "optimal"), required=True)
    pp.add_argument("--tx", type=float, help="current T_x (optional)")
    pp.add_argument("--ty", type=float, help="current T_y (optional)")
    pp.add_argument("--delta", type=float, default=0.01,
                    help="boundary offset for optimal-control targets")
    pp.add_argument("--on-principal-branch", action="store_true",
                    help="use the A3' fallback when starting on the principal branch")
    pp.add_argument("--out")
    pp.set_defaults(func=cmd_plan)

    ps = sub.add_parser("simulate", help="integrate the learning flow or a plan")
    ps.add_argument("game")
    ps.add_argument("--plan", help="plan JSON produced by the plan command")
    ps.add_argument("--tx", type=float)
    ps.add_argument("--ty", type=float)
    ps.add_argument("--init", required=True, help="initial state 'x,y'")
    ps.add_argument("--discrete", action="store_true",
                    help="run the discrete Q-learning agents instead of the flow")
    ps.add_argument("--alpha", type=float, default=0.01, help="discrete learning step size")
    ps.add_argument("--rounds", type=int, default=5000, help="discrete horizon")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--step", type=float, default=1e-3)
    ps.add_argument("--max-time", type=float, default=1e4)
    ps.add_argument("--record-every", type=int, default=100)
    ps.add_argument("--out", default="trajectory.csv")
    ps.add_argument("--no-plot", action="store_true")
    ps.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleMechanismError, UnsupportedClassError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except ScheduleStalledError as exc:
        print(f"stalled: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
