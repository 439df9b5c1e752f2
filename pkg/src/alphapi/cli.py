"""Command-line runner: ``alphapi <command> [--config FILE] [options]``.

Commands write CSV tables and a ``manifest.ini`` into ``--out-dir``.  The
manifest can be passed back with ``--config`` to repeat a run exactly.

Exit codes: 0 success, 1 usage or configuration error, 2 the learner did not
converge (or the replay blew up), 3 the game has no stabilizing solution.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config, manifest_text
from .errors import AlphaPIError, GammaTooSmall, StaleData
from .experiments import ExampleAConfig, linear_spec, run_example_a, run_oracle
from .missile import run_engagement
from .offpolicy import DataSet, StackedWeights, collect, offpolicy_solve

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2
EXIT_INFEASIBLE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="alphapi", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-cycle warnings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "example-a": "nonlinear benchmark: collect, learn, replay",
        "missile": "missile engagement with periodic re-learning",
        "oracle": "compare off-policy learning with the game Riccati solution",
        "collect": "record a data set for later solves",
        "solve": "run off-policy iteration on a stored data set",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="INI configuration or a previous manifest")
        p.add_argument("--seed", type=int, help="override the random seed")
        p.add_argument("--alpha", type=float, help="override the Newton step size")
        p.add_argument("--out-dir", default=".", help="output directory (default: .)")
        p.add_argument("--format", choices=["csv"], default="csv", help="table format")
        if name == "solve":
            p.add_argument("--data", required=True, help="data set written by 'collect'")
    return parser


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([_fmt(v) for v in row])


def _weight_header(bases, m, q):
    head = [f"Wc[{lab}]" for lab in bases.critic.labels()]
    for j in range(m):
        head += [f"Wa{j + 1}[{lab}]" for lab in bases.actor.labels()]
    for k in range(q):
        head += [f"Wd{k + 1}[{lab}]" for lab in bases.disturbance.labels()]
    return head


def _write_history(path, res, bases, m, q):
    rows = []
    for i, W in enumerate(res.history):
        change = res.changes[i - 1] if i else float("nan")
        rows.append([i, change, *W.stack()])
    write_csv(path, ["iteration", "change", *_weight_header(bases, m, q)], rows)


def _write_manifest(out, cfg, command, run=None, result=None):
    (out / "manifest.ini").write_text(manifest_text(cfg, command, run, result))


def _solve_result(res):
    return {"converged": res.converged, "iterations": res.iterations,
            "weights": res.weights.stack()}


def _window_rows(data):
    """Sub-step states of a data set on one time axis (shared endpoints once)."""
    rows = []
    for j, win in enumerate(data.windows):
        h = win.dt / (len(win.substep_states) - 1)
        for k, x in enumerate(win.substep_states):
            if k == 0 and j > 0:
                continue
            rows.append([win.t_start + k * h, *x, "collect"])
    return rows


def cmd_example_a(cfg, out):
    res = run_example_a(cfg)
    n = 2
    m = q = 1
    bases = cfg.bases()
    _write_history(out / "weights_per_iter.csv", res.solve, bases, m, q)
    xs = [f"x{i + 1}" for i in range(n)]
    traj = _window_rows(res.data)
    traj += [[t, *x, "replay"] for t, x in zip(res.replay_t, res.replay_x)]
    write_csv(out / "trajectory.csv", ["t_s", *xs, "phase"], traj)
    inputs = [[w.t_start, *w.behavior_control, *w.behavior_disturbance, "collect"]
              for w in res.data.windows]
    inputs += [[t, *u, *w, "replay"] for t, u, w in zip(res.replay_t, res.replay_u, res.replay_w)]
    write_csv(out / "inputs.csv", ["t_s", "u", "w", "phase"], inputs)
    write_csv(out / "attenuation.csv", ["t_s", "attenuation"],
              zip(res.replay_t, res.attenuation))
    summary = {**_solve_result(res.solve), "attenuation_final": res.attenuation_final,
               "replay_error": res.replay_error or "none"}
    write_csv(out / "summary.csv", ["quantity", "value"],
              [(k, v) for k, v in summary.items() if k != "weights"])
    _write_manifest(out, cfg, "example-a", result=summary)
    print(f"converged={res.solve.converged} iterations={res.solve.iterations} "
          f"attenuation_final={res.attenuation_final:.4f}")
    print("critic weights:", " ".join(f"{w:.6g}" for w in res.solve.weights.critic))
    if res.replay_error:
        print(f"error: {res.replay_error}", file=sys.stderr)
    if not res.solve.converged:
        print(f"error: no convergence in {res.solve.iterations} iterations", file=sys.stderr)
    return EXIT_OK if res.solve.converged and res.replay_error is None else EXIT_NOT_CONVERGED


def cmd_missile(cfg, out):
    try:
        res = run_engagement(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    bases = cfg.bases()
    write_csv(out / "trajectories.csv",
              ["t_s", "missile_x_m", "missile_z_m", "target_x_m", "target_z_m", "range_m",
               "los_rad", "los_rate_rad_s"], res.trajectory)
    write_csv(out / "accel.csv", ["t_s", "a_M_m_s2", "a_T_m_s2"], res.accel)
    write_csv(out / "actor_weights.csv",
              ["cycle", "t_end_s", *[f"Wa[{lab}]" for lab in bases.actor.labels()]],
              [[i + 1, c.t_end, *c.actor] for i, c in enumerate(res.cycles)])
    write_csv(out / "iterations.csv",
              ["cycle", "t_end_s", "iterations", "converged", "flagged", "message"],
              [[i + 1, c.t_end, c.iterations, c.converged, c.failed, c.message or "-"]
               for i, c in enumerate(res.cycles)])
    counts = res.iteration_counts
    summary = {
        "miss_distance_m": res.miss_distance,
        "intercept_time_s": res.intercept_time,
        "cycles": len(res.cycles),
        "flagged_cycles": sum(c.failed for c in res.cycles),
        "max_iterations": max(counts) if counts else 0,
    }
    write_csv(out / "summary.csv", ["quantity", "value"], summary.items())
    final = [c.actor for c in res.cycles if not c.failed]
    result = dict(summary)
    if final:
        result["final_actor_weights"] = final[-1]
    _write_manifest(out, cfg, "missile", result=result)
    print(f"miss distance {res.miss_distance:.4f} m at t = {res.intercept_time:.4f} s; "
          f"{summary['cycles']} cycles, {summary['flagged_cycles']} flagged, "
          f"max {summary['max_iterations']} iterations per solve")
    return EXIT_OK


def cmd_oracle(cfg, out):
    res = run_oracle(cfg)
    g = res.gare
    with np.printoptions(precision=10, suppress=False):
        print(f"GareSolution(iterations={g.iterations}, residual={g.residual:.3e})")
        print("P =", g.P, "K =", g.K, "L =", g.L, sep="\n")
    bases = cfg.bases()
    _write_history(out / "weights_per_iter.csv", res.solve, bases, len(cfg.B[0]), len(cfg.D[0]))
    write_csv(out / "deltas.csv", ["entry", "oracle", "learned", "relative_delta"], res.deltas)
    summary = {**_solve_result(res.solve), "max_relative_delta": res.max_relative_delta,
               "gare_iterations": g.iterations, "gare_residual": g.residual}
    write_csv(out / "summary.csv", ["quantity", "value"],
              [(k, v) for k, v in summary.items() if k != "weights"])
    _write_manifest(out, cfg, "oracle", result=summary)
    print(f"learner converged={res.solve.converged} in {res.solve.iterations} iterations; "
          f"max relative delta {res.max_relative_delta:.3e}")
    return EXIT_OK if res.solve.converged else EXIT_NOT_CONVERGED


def _problem(cfg):
    if isinstance(cfg, ExampleAConfig):
        return cfg.spec(), cfg.bases()
    return linear_spec(cfg), cfg.bases()


def cmd_collect(cfg, out):
    spec, _ = _problem(cfg)
    data = collect(spec, cfg.x0, cfg.windows, cfg.dt, seed=cfg.seed, substeps=cfg.substeps,
                   amplitude=cfg.amplitude)
    data.save(out / "dataset.txt")
    _write_manifest(out, cfg, "collect", result={"windows": len(data),
                                                 "dataset_sha256": data.digest()})
    print(f"recorded {len(data)} windows to {out / 'dataset.txt'}")
    return EXIT_OK


def cmd_solve(cfg, out, data_path):
    spec, bases = _problem(cfg)
    try:
        data = DataSet.load(data_path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load data set {data_path}: {exc}") from exc
    try:
        data.check_compatible(spec)
    except StaleData as exc:
        raise ConfigError(str(exc)) from exc
    m, q = data.control_dim, data.disturbance_dim
    res = offpolicy_solve(spec, data, bases, StackedWeights.zeros(bases, m, q), cfg.alpha,
                          cfg.tolerance, cfg.max_iterations, cfg.rtol)
    _write_history(out / "weights_per_iter.csv", res, bases, m, q)
    summary = _solve_result(res)
    write_csv(out / "summary.csv", ["quantity", "value"],
              [(k, v) for k, v in summary.items() if k != "weights"])
    _write_manifest(out, cfg, "solve", run={"data": str(data_path),
                                            "dataset_sha256": data.digest()}, result=summary)
    print(f"converged={res.converged} iterations={res.iterations}")
    print("critic weights:", " ".join(f"{w:.6g}" for w in res.weights.critic))
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


COMMANDS = {"example-a": cmd_example_a, "missile": cmd_missile, "oracle": cmd_oracle,
            "collect": cmd_collect, "solve": cmd_solve}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.alpha is not None:
        if args.command == "collect":
            print("alphapi: error: --alpha does not apply to collect", file=sys.stderr)
            return EXIT_USAGE
        if not 0.0 < args.alpha <= 1.0:
            print(f"alphapi: error: --alpha must lie in (0, 1], got {args.alpha}",
                  file=sys.stderr)
            return EXIT_USAGE
        overrides["alpha"] = args.alpha
    start = time.perf_counter()
    try:
        cfg = load_config(args.config, args.command, overrides)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "solve":
            code = cmd_solve(cfg, out, args.data)
        else:
            code = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"alphapi: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GammaTooSmall as exc:
        print(f"alphapi: infeasible instance: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except AlphaPIError as exc:
        print(f"alphapi: run failed: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    print(f"runtime {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
