"""Command-line front end.

    ajc assemble|sample|propagate|koopman|committor|coherence|convergence
        --config <file> [--out <dir>] [--seed <u64>] [--threads <n>]

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 solver
failure.  AJC_LOG selects the logging level (DEBUG/INFO/WARNING/...).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io as ajcio
from .committor import EmptyTarget, coherence_defect, committor_solve
from .galerkin import assemble
from .jumpchain import SpaceTimePoint, sample_trajectory
from .operators import NonConvergence, koopman_solve, reconstruct_propagator
from .oracle import convergence_study
from . import presets

log = logging.getLogger("ajc")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> _Parser:
    parser = _Parser(prog="ajc", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("assemble", "sample", "propagate", "koopman",
                 "committor", "coherence", "convergence"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (sampling)")
        p.add_argument("--threads", type=int, default=1,
                       help="accepted for compatibility; computation is vectorized")
    return parser


def _load(args) -> tuple[dict, Path]:
    cfg_path = Path(args.config)
    try:
        config = json.loads(cfg_path.read_text())
    except FileNotFoundError:
        raise ajcio.ConfigError(f"config file not found: {cfg_path}")
    except json.JSONDecodeError as exc:
        raise ajcio.ConfigError(f"config {cfg_path} is not valid JSON: {exc}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return config, out


def _assembled(config):
    seq = ajcio.build_sequence(config)
    return seq, assemble(seq)


def cmd_assemble(args) -> int:
    config, out = _load(args)
    seq, J = _assembled(config)
    mtx, header = ajcio.save_jump_matrix(J, out / "jump_matrix")
    size = J.indexer.size
    print(f"N={J.indexer.N} M={J.indexer.M} dimension={size} nnz={J.matrix.nnz} "
          f"sparsity={J.matrix.nnz / size ** 2:.4%}")
    print(f"wrote {mtx} and {header}")
    return EXIT_OK


def cmd_sample(args) -> int:
    config, out = _load(args)
    seq = ajcio.build_sequence(config)
    start_node = config.get("initial", {})
    state = ajcio.resolve_state(start_node.get("state", 0), seq.N)
    start = SpaceTimePoint(state, float(start_node.get("time", seq.grid.t0)))
    horizon = float(config.get("horizon", seq.grid.horizon))
    count = int(config.get("n_trajectories", 1))
    rng = np.random.default_rng(args.seed)
    rows = []
    final_states = np.zeros(seq.N, dtype=int)
    for tid in range(count):
        traj = sample_trajectory(seq, start, horizon, rng)
        rows.extend((tid, int(i), repr(float(t)))
                    for i, t in zip(traj.states, traj.times))
        final_states[traj.states[-1]] += 1
    ajcio.write_csv(out / "trajectories.csv",
                    ["trajectory", "state_index", "jump_time"], rows)
    ajcio.write_csv(out / "final_state_histogram.csv", ["state_index", "count"],
                    [(i, int(c)) for i, c in enumerate(final_states)])
    print(f"wrote {count} trajectories to {out / 'trajectories.csv'}")
    return EXIT_OK


def cmd_propagate(args) -> int:
    config, out = _load(args)
    seq, J = _assembled(config)
    fbar = ajcio.parse_spatial_vector(config.get("initial_density", {"state": 0}), seq.N)
    block = int(config.get("block", J.indexer.M - 1))
    tol = float(config.get("tolerance", 1e-10))
    density = reconstruct_propagator(J, fbar, block, tol=tol)
    path = ajcio.write_csv(out / "density.csv", ["state", "mass"],
                           ajcio.spatial_csv_rows(density),
                           comments=[f"block={block} edge_time={seq.grid.edges[block + 1]}"])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_koopman(args) -> int:
    config, out = _load(args)
    seq, J = _assembled(config)
    g = ajcio.parse_spatial_vector(config.get("observable", {"ones": True}), seq.N)
    block = int(config.get("block", J.indexer.M - 1))
    K = koopman_solve(J, g, block)
    path = ajcio.write_csv(out / "koopman.csv", ["state", "block", "value"],
                           ajcio.spacetime_csv_rows(K.values, J.indexer),
                           comments=[f"terminal_block={block}"])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_committor(args) -> int:
    config, out = _load(args)
    seq, J = _assembled(config)
    A = ajcio.parse_set(config.get("set_a"), seq.N, "A")
    B = ajcio.parse_set(config.get("set_b"), seq.N, "B")
    tail = config.get("tail", "absorb_to_B")
    c = committor_solve(J, A, B, tail)
    path = ajcio.write_csv(out / "committor.csv", ["state", "block", "value"],
                           ajcio.spacetime_csv_rows(c.values, J.indexer),
                           comments=[f"tail={tail}"])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_coherence(args) -> int:
    config, out = _load(args)
    seq, J = _assembled(config)
    C = ajcio.parse_set(config.get("set_c"), seq.N, "C")
    count_survival = bool(config.get("count_survival", False))
    min_slack, violation_mass = coherence_defect(J, C, count_survival)
    path = ajcio.write_csv(out / "coherence.csv",
                           ["min_slack", "violation_mass", "count_survival"],
                           [(repr(min_slack), repr(violation_mass), count_survival)])
    print(f"min_slack={min_slack:.6g} violation_mass={violation_mass:.6g}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    config, out = _load(args)
    gen = config.get("generator", {})
    preset = gen.get("preset")
    if preset == "two-state":
        builder = presets.two_state
    elif preset == "triple-well":
        builder = presets.triple_well
    else:
        raise ajcio.ConfigError("convergence requires a 'two-state' or 'triple-well' preset")
    dt_list = config.get("dt_list")
    if not dt_list:
        raise ajcio.ConfigError("convergence requires a nonempty 'dt_list'")
    try:
        study = convergence_study(builder, dt_list)
    except ValueError as exc:
        raise ajcio.ConfigError(str(exc))
    comments = []
    if study["slope"] is not None:
        comments.append(f"loglog_slope={study['slope']:.4f}")
    path = ajcio.write_csv(out / "convergence.csv",
                           ["dt", "epsilon_2norm", "epsilon_frobenius"],
                           [(repr(dt), repr(e2), repr(ef))
                            for dt, e2, ef in study["rows"]],
                           comments=comments)
    for dt, e2, _ in study["rows"]:
        print(f"dt={dt:g} epsilon={e2:.6e}")
    if study["slope"] is not None:
        print(f"slope={study['slope']:.4f}")
    print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "assemble": cmd_assemble,
    "sample": cmd_sample,
    "propagate": cmd_propagate,
    "koopman": cmd_koopman,
    "committor": cmd_committor,
    "coherence": cmd_coherence,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("AJC_LOG", "WARNING").upper())
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except ajcio.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergence, EmptyTarget) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
