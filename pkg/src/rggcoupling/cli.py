"""Command-line entry point ``rggc``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .coupling import CouplingConfig, couple, drift_summary, sample_er, sample_rgg
from .errors import ConfigError, DomainError, NumericalError
from .experiments import run_fkg, run_roc, run_scaling, run_threshold
from .graphs import Graph
from .recursive_rep import build_schedule, multi_round_couple, reports_to_csv
from .robust_test import (
    calibrate_witness,
    decide_spectral,
    decide_triangle,
    decide_witness,
    read_calibration,
)
from .sphere_law import law_for
from .streams import stream

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.add_argument("--config")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rggc", description="Erdos-Renyi to geometric graph couplings and tests.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("er-sample", "rgg-sample", "couple", "recursive"):
        sp = sub.add_parser(name)
        _common(sp)
        if name in ("rgg-sample", "couple"):
            sp.add_argument("--embedding-out")
        if name == "couple":
            sp.add_argument("--graph", help="input graph file; default samples G(n, p)")
    sp = sub.add_parser("test")
    _common(sp)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--decider", choices=("witness", "triangle", "spectral"))
    sp.add_argument("--calibration")
    exp = sub.add_parser("exp")
    exp_sub = exp.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name in ("threshold", "fkg", "scaling", "roc"):
        _common(exp_sub.add_parser(name))
    return parser


def resolve(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg.update(load_config(args.config))
    flags = {k: v for k, v in vars(args).items()
             if v is not None and k in RunConfig.__dataclass_fields__}
    return cfg.update(flags)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_er_sample(cfg, args):
    _emit(sample_er(stream(cfg.seed, "er-sample"), cfg.n, cfg.p).to_text(), cfg.out)


def _cmd_rgg_sample(cfg, args):
    G, emb = sample_rgg(stream(cfg.seed, "rgg-sample"), cfg.n, cfg.d, cfg.p)
    _emit(G.to_text(), cfg.out)
    if args.embedding_out:
        emb.write(args.embedding_out)


def _cmd_couple(cfg, args):
    H = Graph.read(args.graph) if args.graph else sample_er(stream(cfg.seed, "couple-H"), cfg.n, cfg.p)
    ccfg = CouplingConfig(H.n, cfg.d, cfg.p, margin_c=cfg.margin_c, seed=cfg.seed)
    out = couple(stream(cfg.seed, "couple-V"), H, ccfg)
    _emit(out.realized.to_text(), cfg.out)
    if args.embedding_out:
        out.embedding.write(args.embedding_out)
    dr = drift_summary(out)
    print(f"n={H.n} flips={out.flips} margin={out.margin!r} fragile={len(out.fragile)} "
          f"disagreements={len(out.disagreements)} max_drift={dr['max']!r}",
          file=sys.stderr if not cfg.out else sys.stdout)


def _cmd_recursive(cfg, args):
    law = law_for(cfg.d, cfg.p)
    sched = build_schedule(law, cfg.n, C=cfg.schedule_C, T=cfg.T, margin_c=cfg.margin_c)
    res = multi_round_couple(stream(cfg.seed, "recursive"), cfg.n, cfg.p, cfg.d, sched, margin_c=cfg.margin_c)
    _emit(reports_to_csv(res.reports), cfg.out)


def _cmd_test(cfg, args):
    G = Graph.read(args.graph)
    n = G.n
    decider = args.decider or cfg.decider
    if decider == "triangle":
        dec = decide_triangle(G, n, cfg.p, cfg.d, seed=cfg.seed)
    elif decider == "spectral":
        dec = decide_spectral(G, n, cfg.p, cfg.d)
    else:
        path = args.calibration or cfg.calibration
        if path:
            rows = read_calibration(path, n, cfg.p, cfg.d)
            if not rows:
                raise ConfigError(f"no calibration row for n={n}, p={cfg.p}, d={cfg.d} in {path}")
            cal = rows[0]
        else:
            cal = calibrate_witness(cfg.seed, n, cfg.p, cfg.d, cfg.epsilon, cfg.adversary,
                                    cfg.trials, cfg.trials, cfg.iters, cfg.workers)
        dec = decide_witness(G, n, cfg.p, cfg.d, cal, rng=stream(cfg.seed, "test-witness"), iters=cfg.iters)
    print(dec.line())


def _cmd_exp(cfg, args):
    kind = args.experiment
    if kind == "threshold":
        grid = np.linspace(cfg.p_min, cfg.p_max, cfg.grid)
        curve = run_threshold(cfg.property, cfg.model, cfg.n, grid, cfg.trials, cfg.seed,
                              d=cfg.d if cfg.model == "RGG" else None, workers=cfg.workers)
        _emit(curve.to_csv(), cfg.out)
        print(f"p_c={curve.p_c!r} window={curve.window!r}", file=sys.stderr)
    elif kind == "fkg":
        est = run_fkg(cfg.seed, cfg.d, cfg.N, cfg.workers)
        _emit(est.to_csv(), cfg.out)
        print(f"a_hat={est.a_hat!r} z={est.a_hat / est.a_se!r} gap_z={est.gap / est.gap_se!r}", file=sys.stderr)
    elif kind == "scaling":
        table = run_scaling(cfg.seed, cfg.n, cfg.p, cfg.d_values(), cfg.trials, cfg.margin_c, cfg.workers)
        _emit(table.to_csv(), cfg.out)
        print(f"slope={table.slope!r}", file=sys.stderr)
    else:
        cal = None
        if cfg.decider == "witness":
            if cfg.calibration:
                rows = read_calibration(cfg.calibration, cfg.n, cfg.p, cfg.d)
                if not rows:
                    raise ConfigError("no matching calibration row")
                cal = rows[0]
            else:
                cal = calibrate_witness(cfg.seed, cfg.n, cfg.p, cfg.d, cfg.epsilon, cfg.adversary,
                                        50, 50, cfg.iters, cfg.workers)
        table = run_roc(cfg.seed, cfg.decider, cfg.adversary, cfg.n, cfg.p, cfg.d, cfg.epsilon, cfg.trials,
                        cfg.workers, cal, cfg.margin_c, cfg.iters)
        _emit(table.to_csv(), cfg.out)


COMMANDS = {
    "er-sample": _cmd_er_sample,
    "rgg-sample": _cmd_rgg_sample,
    "couple": _cmd_couple,
    "recursive": _cmd_recursive,
    "test": _cmd_test,
    "exp": _cmd_exp,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        COMMANDS[args.command](cfg, args)
    except (ConfigError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
