"""Command-line entry point.

Exit codes: 0 success, 2 infeasible synthesis, 1 any other error.

Configuration is read from ``--config FILE`` (``key = value`` lines), then from
environment variables ``PRIVCTRL_<KEY>`` (key upper-cased), then from flags named
after the keys. Later sources win.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import audit, config as cfg, experiments as ex, io, plant as pl, synth, transform as tr

log = logging.getLogger("privctrl")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


def _add_config_flags(p):
    p.add_argument("--config", help="key = value configuration file")
    for key in cfg.KEYS:
        flags = [f"--{key}"]
        if "_" in key:
            flags.append(f"--{key.replace('_', '-')}")
        p.add_argument(*flags, dest=key, default=None, metavar="VALUE")


def build_parser():
    parser = argparse.ArgumentParser(prog="privctrl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (
        ("case-study", "single pipeline run with all client and cloud artifacts"),
        ("attack", "bias-injection comparison across attacker knowledge levels"),
        ("sweep", "privacy-budget distribution over a disturbance grid"),
    ):
        _add_config_flags(sub.add_parser(name, help=text))

    p = sub.add_parser("synthesize", help="cloud side: solve on an exchange directory")
    p.add_argument("exchange", help="directory holding X0, X1, V0 and optionally delta")
    p.add_argument("--out", help="where to write P, Y, K (default: the exchange directory)")

    p = sub.add_parser("audit", help="privacy audit of a case-study output directory")
    p.add_argument("rundir")
    p.add_argument("--alternatives", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    return parser


def load_config(args, env=None):
    file_values = io.read_kv(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in cfg.KEYS}
    return cfg.from_sources(file_values, env, flags)


def cmd_case_study(args):
    config = load_config(args)
    report = ex.run_case_study(config)
    for k, v in report.items():
        print(f"{k} = {v}")
    return EXIT_OK if report["audit_passed"] else EXIT_ERROR


def cmd_attack(args):
    config = load_config(args)
    summary = ex.run_attack_comparison(config)
    for k, v in summary.items():
        label = "no attack" if k == "none" else f"policy {k}"
        print(f"{label}: steady residual {v:.4f} (threshold {config.delta_alpha})")
    return EXIT_OK


def cmd_sweep(args):
    config = load_config(args)
    labels, table, _ = ex.run_disturbance_sweep(config)
    grid = config.d_max_grid
    print("bin".ljust(14) + "".join(f"{d:>8g}" for d in grid))
    for label, row in zip(labels, table):
        print(label.ljust(14) + "".join(f"{v:8.2f}" for v in row))
    return EXIT_OK


def cmd_synthesize(args):
    exchange = Path(args.exchange)
    leaks = io.exchange_leaks(exchange)
    if leaks:
        raise ValueError(f"exchange directory holds non-cloud files: {', '.join(leaks)}")
    X0, X1, V0, Delta = io.read_exchange_inputs(exchange)
    if Delta is None:
        outcome = synth.maximize_gamma_clean(X0, X1, V0)
    else:
        outcome = synth.maximize_gamma_noisy(X0, X1, V0, Delta)
    io.write_exchange_outputs(Path(args.out) if args.out else exchange, outcome)
    print(f"status = {outcome.status.value}")
    print(f"gamma_bar = {io.format_number(outcome.gamma_bar)}")
    return EXIT_OK if outcome.feasible else EXIT_INFEASIBLE


def cmd_audit(args):
    run = Path(args.rundir)
    secret = run / "secret"
    m = {name: io.read_matrix(secret / f"{name}.csv") for name in io.SECRET_NAMES}
    plant = pl.Plant(m["A_star"], m["B_star"])
    X0, X1, V0, Delta = io.read_exchange_inputs(run / "cloud")
    status, gamma, K_bar = io.read_exchange_outputs(run / "cloud")
    if K_bar is None:
        print(f"status = {status}; nothing to audit")
        return EXIT_INFEASIBLE
    keys = tr.TransformKeys(m["F1"], m["G1"], m["F2"], m["G2"])
    view = audit.CloudView(X0, X1, V0, Delta, gamma, K_bar)
    D0 = m["D0"] if Delta is not None else None
    rec = audit.audit_trial(plant, keys, K_bar, view, np.random.default_rng(args.seed),
                            args.alternatives, D0=D0)
    ex.write_audit_csv(run / "audit.csv", [rec])
    print(f"alternative systems reproducing the cloud data: "
          f"{rec.alternatives_distinct}/{rec.alternatives} "
          f"(worst replay residual {rec.max_replay_residual:.3g})")
    print(f"closed-loop gap ||Delta|| = {rec.gap_norm:.6g} (threshold {rec.gap_threshold:.3g})")
    print(f"passed = {rec.passed()}")
    return EXIT_OK if rec.passed() else EXIT_ERROR


COMMANDS = {
    "case-study": cmd_case_study,
    "attack": cmd_attack,
    "sweep": cmd_sweep,
    "synthesize": cmd_synthesize,
    "audit": cmd_audit,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ex.InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:
        if args.verbose:
            log.exception("command failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
