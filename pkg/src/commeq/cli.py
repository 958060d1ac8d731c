"""Command-line front end.

Exit codes: 0 success, 1 bad input, 2 cap exceeded, 3 internal invariant
failure, 4 verification threshold not met.  All randomness funnels through
--seed (default 0); identical flags and seed give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import adversary as adv
from .dynamics import (DynamicsConfig, run_dynamics, write_certificate_txt,
                       write_equilibrium_json, write_regret_csv)
from .errors import (AuditError, BadInput, CommeqError, EnumerationTooLarge,
                     NoConvergence, NotAnEquilibrium, NotShiftable,
                     NumericallyAmbiguous, SupportTooLarge)
from .game import (BayesianGame, MixtureDistribution, StrategyDistribution,
                   load_game, mixture_to_tabular, validate_game)
from .poa import QuasilinearGame, SmoothnessSpec, check_smoothness, poa_report
from .verifier import (anf_bs_epsilon, bne_epsilon, coarse_epsilon,
                       comm_eq_epsilon, sfce_epsilon, strategy_representable)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_CAP = 2
EXIT_INTERNAL = 3
EXIT_NOT_VERIFIED = 4


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise BadInput(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BadInput(f"{path}: malformed JSON at line {exc.lineno} "
                       f"column {exc.colno}: {exc.msg}") from exc


def load_distribution(path: str, game: BayesianGame):
    """Load a play distribution: tabular, mixture, strategy, or a simulate output."""
    doc = _load_json(path)
    if "mixture" in doc and "kind" not in doc:      # simulate's equilibrium.json
        doc = doc["mixture"]
    kind = doc.get("kind")
    try:
        if kind == "tabular":
            arr = np.asarray(doc["values"], dtype=float)
            return arr.reshape(game.num_types + game.num_actions)
        if kind == "mixture":
            weights = np.asarray(doc["weights"], dtype=float)
            policies = [np.asarray(p, dtype=float) for p in doc["policies"]]
            return MixtureDistribution.from_stacked(weights, policies)
        if kind == "strategy":
            return StrategyDistribution.create(game.num_types, game.num_actions,
                                               np.asarray(doc["values"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise BadInput(f"{path}: distribution does not fit the game: {exc}") from exc
    raise BadInput(f"{path}: unknown distribution kind {kind!r}")


def _load_checked_game(path: str) -> BayesianGame:
    game = load_game(path)
    report = validate_game(game)
    if not report.ok:
        raise BadInput(f"{path}: " + "; ".join(report.violations))
    return game


def _print_json(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    game = _load_checked_game(args.game)
    config = DynamicsConfig(
        horizon=args.T,
        learners=args.learner,
        reward_mode=args.reward,
        epsilon=args.eps,
        delta=args.delta,
        seed=args.seed,
        threads=args.threads,
    )
    result = run_dynamics(game, config)
    os.makedirs(args.out_dir, exist_ok=True)
    write_regret_csv(os.path.join(args.out_dir, "regret.csv"), result.curve)
    write_equilibrium_json(os.path.join(args.out_dir, "equilibrium.json"), result)
    write_certificate_txt(os.path.join(args.out_dir, "certificate.txt"), result, game)
    _print_json({"certificate": result.certificate, "out_dir": args.out_dir})
    return EXIT_OK


def cmd_verify(args) -> int:
    game = _load_checked_game(args.game)
    dist = load_distribution(args.distribution, game)
    if args.klass == "representable":
        pi = mixture_to_tabular(dist) if isinstance(dist, MixtureDistribution) \
            else _require_tabular(dist, "representable")
        rep = strategy_representable(pi)
        _print_json({"class": "representable", "feasible": rep.feasible,
                     "marginal_error": rep.marginal_error if rep.feasible else None,
                     "infeasibility": rep.infeasibility})
        return EXIT_OK if rep.feasible else EXIT_NOT_VERIFIED
    if args.klass == "comm":
        cert = comm_eq_epsilon(game, dist)
    elif args.klass == "anf-bs":
        cert = anf_bs_epsilon(game, dist)
    elif args.klass == "bne":
        cert = bne_epsilon(game, dist)
    elif args.klass == "coarse-bs":
        cert = coarse_epsilon(game, dist, "coarse-bs")
    elif args.klass == "sfce":
        cert = sfce_epsilon(game, _require_sigma(dist, "sfce"))
    else:  # sfcce | anfcce
        cert = coarse_epsilon(game, _require_sigma(dist, args.klass), args.klass)
    _print_json(cert.to_json_dict())
    return EXIT_OK if cert.epsilon <= args.tol else EXIT_NOT_VERIFIED


def _require_sigma(dist, klass: str) -> StrategyDistribution:
    if not isinstance(dist, StrategyDistribution):
        raise BadInput(f"class {klass} needs a strategy distribution file")
    return dist


def _require_tabular(dist, what: str) -> np.ndarray:
    if isinstance(dist, StrategyDistribution):
        raise BadInput(f"{what} needs a tabular or mixture distribution")
    return np.asarray(dist, dtype=float)


def cmd_representable(args) -> int:
    args.klass = "representable"
    return cmd_verify(args)


def cmd_adversary(args) -> int:
    inst = adv.build_instance(args.B, args.T, args.seed)
    adv.check_instance(inst)
    if args.stream_csv:
        adv.write_stream_csv(args.stream_csv, inst)
    result = adv.run_experiment(inst, args.learner, args.seed)
    _print_json(result.to_json_dict())
    return EXIT_OK


def cmd_poa(args) -> int:
    doc = _load_json(args.game)
    game = _load_checked_game(args.game)
    spec_doc = _load_json(args.spec)
    try:
        spec = SmoothnessSpec.create(spec_doc["lambda"], spec_doc["mu"],
                                     spec_doc["mode"], spec_doc["deviation"])
    except KeyError as exc:
        raise BadInput(f"{args.spec}: missing field {exc}") from exc
    target = game
    if spec.mode == "mechanism":
        ql = doc.get("quasilinear")
        if ql is None:
            raise BadInput("mechanism mode needs a 'quasilinear' block in the game file")
        target = QuasilinearGame.create(game, ql["alloc_values"], ql["payments"])
    dist = load_distribution(args.distribution, game)
    smooth = check_smoothness(target, spec)
    report = poa_report(target, dist, spec, eps_tol=args.eps_tol)
    _print_json({"smoothness": smooth.to_json_dict(), "report": report.to_json_dict()})
    return EXIT_OK if report.bound_satisfied else EXIT_NOT_VERIFIED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="commeq",
        description="Approximate communication equilibria of finite Bayesian games: "
                    "simulate no-regret dynamics, verify distributions, stress "
                    "learners, and report price-of-anarchy bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run uncoupled no-regret dynamics")
    sim.add_argument("game")
    sim.add_argument("--learner", default="untruthful",
                     choices=["untruthful", "typewise", "strategy-swap"])
    sim.add_argument("-T", type=int, default=1000)
    sim.add_argument("--reward", default="exact", choices=["exact", "sampled"])
    sim.add_argument("--eps", type=float, default=0.1)
    sim.add_argument("--delta", type=float, default=0.05)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--threads", type=int, default=1)
    sim.add_argument("--out-dir", default="out")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="audit a distribution against an equilibrium class")
    ver.add_argument("game")
    ver.add_argument("distribution")
    ver.add_argument("--class", dest="klass", default="comm",
                     choices=["comm", "anf-bs", "bne", "coarse-bs", "sfce",
                              "sfcce", "anfcce", "representable"])
    ver.add_argument("--tol", type=float, default=1e-9)
    ver.set_defaults(func=cmd_verify)

    rep = sub.add_parser("representable", help="strategy-representability feasibility")
    rep.add_argument("game")
    rep.add_argument("distribution")
    rep.set_defaults(func=cmd_representable)

    ad = sub.add_parser("adversary", help="lower-bound stress instance experiment")
    ad.add_argument("-B", type=int, default=3)
    ad.add_argument("-T", type=int, default=3000)
    ad.add_argument("--learner", default="untruthful", choices=list(adv.LEARNERS))
    ad.add_argument("--seed", type=int, default=0)
    ad.add_argument("--stream-csv", default=None)
    ad.set_defaults(func=cmd_adversary)

    po = sub.add_parser("poa", help="price-of-anarchy report for a verified distribution")
    po.add_argument("game")
    po.add_argument("distribution")
    po.add_argument("spec")
    po.add_argument("--eps-tol", type=float, default=0.01)
    po.set_defaults(func=cmd_poa)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BadInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (SupportTooLarge, EnumerationTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except NotAnEquilibrium as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_VERIFIED
    except (AuditError, NoConvergence, NotShiftable, NumericallyAmbiguous) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except CommeqError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
