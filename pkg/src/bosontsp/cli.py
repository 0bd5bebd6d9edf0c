"""Command line interface: ``bosontsp {solve,compare,oracle,lengths,sampler-check,qubo}``."""

import argparse
import json
import sys
from collections import Counter
from dataclasses import replace

import numpy as np

from .encodings import binary_penalty_length, penalty_free_length, qubo_build, qubo_length
from .experiment import ExperimentSpec, compare_formulations, format_table, run_experiment
from .instances import load_bundled, parse_instance
from .optimizer import TrainingConfig
from .sampler import FockState, SamplerConfig, exact_distribution, sample_batch, total_variation
from .tsp import brute_force_optimum


def _load(args):
    spec = args.instance
    if spec.startswith("bundled:"):
        inst = load_bundled(int(spec.split(":", 1)[1]))
    else:
        inst = parse_instance(spec, args.format)
    if getattr(args, "best_known", None) is not None:
        inst = replace(inst, best_known=args.best_known)
    return inst


def _instance_args(p):
    p.add_argument("--instance", required=True, help="instance file, or bundled:<N> for a shipped one")
    p.add_argument("--format", choices=["auto", "tsplib", "csv"], default="auto")


def _training_args(p):
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--optimizer", choices=["spsa", "shift-rule"], default="spsa")
    p.add_argument("--batch", type=int, default=50, help="samples per configuration per estimate")
    p.add_argument("--seeds", type=int, default=1, help="number of seeded repetitions")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--perturbation", type=float, default=0.1, help="SPSA probe size (rad)")
    p.add_argument("--shift", type=float, default=np.pi / 2, help="shift-rule offset (rad)")
    p.add_argument("--objective-scale", default="initial", help="'initial', 'none' or a number")
    p.add_argument("--patience", type=int, default=None, help="early stop after this many flat iterations")
    p.add_argument("--rho", type=float, default=5.0)
    p.add_argument("--qubo-A", type=float, default=None)
    p.add_argument("--best-known", type=float, default=None)
    p.add_argument("--out", default=None, help="output directory for traces and summary")
    p.add_argument("--n-jobs", type=int, default=1)


def _training_config(args):
    scale = args.objective_scale
    if scale not in ("initial", "none"):
        scale = float(scale)
    return TrainingConfig(
        iterations=args.iterations,
        learning_rate=args.learning_rate,
        optimizer_kind=args.optimizer,
        samples_per_estimate=args.batch,
        spsa_perturbation=args.perturbation,
        shift_amount=args.shift,
        seed=args.seed,
        early_stop_patience=args.patience,
        objective_scale=scale,
    )


def cmd_solve(args):
    inst = _load(args)
    spec = ExperimentSpec(
        inst, args.formulation, _training_config(args), args.seeds, args.rho, args.qubo_A, args.best_known
    )
    summary, _ = run_experiment(spec, args.out, n_jobs=args.n_jobs)
    print(json.dumps({"aggregate": summary["aggregate"], "bit_length": summary["bit_length"]}, indent=2))
    for run in summary["runs"]:
        q = run["q_sol_percent"]
        qtxt = f"{q:.1f}%" if q is not None else "n/a"
        print(f"seed {run['seed']}: best energy {run['best_energy']:g}, Q_sol {qtxt}, tour {run['best_tour']}")
    return 0


def cmd_compare(args):
    inst = _load(args)
    rows = compare_formulations(inst, _training_config(args), args.seeds, args.rho, args.qubo_A, args.out, args.n_jobs)
    print(format_table(rows))
    return 0


def cmd_oracle(args):
    inst = _load(args)
    tour, dist = brute_force_optimum(inst.payload)
    print(json.dumps({"instance": inst.name, "tour": list(tour.order), "distance": dist}))
    return 0


def cmd_lengths(args):
    n = args.n
    l1, l2, l3 = penalty_free_length(n), binary_penalty_length(n), qubo_length(n)
    print(json.dumps({"n_locations": n, "penalty_free": l1, "binary_penalty": l2, "qubo": l3}))
    return 0


def cmd_sampler_check(args):
    rng = np.random.default_rng(args.seed)
    thetas = rng.uniform(0, np.pi, args.modes - 1)
    config = SamplerConfig(args.modes, args.photons, thetas)
    exact = exact_distribution(config)
    occ, prob = sample_batch(config, args.samples, np.random.default_rng(args.seed + 1))
    counts = Counter(map(tuple, occ))
    empirical = {FockState(k): v / args.samples for k, v in counts.items()}
    tv = total_variation(empirical, exact)
    chain_err = max(abs(p - exact[FockState(tuple(o))]) for o, p in zip(occ, prob))
    ok = bool(tv < args.tolerance and chain_err < 1e-9)
    print(
        json.dumps(
            {"n_modes": args.modes, "n_photons": args.photons, "samples": args.samples,
             "tv_distance": float(tv), "max_chain_rule_error": float(chain_err), "pass": ok}
        )
    )
    return 0 if ok else 1


def cmd_qubo(args):
    inst = _load(args)
    qp = qubo_build(inst.payload, args.qubo_A)
    text = qp.to_json(args.out)
    if args.out is None:
        sys.stdout.write(text + "\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="bosontsp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="train one formulation over several seeds")
    _instance_args(p)
    p.add_argument("--formulation", choices=["penalty-free", "binary-penalty", "qubo"], default="penalty-free")
    _training_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="run all three formulations under one budget")
    _instance_args(p)
    _training_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="exhaustive optimum (N <= 12)")
    _instance_args(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("lengths", help="bit-string lengths of the three formulations")
    p.add_argument("n", type=int)
    p.set_defaults(func=cmd_lengths)

    p = sub.add_parser("sampler-check", help="sequential sampler against the exact distribution")
    p.add_argument("--modes", type=int, default=5)
    p.add_argument("--photons", type=int, default=2)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=0.01)
    p.set_defaults(func=cmd_sampler_check)

    p = sub.add_parser("qubo", help="export the QUBO matrix and offset as JSON")
    _instance_args(p)
    p.add_argument("--qubo-A", type=float, default=None)
    p.add_argument("--out", default=None, help="JSON file (stdout if omitted)")
    p.set_defaults(func=cmd_qubo)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"bosontsp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
