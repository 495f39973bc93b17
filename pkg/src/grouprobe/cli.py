"""Command-line front end.

Exit codes: 0 success, 1 training divergence, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergedError, GrouprobeError
from .evalsel import evaluate, pareto_front, read_pareto_csv, write_front_gnuplot, write_pareto_csv
from .experiments import (
    RECIPES,
    SWEEP_RECIPES,
    atomic_via_tmp,
    recipe_config,
    run_experiment,
    run_sweep,
)
from .linmodel import ModelParams, init_params
from .objectives import LossWeights, end_loss, multitask_loss, recon_loss
from .oracle import BoundInputs, finite_diff_param_grads, transfer_core_mass_lower_bound, worst_group_error_bound
from .synthgen import (
    AuxDataset,
    GroupDataSpec,
    LabeledDataset,
    make_balanced_test,
    noise_dataset,
    sample_group_dataset,
)


def _add_generate(sub):
    p = sub.add_parser("generate", help="sample a synthetic dataset to CSV or NPZ")
    p.add_argument("--spec", help="named recipe whose data distribution to use")
    p.add_argument("--dc", type=int, help="core dimensions (custom spec)")
    p.add_argument("--ds", type=int, help="spurious dimensions (custom spec)")
    p.add_argument("--sigma2-core", type=float)
    p.add_argument("--sigma2-spur", type=float)
    p.add_argument("--n-maj", type=int)
    p.add_argument("--n-min", type=int)
    p.add_argument("--sigma2-noise", type=float, default=0.0)
    p.add_argument("--balanced", type=int, metavar="N_PER_GROUP",
                   help="draw a group-balanced set instead of the train split")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "npz"), default=None,
                   help="default: inferred from the --out suffix")


def _spec_from_args(args) -> GroupDataSpec:
    if args.spec is not None:
        doc = recipe_config(args.spec)
        return GroupDataSpec(**doc["data"])
    fields = {
        "d_c": args.dc, "d_s": args.ds,
        "sigma2_core": args.sigma2_core, "sigma2_spur": args.sigma2_spur,
        "n_maj": args.n_maj, "n_min": args.n_min,
    }
    missing = [k for k, v in fields.items() if v is None]
    if missing:
        raise ConfigError(f"--spec not given, so all custom flags are required; missing {missing}")
    return GroupDataSpec(sigma2_noise=args.sigma2_noise, **fields)


def cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    if args.balanced is not None:
        data = make_balanced_test(spec, args.balanced, args.seed)
    else:
        data = sample_group_dataset(spec, args.seed)
    out = Path(args.out)
    fmt = args.format or ("npz" if out.suffix == ".npz" else "csv")
    if fmt == "csv":
        atomic_via_tmp(out, data.to_csv)
    else:
        atomic_via_tmp(out, data.to_npz)
    print(f"wrote {len(data)} rows ({fmt}) to {out}")
    return 0


def cmd_train(args) -> int:
    source = recipe_config(args.recipe) if args.recipe else args.config
    rows, _ = run_experiment(source, args.out)
    for row in rows:
        print(
            f"{row['tag']}: avg {float(row['test_avg_mean']):.4f} "
            f"+/- {float(row['test_avg_std']):.4f}, "
            f"wg {float(row['test_wg_mean']):.4f} +/- {float(row['test_wg_std']):.4f}"
        )
    print(f"artifacts in {args.out}")
    return 0


def cmd_eval(args) -> int:
    params = ModelParams.load_json(args.params)
    path = Path(args.data)
    data = LabeledDataset.from_npz(path) if path.suffix == ".npz" else LabeledDataset.from_csv(path)
    metrics = evaluate(params, data)
    print(json.dumps(metrics.to_json_dict(), indent=1))
    return 0


def cmd_sweep(args) -> int:
    source = recipe_config(args.recipe) if args.recipe else args.grid
    points, front = run_sweep(source, args.out)
    print(f"{len(points)} cells, {len(front)} on the front; artifacts in {args.out}")
    return 0


def cmd_pareto(args) -> int:
    points = read_pareto_csv(args.input)
    front = pareto_front(points)
    atomic_via_tmp(args.front, lambda p: write_pareto_csv(front, p))
    if args.plot:
        atomic_via_tmp(args.plot, lambda p: write_front_gnuplot(front, p))
    print(f"kept {len(front)} of {len(points)} points")
    return 0


def cmd_bound(args) -> int:
    inp = BoundInputs(
        gamma=args.gamma, sigma_spur=args.sigma_spur, eta=args.eta,
        tau=args.tau, lam=args.lam, d_c=args.dc, d_s=args.ds, eps=args.eps,
    )
    out = {
        "inputs": {
            "gamma": args.gamma, "sigma_spur": args.sigma_spur, "eta": args.eta,
            "tau": args.tau, "lam": args.lam, "d_c": args.dc, "d_s": args.ds,
        },
        "worst_group_error_bound": worst_group_error_bound(inp),
    }
    if args.eps is not None:
        out["inputs"]["eps"] = args.eps
        tb = transfer_core_mass_lower_bound(inp)
        out["transfer_core_mass_lower_bound"] = {"value": tb.value, "vacuous": tb.vacuous}
    print(json.dumps(out, indent=1))
    return 0


def _grad_check_instance(rng: np.random.Generator):
    d = int(rng.integers(1, 6))
    n = int(rng.integers(2, 9))
    # keep activations away from the L1 penalty's kinks so central
    # differences are valid
    def away_from_zero(shape):
        return (rng.uniform(0.2, 1.5, size=shape)) * rng.choice((-1.0, 1.0), size=shape)

    X = away_from_zero((n, d))
    y = rng.choice((-1, 1), size=n).astype(np.int64)
    s = y.copy()
    g = np.where(y > 0, 0, 1)
    end_batch = LabeledDataset(X, y, s, g)
    aux_batch = AuxDataset(away_from_zero((n, d)), rng.normal(size=(n, d)))
    params = init_params(d, None, int(rng.integers(2**31)), fro_radius=None)
    params.a = away_from_zero(d)
    params.w_end = rng.normal(size=d)
    params.W_aux = rng.normal(size=(d, d))
    weights = LossWeights(
        alpha_aux=float(rng.uniform(0.1, 3.0)),
        alpha_reg=float(rng.uniform(0.1, 3.0)),
        lambda_l2=float(rng.uniform(0.0, 2.0)),
    )
    return params, end_batch, aux_batch, weights


def run_grad_check(trials: int, seed: int) -> dict:
    """Compare analytic gradients of all three losses against central finite
    differences on random instances; returns a summary dict."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    for _ in range(trials):
        params, end_batch, aux_batch, weights = _grad_check_instance(rng)
        cases = [
            ("end", lambda p: end_loss(p, end_batch, weights.lambda_l2),
             end_loss(params, end_batch, weights.lambda_l2)),
            ("recon", lambda p: recon_loss(p, aux_batch),
             recon_loss(params, aux_batch)),
            ("multitask", lambda p: multitask_loss(p, end_batch, aux_batch, weights),
             multitask_loss(params, end_batch, aux_batch, weights)),
        ]
        for _name, f, le in cases:
            fa, fw, fW = finite_diff_param_grads(lambda p: f(p).value, params)
            for got, want in ((le.grad_a, fa), (le.grad_w_end, fw), (le.grad_W_aux, fW)):
                err = np.abs(got - want) / np.maximum(np.abs(want), 1e-2)
                worst = max(worst, float(err.max()))
                checked += 1
    passed = worst <= 1e-5
    return {"trials": trials, "gradient_blocks_checked": checked,
            "max_relative_error": worst, "pass": passed}


def cmd_grad_check(args) -> int:
    out = run_grad_check(args.trials, args.seed)
    print(json.dumps(out, indent=1))
    return 0 if out["pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="grouprobe",
        description="Worst-group robustness workbench for regularized multitask linear models",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    _add_generate(sub)

    p = sub.add_parser("train", help="run an experiment config or named recipe")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--config", help="experiment config JSON path")
    g.add_argument("--recipe", choices=sorted(set(RECIPES) - SWEEP_RECIPES))
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="evaluate saved model params on a dataset")
    p.add_argument("--params", required=True, help="model params JSON")
    p.add_argument("--data", required=True, help="dataset CSV or NPZ")

    p = sub.add_parser("sweep", help="run a hyperparameter sweep grid")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--grid", help="sweep grid JSON path")
    g.add_argument("--recipe", choices=sorted(SWEEP_RECIPES))
    p.add_argument("--out", required=True)

    p = sub.add_parser("pareto", help="extract the Pareto front from a sweep CSV")
    p.add_argument("--input", required=True, help="sweep_full.csv from a sweep run")
    p.add_argument("--front", required=True, help="output CSV for the front")
    p.add_argument("--plot", help="optional gnuplot two-column output")

    p = sub.add_parser("bound", help="evaluate the analytic bounds")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--sigma-spur", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--dc", type=int, required=True)
    p.add_argument("--ds", type=int, required=True)
    p.add_argument("--eps", type=float, default=None,
                   help="worst-group error target; enables the transfer bound")

    p = sub.add_parser("grad-check", help="verify analytic gradients against finite differences")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)

    return ap


_DISPATCH = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "pareto": cmd_pareto,
    "bound": cmd_bound,
    "grad-check": cmd_grad_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except DivergedError as e:
        print(f"error: training diverged: {e}", file=sys.stderr)
        return 1
    except (GrouprobeError, OSError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
