"""Command-line front end.

One binary, six subcommands: simulate (single trajectory), bifurcate
(attractor diagram), gen-data (synthetic cohort), train (nested or
novelty mode), eval (score a cohort against a model), posterior-check
(trained curve vs the closed-form optimum).

Exit discipline: 0 success, 1 usage (bad flags or flag values), 2
invalid input or data, 3 numerical failure. Standard output carries one
machine-parsable `status=<ok|fail> key=value ...` line; human
diagnostics go to standard error. Output files appear atomically:
either the complete file or nothing. Every primary output gets a
`<stem>.run.json` sidecar echoing the merged effective configuration,
so a result names the exact settings that produced it.
"""

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from tumornet import evaluate as ev
from tumornet import growth
from tumornet import nested
from tumornet.cohort import (config_from_doc, config_to_doc, derive_seed,
                             generate_cohort, load_cohort, save_cohort, split)
from tumornet.errors import (DomainError, FormatError, NumericalError,
                             TumornetError, UsageError)
from tumornet.fileio import atomic_write_text, fmt_float
from tumornet.network import NetworkSpec, TrainConfig, Transfer

RUN_FORMAT_VERSION = 1

# posterior-check training constants (the command takes no train flags)
_POSTERIOR_LR = 0.25
_POSTERIOR_EPOCHS = 30


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags by default; the contract says 1."""

    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        print("status=fail error=usage")
        raise SystemExit(1)


@dataclass(frozen=True)
class TrainRunConfig:
    """Numeric knobs of the train command; JSON config file keys."""

    master_seed: int = 0
    train_frac: float = 0.7
    val_frac: float = 0.15
    learning_rate: float = 0.5
    epochs: int = 40
    hidden_i: int = 8
    hidden_ii: int = 8
    hidden_iii: int = 8
    threshold: float = 0.5
    n_counter: int = 500

    def __post_init__(self):
        if self.master_seed < 0:
            raise DomainError("master_seed must be >= 0")
        if self.n_counter < 0:
            raise DomainError("n_counter must be >= 0")
        for name in ("hidden_i", "hidden_ii", "hidden_iii"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")
        if not 0.0 <= self.threshold <= 1.0:
            raise DomainError(
                f"threshold must lie in [0, 1], got {self.threshold}")


def _load_json_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("config file must hold a JSON object")
    return doc


def _dataclass_from_doc(cls, doc: dict, what: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise FormatError(
            f"unknown {what} keys: {', '.join(sorted(unknown))}")
    try:
        return cls(**doc)
    except TypeError as exc:
        raise FormatError(f"bad {what}: {exc}") from exc


def _run_sidecar(path, command: str, effective: dict) -> None:
    doc = {"format_version": RUN_FORMAT_VERSION, "command": command,
           "effective_config": effective}
    atomic_write_text(Path(path).with_suffix(".run.json"),
                      json.dumps(doc, indent=2) + "\n")


def _status(kind: str, **kv) -> None:
    parts = [f"status={kind}"]
    parts += [f"{key}={value}" for key, value in kv.items()]
    print(" ".join(parts))


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def cmd_simulate(args) -> int:
    params = growth.LogisticParams(r=args.r, k=args.k)
    traj = growth.simulate(params, x0=args.x0, steps=args.steps,
                           noise_sigma=args.noise, seed=args.seed)
    growth.trajectory_to_csv(traj, args.out)
    label = growth.classify_regime(params)
    _run_sidecar(args.out, "simulate", {
        "r": args.r, "k": args.k, "x0": args.x0, "steps": args.steps,
        "noise": args.noise, "seed": args.seed})
    _status("ok", out=args.out, steps=args.steps,
            regime=label.describe().replace(" ", ""),
            lyapunov=_fmt(label.lyapunov))
    return 0


def cmd_bifurcate(args) -> int:
    rows = growth.bifurcation_scan(args.r_min, args.r_max, args.r_step,
                                   k=args.k, burn_in=args.burn_in,
                                   samples=args.samples)
    growth.bifurcation_to_csv(rows, args.out)
    _run_sidecar(args.out, "bifurcate", {
        "r_min": args.r_min, "r_max": args.r_max, "r_step": args.r_step,
        "k": args.k, "burn_in": args.burn_in, "samples": args.samples})
    _status("ok", out=args.out, rows=rows.shape[0],
            grid=rows.shape[0] // args.samples)
    return 0


def cmd_gen_data(args) -> int:
    doc = _load_json_config(args.config) if args.config else {}
    if args.benign is not None:
        doc["n_benign"] = args.benign
    if args.malignant is not None:
        doc["n_malignant"] = args.malignant
    if args.seed is not None:
        doc["master_seed"] = args.seed
    config = config_from_doc(doc)
    if config.n_benign + config.n_malignant == 0:
        raise DomainError("cohort would be empty: need at least one record")
    cohort = generate_cohort(config, n_counter=args.counter_examples)
    save_cohort(cohort, args.out)
    n_b, n_m, n_c = cohort.counts()
    _run_sidecar(args.out, "gen-data",
                 {"n_counter": args.counter_examples,
                  **config_to_doc(config)})
    _status("ok", out=args.out, records=len(cohort.records), benign=n_b,
            malignant=n_m, counters=n_c)
    return 0


def cmd_train(args) -> int:
    doc = _load_json_config(args.config) if args.config else {}
    run = _dataclass_from_doc(TrainRunConfig, doc, "train config")
    cohort = load_cohort(args.data)
    # at this boundary a usage violation (bad stratum, wrong labels for
    # the mode) is a data problem: exit 2, not 1
    try:
        tr, va, _ = split(cohort, run.train_frac, run.val_frac,
                          seed=derive_seed(run.master_seed, 0, 1))
        plan = nested.default_plan(
            master_seed=run.master_seed, learning_rate=run.learning_rate,
            epochs=run.epochs,
            hidden=(run.hidden_i, run.hidden_ii, run.hidden_iii),
            threshold=run.threshold)
        if args.mode == "nested":
            trained = nested.train_nested(tr, va, plan)
        else:
            counter_seed = derive_seed(run.master_seed, 0, 2)
            trained = nested.train_novelty(tr, va, run.n_counter, plan,
                                           counter_seed=counter_seed)
    except UsageError as exc:
        raise DomainError(str(exc)) from exc
    nested.save_model(trained.model, args.model_out)

    lines = ["phase,epoch,train_sse,val_sse"]
    finals = {}
    for phase in (nested.Phase.I, nested.Phase.II, nested.Phase.III):
        train_hist, val_hist = trained.histories[phase]
        for e, (t_sse, v_sse) in enumerate(zip(train_hist, val_hist),
                                           start=1):
            lines.append(f"{phase.value},{e},{fmt_float(t_sse)},"
                         f"{fmt_float(v_sse)}")
        finals[phase] = val_hist[-1]
    atomic_write_text(args.log_out, "\n".join(lines) + "\n")

    _run_sidecar(args.model_out, "train",
                 {"mode": args.mode, "data": str(args.data),
                  **dataclasses.asdict(run)})
    _status("ok", model=args.model_out, log=args.log_out,
            val_sse_i=_fmt(float(finals[nested.Phase.I])),
            val_sse_ii=_fmt(float(finals[nested.Phase.II])),
            val_sse_iii=_fmt(float(finals[nested.Phase.III])))
    return 0


def cmd_eval(args) -> int:
    if args.threshold is not None and not 0.0 <= args.threshold <= 1.0:
        raise UsageError(
            f"--threshold must lie in [0, 1], got {args.threshold}")
    model = nested.load_model(args.model)
    cohort = load_cohort(args.data)
    report = ev.evaluate_cohort(model, cohort, threshold=args.threshold)
    atomic_write_text(args.report, ev.report_to_json(report))
    csv_path = Path(args.report).with_suffix(".csv")
    atomic_write_text(csv_path, ev.report_to_csv(report))
    _run_sidecar(args.report, "eval", {
        "data": str(args.data), "model": str(args.model),
        "threshold": (model.classification_threshold
                      if args.threshold is None else args.threshold)})
    _status("ok", report=args.report, csv=str(csv_path), n=report.n,
            accuracy=_fmt(report.accuracy), auc=_fmt(report.auc),
            tpr=_fmt(report.tpr), fpr=_fmt(report.fpr))
    return 0


def _parse_spec(text: str) -> NetworkSpec:
    """--spec takes comma-separated hidden widths, e.g. '8' or '12,4'."""
    try:
        hidden = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise UsageError(f"--spec must be comma-separated integers, "
                         f"got {text!r}") from None
    if not hidden or any(h < 1 for h in hidden):
        raise UsageError("--spec needs at least one hidden width >= 1")
    sizes = (1,) + hidden + (1,)
    return NetworkSpec(layer_sizes=sizes,
                       transfers=(Transfer.SIGMOID,) * (len(sizes) - 1))


def cmd_posterior_check(args) -> int:
    spec = _parse_spec(args.spec)
    if args.sigma <= 0:
        raise DomainError(f"--sigma must be > 0, got {args.sigma}")
    if not 0.0 <= args.prior_m <= 1.0:
        raise DomainError(
            f"--prior-m must lie in [0, 1], got {args.prior_m}")
    pair = ev.ClassDensityPair(
        p_b=ev.Density.gaussian(args.mu_b, args.sigma),
        p_m=ev.Density.gaussian(args.mu_m, args.sigma),
        prior_b=1.0 - args.prior_m, prior_m=args.prior_m)
    config = TrainConfig(learning_rate=_POSTERIOR_LR,
                         epochs=_POSTERIOR_EPOCHS,
                         init_seed=derive_seed(args.seed, 0, 3),
                         shuffle_seed=derive_seed(args.seed, 0, 4))
    report = ev.posterior_convergence_experiment(
        pair, args.n, spec, config, sample_seed=derive_seed(args.seed, 0, 5))
    atomic_write_text(args.out, ev.posterior_curve_to_csv(report))
    _run_sidecar(args.out, "posterior-check", {
        "mu_b": args.mu_b, "mu_m": args.mu_m, "sigma": args.sigma,
        "prior_m": args.prior_m, "n": args.n, "spec": args.spec,
        "seed": args.seed, "learning_rate": _POSTERIOR_LR,
        "epochs": _POSTERIOR_EPOCHS})
    _status("ok", out=args.out, mean_abs_dev=_fmt(report.mean_abs_dev),
            max_abs_dev=_fmt(report.max_abs_dev), n_benign=report.n_benign,
            n_malignant=report.n_malignant)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="tumornet",
                     description="Logistic-map growth simulation and "
                                 "staged tumor classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write one noisy trajectory CSV")
    p.add_argument("--r", type=float, required=True, help="growth rate")
    p.add_argument("--k", type=float, default=1.0, help="carrying capacity")
    p.add_argument("--x0", type=float, default=0.1, help="initial mass")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--noise", type=float, default=0.0,
                   help="multiplicative noise sigma")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="trajectory CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bifurcate", help="write an attractor diagram CSV")
    p.add_argument("--r-min", type=float, required=True)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--r-step", type=float, required=True)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--samples", type=int, default=64,
                   help="orbit points kept per r")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("gen-data", help="generate a synthetic cohort CSV")
    p.add_argument("--benign", type=int, default=None)
    p.add_argument("--malignant", type=int, default=None)
    p.add_argument("--counter-examples", type=int, default=0)
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--config", default=None,
                   help="JSON cohort config; flags override its values")
    p.add_argument("--out", required=True, help="cohort CSV path")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the three-stage model")
    p.add_argument("--data", required=True, help="cohort CSV")
    p.add_argument("--config", default=None, help="JSON train config")
    p.add_argument("--model-out", required=True)
    p.add_argument("--mode", choices=("nested", "novelty"),
                   default="nested")
    p.add_argument("--log-out", required=True,
                   help="per-phase per-epoch loss CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a cohort against a model")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report", required=True, help="report JSON path")
    p.add_argument("--threshold", type=float, default=None,
                   help="overrides the model's decision threshold")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("posterior-check",
                       help="trained output curve vs the closed-form "
                            "optimum")
    p.add_argument("--mu-b", type=float, default=-1.0)
    p.add_argument("--mu-m", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--prior-m", type=float, default=0.5)
    p.add_argument("--n", type=int, default=5000,
                   help="samples per class at equal priors")
    p.add_argument("--spec", default="8",
                   help="comma-separated hidden widths")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="curve CSV path")
    p.set_defaults(func=cmd_posterior_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _status("fail", error="usage")
        return 1
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _status("fail", error="numerical")
        return 3
    except TumornetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _status("fail", error="invalid")
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _status("fail", error="invalid")
        return 2


if __name__ == "__main__":
    sys.exit(main())
