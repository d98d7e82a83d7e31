"""
Command-line front end.

Commands:
- train: data splits, Lipschitz estimation, bound minimisation, certificate
- certify: evaluate any bound family on a stored posterior
- lipschitz: estimate the gap's Lipschitz constant
- student: Student-posterior certificate with its Monte-Carlo factor
- reproduce: rerun rows of the reference results table and compare

Exit codes: 0 when a report was written, 2 for usage errors (bad arguments,
missing data directory, unknown reference row), 1 for any other failure.
"""

import argparse
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from src import config
from src.bounds import (
    BoundFamily,
    certify,
    certify_student,
    compose_delta_budget,
    data_dependent_prior_penalty,
    mc_expected_risk,
    mc_f_factor,
    optimise_eta,
    stable_index_to_dof,
)
from src.bounds.certificate import IPM_FAMILIES
from src.data_loader import DataLoadError, Dataset, load_dataset, resolve_data_dir, split_prior
from src.lipschitz import LipschitzEstimate, estimate_lipschitz, lipschitz_for_squared_gap
from src.measures import DiracMeasure, GaussianMeasure
from src.models import ModelParams, ModelShape, load_checkpoint
from src.training import (
    TrainConfig,
    default_prior,
    save_training_checkpoint,
    train,
    train_erm_prior,
)
from src.utils import (
    check_report_schema,
    config_hash,
    to_json_text,
    write_json_report,
    write_trajectory_log,
)

__all__ = [
    "UsageError",
    "RunConfig",
    "build_parser",
    "cmd_train",
    "cmd_certify",
    "cmd_lipschitz",
    "cmd_student",
    "cmd_reproduce",
    "load_reference_results",
    "resolve_reference_rows",
    "main",
]

COMMANDS = ("train", "certify", "lipschitz", "student", "reproduce")
REFERENCE_COLUMNS = ("test", "bound", "wass", "kl")
STUDENT_KEYS = ("p", "alpha_stable", "d", "sigma", "mean_dist_sq", "m", "lip", "samples")


class UsageError(ValueError):
    """Invalid command-line configuration."""

    pass


@dataclass
class RunConfig:
    """Validated settings of one command."""

    command: str
    dataset: str | None = None
    data_dir: str | None = None
    model: str = "linear"
    hidden_width: int = config.HIDDEN_WIDTH
    depth: int = config.DEPTH
    alpha: float | None = None
    bound: str = BoundFamily.KL_WASSERSTEIN.value
    posterior: str = "dirac"
    prior: str = "data-free"
    interpolation: str = "learned"
    delta: float = config.DEFAULT_DELTA
    seed: int = config.RANDOM_SEED
    output: str | None = None
    min_iterations: int = config.MIN_ITERATIONS
    batch_size: int = config.BATCH_SIZE
    mc_samples: int = config.MC_RISK_SAMPLES
    lipschitz_iters: int = config.LIPSCHITZ_ITERATIONS
    lipschitz_restarts: int = config.LIPSCHITZ_RESTARTS
    learn_prior_variance: bool = True
    enforce_frobenius: bool = False
    checkpoint: str | None = None
    lipschitz_file: str | None = None
    candidates: str | None = None
    eta: str = "stored"
    lam: float | None = None
    second_moment: str = "1.0"
    strict_mc: bool = False
    rows: list[str] = field(default_factory=list)
    workers: int = 1
    student: dict = field(default_factory=dict)
    verbose: bool = True
    dry_run: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        known = {name for name in cls.__dataclass_fields__}
        values = {key: val for key, val in vars(args).items() if key in known and val is not None}
        if args.command == "student":
            values["student"] = {key: getattr(args, key) for key in STUDENT_KEYS}
        values["verbose"] = not getattr(args, "quiet", False)
        run = cls(**values)
        run.validate()
        return run

    def validate(self) -> None:
        """
        Check the fields the chosen command needs.

        Raises:
            UsageError: On a missing or inconsistent field
        """
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command '{self.command}'")
        if not 0.0 < self.delta < 1.0:
            raise UsageError(f"--delta must lie in (0, 1), got {self.delta}")
        if self.command in ("train", "certify", "lipschitz"):
            if not self.dataset:
                raise UsageError(f"{self.command} needs --dataset")
            if self.dataset not in config.DATASETS:
                raise UsageError(
                    f"unknown dataset '{self.dataset}'. Supported: {sorted(config.DATASETS)}"
                )
        if self.model not in ("linear", "mlp"):
            raise UsageError(f"--model must be linear or mlp, got '{self.model}'")
        if self.posterior not in ("dirac", "gaussian"):
            raise UsageError(f"--posterior must be dirac or gaussian, got '{self.posterior}'")
        if self.prior not in ("data-free", "learned"):
            raise UsageError(f"--prior must be data-free or learned, got '{self.prior}'")
        try:
            BoundFamily(self.bound)
        except ValueError:
            raise UsageError(
                f"unknown bound family '{self.bound}'. Supported: {[f.value for f in BoundFamily]}"
            )
        if self.command == "certify" and not self.checkpoint:
            raise UsageError("certify needs --checkpoint")
        if self.command == "student":
            if self.student.get("p") is None and self.student.get("alpha_stable") is None:
                raise UsageError("student needs --p or --alpha-stable")
            if self.student.get("p") is not None and not self.student["p"] > 1.0:
                raise UsageError(f"--p must be > 1, got {self.student['p']}")
        if self.command == "reproduce" and not self.rows:
            raise UsageError("reproduce needs at least one row id")
        if self.min_iterations < 1 or self.batch_size < 1 or self.workers < 1:
            raise UsageError("--min-iterations, --batch-size and --workers must be >= 1")

    def to_dict(self) -> dict:
        document = asdict(self)
        for key in ("output", "data_dir", "verbose", "dry_run", "workers"):
            document.pop(key)
        return document

    def output_path(self, stem: str) -> Path:
        if self.output:
            return Path(self.output)
        return config.REPORTS_DIR / f"{stem}.json"


def _shape(run: RunConfig, data: Dataset) -> ModelShape:
    if run.model == "linear":
        return ModelShape.linear(data.n_features, data.class_count, run.alpha)
    return ModelShape.mlp(
        data.n_features, data.class_count, run.alpha, run.hidden_width, run.depth
    )


def _load(run: RunConfig) -> tuple[Dataset, Dataset]:
    spec = config.DATASETS[run.dataset]
    if spec["format"] != "synthetic":
        try:
            resolve_data_dir(run.data_dir)
        except DataLoadError as e:
            raise UsageError(str(e))
    return load_dataset(run.dataset, run.data_dir, seed=run.seed)


def _provenance(run: RunConfig, data: Dataset) -> dict:
    return {
        "seeds": {"run": run.seed},
        "dataset": run.dataset,
        "dataset_hash": data.fingerprint,
        "config_hash": config_hash(run.to_dict()),
    }


def _write_report(path: Path, payload: dict) -> Path:
    problems = check_report_schema(payload)
    if problems:
        raise ValueError(f"report does not match its schema: {problems}")
    return write_json_report(path, payload)


def _summary(payload: dict, test_risk: float | None) -> str:
    terms = payload["terms"]
    parts = []
    if test_risk is not None:
        parts.append(f"test {test_risk:.3f}")
    parts.append(f"bound {payload['value']:.3f}")
    if "wass_term" in terms:
        parts.append(f"wass {terms['wass_term']:.3f}")
    parts.append(f"kl/2m {terms.get('kl_term', 0.0):.3f}")
    return f"{payload['family']}: " + ", ".join(parts)


def _train_pipeline(run: RunConfig) -> dict:
    """Splits, optional learned prior, training and certification; returns the report payload."""
    train_set, test_set = _load(run)
    shape = _shape(run, train_set)
    family = BoundFamily(run.bound)
    objective = family if family in (BoundFamily.KL_WASSERSTEIN, BoundFamily.MCALLESTER) else (
        BoundFamily.KL_WASSERSTEIN
    )

    base = TrainConfig(
        posterior_kind=run.posterior,
        objective=objective,
        delta=run.delta,
        batch_size=run.batch_size,
        min_iterations=run.min_iterations,
        seed=run.seed,
        interpolation=run.interpolation,
        learn_prior_variance=run.learn_prior_variance,
        enforce_frobenius=run.enforce_frobenius,
        mc_samples=run.mc_samples,
    )
    certification_set = train_set
    prior = None
    surcharge = 0.0
    if run.prior == "learned":
        erm = train_erm_prior(
            train_set, config.PRIOR_SPLIT_FRACTION, base, shape, verbose=run.verbose
        )
        prior = GaussianMeasure(erm.prior_mean, config.PRIOR_STD_INIT)
        surcharge = data_dependent_prior_penalty(erm.t_epochs)
        certification_set = erm.cert_split

    tcfg = replace(base, prior=prior, log_surcharge=surcharge)
    provenance = _provenance(run, train_set)
    result = train(
        certification_set,
        shape,
        tcfg,
        verbose=run.verbose,
        lipschitz_iters=run.lipschitz_iters,
        lipschitz_restarts=run.lipschitz_restarts,
        provenance=provenance,
    )
    report = result.report
    if family is not objective:
        report = certify(
            family,
            result.posterior,
            result.prior,
            shape,
            certification_set,
            eta=result.eta if result.lipschitz is not None else None,
            lipschitz=result.lipschitz,
            delta=run.delta,
            mc_samples=run.mc_samples,
            seed=run.seed,
            log_surcharge=surcharge,
            snap_prior_variance=run.learn_prior_variance,
            provenance=provenance,
        )

    test_risk = mc_expected_risk(
        result.posterior, shape, test_set, run.mc_samples, seed=run.seed
    ).mean
    payload = report.to_dict()
    payload["evaluation"] = {"test_risk": test_risk, "test_m": test_set.m}

    output = run.output_path(
        f"train_{run.dataset}_{run.model}_{run.posterior}_{run.bound}_seed{run.seed}"
    )
    _write_report(output, payload)
    save_training_checkpoint(
        output.with_suffix(".pbfg"),
        result,
        meta={
            "dataset": run.dataset,
            "seed": run.seed,
            "prior": run.prior,
            "learn_prior_variance": run.learn_prior_variance,
            "log_surcharge": surcharge,
            "delta": run.delta,
        },
    )
    if result.trajectory:
        write_trajectory_log(output.with_suffix(".jsonl"), result.trajectory)
    print(f"✓ {_summary(payload, test_risk)}")
    return payload


def cmd_train(run: RunConfig) -> int:
    """Train a posterior by bound minimisation and write its certificate."""
    _train_pipeline(run)
    return 0


def _stored_measures(run: RunConfig):
    checkpoint = load_checkpoint(Path(run.checkpoint))
    meta = checkpoint.meta
    theta = checkpoint.params.theta
    kind = meta.get("posterior_kind", "dirac")
    posterior = (
        GaussianMeasure(theta, float(meta["sigma"])) if kind == "gaussian" else DiracMeasure(theta)
    )
    if "prior_mean" in checkpoint.arrays:
        prior = GaussianMeasure(checkpoint.arrays["prior_mean"], float(meta["prior_std"]))
    else:
        prior = default_prior(checkpoint.shape, run.seed)
    eta = None
    if "eta_mean" in checkpoint.arrays and meta.get("eta_std"):
        eta = GaussianMeasure(checkpoint.arrays["eta_mean"], float(meta["eta_std"]))
    return checkpoint, posterior, prior, eta


def cmd_certify(run: RunConfig) -> int:
    """Evaluate one bound family on a stored posterior without training."""
    checkpoint, posterior, prior, stored_eta = _stored_measures(run)
    meta = checkpoint.meta
    shape = checkpoint.shape
    train_set, _ = _load(run)
    data = train_set
    if meta.get("prior") == "learned":
        prior_seed = int(meta.get("seed", run.seed))
        _, data = split_prior(train_set, config.PRIOR_SPLIT_FRACTION, prior_seed)

    family = BoundFamily(run.bound)
    is_dirac = isinstance(posterior, DiracMeasure)
    wants_eta = family in IPM_FAMILIES and (is_dirac or run.eta != "posterior")
    lipschitz = None
    if wants_eta:
        kind = "dirac" if is_dirac else "gaussian"
        ledger = compose_delta_budget(run.delta, kind, True, not is_dirac)
        if run.lipschitz_file:
            payload = json.loads(Path(run.lipschitz_file).read_text(encoding="utf-8"))
            lipschitz = LipschitzEstimate.from_dict(payload)
        else:
            lipschitz = estimate_lipschitz(
                data,
                shape,
                ledger.share("lipschitz"),
                seed=run.seed,
                iters=run.lipschitz_iters,
                restarts=run.lipschitz_restarts,
                verbose=run.verbose,
            )

    eta_source = None
    if wants_eta:
        if run.eta == "optimise":
            lip_sq = lipschitz_for_squared_gap(lipschitz)
            bound_share = ledger.share("bound")

            def eta_source(p: GaussianMeasure) -> GaussianMeasure:
                return optimise_eta(posterior, p, lip_sq, data.m, bound_share).eta

        else:
            eta_source = stored_eta
            if eta_source is None:
                raise UsageError("checkpoint stores no η; use --eta optimise or --eta posterior")

    second_moment: float | str = run.second_moment
    if second_moment != "empirical":
        second_moment = float(second_moment)
    report = certify(
        family,
        posterior,
        prior,
        shape,
        data,
        eta=eta_source,
        lipschitz=lipschitz,
        delta=run.delta,
        mc_samples=run.mc_samples,
        seed=run.seed,
        strict_mc=run.strict_mc,
        lam=run.lam,
        second_moment=second_moment,
        log_surcharge=float(meta.get("log_surcharge", 0.0)),
        snap_prior_variance=bool(meta.get("learn_prior_variance", False)),
        provenance=_provenance(run, data) | {"checkpoint": Path(run.checkpoint).name},
    )
    payload = report.to_dict()
    _write_report(run.output_path(f"certify_{run.dataset}_{run.bound}_seed{run.seed}"), payload)
    print(f"✓ {_summary(payload, None)}")
    return 0


def cmd_lipschitz(run: RunConfig) -> int:
    """Estimate L(m, δ) on the training split and write it as JSON."""
    train_set, _ = _load(run)
    shape = _shape(run, train_set)
    is_dirac = run.posterior == "dirac"
    share = compose_delta_budget(
        run.delta, run.posterior, uses_wasserstein=True, uses_mc=not is_dirac
    ).share("lipschitz")
    candidates = None
    if run.candidates:
        rows = np.atleast_2d(np.loadtxt(run.candidates, dtype=np.float64))
        candidates = [ModelParams(shape, row) for row in rows]
    estimate = estimate_lipschitz(
        train_set,
        shape,
        share,
        seed=run.seed,
        iters=run.lipschitz_iters,
        restarts=run.lipschitz_restarts,
        batch=run.batch_size,
        candidates=candidates,
        verbose=run.verbose,
    )
    payload = estimate.to_dict() | {"provenance": _provenance(run, train_set)}
    output = run.output_path(f"lipschitz_{run.dataset}_{run.model}_seed{run.seed}")
    write_json_report(output, payload)
    return 0


def cmd_student(run: RunConfig) -> int:
    """Monte-Carlo factor f(p, d) and the Student-posterior certificate."""
    args = run.student
    p = args["p"] if args.get("p") is not None else stable_index_to_dof(args["alpha_stable"])
    factor = mc_f_factor(p, args["d"], args["samples"], run.seed)
    print(f"f(p={p:g}, d={args['d']}) = {factor.value:.6f} ± {factor.stderr:.6f}")
    report = certify_student(
        args["lip"],
        args["sigma"],
        factor.value,
        args["mean_dist_sq"],
        args["m"],
        run.delta,
        f_stderr=factor.stderr,
        provenance={"seeds": {"f_factor": run.seed}, "p": p, "d": args["d"]},
    )
    payload = report.to_dict()
    _write_report(run.output_path(f"student_p{p:g}_d{args['d']}_seed{run.seed}"), payload)
    print(f"✓ Student bound: {report.value:.6f}")
    return 0


def load_reference_results(path: Path = config.REFERENCE_RESULTS_FILE) -> pd.DataFrame:
    """Reference table indexed by row id."""
    return pd.read_csv(path).set_index("row")


def resolve_reference_rows(table: pd.DataFrame, rows: list[str]) -> list[str]:
    """
    Map row ids or their aliases (``alias`` column) to canonical row ids.

    Raises:
        UsageError: If any id matches neither a row nor an alias
    """
    aliases = dict(zip(table["alias"], table.index))
    resolved = [row if row in table.index else aliases.get(row, row) for row in rows]
    unknown = [row for row, key in zip(rows, resolved) if key not in table.index]
    if unknown:
        raise UsageError(f"unknown row(s) {unknown}. Supported: {list(table.index)}")
    return resolved


def _reproduce_row(run: RunConfig, row_id: str, reference: pd.Series) -> dict:
    row_run = RunConfig(
        command="train",
        dataset=str(reference["dataset"]),
        data_dir=run.data_dir,
        model=str(reference["model"]),
        hidden_width=run.hidden_width,
        depth=run.depth,
        posterior=str(reference["posterior"]),
        prior=str(reference["prior"]),
        delta=run.delta,
        seed=run.seed,
        output=str(Path(run.output_path("reproduce")).parent / f"{row_id}.json"),
        min_iterations=run.min_iterations,
        batch_size=run.batch_size,
        mc_samples=run.mc_samples,
        lipschitz_iters=run.lipschitz_iters,
        lipschitz_restarts=run.lipschitz_restarts,
        verbose=run.verbose,
    )
    row_run.validate()
    payload = _train_pipeline(row_run)
    ours = {
        "test": payload["evaluation"]["test_risk"],
        "bound": payload["value"],
        "wass": payload["terms"].get("wass_term", 0.0),
        "kl": payload["terms"]["kl_term"],
    }
    columns = {}
    for column in REFERENCE_COLUMNS:
        expected = float(reference[column])
        columns[column] = {
            "ours": ours[column],
            "reference": expected,
            "abs_diff": abs(ours[column] - expected),
        }
    return {"row": row_id, "columns": columns}


def cmd_reproduce(run: RunConfig) -> int:
    """Rerun reference rows (optionally in parallel threads) and compare column by column."""
    table = load_reference_results()
    rows = resolve_reference_rows(table, run.rows)

    with ThreadPoolExecutor(max_workers=run.workers) as pool:
        futures = [pool.submit(_reproduce_row, run, row, table.loc[row]) for row in rows]
        results = [future.result() for future in futures]

    print("\n" + "=" * 60)
    print("Comparison with reference values")
    print("=" * 60)
    for result in results:
        cells = "  ".join(
            f"{name} {cell['ours']:.3f}/{cell['reference']:.3f}"
            for name, cell in result["columns"].items()
        )
        print(f"{result['row']:<40} {cells}")
    write_json_report(run.output_path("reproduce"), {"rows": results, "delta": run.delta})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pacbayes-fgamma",
        description="PAC-Bayes bound minimisation interpolating KL and Wasserstein terms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--data-dir", dest="data_dir", help="Benchmark directory (or DATA_DIR)")
        p.add_argument("--delta", type=float, default=config.DEFAULT_DELTA)
        p.add_argument("--seed", type=int, default=config.RANDOM_SEED)
        p.add_argument("--output", help="Report path (default under results/reports)")
        p.add_argument("--quiet", action="store_true", help="Suppress progress output")
        p.add_argument("--dry-run", dest="dry_run", action="store_true", help="Echo the config")

    def model(p: argparse.ArgumentParser) -> None:
        p.add_argument("--dataset", choices=sorted(config.DATASETS))
        p.add_argument("--model", choices=["linear", "mlp"], default="linear")
        p.add_argument("--hidden-width", dest="hidden_width", type=int, default=config.HIDDEN_WIDTH)
        p.add_argument("--depth", type=int, default=config.DEPTH)
        p.add_argument("--alpha", type=float, help="Margin scale (default 25 linear / 250 mlp)")
        p.add_argument("--posterior", choices=["dirac", "gaussian"], default="dirac")
        p.add_argument("--batch-size", dest="batch_size", type=int, default=config.BATCH_SIZE)
        p.add_argument("--mc-samples", dest="mc_samples", type=int, default=config.MC_RISK_SAMPLES)
        p.add_argument(
            "--lipschitz-iters",
            dest="lipschitz_iters",
            type=int,
            default=config.LIPSCHITZ_ITERATIONS,
        )
        p.add_argument(
            "--lipschitz-restarts",
            dest="lipschitz_restarts",
            type=int,
            default=config.LIPSCHITZ_RESTARTS,
        )

    families = [family.value for family in BoundFamily]

    p_train = sub.add_parser("train", help="Train and certify a posterior")
    common(p_train)
    model(p_train)
    p_train.add_argument("--bound", choices=families, default=BoundFamily.KL_WASSERSTEIN.value)
    p_train.add_argument("--prior", choices=["data-free", "learned"], default="data-free")
    p_train.add_argument(
        "--interpolation", choices=["learned", "kl-only", "wasserstein-only"], default="learned"
    )
    p_train.add_argument(
        "--min-iterations", dest="min_iterations", type=int, default=config.MIN_ITERATIONS
    )
    p_train.add_argument(
        "--fixed-prior-variance",
        dest="learn_prior_variance",
        action="store_false",
        help="Keep σ_P at its initial value",
    )
    p_train.add_argument("--enforce-frobenius", dest="enforce_frobenius", action="store_true")

    p_cert = sub.add_parser("certify", help="Certify a stored posterior")
    common(p_cert)
    model(p_cert)
    p_cert.add_argument("--checkpoint", required=True)
    p_cert.add_argument("--bound", choices=families, default=BoundFamily.KL_WASSERSTEIN.value)
    p_cert.add_argument("--eta", choices=["stored", "posterior", "optimise"], default="stored")
    p_cert.add_argument("--lipschitz", dest="lipschitz_file", help="LipschitzEstimate JSON")
    p_cert.add_argument(
        "--lambda", dest="lam", type=float, help="Fixed λ for Catoni-type families"
    )
    p_cert.add_argument(
        "--second-moment",
        dest="second_moment",
        default="1.0",
        help="Bound on E[ℓ²] or 'empirical'",
    )
    p_cert.add_argument("--strict-mc", dest="strict_mc", action="store_true")

    p_lip = sub.add_parser("lipschitz", help="Estimate the gap's Lipschitz constant")
    common(p_lip)
    model(p_lip)
    p_lip.add_argument("--candidates", help="Text file with one parameter vector per line")

    p_stu = sub.add_parser("student", help="Student-posterior certificate")
    common(p_stu)
    group = p_stu.add_mutually_exclusive_group()
    group.add_argument("--p", type=float, help="Degrees of freedom (> 1)")
    group.add_argument(
        "--alpha-stable",
        dest="alpha_stable",
        type=float,
        help="Stability index, mapped to α/(2−α)",
    )
    p_stu.add_argument("--d", type=int, required=True)
    p_stu.add_argument("--sigma", type=float, required=True)
    p_stu.add_argument("--mean-dist-sq", dest="mean_dist_sq", type=float, default=0.0)
    p_stu.add_argument("--m", type=int, required=True)
    p_stu.add_argument("--lip", type=float, required=True, help="L(m, δ/2)")
    p_stu.add_argument("--samples", type=int, default=config.STUDENT_SAMPLES)

    p_rep = sub.add_parser("reproduce", help="Rerun reference rows")
    common(p_rep)
    p_rep.add_argument(
        "rows", nargs="+", help="Row ids or aliases, e.g. linear-dirac-data-free-mushrooms"
    )
    p_rep.add_argument("--workers", type=int, default=1)
    p_rep.add_argument(
        "--min-iterations", dest="min_iterations", type=int, default=config.MIN_ITERATIONS
    )
    p_rep.add_argument("--hidden-width", dest="hidden_width", type=int, default=config.HIDDEN_WIDTH)
    p_rep.add_argument("--depth", type=int, default=config.DEPTH)
    p_rep.add_argument("--mc-samples", dest="mc_samples", type=int, default=config.MC_RISK_SAMPLES)
    p_rep.add_argument(
        "--lipschitz-iters", dest="lipschitz_iters", type=int, default=config.LIPSCHITZ_ITERATIONS
    )
    p_rep.add_argument(
        "--lipschitz-restarts",
        dest="lipschitz_restarts",
        type=int,
        default=config.LIPSCHITZ_RESTARTS,
    )
    return parser


HANDLERS = {
    "train": cmd_train,
    "certify": cmd_certify,
    "lipschitz": cmd_lipschitz,
    "student": cmd_student,
    "reproduce": cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    """
    Parse arguments and dispatch.

    Returns:
        Exit code (0 = report written, 1 = error, 2 = usage error)
    """
    args = build_parser().parse_args(argv)
    try:
        run = RunConfig.from_args(args)
        if run.dry_run:
            print(to_json_text({"command": run.command, **run.to_dict()}), end="")
            return 0
        config.ensure_results_dir()
        return HANDLERS[run.command](run)
    except UsageError as e:
        print(f"✗ Error: {e}")
        return 2
    except Exception as e:
        print(f"✗ Error: {type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
