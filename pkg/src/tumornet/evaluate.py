"""Oracles and metrics.

The heart is the closed-form optimal classifier output for a univariate
two-class problem,

    f*(k) = P_M p_M(k) / (P_B p_B(k) + P_M p_M(k)),

the posterior probability of the metastasizing class, and the expected
sum-squared error

    eps(f) = integral P_B p_B(k) f(k)^2 + P_M p_M(k) (f(k) - 1)^2 dk

it minimizes. Both are evaluated by trapezoid quadrature on explicit
grids; uniform densities take value 1/(2(b-a)) exactly at their support
endpoints so node-aligned grids integrate them without jump error. The
convergence experiment trains a small sigmoid network on samples drawn
from the densities and reports how far its output curve sits from f*.
"""

import json
import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from tumornet.cohort import Cohort, Phase, phase_target
from tumornet.errors import CoverageError, DomainError
from tumornet.fileio import fmt_float
from tumornet.network import (NetworkSpec, Transfer, batch_outputs,
                              init_network, train)
from tumornet.nested import NestedModel, predict_batch

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# analytic mass the evaluation grid must cover for quadrature to stand in
# for the full-line integral
COVERAGE_REQUIRED = 0.999


class DensityFamily(Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class Density:
    """One-dimensional parametric density: Gaussian(mu, sigma) stored as
    (a=mu, b=sigma), Uniform(lo, hi) stored as (a=lo, b=hi)."""

    family: DensityFamily
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("density parameters must be finite")
        if self.family is DensityFamily.GAUSSIAN and self.b <= 0.0:
            raise DomainError(f"gaussian sigma must be > 0, got {self.b}")
        if self.family is DensityFamily.UNIFORM and self.a >= self.b:
            raise DomainError(
                f"uniform support needs lo < hi, got [{self.a}, {self.b}]")

    @staticmethod
    def gaussian(mu: float, sigma: float) -> "Density":
        return Density(DensityFamily.GAUSSIAN, mu, sigma)

    @staticmethod
    def uniform(lo: float, hi: float) -> "Density":
        return Density(DensityFamily.UNIFORM, lo, hi)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.family is DensityFamily.GAUSSIAN:
            z = (x - self.a) / self.b
            return np.exp(-0.5 * z * z) / (self.b * _SQRT2PI)
        height = 1.0 / (self.b - self.a)
        inside = (x > self.a) & (x < self.b)
        edge = (x == self.a) | (x == self.b)
        return inside * height + edge * (0.5 * height)

    def cdf(self, x: float) -> float:
        if self.family is DensityFamily.GAUSSIAN:
            return 0.5 * (1.0 + math.erf((x - self.a) / (self.b * _SQRT2)))
        if x <= self.a:
            return 0.0
        if x >= self.b:
            return 1.0
        return (x - self.a) / (self.b - self.a)

    def mass_within(self, lo: float, hi: float) -> float:
        return self.cdf(hi) - self.cdf(lo)

    def envelope(self) -> tuple:
        """Interval holding all but ~1e-6 of the mass (all of it for
        uniforms): the default grid span."""
        if self.family is DensityFamily.GAUSSIAN:
            return (self.a - 5.0 * self.b, self.a + 5.0 * self.b)
        return (self.a, self.b)

    def sample(self, rng, n: int) -> np.ndarray:
        if self.family is DensityFamily.GAUSSIAN:
            return rng.normal(self.a, self.b, size=n)
        return rng.uniform(self.a, self.b, size=n)


@dataclass(frozen=True)
class ClassDensityPair:
    """Benign and metastasizing feature densities with their priors."""

    p_b: Density
    p_m: Density
    prior_b: float = 0.5
    prior_m: float = 0.5

    def __post_init__(self):
        if self.prior_b < 0.0 or self.prior_m < 0.0 or \
                abs(self.prior_b + self.prior_m - 1.0) > 1e-12:
            raise DomainError(
                f"priors must be nonnegative and sum to 1, got "
                f"{self.prior_b} + {self.prior_m}")
        # each density must integrate to 1 on its own default grid: a
        # construction-time sanity check that the quadrature conventions
        # (edge halving, 5-sigma envelopes) actually hold up
        grid = default_grid(self)
        for name, dens in (("p_b", self.p_b), ("p_m", self.p_m)):
            total = float(np.trapezoid(dens.pdf(grid), grid))
            if abs(total - 1.0) > 1e-6:
                raise DomainError(
                    f"density {name} integrates to {total} on the "
                    "evaluation grid, expected 1 within 1e-6")


def default_grid(pair: ClassDensityPair, n: int = 801) -> np.ndarray:
    """n evenly spaced points over the joint density envelope, with any
    uniform support endpoints inserted as exact nodes so their edge
    discontinuities cost the quadrature nothing."""
    if n < 2:
        raise DomainError("grid needs at least 2 points")
    lo_b, hi_b = pair.p_b.envelope()
    lo_m, hi_m = pair.p_m.envelope()
    lo, hi = min(lo_b, lo_m), max(hi_b, hi_m)
    grid = np.linspace(lo, hi, n)
    edges = [d for d in (pair.p_b, pair.p_m)
             if d.family is DensityFamily.UNIFORM]
    if edges:
        extra = np.array([v for d in edges for v in (d.a, d.b)])
        grid = np.union1d(grid, extra)
    return grid


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise DomainError("grid must be a vector of at least 2 points")
    if not np.all(np.isfinite(grid)):
        raise DomainError("grid contains non-finite points")
    if not np.all(np.diff(grid) > 0.0):
        raise DomainError("grid must be strictly increasing")
    return grid


def _check_coverage(pair: ClassDensityPair, grid: np.ndarray) -> None:
    lo, hi = float(grid[0]), float(grid[-1])
    for name, dens in (("p_b", pair.p_b), ("p_m", pair.p_m)):
        mass = dens.mass_within(lo, hi)
        if mass < COVERAGE_REQUIRED:
            raise CoverageError(
                f"grid [{lo}, {hi}] covers {mass:.6f} of {name}'s mass, "
                f"needs >= {COVERAGE_REQUIRED}")


def bayes_posterior(k: float, pair: ClassDensityPair) -> float:
    """The optimal output at feature value k: P_M p_M / (P_B p_B + P_M p_M)."""
    w_b = pair.prior_b * float(pair.p_b.pdf(k))
    w_m = pair.prior_m * float(pair.p_m.pdf(k))
    denom = w_b + w_m
    if denom == 0.0:
        raise DomainError(
            f"posterior undefined at k={k}: both weighted densities vanish")
    return w_m / denom


def oracle_curve(pair: ClassDensityPair, grid) -> tuple:
    """f* tabulated on the grid.

    Returns (values, defined): where both weighted densities vanish the
    posterior has no value; those points carry 0.5 and defined=False
    (they also carry zero quadrature weight, so downstream integrals are
    untouched).
    """
    grid = _check_grid(grid)
    w_b = pair.prior_b * pair.p_b.pdf(grid)
    w_m = pair.prior_m * pair.p_m.pdf(grid)
    denom = w_b + w_m
    defined = denom > 0.0
    values = np.full(grid.shape, 0.5)
    values[defined] = w_m[defined] / denom[defined]
    return values, defined


def expected_sse(f_values, pair: ClassDensityPair, grid) -> float:
    """Trapezoid quadrature of P_B p_B f^2 + P_M p_M (f-1)^2 over the
    grid; the grid must cover at least 99.9% of each density's mass."""
    grid = _check_grid(grid)
    f_values = np.asarray(f_values, dtype=np.float64)
    if f_values.shape != grid.shape:
        raise DomainError(
            f"f has shape {f_values.shape}, grid has {grid.shape}")
    if not np.all(np.isfinite(f_values)):
        raise DomainError("f contains non-finite values")
    _check_coverage(pair, grid)
    integrand = (pair.prior_b * pair.p_b.pdf(grid) * f_values ** 2
                 + pair.prior_m * pair.p_m.pdf(grid) * (f_values - 1.0) ** 2)
    return float(np.trapezoid(integrand, grid))


def sse_stationarity_residual(pair: ClassDensityPair, grid) -> float:
    """Max-norm of the pointwise eps-derivative 2 P_B p_B f + 2 P_M p_M
    (f - 1) evaluated at f = f*; zero up to rounding by construction."""
    grid = _check_grid(grid)
    f_star, defined = oracle_curve(pair, grid)
    residual = (2.0 * pair.prior_b * pair.p_b.pdf(grid) * f_star
                + 2.0 * pair.prior_m * pair.p_m.pdf(grid) * (f_star - 1.0))
    return float(np.abs(residual[defined]).max(initial=0.0))


@dataclass
class PosteriorReport:
    """Trained output curve vs the oracle on a shared grid."""

    grid: np.ndarray
    f_net: np.ndarray
    f_star: np.ndarray
    defined: np.ndarray
    mean_abs_dev: float
    max_abs_dev: float
    n_benign: int
    n_malignant: int
    final_train_sse: float


def posterior_convergence_experiment(pair: ClassDensityPair,
                                     n_per_class: int, spec: NetworkSpec,
                                     config, grid=None,
                                     sample_seed: int = 0) -> PosteriorReport:
    """Sample a labeled 1-D training set from the densities (class sizes
    proportional to the priors), fit the network on it, and measure
    |f_net - f*| across the grid."""
    if n_per_class < 1:
        raise DomainError("n_per_class must be >= 1")
    if spec.n_in != 1 or spec.n_out != 1:
        raise DomainError("experiment needs a 1-input, 1-output network")
    if spec.transfers[-1] is not Transfer.SIGMOID:
        raise DomainError("experiment needs a sigmoid output")
    if pair.prior_b == 0.0 or pair.prior_m == 0.0:
        raise DomainError("degenerate task: both priors must be positive")
    grid = default_grid(pair) if grid is None else _check_grid(grid)
    _check_coverage(pair, grid)

    total = 2 * n_per_class
    n_b = int(math.floor(total * pair.prior_b + 0.5))
    n_m = total - n_b
    rng = np.random.default_rng(sample_seed)
    xs = np.concatenate([pair.p_b.sample(rng, n_b),
                         pair.p_m.sample(rng, n_m)])
    ys = np.concatenate([np.zeros(n_b), np.ones(n_m)])
    X = xs[:, None]
    Y = ys[:, None]

    net0 = init_network(spec, init_seed=config.init_seed,
                        init_scale=config.init_scale)
    result = train(net0, X, Y, config)
    f_net = batch_outputs(result.net, grid[:, None])[:, 0]
    f_star, defined = oracle_curve(pair, grid)
    dev = np.abs(f_net[defined] - f_star[defined])
    return PosteriorReport(
        grid=grid, f_net=f_net, f_star=f_star, defined=defined,
        mean_abs_dev=float(dev.mean()), max_abs_dev=float(dev.max()),
        n_benign=n_b, n_malignant=n_m,
        final_train_sse=float(result.train_history[-1]))


@dataclass
class EvalReport:
    """Classification and per-stage regression quality on one cohort.

    Rates whose denominator is empty (and AUC when a class is missing)
    are None, serialized as JSON null / empty CSV cell.
    """

    n: int
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float | None
    tpr: float | None
    fpr: float | None
    auc: float | None
    rmse_phase1: float | None
    rmse_phase2: float | None
    posterior_mad: float | None = None

    def __post_init__(self):
        if self.tp + self.fp + self.tn + self.fn != self.n:
            raise DomainError("confusion counts do not sum to sample size")
        for name in ("accuracy", "tpr", "fpr", "auc"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} {value} outside [0, 1]")


def _rank_auc(scores: np.ndarray, labels: np.ndarray) -> float | None:
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def classification_metrics(predictions, labels, threshold: float = 0.5):
    """Confusion counts at the threshold (ties label 1) plus rank-based
    AUC with average ranks on tied scores.

    Returns (tp, fp, tn, fn, accuracy, tpr, fpr, auc); auc is None when
    either class is absent.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.ndim != 1:
        raise DomainError("predictions and labels must be equal-length "
                          "vectors")
    if predictions.size == 0:
        raise DomainError("no predictions to score")
    if not np.all(np.isin(labels, (0, 1))):
        raise DomainError("labels must be 0 or 1")
    labels = labels.astype(np.int64)
    hard = (predictions >= threshold).astype(np.int64)
    tp = int(np.sum((hard == 1) & (labels == 1)))
    fp = int(np.sum((hard == 1) & (labels == 0)))
    tn = int(np.sum((hard == 0) & (labels == 0)))
    fn = int(np.sum((hard == 0) & (labels == 1)))
    accuracy = (tp + tn) / labels.size
    tpr = tp / (tp + fn) if tp + fn else None
    fpr = fp / (fp + tn) if fp + tn else None
    auc = _rank_auc(predictions, labels)
    return tp, fp, tn, fn, accuracy, tpr, fpr, auc


def regression_metrics(predictions, targets) -> float:
    """Root-mean-square error."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise DomainError("predictions and targets must share a shape")
    if predictions.size == 0:
        raise DomainError("no values to score")
    return float(np.sqrt(np.mean((predictions - targets) ** 2)))


def evaluate_cohort(model: NestedModel, cohort: Cohort,
                    threshold: float | None = None) -> EvalReport:
    """Predict every record and score the three stages: classification
    on all records, stage-I regression on simulated benign records,
    stage-II regression on all simulated records."""
    records = cohort.records
    if not records:
        raise DomainError("cannot evaluate an empty cohort")
    thr = model.classification_threshold if threshold is None else threshold
    if not 0.0 <= thr <= 1.0:
        raise DomainError(f"threshold must lie in [0, 1], got {thr}")
    scaled1, scaled2, prob, _ = predict_batch(model, records)
    labels = np.array([r.label for r in records])
    tp, fp, tn, fn, accuracy, tpr, fpr, auc = classification_metrics(
        prob, labels, thr)

    bounds = model.bounds
    benign_idx = [i for i, r in enumerate(records)
                  if r.label == 0 and not r.synthetic_counter]
    sim_idx = [i for i, r in enumerate(records) if not r.synthetic_counter]
    rmse1 = None
    if benign_idx:
        targets1 = np.array([phase_target(records[i], Phase.I, bounds)
                             for i in benign_idx])
        rmse1 = regression_metrics(scaled1[benign_idx], targets1)
    rmse2 = None
    if sim_idx:
        targets2 = np.array([phase_target(records[i], Phase.II, bounds)
                             for i in sim_idx])
        rmse2 = regression_metrics(scaled2[sim_idx], targets2)
    return EvalReport(n=len(records), tp=tp, fp=fp, tn=tn, fn=fn,
                      accuracy=accuracy, tpr=tpr, fpr=fpr, auc=auc,
                      rmse_phase1=rmse1, rmse_phase2=rmse2)


_REPORT_COLUMNS = ("n", "tp", "fp", "tn", "fn", "accuracy", "tpr", "fpr",
                   "auc", "rmse_phase1", "rmse_phase2", "posterior_mad")


def report_to_json(report: EvalReport) -> str:
    return json.dumps(asdict(report), indent=2) + "\n"


def report_to_csv(report: EvalReport) -> str:
    """Header plus one flat row; absent metrics leave their cell empty."""
    values = []
    for name in _REPORT_COLUMNS:
        value = getattr(report, name)
        if value is None:
            values.append("")
        elif isinstance(value, int):
            values.append(str(value))
        else:
            values.append(fmt_float(value))
    return ",".join(_REPORT_COLUMNS) + "\n" + ",".join(values) + "\n"


def posterior_curve_to_csv(report: PosteriorReport) -> str:
    """The trained-vs-oracle curves, one grid point per row."""
    lines = ["k,f_net,f_star"]
    for k, fn_v, fs in zip(report.grid, report.f_net, report.f_star):
        lines.append(f"{fmt_float(k)},{fmt_float(fn_v)},{fmt_float(fs)}")
    return "\n".join(lines) + "\n"
