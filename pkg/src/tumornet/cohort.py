"""Seeded synthetic patient cohorts.

Benign records iterate the noisy logistic map at a stable growth rate so
the mass series settles near the steady state k(1-1/r). Malignant
records start the same way, then ramp the growth rate into the chaotic
band at a sampled drift time; the first post-drift mass that leaves the
old steady-state band by more than the detection threshold becomes the
detection mass. Random counter-examples draw every feature uniformly
from the declared bounds and are flagged so they can be confined to
classifier training.

Every record is a pure function of (config, id): the per-record seed is
spawned as SeedSequence([master_seed, id]) (retries append the attempt
index), so cohorts rebuild byte-identically and records can be
regenerated in any order.
"""

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from tumornet.errors import (DomainError, FormatError, NumericalError,
                             ScalingError, UsageError)
from tumornet.fileio import atomic_write_text, fmt_float
from tumornet.growth import LogisticParams, iterate_noisy, lyapunov_exponent
from tumornet._dispatch import kernels

COHORT_FORMAT_VERSION = 1

# draws per candidate chaotic growth rate before the whole attempt is
# abandoned for a fresh sub-seed
_RATE_DRAWS_PER_ATTEMPT = 64


class Phase(Enum):
    """The three classifier stages and their targets."""

    I = "I"      # benign steady-state mass (regression)
    II = "II"    # mass at malignancy detection (regression)
    III = "III"  # metastasizing (1) vs benign (0)


@dataclass(frozen=True)
class FeatureBounds:
    """Fixed scaling bounds mapping raw features onto [0, 1]."""

    p53_lo: float = 0.0
    p53_hi: float = 12.0
    mass_lo: float = 0.0
    mass_hi: float = 1.0

    def __post_init__(self):
        for lo, hi, name in ((self.p53_lo, self.p53_hi, "p53"),
                             (self.mass_lo, self.mass_hi, "mass")):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise DomainError(f"{name} bounds must be finite")
            if not lo < hi:
                raise DomainError(f"{name} bounds need lo < hi, got [{lo}, {hi}]")

    def scale_p53(self, value: float) -> float:
        return _scale(value, self.p53_lo, self.p53_hi, "p53_conc")

    def scale_mass(self, value: float) -> float:
        return _scale(value, self.mass_lo, self.mass_hi, "mass")


def _scale(value: float, lo: float, hi: float, name: str) -> float:
    if not lo <= value <= hi:
        raise ScalingError(
            f"{name} value {value} outside declared bounds [{lo}, {hi}]")
    return (value - lo) / (hi - lo)


@dataclass(frozen=True, eq=False)
class PatientRecord:
    """One synthetic case: identifiers, features, and phase targets.

    max_mass dominates the observed window for simulated records; the
    dominance is deliberately not imposed on synthetic counter-examples,
    whose features are independent uniform draws by contract.
    """

    id: int
    label: int
    synthetic_counter: bool
    p53_conc: float
    mass_series: np.ndarray
    max_mass: float
    steady_state_mass: float
    detection_mass: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "mass_series",
                           np.asarray(self.mass_series, dtype=np.float64))
        if self.id < 0:
            raise DomainError(f"record id must be >= 0, got {self.id}")
        if self.label not in (0, 1):
            raise DomainError(f"label must be 0 or 1, got {self.label}")
        if self.seed < 0:
            raise DomainError(f"seed must be >= 0, got {self.seed}")
        scalars = (self.p53_conc, self.max_mass, self.steady_state_mass,
                   self.detection_mass)
        if not all(math.isfinite(v) and v >= 0.0 for v in scalars):
            raise DomainError(f"record {self.id} has a non-finite or "
                              "negative scalar feature")
        if self.mass_series.ndim != 1 or self.mass_series.size == 0:
            raise DomainError(f"record {self.id} mass_series must be a "
                              "nonempty vector")
        if not np.all(np.isfinite(self.mass_series)):
            raise DomainError(f"record {self.id} mass_series is non-finite")
        if np.any(self.mass_series < 0.0):
            raise DomainError(f"record {self.id} has negative masses")
        if not self.synthetic_counter and \
                self.max_mass < float(self.mass_series.max()):
            raise DomainError(
                f"record {self.id}: max_mass {self.max_mass} below the "
                "observed window maximum")


@dataclass(frozen=True)
class CohortConfig:
    """Everything a cohort is generated from; the cohort is a pure
    function of this value."""

    n_benign: int = 500
    n_malignant: int = 500
    prior_b: float = 0.5
    prior_m: float = 0.5
    W: int = 16
    horizon: int = 512
    noise_sigma: float = 0.02
    k: float = 1.0
    benign_r_range: tuple = (1.5, 2.9)
    malignant_r_range: tuple = (3.6, 4.0)
    drift_bounds: tuple = (128, 256)
    ramp_len: int = 32
    detection_threshold: float = 0.1
    x0_range: tuple = (0.05, 0.2)
    benign_p53_log_mu: float = 0.0
    malignant_p53_log_mu: float = math.log(3.0)
    p53_log_sigma: float = 0.4
    bounds: FeatureBounds = FeatureBounds()
    master_seed: int = 0
    max_retries: int = 16

    def __post_init__(self):
        object.__setattr__(self, "benign_r_range", tuple(self.benign_r_range))
        object.__setattr__(self, "malignant_r_range",
                           tuple(self.malignant_r_range))
        object.__setattr__(self, "drift_bounds", tuple(self.drift_bounds))
        object.__setattr__(self, "x0_range", tuple(self.x0_range))
        if self.n_benign < 0 or self.n_malignant < 0:
            raise DomainError("record counts must be >= 0")
        if self.prior_b < 0.0 or self.prior_m < 0.0 or \
                abs(self.prior_b + self.prior_m - 1.0) > 1e-12:
            raise DomainError(
                f"priors must be nonnegative and sum to 1, got "
                f"{self.prior_b} + {self.prior_m}")
        if self.W < 1:
            raise DomainError("observation window W must be >= 1")
        if self.horizon < self.W:
            raise DomainError(
                f"horizon {self.horizon} shorter than window {self.W}")
        if self.noise_sigma < 0.0:
            raise DomainError("noise_sigma must be >= 0")
        if self.k <= 0.0:
            raise DomainError("k must be > 0")
        b_lo, b_hi = self.benign_r_range
        if not 1.0 < b_lo < b_hi < 3.0:
            raise DomainError(
                f"benign r-range must sit strictly inside (1, 3), got "
                f"({b_lo}, {b_hi})")
        m_lo, m_hi = self.malignant_r_range
        if not 3.57 < m_lo < m_hi <= 4.0:
            raise DomainError(
                f"malignant r-range must sit inside (3.57, 4], got "
                f"({m_lo}, {m_hi})")
        t_lo, t_hi = self.drift_bounds
        if not (0 < t_lo <= t_hi):
            raise DomainError(f"drift bounds must satisfy 0 < lo <= hi, got "
                              f"({t_lo}, {t_hi})")
        if self.ramp_len < 1:
            raise DomainError("ramp_len must be >= 1")
        if t_hi + self.ramp_len >= self.horizon:
            raise DomainError(
                f"latest drift {t_hi} + ramp {self.ramp_len} must end before "
                f"horizon {self.horizon}")
        if self.detection_threshold <= 0.0:
            raise DomainError("detection_threshold must be > 0")
        x_lo, x_hi = self.x0_range
        if not (0.0 < x_lo < x_hi < self.k):
            raise DomainError(
                f"x0 range must sit strictly inside (0, {self.k})")
        if self.p53_log_sigma < 0.0:
            raise DomainError("p53_log_sigma must be >= 0")
        if self.bounds.mass_hi < self.k:
            raise DomainError(
                f"mass bound {self.bounds.mass_hi} below carrying capacity "
                f"{self.k}: simulated masses would overflow the scaling")
        if self.master_seed < 0:
            raise DomainError("master_seed must be >= 0")
        if self.max_retries < 1:
            raise DomainError("max_retries must be >= 1")


@dataclass(frozen=True, eq=False)
class Cohort:
    records: list
    config: CohortConfig
    format_version: int = COHORT_FORMAT_VERSION

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise DomainError("cohort record ids are not unique")
        for r in self.records:
            if r.mass_series.size != self.config.W:
                raise DomainError(
                    f"record {r.id} window length {r.mass_series.size} does "
                    f"not match W={self.config.W}")
            if not r.synthetic_counter and \
                    float(r.mass_series.max()) > self.config.k + 1e-12:
                raise DomainError(
                    f"record {r.id} carries masses above k={self.config.k}")

    def counts(self) -> tuple[int, int, int]:
        """(simulated benign, simulated malignant, counter-examples)."""
        n_b = sum(1 for r in self.records
                  if r.label == 0 and not r.synthetic_counter)
        n_m = sum(1 for r in self.records
                  if r.label == 1 and not r.synthetic_counter)
        n_c = sum(1 for r in self.records if r.synthetic_counter)
        return n_b, n_m, n_c


def derive_seed(master_seed: int, record_id: int, attempt: int = 0) -> int:
    """The stated per-record seed rule: hash of (master_seed, id), with
    retry attempts spawning fresh sub-seeds."""
    key = [master_seed, record_id] if attempt == 0 else \
        [master_seed, record_id, attempt]
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])


def _draw_p53(rng, config: CohortConfig, log_mu: float) -> float:
    raw = float(np.exp(rng.normal(log_mu, config.p53_log_sigma)))
    # clamp into the declared scaling bounds so downstream scaling is total
    return min(max(raw, config.bounds.p53_lo), config.bounds.p53_hi)


def _draw_benign_params(rng, config: CohortConfig):
    r = float(rng.uniform(*config.benign_r_range))
    x0 = float(rng.uniform(*config.x0_range))
    p53 = _draw_p53(rng, config, config.benign_p53_log_mu)
    return r, x0, p53


def _draw_malignant_params(rng, config: CohortConfig):
    """Pre-drift dynamics, drift schedule, and a post-drift growth rate
    verified chaotic (periodic windows inside the chaotic band are
    rejected by a noise-free Lyapunov check)."""
    r_b, x0, _ = _draw_benign_params(rng, config)
    p53 = _draw_p53(rng, config, config.malignant_p53_log_mu)
    t_lo, t_hi = config.drift_bounds
    t_d = int(rng.integers(t_lo, t_hi + 1))
    r_m = None
    for _ in range(_RATE_DRAWS_PER_ATTEMPT):
        cand = float(rng.uniform(*config.malignant_r_range))
        lam = lyapunov_exponent(LogisticParams(r=cand, k=config.k),
                                x0=0.2 * config.k, burn_in=1000, n=4096)
        if lam > 0.01:
            r_m = cand
            break
    return r_b, x0, p53, t_d, r_m


def replay_benign_draws(config: CohortConfig, seed: int):
    """(r, x0, p53) a benign record with this seed was built from."""
    return _draw_benign_params(np.random.default_rng(seed), config)


def replay_malignant_draws(config: CohortConfig, seed: int):
    """(r_benign, x0, p53, t_drift, r_malignant) behind a malignant
    record with this seed."""
    return _draw_malignant_params(np.random.default_rng(seed), config)


def generate_benign(config: CohortConfig, record_id: int) -> PatientRecord:
    """Stable-regime record: full-horizon noisy orbit, steady-state
    target k(1-1/r), detection target set to the same steady state (the
    benign reading of a detection mass that never occurs)."""
    seed = derive_seed(config.master_seed, record_id)
    rng = np.random.default_rng(seed)
    r, x0, p53 = _draw_benign_params(rng, config)
    eta = config.noise_sigma * rng.standard_normal(config.horizon)
    masses = iterate_noisy(LogisticParams(r=r, k=config.k), x0, eta)
    steady = config.k * (1.0 - 1.0 / r)
    return PatientRecord(
        id=record_id, label=0, synthetic_counter=False, p53_conc=p53,
        mass_series=masses[-config.W:].copy(),
        max_mass=float(masses.max()), steady_state_mass=steady,
        detection_mass=steady, seed=seed)


def generate_malignant(config: CohortConfig, record_id: int) -> PatientRecord:
    """Drift record: benign dynamics until t_drift, then a linear ramp
    of the growth rate into the chaotic band. The detection mass is the
    first post-drift mass leaving the old steady-state band by more than
    the relative detection threshold. Attempts that find no chaotic rate
    or no detection event retry under a fresh sub-seed."""
    for attempt in range(config.max_retries):
        seed = derive_seed(config.master_seed, record_id, attempt)
        rng = np.random.default_rng(seed)
        r_b, x0, p53, t_d, r_m = _draw_malignant_params(rng, config)
        if r_m is None:
            continue
        rates = np.full(config.horizon, r_b)
        ramp = np.linspace(r_b, r_m, config.ramp_len + 1)[1:]
        rates[t_d:t_d + config.ramp_len] = ramp
        rates[t_d + config.ramp_len:] = r_m
        eta = config.noise_sigma * rng.standard_normal(config.horizon)
        masses = np.empty(config.horizon + 1)
        masses[0] = x0
        kernels.orbit_fill_ramped(masses, rates, config.k, eta)
        steady = config.k * (1.0 - 1.0 / r_b)
        band = config.detection_threshold * steady
        post = masses[t_d + 1:]
        hits = np.nonzero(np.abs(post - steady) > band)[0]
        if hits.size == 0:
            continue
        detection = float(post[hits[0]])
        return PatientRecord(
            id=record_id, label=1, synthetic_counter=False, p53_conc=p53,
            mass_series=masses[-config.W:].copy(),
            max_mass=float(masses.max()), steady_state_mass=steady,
            detection_mass=detection, seed=seed)
    raise NumericalError(
        f"record {record_id}: no detection event within the horizon after "
        f"{config.max_retries} attempts")


def synthesize_counter_examples(n: int, bounds: FeatureBounds, seed: int,
                                W: int = 16, start_id: int = 0) -> list:
    """n records with every feature an independent uniform draw from its
    bounds, labeled 1 and flagged synthetic_counter."""
    if n < 0:
        raise DomainError(f"counter-example count must be >= 0, got {n}")
    if W < 1:
        raise DomainError("observation window W must be >= 1")
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        p53 = float(rng.uniform(bounds.p53_lo, bounds.p53_hi))
        series = rng.uniform(bounds.mass_lo, bounds.mass_hi, size=W)
        max_mass = float(rng.uniform(bounds.mass_lo, bounds.mass_hi))
        steady = float(rng.uniform(bounds.mass_lo, bounds.mass_hi))
        detection = float(rng.uniform(bounds.mass_lo, bounds.mass_hi))
        records.append(PatientRecord(
            id=start_id + i, label=1, synthetic_counter=True, p53_conc=p53,
            mass_series=series, max_mass=max_mass, steady_state_mass=steady,
            detection_mass=detection, seed=seed))
    return records


def generate_cohort(config: CohortConfig, n_counter: int = 0) -> Cohort:
    """The full cohort: benign ids first, then malignant, then optional
    counter-examples, all ordered by id."""
    records = [generate_benign(config, i) for i in range(config.n_benign)]
    records += [generate_malignant(config, config.n_benign + i)
                for i in range(config.n_malignant)]
    if n_counter:
        total = config.n_benign + config.n_malignant
        counter_seed = derive_seed(config.master_seed, total)
        records += synthesize_counter_examples(
            n_counter, config.bounds, counter_seed, W=config.W,
            start_id=total)
    return Cohort(records=records, config=config)


def split(cohort: Cohort, train_frac: float, val_frac: float,
          seed: int) -> tuple:
    """Stratified-by-label partition into (train, val, test) cohorts.

    Within each label stratum the record order is shuffled by the seeded
    stream, then train takes round-half-up(n * train_frac), val the same
    of what the rule gives it, and test the rest. Raises UsageError when
    any part of any present stratum comes out empty.
    """
    if not (train_frac > 0.0 and val_frac > 0.0
            and train_frac + val_frac < 1.0):
        raise UsageError(
            f"need train_frac > 0, val_frac > 0, sum < 1; got "
            f"{train_frac} + {val_frac}")
    if not cohort.records:
        raise UsageError("cannot split an empty cohort")
    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for label in (0, 1):
        stratum = [r for r in cohort.records if r.label == label]
        if not stratum:
            continue
        order = rng.permutation(len(stratum))
        n = len(stratum)
        n_train = int(math.floor(n * train_frac + 0.5))
        n_val = int(math.floor(n * val_frac + 0.5))
        n_test = n - n_train - n_val
        if n_train < 1 or n_val < 1 or n_test < 1:
            raise UsageError(
                f"label-{label} stratum of {n} records leaves an empty part "
                f"under fractions ({train_frac}, {val_frac})")
        shuffled = [stratum[i] for i in order]
        parts[0].extend(shuffled[:n_train])
        parts[1].extend(shuffled[n_train:n_train + n_val])
        parts[2].extend(shuffled[n_train + n_val:])
    out = []
    for chunk in parts:
        chunk = sorted(chunk, key=lambda r: r.id)
        n_b = sum(1 for r in chunk if r.label == 0 and not r.synthetic_counter)
        n_m = sum(1 for r in chunk if r.label == 1 and not r.synthetic_counter)
        cfg = dataclasses.replace(cohort.config, n_benign=n_b, n_malignant=n_m)
        out.append(Cohort(records=chunk, config=cfg))
    return tuple(out)


def to_feature_vector(record: PatientRecord, phase: Phase,
                      bounds: FeatureBounds) -> np.ndarray:
    """Fresh (unchained) inputs per phase, scaled to [0, 1].

    Phase I: [p53_conc, the W window masses]. Phase II: [max_mass].
    Phase III: empty (the classifier sees only the chained vector).
    """
    if phase is Phase.I:
        vec = np.empty(record.mass_series.size + 1)
        vec[0] = bounds.scale_p53(record.p53_conc)
        for i, m in enumerate(record.mass_series):
            vec[i + 1] = bounds.scale_mass(float(m))
        return vec
    if phase is Phase.II:
        return np.array([bounds.scale_mass(record.max_mass)])
    return np.empty(0)


def phase_target(record: PatientRecord, phase: Phase,
                 bounds: FeatureBounds) -> float:
    """Scaled regression target (phases I, II) or the class label."""
    if phase is Phase.I:
        return bounds.scale_mass(record.steady_state_mass)
    if phase is Phase.II:
        return bounds.scale_mass(record.detection_mass)
    return float(record.label)


def _csv_header(W: int) -> list:
    return (["id", "label", "synthetic_counter", "p53_conc"]
            + [f"mass_{i}" for i in range(W)]
            + ["max_mass", "steady_state_mass", "detection_mass", "seed"])


def _sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def config_to_doc(config: CohortConfig) -> dict:
    doc = dataclasses.asdict(config)
    doc["bounds"] = dataclasses.asdict(config.bounds)
    for key in ("benign_r_range", "malignant_r_range", "drift_bounds",
                "x0_range"):
        doc[key] = list(doc[key])
    return doc


def config_from_doc(doc: dict) -> CohortConfig:
    if not isinstance(doc, dict):
        raise FormatError("cohort config must be a JSON object")
    known = {f.name for f in dataclasses.fields(CohortConfig)}
    unknown = set(doc) - known
    if unknown:
        raise FormatError(
            f"unknown cohort config keys: {', '.join(sorted(unknown))}")
    kwargs = dict(doc)
    if "bounds" in kwargs:
        bounds_doc = kwargs["bounds"]
        if not isinstance(bounds_doc, dict):
            raise FormatError("cohort config field 'bounds' must be an object")
        known_b = {f.name for f in dataclasses.fields(FeatureBounds)}
        unknown_b = set(bounds_doc) - known_b
        if unknown_b:
            raise FormatError(
                f"unknown bounds keys: {', '.join(sorted(unknown_b))}")
        kwargs["bounds"] = FeatureBounds(**bounds_doc)
    try:
        return CohortConfig(**kwargs)
    except TypeError as exc:
        raise FormatError(f"bad cohort config: {exc}") from exc
    except DomainError as exc:
        raise FormatError(f"bad cohort config: {exc}") from exc


def save_cohort(cohort: Cohort, path) -> None:
    """Write the cohort CSV plus a JSON sidecar (same stem, .json)
    carrying the config and format version. Floats print with 17
    significant digits so round trips are bit-exact."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_csv_header(cohort.config.W))
    for r in cohort.records:
        row = [str(r.id), str(r.label), str(int(r.synthetic_counter)),
               fmt_float(r.p53_conc)]
        row += [fmt_float(m) for m in r.mass_series]
        row += [fmt_float(r.max_mass), fmt_float(r.steady_state_mass),
                fmt_float(r.detection_mass), str(r.seed)]
        writer.writerow(row)
    atomic_write_text(path, buf.getvalue())
    sidecar = {"format_version": cohort.format_version,
               "config": config_to_doc(cohort.config)}
    atomic_write_text(_sidecar_path(path),
                      json.dumps(sidecar, indent=2) + "\n")


def _parse_int(text: str, line: int, col: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise FormatError(
            f"line {line}: column {col} is not an integer: {text!r}") from None


def _parse_float(text: str, line: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FormatError(
            f"line {line}: column {col} is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise FormatError(f"line {line}: column {col} is not finite: {text!r}")
    return value


def load_cohort(path) -> Cohort:
    """Parse a cohort CSV and its sidecar back into a Cohort; malformed
    rows fail with the 1-based line number."""
    path = Path(path)
    sidecar_path = _sidecar_path(path)
    if not path.exists():
        raise FormatError(f"cohort file not found: {path}")
    if not sidecar_path.exists():
        raise FormatError(f"cohort sidecar not found: {sidecar_path}")
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"cohort sidecar is not valid JSON: {exc}") from exc
    if not isinstance(sidecar, dict):
        raise FormatError("cohort sidecar must be a JSON object")
    version = sidecar.get("format_version")
    if version != COHORT_FORMAT_VERSION:
        raise FormatError(
            f"unknown cohort format_version {version!r}, expected "
            f"{COHORT_FORMAT_VERSION}")
    if "config" not in sidecar:
        raise FormatError("cohort sidecar field 'config' is missing")
    config = config_from_doc(sidecar["config"])

    expected = _csv_header(config.W)
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("line 1: cohort file has no header") from None
        if header != expected:
            raise FormatError(
                f"line 1: bad header, expected {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise FormatError(
                    f"line {lineno}: {len(row)} fields, expected "
                    f"{len(expected)}")
            rid = _parse_int(row[0], lineno, "id")
            label = _parse_int(row[1], lineno, "label")
            if label not in (0, 1):
                raise FormatError(f"line {lineno}: label must be 0 or 1")
            counter_flag = _parse_int(row[2], lineno, "synthetic_counter")
            if counter_flag not in (0, 1):
                raise FormatError(
                    f"line {lineno}: synthetic_counter must be 0 or 1")
            p53 = _parse_float(row[3], lineno, "p53_conc")
            series = np.array([
                _parse_float(row[4 + i], lineno, f"mass_{i}")
                for i in range(config.W)])
            base = 4 + config.W
            try:
                record = PatientRecord(
                    id=rid, label=label, synthetic_counter=bool(counter_flag),
                    p53_conc=p53, mass_series=series,
                    max_mass=_parse_float(row[base], lineno, "max_mass"),
                    steady_state_mass=_parse_float(
                        row[base + 1], lineno, "steady_state_mass"),
                    detection_mass=_parse_float(
                        row[base + 2], lineno, "detection_mass"),
                    seed=_parse_int(row[base + 3], lineno, "seed"))
            except DomainError as exc:
                raise FormatError(f"line {lineno}: {exc}") from exc
            records.append(record)
    return Cohort(records=records, config=config, format_version=version)
