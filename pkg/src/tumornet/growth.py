"""Growth dynamics: gene-activity balance, the logistic difference
equation, and regime analysis.

The cell-mass model is the discrete logistic map

    x[t+1] = r * x[t] * (1 - x[t] / k)

which sits at the end of a discretization chain from a maturity-structured
population balance (Rubinow's maturity-time model); the transcription of
that chain is kept verbatim in :func:`rubinow_to_logistic`, including its
inadmissible outputs. For 1 < r < 3 orbits settle at the fixed point
k*(1 - 1/r); past r = 3 the map period-doubles and, near r = 3.57,
degenerates into chaos. Regime labels are decided from orbit recurrence
plus a Lyapunov exponent estimate (mean of ln|r(1 - 2x/k)| along the
orbit).

Simulated trajectories add multiplicative Gaussian noise with a clamp to
[0, k], so the next mass depends only on the current mass and the seeded
noise draw for that step (a Markov update).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from tumornet._dispatch import kernels
from tumornet.errors import (
    DomainError,
    NumericalError,
    SingularityError,
    UsageError,
)
from tumornet.fileio import atomic_write_text, fmt_float

R_MAX = 4.0


@dataclass(frozen=True)
class LogisticParams:
    """Growth rate r and carrying capacity k of the logistic map.

    r is capped at 4 so orbits started in [0, k] stay in [0, k].
    """

    r: float
    k: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r < 0.0:
            raise DomainError(f"growth rate r must be >= 0, got {self.r}")
        if self.r > R_MAX:
            raise DomainError(
                f"growth rate r must be <= {R_MAX} to keep orbits in "
                f"[0, k], got {self.r}")
        if not np.isfinite(self.k) or self.k <= 0.0:
            raise DomainError(f"carrying capacity k must be > 0, got {self.k}")

    @property
    def fixed_point(self) -> float:
        """Nontrivial fixed point k*(1 - 1/r); 0 when r <= 1."""
        if self.r <= 1.0:
            return 0.0
        return self.k * (1.0 - 1.0 / self.r)


@dataclass(frozen=True)
class RubinowDiscretization:
    """Time step, non-mitotic loss rate, and maturation-velocity gradient
    of the discretized maturity-structure balance."""

    dt: float
    lam: float
    dv_dmu: float

    def __post_init__(self):
        if not self.dt > 0.0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if self.lam < 0.0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class MapCoefficients:
    """Raw (r, k) pair from a formula transcription.

    Unlike LogisticParams this type enforces nothing; `admissible` says
    whether the pair would pass LogisticParams validation.
    """

    r: float
    k: float

    @property
    def admissible(self) -> bool:
        return 0.0 <= self.r <= R_MAX and self.k > 0.0


@dataclass(frozen=True)
class GeneActivitySignature:
    """Nonnegative activity levels: oncogene, tumor-suppressor,
    proapoptotic, antiapoptotic."""

    o: float
    s: float
    p: float
    ap: float

    def __post_init__(self):
        for name in ("o", "s", "p", "ap"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"gene activity {name} must be >= 0")


@dataclass(frozen=True)
class GeneSensitivity:
    """Nonnegative per-gene sensitivities for the growth-rate map."""

    o: float
    s: float
    p: float
    ap: float

    def __post_init__(self):
        for name in ("o", "s", "p", "ap"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"sensitivity {name} must be >= 0")


@dataclass(frozen=True)
class Trajectory:
    """A simulated mass series plus everything needed to regenerate it."""

    masses: np.ndarray
    params: LogisticParams
    x0: float
    seed: int
    noise_sigma: float

    def __len__(self):
        return self.masses.shape[0]


class RegimeKind(Enum):
    FIXED_POINT = "FixedPoint"
    CYCLE = "Cycle"
    CHAOTIC = "Chaotic"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class RegimeLabel:
    """Dynamical classification of an orbit. period is set for cycles only.

    lyapunov is -inf for superstable orbits (every derivative term along
    the orbit was exactly zero).
    """

    kind: RegimeKind
    lyapunov: float
    period: int | None = None

    def describe(self) -> str:
        if self.kind is RegimeKind.CYCLE:
            return f"Cycle({self.period})"
        return self.kind.value


@dataclass(frozen=True)
class RegimeTolerances:
    """Decision thresholds for classify_regime."""

    tol_fp: float = 1e-6
    tol_cycle: float = 1e-6
    max_period: int = 32
    tol_chaos: float = 0.01


def logistic_step(x: float, params: LogisticParams) -> float:
    """One application of the map; x must lie in [0, k]."""
    if x < 0.0 or x > params.k:
        raise DomainError(
            f"mass {x} outside [0, {params.k}]")
    return params.r * x * (1.0 - x / params.k)


def iterate_noisy(params: LogisticParams, x0: float, eta: np.ndarray
                  ) -> np.ndarray:
    """Iterate masses from x0 with one multiplicative noise term per step.

    Returns len(eta) + 1 masses clamped to [0, k]. This is the primitive
    simulate() builds on; calling it with a suffix of the original noise
    array reproduces the corresponding suffix of the trajectory exactly.
    """
    if x0 < 0.0 or x0 > params.k:
        raise DomainError(f"x0 {x0} outside [0, {params.k}]")
    eta = np.ascontiguousarray(eta, dtype=np.float64)
    masses = np.empty(eta.shape[0] + 1)
    masses[0] = x0
    kernels.orbit_fill(masses, params.r, params.k, eta)
    return masses


def simulate(params: LogisticParams, x0: float, steps: int,
             noise_sigma: float = 0.0, seed: int = 0) -> Trajectory:
    """Simulate `steps` noisy map steps from x0.

    Noise is multiplicative Gaussian: the post-step mass is
    clamp(step * (1 + sigma * z[t]), 0, k) with z drawn from the seeded
    stream. One draw is consumed per step even when sigma is zero, so
    the stream position always equals the step index.
    """
    if steps < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")
    if noise_sigma < 0.0:
        raise DomainError(f"noise_sigma must be >= 0, got {noise_sigma}")
    rng = np.random.default_rng(seed)
    eta = noise_sigma * rng.standard_normal(steps)
    masses = iterate_noisy(params, x0, eta)
    return Trajectory(masses=masses, params=params, x0=float(x0),
                      seed=int(seed), noise_sigma=float(noise_sigma))


def lyapunov_exponent(params: LogisticParams, x0: float = 0.2,
                      burn_in: int = 1000, n: int = 100_000) -> float:
    """Estimate the Lyapunov exponent as mean ln|r(1 - 2x/k)| along the
    noise-free orbit after burn_in.

    Orbit points where the map derivative is exactly zero contribute no
    term; if every term is skipped (orbit pinned at the superstable
    point) a NumericalError is raised.
    """
    if n < 1000:
        raise DomainError(f"n must be >= 1000, got {n}")
    if not (0.0 < x0 < params.k):
        raise DomainError(f"x0 must lie strictly inside (0, {params.k})")
    total, count = kernels.lyapunov_sum(params.r, params.k, x0, burn_in, n)
    if count == 0:
        raise NumericalError(
            "map derivative was exactly zero at every sampled orbit point")
    return total / count


def classify_regime(params: LogisticParams, burn_in: int = 500,
                    window: int = 256,
                    tolerances: RegimeTolerances | None = None,
                    x0: float = 0.2) -> RegimeLabel:
    """Label the orbit FixedPoint, Cycle(p), Chaotic, or Indeterminate.

    Decision order: window diameter below tol_fp wins; else the smallest
    period p <= max_period whose recurrence error stays below tol_cycle
    across the window; else Chaotic iff the Lyapunov estimate exceeds
    tol_chaos. When no rule fires the result is Indeterminate rather
    than a forced label.

    The x0 default avoids the map's critical point k/2, whose image can
    land on an absorbing orbit (at r = 4 it falls to 0 in two steps) and
    fake a fixed point.
    """
    if burn_in < 500:
        raise DomainError(f"burn_in must be >= 500, got {burn_in}")
    if window < 256:
        raise DomainError(f"window must be >= 256, got {window}")
    tol = tolerances or RegimeTolerances()
    pts = kernels.orbit_tail(params.r, params.k, x0, burn_in,
                             window + tol.max_period)
    try:
        lyap = lyapunov_exponent(params, x0=x0, burn_in=burn_in,
                                 n=max(window, 4096))
    except NumericalError:
        lyap = float("-inf")  # superstable orbit

    head = pts[:window]
    if float(head.max() - head.min()) < tol.tol_fp:
        return RegimeLabel(kind=RegimeKind.FIXED_POINT, lyapunov=lyap)
    for p in range(2, tol.max_period + 1):
        if np.all(np.abs(pts[p:p + window] - pts[:window]) < tol.tol_cycle):
            return RegimeLabel(kind=RegimeKind.CYCLE, lyapunov=lyap, period=p)
    if lyap > tol.tol_chaos:
        return RegimeLabel(kind=RegimeKind.CHAOTIC, lyapunov=lyap)
    return RegimeLabel(kind=RegimeKind.INDETERMINATE, lyapunov=lyap)


def bifurcation_scan(r_min: float, r_max: float, r_step: float,
                     k: float = 1.0, burn_in: int = 500, samples: int = 64,
                     x0: float = 0.5) -> np.ndarray:
    """Post-burn-in attractor samples over a growth-rate grid.

    Returns an array of shape (grid_size * samples, 2) with columns
    (r, orbit sample), grid-major in ascending r.
    """
    if not (0.0 <= r_min < r_max <= R_MAX):
        raise UsageError(
            f"need 0 <= r_min < r_max <= {R_MAX}, got [{r_min}, {r_max}]")
    if r_step <= 0.0:
        raise UsageError(f"r_step must be > 0, got {r_step}")
    grid = []
    i = 0
    while True:
        r = r_min + i * r_step
        if r > r_max + 1e-12:
            break
        grid.append(min(r, r_max))
        i += 1
    rows = np.empty((len(grid) * samples, 2))
    for gi, r in enumerate(grid):
        tail = kernels.orbit_tail(r, k, x0, burn_in, samples)
        rows[gi * samples:(gi + 1) * samples, 0] = r
        rows[gi * samples:(gi + 1) * samples, 1] = tail
    return rows


def rubinow_to_logistic(disc: RubinowDiscretization) -> MapCoefficients:
    """Transcribe the discretization chain's closing formulas:

        r = (2/dt)^-1
        k = -[(2/dt) - 1 - (lambda + dv_dmu)]^-1

    The output is returned exactly as the formulas produce it and is not
    validated against LogisticParams (k frequently comes out negative);
    check `.admissible` before treating it as simulator input.
    """
    denom = (2.0 / disc.dt) - 1.0 - (disc.lam + disc.dv_dmu)
    if denom == 0.0:
        raise SingularityError(
            "k denominator (2/dt) - 1 - (lambda + dv_dmu) is zero")
    r = 1.0 / (2.0 / disc.dt)
    k = -1.0 / denom
    return MapCoefficients(r=r, k=k)


def gene_activity_to_growth_rate(sig: GeneActivitySignature, r_base: float,
                                 beta: GeneSensitivity) -> float:
    """Map a gene-activity signature to a growth rate.

    r = clamp(r_base * exp(b_o*o + b_ap*ap - b_s*s - b_p*p), 0, 4):
    increasing in oncogene and antiapoptotic activity, decreasing in
    tumor-suppressor and proapoptotic activity, clamped to the orbit-
    bounding range.
    """
    if not (0.0 < r_base <= R_MAX):
        raise DomainError(f"r_base must lie in (0, {R_MAX}], got {r_base}")
    exponent = (beta.o * sig.o + beta.ap * sig.ap
                - beta.s * sig.s - beta.p * sig.p)
    r = r_base * np.exp(exponent)
    return float(min(max(r, 0.0), R_MAX))


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write the mass series as CSV with columns t,mass."""
    lines = ["t,mass"]
    for t, m in enumerate(traj.masses):
        lines.append(f"{t},{fmt_float(m)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def bifurcation_to_csv(table: np.ndarray, path) -> None:
    """Write a bifurcation_scan table as CSV with columns r,sample."""
    lines = ["r,sample"]
    for r, sample in table:
        lines.append(f"{fmt_float(r)},{fmt_float(sample)}")
    atomic_write_text(path, "\n".join(lines) + "\n")
