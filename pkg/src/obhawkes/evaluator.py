"""Exact log-likelihood evaluation, out-of-sample comparison, diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._recursion import env_loglik_pass, loglik_pass
from .kernel import KernelParams, KernelState
from .streams import NS_PER_SEC, CovariatePath, EventStream

VARIANTS = ("E", "H01", "H02", "H1", "H2", "H1L", "H2L")
EPS_FLOOR = float(np.finfo(float).eps)


class ModelIntegrityError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """A fitted member of the model zoo, ready for evaluation.

    variant     one of E, H01, H02, H1, H2, H1L, H2L
    params      kernel parameters (absent for E); expected in the normalized
                form where the intensity is h * g directly
    b           environment coefficients (absent for H01/H02)
    floor       intensity floor, required positive for the linear variants
    """

    variant: str
    params: KernelParams | None = None
    b: np.ndarray | None = None
    floor: float = 0.0
    label: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.b is not None:
            object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        has_kernel = self.variant != "E"
        has_env = self.variant not in ("H01", "H02")
        if has_kernel and self.params is None:
            raise ValueError(f"variant {self.variant} needs kernel parameters")
        if not has_kernel and self.params is not None:
            raise ValueError("variant E has no self-excitation")
        if has_env and self.b is None:
            raise ValueError(f"variant {self.variant} needs coefficients")
        if not has_env and self.b is not None:
            raise ValueError(f"variant {self.variant} has a constant environment")
        if self.variant in ("H1L", "H2L") and self.floor <= 0:
            object.__setattr__(self, "floor", EPS_FLOOR)

    @property
    def name(self) -> str:
        return self.label or self.variant


def _g_values(spec: ModelSpec, path: CovariatePath) -> np.ndarray:
    if spec.b is None:
        return np.ones(path.m)
    if path.dim != spec.b.size:
        raise ValueError("covariate dimension does not match the coefficients")
    return path.values @ spec.b


def _evaluate(
    spec: ModelSpec,
    events: EventStream,
    path: CovariatePath,
    t0_ns: int,
    t1_ns: int,
    carry_state: bool = True,
):
    """lambda at in-window events plus compensator increments over (t0, t1]."""
    window = events.restrict(t0_ns, t1_ns)
    p = path.restrict(t0_ns, t1_ns)
    if p.m == 0:
        raise ValueError("no covariate coverage on the window")
    t0 = t0_ns / NS_PER_SEC
    t1 = t1_ns / NS_PER_SEC
    ev = window.times - t0
    upd = p.times - t0
    gv = _g_values(spec, p)
    if spec.variant == "E":
        lam, comp, status = env_loglik_pass(ev, upd, gv, 0.0, t1 - t0, spec.floor)
    else:
        if carry_state:
            hist = events.times[events.times_ns <= t0_ns]
            D0 = KernelState.from_history(spec.params, hist - t0, 0.0).decay
        else:
            D0 = np.zeros(spec.params.L)
        lam, comp, status = loglik_pass(
            ev, upd, gv, spec.params.c, spec.params.d, spec.params.a,
            D0, 0.0, t1 - t0, spec.floor,
        )
    if status != 0:
        raise ModelIntegrityError(
            f"nonpositive intensity at an event under variant {spec.variant}"
        )
    return lam, comp, window


def log_likelihood(
    spec: ModelSpec,
    events: EventStream,
    path: CovariatePath,
    window: tuple[int, int] | None = None,
    carry_state: bool = True,
) -> float:
    """sum ln lambda(T_i) - int lambda over the window (t0, t1].

    Events before the window feed the kernel state but not the event sum.
    For the linear variants the intensity is floored everywhere.
    """
    t0_ns, t1_ns = window if window is not None else (events.t0_ns, events.t1_ns)
    lam, comp, _ = _evaluate(spec, events, path, t0_ns, t1_ns, carry_state)
    return float(np.sum(np.log(lam)) - np.sum(comp))


@dataclass(frozen=True)
class ComparisonResult:
    model1: str
    model2: str
    L1: float
    L2: float
    sigma2: float
    statistic: float
    n: int
    T: float
    quantile: float
    degenerate: bool = False

    @property
    def reject_model2(self) -> bool:
        return (not self.degenerate) and self.statistic >= self.quantile

    @property
    def reject_model1(self) -> bool:
        return (not self.degenerate) and self.statistic <= -self.quantile

    def to_row(self, side: str = "") -> dict:
        return {
            "model1": self.model1,
            "model2": self.model2,
            "side": side,
            "statistic": self.statistic,
            "L1": self.L1,
            "L2": self.L2,
            "sigma2": self.sigma2,
            "n": self.n,
            "T": self.T,
        }


def compare(
    spec1: ModelSpec,
    spec2: ModelSpec,
    events: EventStream,
    path: CovariatePath,
    window: tuple[int, int] | None = None,
    quantile: float = 1.64,
    carry_state: bool = True,
) -> ComparisonResult:
    """Studentized out-of-sample log-likelihood ratio of two fitted models.

    The variance estimate is the event average of the squared log intensity
    ratio; model 2 is rejected in favor of model 1 when the statistic exceeds
    the normal quantile.  Identical intensities at every event give an
    explicit degenerate result.
    """
    t0_ns, t1_ns = window if window is not None else (events.t0_ns, events.t1_ns)
    lam1, comp1, win = _evaluate(spec1, events, path, t0_ns, t1_ns, carry_state)
    lam2, comp2, _ = _evaluate(spec2, events, path, t0_ns, t1_ns, carry_state)
    T = (t1_ns - t0_ns) / NS_PER_SEC
    L1 = float(np.sum(np.log(lam1)) - np.sum(comp1))
    L2 = float(np.sum(np.log(lam2)) - np.sum(comp2))
    log_ratio = np.log(lam1) - np.log(lam2)
    sigma2 = float(np.sum(log_ratio**2) / T)
    if sigma2 == 0.0:
        return ComparisonResult(
            spec1.name, spec2.name, L1, L2, 0.0, float("nan"), win.n, T, quantile, degenerate=True
        )
    statistic = (L1 - L2) / np.sqrt(T * sigma2)
    return ComparisonResult(spec1.name, spec2.name, L1, L2, sigma2, float(statistic), win.n, T, quantile)


def time_rescaling_residuals(
    spec: ModelSpec,
    events: EventStream,
    path: CovariatePath,
    window: tuple[int, int] | None = None,
    carry_state: bool = True,
) -> tuple[np.ndarray, float, float]:
    """Compensator increments between events; unit exponentials under truth.

    Returns (residuals, KS statistic, KS p-value against Exp(1)).  The first
    residual integrates from the window start to the first event.
    """
    t0_ns, t1_ns = window if window is not None else (events.t0_ns, events.t1_ns)
    _, comp, win = _evaluate(spec, events, path, t0_ns, t1_ns, carry_state)
    residuals = comp[: win.n]  # drop the censored tail past the last event
    if residuals.size == 0:
        return residuals, float("nan"), float("nan")
    ks = stats.kstest(residuals, "expon")
    return residuals, float(ks.statistic), float(ks.pvalue)
