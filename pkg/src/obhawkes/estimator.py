"""Alternating quadratic-loss estimation of the intensity h(t) * X(t)'b.

One pass over the update timeline accumulates the K-vector and K x K matrix
sufficient statistics for the environment coefficients; the kernel block is a
bounded derivative-free minimization of the quadratic loss using the exact
closed-form integrals.  The two blocks alternate until the combined intensity
stops moving.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import Bounds, minimize

from ._recursion import decay_sums, quad_loss_terms
from .kernel import KernelParams, ParameterBounds, branching_ratio
from .streams import NS_PER_SEC, CovariatePath, EventStream


class EstimatorError(RuntimeError):
    """Raised on numerical failure; carries the best iterate found so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class EnvCoefficients:
    """Nonnegative environment coefficients with their feasible set."""

    b: np.ndarray
    budget: float | None
    box: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.b))

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.b)))


@dataclass
class FitAccumulators:
    """Streaming sufficient statistics; additive over disjoint time ranges."""

    v: np.ndarray          # K-vector, sum_l X(T_l) / h(T_l)
    M: np.ndarray          # K x K, sum_j (t_j - t_{j-1}) X_j X_j'
    T: float               # total observation time, seconds
    m: int                 # update count
    n: int                 # event count
    x_sum: np.ndarray      # running sum of X rows

    @property
    def x_mean(self) -> np.ndarray:
        return self.x_sum / max(self.m, 1)

    def merge(self, other: "FitAccumulators") -> "FitAccumulators":
        return FitAccumulators(
            v=self.v + other.v,
            M=self.M + other.M,
            T=self.T + other.T,
            m=self.m + other.m,
            n=self.n + other.n,
            x_sum=self.x_sum + other.x_sum,
        )


def _match_rows(path: CovariatePath, events: EventStream) -> np.ndarray:
    idx = np.searchsorted(path.times_ns, events.times_ns)
    if np.any(idx >= path.m) or np.any(path.times_ns[idx] != events.times_ns):
        raise ValueError("every jump time must have a covariate row at the same stamp")
    return idx


def accumulate(
    path: CovariatePath,
    events: EventStream,
    h_at_jumps: np.ndarray | None = None,
) -> FitAccumulators:
    """Single pass building v = Phi' Gamma and M = Phi' Sigma Phi.

    Row j of the path carries the covariate value in force on (t_{j-1}, t_j];
    jumps are matched to rows by exact timestamp equality.
    """
    if path.m and (np.any(path.times_ns <= events.t0_ns) or np.any(path.times_ns > events.t1_ns)):
        raise ValueError("path rows must lie in the event window (t0, t1]")
    times = np.concatenate([[events.t0_ns], path.times_ns])
    durations = np.diff(times) / NS_PER_SEC
    X = path.values
    M = (X * durations[:, None]).T @ X
    v = np.zeros(path.dim)
    if events.n:
        if h_at_jumps is None:
            h_at_jumps = np.ones(events.n)
        h_at_jumps = np.asarray(h_at_jumps, dtype=float)
        if np.any(h_at_jumps <= 0):
            raise EstimatorError("nonpositive baseline at a jump time")
        idx = _match_rows(path, events)
        v = (X[idx] / h_at_jumps[:, None]).sum(axis=0)
    return FitAccumulators(
        v=v, M=M, T=float(np.sum(durations)), m=path.m, n=events.n, x_sum=X.sum(axis=0)
    )


# ---------------------------------------------------------------------------
# constrained quadratic program for b


def project_box_budget(y, lb, ub, budget):
    """Euclidean projection onto {lb <= b <= ub, sum(b) <= budget}."""
    b = np.clip(y, lb, ub)
    if budget is None or b.sum() <= budget:
        return b
    # find tau > 0 with sum(clip(y - tau, lb, ub)) = budget; monotone in tau
    lo, hi = 0.0, float(np.max(y - lb))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = np.clip(y - mid, lb, ub).sum()
        if s > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    b = np.clip(y - hi, lb, ub)
    return b


def solve_quadratic(
    v: np.ndarray,
    M: np.ndarray,
    T: float,
    budget: float | None,
    lb=0.0,
    ub=np.inf,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> np.ndarray:
    """Minimize -(2/T) b'v + (1/T) b'Mb over {lb <= b <= ub, sum b <= budget}.

    Accelerated projected gradient with periodic restarts; stops on the
    natural-map KKT residual.  Deterministic given the inputs.
    """
    K = v.size
    lb = np.broadcast_to(np.asarray(lb, dtype=float), (K,))
    ub = np.broadcast_to(np.asarray(ub, dtype=float), (K,))
    if np.any(ub < lb):
        raise ValueError("infeasible box")
    eigs = np.linalg.eigvalsh((M + M.T) / 2.0)
    if eigs[0] < -1e-8 * max(eigs[-1], 1.0):
        raise EstimatorError(f"sufficient-statistics matrix not PSD (min eig {eigs[0]:.3e})")
    lip = 2.0 * max(eigs[-1], 1e-30) / T
    step = 1.0 / lip

    def grad(b):
        return (2.0 / T) * (M @ b - v)

    b = project_box_budget(np.zeros(K), lb, ub, budget)
    x = b.copy()
    tk = 1.0
    for it in range(max_iter):
        g = grad(x)
        b_new = project_box_budget(x - step * g, lb, ub, budget)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        x = b_new + ((tk - 1.0) / t_new) * (b_new - b)
        b, tk = b_new, t_new
        if it % 10 == 0 or it == max_iter - 1:
            resid = np.max(np.abs(b - project_box_budget(b - step * grad(b), lb, ub, budget)))
            if resid <= tol * step * max(1.0, float(np.max(np.abs(v))) / T):
                break
        if it % 200 == 199:
            tk = 1.0  # restart acceleration
    return b


def solve_b(
    acc: FitAccumulators,
    budget: float | None,
    box: float | None = None,
    nonneg: bool = True,
    tol: float = 1e-10,
) -> EnvCoefficients:
    """Environment-coefficient QP given accumulated sufficient statistics."""
    if budget is not None and budget <= 0:
        raise ValueError("budget must be positive")
    if box is not None and box < 0:
        raise ValueError("infeasible box bound")
    if nonneg:
        lb, ub = 0.0, np.inf if box is None else box
    else:
        if box is None:
            raise ValueError("signed coefficients need a box bound")
        lb, ub = -box, box
    b = solve_quadratic(acc.v, acc.M, acc.T, budget, lb=lb, ub=ub, tol=tol)
    return EnvCoefficients(b, budget, None if box is None else (float(lb), float(box)))


# ---------------------------------------------------------------------------
# kernel block


def _constant_g_grid(events: EventStream) -> tuple[np.ndarray, np.ndarray]:
    return np.array([events.t1 - events.t0]), np.ones(1)


def quad_loss(
    params: KernelParams,
    events: EventStream,
    upd_times_s: np.ndarray,
    g_vals: np.ndarray,
    reparam: bool = False,
) -> float:
    """Q_T = -(2/T) sum h(T_i) g(T_i) + (1/T) int (h g)^2."""
    T = events.duration
    c_eff = params.c * params.d[0] if reparam else params.c
    s, q = quad_loss_terms(
        events.times - events.t0,
        upd_times_s,
        np.asarray(g_vals, dtype=float),
        c_eff,
        params.d,
        params.a,
        np.zeros(params.L),
        0.0,
        T,
    )
    return (-2.0 * s + q) / T


def fit_kernel(
    events: EventStream,
    upd_times_ns=None,
    g_vals=None,
    bounds: ParameterBounds | None = None,
    L: int = 1,
    profile_scale: bool = False,
    reparam: bool = False,
    restarts: int = 3,
    maxiter: int = 4000,
) -> tuple[KernelParams, dict]:
    """Bounded minimization of the quadratic loss over psi = (c, d, a).

    The search runs in log-parameter space with Nelder-Mead inside the bound
    box, from a data-driven start plus deterministic box-quantile restarts.
    With ``profile_scale`` a constant environment factor is concentrated out
    analytically and folded back into (c, d) -- used at the first iteration
    of the alternating algorithm where g is an unknown constant.
    """
    if bounds is None:
        bounds = ParameterBounds.simulation()
    if events.n == 0:
        raise EstimatorError("cannot fit a kernel with no events")
    T = events.duration
    ev = events.times - events.t0
    if upd_times_ns is None:
        upd_s, gv = _constant_g_grid(events)
    else:
        upd_s = np.asarray(upd_times_ns, dtype=np.int64) / NS_PER_SEC - events.t0
        gv = np.asarray(g_vals, dtype=float)
        if np.any(gv < 0):
            raise EstimatorError("environment values must be nonnegative in the kernel block")
    D0 = np.zeros(L)

    lo = np.log(
        np.concatenate(
            [[max(bounds.c_range[0], 1e-12)], np.full(L, max(bounds.d_range[0], 1e-12)),
             np.full(L, bounds.a_range[0])]
        )
    )
    hi = np.log(
        np.concatenate(
            [[bounds.c_range[1]], np.full(L, bounds.d_range[1]), np.full(L, bounds.a_range[1])]
        )
    )

    def unpack(theta):
        p = np.exp(theta)
        return p[0], p[1 : 1 + L], p[1 + L :]

    def objective(theta):
        c, d, a = unpack(theta)
        c_eff = c * d[0] if reparam else c
        s, q = quad_loss_terms(ev, upd_s, gv, c_eff, d, a, D0, 0.0, T)
        if profile_scale:
            if q <= 0.0 or s <= 0.0:
                return 0.0
            return -(s * s) / (T * q)
        return (-2.0 * s + q) / T

    # data-driven start: rate-matched baseline, moderate excitation
    rate = events.n / T
    mean_dt = T / events.n
    start = np.log(
        np.clip(
            np.concatenate(
                [[0.5 * rate], np.full(L, 0.5 / mean_dt) * (0.5 ** np.arange(L)),
                 (1.0 / mean_dt) * (2.0 ** np.arange(L))]
            ),
            np.exp(lo),
            np.exp(hi),
        )
    )
    starts = [start]
    for frac in (0.5, 0.35, 0.65)[:restarts]:
        starts.append(lo + frac * (hi - lo))

    best = None
    for theta0 in starts:
        res = minimize(
            objective,
            theta0,
            method="Nelder-Mead",
            bounds=Bounds(lo, hi),
            options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": maxiter, "maxfev": maxiter},
        )
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.all(np.isfinite(best.x)):
        raise EstimatorError("kernel optimizer failed", best=best)
    c, d, a = unpack(best.x)
    info = {"objective": float(best.fun), "converged": bool(best.success), "nfev": int(best.nfev)}
    if not best.success:
        warnings.warn("kernel optimizer hit its iteration budget; using best point found")
    if profile_scale:
        c_eff = c * d[0] if reparam else c
        s, q = quad_loss_terms(ev, upd_s, gv, c_eff, d, a, D0, 0.0, T)
        gamma = s / q if q > 0 else 1.0
        info["gamma"] = float(gamma)
        c = float(np.clip(c * gamma, bounds.c_range[0], bounds.c_range[1]))
        d = np.clip(d * gamma, bounds.d_range[0], bounds.d_range[1])
    on_boundary = bool(
        np.any(np.isclose(best.x, lo, atol=1e-6)) or np.any(np.isclose(best.x, hi, atol=1e-6))
    )
    info["on_boundary"] = on_boundary
    return KernelParams(c, d, a), info


# ---------------------------------------------------------------------------
# budget selection


def heuristic_budget(first_fit: KernelParams, mult: float = 1.0) -> float:
    """B = mult * c / (1 - sum 1/a) from a plain constant-environment fit.

    The plain fit absorbs the environment scale into the kernel, so its
    baseline over the self-excitation slack gives the order of magnitude of
    the mean environment and hence of the coefficient budget.
    """
    s = float(np.sum(1.0 / first_fit.a))
    if s >= 1.0:
        raise EstimatorError("first-pass kernel too slow; heuristic budget unavailable")
    return mult * first_fit.c / (1.0 - s)


def box_budget(acc: FitAccumulators) -> tuple[float, float]:
    """Uniform-coefficient rule: beta = 1'v / (1'M1), B = K * beta."""
    denom = float(np.ones(acc.v.size) @ acc.M @ np.ones(acc.v.size))
    if denom <= 0:
        raise EstimatorError("degenerate Gram matrix in box-budget rule")
    beta = float(np.sum(acc.v)) / denom
    return beta, beta * acc.v.size


def ic_scan(grid, fit_fn) -> tuple[float, list[dict]]:
    """Scan budgets minimizing -loglik + (number of active coefficients)."""
    rows = []
    for B in grid:
        loglik, n_active = fit_fn(B)
        rows.append({"B": float(B), "loglik": float(loglik), "n_active": int(n_active),
                     "criterion": float(-loglik + n_active)})
    best = min(rows, key=lambda r: r["criterion"])
    return best["B"], rows


def choose_B(
    acc: FitAccumulators,
    first_fit: KernelParams,
    mult: float = 1.0,
    grid=None,
    fit_fn=None,
) -> dict:
    """The three budget candidates: rate heuristic, box rule, IC scan."""
    out: dict = {}
    try:
        out["heuristic"] = heuristic_budget(first_fit, mult)
    except EstimatorError:
        out["heuristic"] = None
    beta, B = box_budget(acc)
    out["box"] = {"beta": beta, "B": B}
    if grid is not None and fit_fn is not None:
        best, rows = ic_scan(grid, fit_fn)
        out["ic"] = {"B": best, "scan": rows}
    return out


# ---------------------------------------------------------------------------
# the alternating algorithm


@dataclass
class FitConfig:
    L: int = 1
    bounds: ParameterBounds = field(default_factory=ParameterBounds.simulation)
    budget: float | None = None          # explicit B; None -> use policy
    budget_policy: str = "fixed"         # fixed | heuristic | box
    mult: float = 1.0                    # multiplier for the heuristic policy
    box_mult: float | None = None        # per-coordinate cap = box_mult * beta
    nonneg: bool = True
    max_iterations: int = 10
    tol: float = 1e-8
    kernel_restarts: int = 3


@dataclass
class IterationRecord:
    params: KernelParams
    b: np.ndarray
    objective: float


@dataclass
class FitResult:
    params: KernelParams                 # kernel block estimate (baseline c*d_1)
    env: EnvCoefficients
    g_mean: float
    iterations: int
    objective_trace: list[float]
    history: list[IterationRecord]
    converged: bool
    warnings: list[str] = field(default_factory=list)

    @property
    def eval_params(self) -> KernelParams:
        """Kernel normalized so the fitted intensity is h * X'b directly."""
        d1 = self.params.d[0]
        if d1 <= 0:
            return self.params
        return KernelParams(self.params.c, self.params.d / d1, self.params.a)

    def to_dict(self) -> dict:
        return {
            "kernel": {
                "c": self.params.c,
                "d": self.params.d.tolist(),
                "a": self.params.a.tolist(),
            },
            "coefficients": [
                [int(i), float(x)] for i, x in enumerate(self.env.b) if x != 0.0
            ],
            "dim": int(self.env.b.size),
            "budget": self.env.budget,
            "box": self.env.box,
            "g_mean": self.g_mean,
            "iterations": self.iterations,
            "objective_trace": self.objective_trace,
            "converged": self.converged,
            "warnings": self.warnings,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FitResult":
        b = np.zeros(data["dim"])
        for i, x in data["coefficients"]:
            b[i] = x
        box = data.get("box")
        return cls(
            params=KernelParams(
                data["kernel"]["c"], np.array(data["kernel"]["d"]), np.array(data["kernel"]["a"])
            ),
            env=EnvCoefficients(b, data.get("budget"), None if box is None else tuple(box)),
            g_mean=data["g_mean"],
            iterations=data["iterations"],
            objective_trace=list(data["objective_trace"]),
            history=[],
            converged=data["converged"],
            warnings=list(data.get("warnings", [])),
        )


def _h_norm_at_jumps(params: KernelParams, events: EventStream) -> np.ndarray:
    """Baseline at jump times under the d_1-normalized kernel."""
    S = decay_sums(events.times - events.t0, params.a)
    d1 = params.d[0]
    d_eff = params.d / d1 if d1 > 0 else params.d
    return params.c + S @ d_eff


def alternate_fit(path: CovariatePath, events: EventStream, config: FitConfig) -> FitResult:
    """Alternate kernel and environment blocks until the intensity settles."""
    if not path.lagged:
        warnings.warn("covariate path is not flagged as lagged; forward-looking bias possible")
    path = path.restrict(events.t0_ns, events.t1_ns)
    if path.m == 0:
        raise ValueError("no covariate rows inside the window")
    upd_s = path.times - events.t0
    X = path.values
    base = accumulate(path, events, h_at_jumps=None)
    warns: list[str] = []

    params, kinfo = fit_kernel(
        events,
        bounds=config.bounds,
        L=config.L,
        profile_scale=True,
        reparam=True,
        restarts=config.kernel_restarts,
    )

    budget = config.budget
    box = None
    if config.budget_policy == "heuristic":
        # the scale heuristic needs the identified constant-environment fit
        plain, _ = fit_kernel(
            events,
            bounds=config.bounds,
            L=config.L,
            profile_scale=False,
            reparam=False,
            restarts=config.kernel_restarts,
        )
        budget = heuristic_budget(plain, config.mult)
    elif config.budget_policy == "box":
        acc1 = replace_v(base, _h_norm_at_jumps(params, events), path, events)
        beta, B = box_budget(acc1)
        cap_mult = config.box_mult if config.box_mult is not None else 1.0
        box = cap_mult * abs(beta)
        budget = box * X.shape[1]
    elif config.budget_policy != "fixed":
        raise ValueError(f"unknown budget policy {config.budget_policy!r}")
    if budget is None and config.nonneg:
        raise ValueError("fixed budget policy requires an explicit budget")
    if box is None:
        # B acts as a per-coordinate cap, b in [0, B]^K; the cap is loose at
        # the optimum whenever B exceeds the largest true coefficient, which
        # is what makes the fit insensitive to the exact budget choice
        box = budget

    trace: list[float] = []
    history: list[IterationRecord] = []
    converged = False
    b = None
    g_scaled = None
    for it in range(1, config.max_iterations + 1):
        if it > 1:
            params, kinfo = fit_kernel(
                events,
                path.times_ns,
                g_scaled,
                bounds=config.bounds,
                L=config.L,
                reparam=True,
                restarts=config.kernel_restarts,
            )
        acc = replace_v(base, _h_norm_at_jumps(params, events), path, events)
        env = solve_b(acc, None, box=box, nonneg=config.nonneg)
        b = env.b
        g_vals = X @ b
        g_mean = float(np.mean(g_vals))
        if g_mean <= 0 and config.nonneg:
            raise EstimatorError("environment collapsed to zero", best=(params, b))
        d1 = params.d[0]
        d_eff = params.d / d1 if d1 > 0 else params.d
        q = quad_loss(KernelParams(params.c, d_eff, params.a), events, upd_s, g_vals)
        trace.append(q)
        history.append(IterationRecord(params, b.copy(), q))
        if len(trace) >= 2 and abs(trace[-2] - trace[-1]) <= config.tol * max(1.0, abs(trace[-1])):
            converged = True
            break
        g_scaled = g_vals / abs(g_mean) if g_mean != 0 else g_vals

    g_mean = float(np.mean(X @ b))
    g_bound = float(np.max(X @ b)) / g_mean if g_mean > 0 else 0.0
    d1 = params.d[0]
    d_eff = params.d / d1 if d1 > 0 else params.d
    ratio = branching_ratio(KernelParams(params.c, d_eff, params.a), abs(g_bound))
    if not ratio.stable:
        warns.append(f"fitted process unstable: branching ratio {ratio.value:.3f} >= 1")
        warnings.warn(warns[-1])
    return FitResult(
        params=params,
        env=EnvCoefficients(b, budget, None if box is None else (0.0 if config.nonneg else -box, box)),
        g_mean=g_mean,
        iterations=len(trace),
        objective_trace=trace,
        history=history,
        converged=converged,
        warnings=warns,
    )


def replace_v(
    base: FitAccumulators,
    h_at_jumps: np.ndarray,
    path: CovariatePath,
    events: EventStream,
) -> FitAccumulators:
    """Re-weight the response vector for a new baseline; M is unchanged."""
    if np.any(h_at_jumps <= 0):
        raise EstimatorError("nonpositive baseline at a jump time")
    idx = _match_rows(path, events)
    v = (path.values[idx] / h_at_jumps[:, None]).sum(axis=0)
    return FitAccumulators(v=v, M=base.M, T=base.T, m=base.m, n=base.n, x_sum=base.x_sum)
