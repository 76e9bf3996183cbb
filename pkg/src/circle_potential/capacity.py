"""Classical and L2 capacities by convex minimization on the grid.

Two capacities of a grid set E, both with the normalized arc measure:

* classical_capacity: C_alpha(E) = 1 / inf { I_alpha(mu) : mu a
  probability measure on E }. The discrete problem minimizes the
  quadratic form w^T K w over the probability simplex on E's cells,
  with K the difference-indexed kernel table of ``energy.kernel_column``
  (cell-averaged diagonal). Solved by Frank-Wolfe or projected-gradient
  iterations followed by a KKT active-set polish (direct solve of
  K_AA x = 1 on the active cells), which certifies the stationarity
  residual down to the configured tolerance.

* l2_capacity: C_{alpha,2}(E) = inf { ||f||_{L2}^2 : f >= 0 and the
  convolution k_{1-alpha/2} * f >= 1 on E }. The discrete dual is a
  bound-constrained concave quadratic
      max_{lam >= 0}  sum(lam) - lam^T G lam / (4N),
  where G[i,k] is the circular autocorrelation of the kernel column at
  index difference i - k. Solved by projected gradient plus the same
  style of active-set polish; the primal density is recovered as
  f = (1/2) K^T lam and reported as the minimizer.

Both kernel matrices are pure lookups into difference-indexed tables,
so rotating E by a whole number of cells permutes the same matrix and
leaves the computed values unchanged up to roundoff.

Kernel exponent bookkeeping: for a divergence-test parameter beta, the
classical capacity uses kernel exponent 1 - beta while the L2 capacity
convolves with kernel exponent 1 - beta/2. ``kernel_exponents`` is the
single source for this mapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import energy as _energy
from .circle import GridSet
from .errors import ConvergenceError, PreconditionError
from .energy import kernel_column

_STEP_RULES = ("frank_wolfe", "projected_gradient")


class KernelExponents(NamedTuple):
    classical: float
    l2_convolution: float


def kernel_exponents(beta: float) -> KernelExponents:
    """Kernel exponents used by the two capacities at parameter beta."""
    if not 0.0 < beta <= 1.0:
        raise PreconditionError(f"beta must be in (0, 1], got {beta}")
    return KernelExponents(classical=1.0 - beta, l2_convolution=1.0 - beta / 2.0)


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules for the capacity solvers."""

    tolerance: float = 1e-8
    max_iterations: int = 50_000
    step_rule: str = "frank_wolfe"

    def __post_init__(self):
        if self.tolerance <= 0.0:
            raise PreconditionError("tolerance must be positive")
        if self.max_iterations < 1:
            raise PreconditionError("max_iterations must be >= 1")
        if self.step_rule not in _STEP_RULES:
            raise PreconditionError(
                f"step_rule must be one of {_STEP_RULES}, got {self.step_rule!r}"
            )


@dataclass(frozen=True)
class CapacityEstimate:
    """Capacity value with solver diagnostics.

    value = 1/energy for the classical method (energy_or_norm holds the
    minimal energy) and the squared norm itself for the l2 method.
    ``minimizer`` is the full-grid equilibrium weights (classical) or
    the optimal density f (l2).
    """

    value: float
    method: str
    alpha: float
    grid_n: int
    iterations: int
    kkt_residual: float
    energy_or_norm: float
    minimizer: np.ndarray | None = None
    notes: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "capacity": self.value,
            "method": self.method,
            "alpha": self.alpha,
            "grid_n": self.grid_n,
            "iterations": self.iterations,
            "kkt_residual": self.kkt_residual,
            "energy_or_norm": self.energy_or_norm,
            "notes": list(self.notes),
        }


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@lru_cache(maxsize=64)
def _autocorr_base(n: int, exponent: float) -> np.ndarray:
    kappa = _energy._kernel_column_base(n, exponent)
    spec = np.fft.rfft(kappa)
    out = np.fft.irfft(spec * np.conj(spec), n).real
    out.setflags(write=False)
    return out


def _autocorr_column(n: int, exponent: float) -> np.ndarray:
    """A[m] = sum_j kappa[j] kappa[(j - m) mod n], the Gram column of the
    convolution operator; scales exactly with the kernel fault hook."""
    base = _autocorr_base(n, exponent)
    fault = _energy._KERNEL_FAULT
    if fault != 0.0:
        return base * (1.0 + fault) ** 2
    return base


def _restricted(table: np.ndarray, idx: np.ndarray, n: int) -> np.ndarray:
    return table[(idx[:, None] - idx[None, :]) % n]


def _power_lambda_max(mat: np.ndarray, iters: int = 40) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration
    with a fixed deterministic start."""
    k = mat.shape[0]
    v = np.full(k, 1.0 / math.sqrt(k))
    lam = 0.0
    for _ in range(iters):
        w = mat @ v
        lam = float(v @ w)
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
    return max(lam, float(v @ (mat @ v)))


# ---------------------------------------------------------------------------
# classical capacity
# ---------------------------------------------------------------------------


def _classical_kkt_polish(K: np.ndarray, active: np.ndarray, tol: float, rounds: int = 200):
    """Active-set solve of the simplex KKT system.

    On the active cells the equilibrium potential is constant, so
    K_AA x = 1 and w = x / sum(x). Cells with nonpositive solution are
    dropped; off-active cells whose potential dips below the level are
    added; repeat until clean or the round budget is exhausted.
    Returns (weights, level, residual, solves) with weights over the
    local index range; None when a solve fails (singular system).
    """
    k = K.shape[0]
    act = np.array(sorted(set(int(i) for i in active)), dtype=int)
    if act.size == 0:
        act = np.arange(k)
    solves = 0
    for _ in range(rounds):
        kaa = K[np.ix_(act, act)]
        try:
            x = np.linalg.solve(kaa, np.ones(len(act)))
        except np.linalg.LinAlgError:
            return None
        solves += 1
        if np.any(x <= 0.0):
            keep = x > 0.0
            if not np.any(keep):
                return None
            act = act[keep]
            continue
        sigma = float(x.sum())
        w_act = x / sigma
        level = 1.0 / sigma
        potential = K[:, act] @ w_act
        thresh = tol * max(1.0, abs(level))
        off = np.setdiff1d(np.nonzero(potential < level - thresh)[0], act)
        if off.size == 0:
            w = np.zeros(k)
            w[act] = w_act
            on_res = float(np.max(np.abs(potential[act] - level)))
            off_mask = np.ones(k, dtype=bool)
            off_mask[act] = False
            off_res = float(np.max(np.clip(level - potential[off_mask], 0.0, None))) if off_mask.any() else 0.0
            residual = max(on_res, off_res) / max(1.0, abs(level))
            return w, level, residual, solves
        act = np.union1d(act, off)
    return None


def _frank_wolfe_steps(K: np.ndarray, w: np.ndarray, kw: np.ndarray, budget: int, gap_tol: float):
    """Run up to ``budget`` Frank-Wolfe steps with exact line search on the
    quadratic; returns the updated iterate and the number of steps taken."""
    e_val = float(w @ kw)
    steps = 0
    for _ in range(budget):
        v = int(np.argmin(kw))
        gap = 2.0 * (e_val - float(kw[v]))
        if gap <= gap_tol * max(1.0, abs(e_val)):
            break
        col = K[:, v]
        a = e_val - float(kw[v])
        b = e_val - 2.0 * float(kw[v]) + float(K[v, v])
        gamma = 1.0 if b <= 0.0 else min(1.0, max(0.0, a / b))
        if gamma == 0.0:
            break
        w *= 1.0 - gamma
        w[v] += gamma
        kw = (1.0 - gamma) * kw + gamma * col
        e_val = float(w @ kw)
        steps += 1
    return w, kw, steps


def _projected_gradient_steps(K: np.ndarray, w: np.ndarray, budget: int, step: float):
    steps = 0
    for _ in range(budget):
        g = 2.0 * (K @ w)
        w_new = project_simplex(w - step * g)
        delta = float(np.max(np.abs(w_new - w)))
        w = w_new
        steps += 1
        if delta <= 1e-15:
            break
    return w, steps


def classical_capacity(e: GridSet, alpha: float, cfg: SolverConfig | None = None) -> CapacityEstimate:
    """Classical capacity of a grid set by energy minimization.

    The empty set has capacity 0 by convention. A nonpositive minimal
    energy (possible only for the non-positive-definite logarithmic
    kernel on large sets) is reported as capacity 0 with a note.
    """
    if not 0.0 <= alpha < 1.0:
        raise PreconditionError(f"kernel exponent must be in [0, 1), got {alpha}")
    cfg = cfg or SolverConfig()
    n = e.grid.n_points
    if e.is_empty():
        return CapacityEstimate(
            value=0.0,
            method="classical",
            alpha=alpha,
            grid_n=n,
            iterations=0,
            kkt_residual=0.0,
            energy_or_norm=math.inf,
            minimizer=np.zeros(n),
            notes=("empty set",),
        )
    idx = e.indices
    k = len(idx)
    K = _restricted(kernel_column(n, alpha), idx, n)

    w = np.full(k, 1.0 / k)
    total_steps = 0
    pg_step = None
    budget = 200
    best = None
    while True:
        remaining = cfg.max_iterations - total_steps
        if remaining > 0:
            this = min(budget, remaining)
            if cfg.step_rule == "frank_wolfe":
                kw = K @ w
                w, kw, steps = _frank_wolfe_steps(K, w, kw, this, cfg.tolerance)
            else:
                if pg_step is None:
                    lam_max = _power_lambda_max(K)
                    pg_step = 1.0 / (2.0 * lam_max) if lam_max > 0 else 1.0
                w, steps = _projected_gradient_steps(K, w, this, pg_step)
            total_steps += steps
        support = np.nonzero(w > 1e-12 * float(w.max()))[0]
        polished = _classical_kkt_polish(K, support, cfg.tolerance)
        if polished is not None:
            w_loc, level, residual, solves = polished
            total_steps += solves
            result = _finish_classical(e, alpha, w_loc, level, residual, total_steps, idx, cfg)
            if residual <= cfg.tolerance:
                return result
            best = result
        if total_steps >= cfg.max_iterations:
            if best is None:
                energy_val = float(w @ (K @ w))
                best = _finish_classical(
                    e, alpha, w, energy_val, math.inf, total_steps, idx, cfg
                )
            raise ConvergenceError(
                f"classical capacity solver did not reach tolerance {cfg.tolerance}",
                best_estimate=best,
            )
        budget *= 4


def _finish_classical(e, alpha, w_loc, energy_val, residual, iterations, idx, cfg):
    n = e.grid.n_points
    minimizer = np.zeros(n)
    minimizer[idx] = w_loc
    notes: tuple[str, ...] = ()
    if energy_val > 0.0:
        value = 1.0 / energy_val
    else:
        value = 0.0
        notes = ("nonpositive minimal energy; capacity clamped to 0",)
    return CapacityEstimate(
        value=value,
        method="classical",
        alpha=alpha,
        grid_n=n,
        iterations=iterations,
        kkt_residual=residual,
        energy_or_norm=energy_val,
        minimizer=minimizer,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# l2 capacity
# ---------------------------------------------------------------------------


def _l2_kkt_polish(G: np.ndarray, n: int, active: np.ndarray, tol: float, rounds: int = 200):
    """Active-set solve for the nonnegative dual: G_AA lam_A = 2N on the
    active set, drop nonpositive multipliers, add violated constraints
    (dual gradient above tolerance), repeat."""
    k = G.shape[0]
    act = np.array(sorted(set(int(i) for i in active)), dtype=int)
    if act.size == 0:
        act = np.arange(k)
    solves = 0
    for _ in range(rounds):
        gaa = G[np.ix_(act, act)]
        try:
            x = np.linalg.solve(gaa, np.full(len(act), 2.0 * n))
        except np.linalg.LinAlgError:
            return None
        solves += 1
        if np.any(x <= 0.0):
            keep = x > 0.0
            if not np.any(keep):
                return None
            act = act[keep]
            continue
        lam = np.zeros(k)
        lam[act] = x
        grad = 1.0 - (G @ lam) / (2.0 * n)
        off_mask = np.ones(k, dtype=bool)
        off_mask[act] = False
        viol = np.nonzero(off_mask & (grad > tol))[0]
        if viol.size == 0:
            on_res = float(np.max(np.abs(grad[act])))
            off_res = float(np.max(np.clip(grad[off_mask], 0.0, None))) if off_mask.any() else 0.0
            return lam, max(on_res, off_res), solves
        act = np.union1d(act, viol)
    return None


def l2_capacity(e: GridSet, alpha: float, cfg: SolverConfig | None = None) -> CapacityEstimate:
    """L2 capacity: minimal squared L2 norm of a nonnegative density whose
    Riesz potential (kernel exponent 1 - alpha/2) dominates 1 on E.

    Solved through the nonnegative dual described in the module
    docstring; the reported minimizer is the optimal density on the
    full grid, and at convergence its potential exceeds 1 - tolerance
    on every cell of E.
    """
    if not 0.0 < alpha <= 1.0:
        raise PreconditionError(f"alpha must be in (0, 1], got {alpha}")
    cfg = cfg or SolverConfig()
    n = e.grid.n_points
    if e.is_empty():
        return CapacityEstimate(
            value=0.0,
            method="l2",
            alpha=alpha,
            grid_n=n,
            iterations=0,
            kkt_residual=0.0,
            energy_or_norm=0.0,
            minimizer=np.zeros(n),
            notes=("empty set",),
        )
    exponent = kernel_exponents(alpha).l2_convolution
    kappa = kernel_column(n, exponent)
    G = _restricted(_autocorr_column(n, exponent), e.indices, n)
    k = len(e.indices)

    spec = np.abs(np.fft.rfft(np.asarray(kappa)))
    lam_max = float(np.max(spec) ** 2)
    step = (2.0 * n) / lam_max

    row_scale = float(np.mean(G.sum(axis=1)))
    lam = np.full(k, 2.0 * n / row_scale if row_scale > 0 else 1.0)
    total_steps = 0
    budget = 200
    best = None
    while True:
        remaining = cfg.max_iterations - total_steps
        if remaining > 0:
            this = min(budget, remaining)
            for _ in range(this):
                grad = 1.0 - (G @ lam) / (2.0 * n)
                lam_new = np.maximum(0.0, lam + step * grad)
                moved = float(np.max(np.abs(lam_new - lam)))
                lam = lam_new
                total_steps += 1
                if moved <= 1e-15:
                    break
        active = np.nonzero(lam > 0.0)[0]
        polished = _l2_kkt_polish(G, n, active, cfg.tolerance)
        if polished is not None:
            lam_fin, residual, solves = polished
            total_steps += solves
            result = _finish_l2(e, alpha, exponent, kappa, lam_fin, residual, total_steps)
            if residual <= cfg.tolerance:
                return result
            best = result
        if total_steps >= cfg.max_iterations:
            if best is None:
                grad = 1.0 - (G @ lam) / (2.0 * n)
                residual = float(np.max(np.abs(grad)))
                best = _finish_l2(e, alpha, exponent, kappa, lam, residual, total_steps)
            raise ConvergenceError(
                f"l2 capacity solver did not reach tolerance {cfg.tolerance}",
                best_estimate=best,
            )
        budget *= 4


def _finish_l2(e, alpha, exponent, kappa, lam, residual, iterations):
    n = e.grid.n_points
    idx = e.indices
    G_row = _autocorr_column(n, exponent)
    value = float(lam.sum() - lam @ (_restricted(G_row, idx, n) @ lam) / (4.0 * n))
    f = np.zeros(n)
    table = np.asarray(kappa)
    for j, i in enumerate(idx):
        f += table[(int(i) - np.arange(n)) % n] * lam[j]
    f *= 0.5
    return CapacityEstimate(
        value=value,
        method="l2",
        alpha=alpha,
        grid_n=n,
        iterations=iterations,
        kkt_residual=residual,
        energy_or_norm=value,
        minimizer=f,
        notes=(),
    )


def potential_on_set(estimate: CapacityEstimate, e: GridSet) -> np.ndarray:
    """Convolution potential of the l2 minimizer on the cells of E
    (feasibility diagnostic: should be >= 1 - tolerance everywhere)."""
    if estimate.method != "l2":
        raise PreconditionError("potential check applies to l2 estimates")
    n = e.grid.n_points
    exponent = kernel_exponents(estimate.alpha).l2_convolution
    kappa = np.asarray(kernel_column(n, exponent))
    f = estimate.minimizer
    out = np.empty(len(e.indices))
    for row, i in enumerate(e.indices):
        out[row] = float(kappa[(int(i) - np.arange(n)) % n] @ f) / n
    return out


@dataclass(frozen=True)
class ComparabilityReport:
    c_classical: float
    c_l2: float
    ratio: float
    beta: float
    grid_n: int

    def to_json(self) -> dict:
        return {
            "c_classical": self.c_classical,
            "c_l2": self.c_l2,
            "ratio": self.ratio,
            "beta": self.beta,
            "grid_n": self.grid_n,
        }


def comparability_report(e: GridSet, beta: float, cfg: SolverConfig | None = None) -> ComparabilityReport:
    """Classical capacity at kernel exponent 1 - beta next to the L2
    capacity at parameter beta, plus their ratio."""
    exps = kernel_exponents(beta)
    c_cl = classical_capacity(e, exps.classical, cfg).value
    c_l2 = l2_capacity(e, beta, cfg).value
    ratio = math.inf if c_l2 == 0.0 else c_cl / c_l2
    return ComparabilityReport(
        c_classical=c_cl,
        c_l2=c_l2,
        ratio=ratio,
        beta=beta,
        grid_n=e.grid.n_points,
    )
