"""Alternating proximal Newton solver with reweighting and rank pruning.

One outer iteration does:

1. abundance block: ridge-regularized Newton target, soft-threshold,
   project onto the nonnegative orthant,
2. backtracked extrapolation toward that target until the total cost
   stops increasing,
3. endmember block: same Newton-target construction without the
   soft-threshold,
4. refresh of the penalty diagonal from the accepted iterates.

Columns of (phi, w) whose joint energy collapses below a relative
tolerance are reported as pruned; the survivor count is the estimated
number of endmembers.  Pruning is a report-only view while iterating and
a physical compaction of the returned matrices at termination.
"""

import time
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .model import (
    Objective,
    _as_diag,
    as_matrix,
    check_nonneg,
    joint_column_norms,
)

__all__ = [
    "SolverConfig",
    "SolverState",
    "SolverReport",
    "soft_threshold",
    "project_nonneg",
    "update_abundances",
    "update_endmembers",
    "update_penalty_diag",
    "extrapolate",
    "line_search",
    "prune_and_report_rank",
    "default_eta",
    "DEFAULT_DELTA",
    "DEFAULT_LAMBDA1",
    "with_defaults",
    "solve",
]

# Minimum smoothing constant when the data-driven default degenerates
# (all-zero input).
_ETA_FLOOR = 1e-12

# Default penalty weights, calibrated on reflectance-scale observations
# (entries roughly in [0, 1]).  Data-dependent statistics (max or mean of
# |Phi0^T Y|) were tried and rejected: across random draws of the same
# protocol they vary several-fold while the workable penalty window does
# not move with them, so a proportional default leaves the window on
# some draws.  For differently scaled data, set delta and lambda1
# explicitly.
DEFAULT_DELTA = 12.0
DEFAULT_LAMBDA1 = 0.012

# Relative slack in the line-search accept rule, to avoid stalling on
# floating-point plateaus.
_ACCEPT_SLACK = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters for :func:`solve`.

    ``delta``, ``lambda1`` and ``eta`` may be left as ``None`` to request
    the data-driven defaults (see :func:`with_defaults`); the resolved
    values are echoed in the returned report.
    """

    r: int
    delta: float | None = None
    lambda1: float | None = None
    eta: float | None = None
    max_iter: int = 500
    tol_rel_cost: float = 1e-6
    prune_tol: float = 1e-4
    beta_init: float = 1.0
    shrink: float = 0.5
    max_backtracks: int = 20
    seed: int = 0

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ValueError("r must be a positive integer, got %r" % (self.r,))
        if self.delta is not None and self.delta < 0.0:
            raise ValueError("delta must be >= 0, got %g" % self.delta)
        if self.lambda1 is not None and self.lambda1 < 0.0:
            raise ValueError("lambda1 must be >= 0, got %g" % self.lambda1)
        if self.eta is not None and self.eta <= 0.0:
            raise ValueError("eta must be > 0, got %g" % self.eta)
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0, got %r" % (self.max_iter,))
        if self.tol_rel_cost < 0.0:
            raise ValueError("tol_rel_cost must be >= 0, got %g" % self.tol_rel_cost)
        if self.prune_tol < 0.0:
            raise ValueError("prune_tol must be >= 0, got %g" % self.prune_tol)
        if not 0.0 < self.beta_init <= 1.0:
            raise ValueError("beta_init must be in (0, 1], got %g" % self.beta_init)
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must be in (0, 1), got %g" % self.shrink)
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be >= 1, got %r"
                             % (self.max_backtracks,))

    @property
    def is_resolved(self):
        return None not in (self.delta, self.lambda1, self.eta)


@dataclass(frozen=True)
class SolverState:
    """Per-iteration snapshot handed to the ``solve`` callback.

    ``phi_hat`` / ``w_hat`` are the accepted (extrapolated) iterates,
    ``d_hat`` the penalty diagonal consistent with them, ``beta_w`` /
    ``beta_phi`` the step weights accepted by the line searches (0.0
    means the block did not move), ``k`` the 1-based iteration counter
    and ``last_cost`` the total cost at (phi_hat, w_hat).
    """

    phi_hat: np.ndarray
    w_hat: np.ndarray
    d_hat: np.ndarray
    beta_w: float
    beta_phi: float
    k: int
    last_cost: float


@dataclass
class SolverReport:
    """Outcome of a solve: resolved config plus per-iteration traces."""

    config: SolverConfig
    iterations: int
    initial_cost: float
    final_cost: float
    cost_trace: np.ndarray
    effective_rank_trace: np.ndarray
    beta_w_trace: np.ndarray
    beta_phi_trace: np.ndarray
    final_effective_rank: int
    surviving_columns: np.ndarray
    converged: bool
    rank_degenerate: bool
    wall_time: float


class SolverDiverged(ArithmeticError):
    """Raised when a non-finite cost is encountered; carries the partial report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def soft_threshold(x, lam):
    """Elementwise sign(x) * max(|x| - lam, 0), the l1 proximal operator."""
    lam = float(lam)
    if lam < 0.0:
        raise ValueError("soft-threshold level must be >= 0, got %g" % lam)
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def project_nonneg(x):
    """Elementwise projection onto the nonnegative orthant."""
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def update_penalty_diag(phi, w, delta, eta):
    """Reweighting diagonal d_i = delta / sqrt(||phi_i||^2 + ||w_i||^2 + eta^2).

    ``eta > 0`` keeps every entry finite and strictly positive (at most
    delta/eta, attained by a jointly zero column pair).
    """
    delta = float(delta)
    eta = float(eta)
    if eta <= 0.0:
        raise ValueError("eta must be > 0, got %g" % eta)
    if delta < 0.0:
        raise ValueError("delta must be >= 0, got %g" % delta)
    phi = as_matrix(phi, "phi")
    w = as_matrix(w, "w")
    if phi.shape[1] != w.shape[1]:
        raise ValueError("phi and w disagree on the number of columns")
    nsq = (phi * phi).sum(axis=0) + (w * w).sum(axis=0)
    return delta / np.sqrt(nsq + eta * eta)


def _spd_solve(a, b, context):
    """Solve the SPD system a @ x = b by Cholesky; report the bad pivot on failure."""
    try:
        cf = scipy.linalg.cho_factor(a, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        pivot = float(np.linalg.eigvalsh(a).min())
        raise np.linalg.LinAlgError(
            "%s: normal matrix is not positive definite (smallest pivot %.6e)"
            % (context, pivot)
        ) from exc
    return scipy.linalg.cho_solve(cf, b, check_finite=False)


def update_abundances(y, phi_hat, d_hat, lambda1):
    """One inexact proximal Newton step for the abundance block.

    Solves (Phi^T Phi + D) X = Phi^T Y for the r-by-K Newton target,
    transposes to K-by-r, soft-thresholds at ``lambda1`` and projects
    onto the nonnegative orthant.  The r-by-r system is solved by a
    Cholesky factorization, never an explicit inverse.
    """
    y = as_matrix(y, "y")
    phi = as_matrix(phi_hat, "phi_hat")
    if phi.shape[0] != y.shape[0]:
        raise ValueError("phi_hat has %d rows, expected L=%d"
                         % (phi.shape[0], y.shape[0]))
    d = _as_diag(d_hat, phi.shape[1])
    a = phi.T @ phi
    a[np.diag_indices_from(a)] += d
    x = _spd_solve(a, phi.T @ y, "abundance update")
    return project_nonneg(soft_threshold(x.T, lambda1))


def update_endmembers(y, w_hat, d_hat):
    """One Newton step for the endmember block, projected onto the orthant.

    Solves (W^T W + D) X = W^T Y^T and transposes back to L-by-r.
    """
    y = as_matrix(y, "y")
    w = as_matrix(w_hat, "w_hat")
    if w.shape[0] != y.shape[1]:
        raise ValueError("w_hat has %d rows, expected K=%d"
                         % (w.shape[0], y.shape[1]))
    d = _as_diag(d_hat, w.shape[1])
    a = w.T @ w
    a[np.diag_indices_from(a)] += d
    x = _spd_solve(a, (y @ w).T, "endmember update")
    return project_nonneg(x.T)


def extrapolate(prev, candidate, beta):
    """Convex blend prev + beta * (candidate - prev) for beta in (0, 1]."""
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must be in (0, 1], got %g" % beta)
    if beta == 1.0:
        return candidate
    return prev + beta * (candidate - prev)


def line_search(objective, phi_hat, w_hat, candidate, which, config,
                baseline_cost=None):
    """Backtrack over extrapolation weights until the cost stops increasing.

    Tries beta in {beta_init, beta_init*shrink, ...} (at most
    ``max_backtracks`` trials) and accepts the first (largest) one whose
    total cost does not exceed the baseline, up to a relative slack of
    1e-12.  If no trial is accepted the unchanged block is returned with
    ``beta = 0.0``.

    Parameters
    ----------
    objective : Objective
        Bound cost evaluator.
    phi_hat, w_hat : arrays
        Current iterates; the block not being searched is held fixed.
    candidate : array
        Proposed iterate for the searched block.
    which : {"w", "phi"}
        Which block ``candidate`` replaces.
    baseline_cost : float, optional
        Total cost at (phi_hat, w_hat); computed if omitted.

    Returns
    -------
    (accepted, beta_used, cost) : (array, float, float)
    """
    if which not in ("w", "phi"):
        raise ValueError("which must be 'w' or 'phi', got %r" % (which,))
    prev = w_hat if which == "w" else phi_hat
    if baseline_cost is None:
        baseline_cost = objective.total(phi_hat, w_hat)
    bound = baseline_cost + _ACCEPT_SLACK * abs(baseline_cost)
    beta = float(config.beta_init)
    for _ in range(config.max_backtracks):
        trial = extrapolate(prev, candidate, beta)
        if which == "w":
            cost = objective.total(phi_hat, trial)
        else:
            cost = objective.total(trial, w_hat)
        if cost <= bound:
            return trial, beta, cost
        beta *= config.shrink
    return prev, 0.0, baseline_cost


def prune_and_report_rank(phi, w, prune_tol):
    """Columns surviving the relative joint-energy threshold.

    Column i survives iff sqrt(||phi_i||^2 + ||w_i||^2) exceeds
    ``prune_tol`` times the largest such energy.  Returns the surviving
    indices (ascending) and their count; an all-zero factorization
    yields an empty survivor set (degenerate outcome, rank 0).
    """
    prune_tol = float(prune_tol)
    if prune_tol < 0.0:
        raise ValueError("prune_tol must be >= 0, got %g" % prune_tol)
    norms = joint_column_norms(np.asarray(phi, float), np.asarray(w, float))
    cutoff = prune_tol * (norms.max() if norms.size else 0.0)
    surviving = np.flatnonzero(norms > cutoff)
    return surviving, int(surviving.size)


def default_eta(y):
    """Smoothing floor: 1e-2 times the mean pixel (column) norm of ``y``."""
    scale = float(np.sqrt((y * y).sum(axis=0)).mean()) if y.size else 0.0
    return max(1e-2 * scale, _ETA_FLOOR)


def with_defaults(config, y):
    """Resolve ``None`` hyperparameters; the choices are echoed in reports."""
    if config.is_resolved:
        return config
    y = as_matrix(y, "y")
    updates = {}
    if config.eta is None:
        updates["eta"] = default_eta(y)
    if config.delta is None:
        updates["delta"] = DEFAULT_DELTA
    if config.lambda1 is None:
        updates["lambda1"] = DEFAULT_LAMBDA1
    return replace(config, **updates)


def solve(y, init_phi, init_w, config, callback=None):
    """Run the alternating solver until the cost change stalls or max_iter.

    Parameters
    ----------
    y : (L, K) array
        Nonnegative observations, bands by pixels.
    init_phi : (L, r) array
        Nonnegative initial endmembers, r = config.r.
    init_w : (K, r) array
        Nonnegative initial abundances.
    config : SolverConfig
        Hyperparameters; unresolved entries are filled from the data.
    callback : callable, optional
        Called with a :class:`SolverState` after every iteration.

    Returns
    -------
    (phi, w, report)
        ``phi`` (L, n_eff) and ``w`` (K, n_eff) are compacted to the
        surviving columns; ``report`` carries the resolved config and
        the per-iteration traces.  The cost trace is non-increasing.
    """
    t0 = time.perf_counter()
    y = as_matrix(y, "y")
    check_nonneg(y, "y")
    phi = as_matrix(init_phi, "init_phi").copy()
    w = as_matrix(init_w, "init_w").copy()
    check_nonneg(phi, "init_phi")
    check_nonneg(w, "init_w")
    l, k_pix = y.shape
    if phi.shape != (l, config.r):
        raise ValueError("init_phi has shape %s, expected %s"
                         % (phi.shape, (l, config.r)))
    if w.shape != (k_pix, config.r):
        raise ValueError("init_w has shape %s, expected %s"
                         % (w.shape, (k_pix, config.r)))

    config = with_defaults(config, y)
    objective = Objective(y, config.delta, config.lambda1, config.eta)

    d = update_penalty_diag(phi, w, config.delta, config.eta)
    cost_prev = objective.total(phi, w)
    initial_cost = cost_prev

    cost_trace = []
    rank_trace = []
    beta_w_trace = []
    beta_phi_trace = []
    converged = False

    def build_report():
        surviving, eff = prune_and_report_rank(phi, w, config.prune_tol)
        return surviving, SolverReport(
            config=config,
            iterations=len(cost_trace),
            initial_cost=initial_cost,
            final_cost=cost_trace[-1] if cost_trace else initial_cost,
            cost_trace=np.asarray(cost_trace, dtype=np.float64),
            effective_rank_trace=np.asarray(rank_trace, dtype=np.int64),
            beta_w_trace=np.asarray(beta_w_trace, dtype=np.float64),
            beta_phi_trace=np.asarray(beta_phi_trace, dtype=np.float64),
            final_effective_rank=eff,
            surviving_columns=surviving,
            converged=converged,
            rank_degenerate=(eff == 0),
            wall_time=time.perf_counter() - t0,
        )

    for k in range(1, config.max_iter + 1):
        w_cand = update_abundances(y, phi, d, config.lambda1)
        w, beta_w, cost_after_w = line_search(
            objective, phi, w, w_cand, "w", config, cost_prev)
        phi_cand = update_endmembers(y, w, d)
        phi, beta_phi, cost_k = line_search(
            objective, phi, w, phi_cand, "phi", config, cost_after_w)
        d = update_penalty_diag(phi, w, config.delta, config.eta)

        if not np.isfinite(cost_k):
            _, report = build_report()
            raise SolverDiverged(
                "non-finite cost %r at iteration %d" % (cost_k, k), report)

        _, eff = prune_and_report_rank(phi, w, config.prune_tol)
        cost_trace.append(cost_k)
        rank_trace.append(eff)
        beta_w_trace.append(beta_w)
        beta_phi_trace.append(beta_phi)

        if callback is not None:
            callback(SolverState(phi_hat=phi, w_hat=w, d_hat=d,
                                 beta_w=beta_w, beta_phi=beta_phi,
                                 k=k, last_cost=cost_k))

        if abs(cost_prev - cost_k) <= config.tol_rel_cost * max(abs(cost_prev), 1e-300):
            cost_prev = cost_k
            converged = True
            break
        cost_prev = cost_k

    surviving, report = build_report()
    return phi[:, surviving], w[:, surviving], report
