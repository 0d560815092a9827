"""Data conventions and cost arithmetic for sparse low-rank NMF unmixing.

Every module in this package uses the same matrix orientations:

* ``y``   observations, shape (L, K): spectral bands by pixels,
* ``phi`` endmember candidates, shape (L, r): one spectrum per column,
* ``w``   abundances, shape (K, r): one pixel per row,
* ``d``   penalty diagonal, shape (r,): positive reweighting entries.

The objective being minimized is::

    0.5 * ||Y - Phi @ W.T||_F**2
    + delta * sum_i sqrt(||phi_i||**2 + ||w_i||**2 + eta**2)
    + lambda1 * sum(|W|)

The middle term is a smoothed group penalty on the stacked columns of
``Phi`` and ``W``; driving joint columns to zero is what turns an
overestimated factorization rank into an estimate of the true number of
endmembers.  All arithmetic is float64.
"""

import numpy as np

__all__ = [
    "as_matrix",
    "check_nonneg",
    "check_dims",
    "joint_column_norms",
    "cost_smooth",
    "cost_total",
    "grad_w",
    "grad_phi",
    "Objective",
]


def as_matrix(a, name="matrix", require_finite=True):
    """Coerce to a float64 2-D array, rejecting non-finite entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("%s must be a 2-D array, got shape %s" % (name, (m.shape,)))
    if require_finite and m.size and not np.isfinite(m).all():
        raise ValueError("%s contains non-finite entries" % name)
    return m


def check_nonneg(m, name="matrix"):
    if m.size and m.min() < 0.0:
        raise ValueError("%s has negative entries (min %g)" % (name, m.min()))


def check_dims(y, phi, w):
    """Validate the (L, K) / (L, r) / (K, r) shape contract."""
    l, k = y.shape
    if phi.shape[0] != l:
        raise ValueError("phi has %d rows, expected L=%d" % (phi.shape[0], l))
    if w.shape[0] != k:
        raise ValueError("w has %d rows, expected K=%d" % (w.shape[0], k))
    if phi.shape[1] != w.shape[1]:
        raise ValueError(
            "phi and w disagree on the number of columns: %d vs %d"
            % (phi.shape[1], w.shape[1])
        )


def _as_diag(d, r):
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 1 or d.shape[0] != r:
        raise ValueError("penalty diagonal must be a length-%d vector, got shape %s"
                         % (r, (d.shape,)))
    if d.size and not np.isfinite(d).all():
        raise ValueError("penalty diagonal contains non-finite entries")
    return d


def joint_column_norms(phi, w):
    """Per-column sqrt(||phi_i||^2 + ||w_i||^2), the joint column energies."""
    return np.sqrt((phi * phi).sum(axis=0) + (w * w).sum(axis=0))


def _cost_smooth(y, phi, w, delta, eta):
    resid = y - phi @ w.T
    fit = 0.5 * float(np.vdot(resid, resid))
    energy = (phi * phi).sum(axis=0) + (w * w).sum(axis=0)
    return fit + delta * float(np.sum(np.sqrt(energy + eta * eta)))


def cost_smooth(y, phi, w, delta, eta):
    """Smooth part of the objective: half squared fit plus smoothed group penalty.

    Parameters
    ----------
    y : (L, K) array
        Observed spectra, bands by pixels.
    phi : (L, r) array
        Candidate endmembers.
    w : (K, r) array
        Abundances.
    delta : float
        Group-penalty weight, >= 0.
    eta : float
        Smoothing constant, > 0 (keeps the penalty differentiable and
        bounds the reweighting diagonal).

    Returns
    -------
    float
        0.5*||Y - Phi W^T||_F^2 + delta * sum_i sqrt(||phi_i||^2 + ||w_i||^2 + eta^2).
    """
    y = as_matrix(y, "y")
    phi = as_matrix(phi, "phi")
    w = as_matrix(w, "w")
    check_dims(y, phi, w)
    return _cost_smooth(y, phi, w, float(delta), float(eta))


def cost_total(y, phi, w, delta, lambda1, eta):
    """Full objective: smooth part plus the elementwise l1 penalty on ``w``."""
    return cost_smooth(y, phi, w, delta, eta) + float(lambda1) * float(np.abs(w).sum())


def grad_w(y, phi, w, d):
    """Gradient of the smooth cost with respect to ``w``.

    ``d`` must be the penalty diagonal computed from the same (phi, w)
    pair; then the result W(Phi^T Phi) - Y^T Phi + W D is the exact
    gradient of the smoothed objective.
    """
    y = as_matrix(y, "y")
    phi = as_matrix(phi, "phi")
    w = as_matrix(w, "w")
    check_dims(y, phi, w)
    d = _as_diag(d, phi.shape[1])
    return w @ (phi.T @ phi) - y.T @ phi + w * d


def grad_phi(y, phi, w, d):
    """Gradient of the smooth cost with respect to ``phi`` (mirror of grad_w)."""
    y = as_matrix(y, "y")
    phi = as_matrix(phi, "phi")
    w = as_matrix(w, "w")
    check_dims(y, phi, w)
    d = _as_diag(d, phi.shape[1])
    return phi @ (w.T @ w) - y @ w + phi * d


class Objective:
    """Cost evaluator with the observation matrix bound once per solve.

    The solver's inner loop evaluates costs many times per iteration;
    binding ``y`` and the weights here avoids re-validating or copying
    the data on every call.  Instances are immutable in practice: no
    method mutates the bound arrays.
    """

    def __init__(self, y, delta, lambda1, eta):
        self.y = as_matrix(y, "y")
        delta = float(delta)
        lambda1 = float(lambda1)
        eta = float(eta)
        if delta < 0.0:
            raise ValueError("delta must be >= 0, got %g" % delta)
        if lambda1 < 0.0:
            raise ValueError("lambda1 must be >= 0, got %g" % lambda1)
        if eta <= 0.0:
            raise ValueError("eta must be > 0, got %g" % eta)
        self.delta = delta
        self.lambda1 = lambda1
        self.eta = eta

    def smooth(self, phi, w):
        return _cost_smooth(self.y, phi, w, self.delta, self.eta)

    def total(self, phi, w):
        return self.smooth(phi, w) + self.lambda1 * float(np.abs(w).sum())
