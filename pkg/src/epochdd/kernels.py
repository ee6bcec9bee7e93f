"""Arc-cosine kernels of the two-layer ReLU network and spectral bounds.

For unit-norm inputs with ``rho = <x_i, x_j>`` the expected Jacobian outer
product at initialisation is ``nu^2 K1(rho) + omega^2 K2(rho)``: ``K1``
comes from the first-layer block, ``K2`` from the second.  The bound
functions work on the eigendecomposition of such a Gram matrix and keep only
the spectral terms; additive slack constants can be passed in explicitly.
"""

from dataclasses import dataclass

import numpy as np

from ._random import derive_seeds
from ._validation import (
    check_matrix,
    check_positive,
    check_positive_int,
    check_vector,
    one_minus_pow,
    warn_stepsize,
)
from .exceptions import DegenerateGramError

_RHO_TOL = 1e-12
_UNIT_TOL = 1e-8


def _clip_rho(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) > 1.0 + _RHO_TOL) or not np.all(np.isfinite(rho)):
        raise ValueError("kernel argument must lie in [-1, 1]")
    return np.clip(rho, -1.0, 1.0)


def kernel_k1(rho):
    """``K1(rho) = rho (1 - arccos(rho)/pi) / 2``."""
    rho = _clip_rho(rho)
    # 1 - arccos(rho)/pi == arccos(-rho)/pi, without cancellation near rho = -1
    out = 0.5 * rho * np.arccos(-rho) / np.pi
    return float(out) if out.ndim == 0 else out


def kernel_k2(rho):
    """``K2(rho) = (sqrt(1 - rho^2)/pi + rho (1 - arccos(rho)/pi)) / 2``."""
    rho = _clip_rho(rho)
    out = 0.5 * (np.sqrt(1.0 - rho**2) + rho * np.arccos(-rho)) / np.pi
    # the two terms cancel to O(eps) near rho = -1; the exact value is >= 0
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def _check_unit_rows(x_rows):
    x = check_matrix(x_rows, "x_rows")
    norms = np.linalg.norm(x, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > _UNIT_TOL)
    if bad.size:
        raise ValueError(
            f"x_rows must have unit-norm rows; row {bad[0]} has norm {norms[bad[0]]:.12g}"
        )
    return x


def gram_matrix(x_rows, omega, nu):
    """Expected Gram matrix ``nu^2 K1(X X^T) + omega^2 K2(X X^T)``.

    Rows of ``x_rows`` must have unit norm (within 1e-8).
    """
    x = _check_unit_rows(x_rows)
    omega = check_positive(omega, "omega", strict=False)
    nu = check_positive(nu, "nu", strict=False)
    # rows are unit-norm up to 1e-8, so |rho| may exceed 1 by rounding only
    rho = np.clip(x @ x.T, -1.0, 1.0)
    rho = 0.5 * (rho + rho.T)
    np.fill_diagonal(rho, 1.0)
    return nu**2 * kernel_k1(rho) + omega**2 * kernel_k2(rho)


def mc_gram_estimate(x_rows, omega, nu, k, replicates, seed):
    """Average of ``J J^T`` over ``replicates`` random width-``k`` networks.

    Brute-force counterpart of :func:`gram_matrix`; replicate ``r`` is
    initialised from the ``r``-th child seed of ``seed``.
    """
    from .two_layer import init_params, jacobian

    x = _check_unit_rows(x_rows)
    k = check_positive_int(k, "k")
    replicates = check_positive_int(replicates, "replicates")
    total = np.zeros((x.shape[0], x.shape[0]))
    for child in derive_seeds(seed, replicates):
        params = init_params(x.shape[1], k, omega, nu, child)
        jac = jacobian(params, x)
        total += jac @ jac.T
    return total / replicates


@dataclass
class GramSpectrum:
    """Eigendecomposition of a Gram matrix together with label projections.

    ``eigenvalues`` are sorted in descending order and ``eigenvectors[:, i]``
    belongs to ``eigenvalues[i]``; ``projections[i] = <u_i, y>``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    projections: np.ndarray

    @property
    def alpha(self):
        return float(self.eigenvalues[-1])

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    def columns(self):
        return {
            "i": np.arange(self.n),
            "eigenvalue": self.eigenvalues,
            "projection": self.projections,
        }

    def to_csv(self, path):
        from .io import write_columns

        return write_columns(path, self.columns())


def spectrum(gram, y):
    """Eigendecompose a symmetric ``gram`` and project ``y`` on the eigenvectors.

    Slightly negative eigenvalues (within ``1e-12 * trace``) are rounding
    noise and are set to zero.
    """
    g = check_matrix(gram, "gram")
    if g.shape[0] != g.shape[1]:
        raise ValueError(f"gram must be square, got shape {g.shape}")
    if np.max(np.abs(g - g.T), initial=0.0) > 1e-10:
        raise ValueError("gram must be symmetric (within 1e-10)")
    y = check_vector(y, "y", length=g.shape[0])
    vals, vecs = np.linalg.eigh(0.5 * (g + g.T))
    vals, vecs = vals[::-1], vecs[:, ::-1]
    tol = _RHO_TOL * abs(np.trace(g))
    vals = np.where((vals < 0) & (vals >= -tol), 0.0, vals)
    return GramSpectrum(vals, vecs, vecs.T @ y)


def gram_to_csv(gram, path):
    """Write a matrix as ``i,j,value`` triplets (row-major, 0-based)."""
    from .io import write_columns

    g = np.asarray(gram, dtype=float)
    ii, jj = np.indices(g.shape)
    return write_columns(path, {"i": ii.ravel(), "j": jj.ravel(), "value": g.ravel()})


def _decay(spec, eta, t):
    eta = check_positive(eta, "eta")
    t = check_positive(t, "t", strict=False)
    warn_stepsize(eta * spec.eigenvalues[:1], "spectral bound")
    return 1.0 - eta * spec.eigenvalues, t


def _require_positive(spec):
    if not spec.alpha > 0:
        raise DegenerateGramError(
            f"Gram matrix has smallest eigenvalue {spec.alpha:.3g}; the bound divides by it"
        )


def _fitted_part(spec, eta, t):
    """``sum_i <u_i, y>^2 (1 - a_i^t)^2 / sigma_i^2``."""
    _require_positive(spec)
    a, t = _decay(spec, eta, t)
    grown = one_minus_pow(a, t)
    return float(np.sum(spec.projections**2 * grown**2 / spec.eigenvalues))


def _remaining_part(spec, eta, t):
    """``sum_i <u_i, y>^2 a_i^(2t)``."""
    a, t = _decay(spec, eta, t)
    return float(np.sum(spec.projections**2 * (1.0 - one_minus_pow(a, t)) ** 2))


def risk_bound_terms(spec, eta, t, n=None):
    """The two radicals of :func:`risk_bound` separately."""
    n = spec.n if n is None else check_positive_int(n, "n")
    return (
        np.sqrt(_remaining_part(spec, eta, t) / n),
        np.sqrt(_fitted_part(spec, eta, t) / n),
    )


def risk_bound(spec, eta, t, n=None, slack=0.0):
    """Spectral part of the test-error bound after ``t`` gradient steps.

    ``sqrt(1/n sum <u_i,y>^2 a_i^(2t)) + sqrt(1/n sum <u_i,y>^2 (1-a_i^t)^2 / sigma_i^2)``
    with ``a_i = 1 - eta sigma_i^2``.  The first term tracks the training
    residual, the second the complexity of the fitted function.  ``slack``
    is added verbatim.
    """
    first, second = risk_bound_terms(spec, eta, t, n)
    return float(first + second + slack)


def train_error_bound(spec, eta, t, slack=0.0):
    """Residual-norm bound ``sqrt(sum <u_i,y>^2 a_i^(2t))``."""
    return float(np.sqrt(_remaining_part(spec, eta, t)) + slack)


def param_distance_bound(spec, eta, t, slack=0.0):
    """Distance-from-init bound ``sqrt(sum <u_i,y>^2 (1-a_i^t)^2 / sigma_i^2)``."""
    return float(np.sqrt(_fitted_part(spec, eta, t)) + slack)


def linear_residual(spec, eta, t):
    """Residual ``sum_i a_i^t u_i <u_i, r0>`` of gradient descent on a linear model.

    ``spec`` must be the spectrum of ``J J^T`` with projections of the initial
    residual ``r0``.
    """
    a, t = _decay(spec, eta, t)
    return spec.eigenvectors @ ((1.0 - one_minus_pow(a, t)) * spec.projections)
