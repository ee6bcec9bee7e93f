"""Early-stopped gradient descent on least squares with per-feature stepsizes.

The iteration is ``theta <- theta - H X^T (X theta - y)`` started from zero,
with ``H = diag(etas)``.  Alongside the actual iterates this module provides
the "proximal" iterates (``X^T X`` replaced by its expectation), their closed
form, and the closed-form risk curve built from per-feature U-shaped
bias-variance terms.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from ._random import derive_seeds
from ._validation import (
    DIVERGENCE_FACTOR,
    check_positive_int,
    check_record_points,
    check_vector,
    one_minus_pow,
    warn_stepsize,
)
from .exceptions import DivergenceError
from .linear_model import Dataset, population_risk, sample_dataset


@dataclass(frozen=True)
class StepsizeSchedule:
    """Per-feature stepsizes, the diagonal of ``H``."""

    etas: np.ndarray

    def __post_init__(self):
        etas = check_vector(self.etas, "etas")
        if np.any(etas <= 0):
            raise ValueError("every stepsize must be strictly positive")
        etas.setflags(write=False)
        object.__setattr__(self, "etas", etas)

    @classmethod
    def constant(cls, d, eta):
        return cls(np.full(d, float(eta)))

    def __len__(self):
        return self.etas.shape[0]

    def check_dim(self, d):
        if len(self) != d:
            raise ValueError(f"schedule has {len(self)} stepsizes, model has d={d}")


@dataclass
class Trajectory:
    """Iterates recorded at ``record_points`` (row ``j`` of ``thetas``)."""

    record_points: np.ndarray
    thetas: np.ndarray

    def at(self, t):
        idx = np.searchsorted(self.record_points, t)
        if idx >= len(self.record_points) or self.record_points[idx] != t:
            raise KeyError(f"iteration {t} was not recorded")
        return self.thetas[idx]


@dataclass
class RiskCurve:
    """Risk sampled over iterations, with its bias/variance split.

    ``std`` is only set for Monte-Carlo curves; ``u_curves`` (one column per
    feature) only for closed-form ones.
    """

    record_points: np.ndarray
    risk: np.ndarray
    bias: np.ndarray
    variance: np.ndarray
    noise_variance: float = 0.0
    u_curves: np.ndarray = None
    std: np.ndarray = None

    def __len__(self):
        return len(self.record_points)

    def columns(self):
        """Ordered ``name -> array`` mapping following the CSV schema."""
        cols = {
            "t": self.record_points,
            "risk": self.risk,
            "bias": self.bias,
            "variance": self.variance,
        }
        if self.u_curves is not None:
            for i in range(self.u_curves.shape[1]):
                cols[f"u_{i + 1}"] = self.u_curves[:, i]
        if self.std is not None:
            cols["std"] = self.std
        return cols

    def to_csv(self, path):
        from .io import write_columns

        return write_columns(path, self.columns())


def _check_data_schedule(data, schedule):
    if not isinstance(schedule, StepsizeSchedule):
        schedule = StepsizeSchedule(schedule)
    schedule.check_dim(data.d)
    return schedule


def gd_fit(data, schedule, record_points):
    """Run gradient descent from zero and record iterates.

    Parameters
    ----------
    data : Dataset
        Scaled design ``X`` and labels ``y``.
    schedule : StepsizeSchedule or array-like
        Per-feature stepsizes.
    record_points : sequence of int
        Strictly increasing iteration indices at which to store ``theta``.

    Returns
    -------
    Trajectory

    Raises
    ------
    DivergenceError
        If ``||X theta - y||`` exceeds ``1e6`` times its initial value.
    """
    schedule = _check_data_schedule(data, schedule)
    pts = check_record_points(record_points)
    x, y = data.x_matrix, data.y_vector
    gram = x.T @ x
    xty = x.T @ y
    yty = float(y @ y)
    limit = DIVERGENCE_FACTOR**2 * yty
    etas = schedule.etas

    theta = np.zeros(data.d)
    out = np.empty((len(pts), data.d))
    j = 0
    for t in range(int(pts[-1]) + 1):
        if t == pts[j]:
            out[j] = theta
            j += 1
            if j == len(pts):
                break
        grad = gram @ theta - xty
        theta = theta - etas * grad
        # ||X theta - y||^2 without forming X theta
        res_sq = theta @ (gram @ theta) - 2.0 * theta @ xty + yty
        if not np.isfinite(res_sq) or (yty > 0 and res_sq > limit):
            raise DivergenceError(
                f"gradient descent diverged at iteration {t + 1} "
                f"(max eta*||x_i||^2 too large)"
            )
    return Trajectory(pts, out)


def scaled_noise(spec, data):
    """Noise realisation on the scaled labels, ``y - X theta_star``."""
    if spec.d != data.d:
        raise ValueError(f"spec has d={spec.d}, data has d={data.d}")
    return data.y_vector - data.x_matrix @ spec.theta_star


def proximal_trajectory(spec, data, schedule, record_points):
    """Iterates of the recursion with ``X^T X`` replaced by ``diag(sigma_i^2)``.

    ``e <- (I - H Sigma) e + H X^T z`` with ``e = theta_tilde - theta_star``,
    ``e_0 = -theta_star`` and ``z = y - X theta_star`` the scaled noise.
    """
    schedule = _check_data_schedule(data, schedule)
    pts = check_record_points(record_points)
    contraction = 1.0 - schedule.etas * spec.feature_vars
    drive = schedule.etas * (data.x_matrix.T @ scaled_noise(spec, data))

    err = -np.array(spec.theta_star, dtype=float)
    out = np.empty((len(pts), spec.d))
    j = 0
    for t in range(int(pts[-1]) + 1):
        if t == pts[j]:
            out[j] = spec.theta_star + err
            j += 1
            if j == len(pts):
                break
        err = contraction * err + drive
    return Trajectory(pts, out)


def proximal_closed_form(spec, data, schedule, record_points):
    """Geometric-series solution of the proximal recursion.

    ``theta_tilde_i - theta*_i = -a_i^t theta*_i + <x_i, z> (1 - a_i^t) / sigma_i^2``
    with ``a_i = 1 - eta_i sigma_i^2`` and ``x_i`` the i-th column of ``X``.
    """
    schedule = _check_data_schedule(data, schedule)
    pts = check_record_points(record_points, integer=False)
    a = 1.0 - schedule.etas * spec.feature_vars
    proj = data.x_matrix.T @ scaled_noise(spec, data)
    at = np.power(a[None, :], pts[:, None])
    err = -at * spec.theta_star + proj * (1.0 - at) / spec.feature_vars
    return Trajectory(pts, spec.theta_star + err)


def _u_terms(signal, noise_over_n, a, t):
    """Bias and variance parts of each U-curve, shape ``(len(t), d)``."""
    t = np.asarray(t, dtype=float)[:, None]
    a = np.asarray(a, dtype=float)[None, :]
    if np.all(a >= 0):
        at = np.where(t == 0, 1.0, np.power(a, t))
        om = one_minus_pow(a, t)
    else:
        at = np.power(a, t)
        om = 1.0 - at
    bias = signal[None, :] * at**2
    var = noise_over_n * om**2
    return bias, var


def risk_expression(spec, schedule, n, record_points):
    """Closed-form risk curve.

    ``R(t) = sigma^2 + sum_i U_i(t)`` with
    ``U_i(t) = sigma_i^2 theta_i^2 (1 - eta_i sigma_i^2)^(2t)
    + (sigma^2/n) (1 - (1 - eta_i sigma_i^2)^t)^2``.

    ``record_points`` may be non-integer.  A ``RuntimeWarning`` is issued when
    some ``eta_i sigma_i^2 > 1``.
    """
    if not isinstance(schedule, StepsizeSchedule):
        schedule = StepsizeSchedule(schedule)
    schedule.check_dim(spec.d)
    n = check_positive_int(n, "n")
    pts = check_record_points(record_points, integer=False)
    products = schedule.etas * spec.feature_vars
    warn_stepsize(products, "risk_expression")
    bias_i, var_i = _u_terms(spec.signal_energy, spec.noise_std**2 / n, 1.0 - products, pts)
    u = bias_i + var_i
    bias = bias_i.sum(axis=1)
    variance = var_i.sum(axis=1)
    noise_var = spec.noise_std**2
    return RiskCurve(
        record_points=_as_points(record_points, pts),
        risk=noise_var + bias + variance,
        bias=bias,
        variance=variance,
        noise_variance=noise_var,
        u_curves=u,
    )


def _as_points(original, pts):
    # keep integer iteration indices as integers for clean CSV output
    orig = np.asarray(original)
    if np.issubdtype(orig.dtype, np.integer):
        return orig.astype(np.int64)
    if np.all(np.mod(pts, 1) == 0):
        return pts.astype(np.int64)
    return pts


def u_curve(spec, schedule, n, feature_index, record_points):
    """U-curve of one feature (``feature_index`` is 1-based).

    ``U_i(t) = sigma_i^2 theta_i^2 a_i^(2t) + (sigma^2/n)(1 - a_i^t)^2`` with
    ``a_i = 1 - eta_i sigma_i^2``.
    """
    if not isinstance(schedule, StepsizeSchedule):
        schedule = StepsizeSchedule(schedule)
    schedule.check_dim(spec.d)
    i = _check_index(feature_index, spec.d)
    n = check_positive_int(n, "n")
    pts = check_record_points(record_points, integer=False)
    a = 1.0 - schedule.etas[i] * spec.feature_vars[i]
    bias, var = _u_terms(spec.signal_energy[i : i + 1], spec.noise_std**2 / n, [a], pts)
    return (bias + var)[:, 0]


def _check_index(feature_index, d):
    if isinstance(feature_index, bool) or not isinstance(feature_index, (int, np.integer)):
        raise TypeError("feature_index must be an integer")
    if not 1 <= feature_index <= d:
        raise IndexError(f"feature_index must be in [1, {d}], got {feature_index}")
    return int(feature_index) - 1


def mc_risk(spec, schedule, n, record_points, replicates, seed):
    """Monte-Carlo estimate of the expected risk of gradient descent.

    Each replicate samples a fresh dataset (child seed of ``seed``), runs
    :func:`gd_fit`, and evaluates :func:`population_risk` at every record
    point.

    Returns
    -------
    RiskCurve
        ``risk`` is the mean over replicates and ``std`` its sample standard
        deviation.  ``bias`` and ``variance`` are the empirical textbook
        decomposition (squared error of the mean estimate, and spread of the
        estimates around it), so ``risk = sigma^2 + bias + variance``.
    """
    replicates = check_positive_int(replicates, "replicates", minimum=2)
    if not isinstance(schedule, StepsizeSchedule):
        schedule = StepsizeSchedule(schedule)
    schedule.check_dim(spec.d)
    pts = check_record_points(record_points)
    thetas = np.empty((replicates, len(pts), spec.d))
    risks = np.empty((replicates, len(pts)))
    for r, child in enumerate(derive_seeds(seed, replicates)):
        traj = gd_fit(sample_dataset(spec, n, child), schedule, pts)
        thetas[r] = traj.thetas
        risks[r] = population_risk(spec, traj.thetas)
    mean_theta = thetas.mean(axis=0)
    bias = ((mean_theta - spec.theta_star) ** 2) @ spec.feature_vars
    variance = thetas.var(axis=0) @ spec.feature_vars
    return RiskCurve(
        record_points=pts,
        risk=risks.mean(axis=0),
        bias=bias,
        variance=variance,
        noise_variance=spec.noise_std**2,
        std=risks.std(axis=0, ddof=1),
    )


class EarlyStoppedGDRegressor(RegressorMixin, BaseEstimator):
    """Least-squares regression fitted by early-stopped gradient descent.

    Parameters
    ----------
    stepsizes : float or array-like of shape (n_features,), default=0.1
        Per-feature stepsizes (a scalar is broadcast).
    n_iter : int, default=100
        Early stopping time.
    record_points : array-like of int, optional
        Extra iterations at which to keep the coefficients in ``coef_path_``.

    Notes
    -----
    ``fit`` scales ``X`` and ``y`` by ``1/sqrt(n_samples)`` before iterating,
    so stepsizes are on the same footing as in :func:`gd_fit`.  No intercept
    is fitted.
    """

    def __init__(self, stepsizes=0.1, n_iter=100, record_points=None):
        self.stepsizes = stepsizes
        self.n_iter = n_iter
        self.record_points = record_points

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        n, d = X.shape
        etas = np.broadcast_to(np.asarray(self.stepsizes, dtype=float), (d,))
        n_iter = check_positive_int(self.n_iter, "n_iter", minimum=0)
        pts = {n_iter}
        if self.record_points is not None:
            pts.update(int(p) for p in self.record_points)
        pts = np.array(sorted(pts), dtype=np.int64)
        data = Dataset(X / np.sqrt(n), y / np.sqrt(n))
        traj = gd_fit(data, StepsizeSchedule(etas.copy()), pts)
        self.coef_ = traj.at(n_iter)
        self.coef_path_ = traj
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return X @ self.coef_
