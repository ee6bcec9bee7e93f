"""Two-layer ReLU network ``f(x) = relu(x^T W) v / sqrt(k)`` trained by
full-batch gradient descent with separate stepsizes for the two layers.

The Jacobian is derived by hand.  Its columns are ordered as ``vec(W)``
neuron by neuron (the ``d`` weights of hidden unit 1, then unit 2, ...)
followed by ``v``.  The ReLU derivative uses the convention
``relu'(0) = 1``.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from ._random import check_seed, make_rng
from ._validation import (
    DIVERGENCE_FACTOR,
    check_matrix,
    check_positive,
    check_positive_int,
    check_record_points,
    check_vector,
)
from .exceptions import DivergenceError


@dataclass(frozen=True)
class TwoLayerParams:
    """Weights ``W`` (d x k) and ``v`` (k,), with the init scales that made them."""

    w_matrix: np.ndarray
    v_vector: np.ndarray
    omega: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        w = np.array(self.w_matrix, dtype=float)
        if w.ndim != 2:
            raise ValueError(f"w_matrix must be 2-D, got shape {w.shape}")
        v = check_vector(self.v_vector, "v_vector", length=w.shape[1])
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "w_matrix", w)
        object.__setattr__(self, "v_vector", v)

    @property
    def d(self):
        return self.w_matrix.shape[0]

    @property
    def k(self):
        return self.w_matrix.shape[1]

    def flat(self):
        """``[vec(W); v]`` in Jacobian column order."""
        return np.concatenate([self.w_matrix.T.ravel(), self.v_vector])

    @classmethod
    def from_flat(cls, flat, d, k, omega=1.0, nu=1.0):
        flat = np.asarray(flat, dtype=float)
        w = flat[: d * k].reshape(k, d).T
        return cls(w, flat[d * k :], omega, nu)


@dataclass
class TrainLog:
    """Training record.

    ``train_mse`` holds the training objective ``0.5 * sum_i (y_i - f(x_i))^2``
    at each record point.  Test columns are NaN when no test set was given.
    """

    record_points: np.ndarray
    train_mse: np.ndarray
    test_mae: np.ndarray
    test_mse: np.ndarray
    param_snapshots: list = field(default=None, repr=False)

    @property
    def test_risk(self):
        return self.test_mse

    def columns(self):
        return {
            "t": self.record_points,
            "train_mse": self.train_mse,
            "test_mae": self.test_mae,
            "test_mse": self.test_mse,
        }

    def to_csv(self, path):
        from .io import write_columns

        return write_columns(path, self.columns())


def init_params(d, k, omega, nu, seed):
    """Random initialisation ``W_ij ~ N(0, omega^2)``, ``v_r ~ Uniform{-nu, +nu}``."""
    d = check_positive_int(d, "d")
    k = check_positive_int(k, "k")
    omega = check_positive(omega, "omega", strict=False)
    nu = check_positive(nu, "nu", strict=False)
    rng = make_rng(check_seed(seed))
    w = rng.standard_normal((d, k)) * omega
    signs = rng.integers(0, 2, size=k) * 2 - 1
    return TwoLayerParams(w, nu * signs.astype(float), omega, nu)


def _check_inputs(params, x_rows):
    return check_matrix(x_rows, "x_rows", n_cols=params.d)


def forward(params, x_rows):
    """Network output for each row of ``x_rows`` (shape m x d)."""
    x = _check_inputs(params, x_rows)
    return np.maximum(x @ params.w_matrix, 0.0) @ params.v_vector / np.sqrt(params.k)


def jacobian(params, x_rows):
    """Jacobian of the outputs w.r.t. ``[vec(W); v]``, shape ``(n, d*k + k)``.

    First-layer block: ``v_r relu'(<x_i, w_r>) x_i / sqrt(k)`` for neuron ``r``;
    second-layer block: ``relu(x_i^T W) / sqrt(k)``.
    """
    x = _check_inputs(params, x_rows)
    n, d, k = x.shape[0], params.d, params.k
    pre = x @ params.w_matrix
    scale = 1.0 / np.sqrt(k)
    gate = (pre >= 0.0) * (params.v_vector * scale)  # n x k
    j1 = (gate[:, :, None] * x[:, None, :]).reshape(n, k * d)
    j2 = np.maximum(pre, 0.0) * scale
    return np.hstack([j1, j2])


def jacobian_blocks(params, x_rows):
    """``(J1, J2)`` blocks of :func:`jacobian` as separate arrays."""
    jac = jacobian(params, x_rows)
    split = params.d * params.k
    return jac[:, :split], jac[:, split:]


def test_risk(params, x_test, y_test):
    """Mean absolute error and mean squared error on a held-out set."""
    x = _check_inputs(params, x_test)
    y = check_vector(y_test, "y_test", length=x.shape[0])
    if x.shape[0] == 0:
        raise ValueError("test set is empty")
    err = forward(params, x) - y
    return float(np.mean(np.abs(err))), float(np.mean(err**2))


def train(params, x_rows, y, eta_w, eta_v, iters, record_points=None,
          test_set=None, keep_snapshots=False):
    """Full-batch gradient descent on ``L = 0.5 * sum_i (y_i - f(x_i))^2``.

    Both layers are updated simultaneously from gradients at the current
    point: ``W <- W - eta_w dL/dW``, ``v <- v - eta_v dL/dv``.  ``eta_w = 0``
    freezes the first layer.

    Parameters
    ----------
    params : TwoLayerParams
        Starting point.
    x_rows, y : arrays of shape (n, d) and (n,)
    eta_w, eta_v : float
        Stepsizes of the first and second layer.
    iters : int
        Number of iterations.
    record_points : sequence of int, optional
        Iterations (``<= iters``) to log; defaults to ``[0, iters]``.
    test_set : tuple (x_test, y_test), optional
    keep_snapshots : bool
        Also store parameters at each record point.

    Returns
    -------
    (TwoLayerParams, TrainLog)
        Final parameters and the log.
    """
    x = _check_inputs(params, x_rows)
    y = check_vector(y, "y", length=x.shape[0])
    eta_w = check_positive(eta_w, "eta_w", strict=False)
    eta_v = check_positive(eta_v, "eta_v", strict=False)
    iters = check_positive_int(iters, "iters", minimum=0)
    pts = check_record_points(sorted({0, iters}) if record_points is None else record_points)
    if pts[-1] > iters:
        raise ValueError(f"record point {pts[-1]} exceeds iters={iters}")
    if test_set is not None:
        x_test = _check_inputs(params, test_set[0])
        y_test = check_vector(test_set[1], "y_test", length=x_test.shape[0])

    w = np.array(params.w_matrix)
    v = np.array(params.v_vector)
    scale = 1.0 / np.sqrt(params.k)
    n_rec = len(pts)
    train_loss = np.empty(n_rec)
    mae = np.full(n_rec, np.nan)
    mse = np.full(n_rec, np.nan)
    snaps = [] if keep_snapshots else None

    r0_norm = None
    j = 0
    for t in range(iters + 1):
        pre = x @ w
        act = np.maximum(pre, 0.0)
        resid = act @ v * scale - y
        rn = float(np.sqrt(resid @ resid))
        if r0_norm is None:
            r0_norm = rn
        elif not np.isfinite(rn) or (r0_norm > 0 and rn > DIVERGENCE_FACTOR * r0_norm):
            raise DivergenceError(f"two-layer training diverged at iteration {t}")
        if j < n_rec and t == pts[j]:
            train_loss[j] = 0.5 * rn**2
            if test_set is not None:
                err = np.maximum(x_test @ w, 0.0) @ v * scale - y_test
                mae[j] = np.mean(np.abs(err))
                mse[j] = np.mean(err**2)
            if keep_snapshots:
                snaps.append(replace(params, w_matrix=w.copy(), v_vector=v.copy()))
            j += 1
        if t == iters:
            break
        grad_v = act.T @ resid * scale
        if eta_w > 0:
            grad_w = x.T @ ((pre >= 0.0) * resid[:, None]) * (v * scale)
            w = w - eta_w * grad_w
        v = v - eta_v * grad_v

    final = replace(params, w_matrix=w, v_vector=v)
    return final, TrainLog(pts, train_loss, mae, mse, snaps)


class TwoLayerReLURegressor(RegressorMixin, BaseEstimator):
    """Two-layer ReLU regressor trained with per-layer stepsizes.

    Parameters
    ----------
    n_hidden : int, default=256
    omega, nu : float, default=1.0
        Initialisation scales of the first and second layer.
    eta_w, eta_v : float, default=8e-5
        Stepsizes of the first and second layer.
    n_iter : int, default=1000
    random_state : int, default=0
    """

    def __init__(self, n_hidden=256, omega=1.0, nu=1.0, eta_w=8e-5, eta_v=8e-5,
                 n_iter=1000, random_state=0):
        self.n_hidden = n_hidden
        self.omega = omega
        self.nu = nu
        self.eta_w = eta_w
        self.eta_v = eta_v
        self.n_iter = n_iter
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        init = init_params(X.shape[1], self.n_hidden, self.omega, self.nu, self.random_state)
        self.init_params_ = init
        self.params_, self.log_ = train(init, X, y, self.eta_w, self.eta_v, self.n_iter)
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return forward(self.params_, X)
