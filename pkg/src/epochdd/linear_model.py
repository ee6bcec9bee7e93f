"""Gaussian linear data model and its exact population risk.

Features are zero-mean Gaussians with diagonal covariance
``diag(feature_stds**2)`` and labels are ``<x, theta_star> + z`` with Gaussian
noise of standard deviation ``noise_std``.  Sampled datasets are stored with
both features and labels scaled by ``1/sqrt(n)``, so the least-squares loss is
``||X theta - y||^2`` without any further normalisation.
"""

from dataclasses import dataclass, field

import numpy as np

from ._random import check_seed, make_rng
from ._validation import check_positive, check_positive_int, check_vector


@dataclass(frozen=True)
class LinearModelSpec:
    """Ground-truth Gaussian linear model.

    Attributes
    ----------
    feature_stds : ndarray of shape (d,)
        Standard deviations of the (independent) features, all positive.
    theta_star : ndarray of shape (d,)
        True coefficients.
    noise_std : float
        Standard deviation of the additive label noise.
    """

    feature_stds: np.ndarray
    theta_star: np.ndarray
    noise_std: float = 0.0

    def __post_init__(self):
        stds = check_vector(self.feature_stds, "feature_stds")
        theta = check_vector(self.theta_star, "theta_star", length=stds.shape[0])
        if np.any(stds <= 0):
            raise ValueError("feature_stds must be strictly positive")
        noise = check_positive(self.noise_std, "noise_std", strict=False)
        stds.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "feature_stds", stds)
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "noise_std", noise)

    @property
    def d(self):
        return self.feature_stds.shape[0]

    @property
    def feature_vars(self):
        return self.feature_stds**2

    @property
    def signal_energy(self):
        """Per-feature signal ``sigma_i^2 * theta_i^2``."""
        return self.feature_vars * self.theta_star**2

    def to_dict(self):
        return {
            "d": self.d,
            "feature_stds": self.feature_stds.tolist(),
            "theta_star": self.theta_star.tolist(),
            "noise_std": self.noise_std,
        }

    @classmethod
    def from_dict(cls, data):
        """Build from the flat JSON layout used by the CLI (``d`` is optional)."""
        spec = cls(
            feature_stds=data["feature_stds"],
            theta_star=data["theta_star"],
            noise_std=data.get("noise_std", 0.0),
        )
        if "d" in data and int(data["d"]) != spec.d:
            raise ValueError(f"d={data['d']} does not match len(feature_stds)={spec.d}")
        return spec

    @classmethod
    def two_scale(cls, d, frac_slow, fast_std=1.0, fast_theta=1.0,
                  slow_std=0.1, slow_theta=10.0, noise_std=1.0):
        """Model with a block of strong features followed by a block of weak ones."""
        d = check_positive_int(d, "d")
        n_slow = int(round(d * frac_slow))
        n_fast = d - n_slow
        stds = np.r_[np.full(n_fast, fast_std), np.full(n_slow, slow_std)]
        theta = np.r_[np.full(n_fast, fast_theta), np.full(n_slow, slow_theta)]
        return cls(stds, theta, noise_std)

    @classmethod
    def geometric(cls, d, ratio, theta_star=None, noise_std=0.0):
        """Feature stds ``ratio**i`` for ``i = 0..d-1``; ``theta_star`` defaults to ones."""
        d = check_positive_int(d, "d")
        stds = float(ratio) ** np.arange(d)
        theta = np.ones(d) if theta_star is None else theta_star
        return cls(stds, theta, noise_std)


@dataclass(frozen=True)
class Dataset:
    """Training set with rows ``x_i/sqrt(n)`` and labels ``y_i/sqrt(n)``."""

    x_matrix: np.ndarray
    y_vector: np.ndarray
    seed: int = 0
    noise: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x_matrix, dtype=float)
        y = np.asarray(self.y_vector, dtype=float)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ValueError(f"inconsistent shapes X{x.shape} y{y.shape}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x_matrix", x)
        object.__setattr__(self, "y_vector", y)

    @property
    def n(self):
        return self.x_matrix.shape[0]

    @property
    def d(self):
        return self.x_matrix.shape[1]

    def unscaled(self):
        """Return ``(X, y)`` with the ``1/sqrt(n)`` scaling undone."""
        s = np.sqrt(self.n)
        return self.x_matrix * s, self.y_vector * s


def sample_dataset(spec, n, seed):
    """Draw ``n`` iid examples from ``spec``.

    Parameters
    ----------
    spec : LinearModelSpec
    n : int
        Number of examples, at least 1.
    seed : int
        64-bit seed; the same ``(spec, n, seed)`` always gives the same data.

    Returns
    -------
    Dataset
        Features and labels scaled by ``1/sqrt(n)``.
    """
    n = check_positive_int(n, "n")
    seed = check_seed(seed)
    rng = make_rng(seed)
    x = rng.standard_normal((n, spec.d)) * spec.feature_stds
    z = rng.standard_normal(n) * spec.noise_std
    y = x @ spec.theta_star + z
    scale = 1.0 / np.sqrt(n)
    return Dataset(x * scale, y * scale, seed=seed, noise=z)


def orthogonal_design(spec, n, seed=0, noise=True):
    """Deterministic design with ``X^T X = diag(sigma_i^2)`` exactly.

    ``X = Q diag(sigma)`` where ``Q`` has orthonormal columns taken from a
    QR factorisation of a seeded Gaussian matrix.  Labels follow the model
    (``y = X theta_star + z/sqrt(n)``) with Gaussian noise when ``noise`` is
    true.  Requires ``n >= d``.
    """
    n = check_positive_int(n, "n")
    if n < spec.d:
        raise ValueError(f"orthogonal design needs n >= d, got n={n}, d={spec.d}")
    rng = make_rng(check_seed(seed))
    q, r = np.linalg.qr(rng.standard_normal((n, spec.d)))
    q = q * np.sign(np.diag(r))
    x = q * spec.feature_stds
    z = rng.standard_normal(n) * spec.noise_std if noise else np.zeros(n)
    y = x @ spec.theta_star + z / np.sqrt(n)
    return Dataset(x, y, seed=seed, noise=z)


def population_risk(spec, theta_hat):
    """Exact risk ``sigma^2 + sum_i sigma_i^2 (theta*_i - theta_hat_i)^2``.

    ``theta_hat`` may also be a 2-D array of estimates (one per row), in which
    case a vector of risks is returned.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    if theta_hat.shape[-1] != spec.d:
        raise ValueError(f"theta_hat has dimension {theta_hat.shape[-1]}, expected {spec.d}")
    err = theta_hat - spec.theta_star
    return spec.noise_std**2 + (err**2) @ spec.feature_vars
