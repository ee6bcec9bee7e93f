"""Small input validation helpers shared by the public functions."""

import numbers
import warnings

import numpy as np

# Residual growth factor that counts as divergence.
DIVERGENCE_FACTOR = 1e6


def check_vector(x, name, length=None, dtype=float):
    """Return ``x`` as a 1-D float array, optionally checking its length."""
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_matrix(x, name, n_cols=None):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if n_cols is not None and arr.shape[1] != n_cols:
        raise ValueError(f"{name} must have {n_cols} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive(value, name, strict=True):
    value = float(value)
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        qualifier = "positive" if strict else "nonnegative"
        raise ValueError(f"{name} must be {qualifier} and finite, got {value}")
    return value


def check_record_points(record_points, integer=True):
    """Validate an ascending list of nonnegative iteration indices."""
    pts = np.asarray(record_points)
    if pts.ndim != 1 or pts.size == 0:
        raise ValueError("record_points must be a nonempty 1-D sequence")
    if integer:
        if not np.issubdtype(pts.dtype, np.integer):
            if not np.all(np.equal(np.mod(pts, 1), 0)):
                raise ValueError("record_points must be integers")
            pts = pts.astype(np.int64)
    else:
        pts = pts.astype(float)
    if np.any(pts < 0):
        raise ValueError("record_points must be nonnegative")
    if np.any(np.diff(pts) <= 0):
        raise ValueError("record_points must be strictly increasing")
    return pts


def warn_stepsize(products, context):
    """Warn when some eta * sigma^2 exceeds 1 (outside the analysed regime)."""
    products = np.asarray(products)
    if np.any(products > 1 + 1e-12):
        warnings.warn(
            f"{context}: eta * sigma^2 = {products.max():.4g} exceeds 1; "
            "closed-form expressions assume eta * sigma^2 <= 1",
            RuntimeWarning,
            stacklevel=3,
        )


def one_minus_pow(base, t):
    """Compute ``1 - base**t`` without cancellation when ``base`` is near 1."""
    base = np.asarray(base, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.expm1(t * np.log(base))
    # base == 0: 0**0 == 1, 0**t == 0 otherwise
    zero = np.broadcast_to(base == 0, out.shape)
    if np.any(zero):
        out = np.where(zero, np.where(np.broadcast_to(t, out.shape) == 0, 0.0, 1.0), out)
    # negative bases (eta * sigma^2 > 1) only make sense for integer t
    neg = np.broadcast_to(base < 0, out.shape)
    if np.any(neg):
        with np.errstate(invalid="ignore"):
            out = np.where(neg, 1.0 - np.power(base, t), out)
    return out


def log_grid(t_max, per_decade=40, include_zero=True):
    """Log-spaced integer iteration grid on ``[1, t_max]``.

    Points are rounded to integers and deduplicated, so small ``t`` are dense
    and every integer below ~``per_decade / ln 10`` is present.
    """
    t_max = check_positive_int(int(t_max), "t_max")
    decades = np.log10(t_max)
    count = max(int(np.ceil(decades * per_decade)) + 1, 2)
    pts = np.unique(np.rint(np.logspace(0.0, decades, count)).astype(np.int64))
    pts = pts[pts <= t_max]
    if pts[-1] != t_max:
        pts = np.append(pts, t_max)
    if include_zero:
        pts = np.concatenate([[0], pts])
    return pts
