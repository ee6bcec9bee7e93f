"""Stepsizes that align every U-curve minimum, and double-descent detection."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive, check_positive_int
from .gd import StepsizeSchedule, _check_index


def _noise_over_n(spec, n):
    return spec.noise_std**2 / check_positive_int(n, "n")


def optimal_stepsizes(spec, n, t_target):
    """Stepsizes placing the minimum of every ``U_i`` at ``t_target``.

    ``eta_i = (1 - r_i^(1/t_target)) / sigma_i^2`` with
    ``r_i = (sigma^2/n) / (sigma_i^2 theta_i^2 + sigma^2/n)``.  This choice
    minimises ``min_t R(t)`` over all per-feature stepsizes, and the result
    always satisfies ``0 < eta_i <= 1/sigma_i^2``.

    Features with ``theta_i = 0`` and no noise carry nothing to fit and get
    ``eta_i = 1/sigma_i^2``.  Features with ``theta_i = 0`` but positive noise
    would need ``eta_i = 0``, which is not a valid schedule, so they raise.
    """
    t_target = check_positive(t_target, "t_target")
    noise = _noise_over_n(spec, n)
    signal = spec.signal_energy
    if noise > 0 and np.any(signal == 0):
        bad = int(np.flatnonzero(signal == 0)[0]) + 1
        raise ValueError(
            f"feature {bad} has zero signal; its optimal stepsize is 0, "
            "which is not a valid schedule"
        )
    if noise == 0:
        return StepsizeSchedule(1.0 / spec.feature_vars)
    # log r_i = -log1p(s_i / N) keeps tiny signals from rounding r_i to 1
    shrink = -np.expm1(-np.log1p(signal / noise) / t_target)
    if np.any(shrink <= 0):
        bad = int(np.flatnonzero(shrink <= 0)[0]) + 1
        raise ValueError(f"feature {bad}: signal too small, optimal stepsize underflows to 0")
    return StepsizeSchedule(shrink / spec.feature_vars)


def u_min_value(spec, n, feature_index):
    """Smallest value of ``U_i`` over ``t`` under the optimal stepsize.

    ``(sigma^2/n * s_i) / (sigma^2/n + s_i)`` with ``s_i = sigma_i^2 theta_i^2``;
    it does not depend on the target iteration.
    """
    i = _check_index(feature_index, spec.d)
    noise = _noise_over_n(spec, n)
    s = spec.signal_energy[i]
    if s + noise == 0:
        return 0.0
    return float(noise * s / (noise + s))


def optimal_stopping_time(spec, schedule, n, feature_index):
    """Continuous minimiser of ``U_i`` for a given stepsize.

    Solves ``a_i^t = r_i`` (see :func:`optimal_stepsizes`), i.e.
    ``t = log(r_i) / log(1 - eta_i sigma_i^2)``.
    """
    i = _check_index(feature_index, spec.d)
    if not isinstance(schedule, StepsizeSchedule):
        schedule = StepsizeSchedule(schedule)
    noise = _noise_over_n(spec, n)
    s = spec.signal_energy[i]
    product = schedule.etas[i] * spec.feature_vars[i]
    if noise == 0:
        return np.inf
    if s == 0:
        return 0.0
    if product >= 1:
        raise ValueError("minimiser is undefined when eta_i * sigma_i^2 >= 1")
    return float(-np.log1p(s / noise) / np.log1p(-product))


def u_curve_derivative(spec, schedule, n, feature_index, t):
    """Derivative ``dU_i/dt`` treating ``t`` as continuous.

    With ``s = a^t``: ``dU/dt = 2 log(a) s (B s - N (1 - s))`` where
    ``B = sigma_i^2 theta_i^2`` and ``N = sigma^2/n``.
    """
    i = _check_index(feature_index, spec.d)
    if not isinstance(schedule, StepsizeSchedule):
        schedule = StepsizeSchedule(schedule)
    product = schedule.etas[i] * spec.feature_vars[i]
    if product >= 1:
        raise ValueError("derivative needs 0 < eta_i * sigma_i^2 < 1")
    noise = _noise_over_n(spec, n)
    log_a = np.log1p(-product)
    s = np.exp(np.asarray(t, dtype=float) * log_a)
    return 2.0 * log_a * s * (spec.signal_energy[i] * s - noise * (1.0 - s))


@dataclass
class DoubleDescentReport:
    """Local minima found on a risk curve.

    ``minima`` holds ``(t, value)`` pairs sorted by ``t``.
    """

    minima: list = field(default_factory=list)

    @property
    def is_double_descent(self):
        return len(self.minima) >= 2

    @property
    def global_min(self):
        if not self.minima:
            return None
        return min(self.minima, key=lambda m: m[1])

    def summary_line(self):
        return f"double_descent={str(self.is_double_descent).lower()}"

    def columns(self):
        return {
            "t_min": np.array([m[0] for m in self.minima]),
            "value": np.array([m[1] for m in self.minima], dtype=float),
        }

    def to_csv(self, path):
        from .io import write_columns

        return write_columns(path, self.columns())


def _prominence(values, i):
    """Rise from ``values[i]`` to the lower of its two flanking maxima.

    Each flank extends until a strictly lower value or the boundary.  A
    missing flank (``i`` at the right edge) is ignored.
    """
    v = values[i]
    flanks = []
    for step in (-1, 1):
        j = i + step
        if not 0 <= j < len(values):
            continue
        peak = v
        while 0 <= j < len(values) and values[j] >= v:
            peak = max(peak, values[j])
            j += step
        flanks.append(peak)
    return min(flanks) - v if flanks else 0.0


def find_minima(record_points, values, window=5, prominence=0.05):
    """Prominent local minima of a sampled curve.

    A sample is kept if it is strictly below every other sample within
    ``window`` positions and its prominence exceeds
    ``prominence * (max - min)``.  The last sample may qualify (training can
    still be descending at the horizon); the first cannot.
    """
    values = np.asarray(values, dtype=float)
    pts = np.asarray(record_points)
    window = check_positive_int(window, "window")
    prominence = check_positive(prominence, "prominence")
    if len(values) < 2 * window + 1:
        raise ValueError(
            f"curve has {len(values)} points, need at least {2 * window + 1} for window={window}"
        )
    threshold = prominence * (values.max() - values.min())
    found = []
    for i in range(1, len(values)):
        lo, hi = max(0, i - window), min(len(values), i + window + 1)
        neighbours = np.r_[values[lo:i], values[i + 1 : hi]]
        if not np.all(values[i] < neighbours):
            continue
        if _prominence(values, i) > threshold:
            t = pts[i].item() if hasattr(pts[i], "item") else pts[i]
            found.append((t, float(values[i])))
    return found


def detect_double_descent(curve, window=5, prominence=0.05):
    """Classify a :class:`~epochdd.gd.RiskCurve` (or ``(t, values)`` pair).

    Two or more prominent minima count as double descent.
    """
    if isinstance(curve, tuple):
        t, values = curve
    else:
        t, values = curve.record_points, curve.risk
    return DoubleDescentReport(find_minima(t, values, window, prominence))
