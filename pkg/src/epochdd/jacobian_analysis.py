"""Which layer does each singular direction of the Jacobian belong to?

For ``J = sum_i s_i u_i v_i^T`` the right singular vector ``v_i`` is split
into the coordinates of the first-layer weights and those of the second
layer.  The two squared norms add up to one and tell how much of the
direction ``s_i`` moves each layer.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_matrix, check_positive_int
from .exceptions import NumericalError

DEGENERATE_RTOL = 1e-10


@dataclass
class JacobianSplit:
    """Singular values (descending) with the per-block squared norms."""

    sigma: np.ndarray
    norm_w_sq: np.ndarray
    norm_v_sq: np.ndarray
    degenerate: np.ndarray

    def __len__(self):
        return self.sigma.shape[0]

    @property
    def rows(self):
        return list(zip(self.sigma.tolist(), self.norm_w_sq.tolist(), self.norm_v_sq.tolist()))

    def top_fraction(self, fraction):
        """Slice of the largest ``ceil(fraction * len)`` singular values."""
        m = max(1, int(np.ceil(fraction * len(self))))
        return JacobianSplit(
            self.sigma[:m], self.norm_w_sq[:m], self.norm_v_sq[:m], self.degenerate[:m]
        )

    def columns(self):
        return {"sigma": self.sigma, "norm_w_sq": self.norm_w_sq, "norm_v_sq": self.norm_v_sq}

    def to_csv(self, path):
        from .io import write_columns

        return write_columns(path, self.columns())


def layer_split_svd(jac, d, k, split=None):
    """Thin SVD of ``jac`` with each right singular vector split in two blocks.

    Parameters
    ----------
    jac : array of shape (n, d*k + k)
        Jacobian with first-layer columns first.
    d, k : int
        Input dimension and width; fix the expected column count.
    split : int, optional
        Column where the second block starts, ``d*k`` by default.  Other
        architectures can pass their own boundary.

    Singular values below ``1e-10 * sigma_1`` are kept but flagged in
    ``degenerate``: their vectors are not well determined.
    """
    jac = check_matrix(jac, "jac")
    d = check_positive_int(d, "d")
    k = check_positive_int(k, "k")
    if jac.shape[1] != d * k + k:
        raise ValueError(f"jac has {jac.shape[1]} columns, expected d*k + k = {d * k + k}")
    if jac.shape[0] > jac.shape[1]:
        raise ValueError(f"jac has more rows ({jac.shape[0]}) than columns ({jac.shape[1]})")
    split = d * k if split is None else check_positive_int(split, "split", minimum=0)
    if split > jac.shape[1]:
        raise ValueError(f"split={split} exceeds the column count {jac.shape[1]}")
    try:
        _, s, vt = np.linalg.svd(jac, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    w_sq = np.sum(vt[:, :split] ** 2, axis=1)
    v_sq = np.sum(vt[:, split:] ** 2, axis=1)
    top = s[0] if s.size else 0.0
    degenerate = s <= DEGENERATE_RTOL * top
    return JacobianSplit(s, w_sq, v_sq, degenerate)
