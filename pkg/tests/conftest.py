import numpy as np
import pytest


def finite_difference(loss_fn, mat: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of loss_fn w.r.t. every entry of mat,
    perturbing in place."""
    grad = np.zeros_like(mat)
    it = np.nditer(mat, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index
        orig = mat[ix]
        mat[ix] = orig + eps
        lp = loss_fn()
        mat[ix] = orig - eps
        lm = loss_fn()
        mat[ix] = orig
        grad[ix] = (lp - lm) / (2 * eps)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)
