"""Pure-numpy implementations of the hot numerical kernels.

These mirror the compiled versions in ``_native.pyx`` and are selected as a
fallback when the extension is not built (or when forced via the
``POWERGAME_KERNELS`` environment variable).
"""
import numpy as np

BACKEND = "pure"


def mmse_quadforms(codes, weights, sigma2):
    """Quadratic forms s_k^T A_k^{-1} s_k for every user.

    A_k = sigma2*I + sum_j weights[k, j] * outer(s_j, s_j); the caller is
    responsible for zeroing the weights of excluded transmitters (the user
    itself and its receiving node).

    Parameters
    ----------
    codes : (K, N) float array, one spreading sequence per row.
    weights : (K, K) float array, effective received interference powers
        p_j * h_j^2 as seen by each user's receiver.
    sigma2 : float, noise power per chip.

    Returns
    -------
    (K,) array of s_k^T A_k^{-1} s_k values.
    """
    codes = np.asarray(codes, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    k_users, n_chips = codes.shape
    outer = (codes[:, :, None] * codes[:, None, :]).reshape(k_users, -1)
    a_stack = (weights @ outer).reshape(k_users, n_chips, n_chips)
    a_stack += sigma2 * np.eye(n_chips)
    x = np.linalg.solve(a_stack, codes[:, :, None])[:, :, 0]
    return np.einsum("kn,kn->k", codes, x)


def mmse_quadform_single(codes, weight_row, sigma2, k):
    """Quadratic form s_k^T A_k^{-1} s_k for one user.

    ``weight_row`` holds the effective interference powers at user k's
    receiver; entry k (and the receiving node's entry) must already be zero.
    """
    codes = np.asarray(codes, dtype=np.float64)
    weight_row = np.asarray(weight_row, dtype=np.float64)
    n_chips = codes.shape[1]
    a = sigma2 * np.eye(n_chips)
    active = np.nonzero(weight_row)[0]
    if active.size:
        scaled = codes[active] * weight_row[active, None]
        a += scaled.T @ codes[active]
    x = np.linalg.solve(a, codes[k])
    return float(codes[k] @ x)
