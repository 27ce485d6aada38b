"""Spreading codes and the three linear receivers (MF, DE, MMSE).

All SINR computations factor as gamma_k = p_k * g_k where g_k does not
depend on user k's own transmit power, so ``sinr`` is implemented exactly
as ``powers[k] * gain_factor(...)``.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .errors import ReceiverUnavailableError, SingularMatrixError

# condition-number guard used when deciding a matrix is numerically singular
COND_LIMIT = 1e12


class ReceiverKind(Enum):
    MF = "mf"      # matched filter
    DE = "de"      # decorrelator, needs K <= N
    MMSE = "mmse"  # linear minimum mean-square error

    def __str__(self):
        return self.value


# tie-break priority when utilities are numerically equal
RECEIVER_PRIORITY = (ReceiverKind.MMSE, ReceiverKind.DE, ReceiverKind.MF)


@dataclass
class CodeBook:
    """K binary spreading sequences of length N, entries +-1/sqrt(N).

    ``rho`` is the cross-correlation matrix S^T S.  The decorrelator's Gram
    inverse is computed lazily and cached, since it only depends on the
    codes.
    """
    codes: np.ndarray                 # (K, N), rows are the sequences s_k
    rho: np.ndarray = field(init=False)
    _gram_inv: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.float64)
        if self.codes.ndim != 2:
            raise ValueError("codes must be a (K, N) array")
        self.rho = self.codes @ self.codes.T

    @property
    def n_users(self):
        return self.codes.shape[0]

    @property
    def processing_gain(self):
        return self.codes.shape[1]

    def gram_inverse(self):
        """(S^T S)^{-1}, required by the decorrelator; cached."""
        if self._gram_inv is None:
            k, n = self.codes.shape
            if k > n:
                raise ReceiverUnavailableError(
                    f"decorrelator needs K <= N, got K={k}, N={n}")
            if np.linalg.cond(self.rho) > COND_LIMIT:
                raise ReceiverUnavailableError(
                    "spreading codes are numerically collinear")
            self._gram_inv = np.linalg.inv(self.rho)
        return self._gram_inv

    def chips(self):
        """Integer +-1 chip matrix (exact serialization form)."""
        return np.sign(self.codes).astype(int)

    @classmethod
    def from_chips(cls, chips):
        chips = np.asarray(chips, dtype=np.float64)
        return cls(chips / np.sqrt(chips.shape[1]))


def generate_codes(k_users, n_chips, seed):
    """Random binary codebook: chips i.i.d. uniform on {-1, +1}.

    Deterministic for a given (k_users, n_chips, seed).
    """
    if k_users < 1 or n_chips < 1:
        raise ValueError("need at least one user and one chip per bit")
    rng = np.random.default_rng(seed)
    chips = rng.integers(0, 2, size=(k_users, n_chips)) * 2 - 1
    return CodeBook(chips / np.sqrt(n_chips))


def _interference_weights(powers, gains_row, k, exclude):
    """Effective received powers p_j h_j^2 with user k and the receiving
    node zeroed out (the receiving node does not transmit while it listens).
    """
    w = np.asarray(powers, dtype=np.float64) * np.asarray(gains_row) ** 2
    w[k] = 0.0
    if exclude is not None and exclude >= 0:
        w[exclude] = 0.0
    return w


def _quadform_eig(codes_arr, weights, sigma2, k):
    """Noise-floor-aware evaluation of s_k^T A_k^{-1} s_k.

    Used when the direct solve breaks down (condition numbers beyond double
    precision, which happens transiently when powers dwarf the noise
    floor).  Eigendecomposing the interference part keeps sigma2 explicit
    in every denominator, so the result is positive and floor-accurate.
    """
    active = weights > 0
    scaled = codes_arr[active] * np.sqrt(weights[active])[:, None]
    b = scaled.T @ scaled
    lam, vecs = np.linalg.eigh(b)
    lam = np.maximum(lam, 0.0)
    proj = vecs.T @ codes_arr[k]
    return float(np.sum(proj ** 2 / (sigma2 + lam)))


def _quadform_envelope(weights, sigma2):
    """Exact bounds: sigma2*I <= A <= (sigma2 + sum w)*I on unit vectors."""
    total = np.sum(weights, axis=-1)
    lo = (1.0 - 1e-9) / (sigma2 + total)
    hi = (1.0 + 1e-9) / sigma2
    return lo, hi


def _mmse_quadform(codes, weights, sigma2, k):
    """s_k^T A_k^{-1} s_k with A_k = sigma2*I + sum_j w_j s_j s_j^T."""
    if sigma2 < 0:
        raise ValueError("noise power must be nonnegative")
    if sigma2 == 0.0:
        # A_k is only invertible if the interference spans chip space
        active = codes.codes[weights > 0] * np.sqrt(weights[weights > 0])[:, None]
        a = active.T @ active
        if np.linalg.cond(a) > COND_LIMIT:
            raise SingularMatrixError(
                "zero noise power with rank-deficient interference")
        return float(codes.codes[k] @ np.linalg.solve(a, codes.codes[k]))
    try:
        val = float(kernels.mmse_quadform_single(codes.codes, weights,
                                                 sigma2, k))
    except np.linalg.LinAlgError:
        val = np.nan
    lo, hi = _quadform_envelope(weights, sigma2)
    if not lo <= val <= hi:
        val = _quadform_eig(codes.codes, weights, sigma2, k)
    return val


def _mmse_quadforms_batch(codes_arr, weights, sigma2):
    try:
        quad = kernels.mmse_quadforms(codes_arr, weights, sigma2)
    except np.linalg.LinAlgError:
        quad = np.full(len(weights), np.nan)
    lo, hi = _quadform_envelope(weights, sigma2)
    with np.errstate(invalid="ignore"):
        bad = ~((quad >= lo) & (quad <= hi))
    for k in np.nonzero(bad)[0]:
        quad[k] = _quadform_eig(codes_arr, weights[k], sigma2, k)
    return quad


def gain_factor(kind, k, powers, gains_row, codes, sigma2, exclude=None):
    """SINR-per-Watt factor g_k for user k, i.e. the SINR at unit power.

    Parameters
    ----------
    kind : ReceiverKind
    k : desired user index.
    powers : (K,) transmit powers in Watts (entry k is ignored).
    gains_row : (K,) amplitude gains from each transmitter to user k's
        receiving node; entry k is the desired link gain.
    codes : CodeBook
    sigma2 : noise power in Watts.
    exclude : index of the receiving node among the users, or None.  Its
        transmission is excluded from the interference sum.
    """
    gains_row = np.asarray(gains_row, dtype=np.float64)
    h2_own = gains_row[k] ** 2
    if kind == ReceiverKind.MF:
        w = _interference_weights(powers, gains_row, k, exclude)
        interference = float(w @ (codes.rho[k] ** 2))
        return h2_own / (sigma2 + interference)
    if kind == ReceiverKind.DE:
        enhancement = codes.gram_inverse()[k, k]
        return h2_own / (sigma2 * enhancement)
    if kind == ReceiverKind.MMSE:
        w = _interference_weights(powers, gains_row, k, exclude)
        return h2_own * _mmse_quadform(codes, w, sigma2, k)
    raise ValueError(f"unknown receiver kind: {kind!r}")


def sinr(kind, k, powers, gains_row, codes, sigma2, exclude=None):
    """Output SINR gamma_k of the chosen receiver for user k."""
    p_k = float(np.asarray(powers)[k])
    if p_k < 0:
        raise ValueError("transmit power must be nonnegative")
    return p_k * gain_factor(kind, k, powers, gains_row, codes, sigma2, exclude)


def gain_factors(kind, powers, gain_matrix, codes, sigma2, exclusions=None):
    """Vectorized ``gain_factor`` over all users.

    ``gain_matrix`` is (K, K) with row k holding the amplitude gains at user
    k's receiving node; ``exclusions`` is an optional (K,) int array giving
    the receiving-node index to exclude per user (-1 for none).
    """
    gain_matrix = np.asarray(gain_matrix, dtype=np.float64)
    powers = np.asarray(powers, dtype=np.float64)
    k_users = gain_matrix.shape[0]
    h2 = gain_matrix ** 2
    h2_own = np.diagonal(h2).copy()
    if kind == ReceiverKind.DE:
        enhancement = np.diagonal(codes.gram_inverse())
        return h2_own / (sigma2 * enhancement)
    w = powers[None, :] * h2
    idx = np.arange(k_users)
    w[idx, idx] = 0.0
    if exclusions is not None:
        excl = np.asarray(exclusions)
        rows = idx[excl >= 0]
        w[rows, excl[excl >= 0]] = 0.0
    if kind == ReceiverKind.MF:
        interference = np.einsum("kj,kj->k", w, codes.rho ** 2)
        return h2_own / (sigma2 + interference)
    if kind == ReceiverKind.MMSE:
        if sigma2 <= 0:
            return np.array([
                h2_own[k] * _mmse_quadform(codes, w[k], sigma2, k)
                for k in range(k_users)
            ])
        return h2_own * _mmse_quadforms_batch(codes.codes, w, sigma2)
    raise ValueError(f"unknown receiver kind: {kind!r}")


@dataclass
class LinearFilter:
    """Receive filter coefficients for one (user, receiving node) pair."""
    coefficients: np.ndarray
    user: int
    receiver_node: int | None = None


def receiver_filter(kind, k, codes, powers, gains_row, sigma2, exclude=None,
                    receiver_node=None):
    """Filter coefficient vector c_k for the chosen receiver.

    MF returns s_k itself; DE returns column k of S (S^T S)^{-1}; MMSE
    solves A_k x = s_k and applies the closed-form scaling.  When the
    desired user's received amplitude is zero the MMSE scaling degenerates,
    and the unscaled solve direction is returned instead (the SINR is
    scale-invariant, and c^T s_k must stay nonzero).
    """
    gains_row = np.asarray(gains_row, dtype=np.float64)
    if kind == ReceiverKind.MF:
        c = codes.codes[k].copy()
    elif kind == ReceiverKind.DE:
        c = codes.gram_inverse()[k] @ codes.codes
    elif kind == ReceiverKind.MMSE:
        w = _interference_weights(powers, gains_row, k, exclude)
        if sigma2 < 0:
            raise ValueError("noise power must be nonnegative")
        if sigma2 == 0.0:
            _mmse_quadform(codes, w, sigma2, k)  # raises if singular
        a = sigma2 * np.eye(codes.processing_gain)
        scaled = codes.codes * w[:, None]
        a += scaled.T @ codes.codes
        try:
            x = np.linalg.solve(a, codes.codes[k])
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(str(exc)) from None
        p_k = float(np.asarray(powers)[k])
        amp = np.sqrt(p_k) * gains_row[k]
        if amp > 0:
            quad = float(codes.codes[k] @ x)
            c = (amp / (1.0 + p_k * gains_row[k] ** 2 * quad)) * x
        else:
            c = x
    else:
        raise ValueError(f"unknown receiver kind: {kind!r}")
    return LinearFilter(coefficients=c, user=k, receiver_node=receiver_node)


def sinr_from_filter(coefficients, k, powers, gains_row, codes, sigma2,
                     exclude=None):
    """SINR of an arbitrary linear filter, straight from the defining ratio.

    Used as the cross-check that the per-receiver closed forms agree with
    the generic expression.
    """
    c = np.asarray(coefficients, dtype=np.float64)
    gains_row = np.asarray(gains_row, dtype=np.float64)
    powers = np.asarray(powers, dtype=np.float64)
    cts = codes.codes @ c
    desired = powers[k] * gains_row[k] ** 2 * cts[k] ** 2
    w = _interference_weights(powers, gains_row, k, exclude)
    denom = sigma2 * float(c @ c) + float(w @ cts ** 2)
    return desired / denom
