"""Dense complex linear algebra used by every construction in the package.

All routines treat an eigenvalue or singular value as zero when it is at most
``tol`` times the largest one.  Eigenvectors get a deterministic global phase:
the largest-magnitude component of each vector is made real and positive.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class NotHermitianError(ValueError):
    pass


class NotPositiveError(ValueError):
    pass


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def _check_hermitian(h: np.ndarray, tol: float) -> np.ndarray:
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    if np.max(np.abs(h - dagger(h)), initial=0.0) > tol * scale:
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return (h + dagger(h)) / 2


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    vectors = np.array(vectors, dtype=complex)
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    phases = np.where(np.abs(pivots) > 0, pivots / np.where(pivots == 0, 1, np.abs(pivots)), 1)
    return vectors / phases


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of a Hermitian matrix.

    ``eigenvalues`` are sorted in descending order and ``eigenvectors`` holds
    the matching orthonormal columns.  ``zero`` flags the eigenvalues whose
    magnitude is at most ``tol`` times the largest magnitude.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    zero: np.ndarray

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(~self.zero))

    def support(self) -> np.ndarray:
        """Orthonormal basis (columns) of the span of the non-zero eigenvalues."""
        return self.eigenvectors[:, ~self.zero]

    def kernel(self) -> np.ndarray:
        return self.eigenvectors[:, self.zero]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def _rayleigh_quotients(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Eigenvalues recomputed as ``v^dag h v / v^dag v`` in extended precision.

    The eigenvectors from LAPACK are accurate to machine precision, so these
    quotients carry small eigenvalues to full relative accuracy, which the
    solver's own eigenvalues (absolute error ~ eps * |h|) do not.
    """
    hl = h.astype(np.clongdouble)
    vl = v.astype(np.clongdouble)
    num = np.einsum("ki,kl,li->i", vl.conj(), hl, vl).real
    den = np.einsum("ki,ki->i", vl.conj(), vl).real
    return (num / den).astype(float)


def spectral_decomposition(h, tol: float = DEFAULT_TOL) -> Spectrum:
    """Spectral decomposition of a Hermitian matrix.

    Raises:
        ValueError: if ``h`` is not square.
        NotHermitianError: if ``h`` is not Hermitian within ``tol``.
    """
    h = _check_hermitian(h, tol)
    w, v = np.linalg.eigh(h)
    w = _rayleigh_quotients(h, v)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    v = fix_phase(v)
    top = float(np.max(np.abs(w), initial=0.0))
    zero = np.abs(w) <= tol * top
    return Spectrum(w, v, zero)


def roundoff_floor(dim: int, top: float) -> float:
    """Eigenvalues at or below this are indistinguishable from zero in double precision."""
    return 16 * dim * np.finfo(float).eps * top


def _psd_spectrum(h, tol: float) -> Spectrum:
    spec = spectral_decomposition(h, tol)
    top = float(np.max(spec.eigenvalues, initial=0.0))
    low = float(np.min(spec.eigenvalues, initial=0.0))
    if low < -tol * max(top, 1.0):
        raise NotPositiveError(f"matrix has negative eigenvalue {low:.3e}")
    # negative round-off is folded into the zero set
    zero = spec.zero | (spec.eigenvalues <= tol * top)
    return Spectrum(spec.eigenvalues, spec.eigenvectors, zero)


def _binary_exponent(h: np.ndarray) -> int:
    """Power of two bringing an extreme-magnitude matrix near unit scale (0 otherwise)."""
    top = float(np.max(np.abs(h), initial=0.0))
    if top == 0.0 or 2.0**-100 <= top <= 2.0**100:
        return 0
    return int(np.frexp(top)[1])


def _ldexp(h: np.ndarray, k: int) -> np.ndarray:
    return np.ldexp(h.real, k) + 1j * np.ldexp(h.imag, k)


def _rescaled_power(fn, h, gamma: float, tol: float) -> np.ndarray:
    # scaling by a power of two is exact, so only under/overflow is affected
    h = as_matrix(h)
    k = _binary_exponent(h)
    if k == 0:
        return fn(h, gamma, tol)
    out = fn(_ldexp(h, -k), gamma, tol)
    with np.errstate(over="ignore", invalid="ignore"):
        out = out * np.exp2(k * gamma)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"power {gamma} of a matrix of scale 2**{k} is not representable")
    return out


def matrix_power(h, gamma: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Power of a positive semidefinite matrix on its support.

    Positive powers act on the whole spectrum; eigenvalues at the round-off
    level (see :func:`roundoff_floor`) are treated as exact zeros.  Negative
    and zero powers follow the Moore-Penrose convention: only the eigenvalues
    above ``tol * max eigenvalue`` are raised, the kernel is mapped to zero.
    ``matrix_power(h, 0)`` is therefore the support projector.  Matrices with entries beyond ``2**+-100`` are rescaled exactly by a power
    of two first; :class:`OverflowError` is raised when the result is not
    representable.
    """
    return _rescaled_power(_matrix_power, h, gamma, tol)


def _matrix_power(h, gamma: float, tol: float) -> np.ndarray:
    spec = _psd_spectrum(h, tol)
    if gamma > 0:
        v = spec.eigenvectors
        lam = spec.eigenvalues.copy()
        # fractional powers amplify round-off near zero (sqrt(1e-16) = 1e-8)
        lam[lam <= roundoff_floor(len(lam), float(np.max(lam, initial=0.0)))] = 0.0
        lam = lam**gamma
    else:
        keep = ~spec.zero
        v = spec.eigenvectors[:, keep]
        lam = spec.eigenvalues[keep] ** gamma
    out = (v * lam) @ dagger(v)
    return (out + dagger(out)) / 2


def sqrtm_psd(h, tol: float = DEFAULT_TOL) -> np.ndarray:
    return matrix_power(h, 0.5, tol)


def support_projector(h, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthogonal projector onto the range of a PSD matrix."""
    spec = _psd_spectrum(h, tol)
    v = spec.support()
    return v @ dagger(v)


def kernel_basis(h, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal columns spanning the kernel of a PSD matrix."""
    return _psd_spectrum(h, tol).kernel()


def rank(h, tol: float = DEFAULT_TOL) -> int:
    return _psd_spectrum(h, tol).rank


def pauli_coefficients(h) -> tuple[float, np.ndarray]:
    """Return ``(alpha, r)`` with ``h = alpha*I + r . sigma`` for a 2x2 Hermitian ``h``."""
    h = as_matrix(h)
    if h.shape != (2, 2):
        raise ValueError(f"Pauli expansion needs a 2x2 matrix, got {h.shape}")
    alpha = float(np.real(np.trace(h))) / 2
    r = np.array([float(np.real(np.trace(p @ h))) / 2 for p in PAULIS])
    return alpha, r


def bloch_operator(n) -> np.ndarray:
    """``n . sigma`` for a real 3-vector ``n``."""
    n = np.asarray(n, dtype=float)
    return n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z


def pauli_power(h, gamma: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Closed-form power of a 2x2 PSD matrix written as ``alpha I + beta n.sigma``.

    Uses ``lambda_pm = alpha +- beta`` (``lambda_-`` evaluated as
    ``det(h) / lambda_+``) and
    ``h**gamma = (l+**g + l-**g)/2 I + (l+**g - l-**g)/2 n.sigma``,
    with the same pseudo-inverse convention and rescaling as :func:`matrix_power`.
    """
    return _rescaled_power(_pauli_power, h, gamma, tol)


def _pauli_power(h, gamma: float, tol: float) -> np.ndarray:
    h = _check_hermitian(h, tol)
    if h.shape != (2, 2):
        raise ValueError(f"pauli_power needs a 2x2 matrix, got {h.shape}")
    alpha, r = pauli_coefficients(h)
    beta = float(np.linalg.norm(r))
    lam_plus = alpha + beta
    # det / lambda_+ avoids the cancellation in alpha - beta for small lambda_-
    hl = h.astype(np.clongdouble)
    det = float((hl[0, 0].real * hl[1, 1].real - hl[0, 1].real ** 2 - hl[0, 1].imag ** 2))
    lam_minus = det / lam_plus if lam_plus > 0 else alpha - beta
    if lam_minus < -tol * max(abs(lam_plus), 1.0):
        raise NotPositiveError(f"matrix has negative eigenvalue {lam_minus:.3e}")

    def pw(lam: float) -> float:
        if gamma > 0:
            return lam**gamma if lam > roundoff_floor(2, lam_plus) else 0.0
        return lam**gamma if lam > tol * lam_plus and lam > 0 else 0.0

    p_plus, p_minus = pw(lam_plus), pw(lam_minus)
    if beta == 0.0:
        return p_plus * np.eye(2, dtype=complex)
    n_sigma = bloch_operator(r / beta)
    return (p_plus + p_minus) / 2 * np.eye(2) + (p_plus - p_minus) / 2 * n_sigma


@dataclass(frozen=True)
class Svd:
    """Thin singular value decomposition ``T = sum_v s_v |f_v><e_v|``.

    ``left`` holds the vectors ``f_v`` as columns, ``right`` the vectors ``e_v``.
    Singular values at or below ``tol * s_max`` are dropped.
    """

    left: np.ndarray
    values: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.values) @ dagger(self.right)


def svd(t, tol: float = DEFAULT_TOL) -> Svd:
    t = as_matrix(t)
    rows, cols = t.shape
    if t.size == 0:
        return Svd(np.zeros((rows, 0), complex), np.zeros(0), np.zeros((cols, 0), complex))
    u, s, vh = np.linalg.svd(t, full_matrices=False)
    top = float(s[0]) if len(s) else 0.0
    keep = s > tol * top if top > 0 else np.zeros(len(s), bool)
    return Svd(u[:, keep], s[keep], dagger(vh)[:, keep])


def complete_basis(vectors: np.ndarray, dim: int, count: int | None = None,
                   tol: float = 1e-10) -> np.ndarray:
    """Extend orthonormal columns to ``count`` orthonormal columns in ``C^dim``.

    New vectors come from Gram-Schmidt over the standard basis in index order,
    so the result is deterministic.  ``count`` defaults to ``dim``.
    """
    count = dim if count is None else count
    basis = [np.asarray(v, dtype=complex) for v in np.asarray(vectors, dtype=complex).reshape(dim, -1).T]
    if len(basis) > count:
        raise ValueError("more input vectors than requested basis size")
    for i in range(dim):
        if len(basis) >= count:
            break
        w = np.zeros(dim, dtype=complex)
        w[i] = 1.0
        for _ in range(2):  # re-orthogonalise once for stability
            for b in basis:
                w = w - np.vdot(b, w) * b
        norm = np.linalg.norm(w)
        if norm > tol:
            basis.append(w / norm)
    if len(basis) < count:
        raise ValueError(f"cannot build {count} orthonormal vectors in dimension {dim}")
    return np.column_stack(basis) if basis else np.zeros((dim, 0), complex)


def is_psd(h, tol: float = DEFAULT_TOL) -> bool:
    try:
        _psd_spectrum(h, tol)
    except (NotHermitianError, NotPositiveError, ValueError):
        return False
    return True


def operator_norm(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))
