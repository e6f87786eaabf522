"""Biextension period matrices and the explicit height formula.

A period matrix has the block shape

    [ b | P_H | 0 ]
    [ c |  a  | 1 ]

with P_H of shape k x 2k.  Columns index an integral basis adapted to the
weight filtration (lowest weight first), rows a basis of F^0.
"""

from dataclasses import dataclass
import math

import numpy as np

TWO_PI_I = 2j * math.pi
DEFAULT_IM_TOL = 1e-9


class DegenerateCentralPeriods(ValueError):
    pass


class UnnormalizedThirdKind(ValueError):
    pass


class BasisChangeError(ValueError):
    pass


def _as_matrix(x, shape):
    arr = np.asarray(x, dtype=complex)
    return arr.reshape(shape)


@dataclass(frozen=True)
class BiextensionPeriodMatrix:
    P_H: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: complex
    # bottom-right entry; 1 for an untwisted biextension matrix
    corner_unit: complex = 1.0

    def __post_init__(self):
        P_H = np.asarray(self.P_H, dtype=complex)
        k = P_H.shape[0] if P_H.ndim == 2 else 0
        object.__setattr__(self, "P_H", P_H.reshape(k, 2 * k))
        object.__setattr__(self, "a", _as_matrix(self.a, (1, 2 * k)))
        object.__setattr__(self, "b", _as_matrix(self.b, (k, 1)))
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "corner_unit", complex(self.corner_unit))

    @property
    def k(self):
        return self.P_H.shape[0]

    @classmethod
    def from_full(cls, M):
        """Split a full (k+1) x (2k+2) matrix into blocks."""
        M = np.asarray(M, dtype=complex)
        k = M.shape[0] - 1
        if M.shape != (k + 1, 2 * k + 2):
            raise ValueError("period matrix must have shape (k+1, 2k+2), got %s" % (M.shape,))
        if k and np.any(M[:k, -1] != 0):
            raise ValueError("last column must vanish above the corner")
        return cls(P_H=M[:k, 1:-1], a=M[k, 1:-1], b=M[:k, 0], c=M[k, 0], corner_unit=M[k, -1])

    def full(self):
        k = self.k
        M = np.zeros((k + 1, 2 * k + 2), dtype=complex)
        M[:k, 0] = self.b[:, 0]
        M[:k, 1:-1] = self.P_H
        M[k, 0] = self.c
        M[k, 1:-1] = self.a[0]
        M[k, -1] = self.corner_unit
        return M

    def to_json(self):
        return {
            "k": self.k,
            "shape": list(self.full().shape),
            "matrix": [[[z.real, z.imag] for z in row] for row in self.full()],
        }

    @classmethod
    def from_json(cls, data):
        rows = [[complex(re, im) for re, im in row] for row in data["matrix"]]
        return cls.from_full(np.array(rows, dtype=complex).reshape(data["shape"]))


@dataclass(frozen=True)
class RankMBiextensionMatrix:
    P_H: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        P_H = np.asarray(self.P_H, dtype=complex)
        k = P_H.shape[0] if P_H.ndim == 2 else 0
        c = np.atleast_2d(np.asarray(self.c, dtype=complex))
        m = c.shape[0]
        if c.shape != (m, m):
            raise ValueError("corner block must be square")
        object.__setattr__(self, "P_H", P_H.reshape(k, 2 * k))
        object.__setattr__(self, "a", _as_matrix(self.a, (m, 2 * k)))
        object.__setattr__(self, "b", _as_matrix(self.b, (k, m)))
        object.__setattr__(self, "c", c)

    @property
    def k(self):
        return self.P_H.shape[0]

    @property
    def m(self):
        return self.c.shape[0]

    def full(self):
        k, m = self.k, self.m
        M = np.zeros((k + m, 2 * k + 2 * m), dtype=complex)
        M[:k, :m] = self.b
        M[:k, m:m + 2 * k] = self.P_H
        M[k:, :m] = self.c
        M[k:, m:m + 2 * k] = self.a
        M[k:, m + 2 * k:] = np.eye(m)
        return M


def _stacked(P_H):
    return np.vstack([P_H.imag, P_H.real])


def _solve_central(P_H, rhs):
    S = _stacked(P_H)
    if S.size == 0:
        return np.zeros((0, rhs.shape[1]))
    # rcond guard: a numerically singular system should not silently pass
    if np.linalg.cond(S) > 1e14:
        raise DegenerateCentralPeriods("degenerate central periods: stacked (Im P_H; Re P_H) is singular")
    try:
        return np.linalg.solve(S, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCentralPeriods("degenerate central periods") from exc


def _height_blocks(P_H, a, b, c):
    rhs = np.vstack([b.imag, b.real])
    correction = a.imag @ _solve_central(P_H, rhs) if P_H.size else 0.0
    return -2 * math.pi * (np.asarray(c).imag - correction)


def height(P):
    """Height of an untwisted biextension period matrix."""
    if abs(P.corner_unit - 1) > 1e-12:
        raise ValueError("height expects corner entry 1; twist the matrix first")
    h = _height_blocks(P.P_H, P.a, P.b, P.c)
    return float(np.asarray(h).reshape(-1)[0]) if np.ndim(h) else float(h)


def twist(P, j):
    """Multiply every entry by (2 pi i)^(-j)."""
    s = TWO_PI_I ** (-j)
    return BiextensionPeriodMatrix(P_H=P.P_H * s, a=P.a * s, b=P.b * s, c=P.c * s,
                                   corner_unit=P.corner_unit * s)


def height_of_lmhs_matrix(P_chi, im_tol=DEFAULT_IM_TOL):
    """Height of a limit period matrix whose last column ends in 2 pi i.

    The bottom central row (periods of the third-kind form) must be purely
    imaginary relative to the largest period.
    """
    if abs(P_chi.corner_unit - TWO_PI_I) > 1e-9 * (2 * math.pi):
        raise ValueError("LMHS matrix must have corner 2*pi*i in its last column")
    row = P_chi.a[0]
    if row.size:
        scale = max(np.max(np.abs(row)), np.max(np.abs(P_chi.P_H)) if P_chi.P_H.size else 0.0, 1.0)
        if np.max(np.abs(row.real)) > im_tol * scale:
            raise UnnormalizedThirdKind(
                "unnormalized third-kind differential: bottom periods have real part %.3e"
                % np.max(np.abs(row.real)))
    return height(twist(P_chi, 1))


def height_matrix_rank_m(P):
    """Entrywise height matrix and its total for a rank-m biextension."""
    H = np.asarray(_height_blocks(P.P_H, P.a, P.b, P.c), dtype=float).reshape(P.m, P.m)
    return H, float(H.sum())


def _check_unimodular(U):
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise BasisChangeError("U must be square")
    if not np.all(np.equal(np.mod(U, 1), 0)):
        raise BasisChangeError("U must have integer entries")
    det = round(np.linalg.det(U.astype(float)))
    if abs(det) != 1:
        raise BasisChangeError("U is not unimodular (det=%s)" % det)


def change_basis(P, U, V):
    """Period matrix of the same biextension after a change of bases.

    U (integer, acting on the lattice basis) and V (complex, acting on the
    F^0 basis) must be block lower triangular with diagonal blocks
    (1, GL_2k(Z), 1) and (GL_k(C), 1) respectively.  The new matrix is
    V P U^{-1}.
    """
    k = P.k
    n = 2 * k + 2
    U = np.asarray(U)
    V = np.asarray(V, dtype=complex)
    if U.shape != (n, n) or V.shape != (k + 1, k + 1):
        raise BasisChangeError("basis change shapes do not match k=%d" % k)
    _check_unimodular(U)
    if np.any(U[0, 1:] != 0) or np.any(U[1:-1, -1] != 0):
        raise BasisChangeError("U is not compatible with the weight filtration")
    if U[0, 0] != 1 or U[-1, -1] != 1:
        raise BasisChangeError("U must fix the graded pieces Z(1) and Z")
    if np.any(V[:k, k] != 0) or V[k, k] != 1:
        raise BasisChangeError("V is not compatible with the weight filtration")
    if k and abs(np.linalg.det(V[:k, :k])) < 1e-300:
        raise BasisChangeError("V is singular on F^0 H")
    Uinv = np.linalg.inv(U.astype(float))
    Uinv = np.rint(Uinv)
    M = V @ P.full() @ Uinv
    return BiextensionPeriodMatrix.from_full(M)


def random_period_matrix(rng, k, cond_range=(0.1, 10.0)):
    """Random period matrix whose Im P_H has singular values in cond_range."""
    lo, hi = cond_range
    if k == 0:
        P_H = np.zeros((0, 0))
    else:
        # stacked (Im; Re) = Q diag(s) R keeps every singular value in [lo, hi]
        Q, _ = np.linalg.qr(rng.normal(size=(2 * k, 2 * k)))
        R, _ = np.linalg.qr(rng.normal(size=(2 * k, 2 * k)))
        S = Q @ np.diag(rng.uniform(lo, hi, size=2 * k)) @ R
        P_H = S[k:] + 1j * S[:k]
    a = rng.normal(size=(1, 2 * k)) + 1j * rng.normal(size=(1, 2 * k))
    b = rng.normal(size=(k, 1)) + 1j * rng.normal(size=(k, 1))
    c = complex(rng.normal(), rng.normal())
    return BiextensionPeriodMatrix(P_H=P_H, a=a, b=b, c=c)


def random_basis_change(rng, k, max_entry=1):
    """Random filtration-compatible pair (U, V)."""
    n = 2 * k + 2
    U = np.eye(n, dtype=np.int64)
    if k:
        M = np.eye(2 * k, dtype=np.int64)
        for _ in range(2 * k):
            i, j = rng.choice(2 * k, size=2, replace=False)
            M[i] += int(rng.integers(-max_entry, max_entry + 1)) * M[j]
        if rng.random() < 0.5:
            M[0] *= -1
        U[1:-1, 1:-1] = M
        U[1:-1, 0] = rng.integers(-max_entry, max_entry + 1, size=2 * k)
        U[-1, 1:-1] = rng.integers(-max_entry, max_entry + 1, size=2 * k)
    U[-1, 0] = int(rng.integers(-max_entry, max_entry + 1))
    V = np.eye(k + 1, dtype=complex)
    if k:
        G = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        while abs(np.linalg.det(G)) < 0.1:
            G = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        V[:k, :k] = G
        V[k, :k] = rng.normal(size=k) + 1j * rng.normal(size=k)
    return U, V
