"""Dense operator algebra on tensor products of q-level sites.

Operators live on a :class:`~decorr.lattice.Region`; the tensor leg of the
k-th site in canonical (sorted) order is the k-th most significant digit of
the matrix index, so a basis state |d_0 d_1 ... d_{m-1}> has index
sum_k d_k q^(m-1-k).

Eigen-solves dispatch on dtype: complex128 goes to LAPACK, clongdouble to a
cyclic complex Jacobi solver (LAPACK has no extended-precision path).  The
Jacobi route exists because inclusion-exclusion weights in the cluster
expansion cancel to ~1e-12 of the summand scale, which plain double
arithmetic cannot resolve; see :mod:`decorr.expansion`.

Matrix exponentials split the matrix into its exact zero-pattern blocks
first.  The split is decided by entries being exactly zero, so it never
changes the result, but it preserves sparsity-protected exact zeros in the
output (a dense rotation-based solver would otherwise pollute them) and it is
much faster for number-conserving Hamiltonians.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Region

MAX_DENSE_SITES = 14  # hard cap; q^m matrices beyond this are not materialized

HERMITICITY_TOL = 1e-10  # absolute, on max |M - M^dagger|


class DimensionError(ValueError):
    """A requested dense object exceeds the |region| <= MAX_DENSE_SITES cap."""


def _check_dense(n_sites: int):
    if n_sites > MAX_DENSE_SITES:
        raise DimensionError(
            f"dense operator on {n_sites} sites exceeds the cap of {MAX_DENSE_SITES}"
        )


def _work_dtype(dtype) -> np.dtype:
    if dtype in (np.longdouble, np.clongdouble):
        return np.dtype(np.clongdouble)
    return np.dtype(np.complex128)


@dataclass(frozen=True)
class GlobalOperator:
    """A dense operator together with the region and local dimension it acts on."""

    region: Region
    q: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = self.q ** len(self.region)
        if self.matrix.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match q^|region| = {dim}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _compatible(self, other: "GlobalOperator"):
        if self.region != other.region or self.q != other.q:
            raise ValueError("operators live on different regions")

    def __matmul__(self, other: "GlobalOperator") -> "GlobalOperator":
        self._compatible(other)
        return GlobalOperator(self.region, self.q, self.matrix @ other.matrix)

    def __add__(self, other: "GlobalOperator") -> "GlobalOperator":
        self._compatible(other)
        return GlobalOperator(self.region, self.q, self.matrix + other.matrix)

    def __sub__(self, other: "GlobalOperator") -> "GlobalOperator":
        self._compatible(other)
        return GlobalOperator(self.region, self.q, self.matrix - other.matrix)

    def __mul__(self, scalar) -> "GlobalOperator":
        return GlobalOperator(self.region, self.q, self.matrix * scalar)

    __rmul__ = __mul__

    def dagger(self) -> "GlobalOperator":
        return GlobalOperator(self.region, self.q, self.matrix.conj().T)


def _matrix_of(op) -> np.ndarray:
    return op.matrix if isinstance(op, GlobalOperator) else np.asarray(op)


def embed(local: np.ndarray, support: Region, target: Region, q: int) -> GlobalOperator:
    """Embed an operator on ``support`` into ``target`` as local (x) identity.

    ``local`` must be indexed by the canonical order of ``support``; the
    result is indexed by the canonical order of ``target``.
    """
    if not support.issubset(target):
        raise ValueError("support is not contained in the target region")
    _check_dense(len(target))
    s, m = len(support), len(target)
    local = np.asarray(local)
    if local.shape != (q**s, q**s):
        raise ValueError(f"local operator shape {local.shape} != q^|support|")
    dtype = _work_dtype(local.dtype)
    local = local.astype(dtype, copy=False)
    rest = [site for site in target if site not in support]
    full = np.kron(local, np.eye(q ** len(rest), dtype=dtype))
    # row legs of `full` are ordered [support..., rest...]; permute to target order
    src_order = list(support) + rest
    src_pos = {site: i for i, site in enumerate(src_order)}
    perm = [src_pos[site] for site in target]
    tensor = full.reshape([q] * (2 * m))
    tensor = tensor.transpose(perm + [m + p for p in perm])
    return GlobalOperator(target, q, np.ascontiguousarray(tensor.reshape(q**m, q**m)))


# ---------------------------------------------------------------------------
# Hermitian eigen-machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Eigensystem:
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def _require_hermitian(M: np.ndarray, tol: float) -> np.ndarray:
    dev = np.max(np.abs(M - M.conj().T)) if M.size else 0.0
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian: max deviation {dev:.3e} > {tol:.1e}")
    return (M + M.conj().T) / 2


def _jacobi_eigh(A: np.ndarray, max_sweeps: int = 80):
    """Cyclic complex Jacobi diagonalization in extended precision.

    Runs entirely in clongdouble.  Each rotation annihilates one off-diagonal
    pair; sweeps repeat until the off-diagonal Frobenius mass falls below a
    few units of longdouble epsilon relative to the matrix norm.  Quadratic
    convergence makes ~6-10 sweeps typical; the iteration cap is a safety
    net, not a tuning knob.
    """
    A = np.array(A, dtype=np.clongdouble)
    n = A.shape[0]
    V = np.eye(n, dtype=np.clongdouble)
    eps = np.finfo(np.longdouble).eps
    for _ in range(max_sweeps):
        offd = A - np.diag(np.diag(A))
        off = np.sqrt(np.abs(offd * offd.conj()).sum().real)
        nrm = np.sqrt(np.abs(A * A.conj()).sum().real)
        if off == 0 or off <= 4 * eps * nrm:
            break
        for p in range(n - 1):
            for q_ in range(p + 1, n):
                apq = A[p, q_]
                a = np.abs(apq)
                if a == 0:
                    continue
                phase = apq / a
                app, aqq = A[p, p].real, A[q_, q_].real
                tau = (aqq - app) / (2 * a)
                t = (1 if tau >= 0 else -1) / (np.abs(tau) + np.sqrt(1 + tau * tau))
                c = 1 / np.sqrt(1 + t * t)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q_].copy()
                A[:, p] = c * Ap - s * np.conj(phase) * Aq
                A[:, q_] = s * phase * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q_, :].copy()
                A[p, :] = c * Ap - s * phase * Aq
                A[q_, :] = s * np.conj(phase) * Ap + c * Aq
                Vp, Vq = V[:, p].copy(), V[:, q_].copy()
                V[:, p] = c * Vp - s * np.conj(phase) * Vq
                V[:, q_] = s * phase * Vp + c * Vq
    w = np.diag(A).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def herm_eig(M, tol: float = HERMITICITY_TOL) -> Eigensystem:
    """Full eigensystem of a Hermitian matrix (symmetrized before solving).

    complex128 input uses LAPACK; clongdouble input uses the Jacobi solver
    and keeps extended precision throughout.
    """
    A = _matrix_of(M)
    A = _require_hermitian(A, tol)
    if A.dtype in (np.longdouble, np.clongdouble):
        w, V = _jacobi_eigh(np.asarray(A, dtype=np.clongdouble))
    else:
        w, V = np.linalg.eigh(A)
    return Eigensystem(eigenvalues=w, eigenvectors=V)


def _zero_pattern_components(A: np.ndarray) -> list[np.ndarray]:
    """Index groups of the connected components of the exact nonzero pattern."""
    n = A.shape[0]
    pattern = A != 0
    pattern |= pattern.T
    unvisited = np.ones(n, dtype=bool)
    comps = []
    for start in range(n):
        if not unvisited[start]:
            continue
        comp = [start]
        unvisited[start] = False
        frontier = [start]
        while frontier:
            i = frontier.pop()
            hits = np.nonzero(pattern[i] & unvisited)[0]
            if hits.size:
                unvisited[hits] = False
                comp.extend(hits.tolist())
                frontier.extend(hits.tolist())
        comps.append(np.array(sorted(comp)))
    return comps


def herm_exp(M, s, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """exp(s * M) for Hermitian M, via blockwise eigendecomposition.

    The matrix is first split into the connected components of its exact
    zero pattern (an exact operation -- nothing is thresholded), then each
    block is diagonalized with the dtype-appropriate solver.  Entries
    coupling different blocks stay exactly zero in the output.
    """
    A = _matrix_of(M)
    dtype = _work_dtype(A.dtype)
    A = _require_hermitian(A.astype(dtype, copy=False), tol)
    out = np.zeros_like(A)
    s = np.clongdouble(s) if dtype == np.clongdouble else complex(s)
    for idx in _zero_pattern_components(A):
        if idx.size == 1:
            i = idx[0]
            out[i, i] = np.exp(s * A[i, i].real)
            continue
        block = A[np.ix_(idx, idx)]
        if dtype == np.clongdouble:
            w, V = _jacobi_eigh(block)
        else:
            w, V = np.linalg.eigh(block)
        eb = (V * np.exp(s * w)) @ V.conj().T
        out[np.ix_(idx, idx)] = eb
    return out


def op_norm(M) -> float:
    """Operator (largest singular value) norm."""
    A = np.asarray(_matrix_of(M), dtype=np.complex128)
    return float(np.linalg.norm(A, 2))


def trace(M) -> complex:
    return complex(np.trace(_matrix_of(M)))
