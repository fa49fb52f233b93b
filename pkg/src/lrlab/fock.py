"""Fermionic operators on the Fock space of a finite set of lattice sites.

Basis convention: for a context (ordered tuple of sites) of length n, the
basis index is an n-bit integer and mode j of the context is bit n-1-j.
a_x carries the sign (-1)^(number of occupied modes before x), so that
|s> = a*_{x_1} ... a*_{x_p} |0> with x_1 < ... < x_p in context order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

Site = tuple[int, ...]

DENSE_NORM_LIMIT = 4096
PARITY_TOL = 1e-12


def _as_site(x) -> Site:
    if isinstance(x, (int, np.integer)):
        return (int(x),)
    return tuple(int(c) for c in x)


def _as_ctx(ctx: Iterable) -> tuple[Site, ...]:
    sites = tuple(_as_site(x) for x in ctx)
    if len(set(sites)) != len(sites):
        raise ValueError("context contains duplicate sites")
    return sites


@lru_cache(maxsize=32)
def occupations(n: int) -> np.ndarray:
    """(2^n, n) array of 0/1 occupations, column j = mode j."""
    idx = np.arange(2**n)[:, None]
    shifts = np.arange(n - 1, -1, -1)[None, :]
    out = (idx >> shifts) & 1
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def particle_numbers(n: int) -> np.ndarray:
    out = occupations(n).sum(axis=1)
    out.setflags(write=False)
    return out


class FockOperator:
    """Dense operator on the Fock space of an ordered context of sites.

    Treated as immutable: arithmetic always returns new objects.
    """

    __slots__ = ("matrix", "sites", "support", "_cache")

    def __init__(self, matrix, sites, support=None):
        self.sites = _as_ctx(sites)
        M = np.asarray(matrix, dtype=complex)
        dim = 2 ** len(self.sites)
        if M.shape != (dim, dim):
            raise ValueError(f"matrix shape {M.shape} does not match 2^{len(self.sites)}")
        self.matrix = M
        sup = frozenset(self.sites) if support is None else frozenset(_as_site(x) for x in support)
        if not sup <= set(self.sites):
            raise ValueError("support must be contained in the context")
        self.support = sup
        self._cache = {}

    @property
    def n_modes(self) -> int:
        return len(self.sites)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"FockOperator(n_modes={self.n_modes}, support={sorted(self.support)})"

    # context handling

    def embed(self, ctx) -> "FockOperator":
        ctx = _as_ctx(ctx)
        if ctx == self.sites:
            return self
        missing = set(self.sites) - set(ctx)
        if missing:
            raise ValueError(f"sites {sorted(missing)} are not in the target context")
        G, eps = _embedding_tables(self.sites, ctx)
        out = np.zeros((2 ** len(ctx),) * 2, dtype=complex)
        out[G[:, :, None], G[:, None, :]] = self.matrix[None, :, :] * (eps[:, :, None] * eps[:, None, :])
        return FockOperator(out, ctx, self.support)

    def localized(self) -> "FockOperator":
        """The same element written on the context of its support only."""
        sub = tuple(x for x in self.sites if x in self.support)
        if sub == self.sites:
            return self
        G, _ = _embedding_tables(sub, self.sites)
        rows = G[0]
        return FockOperator(self.matrix[np.ix_(rows, rows)], sub, self.support)

    # algebra

    def dag(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T, self.sites, self.support)

    def __add__(self, other):
        if isinstance(other, FockOperator):
            A, B = _align(self, other)
            return FockOperator(A.matrix + B.matrix, A.sites, A.support | B.support)
        if np.isscalar(other):
            if other == 0:
                return self
            return FockOperator(self.matrix + other * np.eye(self.dim), self.sites, self.support)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return FockOperator(-self.matrix, self.sites, self.support)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        if np.isscalar(c):
            return FockOperator(c * self.matrix, self.sites, self.support)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __matmul__(self, other):
        A, B = _align(self, other)
        return FockOperator(A.matrix @ B.matrix, A.sites, A.support | B.support)

    def norm(self) -> float:
        return spectral_norm(self)

    def is_hermitian(self, atol: float = 1e-13) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= atol)


def _align(A: FockOperator, B: FockOperator):
    if A.sites == B.sites:
        return A, B
    ctx = tuple(sorted(set(A.sites) | set(B.sites)))
    return A.embed(ctx), B.embed(ctx)


def union_context(*ops_or_sites) -> tuple[Site, ...]:
    sites = set()
    for item in ops_or_sites:
        sites |= set(item.sites) if isinstance(item, FockOperator) else {_as_site(x) for x in item}
    return tuple(sorted(sites))


@lru_cache(maxsize=512)
def _embedding_tables(A: tuple, B: tuple):
    """Index and sign tables for the inclusion of the A-modes into B.

    Returns (G, eps) of shape (2^(nB-nA), 2^nA): G[r, s] is the B-basis
    index whose A-part is s and whose remaining part is r; eps is the sign
    of the permutation taking the occupied modes from B-order to
    (A-order of the A-modes, then B-order of the rest).
    """
    nA, nB = len(A), len(B)
    posB = {x: i for i, x in enumerate(B)}
    posA = [posB[x] for x in A]
    inA = set(A)
    rest = [i for i, x in enumerate(B) if x not in inA]
    occ = occupations(nB)
    rank = np.empty(nB, dtype=int)
    for i, p in enumerate(posA):
        rank[p] = i
    for j, p in enumerate(rest):
        rank[p] = nA + j
    inv = np.zeros(2**nB, dtype=np.int64)
    for p in range(nB):
        for q in range(p + 1, nB):
            if rank[p] > rank[q]:
                inv += occ[:, p] & occ[:, q]
    sign = 1 - 2 * (inv & 1)
    s_idx = occ[:, posA] @ (1 << np.arange(nA - 1, -1, -1)) if nA else np.zeros(2**nB, dtype=np.int64)
    nR = nB - nA
    r_idx = occ[:, rest] @ (1 << np.arange(nR - 1, -1, -1)) if nR else np.zeros(2**nB, dtype=np.int64)
    G = np.empty((2**nR, 2**nA), dtype=np.int64)
    eps = np.empty((2**nR, 2**nA), dtype=float)
    G[r_idx, s_idx] = np.arange(2**nB)
    eps[r_idx, s_idx] = sign
    G.setflags(write=False)
    eps.setflags(write=False)
    return G, eps


def embed_sum(terms: Sequence[FockOperator], ctx) -> FockOperator:
    """Sum of operators embedded into ctx, accumulated in place."""
    ctx = _as_ctx(ctx)
    out = np.zeros((2 ** len(ctx),) * 2, dtype=complex)
    support = set()
    for T in terms:
        support |= T.support
        if T.sites == ctx:
            out += T.matrix
            continue
        G, eps = _embedding_tables(T.sites, ctx)
        out[G[:, :, None], G[:, None, :]] += T.matrix[None, :, :] * (eps[:, :, None] * eps[:, None, :])
    return FockOperator(out, ctx, support)


# constructors


def annihilation(x, ctx) -> FockOperator:
    ctx = _as_ctx(ctx)
    x = _as_site(x)
    if x not in ctx:
        raise ValueError(f"site {x} not in context")
    n = len(ctx)
    j = ctx.index(x)
    occ = occupations(n)
    src = np.nonzero(occ[:, j])[0]
    dst = src ^ (1 << (n - 1 - j))
    sign = 1 - 2 * (occ[src, :j].sum(axis=1) & 1)
    M = np.zeros((2**n, 2**n), dtype=complex)
    M[dst, src] = sign
    return FockOperator(M, ctx, {x})


def creation(x, ctx) -> FockOperator:
    return annihilation(x, ctx).dag()


def number_operator(region, ctx) -> FockOperator:
    ctx = _as_ctx(ctx)
    region = [_as_site(x) for x in region]
    if not set(region) <= set(ctx):
        raise ValueError("region must lie in the context")
    cols = [ctx.index(x) for x in region]
    diag = occupations(len(ctx))[:, cols].sum(axis=1).astype(complex)
    return FockOperator(np.diag(diag), ctx, set(region))


def identity(ctx) -> FockOperator:
    ctx = _as_ctx(ctx)
    return FockOperator(np.eye(2 ** len(ctx), dtype=complex), ctx, ())


def zero(ctx) -> FockOperator:
    ctx = _as_ctx(ctx)
    return FockOperator(np.zeros((2 ** len(ctx),) * 2, dtype=complex), ctx, ())


def random_operator(sites, rng: np.random.Generator, parity: str | None = None, hermitian: bool = False) -> FockOperator:
    """Gaussian random operator on `sites`, optionally with fixed parity."""
    ctx = _as_ctx(sites)
    dim = 2 ** len(ctx)
    M = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2 * dim)
    if hermitian:
        M = (M + M.conj().T) / 2
    if parity is not None:
        N = particle_numbers(len(ctx))
        odd = ((N[:, None] - N[None, :]) & 1).astype(bool)
        if parity == "even":
            M[odd] = 0
        elif parity == "odd":
            M[~odd] = 0
        else:
            raise ValueError("parity must be 'even', 'odd' or None")
    return FockOperator(M, ctx)


# norms


def _gram_top(S: np.ndarray) -> float:
    """Largest singular value of a (small) dense matrix via its Gram matrix."""
    if S.shape[0] < S.shape[1]:
        S = S.conj().T
    G = S.conj().T @ S
    n = G.shape[0]
    if n > 256:
        lam = sla.eigh(G, eigvals_only=True, subset_by_index=[n - 1, n - 1], driver="evr")[0]
    else:
        lam = np.linalg.eigvalsh(G)[-1]
    return float(np.sqrt(max(lam, 0.0)))


def _lanczos_top(S: np.ndarray) -> float | None:
    """Top singular value via Lanczos on S*S, deterministic start vector."""
    n = S.shape[1]
    op = LinearOperator((n, n), matvec=lambda v: S.conj().T @ (S @ v), dtype=complex)
    try:
        lam = eigsh(op, k=1, which="LA", tol=0, v0=np.ones(n, dtype=complex), return_eigenvectors=False)[0]
    except ArpackNoConvergence:
        return None
    return float(np.sqrt(max(lam, 0.0)))


def _matrix_norm(M: np.ndarray) -> float:
    rows, cols = np.nonzero(M)
    if rows.size == 0:
        return 0.0
    n_r, n_c = M.shape
    if rows.size == n_r * n_c:
        blocks = [(np.arange(n_r), np.arange(n_c))]
    else:
        adj = coo_matrix((np.ones(rows.size), (rows, n_r + cols)), shape=(n_r + n_c,) * 2)
        n_comp, labels = connected_components(adj, directed=False)
        r_lab, c_lab = labels[:n_r], labels[n_r:]
        blocks = []
        for lab in np.unique(labels[n_r + cols]):
            blocks.append((np.nonzero(r_lab == lab)[0], np.nonzero(c_lab == lab)[0]))
    best = 0.0
    for r, c in blocks:
        S = M[np.ix_(r, c)]
        if min(S.shape) <= DENSE_NORM_LIMIT:
            val = _gram_top(S)
        else:
            val = _lanczos_top(S)
            if val is None:
                val = float(np.linalg.svd(S, compute_uv=False)[0])
        best = max(best, val)
    return best


def spectral_norm(B) -> float:
    M = B.matrix if isinstance(B, FockOperator) else np.asarray(B)
    return _matrix_norm(M)


def max_entry(B) -> float:
    M = B.matrix if isinstance(B, FockOperator) else np.asarray(B)
    return float(np.max(np.abs(M), initial=0.0))


# commutators


def commutator(B1: FockOperator, B0: FockOperator) -> FockOperator:
    A, B = _align(B1, B0)
    return FockOperator(A.matrix @ B.matrix - B.matrix @ A.matrix, A.sites, A.support | B.support)


def multicommutator(ops: Sequence[FockOperator]) -> FockOperator:
    """[B_k, [B_{k-1}, ..., [B_1, B_0]...]] for ops = (B_k, ..., B_0)."""
    ops = list(ops)
    if len(ops) < 2:
        raise ValueError("need at least two operators")
    out = ops[-1]
    for B in reversed(ops[:-1]):
        out = commutator(B, out)
    return out


# parity and gauge


@dataclass(frozen=True)
class Parity:
    tag: str
    gauge_invariant: bool


def gauge_transform(B: FockOperator, theta: float) -> FockOperator:
    N = particle_numbers(B.n_modes)
    phase = np.exp(1j * theta * (N[:, None] - N[None, :]))
    return FockOperator(phase * B.matrix, B.sites, B.support)


def parity(B: FockOperator, tol: float = PARITY_TOL) -> Parity:
    scale = max(1.0, max_entry(B))
    flipped = gauge_transform(B, np.pi).matrix
    if max_entry(flipped - B.matrix) <= tol * scale:
        tag = "Even"
    elif max_entry(flipped + B.matrix) <= tol * scale:
        tag = "Odd"
    else:
        tag = "Neither"
    gauge = tag == "Even" and all(
        max_entry(gauge_transform(B, th).matrix - B.matrix) <= tol * scale
        for th in np.linspace(0, 2 * np.pi, 17)[1:-1]
    )
    return Parity(tag, gauge)


# translations


def shift_site(y, x) -> Site:
    return tuple(a + b for a, b in zip(_as_site(y), _as_site(x)))


def translate(B: FockOperator, x, ctx) -> FockOperator:
    """The translation automorphism a_y -> a_{y+x}, written on ctx."""
    ctx = _as_ctx(ctx)
    x = _as_site(x)
    local = B.localized()
    moved = tuple(shift_site(y, x) for y in local.sites)
    if not set(moved) <= set(ctx):
        raise ValueError("translated support leaves the target context")
    shifted = FockOperator(local.matrix, moved, {shift_site(y, x) for y in local.support})
    return shifted.embed(ctx)
