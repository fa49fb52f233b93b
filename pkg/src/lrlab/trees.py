"""Labeled trees built by attaching vertex k to an earlier vertex, and the
cluster sums that run over them.

A tree on {0..k} is stored through its parent map P(j) < j for j = 1..k.
Every such map is a tree, so T_{k+1} has exactly k! elements.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .lattice import DecayFunction, decay_sequences, shell_sum_full, shell_sum_full_tail, sup_norm

MAX_K = 9
DEFAULT_EXTRA = 48

_sequence = lru_cache(maxsize=256)(decay_sequences)


@dataclass(frozen=True)
class Tree:
    k: int
    parent: tuple[int, ...]  # parent[j-1] = P(j)

    def __post_init__(self):
        if len(self.parent) != self.k:
            raise ValueError("parent map must have length k")
        for j, p in enumerate(self.parent, start=1):
            if not 0 <= p < j:
                raise ValueError(f"P({j}) = {p} violates P(j) < j")

    @property
    def bonds(self) -> list[tuple[int, int]]:
        return [(p, j) for j, p in enumerate(self.parent, start=1)]

    def P(self, j: int) -> int:
        return self.parent[j - 1]


def enumerate_trees(k: int, max_k: int = MAX_K) -> list[Tree]:
    """All of T_{k+1}, in the order of the recursive construction."""
    if k < 1:
        raise ValueError("k must be positive")
    if k > max_k:
        raise ValueError(f"k = {k} exceeds the enumeration guard {max_k}")
    trees = [(0,)]
    for n in range(2, k + 1):
        trees = [T + (j,) for j in range(n) for T in trees]
    return [Tree(k, T) for T in trees]


def degrees(T: Tree) -> tuple[int, ...]:
    deg = [0] * (T.k + 1)
    for a, b in T.bonds:
        deg[a] += 1
        deg[b] += 1
    return tuple(deg)


def degree_factorial(T: Tree) -> int:
    return math.prod(math.factorial(g) for g in degrees(T))


def code(T: Tree) -> tuple[int, ...]:
    """(P(2), ..., P(k)); empty for k = 1."""
    return T.parent[1:]


def count_by_degree(k: int, d: Sequence[int]) -> tuple[int, float]:
    d = tuple(int(v) for v in d)
    if len(d) != k + 1 or min(d) < 1:
        raise ValueError("need k+1 degrees, each at least 1")
    bound = math.factorial(k - 1) / math.prod(math.factorial(v - 1) for v in d)
    if sum(d) != 2 * k:
        return 0, bound
    exact = sum(1 for T in enumerate_trees(k) if degrees(T) == d)
    return exact, bound


def composition_count(k: int) -> tuple[int, int]:
    """#{d in N^{k+1} : sum d = 2k} and the bound 4^k."""
    if not 1 <= k <= 12:
        raise ValueError("k must lie in 1..12")
    return math.comb(2 * k - 1, k), 4**k


def _boxes_meet(n1: int, x1, n2: int, x2) -> bool:
    return sup_norm(np.subtract(x1, x2)) <= n1 + n2


def kappa(T: Tree, boxes: Sequence[tuple[int, Sequence[int]]]) -> int:
    if len(boxes) != T.k + 1:
        raise ValueError("need k+1 boxes")
    for p, j in T.bonds:
        if not _boxes_meet(boxes[j][0], boxes[j][1], boxes[p][0], boxes[p][1]):
            return 0
    return 1


def monotone_maps(l: int, k: int) -> list[dict[int, int]]:
    """Strictly increasing maps {l..k} -> {1..k}."""
    if not 1 <= l <= k:
        raise ValueError("need 1 <= l <= k")
    dom = range(l, k + 1)
    return [dict(zip(dom, img)) for img in itertools.combinations(range(1, k + 1), k - l + 1)]


def _cluster_sum(T: Tree, image: frozenset, m, x, F: DecayFunction, N: int) -> float:
    """sum over n_j > m_j (j in image), n_j = m_j otherwise, of
    kappa_T({(n_j, x_j)}) prod_{j in image} G(n_j, m_j).

    The kappa factor couples the n_j only along bonds, so the sum is a
    tree contraction.  Each free coordinate carries states m_j+1..N and one
    extra state for all n_j > N, weighted by the tail majorant and treated
    as meeting every neighbour (kappa is monotone in each n_j).
    """
    k = T.k
    radii, weights = [], []
    for j in range(k + 1):
        if j in image:
            r = np.arange(m[j] + 1, N + 1)
            w = np.array([shell_sum_full(F, int(n), int(m[j])) for n in r])
            radii.append(np.append(r, np.iinfo(np.int64).max // 4))
            weights.append(np.append(w, shell_sum_full_tail(F, int(m[j]), N)))
        else:
            radii.append(np.array([m[j]]))
            weights.append(np.ones(1))
    msg = [w.copy() for w in weights]
    for j in range(k, 0, -1):
        p = T.P(j)
        dist = sup_norm(np.subtract(x[j], x[p]))
        meet = (radii[j][:, None] + radii[p][None, :]) >= dist
        msg[p] = msg[p] * (msg[j] @ meet)
    return float(np.sum(msg[0]))


def remainder_R(
    T: Tree,
    alpha: float,
    s: Sequence[float],
    m: Sequence[int],
    x: Sequence,
    F: DecayFunction,
    D: float,
    N: int | None = None,
) -> float:
    """Upper bound on the remainder coefficient of the multi-commutator bound.

    s holds s_1..s_k, m and x hold the radii and centres for j = 0..k.  The
    sum over (l, sigma) runs over the images of sigma, i.e. the nonempty
    subsets of {1..k}.
    """
    k = T.k
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if len(s) != k or len(m) != k + 1 or len(x) != k + 1:
        raise ValueError("need k times and k+1 radii and sites")
    if alpha == 0:
        return 0.0
    N = max(m) + DEFAULT_EXTRA if N is None else int(N)
    if N <= max(m):
        raise ValueError("truncation must exceed every radius")
    weight = [2 * alpha * abs(sj) * math.exp(4 * D * alpha * abs(sj)) for sj in s]
    total = 0.0
    for size in range(1, k + 1):
        for img in itertools.combinations(range(1, k + 1), size):
            pre = math.prod(weight[j - 1] for j in img)
            if pre == 0.0:
                continue
            total += pre * _cluster_sum(T, frozenset(img), m, x, F, N)
    return total


def _bond_factors(T: Tree, x, fn) -> float:
    deg = degrees(T)
    return math.prod(fn(math.dist(x[a], x[b]), max(deg[a], deg[b])) for a, b in T.bonds)


def remainder_bound_poly(T: Tree, alpha, s, m, x, F: DecayFunction, D: float, varsigma: float | None = None) -> float:
    """Closed-form majorant of remainder_R under polynomial shell decay."""
    if F.kind != "polynomial":
        raise ValueError("polynomial bound needs a polynomial decay function")
    if alpha == 0:
        return 0.0
    k, d = T.k, F.d
    seqs = {mj: _sequence(F, mj, mj + 1, varsigma) for mj in set(m)}
    vs = seqs[m[0]].varsigma
    weight = [2 * alpha * seqs[m[j]].l1_norm * abs(s[j - 1]) * math.exp(4 * D * abs(s[j - 1]) * alpha) for j in range(1, k + 1)]
    free = [(1.0 + mj) ** vs for mj in m]
    total = 0.0
    for size in range(1, k + 1):
        for img in itertools.combinations(range(1, k + 1), size):
            rest = math.prod(free[j] for j in range(k + 1) if j not in img)
            total += math.prod(weight[j - 1] for j in img) * rest
    bonds = _bond_factors(T, x, lambda r, g: (1.0 + r) ** (-vs / g))
    return d ** (vs * k / 2) * total * bonds


def remainder_bound_exp(T: Tree, alpha, s, m, x, F: DecayFunction, D: float) -> float:
    """Closed-form majorant of remainder_R under exponential shell decay."""
    if F.kind != "exponential":
        raise ValueError("exponential bound needs an exponential decay function")
    if alpha == 0:
        return 0.0
    k, d = T.k, F.d
    vs = F.sigma
    seqs = {mj: _sequence(F, mj, mj + 1) for mj in set(m)}
    q = 2 * alpha / math.expm1(vs)
    weight = [
        q * seqs[m[j]].constant * abs(s[j - 1]) * math.exp(4 * D * abs(s[j - 1]) * alpha - vs * m[j])
        for j in range(1, k + 1)
    ]
    free = [math.exp(vs * mj) for mj in m]
    total = 0.0
    for size in range(1, k + 1):
        for img in itertools.combinations(range(1, k + 1), size):
            rest = math.prod(free[j] for j in range(k + 1) if j not in img)
            total += math.prod(weight[j - 1] for j in img) * rest
    bonds = _bond_factors(T, x, lambda r, g: math.exp(-vs * r / (math.sqrt(d) * g)))
    return total * bonds


# tree sums weighted by bond decay


def lattice_exp_sum(a: float, d: int) -> float:
    """sum_{x in Z^d} exp(-a |x|), an upper bound accurate to ~1e-15 relative."""
    if a <= 0:
        raise ValueError("need a > 0")
    if d == 1:
        q = math.exp(-a)
        return (1 + q) / (1 - q)
    if d != 2:
        raise ValueError("only d <= 2 is supported")
    R = int(min(max(40.0 / a, 8), 4000))
    ax = np.arange(-R, R + 1, dtype=float)
    inner = float(np.sum(np.exp(-a * np.hypot(ax[:, None], ax[None, :]))))
    # |x| >= |x|_inf = n on the shell of radius n, which has 8n sites
    q = math.exp(-a)
    tail = 8 * q ** (R + 1) * ((R + 1) - R * q) / (1 - q) ** 2
    return inner + tail


def proposition_constant(d: int, varsigma: float) -> float:
    """D = 4 e^2 e^{2d} S_d with S_d = (1 + 2d/varsigma)^d.

    Uses sum_x exp(-varsigma |x| / (sqrt(d) g)) <= (1 + 2dg/varsigma)^d
    <= S_d g^d and g^g <= e^g g!.
    """
    S = (1.0 + 2.0 * d / varsigma) ** d
    return 4 * math.e**2 * math.exp(2 * d) * S


def stirling_bounds(g: int) -> tuple[float, float, float]:
    """(log lower, log g!, log upper) for the Stirling sandwich."""
    base = g * math.log(g) - g + 0.5 * math.log(2 * math.pi * g)
    return base + 1.0 / (12 * g + 1), math.lgamma(g + 1), base + 1.0 / (12 * g)


@dataclass
class TreeSumReport:
    k: int
    d: int
    varsigma: float
    lhs: float
    rhs: float
    D: float
    sum_degree_factorial: int
    degree_factorial_bound: float
    per_degree: dict = field(default_factory=dict, repr=False)

    @property
    def margin(self) -> float:
        return (self.rhs - self.lhs) / self.rhs

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs and self.sum_degree_factorial <= self.degree_factorial_bound


def tree_sum_bound_check(k: int, d: int, varsigma: float) -> TreeSumReport:
    """LHS = sum_T max_j max_{x_j} sum_{other x} prod_bonds exp(-varsigma|x_p-x_l|/(sqrt(d) maxdeg)).

    Summing leaves inwards, each bond contributes the full lattice sum at
    its own decay rate, whatever vertex is pinned, so the per-tree term is
    a product over bonds.
    """
    if not (1 <= k <= 6 and 1 <= d <= 2):
        raise ValueError("need k <= 6 and d <= 2")
    G = {g: lattice_exp_sum(varsigma / (math.sqrt(d) * g), d) for g in range(1, k + 1)}
    lhs, sdf = 0.0, 0
    for T in enumerate_trees(k):
        deg = degrees(T)
        lhs += math.prod(G[max(deg[a], deg[b])] for a, b in T.bonds)
        sdf += degree_factorial(T)
    D = proposition_constant(d, varsigma)
    rhs = D**k * math.factorial(k) ** d
    return TreeSumReport(
        k, d, varsigma, lhs, rhs, D, sdf, math.factorial(k) * (4 * math.e**2) ** k, per_degree=G
    )
