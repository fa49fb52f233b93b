"""Cubic boxes in Z^d, decay functions and their summability constants.

Distances are Euclidean; boxes are max-norm balls.  Every constant returned
here is an upper bound: lattice sums are truncated and the remainder is
replaced by a monotone integral majorant.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

Site = tuple[int, ...]

_KIND_ALIASES = {
    "polynomial": "polynomial",
    "poly": "polynomial",
    "exponential": "exponential",
    "exp": "exponential",
    "exponentialpolynomial": "exponential",
    "exponential_polynomial": "exponential",
}

# shells beyond the enumerated box are summed with exact shell counts up to
# this radius before switching to the integral majorant
_SHELL_RADIUS = 1 << 16


@dataclass(frozen=True)
class DecayFunction:
    """F(r) = exp(-2 sigma r) (1 + r)^-(d + epsilon)."""

    kind: str
    d: int
    epsilon: float
    sigma: float = 0.0

    def __post_init__(self):
        kind = _KIND_ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown decay kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if kind == "polynomial" and self.sigma != 0:
            raise ValueError("polynomial decay has sigma = 0")
        if kind == "exponential" and not self.sigma > 0:
            raise ValueError("exponential decay needs sigma > 0")

    @classmethod
    def polynomial(cls, d: int, epsilon: float) -> "DecayFunction":
        return cls("polynomial", d, float(epsilon), 0.0)

    @classmethod
    def exponential(cls, d: int, epsilon: float, sigma: float) -> "DecayFunction":
        return cls("exponential", d, float(epsilon), float(sigma))

    @property
    def power(self) -> float:
        return self.d + self.epsilon

    def underlying_polynomial(self) -> "DecayFunction":
        return DecayFunction.polynomial(self.d, self.epsilon)

    def __call__(self, r):
        return decay_value(self, r)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "d": self.d, "epsilon": self.epsilon, "sigma": self.sigma}


def box_sites(L: int, d: int) -> list[Site]:
    if L < 0 or d < 1:
        raise ValueError("need L >= 0 and d >= 1")
    return list(itertools.product(range(-L, L + 1), repeat=d))


def box_size(L: int, d: int) -> int:
    return (2 * L + 1) ** d


def shell_size(n, d: int):
    """|Lambda_n minus Lambda_{n-1}|, vectorized over n."""
    n = np.asarray(n, dtype=float)
    out = (2 * n + 1) ** d - np.maximum(2 * n - 1, 0) ** d
    return np.where(n == 0, 1.0, out)


def shell_sites(n: int, d: int) -> list[Site]:
    return [x for x in box_sites(n, d) if max(abs(c) for c in x) == n]


def sup_norm(x) -> int:
    return max(abs(c) for c in x)


def decay_value(F: DecayFunction, r):
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("distance must be nonnegative")
    val = np.exp(-2.0 * F.sigma * r_arr) * (1.0 + r_arr) ** (-F.power)
    return float(val) if np.ndim(val) == 0 else val


@lru_cache(maxsize=64)
def _box_distance_sum(F: DecayFunction, radius: int) -> float:
    # sum of F(|x|) over the box of the given radius, row by row for memory
    d = F.d
    if d == 1:
        x = np.arange(-radius, radius + 1, dtype=float)
        return float(np.sum(decay_value(F, np.abs(x))))
    axis = np.arange(-radius, radius + 1, dtype=float) ** 2
    rest = np.zeros(1)
    for _ in range(d - 1):
        rest = (rest[:, None] + axis[None, :]).ravel()
    total = 0.0
    for a in axis:
        total += float(np.sum(decay_value(F, np.sqrt(rest + a))))
    return total


def _shell_majorant(F: DecayFunction, n_lo: int) -> float:
    """Upper bound on sum_{|x|_inf > n_lo} F(|x|)."""
    d = F.d
    total = 0.0
    if n_lo < _SHELL_RADIUS:
        n = np.arange(n_lo + 1, _SHELL_RADIUS + 1, dtype=float)
        total += float(np.sum(shell_size(n, d) * decay_value(F, n)))
        n_lo = _SHELL_RADIUS
    # |shell_n| <= d 2^d (1+n)^(d-1); integrate (1+u)^(-1-eps) from n_lo
    c = d * 2.0**d
    total += c * math.exp(-2.0 * F.sigma * n_lo) * (1.0 + n_lo) ** (-F.epsilon) / F.epsilon
    return total


def f_norm_bound(F: DecayFunction, radius: int = 64) -> float:
    """Certified upper bound on sum over Z^d of F(|x|)."""
    return _box_distance_sum(F, int(radius)) + _shell_majorant(F, int(radius))


def convolution_constant_bound(F: DecayFunction, radius: int = 64) -> float:
    # (1+|x-y|) <= (1+|x-z|)(1+|z-y|) and a split at the midpoint give
    # D <= 2^(d+1+eps) ||F_poly||_1; the exponential factor only helps
    poly = F.underlying_polynomial()
    return 2.0 ** (F.d + 1 + F.epsilon) * f_norm_bound(poly, radius)


def _sup_norm_counts(m: int, d: int) -> np.ndarray:
    """N_j = number of z in Lambda_m with |z|_inf = j, j = 0..m."""
    return shell_size(np.arange(m + 1), d)


def shell_sum_max(F: DecayFunction, n, m: int):
    """|shell_n| * sum_{z in Lambda_m} max_{y in shell_n} F(|z - y|) for n > m.

    The closest shell point to z sits at Euclidean distance n - |z|_inf.
    """
    n = np.atleast_1d(np.asarray(n, dtype=float))
    j = np.arange(m + 1, dtype=float)
    counts = _sup_norm_counts(m, F.d)
    inner = decay_value(F, n[:, None] - j[None, :]) @ counts
    return shell_size(n, F.d) * inner


@lru_cache(maxsize=4096)
def shell_sum_full(F: DecayFunction, n: int, m: int) -> float:
    """sum_{z in Lambda_m} sum_{y in shell_n} F(|z - y|), by enumeration."""
    if n <= m:
        raise ValueError("need n > m")
    shell = np.array(shell_sites(n, F.d), dtype=float)
    inner = np.array(box_sites(m, F.d), dtype=float)
    dist = np.linalg.norm(shell[:, None, :] - inner[None, :, :], axis=-1)
    return float(np.sum(decay_value(F, dist)))


def shell_sum_full_tail(F: DecayFunction, m: int, N: int) -> float:
    """Upper bound on sum_{n > N} shell_sum_full(F, n, m)."""
    d = F.d
    K = box_size(m, d) * d * 2.0**d * (1.0 + m) ** (d - 1)
    tail = K * (1.0 + N - m) ** (-F.epsilon) / F.epsilon
    return tail * math.exp(-2.0 * F.sigma * (N - m))


@dataclass(frozen=True)
class DecaySequence:
    kind: str
    m: int
    varsigma: float
    values: np.ndarray = field(repr=False)
    l1_norm: float = math.nan
    constant: float = math.nan
    tail: float = 0.0


def decay_sequences(
    F: DecayFunction,
    m: int,
    n_max: int,
    varsigma: float | None = None,
    truncation: int = 1 << 20,
) -> DecaySequence:
    """Decay data for shells around Lambda_m.

    Polynomial kind: u_{n,m} = (1+n)^varsigma * shell_sum_max(n, m) for
    n = m+1..n_max, with varsigma < epsilon (default epsilon/2) so that u is
    summable; `l1_norm` bounds the full series.
    Exponential kind: the smallest C_m found with
    shell_sum_max(n, m) <= C_m exp(-2 sigma n) for every n > m.
    """
    if n_max <= m:
        raise ValueError("need n_max > m")
    d = F.d
    lam_m = box_size(m, d)
    if F.kind == "polynomial":
        s = F.epsilon / 2 if varsigma is None else float(varsigma)
        if not 0 < s < F.epsilon:
            raise ValueError("varsigma must lie in (0, epsilon)")
        top = max(truncation, n_max)
        n = np.arange(m + 1, top + 1, dtype=float)
        u = (1.0 + n) ** s * shell_sum_max(F, n, m)
        K = d * 2.0**d * (1.0 + m) ** (d - 1 + s) * lam_m
        tail = K * (1.0 + top - m) ** (-(F.epsilon - s)) / (F.epsilon - s)
        return DecaySequence(
            "polynomial", m, s, u[: n_max - m].copy(), l1_norm=float(np.sum(u)) + tail, tail=tail
        )
    s = F.sigma
    top = max(m + 4096, n_max)
    n = np.arange(m + 1, top + 1, dtype=float)
    j = np.arange(m + 1, dtype=float)
    counts = _sup_norm_counts(m, d)
    # exp(2 s n) F(n - j) = exp(2 s j) (1 + n - j)^-(d+eps), kept finite
    scaled = (np.exp(2 * s * j)[None, :] * (1.0 + n[:, None] - j[None, :]) ** (-F.power)) @ counts
    scaled *= shell_size(n, d)
    # beyond `top`: |shell_n| <= d 2^d (1+m)^(d-1) (1+n-m)^(d-1), decreasing in n
    tail = math.exp(2 * s * m) * lam_m * d * 2.0**d * (1.0 + m) ** (d - 1) * (2.0 + top - m) ** (-1 - F.epsilon)
    C = max(float(np.max(scaled)), tail)
    values = C * np.exp(-2 * s * n[: n_max - m])
    return DecaySequence("exponential", m, s, values, constant=C, tail=tail)
