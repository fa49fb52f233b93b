"""Finite-range interactions, on-site potentials and Hamiltonian assembly.

An interaction is stored by translation class: each shape (a finite set of
sites whose lexicographically smallest element is the origin) carries one
matrix written on the shape's sorted context.  The term on Z = shape + x is
the same matrix on the shifted context, since translation preserves the
lexicographic order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .fock import (
    FockOperator,
    Site,
    _as_site,
    annihilation,
    embed_sum,
    number_operator,
    spectral_norm,
    zero,
)
from .lattice import DecayFunction, box_sites, decay_value

MAX_RANGE = 8.0
Shape = tuple[Site, ...]


def _canonical(sites: Iterable) -> tuple[Shape, Site]:
    """Shape (shifted so its smallest site is the origin) and the shift."""
    Z = sorted(_as_site(x) for x in sites)
    base = Z[0]
    return tuple(tuple(a - b for a, b in zip(z, base)) for z in Z), base


def _diameter(shape: Shape) -> float:
    return max((math.dist(a, b) for a, b in itertools.combinations(shape, 2)), default=0.0)


class Interaction:
    """Translation-invariant finite-range interaction {Psi_Z}."""

    def __init__(self, d: int, shapes: Mapping[Shape, np.ndarray] | None = None, name: str = "", decay_tag: DecayFunction | None = None):
        self.d = int(d)
        self.name = name
        self.decay_tag = decay_tag
        self._shapes: dict[Shape, np.ndarray] = {}
        for shape, M in (shapes or {}).items():
            canon, _ = _canonical(shape)
            if canon != tuple(sorted(shape)):
                raise ValueError(f"shape {shape} is not in canonical form")
            if len(canon[0]) != self.d:
                raise ValueError("shape dimension mismatch")
            if _diameter(canon) > MAX_RANGE + 1e-12:
                raise ValueError(f"shape {shape} exceeds the maximal range {MAX_RANGE}")
            M = np.asarray(M, dtype=complex)
            if M.shape != (2 ** len(canon),) * 2:
                raise ValueError("term matrix has the wrong dimension")
            if np.max(np.abs(M), initial=0.0) > 0:
                self._shapes[canon] = M
        self._norms = {s: spectral_norm(M) for s, M in self._shapes.items()}

    @property
    def shapes(self) -> dict[Shape, np.ndarray]:
        return dict(self._shapes)

    @property
    def range(self) -> float:
        return max((_diameter(s) for s in self._shapes), default=0.0)

    def is_zero(self) -> bool:
        return not self._shapes

    def __repr__(self):
        return f"Interaction(d={self.d}, n_shapes={len(self._shapes)}, range={self.range:g}, name={self.name!r})"

    # algebra on interactions

    def scaled(self, c: float) -> "Interaction":
        if np.iscomplexobj(c) and np.imag(c) != 0:
            raise ValueError("interactions must stay self-adjoint")
        return Interaction(self.d, {s: c * M for s, M in self._shapes.items()}, self.name, self.decay_tag)

    def __add__(self, other: "Interaction") -> "Interaction":
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        shapes = dict(self._shapes)
        for s, M in other._shapes.items():
            shapes[s] = shapes[s] + M if s in shapes else M
        return Interaction(self.d, shapes, f"{self.name}+{other.name}", self.decay_tag or other.decay_tag)

    # terms and enumeration

    def term(self, Z) -> FockOperator | None:
        shape, base = _canonical(Z)
        M = self._shapes.get(shape)
        ctx = tuple(tuple(a + b for a, b in zip(s, base)) for s in shape)
        if M is None:
            return zero(ctx)
        return FockOperator(M, ctx)

    def term_norm(self, Z) -> float:
        shape, _ = _canonical(Z)
        return self._norms.get(shape, 0.0)

    def sets_containing(self, x) -> list[tuple[Site, ...]]:
        """All Z with x in Z and Psi_Z != 0, as sorted site tuples."""
        x = _as_site(x)
        out = []
        for shape in self._shapes:
            for o in shape:
                base = tuple(a - b for a, b in zip(x, o))
                out.append(tuple(tuple(a + b for a, b in zip(s, base)) for s in shape))
        return out

    def sets_in_region(self, region) -> list[tuple[Site, ...]]:
        region = {_as_site(x) for x in region}
        found = set()
        for x in region:
            for Z in self.sets_containing(x):
                if set(Z) <= region:
                    found.add(Z)
        return sorted(found)


@dataclass
class Potential:
    """On-site potential: V_{x} = onsite[x] as a 2x2 diagonal (even) matrix."""

    onsite: dict[Site, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zero(cls) -> "Potential":
        return cls({})

    @classmethod
    def from_coefficients(cls, coeffs: Mapping) -> "Potential":
        return cls({_as_site(x): np.diag([0.0, float(c)]).astype(complex) for x, c in coeffs.items() if c != 0})

    def is_zero(self) -> bool:
        return all(np.max(np.abs(M)) == 0 for M in self.onsite.values())

    def term(self, x) -> FockOperator:
        x = _as_site(x)
        M = self.onsite.get(x)
        if M is None:
            return zero([x])
        return FockOperator(M, [x])

    def coefficient(self, x) -> float:
        # for V_x = c n_x, returns c (the occupied-minus-empty energy)
        M = self.onsite.get(_as_site(x))
        return 0.0 if M is None else float(np.real(M[1, 1] - M[0, 0]))


def _radial_lookup(table) -> Callable[[float], float]:
    if table is None:
        return lambda r: 0.0
    if callable(table):
        return lambda r: float(table(r))
    items = [(float(k), float(v)) for k, v in table.items()]

    def f(r):
        for k, v in items:
            if abs(k - r) < 1e-9:
                return v
        return 0.0

    return f


def _radial_support(table) -> float:
    if table is None:
        return 0.0
    if callable(table):
        return MAX_RANGE
    nz = [float(k) for k, v in table.items() if v != 0]
    return max(nz, default=0.0)


def hopping_density_interaction(h, v, d: int = 1, name: str = "hopping-density") -> Interaction:
    """Psi^(h,v): on {x} the term (h(0)+v(0)) n_x, on {x,y} with x != y
    h(|x-y|)(a*_x a_y + a*_y a_x) + 2 v(|x-y|) n_x n_y.

    h and v are maps from distances to reals (or callables, probed up to
    the maximal range).
    """
    R = max(_radial_support(h), _radial_support(v))
    if R > MAX_RANGE + 1e-12:
        raise ValueError(f"range {R} exceeds the maximal range {MAX_RANGE}")
    hf, vf = _radial_lookup(h), _radial_lookup(v)
    origin = (0,) * d
    shapes = {}
    c0 = hf(0.0) + vf(0.0)
    if c0 != 0:
        shapes[(origin,)] = c0 * number_operator([origin], [origin]).matrix
    Ri = int(math.floor(R + 1e-9))
    for e in itertools.product(range(-Ri, Ri + 1), repeat=d):
        if e <= origin:
            continue
        r = math.sqrt(sum(c * c for c in e))
        if r > R + 1e-9:
            continue
        hv, vv = hf(r), vf(r)
        if hv == 0 and vv == 0:
            continue
        ctx = (origin, e)
        ax, ay = annihilation(origin, ctx), annihilation(e, ctx)
        nx, ny = number_operator([origin], ctx), number_operator([e], ctx)
        T = hv * (ax.dag() @ ay + ay.dag() @ ax) + 2 * vv * (nx @ ny)
        shapes[ctx] = T.matrix
    return Interaction(d, shapes, name)


def discrete_laplacian_interaction(d: int) -> Interaction:
    """Psi^(d): on-site 2d n_x and nearest-neighbour hopping -1."""
    return hopping_density_interaction({0: 2.0 * d, 1: -1.0}, {}, d=d, name=f"laplacian-{d}d")


def random_potential(lam: float, omega: Mapping) -> Potential:
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    for x, w in omega.items():
        if not -1.0 <= w <= 1.0:
            raise ValueError(f"omega({x}) = {w} outside [-1, 1]")
    return Potential.from_coefficients({x: lam * w for x, w in omega.items()})


def w_norm(psi: Interaction, F: DecayFunction, window, return_witness: bool = False):
    """sup_{x,y in window} sum_{Z containing x,y} ||Psi_Z|| / F(|x-y|).

    `window` is a box radius or an explicit site list.  Sets Z may leave the
    window; only x and y are restricted.
    """
    sites = box_sites(int(window), psi.d) if isinstance(window, (int, np.integer)) else [_as_site(x) for x in window]
    inside = set(sites)
    acc: dict[tuple[Site, Site], float] = {}
    for x in sites:
        for Z in psi.sets_containing(x):
            nz = psi.term_norm(Z)
            for y in Z:
                if y in inside:
                    acc[(x, y)] = acc.get((x, y), 0.0) + nz
    best, witness = 0.0, None
    for (x, y), total in sorted(acc.items()):
        val = total / decay_value(F, math.dist(x, y))
        if val > best:
            best, witness = val, (x, y)
    return (best, witness) if return_witness else best


def w_norm_exact(psi: Interaction, F: DecayFunction) -> float:
    """w_norm on a window of radius at least twice the range."""
    return w_norm(psi, F, max(2 * int(math.ceil(psi.range)), 1))


def boundary_set(psi: Interaction, region) -> set[Site]:
    region = {_as_site(x) for x in region}
    out = set()
    for x in region:
        for Z in psi.sets_containing(x):
            if not set(Z) <= region:
                out.add(x)
                break
    return out


def hamiltonian_on(psi: Interaction, V: Potential | None, region) -> FockOperator:
    """H = sum over Z inside region of Psi_Z plus the potential on region."""
    ctx = tuple(sorted(_as_site(x) for x in region))
    terms = [psi.term(Z) for Z in psi.sets_in_region(ctx)]
    if V is not None:
        terms += [V.term(x) for x in ctx if x in V.onsite]
    H = embed_sum(terms, ctx)
    return FockOperator(H.matrix, ctx)


def hamiltonian(psi: Interaction, V: Potential | None, L: int, d: int | None = None) -> FockOperator:
    return hamiltonian_on(psi, V, box_sites(L, psi.d if d is None else d))
