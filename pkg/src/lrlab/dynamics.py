"""Heisenberg dynamics on a finite box: autonomous (exact, via a blocked
eigendecomposition) and non-autonomous (commutator-free Magnus integrator,
truncated Dyson series), plus the interaction picture and telescoping
blocks of translated finite-volume dynamics.

Conventions (hbar = 1):
    U_{t,s} solves d/dt U_{t,s} = -i H_t U_{t,s}, U_{s,s} = 1,
    tau_{t,s}(B) = U_{t,s}^* B U_{t,s},
    U_{t,s} = U_{t,r} U_{r,s},  tau_{t,s} = tau_{r,s} o tau_{t,r}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy import integrate
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .fock import FockOperator, _as_ctx, _as_site, identity, shift_site, translate
from .interactions import Interaction, Potential, hamiltonian_on
from .lattice import box_sites, sup_norm

HERMITIAN_TOL = 1e-10
DEFAULT_TOL = 1e-9
_MAX_GROUPS = 32


# blocked spectral decomposition


def _components(pattern: np.ndarray) -> list[np.ndarray]:
    rows, cols = np.nonzero(pattern)
    n = pattern.shape[0]
    graph = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    n_comp, labels = connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.cumsum(np.bincount(labels, minlength=n_comp))[:-1]
    comps = np.split(order, splits)
    comps.sort(key=lambda c: c[0])
    return comps


def _group(comps: list[np.ndarray], n: int) -> list[list[np.ndarray]]:
    # merge consecutive components so that at most ~_MAX_GROUPS groups remain
    target = max(1, n // _MAX_GROUPS)
    groups, cur, size = [], [], 0
    for c in comps:
        cur.append(c)
        size += c.size
        if size >= target:
            groups.append(cur)
            cur, size = [], 0
    if cur:
        groups.append(cur)
    return groups


class Spectrum:
    """Eigendecomposition of a Hermitian matrix, blocked by the connected
    components of its nonzero pattern so that exact zeros survive basis
    changes."""

    def __init__(self, H: np.ndarray):
        H = np.asarray(H, dtype=complex)
        scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
        if np.max(np.abs(H - H.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
            raise ValueError("Hamiltonian is not self-adjoint")
        n = H.shape[0]
        self.dim = n
        comps = _components(H != 0)
        self.groups = []  # (indices, energies, eigenvectors)
        for grp in _group(comps, n):
            idx = np.concatenate(grp)
            E = np.empty(idx.size)
            V = np.zeros((idx.size, idx.size), dtype=complex)
            pos = 0
            for c in grp:
                sub = H[np.ix_(c, c)]
                e, v = np.linalg.eigh((sub + sub.conj().T) / 2)
                E[pos : pos + c.size] = e
                V[pos : pos + c.size, pos : pos + c.size] = v
                pos += c.size
            self.groups.append((idx, E, V))
        self.perm = np.concatenate([g[0] for g in self.groups])
        self.energies = np.concatenate([g[1] for g in self.groups])
        bounds = np.cumsum([0] + [g[0].size for g in self.groups])
        self._slices = [slice(bounds[i], bounds[i + 1]) for i in range(len(self.groups))]

    def to_eigen(self, M: np.ndarray) -> np.ndarray:
        """V^* M V, indexed in the (permuted) eigenbasis order."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for (ia, _, Va), sa in zip(self.groups, self._slices):
            for (ib, _, Vb), sb in zip(self.groups, self._slices):
                sub = M[np.ix_(ia, ib)]
                if np.any(sub):
                    out[sa, sb] = Va.conj().T @ sub @ Vb
        return out

    def from_eigen(self, Mt: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for (ia, _, Va), sa in zip(self.groups, self._slices):
            for (ib, _, Vb), sb in zip(self.groups, self._slices):
                sub = Mt[sa, sb]
                if np.any(sub):
                    out[np.ix_(ia, ib)] = Va @ sub @ Vb.conj().T
        return out

    def evolve(self, M: np.ndarray, t: float) -> np.ndarray:
        if t == 0:
            return np.array(M, dtype=complex)
        E = self.energies
        phase = np.exp(1j * t * (E[:, None] - E[None, :]))
        return self.from_eigen(self.to_eigen(M) * phase)

    def unitary(self, t: float) -> np.ndarray:
        """exp(-i t H)."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for idx, E, V in self.groups:
            out[np.ix_(idx, idx)] = (V * np.exp(-1j * t * E)) @ V.conj().T
        return out


def spectrum_of(H: FockOperator) -> Spectrum:
    eig = H._cache.get("spectrum")
    if eig is None:
        eig = Spectrum(H.matrix)
        H._cache["spectrum"] = eig
    return eig


def evolve_heisenberg(H: FockOperator, B: FockOperator, t: float) -> FockOperator:
    """tau_t(B) = e^{itH} B e^{-itH}, B embedded into the context of H."""
    eig = spectrum_of(H)
    B = B.embed(H.sites)
    if t == 0:
        return B
    return FockOperator(eig.evolve(B.matrix, t), H.sites)


# non-autonomous protocols


@dataclass
class TimeProtocol:
    """t -> H_t on a fixed context; `matrix_at` returns the dense matrix."""

    sites: tuple
    matrix_at: Callable[[float], np.ndarray]
    smoothness_tag: str = "smooth"
    constant_matrix: np.ndarray | None = field(default=None, repr=False)
    # optional fixed block structure shared by every H_t
    blocks: list | None = field(default=None, repr=False)

    def hamiltonian_at(self, t: float) -> FockOperator:
        return FockOperator(self.matrix_at(t), self.sites)

    @classmethod
    def constant(cls, H: FockOperator) -> "TimeProtocol":
        M = H.matrix
        return cls(H.sites, lambda t: M, "constant", constant_matrix=M)

    @classmethod
    def affine(cls, H0: FockOperator, drives: Sequence[tuple[Callable[[float], float], FockOperator]]) -> "TimeProtocol":
        """H_t = H0 + sum_i f_i(t) H_i."""
        ctx = H0.sites
        base = H0.matrix
        parts = [(f, Hi.embed(ctx).matrix) for f, Hi in drives]

        def matrix_at(t):
            M = base.copy()
            for f, Hi in parts:
                M += f(t) * Hi
            return M

        pattern = base != 0
        for _, Hi in parts:
            pattern |= Hi != 0
        return cls(ctx, matrix_at, "affine", blocks=_components(pattern | np.eye(len(base), dtype=bool)))


@dataclass
class Propagator:
    unitary: FockOperator
    interval: tuple[float, float]
    method_tag: str
    n_steps: int = 0


def _expm_herm(M: np.ndarray, h: float, blocks=None) -> np.ndarray:
    """exp(-i h M) for Hermitian M, blocked by its nonzero pattern."""
    if blocks is None and M.shape[0] <= 64:
        e, v = np.linalg.eigh((M + M.conj().T) / 2)
        return (v * np.exp(-1j * h * e)) @ v.conj().T
    out = np.zeros_like(M, dtype=complex)
    for c in blocks if blocks is not None else _components(M != 0):
        sub = M[np.ix_(c, c)]
        e, v = np.linalg.eigh((sub + sub.conj().T) / 2)
        out[np.ix_(c, c)] = (v * np.exp(-1j * h * e)) @ v.conj().T
    return out


_C1 = 0.5 - math.sqrt(3) / 6
_C2 = 0.5 + math.sqrt(3) / 6
_A1 = (3 - 2 * math.sqrt(3)) / 12
_A2 = (3 + 2 * math.sqrt(3)) / 12


def _cf4_step(protocol: TimeProtocol, t0: float, h: float) -> np.ndarray:
    """One commutator-free 4th-order Magnus step U_{t0+h, t0}."""
    H1 = protocol.matrix_at(t0 + _C1 * h)
    H2 = protocol.matrix_at(t0 + _C2 * h)
    first = _expm_herm(_A2 * H1 + _A1 * H2, h, protocol.blocks)
    second = _expm_herm(_A1 * H1 + _A2 * H2, h, protocol.blocks)
    return second @ first


def _norm_bound(A: np.ndarray) -> float:
    # sqrt(||A||_1 ||A||_inf) dominates the spectral norm
    return math.sqrt(np.max(np.sum(np.abs(A), axis=0)) * np.max(np.sum(np.abs(A), axis=1)))


def _magnus_fixed(protocol: TimeProtocol, s: float, t: float, n_steps: int) -> np.ndarray:
    h = (t - s) / n_steps
    U = np.eye(2 ** len(protocol.sites), dtype=complex)
    for i in range(n_steps):
        U = _cf4_step(protocol, s + i * h, h) @ U
    return U


def propagator(protocol: TimeProtocol, s: float, t: float, tol: float = DEFAULT_TOL) -> Propagator:
    """U_{t,s} with local error at most tol per unit time.

    Step-doubling control: a step of size h is accepted when it differs from
    two half steps by at most tol*|h|; the half-step result is kept.  Backward
    intervals (t < s) use negative steps.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    dim = 2 ** len(protocol.sites)
    if t == s:
        return Propagator(identity(protocol.sites), (s, t), "Exact", 0)
    if protocol.constant_matrix is not None:
        eig = Spectrum(protocol.constant_matrix)
        U = eig.unitary(t - s)
        return Propagator(FockOperator(U, protocol.sites), (s, t), "Magnus4", 1)
    span = t - s
    direction = 1.0 if span > 0 else -1.0
    scale = max(1.0, _norm_bound(protocol.matrix_at(s)))
    h = direction * min(abs(span), 0.5 / scale)
    U = np.eye(dim, dtype=complex)
    # below this the step-doubling estimate measures rounding, not truncation
    floor = 64 * np.finfo(float).eps * math.sqrt(dim)
    cur, steps = s, 0
    while direction * (t - cur) > 0:
        if direction * (cur + h - t) > 0:
            h = t - cur
        full = _cf4_step(protocol, cur, h)
        half = _cf4_step(protocol, cur + h / 2, h / 2) @ _cf4_step(protocol, cur, h / 2)
        err = _norm_bound(full - half)
        if err <= max(tol * abs(h), floor):
            U = half @ U
            cur = t if abs(t - (cur + h)) < 1e-15 * max(1.0, abs(t)) else cur + h
            steps += 1
            grow = 2.0 if err <= floor else min(2.0, 0.9 * (tol * abs(h) / err) ** 0.25)
            h *= max(grow, 0.3)
        else:
            h *= max(0.2, 0.9 * (tol * abs(h) / err) ** 0.25)
        if abs(h) < 1e-12 * max(1.0, abs(span)):
            raise RuntimeError("step-size underflow in propagator")
    return Propagator(FockOperator(U, protocol.sites), (s, t), "Magnus4", steps)


def evolve_nonautonomous(B: FockOperator, s: float, t: float, protocol: TimeProtocol, tol: float = DEFAULT_TOL) -> FockOperator:
    B = B.embed(protocol.sites)
    if t == s:
        return B
    U = propagator(protocol, s, t, tol).unitary.matrix
    return FockOperator(U.conj().T @ B.matrix @ U, protocol.sites)


# Dyson series


def _panel_rule(n: int):
    """Gauss-Legendre nodes/weights on [-1,1] and A[i,l] = int_{x_i}^1 l_l."""
    x, w = npleg.leggauss(n)
    V = npleg.legvander(x, n - 1)
    Vinv = np.linalg.inv(V)
    anti = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        Q = npleg.legint(e)
        anti[:, k] = npleg.legval(1.0, Q) - npleg.legval(x, Q)
    return x, w, anti @ Vinv


def collocation_grid(s: float, t: float, nodes: int = 16, panels: int = 1):
    """Composite Gauss-Legendre nodes r_i on [s,t], weights w_i, and the
    matrix S with (S f)_i ~ int_{r_i}^{t} f."""
    x, w, A = _panel_rule(nodes)
    edges = np.linspace(s, t, panels + 1)
    r = np.concatenate([(a + b) / 2 + (b - a) / 2 * x for a, b in zip(edges[:-1], edges[1:])])
    W = np.concatenate([(b - a) / 2 * w for a, b in zip(edges[:-1], edges[1:])])
    n = nodes * panels
    S = np.zeros((n, n))
    for p, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        sl = slice(p * nodes, (p + 1) * nodes)
        S[sl, sl] = (b - a) / 2 * A
        S[sl, (p + 1) * nodes :] = W[None, (p + 1) * nodes :]
    return r, W, S


def dyson_phillips(protocol: TimeProtocol, s: float, t: float, order: int, nodes: int = 16, panels: int = 1) -> Propagator:
    """sum_{j<=order} (-i)^j int_{t>s_1>...>s_j>s} H_{s_1}...H_{s_j}.

    Level j is D_j(r) = -i int_r^t D_{j-1}(u) H_u du, evaluated at the
    collocation nodes.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    dim = 2 ** len(protocol.sites)
    U = np.eye(dim, dtype=complex)
    if order == 0 or t == s:
        return Propagator(FockOperator(U, protocol.sites), (s, t), f"Dyson({order})", 0)
    r, W, S = collocation_grid(s, t, nodes, panels)
    Hs = np.stack([protocol.matrix_at(ri) for ri in r])
    D = np.broadcast_to(np.eye(dim, dtype=complex), Hs.shape)
    for _ in range(order):
        prod = D @ Hs  # D_{j-1}(u_l) H_{u_l}
        U = U + (-1j) * np.tensordot(W, prod, axes=(0, 0))
        D = (-1j) * np.tensordot(S, prod, axes=(1, 0))
    return Propagator(FockOperator(U, protocol.sites), (s, t), f"Dyson({order})", order)


# interaction picture


@dataclass
class PotentialProtocol:
    """Time-dependent on-site potential V_t = sum_x c_x(t) n_x."""

    sites: tuple
    coefficients: Callable[[float], np.ndarray]
    integral_fn: Callable[[float, float], np.ndarray] | None = None

    def __init__(self, sites, coefficients, integral=None):
        self.sites = _as_ctx(sites)
        self.coefficients = coefficients
        self.integral_fn = integral

    def integral(self, s: float, t: float) -> np.ndarray:
        if self.integral_fn is not None:
            return np.asarray(self.integral_fn(s, t), dtype=float)
        vals, _ = integrate.quad_vec(lambda u: np.asarray(self.coefficients(u), dtype=float), s, t, epsabs=1e-14, epsrel=1e-13)
        return vals

    def diagonal_at(self, t: float) -> np.ndarray:
        from .fock import occupations

        return occupations(len(self.sites)) @ np.asarray(self.coefficients(t), dtype=float)

    def integrated_diagonal(self, s: float, t: float) -> np.ndarray:
        from .fock import occupations

        return occupations(len(self.sites)) @ self.integral(s, t)


def _check_same_context(psi_protocol: TimeProtocol, V: PotentialProtocol):
    if tuple(psi_protocol.sites) != tuple(V.sites):
        raise ValueError("interaction and potential protocols must share the context")


def interaction_picture(B: FockOperator, s: float, t: float, psi_protocol: TimeProtocol, V_protocol: PotentialProtocol, tol: float = DEFAULT_TOL) -> FockOperator:
    """The interaction-picture dynamics W^* B W, where W is the propagator of
    G_r = e^{i int_s^r V} H^Psi_r e^{-i int_s^r V}.

    Equivalently U^*_{t,s} (e^{-i int V} B e^{i int V}) U_{t,s} with U the
    full propagator of H^Psi_t + V_t.
    """
    _check_same_context(psi_protocol, V_protocol)
    B = B.embed(psi_protocol.sites)
    if t == s:
        return B

    def g(r):
        phase = np.exp(1j * V_protocol.integrated_diagonal(s, r))
        return (phase[:, None] * psi_protocol.matrix_at(r)) * phase.conj()[None, :]

    # the diagonal rotation keeps the block structure of H^Psi
    rotated = TimeProtocol(psi_protocol.sites, g, "interaction-picture", blocks=psi_protocol.blocks)
    return evolve_nonautonomous(B, s, t, rotated, tol)


def interaction_picture_defect(B: FockOperator, s: float, t: float, psi_protocol: TimeProtocol, V_protocol: PotentialProtocol, tol: float = DEFAULT_TOL) -> float:
    """|| tau_{t,s}(B) - tau~_{t,s}(e^{i int V} B e^{-i int V}) ||."""
    from .fock import spectral_norm

    _check_same_context(psi_protocol, V_protocol)
    B = B.embed(psi_protocol.sites)
    phase = np.exp(1j * V_protocol.integrated_diagonal(s, t))
    rotated_B = FockOperator((phase[:, None] * B.matrix) * phase.conj()[None, :], B.sites)
    lhs = interaction_picture(rotated_B, s, t, psi_protocol, V_protocol, tol)

    def full(r):
        return psi_protocol.matrix_at(r) + np.diag(V_protocol.diagonal_at(r))

    rhs = evolve_nonautonomous(B, s, t, TimeProtocol(psi_protocol.sites, full), tol)
    return spectral_norm(lhs - rhs)


# translated dynamics and telescoping


def translated_box(n: int, x, d: int) -> tuple:
    x = _as_site(x)
    return tuple(shift_site(y, x) for y in box_sites(n, d))


def telescoping_blocks(B: FockOperator, t: float, x, m: int, N: int, psi: Interaction, V: Potential | None) -> list[FockOperator]:
    """Blocks tau^{(m,x)} chi_x(B) and (tau^{(n,x)} - tau^{(n-1,x)}) chi_x(B),
    n = m+1..N, written on the context Lambda_N + x.

    tau^{(n,x)} is generated by the terms of psi and V inside Lambda_n + x.
    """
    if N < m:
        raise ValueError("need N >= m")
    d = psi.d
    x = _as_site(x)
    local = B.localized()
    if any(sup_norm(y) > m for y in local.support):
        raise ValueError("B must be supported in Lambda_m")
    ctx_N = translated_box(N, x, d)
    evolved = []
    for n in range(m, N + 1):
        ctx_n = translated_box(n, x, d)
        H = hamiltonian_on(psi, V, ctx_n)
        evolved.append(evolve_heisenberg(H, translate(local, x, ctx_n), t).embed(ctx_N))
    blocks = [evolved[0]]
    for a, b in zip(evolved[:-1], evolved[1:]):
        blocks.append(FockOperator(b.matrix - a.matrix, ctx_N))
    return blocks
