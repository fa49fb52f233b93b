"""Certification harness: exact left-hand sides on small chains against the
right-hand sides assembled from certified constants.

Every check returns BoundReport objects.  A case passes when
lhs <= rhs + 1e-10.  Right-hand sides use the exact finite-range value of
||Psi||_W (window twice the range) and the certified upper bound on D.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import TimeProtocol, dyson_phillips, evolve_heisenberg, evolve_nonautonomous, propagator, telescoping_blocks, translated_box
from .fock import FockOperator, _as_site, annihilation, creation, max_entry, multicommutator, parity, random_operator, spectral_norm, translate
from .interactions import Interaction, Potential, boundary_set, hamiltonian_on, hopping_density_interaction, random_potential, w_norm_exact
from .lattice import DecayFunction, box_sites, convolution_constant_bound, decay_value, shell_sum_full
from .trees import _sequence, enumerate_trees, kappa, remainder_R, remainder_bound_exp, remainder_bound_poly

SLACK = 1e-10
MAGNUS_TOL = 1e-10


@dataclass
class BoundReport:
    case_id: str
    theorem: str
    lhs: float
    rhs: float
    params: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -SLACK


def constants(psi: Interaction, F: DecayFunction) -> tuple[float, float]:
    """(||Psi||_W, D) for the right-hand sides."""
    return w_norm_exact(psi, F), convolution_constant_bound(F)


def _pair_sum(F: DecayFunction, A, B) -> float:
    A = np.array([_as_site(a) for a in A], dtype=float)
    B = np.array([_as_site(b) for b in B], dtype=float)
    if len(A) == 0 or len(B) == 0:
        return 0.0
    dist = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=-1)
    return float(np.sum(decay_value(F, dist)))


def _run(fn: Callable, cases: Sequence, threads: int = 1) -> list:
    if threads <= 1 or len(cases) <= 1:
        return [fn(c) for c in cases]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, cases))


def run_batch(fn: Callable, cases: Sequence, threads: int = 1) -> list[BoundReport]:
    """Evaluate cases (possibly in parallel) and flatten, in case order."""
    out = []
    for r in _run(fn, cases, threads):
        out.extend(r if isinstance(r, list) else [r])
    return out


# random models


def random_chain_model(rng: np.random.Generator, sites, lam: float | None = None) -> tuple[Interaction, Potential]:
    """Hopping+density interaction with random couplings and a random potential."""
    h = {0: rng.uniform(-0.5, 0.5), 1: rng.uniform(-1.0, 1.0), 2: rng.uniform(-0.3, 0.3)}
    v = {1: rng.uniform(0.0, 0.6)}
    psi = hopping_density_interaction(h, v)
    lam = rng.uniform(0.0, 1.0) if lam is None else lam
    omega = {_as_site(x): float(rng.uniform(-1, 1)) for x in sites}
    return psi, random_potential(lam, omega)


def _chain(n: int, start: int = 0) -> tuple:
    return tuple((start + i,) for i in range(n))


# Lieb-Robinson bound


def lr_rhs(B1, B2, region1, region2, t: float, psi: Interaction, F: DecayFunction, D: float, psi_norm: float | None = None) -> float:
    """2/D ||B1|| ||B2|| (exp(2D|t| ||Psi||_W) - 1) sum_{x in boundary(region1)} sum_{y in region2} F(|x-y|)."""
    r1 = {_as_site(x) for x in region1}
    r2 = {_as_site(x) for x in region2}
    if r1 & r2:
        raise ValueError("supports must be disjoint")
    if parity(B1).tag != "Even":
        raise ValueError("B1 must be even")
    alpha = w_norm_exact(psi, F) if psi_norm is None else psi_norm
    geometry = _pair_sum(F, sorted(boundary_set(psi, r1)), sorted(r2))
    return 2.0 / D * spectral_norm(B1) * spectral_norm(B2) * math.expm1(2 * D * abs(t) * alpha) * geometry


@dataclass
class LRCase:
    case_id: str
    psi: Interaction
    V: Potential | None
    region: tuple
    B1: FockOperator
    B2: FockOperator
    t: float
    F: DecayFunction


def lr_lhs(case: LRCase) -> float:
    H = hamiltonian_on(case.psi, case.V, case.region)
    tB1 = evolve_heisenberg(H, case.B1, case.t)
    B2 = case.B2.embed(H.sites)
    return spectral_norm(tB1 @ B2 - B2 @ tB1)


def verify_lr(case: LRCase) -> BoundReport:
    alpha, D = constants(case.psi, case.F)
    s1, s2 = case.B1.localized().support, case.B2.localized().support
    rhs = lr_rhs(case.B1, case.B2, s1, s2, case.t, case.psi, case.F, D, alpha)
    params = {"n_sites": len(case.region), "t": case.t, "psi_norm": alpha, "D": D}
    return BoundReport(case.case_id, "lieb-robinson", lr_lhs(case), rhs, params)


def lr_cases(n: int, seed: int, sites=(6, 10), t_max: float = 2.0, F: DecayFunction | None = None) -> list[LRCase]:
    F = F or DecayFunction.polynomial(1, 1.0)
    out = []
    for i in range(n):
        rng = np.random.default_rng((seed, i))
        L = int(rng.integers(sites[0], sites[1] + 1))
        region = _chain(L)
        psi, V = random_chain_model(rng, region)
        w1, w2 = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        a = int(rng.integers(0, L - w1 - w2 + 1))
        b = int(rng.integers(a + w1, L - w2 + 1))
        r1, r2 = region[a : a + w1], region[b : b + w2]
        if rng.random() < 0.5:
            r1, r2 = r2, r1
        B1 = random_operator(r1, rng, parity="even")
        B2 = random_operator(r2, rng)
        out.append(LRCase(f"lr-{i:04d}", psi, V, region, B1, B2, float(rng.uniform(-t_max, t_max)), F))
    return out


# convergence of finite-volume dynamics


def convergence_rhs(normB: float, support, L1: int, L2: int, t: float, alpha: float, F: DecayFunction, D: float) -> float:
    """2||B|| ||Psi||_W |t| exp(4D|t| ||Psi||_W) sum_{y in Lambda_L2 minus Lambda_L1} sum_{x in support} F(|x-y|)."""
    d = F.d
    inner = set(box_sites(L1, d))
    outer = [y for y in box_sites(L2, d) if y not in inner]
    return 2 * normB * alpha * abs(t) * math.exp(4 * D * abs(t) * alpha) * _pair_sum(F, support, outer)


@dataclass
class ConvergenceCase:
    case_id: str
    psi: Interaction
    V: Potential | None
    B: FockOperator
    L1: int
    L2: int
    t: float
    F: DecayFunction


def convergence_lhs(case: ConvergenceCase) -> float:
    d = case.psi.d
    big = box_sites(case.L2, d)
    H1 = hamiltonian_on(case.psi, case.V, box_sites(case.L1, d))
    H2 = hamiltonian_on(case.psi, case.V, big)
    a = evolve_heisenberg(H1, case.B, case.t).embed(H2.sites)
    b = evolve_heisenberg(H2, case.B, case.t)
    return spectral_norm(b - a)


def convergence_rate_check(case: ConvergenceCase) -> BoundReport:
    d = case.psi.d
    support = case.B.localized().support
    if not set(support) <= set(box_sites(case.L1, d)) or case.L2 <= case.L1:
        raise ValueError("need support inside Lambda_L1 and L1 < L2")
    alpha, D = constants(case.psi, case.F)
    rhs = convergence_rhs(spectral_norm(case.B), sorted(support), case.L1, case.L2, case.t, alpha, case.F, D)
    params = {"L1": case.L1, "L2": case.L2, "t": case.t, "psi_norm": alpha, "D": D}
    return BoundReport(case.case_id, "finite-volume-cauchy", convergence_lhs(case), rhs, params)


def convergence_cases(n: int, seed: int, L1_values=(2, 3), gap: int = 2, t_max: float = 1.5, F=None) -> list[ConvergenceCase]:
    F = F or DecayFunction.polynomial(1, 1.0)
    out = []
    for i in range(n):
        rng = np.random.default_rng((seed, i))
        L1 = int(L1_values[i % len(L1_values)])
        L2 = L1 + gap
        psi, V = random_chain_model(rng, box_sites(L2, 1))
        w = int(rng.integers(1, 3))
        a = int(rng.integers(-L1, L1 - w + 2))
        B = random_operator(_chain(w, a), rng)
        out.append(ConvergenceCase(f"conv-{i:04d}", psi, V, B, L1, L2, float(rng.uniform(-t_max, t_max)), F))
    return out


def convergence_sweep(seed: int, L1_values=(1, 2, 3), gap: int = 2, t: float = 1.0) -> list[ConvergenceCase]:
    """One fixed model, operator and time; only L1 varies."""
    rng = np.random.default_rng((seed, 1 << 20))
    Lmax = max(L1_values) + gap
    psi, V = random_chain_model(rng, box_sites(Lmax, 1), lam=0.5)
    B = random_operator([(0,)], rng)
    F = DecayFunction.polynomial(1, 1.0)
    return [ConvergenceCase(f"sweep-L{L1}", psi, V, B, L1, L1 + gap, t, F) for L1 in L1_values]


# multi-commutators


def multicomm_rhs(
    norms: Sequence[float],
    m: Sequence[int],
    s: Sequence[float],
    x: Sequence,
    alpha: float,
    F: DecayFunction,
    D: float,
    mode: str = "raw",
    varsigma: float | None = None,
) -> float:
    """2^k prod ||B_j|| sum_T (kappa_T + R_T), R_T raw or via a closed form."""
    k = len(s)
    if len(norms) != k + 1 or len(m) != k + 1 or len(x) != k + 1:
        raise ValueError("need k+1 norms, radii and sites")
    boxes = list(zip(m, x))
    total = 0.0
    for T in enumerate_trees(k):
        if mode == "raw":
            R = remainder_R(T, alpha, s, m, x, F, D)
        elif mode == "poly":
            R = remainder_bound_poly(T, alpha, s, m, x, F, D, varsigma)
        elif mode == "exp":
            R = remainder_bound_exp(T, alpha, s, m, x, F, D)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        total += kappa(T, boxes) + R
    return 2.0**k * math.prod(norms) * total


@dataclass
class MultiCommCase:
    case_id: str
    psi: Interaction
    V: Potential | None
    region: tuple
    ops: list  # B_0..B_k, each written on Lambda_{m_j} around the origin
    m: list
    x: list
    s: list  # s_1..s_k
    F_poly: DecayFunction
    F_exp: DecayFunction


def multicomm_lhs(case: MultiCommCase) -> float:
    H = hamiltonian_on(case.psi, case.V, case.region)
    ctx = H.sites
    A = [translate(case.ops[0], case.x[0], ctx)]
    for j in range(1, len(case.ops)):
        A.append(evolve_heisenberg(H, translate(case.ops[j], case.x[j], ctx), case.s[j - 1]))
    return spectral_norm(multicommutator(A[::-1]))


def _check_multicomm(case: MultiCommCase):
    for j, B in enumerate(case.ops):
        if not set(B.localized().support) <= set(box_sites(case.m[j], case.psi.d)):
            raise ValueError(f"B_{j} is not supported in Lambda_{case.m[j]}")
        if j > 0 and parity(B).tag != "Even":
            raise ValueError(f"B_{j} must be even")


def verify_multicomm(case: MultiCommCase, modes=("raw", "poly", "exp")) -> list[BoundReport]:
    _check_multicomm(case)
    lhs = multicomm_lhs(case)
    norms = [spectral_norm(B) for B in case.ops]
    k = len(case.s)
    out = []
    for mode in modes:
        F = case.F_exp if mode == "exp" else case.F_poly
        alpha, D = constants(case.psi, F)
        rhs = multicomm_rhs(norms, case.m, case.s, case.x, alpha, F, D, mode)
        params = {"k": k, "mode": mode, "psi_norm": alpha, "D": D, "s": list(case.s), "m": list(case.m)}
        out.append(BoundReport(f"{case.case_id}-{mode}", f"multicommutator-{mode}", lhs, rhs, params))
    return out


def multicomm_cases(n: int, seed: int, k: int, n_sites=(6, 9), s_max: float = 0.3, F_poly=None, F_exp=None) -> list[MultiCommCase]:
    F_poly = F_poly or DecayFunction.polynomial(1, 1.0)
    F_exp = F_exp or DecayFunction.exponential(1, 1.0, 0.25)
    out = []
    for i in range(n):
        rng = np.random.default_rng((seed, k, i))
        L = int(rng.integers(n_sites[0], n_sites[1] + 1))
        region = _chain(L)
        psi, V = random_chain_model(rng, region)
        m = [int(v) for v in rng.integers(0, 2, size=k + 1)]
        x = [(int(rng.integers(mj, L - mj)),) for mj in m]
        ops = [random_operator(box_sites(m[0], 1), rng)]
        ops += [random_operator(box_sites(mj, 1), rng, parity="even") for mj in m[1:]]
        s = [float(v) for v in rng.uniform(-s_max, s_max, size=k)]
        out.append(MultiCommCase(f"mc{k}-{i:04d}", psi, V, region, ops, m, x, s, F_poly, F_exp))
    return out


# tree-decay corollary


def corollary_K(F: DecayFunction, alpha: float, t: float, D: float, varsigma: float | None = None) -> float:
    """K0 (polynomial F) or K1 (exponential F)."""
    growth = alpha * abs(t) * math.exp(4 * D * abs(t) * alpha)
    if F.kind == "polynomial":
        seq = _sequence(F, 1, 2, varsigma)
        vs = seq.varsigma
        return 2 * F.d ** (vs / 2) * (2**vs + 2 * seq.l1_norm * growth)
    vs = F.sigma
    C1 = _sequence(F, 1, 2).constant
    return 2 * (math.exp(vs) + 2 * C1 * growth / (math.exp(2 * vs) - math.exp(vs)))


def tree_decay_rhs(normB0: float, m0: int, x: Sequence, t: float, alpha: float, F: DecayFunction, D: float, varsigma: float | None = None) -> float:
    k = len(x) - 1
    K = corollary_K(F, alpha, t, D, varsigma)
    d = F.d
    if F.kind == "polynomial":
        vs = _sequence(F, 1, 2, varsigma).varsigma
        pre = (1 + m0) ** vs

        def bond(r, g):
            return (1 + r) ** (-vs / g)
    else:
        vs = F.sigma
        pre = math.exp(m0 * vs)

        def bond(r, g):
            return math.exp(-vs * r / (math.sqrt(d) * g))

    total = 0.0
    for T in enumerate_trees(k):
        deg = [0] * (k + 1)
        for a, b in T.bonds:
            deg[a] += 1
            deg[b] += 1
        total += math.prod(bond(math.dist(x[a], x[b]), max(deg[a], deg[b])) for a, b in T.bonds)
    return normB0 * pre * K**k * total


@dataclass
class TreeDecayCase:
    case_id: str
    psi: Interaction
    V: Potential | None
    region: tuple
    B0: FockOperator  # on Lambda_{m0} around the origin
    m0: int
    x: list  # x_0..x_k
    z: list  # z_1..z_k with |z_j| = 1
    s: list
    t: float
    F_poly: DecayFunction
    F_exp: DecayFunction


def tree_decay_lhs(case: TreeDecayCase) -> float:
    H = hamiltonian_on(case.psi, case.V, case.region)
    ctx = H.sites
    A = [translate(case.B0, case.x[0], ctx)]
    for j in range(1, len(case.x)):
        y = _as_site(case.x[j])
        hop = creation(y, ctx) @ annihilation(tuple(a + b for a, b in zip(y, case.z[j - 1])), ctx)
        A.append(evolve_heisenberg(H, hop, case.s[j - 1]))
    return spectral_norm(multicommutator(A[::-1]))


def tree_decay_check(case: TreeDecayCase, modes=("poly", "exp")) -> list[BoundReport]:
    if any(abs(sj) > case.t for sj in case.s) or case.t < 0:
        raise ValueError("need s_j in [-t, t]")
    if any(math.hypot(*z) != 1 for z in case.z):
        raise ValueError("need |z_j| = 1")
    lhs = tree_decay_lhs(case)
    normB0 = spectral_norm(case.B0)
    out = []
    for mode in modes:
        F = case.F_poly if mode == "poly" else case.F_exp
        alpha, D = constants(case.psi, F)
        rhs = tree_decay_rhs(normB0, case.m0, case.x, case.t, alpha, F, D)
        params = {"k": len(case.s), "mode": mode, "t": case.t, "K": corollary_K(F, alpha, case.t, D)}
        out.append(BoundReport(f"{case.case_id}-{mode}", f"tree-decay-{mode}", lhs, rhs, params))
    return out


def tree_decay_cases(n: int, seed: int, k: int = 2, n_sites: int = 8, t_max: float = 0.3, F_poly=None, F_exp=None) -> list[TreeDecayCase]:
    F_poly = F_poly or DecayFunction.polynomial(1, 1.0)
    F_exp = F_exp or DecayFunction.exponential(1, 1.0, 0.25)
    out = []
    for i in range(n):
        rng = np.random.default_rng((seed, i))
        region = _chain(n_sites)
        psi, V = random_chain_model(rng, region)
        m0 = int(rng.integers(0, 2))
        x = [(int(rng.integers(m0, n_sites - m0)),)]
        z = []
        for _ in range(k):
            zj = (int(rng.choice([-1, 1])),)
            lo, hi = max(0, -zj[0]), n_sites - max(0, zj[0])
            x.append((int(rng.integers(lo, hi)),))
            z.append(zj)
        t = float(rng.uniform(0, t_max))
        s = [float(v) for v in rng.uniform(-t, t, size=k)]
        B0 = random_operator(box_sites(m0, 1), rng)
        out.append(TreeDecayCase(f"td-{i:04d}", psi, V, region, B0, m0, x, z, s, t, F_poly, F_exp))
    return out


# telescoping series


@dataclass
class TelescopingCase:
    case_id: str
    psi: Interaction
    V: Potential | None
    B: FockOperator  # on Lambda_m around the origin
    m: int
    x: tuple
    N: int
    t: float
    F: DecayFunction


def telescoping_rhs(normB: float, n: int, m: int, t: float, alpha: float, F: DecayFunction, D: float) -> float:
    """2||B|| ||Psi||_W |t| exp(4D|t| ||Psi||_W) sum_{y in shell_n} sum_{z in Lambda_m} F(|z-y|)."""
    return 2 * normB * alpha * abs(t) * math.exp(4 * D * abs(t) * alpha) * shell_sum_full(F, n, m)


def telescoping_bound_check(case: TelescopingCase) -> list[BoundReport]:
    blocks = telescoping_blocks(case.B, case.t, case.x, case.m, case.N, case.psi, case.V)
    alpha, D = constants(case.psi, case.F)
    normB = spectral_norm(case.B)
    out = []
    for n, blk in zip(range(case.m + 1, case.N + 1), blocks[1:]):
        rhs = telescoping_rhs(normB, n, case.m, case.t, alpha, case.F, D)
        params = {"m": case.m, "n": n, "t": case.t, "psi_norm": alpha, "D": D}
        out.append(BoundReport(f"{case.case_id}-n{n}", "telescoping-block", spectral_norm(blk), rhs, params))
    return out


def telescoping_identity_defects(case: TelescopingCase) -> tuple[float, float]:
    """(max-entry defect of sum_n blocks against a direct evolution on
    Lambda_N + x, | ||block_m|| - ||B|| |)."""
    blocks = telescoping_blocks(case.B, case.t, case.x, case.m, case.N, case.psi, case.V)
    ctx = translated_box(case.N, case.x, case.psi.d)
    H = hamiltonian_on(case.psi, case.V, ctx)
    direct = evolve_heisenberg(H, translate(case.B.localized(), case.x, ctx), case.t)
    total = blocks[0]
    for b in blocks[1:]:
        total = total + b
    return max_entry(total - direct), abs(spectral_norm(blocks[0]) - spectral_norm(case.B))


def telescoping_cases(seed: int, m_values=(0, 1), max_sites: int = 8, t_max: float = 1.0, n_per_m: int = 3, F=None) -> list[TelescopingCase]:
    """Cases with N as large as the site budget allows (|Lambda_N| <= max_sites)."""
    F = F or DecayFunction.polynomial(1, 1.0)
    out = []
    i = 0
    for m in m_values:
        N = min(m + 3, (max_sites - 1) // 2)
        if N <= m:
            continue
        for _ in range(n_per_m):
            rng = np.random.default_rng((seed, i))
            x = (int(rng.integers(-3, 4)),)
            psi, V = random_chain_model(rng, translated_box(N, x, 1))
            B = random_operator(box_sites(m, 1), rng)
            out.append(TelescopingCase(f"tel-{i:04d}", psi, V, B, m, x, N, float(rng.uniform(-t_max, t_max)), F))
            i += 1
    return out


# non-autonomous variants


@dataclass
class NonautoCase:
    case_id: str
    psi0: Interaction
    psi1: Interaction
    amp: float  # Psi^(t) = psi0 + amp sin(freq t + phase) psi1
    freq: float
    phase: float
    V: Potential | None  # V^(t) = (1 + vamp cos(vfreq t)) V
    vamp: float
    vfreq: float
    L: int  # Lieb-Robinson variant lives on Lambda_L
    B1: FockOperator
    B2: FockOperator
    L1: int
    L2: int
    B: FockOperator
    s: float
    t: float
    F: DecayFunction


def sup_interaction_norm(psi0: Interaction, psi1: Interaction, amp: float, F: DecayFunction) -> float:
    """sup over |c| <= amp of ||psi0 + c psi1||_W, attained at c = +-amp by convexity."""
    if amp == 0:
        return w_norm_exact(psi0, F)
    return max(w_norm_exact(psi0 + psi1.scaled(c), F) for c in (amp, -amp))


def nonauto_protocol(case: NonautoCase, region) -> TimeProtocol:
    H0 = hamiltonian_on(case.psi0, case.V, region)
    if case.amp == 0 and case.vamp == 0:
        return TimeProtocol.constant(H0)
    drives = []
    if case.amp != 0:
        drives.append((lambda r: case.amp * math.sin(case.freq * r + case.phase), hamiltonian_on(case.psi1, None, region)))
    if case.vamp != 0 and case.V is not None:
        drives.append((lambda r: case.vamp * math.cos(case.vfreq * r), hamiltonian_on(Interaction(case.psi0.d), case.V, region)))
    return TimeProtocol.affine(H0, drives)


def nonautonomous_variants(case: NonautoCase) -> list[BoundReport]:
    d = case.psi0.d
    F = case.F
    alpha = sup_interaction_norm(case.psi0, case.psi1, case.amp, F)
    D = convolution_constant_bound(F)
    dt = case.t - case.s
    params = {"s": case.s, "t": case.t, "sup_psi_norm": alpha, "D": D}

    region = box_sites(case.L, d)
    s1, s2 = case.B1.localized().support, case.B2.localized().support
    if not (set(s1) < set(region) and set(s2) < set(region)):
        raise ValueError("supports must be proper subsets of Lambda_L")
    proto = nonauto_protocol(case, region)
    tB1 = evolve_nonautonomous(case.B1, case.s, case.t, proto, MAGNUS_TOL)
    B2 = case.B2.embed(proto.sites)
    lhs_lr = spectral_norm(tB1 @ B2 - B2 @ tB1)
    rhs_lr = lr_rhs(case.B1, case.B2, s1, s2, dt, case.psi0, F, D, alpha)

    support = case.B.localized().support
    if not set(support) <= set(box_sites(case.L1, d)) or case.L2 <= case.L1:
        raise ValueError("need support inside Lambda_L1 and L1 < L2")
    p1 = nonauto_protocol(case, box_sites(case.L1, d))
    p2 = nonauto_protocol(case, box_sites(case.L2, d))
    a = evolve_nonautonomous(case.B, case.s, case.t, p1, MAGNUS_TOL).embed(p2.sites)
    b = evolve_nonautonomous(case.B, case.s, case.t, p2, MAGNUS_TOL)
    lhs_cv = spectral_norm(b - a)
    rhs_cv = convergence_rhs(spectral_norm(case.B), sorted(support), case.L1, case.L2, dt, alpha, F, D)
    return [
        BoundReport(f"{case.case_id}-lr", "nonauto-lieb-robinson", lhs_lr, rhs_lr, params),
        BoundReport(f"{case.case_id}-conv", "nonauto-cauchy", lhs_cv, rhs_cv, params),
    ]


def nonauto_cases(n: int, seed: int, L: int = 3, L1: int = 1, L2: int = 3, span: float = 1.0, amp: float = 0.5, F=None) -> list[NonautoCase]:
    F = F or DecayFunction.polynomial(1, 1.0)
    out = []
    for i in range(n):
        rng = np.random.default_rng((seed, i))
        sites = box_sites(max(L, L2), 1)
        psi0, V = random_chain_model(rng, sites)
        psi1 = hopping_density_interaction({1: 1.0}, {})
        a = int(rng.integers(-L, L))
        B1 = random_operator([(a,)], rng, parity="even")
        b = int(rng.choice([y for y in range(-L, L + 1) if y != a]))
        B2 = random_operator([(b,)], rng)
        B = random_operator([(int(rng.integers(-L1, L1 + 1)),)], rng)
        s = float(rng.uniform(-1, 1))
        t = s + float(rng.uniform(-span, span))
        out.append(
            NonautoCase(
                f"na-{i:04d}", psi0, psi1, amp, float(rng.uniform(1, 3)), float(rng.uniform(0, 2 * math.pi)),
                V, 0.5, float(rng.uniform(1, 3)), L, B1, B2, L1, L2, B, s, t, F,
            )
        )
    return out


# propagator consistency


DYNAMICS_DEFECT = 1e-8
CONSTANT_DEFECT = 1e-9


@dataclass
class DynamicsCase:
    case_id: str
    H0: FockOperator
    H1: FockOperator  # H_t = H0 + amp sin(freq t + phase) H1
    amp: float
    freq: float
    phase: float
    times: tuple  # (s, r, t)
    B: FockOperator
    max_order: int = 6


def dynamics_protocol(case: DynamicsCase, scale: float = 1.0) -> TimeProtocol:
    return TimeProtocol.affine(case.H0 * scale, [(lambda r: case.amp * math.sin(case.freq * r + case.phase), case.H1 * scale)])


def dynamics_checks(case: DynamicsCase) -> list[BoundReport]:
    """Chapman-Kolmogorov, reverse cocycle, Dyson-Phillips truncation against
    the factorial envelope, and constant-protocol equivalence."""
    s, r, t = case.times
    proto = dynamics_protocol(case)
    U_ts = propagator(proto, s, t, MAGNUS_TOL).unitary.matrix
    U_tr = propagator(proto, r, t, MAGNUS_TOL).unitary.matrix
    U_rs = propagator(proto, s, r, MAGNUS_TOL).unitary.matrix
    ck = spectral_norm(U_ts - U_tr @ U_rs)
    B = case.B.embed(proto.sites)
    direct = evolve_nonautonomous(B, s, t, proto, MAGNUS_TOL)
    # tau_{t,s} = tau_{r,s} o tau_{t,r} in the Heisenberg picture
    chained = evolve_nonautonomous(evolve_nonautonomous(B, r, t, proto, MAGNUS_TOL), s, r, proto, MAGNUS_TOL)
    cocycle = spectral_norm(direct - chained)
    out = [
        BoundReport(f"{case.case_id}-ck", "chapman-kolmogorov", ck, DYNAMICS_DEFECT, {"times": list(case.times)}),
        BoundReport(f"{case.case_id}-cocycle", "reverse-cocycle", cocycle, DYNAMICS_DEFECT, {"times": list(case.times)}),
    ]
    # rescale so that sup ||H|| |t - s| <= 1, with sup ||H|| <= ||H0|| + amp ||H1||
    sup = spectral_norm(case.H0) + abs(case.amp) * spectral_norm(case.H1)
    span = abs(t - s)
    scaled = dynamics_protocol(case, 1.0 / (sup * span))
    exact = propagator(scaled, s, t, 1e-13).unitary.matrix
    for k in range(case.max_order + 1):
        err = spectral_norm(dyson_phillips(scaled, s, t, k, panels=2).unitary.matrix - exact)
        out.append(BoundReport(f"{case.case_id}-dyson{k}", "dyson-phillips", err, 1.0 / math.factorial(k + 1), {"order": k}))
    H = case.H0
    M = H.matrix
    generic = TimeProtocol(H.sites, lambda _: M)
    via_magnus = evolve_nonautonomous(B, s, t, generic, 1e-11)
    autonomous = evolve_heisenberg(H, B, t - s)
    out.append(BoundReport(f"{case.case_id}-const", "constant-protocol", spectral_norm(via_magnus - autonomous), CONSTANT_DEFECT, {}))
    return out


def dynamics_cases(n: int, seed: int, n_sites: int = 4, span: float = 1.5) -> list[DynamicsCase]:
    out = []
    for i in range(n):
        rng = np.random.default_rng((seed, i))
        sites = _chain(n_sites)
        psi, V = random_chain_model(rng, sites)
        H0 = hamiltonian_on(psi, V, sites)
        H1 = hamiltonian_on(hopping_density_interaction({1: 1.0}, {}), None, sites)
        times = tuple(float(v) for v in rng.uniform(-span, span, size=3))
        B = random_operator(list(sites[:2]), rng)
        out.append(DynamicsCase(f"dyn-{i:04d}", H0, H1, float(rng.uniform(0.2, 1.0)), float(rng.uniform(1, 4)), float(rng.uniform(0, 2 * math.pi)), times, B))
    return out
