"""Linear response of disordered interacting fermions to homogeneous
electric fields: Peierls perturbations, currents, paramagnetic conductivity,
energy increments and the finite-volume AC-conductivity measure.

Time evolution convention: tau_t(B) = e^{itH} B e^{-itH}.  Gibbs states
rho(B) = tr(e^{-beta H} B) / tr(e^{-beta H}) stand in for passive states.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import TimeProtocol, collocation_grid, propagator, spectrum_of
from .fock import FockOperator, annihilation, creation, embed_sum, number_operator, spectral_norm, zero
from .interactions import Interaction, discrete_laplacian_interaction, hamiltonian_on, hopping_density_interaction, random_potential
from .lattice import box_sites

IMAG_TOL = 1e-9
MERGE_TOL = 1e-9
INCREMENT_TOL = 1e-13


def nearest_neighbour_interaction(v: float, d: int = 1) -> Interaction:
    """Density-density repulsion v n_x n_y on nearest-neighbour pairs."""
    return hopping_density_interaction({}, {1: v / 2}, d=d, name=f"nn-density-{v}")


def _check_number_conserving(psi: Interaction):
    for ctx, M in psi.shapes.items():
        N = number_operator(ctx, ctx).matrix
        if np.max(np.abs(M @ N - N @ M), initial=0.0) > 1e-12:
            raise ValueError(f"interaction term on {ctx} does not conserve particle number")


def draw_omega(sites, rng: np.random.Generator) -> dict:
    return {x: float(w) for x, w in zip(sites, rng.uniform(-1.0, 1.0, size=len(sites)))}


@dataclass
class DisorderedModel:
    """Laplacian hopping plus Psi^IP plus the random potential lambda*omega(x) n_x
    on the box Lambda_L.  `l` is the radius of the box carrying currents and
    fields; it must leave room for the bonds y -> y + e_q."""

    L: int
    d: int = 1
    lam: float = 0.0
    seed: int | tuple = 0
    omega: dict | None = None
    interaction: Interaction | None = None
    beta: float = 1.0
    l: int | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("working box needs L >= 1")
        if self.l is None:
            self.l = self.L - 1
        if not 0 <= self.l <= self.L - 1:
            raise ValueError(f"active radius l={self.l} must satisfy 0 <= l <= L-1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.interaction is None:
            self.interaction = Interaction(self.d, {}, "none")
        if self.interaction.d != self.d:
            raise ValueError("interaction dimension mismatch")
        _check_number_conserving(self.interaction)
        if self.omega is None:
            self.omega = draw_omega(self.sites, np.random.default_rng(self.seed))
        missing = set(self.sites) - set(self.omega)
        if missing:
            raise ValueError(f"omega undefined on {sorted(missing)[:3]}")
        self.potential = random_potential(self.lam, {x: self.omega[x] for x in self.sites})

    @property
    def sites(self) -> tuple:
        return tuple(box_sites(self.L, self.d))

    @property
    def active_sites(self) -> list:
        return box_sites(self.l, self.d)

    @property
    def full_interaction(self) -> Interaction:
        return discrete_laplacian_interaction(self.d) + self.interaction

    def hamiltonian(self) -> FockOperator:
        H = self._cache.get("H")
        if H is None:
            H = hamiltonian_on(self.full_interaction, self.potential, self.sites)
            self._cache["H"] = H
        return H

    def omega_hash(self) -> str:
        data = ",".join(repr(self.omega[x]) for x in self.sites)
        return hashlib.sha256(data.encode()).hexdigest()[:16]

    def gibbs(self) -> "GibbsState":
        rho = self._cache.get("gibbs")
        if rho is None:
            rho = GibbsState(self.hamiltonian(), self.beta)
            self._cache["gibbs"] = rho
        return rho


@dataclass
class ModelFamily:
    """Seeded disorder realizations; realization r draws omega from
    default_rng((base_seed, r))."""

    L: int
    d: int = 1
    lam: float = 0.0
    base_seed: int = 0
    ip_strength: float = 0.5
    beta: float = 1.0
    l: int | None = None

    def realization(self, r: int) -> DisorderedModel:
        return DisorderedModel(
            self.L, self.d, self.lam, (self.base_seed, r), None, nearest_neighbour_interaction(self.ip_strength, self.d), self.beta, self.l
        )


# fields


def bump(t, T: float):
    """exp(1 - 1/(1-u^2)) with u = 2t/T - 1 on (0, T), zero elsewhere; and its t-derivative."""
    t = np.asarray(t, dtype=float)
    u = 2 * t / T - 1
    inside = np.abs(u) < 1
    g = np.zeros_like(u)
    dg = np.zeros_like(u)
    ui = u[inside]
    q = 1 - ui * ui
    gi = np.exp(1 - 1 / q)
    g[inside] = gi
    dg[inside] = gi * (-2 * ui / (q * q)) * (2 / T)
    return g, dg


@dataclass
class FieldProtocol:
    """Vector potential A(t) = amplitude * bump(t; duration), so A = 0 for
    t <= 0 and E = -dA/dt; field strength eta inside Lambda_l."""

    amplitude: tuple
    duration: float = 2.0
    eta: float = 1.0
    l: int = 1

    def __post_init__(self):
        self.amplitude = tuple(float(a) for a in self.amplitude)
        if not self.duration > 0:
            raise ValueError("duration must be positive")

    @property
    def d(self) -> int:
        return len(self.amplitude)

    def vector_potential(self, t: float) -> np.ndarray:
        g, _ = bump(t, self.duration)
        return float(g) * np.array(self.amplitude)

    def electric_field(self, t) -> np.ndarray:
        """E(t) per axis; vectorized over t (last axis = components)."""
        _, dg = bump(t, self.duration)
        return -np.multiply.outer(dg, np.array(self.amplitude))

    def field_integral(self, t: float) -> np.ndarray:
        """int_0^t E = -A(t)."""
        return -self.vector_potential(t)

    def with_eta(self, eta: float) -> "FieldProtocol":
        return FieldProtocol(self.amplitude, self.duration, eta, self.l)


def _unit(z) -> int:
    z = tuple(int(c) for c in z)
    nz = [i for i, c in enumerate(z) if c != 0]
    if len(nz) != 1 or abs(z[nz[0]]) != 1:
        raise ValueError(f"{z} is not a unit lattice vector")
    return nz[0]


def peierls_weight(protocol: FieldProtocol, x, z, t: float) -> complex:
    """w_{x,x+z}(eta,t) for z = +-e_q; the Laplacian element <e_x, Delta e_{x+z}> is -1."""
    q = _unit(z)
    if protocol.eta == 0:
        return 0j
    phase = z[q] * protocol.eta * protocol.field_integral(t)[q]
    if phase == 0:
        return 0j
    return -(np.exp(-1j * phase) - 1)


def _bonds(l: int, d: int):
    for y in box_sites(l, d):
        for q in range(d):
            yield q, y, tuple(c + (i == q) for i, c in enumerate(y))


def _check_bonds(l: int, d: int, ctx):
    inside = set(ctx)
    for _, y, y1 in _bonds(l, d):
        if y1 not in inside:
            raise ValueError(f"bond ({y}, {y1}) leaves the working box")


def perturbation_operator(protocol: FieldProtocol, t: float, ctx) -> FockOperator:
    """W_t = sum over bonds {y, y+e_q}, y in Lambda_l, of both orientations
    w_{u,v} a*_u a_v.  Supported in Lambda_{l+1}, self-adjoint."""
    ctx = tuple(ctx)
    d = protocol.d
    _check_bonds(protocol.l, d, ctx)
    terms = []
    for q, y, y1 in _bonds(protocol.l, d):
        e = tuple(int(i == q) for i in range(d))
        w_f = peierls_weight(protocol, y, e, t)
        w_b = peierls_weight(protocol, y1, tuple(-c for c in e), t)
        if w_f == 0 and w_b == 0:
            continue
        loc = (y, y1)
        terms.append(w_f * (creation(y, loc) @ annihilation(y1, loc)) + w_b * (creation(y1, loc) @ annihilation(y, loc)))
    if not terms:
        return zero(ctx)
    return embed_sum(terms, ctx)


def current_observable(x, y, ctx) -> FockOperator:
    """I_{(x,y)} = i (a*_y a_x - a*_x a_y)."""
    ctx = tuple(ctx)
    if tuple(x) == tuple(y):
        return zero(ctx)
    return 1j * (creation(y, ctx) @ annihilation(x, ctx) - creation(x, ctx) @ annihilation(y, ctx))


def bond_currents(l: int, d: int, ctx) -> tuple[list[FockOperator], list[FockOperator]]:
    """Per axis q: J_q = sum_{y in Lambda_l} I_{(y+e_q, y)} and the bond
    hopping K_q = sum (a*_y a_{y+e_q} + h.c.)."""
    ctx = tuple(ctx)
    _check_bonds(l, d, ctx)
    J = [[] for _ in range(d)]
    K = [[] for _ in range(d)]
    for q, y, y1 in _bonds(l, d):
        loc = (y, y1)
        J[q].append(current_observable(y1, y, loc))
        hop = creation(y, loc) @ annihilation(y1, loc)
        K[q].append(hop + hop.dag())
    return [embed_sum(j, ctx) for j in J], [embed_sum(k, ctx) for k in K]


def field_drives(model: DisorderedModel, protocol: FieldProtocol) -> list:
    """W_t as sum_q (1 - cos(eta A_q)) K_q - sin(eta A_q) J_q."""
    J, K = bond_currents(protocol.l, model.d, model.sites)
    drives = []
    for q in range(model.d):
        def theta(t, q=q):
            return protocol.eta * protocol.vector_potential(t)[q]

        drives.append((lambda t, th=theta: 1 - math.cos(th(t)), K[q]))
        drives.append((lambda t, th=theta: -math.sin(th(t)), J[q]))
    return drives


def perturbed_protocol(model: DisorderedModel, protocol: FieldProtocol) -> TimeProtocol:
    if protocol.d != model.d:
        raise ValueError("field dimension differs from the lattice dimension")
    return TimeProtocol.affine(model.hamiltonian(), field_drives(model, protocol))


# Gibbs states


class GibbsState:
    def __init__(self, H: FockOperator, beta: float):
        if not beta > 0:
            raise ValueError("beta must be positive")
        self.H = H
        self.beta = float(beta)
        self.spectrum = spectrum_of(H)
        E = self.spectrum.energies
        w = np.exp(-self.beta * (E - E.min()))
        self.p = w / w.sum()

    def __call__(self, B: FockOperator) -> complex:
        Bt = self.spectrum.to_eigen(B.embed(self.H.sites).matrix)
        return complex(np.dot(self.p, np.diag(Bt)))


def gibbs_state(H: FockOperator, beta: float) -> GibbsState:
    return GibbsState(H, beta)


# paramagnetic conductivity


class _Lehmann:
    """Eigenbasis data for one realization: energies, Bohr frequencies,
    Gibbs weights and the axis currents J_q in the eigenbasis."""

    def __init__(self, model: DisorderedModel):
        rho = model.gibbs()
        eig = rho.spectrum
        self.E = eig.energies
        self.p = rho.p
        self.omega = self.E[:, None] - self.E[None, :]
        J, _ = bond_currents(model.l, model.d, model.sites)
        self.Q = [eig.to_eigen(j.matrix) for j in J]
        self.spectrum = eig
        self.volume = len(model.active_sites)
        # (p_m - p_n) / omega_mn, with its limit -beta p_n at omega = 0
        om = self.omega
        safe = np.where(om == 0, 1.0, om)
        ratio = np.where(om == 0, -model.beta, np.expm1(-model.beta * om) / safe)
        self.G = self.p[None, :] * ratio


def _lehmann(model: DisorderedModel) -> _Lehmann:
    data = model._cache.get("lehmann")
    if data is None:
        data = _Lehmann(model)
        model._cache["lehmann"] = data
    return data


def _phi(t: float, omega: np.ndarray) -> np.ndarray:
    # int_0^t e^{-i s omega} ds
    return t * np.exp(-0.5j * t * omega) * np.sinc(t * omega / (2 * np.pi))


def paramagnetic_coefficient(model: DisorderedModel, t: float, k: int, q: int) -> tuple[complex, FockOperator]:
    """{C_p(t)}_{k,q} = |Lambda_l|^{-1} sum_{x,y} int_0^t i[tau_{-s}(I_(y+e_q,y)), I_(x+e_k,x)] ds,
    integrated in closed form in the eigenbasis; returns (Gibbs value, observable)."""
    data = _lehmann(model)
    A = data.Q[q] * _phi(t, data.omega)
    B = data.Q[k]
    Ct = 1j * (A @ B - B @ A) / data.volume
    value = complex(np.dot(data.p, np.diag(Ct)))
    return value, FockOperator(data.spectrum.from_eigen(Ct), model.sites)


def _pair_coefficients(data: _Lehmann) -> np.ndarray:
    """c[k,q,m,n] = |Lambda|^{-1} (p_m - p_n)/omega_mn (J_q)_mn (J_k)_nm."""
    d = len(data.Q)
    c = np.empty((d, d) + data.omega.shape, dtype=complex)
    for k in range(d):
        for q in range(d):
            c[k, q] = data.G * data.Q[q] * data.Q[k].T / data.volume
    return c


def xi_single(model: DisorderedModel, times) -> np.ndarray:
    """rho(C_p(t)) for one realization on a time grid, shape (n_t, d, d), complex."""
    data = _lehmann(model)
    c = _pair_coefficients(data)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    om = data.omega.ravel()
    flat = c.reshape(c.shape[0], c.shape[1], -1)
    phase = 1 - np.exp(-1j * np.multiply.outer(times, om))  # (n_t, P)
    return np.einsum("tp,kqp->tkq", phase, flat)


@dataclass
class XiResult:
    times: np.ndarray
    mean: np.ndarray  # (n_t, d, d)
    stderr: np.ndarray
    max_imag: float
    provenance: list = field(default_factory=list)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def xi_p(family: ModelFamily, times, n_realizations: int, threads: int = 1) -> XiResult:
    """Disorder average of rho(C_p(t)) with its standard error."""
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    times = np.atleast_1d(np.asarray(times, dtype=float))

    def one(r):
        model = family.realization(r)
        return xi_single(model, times), {"realization": r, "seed": [family.base_seed, r], "omega_hash": model.omega_hash()}

    results = _map(one, range(n_realizations), threads)
    vals = np.stack([v for v, _ in results])
    max_imag = float(np.max(np.abs(vals.imag), initial=0.0))
    re = vals.real
    mean = re.mean(axis=0)
    if n_realizations > 1:
        stderr = re.std(axis=0, ddof=1) / math.sqrt(n_realizations)
    else:
        stderr = np.zeros_like(mean)
    return XiResult(times, mean, stderr, max_imag, [p for _, p in results])


def linear_response_current(model: DisorderedModel, protocol: FieldProtocol, t: float, nodes: int = 16, panels: int = 16) -> np.ndarray:
    """J_p(t)_k = sum_q int_0^t rho(C_p(t-u))_{kq} E_q(u) du (Gibbs value).

    Time invariance of rho removes the outer tau_t.  The u-integral runs
    over the field support by composite Gauss-Legendre quadrature."""
    hi = min(t, protocol.duration)
    if hi <= 0:
        return np.zeros(model.d)
    r, W, _ = collocation_grid(0.0, hi, nodes, panels)
    xi = xi_single(model, t - r)  # (n, d, d)
    E = protocol.electric_field(r)  # (n, d)
    out = np.einsum("n,nkq,nq->k", W, xi, E)
    return out.real


def full_current_increment(model: DisorderedModel, protocol: FieldProtocol, t: float, tol: float = INCREMENT_TOL) -> np.ndarray:
    """rho of |Lambda_l|^{-1} sum_x (tilde tau_{t,0} - tau_t)(I_(x+e_k,x)) per axis k."""
    J, _ = bond_currents(protocol.l, model.d, model.sites)
    rho = model.gibbs()
    vol = len(box_sites(protocol.l, model.d))
    if protocol.eta == 0 or t <= 0:
        return np.zeros(model.d)
    U = propagator(perturbed_protocol(model, protocol), 0.0, t, tol).unitary.matrix
    eig = rho.spectrum
    out = np.empty(model.d)
    for k in range(model.d):
        pert = U.conj().T @ J[k].matrix @ U
        free = eig.evolve(J[k].matrix, t)
        val = rho(FockOperator(pert - free, model.sites)) / vol
        if abs(val.imag) > IMAG_TOL:
            raise ArithmeticError(f"current expectation has imaginary part {val.imag}")
        out[k] = val.real
    return out


# increments


def energy_observable(Phi: Interaction, model: DisorderedModel) -> FockOperator:
    """U^Phi_{Lambda_L} = sum of Phi_Z over Z inside the working box."""
    return hamiltonian_on(Phi, None, model.sites)


def increment(model: DisorderedModel, protocol: FieldProtocol, Phi: Interaction, s: float, t: float, eta: float | None = None, tol: float = INCREMENT_TOL) -> FockOperator:
    """T_{t,s} = tilde tau_{t,s}(U^Phi) - tau_{t,s}(U^Phi)."""
    if eta is not None:
        protocol = protocol.with_eta(eta)
    ctx = model.sites
    if protocol.eta == 0 or t == s:
        # all Peierls weights vanish: the two dynamics coincide
        return zero(ctx)
    U = energy_observable(Phi, model).matrix
    Ut = propagator(perturbed_protocol(model, protocol), s, t, tol).unitary.matrix
    eig = model.gibbs().spectrum
    return FockOperator(Ut.conj().T @ U @ Ut - eig.evolve(U, t - s), ctx)


def _support_window(protocol: FieldProtocol, s: float, t: float):
    if t < s:
        raise ValueError("derivative formulas need s <= t")
    return max(s, 0.0), min(t, protocol.duration)


def _w_taylor(model: DisorderedModel, protocol: FieldProtocol, order: int):
    """Eigenbasis matrices M_j(r) with W_t(eta) = sum_j eta^j M_j(t)."""
    J, K = bond_currents(protocol.l, model.d, model.sites)
    eig = model.gibbs().spectrum
    Jt = [eig.to_eigen(j.matrix) for j in J]
    Kt = [eig.to_eigen(k.matrix) for k in K]

    def coeff(j, r):
        A = protocol.vector_potential(r)
        out = np.zeros_like(Jt[0])
        f = math.factorial(j)
        for q in range(model.d):
            a = A[q] ** j / f
            if j % 2 == 0:
                # 1 - cos(x) = sum_{j even >= 2} -(-1)^{j/2} x^j / j!
                out += -((-1) ** (j // 2)) * a * Kt[q]
            else:
                # -sin(x) = sum_{j odd} -(-1)^{(j-1)/2} x^j / j!
                out += -((-1) ** ((j - 1) // 2)) * a * Jt[q]
        return out

    return coeff


def increment_taylor(model: DisorderedModel, protocol: FieldProtocol, Phi: Interaction, s: float, t: float, order: int, nodes: int = 16, panels: int = 8) -> list[FockOperator]:
    """Taylor coefficients T_1..T_order of eta -> T_{t,s}(eta) at eta = 0.

    With tilde U = U_0 V and V(r) = 1 - i int_s^r W_I V, the eta-expansion
    V = sum eta^n V_n satisfies V_n(r) = -i int_s^r sum_j W_{I,j} V_{n-j},
    evaluated by collocation on the field support."""
    eig = model.gibbs().spectrum
    E = eig.energies
    om = E[:, None] - E[None, :]
    X = eig.to_eigen(energy_observable(Phi, model).matrix) * np.exp(1j * (t - s) * om)
    lo, hi = _support_window(protocol, s, t)
    dim = len(E)
    V_end = [np.eye(dim, dtype=complex)] + [np.zeros((dim, dim), dtype=complex) for _ in range(order)]
    if hi > lo:
        coeff = _w_taylor(model, protocol, order)
        r, W, S = collocation_grid(lo, hi, nodes, panels)
        forward = W[None, :] - S  # int_lo^{r_i}
        phases = np.exp(1j * np.multiply.outer(r - s, om))
        WI = [None] + [np.stack([coeff(j, ri) for ri in r]) * phases for j in range(1, order + 1)]
        V = [np.broadcast_to(np.eye(dim, dtype=complex), (len(r), dim, dim))]
        for n in range(1, order + 1):
            integrand = sum(WI[j] @ V[n - j] for j in range(1, n + 1))
            V.append(-1j * np.tensordot(forward, integrand, axes=(1, 0)))
            V_end[n] = -1j * np.tensordot(W, integrand, axes=(0, 0))
    out = []
    for n in range(1, order + 1):
        Tn = sum(V_end[a].conj().T @ X @ V_end[n - a] for a in range(n + 1))
        out.append(FockOperator(eig.from_eigen(Tn), model.sites))
    return out


def increment_derivative_integral(model: DisorderedModel, protocol: FieldProtocol, Phi: Interaction, s: float, t: float, nodes: int = 16, panels: int = 8) -> FockOperator:
    """d/d eta of T_{t,s} at eta = 0 as the single time integral
    i int_s^t tau_{s1,s}([dW_{s1}, tau_{t,s1}(U^Phi)]) ds1, dW = -sum_q A_q J_q."""
    J, _ = bond_currents(protocol.l, model.d, model.sites)
    eig = model.gibbs().spectrum
    U = eig.to_eigen(energy_observable(Phi, model).matrix)
    Jt = [eig.to_eigen(j.matrix) for j in J]
    E = eig.energies
    om = E[:, None] - E[None, :]
    lo, hi = _support_window(protocol, s, t)
    acc = np.zeros_like(U)
    if hi > lo:
        r, W, _ = collocation_grid(lo, hi, nodes, panels)
        for ri, wi in zip(r, W):
            A = protocol.vector_potential(ri)
            dW = -sum(A[q] * Jt[q] for q in range(model.d))
            inner = U * np.exp(1j * (t - ri) * om)
            comm = dW @ inner - inner @ dW
            acc += wi * 1j * comm * np.exp(1j * (ri - s) * om)
    return FockOperator(eig.from_eigen(acc), model.sites)


def taylor_slopes(model: DisorderedModel, protocol: FieldProtocol, Phi: Interaction, s: float, t: float, etas: Sequence[float] = (1e-1, 1e-2, 1e-3), max_order: int = 2) -> dict:
    """Least-squares log-log slope of ||T(eta) - sum_{n<=m} eta^n T_n|| for m = 0..max_order."""
    coeffs = increment_taylor(model, protocol, Phi, s, t, max_order)
    incs = [increment(model, protocol, Phi, s, t, eta) for eta in etas]
    slopes, norms = {}, {}
    x = np.log(np.asarray(etas))
    for m in range(max_order + 1):
        rem = []
        for eta, T in zip(etas, incs):
            R = T.matrix - sum(eta ** (n + 1) * coeffs[n].matrix for n in range(m))
            rem.append(spectral_norm(FockOperator(R, model.sites)))
        norms[m] = rem
        y = np.log(np.maximum(rem, 1e-300))
        slopes[m] = float(np.polyfit(x, y, 1)[0])
    return {"slopes": slopes, "remainders": norms, "etas": list(etas)}


# AC-conductivity measure


@dataclass
class SpectralMeasure:
    """Finite atomic d x d matrix-valued measure; `merged` counts Bohr
    frequencies absorbed into an atom with a nearby frequency."""

    nus: np.ndarray
    weights: np.ndarray  # (n_atoms, d, d)
    merged: int = 0
    provenance: list = field(default_factory=list)

    @property
    def atoms(self) -> list:
        return list(zip(self.nus.tolist(), self.weights))

    def total_mass(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    def zero_atom(self) -> np.ndarray:
        sel = self.nus == 0
        return self.weights[sel].sum(axis=0)

    def reconstruct(self, times) -> np.ndarray:
        """-(t^2/2) mu({0}) + sum_{nu != 0} (cos(t nu) - 1) nu^{-2} mu({nu})."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        nz = self.nus != 0
        nu = self.nus[nz]
        # cos x - 1 = -2 sin^2(x/2), stable at small x
        kern = -2 * np.sin(np.multiply.outer(times, nu) / 2) ** 2 / nu**2
        out = np.einsum("ta,akq->tkq", kern, self.weights[nz])
        return out - 0.5 * (times**2)[:, None, None] * self.zero_atom()[None]

    def ac_part(self) -> "SpectralMeasure":
        """mu_AC: nu^{-2} mu restricted away from 0."""
        nz = self.nus != 0
        return SpectralMeasure(self.nus[nz], self.weights[nz] / self.nus[nz, None, None] ** 2, self.merged, self.provenance)

    def psd_defect(self) -> float:
        """max(0, -min eigenvalue) over atoms, plus the worst asymmetry of any weight."""
        if len(self.nus) == 0:
            return 0.0
        sym = np.max(np.abs(self.weights - np.swapaxes(self.weights, 1, 2)))
        low = min(np.linalg.eigvalsh((w + w.T) / 2)[0] for w in self.weights)
        return float(max(0.0, -low, sym))

    def symmetry_defect(self) -> float:
        """Worst mismatch between the atom at nu and its partner at -nu."""
        order = np.argsort(self.nus)
        nus, ws = self.nus[order], self.weights[order]
        worst = 0.0
        for nu, w in zip(nus, ws):
            j = int(np.argmin(np.abs(nus + nu)))
            worst = max(worst, abs(nus[j] + nu), float(np.max(np.abs(ws[j] - w.T))))
        return worst

    def to_json(self) -> dict:
        return {
            "atoms": [{"nu": float(n), "weight_matrix": w.tolist()} for n, w in zip(self.nus, self.weights)],
            "merged": self.merged,
            "provenance": self.provenance,
        }


def _cluster(nus: np.ndarray, weights: np.ndarray, tol: float):
    order = np.argsort(nus, kind="stable")
    nus, weights = nus[order], weights[order]
    out_nu, out_w = [], []
    merged = 0
    start = 0
    for i in range(1, len(nus) + 1):
        if i == len(nus) or nus[i] - nus[i - 1] > tol:
            grp = nus[start:i]
            has_zero = bool(np.any(grp == 0))
            out_nu.append(0.0 if has_zero else float(grp.mean()))
            out_w.append(weights[start:i].sum(axis=0))
            merged += i - start - 1
            start = i
    return np.array(out_nu), np.array(out_w), merged


def measure_atoms(model: DisorderedModel) -> tuple[np.ndarray, np.ndarray]:
    """Unmerged Lehmann atoms (omega_mn, mu weight) of one realization.

    mu_{kq}({omega}) = |Lambda|^{-1} (p_n - p_m) omega_mn Re(conj(J_k)_mn (J_q)_mn),
    PSD because (p_n - p_m) omega_mn >= 0 for Gibbs weights."""
    data = _lehmann(model)
    d = len(data.Q)
    pos = data.G * data.omega * data.omega  # (p_m - p_n) omega, <= 0
    nus = data.omega.ravel()
    w = np.empty((nus.size, d, d))
    for k in range(d):
        for q in range(d):
            w[:, k, q] = (-pos * (data.Q[k].conj() * data.Q[q]).real).ravel() / data.volume
    return nus, w


def ac_measure(family: ModelFamily, n_realizations: int, threads: int = 1, merge_tol: float = MERGE_TOL) -> SpectralMeasure:
    """Atomic proxy for mu from the disorder-averaged Lehmann representation."""
    if n_realizations < 1:
        raise ValueError("need at least one realization")

    def one(r):
        model = family.realization(r)
        nus, w = measure_atoms(model)
        keep = np.any(w != 0, axis=(1, 2)) | (nus == 0)
        return nus[keep], w[keep], {"realization": r, "seed": [family.base_seed, r], "omega_hash": model.omega_hash()}

    parts = _map(one, range(n_realizations), threads)
    nus = np.concatenate([p[0] for p in parts])
    ws = np.concatenate([p[1] for p in parts]) / n_realizations
    nu, w, merged = _cluster(nus, ws, merge_tol)
    return SpectralMeasure(nu, w, merged, [p[2] for p in parts])


def moment_report(measure: SpectralMeasure, max_order: int) -> dict:
    """int nu^{m+1} mu_AC(d nu) for m = 0..max_order; odd powers vanish by
    symmetry, even powers are PSD."""
    ac = measure.ac_part()
    moments = {}
    odd, psd = 0.0, 0.0
    for m in range(max_order + 1):
        p = m + 1
        M = np.einsum("a,akq->kq", ac.nus**p, ac.weights) if len(ac.nus) else np.zeros_like(measure.total_mass())
        moments[m] = M
        if p % 2:
            odd = max(odd, float(np.max(np.abs(M), initial=0.0)))
        else:
            psd = max(psd, max(0.0, -float(np.linalg.eigvalsh((M + M.T) / 2)[0])))
    return {
        "moments": moments,
        "odd_defect": odd,
        "psd_defect": psd,
        "finite": all(np.all(np.isfinite(M)) for M in moments.values()),
        "total_mass": measure.total_mass(),
    }
