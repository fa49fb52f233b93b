import numpy as np
import pytest
from scipy.integrate import quad_vec

from lrlab.dynamics import evolve_heisenberg
from lrlab.fock import Parity, creation, gauge_transform, identity, number_operator, parity, random_operator, spectral_norm
from lrlab.interactions import Interaction
from lrlab.lattice import box_sites
from lrlab.response import (
    DisorderedModel,
    FieldProtocol,
    ModelFamily,
    ac_measure,
    bond_currents,
    current_observable,
    field_drives,
    full_current_increment,
    gibbs_state,
    increment,
    increment_derivative_integral,
    increment_taylor,
    linear_response_current,
    measure_atoms,
    moment_report,
    nearest_neighbour_interaction,
    paramagnetic_coefficient,
    peierls_weight,
    perturbation_operator,
    taylor_slopes,
    xi_p,
    xi_single,
)


@pytest.fixture(scope="module")
def family():
    return ModelFamily(L=2, d=1, lam=0.5, base_seed=11)


@pytest.fixture(scope="module")
def model(family):
    return family.realization(0)


FIELD = FieldProtocol((1.0,), duration=2.0, eta=1.0, l=1)


def test_model_validation():
    with pytest.raises(ValueError):
        DisorderedModel(2, omega={(x,): 2.0 for x in range(-2, 3)})
    with pytest.raises(ValueError):
        DisorderedModel(2, l=2)
    # a*_0 a*_1 + h.c. changes the particle number by two
    ctx = ((0,), (1,))
    pair = creation((0,), ctx) @ creation((1,), ctx)
    hop = Interaction(1, {ctx: (pair + pair.dag()).matrix})
    with pytest.raises(ValueError):
        DisorderedModel(2, interaction=hop)


def test_hamiltonian_conserves_number(family):
    for r in range(3):
        m = family.realization(r)
        H = m.hamiltonian()
        N = number_operator(m.sites, m.sites)
        assert np.max(np.abs((H @ N - N @ H).matrix)) == 0.0
        assert all(-1 <= w <= 1 for w in m.omega.values())
    assert family.realization(1).omega_hash() != family.realization(2).omega_hash()
    assert family.realization(1).omega_hash() == family.realization(1).omega_hash()


def test_peierls_weights():
    rng = np.random.default_rng(0)
    assert peierls_weight(FIELD.with_eta(0.0), (0,), (1,), 1.0) == 0
    assert peierls_weight(FIELD, (0,), (1,), -0.5) == 0
    assert peierls_weight(FIELD, (0,), (1,), 2.5) == 0
    fp2 = FieldProtocol((0.7, -1.3), 1.5, 1.0, 1)
    for _ in range(50):
        t, eta = rng.uniform(-0.5, 2.0), rng.uniform(-2, 2)
        p = fp2.with_eta(eta)
        x = tuple(int(v) for v in rng.integers(-3, 4, size=2))
        q = int(rng.integers(2))
        e = tuple(int(i == q) for i in range(2))
        y = tuple(a + b for a, b in zip(x, e))
        w = peierls_weight(p, x, e, t)
        assert np.conj(w) == pytest.approx(peierls_weight(p, y, tuple(-c for c in e), t), abs=1e-15)
        assert abs(w) <= 2
    with pytest.raises(ValueError):
        peierls_weight(FIELD, (0,), (2,), 1.0)


def test_perturbation_operator(model):
    ctx = model.sites
    assert np.max(np.abs(perturbation_operator(FIELD.with_eta(0.0), 1.0, ctx).matrix)) == 0
    drives = field_drives(model, FIELD)
    for t in (0.3, 1.0, 1.7):
        W = perturbation_operator(FIELD, t, ctx)
        assert W.is_hermitian(1e-13)
        assert W.support <= set(box_sites(2, 1))
        K1 = max(abs(peierls_weight(FIELD, (0,), z, t)) for z in [(1,), (-1,)])
        assert spectral_norm(W) <= K1 * 3 * 3 + 1e-12
        affine = sum((f(t) * Hi.matrix for f, Hi in drives), np.zeros_like(W.matrix))
        assert np.max(np.abs(W.matrix - affine)) <= 1e-14
    with pytest.raises(ValueError):
        perturbation_operator(FieldProtocol((1.0,), 2.0, 1.0, 2), 1.0, ctx)


def test_current_observable():
    ctx = tuple(box_sites(2, 1))
    assert np.max(np.abs(current_observable((0,), (0,), ctx).matrix)) == 0
    I = current_observable((0,), (1,), ctx)
    assert I.is_hermitian(1e-13)
    assert parity(I) == Parity("Even", True)
    assert np.max(np.abs(gauge_transform(I, 0.37).matrix - I.matrix)) <= 1e-14
    assert np.array_equal(current_observable((1,), (0,), ctx).matrix, -I.matrix)


def test_gibbs_state(model):
    rho = gibbs_state(model.hamiltonian(), 1.0)
    rng = np.random.default_rng(1)
    assert rho(identity(model.sites)) == pytest.approx(1.0, abs=1e-14)
    for _ in range(5):
        B = random_operator(list(model.sites[:3]), rng)
        assert rho(B.dag() @ B).real >= -1e-12
        t = rng.uniform(-3, 3)
        assert abs(rho(evolve_heisenberg(model.hamiltonian(), B, t)) - rho(B)) <= 1e-9


def test_paramagnetic_coefficient_quadrature(model):
    v0, C0 = paramagnetic_coefficient(model, 0.0, 0, 0)
    assert v0 == 0 and np.max(np.abs(C0.matrix)) == 0
    J, _ = bond_currents(model.l, 1, model.sites)
    H = model.hamiltonian()
    vol = len(model.active_sites)
    t = 1.3

    def integrand(s):
        A = evolve_heisenberg(H, J[0], -s).matrix
        return (1j * (A @ J[0].matrix - J[0].matrix @ A) / vol).ravel()

    ref, _ = quad_vec(integrand, 0, t, epsabs=1e-13, epsrel=1e-13)
    val, C = paramagnetic_coefficient(model, t, 0, 0)
    assert np.max(np.abs(C.matrix.ravel() - ref)) <= 1e-8
    assert C.is_hermitian(1e-12)
    assert abs(val.imag) <= 1e-12
    assert val == pytest.approx(model.gibbs()(C), abs=1e-13)


def test_xi_p(family, model):
    res = xi_p(family, [0.0, 0.5, 1.5], 1)
    assert np.all(res.mean[0] == 0)
    assert res.mean[1, 0, 0] == pytest.approx(paramagnetic_coefficient(model, 0.5, 0, 0)[0].real, abs=1e-13)
    assert res.provenance[0]["omega_hash"] == model.omega_hash()
    clean = ModelFamily(L=2, lam=0.0, base_seed=4)
    r = xi_p(clean, [0.7, 2.0], 6)
    assert np.max(r.stderr) <= 1e-15
    many = xi_p(family, [0.4, 1.0], 8)
    par = xi_p(family, [0.4, 1.0], 8, threads=3)
    assert np.array_equal(many.mean, par.mean)
    assert many.max_imag <= 1e-9
    assert np.all(many.stderr > 0)


def test_linear_response(model):
    assert np.all(linear_response_current(model, FieldProtocol((0.0,), 2.0, 1.0, 1), 1.5) == 0)
    assert np.all(linear_response_current(model, FIELD, -0.2) == 0)
    assert np.all(linear_response_current(model, FIELD, 0.0) == 0)
    t, h = 2.6, 1e-3
    jp = linear_response_current(model, FIELD, t)
    fd = (full_current_increment(model, FIELD.with_eta(h), t) - full_current_increment(model, FIELD.with_eta(-h), t)) / (2 * h)
    assert abs(jp[0]) > 1e-3
    assert abs(fd[0] - jp[0]) <= 1e-3 * abs(jp[0])


def test_increment_basic(model):
    Phi = model.full_interaction
    assert np.max(np.abs(increment(model, FIELD, Phi, 0.0, 2.0, eta=0.0).matrix)) == 0
    assert np.max(np.abs(increment(model, FIELD, Phi, 1.0, 1.0, eta=0.5).matrix)) == 0
    T = increment(model, FIELD, Phi, 0.0, 2.0, eta=0.3)
    assert T.is_hermitian(1e-10)
    assert spectral_norm(T) > 0


def test_increment_first_derivative(model):
    Phi = model.full_interaction + nearest_neighbour_interaction(0.3)
    t = 2.4
    D1 = increment_derivative_integral(model, FIELD, Phi, 0.0, t)
    h = 1e-5
    cd = (increment(model, FIELD, Phi, 0.0, t, h).matrix - increment(model, FIELD, Phi, 0.0, t, -h).matrix) / (2 * h)
    assert np.max(np.abs(cd - D1.matrix)) <= 1e-6 * max(1.0, spectral_norm(D1))
    coll = increment_taylor(model, FIELD, Phi, 0.0, t, 1)[0]
    assert np.max(np.abs(coll.matrix - D1.matrix)) <= 1e-10
    # before the field is switched on nothing happens
    assert np.max(np.abs(increment_derivative_integral(model, FIELD, Phi, -1.0, 0.0).matrix)) == 0


def test_increment_taylor_slopes(model):
    rep = taylor_slopes(model, FIELD, model.full_interaction, 0.0, 2.2)
    for m in range(3):
        assert rep["slopes"][m] >= m + 0.9


def test_ac_measure(family):
    times = np.linspace(0, 4, 16)
    mu = ac_measure(family, 1)
    ref = xi_single(family.realization(0), times)
    assert np.max(np.abs(mu.reconstruct(times) - ref.real)) <= 1e-8
    assert np.max(np.abs(ref.imag)) <= 1e-12
    assert mu.psd_defect() <= 1e-9
    assert mu.symmetry_defect() <= 1e-9
    rep = moment_report(mu, 8)
    assert rep["odd_defect"] <= 1e-9 and rep["psd_defect"] <= 1e-9 and rep["finite"]
    nus, w = measure_atoms(family.realization(0))
    assert np.allclose(rep["total_mass"], w.sum(axis=0), atol=1e-14)
    avg = ac_measure(family, 4)
    ref4 = xi_p(family, times, 4).mean
    assert np.max(np.abs(avg.reconstruct(times) - ref4)) <= 1e-8
    assert len(avg.provenance) == 4


def test_ac_measure_two_dimensions():
    fam = ModelFamily(L=1, d=2, lam=0.5, base_seed=2, l=0)
    mu = ac_measure(fam, 1)
    assert mu.weights.shape[1:] == (2, 2)
    times = np.linspace(0, 3, 8)
    ref = xi_single(fam.realization(0), times)
    assert np.max(np.abs(ref.imag)) <= 1e-9
    assert np.max(np.abs(mu.reconstruct(times) - ref.real)) <= 1e-8
    assert mu.psd_defect() <= 1e-9 and mu.symmetry_defect() <= 1e-9


def test_zero_frequency_atom_carries_no_mass(family):
    mu = ac_measure(family, 2)
    assert np.max(np.abs(mu.zero_atom())) <= 1e-15
    assert mu.ac_part().nus.size == np.count_nonzero(mu.nus)
