import itertools

import numpy as np
import pytest

from lrlab.fock import (
    FockOperator,
    annihilation,
    commutator,
    creation,
    identity,
    multicommutator,
    number_operator,
    parity,
    random_operator,
    spectral_norm,
    translate,
)
from lrlab.lattice import box_sites


def chain(n, start=0):
    return [(start + i,) for i in range(n)]


def _max_entry(M):
    return float(np.max(np.abs(M))) if M.size else 0.0


def _hand_jordan_wigner(j, n):
    # a_j = Z x ... x Z x sigma x I x ... with sigma = |0><1| (mode 0 is the
    # most significant bit); written with explicit Kronecker products
    Z = np.diag([1.0, -1.0])
    I2 = np.eye(2)
    low = np.array([[0.0, 1.0], [0.0, 0.0]])
    out = np.eye(1)
    for i in range(n):
        out = np.kron(out, Z if i < j else (low if i == j else I2))
    return out


def test_single_site_annihilation():
    a = annihilation((0,), [(0,)])
    M = a.matrix
    assert M.shape == (2, 2)
    assert np.count_nonzero(M) == 1
    # basis index 1 is the occupied state
    assert M[0, 1] == 1.0


def test_matches_explicit_kronecker_construction():
    ctx = chain(4)
    for j in range(4):
        assert np.array_equal(annihilation(ctx[j], ctx).matrix, _hand_jordan_wigner(j, 4))


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_car_relations(n):
    ctx = chain(n)
    ops = [annihilation(x, ctx).matrix for x in ctx]
    eye = np.eye(2**n)
    for i, j in itertools.product(range(n), repeat=2):
        ai, aj = ops[i], ops[j]
        assert _max_entry(ai @ aj + aj @ ai) <= 1e-13
        anti = ai @ aj.conj().T + aj.conj().T @ ai
        assert _max_entry(anti - (i == j) * eye) <= 1e-13


def test_creation_properties():
    ctx = chain(3)
    for x in ctx:
        a = annihilation(x, ctx)
        c = creation(x, ctx)
        assert np.array_equal(c.matrix, a.matrix.conj().T)
        assert _max_entry((c @ c).matrix) == 0.0
        assert _max_entry((a @ a).matrix) == 0.0
        n = c @ a
        assert np.allclose((n @ n).matrix, n.matrix, atol=0)
        assert spectral_norm(a) == pytest.approx(1.0, abs=1e-10)
        assert spectral_norm(c) == pytest.approx(1.0, abs=1e-10)


def test_rejects_site_outside_context():
    with pytest.raises(ValueError):
        annihilation((5,), chain(3))


def test_spectral_norm_oracles():
    assert spectral_norm(identity(chain(4))) == pytest.approx(1.0, abs=1e-12)
    rng = np.random.default_rng(3)
    for _ in range(5):
        M = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        B = FockOperator(M, chain(4))
        assert spectral_norm(B) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-9)


def test_spectral_norm_block_sparse_and_large_paths():
    rng = np.random.default_rng(5)
    # block structure with one dominant block
    M = np.zeros((64, 64), dtype=complex)
    M[:8, 40:48] = rng.normal(size=(8, 8))
    M[10:30, 10:30] = rng.normal(size=(20, 20))
    B = FockOperator(M, chain(6))
    assert spectral_norm(B) == pytest.approx(np.linalg.norm(M, 2), rel=1e-10)
    # a dense 1024-dimensional operator exercises the iterative path
    M = rng.normal(size=(1024, 1024)) / 32
    B = FockOperator(M, chain(10))
    assert spectral_norm(B) == pytest.approx(np.linalg.norm(M, 2), rel=1e-9)


def test_c_star_identity():
    rng = np.random.default_rng(11)
    ctx = chain(5)
    for _ in range(50):
        sup = [ctx[i] for i in sorted(rng.choice(5, size=rng.integers(1, 4), replace=False))]
        B = random_operator(sup, rng).embed(ctx)
        nB = spectral_norm(B)
        assert spectral_norm(B.dag() @ B) == pytest.approx(nB**2, rel=1e-9)


def test_commutator_examples():
    ctx = chain(3)
    a0, a2 = annihilation(ctx[0], ctx), annihilation(ctx[2], ctx)
    rng = np.random.default_rng(0)
    B = random_operator(ctx[:2], rng)
    assert _max_entry(commutator(B, B).matrix) == 0.0
    assert np.allclose(commutator(a0, a2).matrix, 2 * (a0 @ a2).matrix, atol=1e-15)


def test_even_disjoint_commutation():
    rng = np.random.default_rng(2)
    ctx = chain(6)
    for _ in range(20):
        perm = rng.permutation(6)
        s1 = sorted(ctx[i] for i in perm[:2])
        s0 = sorted(ctx[i] for i in perm[2:5])
        B1 = random_operator(s1, rng, parity="even")
        B0 = random_operator(s0, rng)
        assert spectral_norm(commutator(B1, B0)) <= 1e-12


def test_multicommutator():
    rng = np.random.default_rng(7)
    ctx = chain(4)
    ops = [random_operator(ctx[i : i + 2], rng) for i in range(3)]
    B0, B1, B2 = ops
    assert np.array_equal(multicommutator([B1, B0]).matrix, commutator(B1, B0).matrix)
    assert _max_entry(multicommutator([identity(ctx), B1, B0]).matrix) <= 1e-15
    hand = commutator(B2, commutator(B1, B0))
    assert np.allclose(multicommutator([B2, B1, B0]).matrix, hand.matrix, atol=1e-14)
    with pytest.raises(ValueError):
        multicommutator([B0])
    # trivial norm bound
    k = 2
    assert spectral_norm(multicommutator(ops[::-1])) <= 2**k * np.prod([spectral_norm(B) for B in ops]) * (1 + 1e-12)


def test_parity_classification():
    ctx = chain(3)
    a = annihilation(ctx[1], ctx)
    p = parity(a)
    assert p.tag == "Odd" and not p.gauge_invariant
    p = parity(number_operator([ctx[1]], ctx))
    assert p.tag == "Even" and p.gauge_invariant
    p = parity(identity(ctx))
    assert p.tag == "Even" and p.gauge_invariant
    c = creation(ctx[0], ctx)
    p = parity(c @ creation(ctx[1], ctx))
    assert p.tag == "Even" and not p.gauge_invariant
    p = parity(a + c @ creation(ctx[1], ctx))
    assert p.tag == "Neither"


def test_number_operator():
    ctx = chain(3)
    assert _max_entry(number_operator([], ctx).matrix) == 0.0
    N2 = number_operator(chain(2), chain(2))
    assert sorted(np.linalg.eigvalsh(N2.matrix)) == pytest.approx([0, 1, 1, 2])
    assert spectral_norm(number_operator(ctx, ctx)) == pytest.approx(3.0)


def test_embedding_is_homomorphism():
    rng = np.random.default_rng(4)
    big = box_sites(1, 2)
    small = [big[4], big[1], big[7]]  # deliberately not in sorted order
    for x in small:
        assert np.array_equal(annihilation(x, small).embed(big).matrix, annihilation(x, big).matrix)
    A = random_operator(small, rng)
    B = random_operator(small, rng)
    lhs = (A @ B).embed(big).matrix
    rhs = A.embed(big).matrix @ B.embed(big).matrix
    assert np.allclose(lhs, rhs, atol=1e-13)
    assert np.allclose(A.dag().embed(big).matrix, A.embed(big).matrix.conj().T, atol=0)


def test_mixed_context_arithmetic():
    a0 = annihilation((0,), [(0,)])
    a1 = annihilation((1,), [(1,), (2,)])
    s = a0 @ a1 + a1 @ a0
    assert s.sites == ((0,), (1,), (2,))
    assert _max_entry(s.matrix) <= 1e-15


def test_translation():
    ctx = chain(6, start=-2)
    y = (0,)
    B = annihilation(y, [y])
    assert np.array_equal(translate(B, (0,), ctx).matrix, annihilation(y, ctx).matrix)
    for x in [(-2,), (1,), (3,)]:
        assert np.array_equal(translate(B, x, ctx).matrix, annihilation(x, ctx).matrix)
    rng = np.random.default_rng(9)
    sup = [(0,), (1,)]
    for _ in range(5):
        B1, B0 = random_operator(sup, rng), random_operator(sup, rng)
        lhs = translate(B1 @ B0, (2,), ctx).matrix
        rhs = translate(B1, (2,), ctx).matrix @ translate(B0, (2,), ctx).matrix
        assert np.allclose(lhs, rhs, atol=1e-13)
    with pytest.raises(ValueError):
        translate(B, (9,), ctx)


def test_translation_identity_map():
    rng = np.random.default_rng(1)
    ctx = chain(4)
    B = random_operator(ctx[1:3], rng).embed(ctx)
    assert np.array_equal(translate(B, (0,), ctx).matrix, B.matrix)
