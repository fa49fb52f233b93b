import itertools
import math

import numpy as np
import pytest

from lrlab.lattice import DecayFunction, box_sites, convolution_constant_bound, shell_sum_full, shell_sum_full_tail
from lrlab.trees import (
    Tree,
    code,
    composition_count,
    count_by_degree,
    degree_factorial,
    degrees,
    enumerate_trees,
    kappa,
    lattice_exp_sum,
    monotone_maps,
    remainder_R,
    remainder_bound_exp,
    remainder_bound_poly,
    stirling_bounds,
    tree_sum_bound_check,
)


def _is_tree(T):
    parent = list(range(T.k + 1))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    for a, b in T.bonds:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return len({find(v) for v in range(T.k + 1)}) == 1


def test_enumeration_counts_and_shape():
    assert [T.bonds for T in enumerate_trees(1)] == [[(0, 1)]]
    assert len(enumerate_trees(2)) == 2
    for k in range(1, 8):
        trees = enumerate_trees(k)
        assert len(trees) == math.factorial(k)
        assert len(set(trees)) == len(trees)
        if k <= 6:
            assert all(_is_tree(T) for T in trees)
    assert len({code(T) for T in enumerate_trees(4)}) == 24
    with pytest.raises(ValueError):
        enumerate_trees(10)


def test_recursive_definition_brute_force():
    # T_{k+1} = {{j,k}} u T, T in T_k, as bond sets
    prev = {frozenset([frozenset((0, 1))])}
    for k in range(2, 6):
        prev = {T | {frozenset((j, k))} for T in prev for j in range(k)}
        got = {frozenset(frozenset(b) for b in T.bonds) for T in enumerate_trees(k)}
        assert got == prev


def test_degrees_and_codes():
    assert degrees(enumerate_trees(1)[0]) == (1, 1)
    assert degrees(Tree(2, (0, 1))) == (1, 2, 1)
    for k in range(1, 8):
        for T in enumerate_trees(k):
            deg = degrees(T)
            assert sum(deg) == 2 * k and deg[k] == 1
            assert degree_factorial(T) <= math.factorial(k)
    for k in range(2, 7):
        trees = enumerate_trees(k)
        assert len({code(T) for T in trees}) == len(trees)
        for T in trees:
            c = code(T)
            deg = degrees(T)
            assert all(c.count(j) == deg[j] - 1 for j in range(k + 1))
    assert code(Tree(4, (0, 0, 0, 0))) == (0, 0, 0)
    assert code(enumerate_trees(1)[0]) == ()


def test_count_by_degree():
    assert count_by_degree(2, (1, 2, 1)) == (1, 1.0)
    assert count_by_degree(2, (2, 1, 1)) == (1, 1.0)
    assert count_by_degree(3, (1, 1, 1, 1))[0] == 0
    for k in range(1, 6):
        for d in itertools.product(range(1, k + 1), repeat=k + 1):
            exact, bound = count_by_degree(k, d)
            assert exact <= bound + 1e-12


def test_composition_count():
    assert composition_count(1) == (1, 4)
    assert composition_count(2) == (3, 16)
    assert composition_count(5) == (126, 1024)
    for k in range(1, 7):
        brute = sum(1 for d in itertools.product(range(1, 2 * k), repeat=k + 1) if sum(d) == 2 * k)
        assert composition_count(k)[0] == brute


def test_kappa_against_site_sets():
    rng = np.random.default_rng(0)
    T = Tree(3, (0, 1, 1))
    assert kappa(T, [(0, (5, 5))] * 4) == 1
    assert kappa(T, [(0, (0,)), (1, (4,)), (0, (4,)), (0, (4,))]) == 0
    for _ in range(200):
        k = int(rng.integers(1, 4))
        T = enumerate_trees(k)[int(rng.integers(math.factorial(k)))]
        boxes = [(int(rng.integers(0, 3)), tuple(int(v) for v in rng.integers(-5, 6, size=2))) for _ in range(k + 1)]
        sets = [{tuple(np.add(s, x)) for s in box_sites(n, 2)} for n, x in boxes]
        oracle = int(all(sets[j] & sets[p] for p, j in T.bonds))
        assert kappa(T, boxes) == oracle
        # enlarging any radius never breaks the cluster
        j = int(rng.integers(k + 1))
        bigger = list(boxes)
        bigger[j] = (boxes[j][0] + 1, boxes[j][1])
        assert kappa(T, bigger) >= kappa(T, boxes)


def test_monotone_maps():
    assert len(monotone_maps(1, 4)) == 1
    assert monotone_maps(1, 3) == [{1: 1, 2: 2, 3: 3}]
    assert len(monotone_maps(4, 4)) == 4
    for k in range(1, 7):
        for l in range(1, k + 1):
            maps = monotone_maps(l, k)
            assert len(maps) == math.comb(k, k - l + 1)
            for sig in maps:
                vals = [sig[i] for i in range(l, k + 1)]
                assert vals == sorted(set(vals))


def _brute_remainder(T, alpha, s, m, x, F, D, N):
    # direct (l, sigma, n) sums, truncated at N, plus the product tail slack
    k = T.k
    lo = hi = 0.0
    for l in range(1, k + 1):
        for sig in monotone_maps(l, k):
            img = sorted(sig.values())
            pre = (2 * alpha) ** (k - l + 1) * math.prod(abs(s[j - 1]) * math.exp(4 * D * alpha * abs(s[j - 1])) for j in img)
            acc = 0.0
            for ns in itertools.product(*[range(m[j] + 1, N + 1) for j in img]):
                n = list(m)
                for j, v in zip(img, ns):
                    n[j] = v
                if kappa(T, list(zip(n, x))):
                    acc += math.prod(shell_sum_full(F, n[j], m[j]) for j in img)
            full = math.prod(
                sum(shell_sum_full(F, v, m[j]) for v in range(m[j] + 1, N + 1)) + shell_sum_full_tail(F, m[j], N)
                for j in img
            )
            trunc = math.prod(sum(shell_sum_full(F, v, m[j]) for v in range(m[j] + 1, N + 1)) for j in img)
            lo += pre * acc
            hi += pre * (acc + full - trunc)
    return lo, hi


def test_remainder_matches_brute_force():
    F = DecayFunction.polynomial(1, 1.0)
    D = convolution_constant_bound(F)
    rng = np.random.default_rng(1)
    for _ in range(4):
        k = int(rng.integers(1, 3))
        T = enumerate_trees(k)[int(rng.integers(math.factorial(k)))]
        s = list(rng.uniform(-0.5, 0.5, size=k))
        m = [int(v) for v in rng.integers(0, 2, size=k + 1)]
        x = [(int(v),) for v in rng.integers(-6, 7, size=k + 1)]
        N = max(m) + 12
        lo, hi = _brute_remainder(T, 0.3, s, m, x, F, D, N)
        got = remainder_R(T, 0.3, s, m, x, F, D, N=N)
        assert lo * (1 - 1e-12) <= got <= hi * (1 + 1e-12)


def test_remainder_zero_and_monotone():
    F = DecayFunction.polynomial(1, 1.0)
    D = convolution_constant_bound(F)
    T = Tree(2, (0, 0))
    args = ([0.4, -0.2], [0, 1, 0], [(0,), (3,), (-2,)])
    assert remainder_R(T, 0.0, *args, F, D) == 0.0
    vals = [remainder_R(T, a, *args, F, D) for a in (0.05, 0.1, 0.2)]
    assert vals[0] < vals[1] < vals[2]
    grown = remainder_R(T, 0.1, [0.8, -0.2], *args[1:], F, D)
    assert grown > vals[1]


@pytest.mark.parametrize("kind", ["polynomial", "exponential"])
def test_remainder_dominated_by_closed_forms(kind):
    rng = np.random.default_rng(2)
    F = DecayFunction.polynomial(1, 1.0) if kind == "polynomial" else DecayFunction.exponential(1, 1.0, 0.3)
    D = convolution_constant_bound(F)
    for _ in range(50):
        k = int(rng.integers(1, 4))
        T = enumerate_trees(k)[int(rng.integers(math.factorial(k)))]
        alpha = float(rng.uniform(0, 0.5))
        s = list(rng.uniform(-1, 1, size=k))
        m = [int(v) for v in rng.integers(0, 3, size=k + 1)]
        x = [(int(v),) for v in rng.integers(-10, 11, size=k + 1)]
        R = remainder_R(T, alpha, s, m, x, F, D)
        if kind == "polynomial":
            B = remainder_bound_poly(T, alpha, s, m, x, F, D)
        else:
            B = remainder_bound_exp(T, alpha, s, m, x, F, D)
        assert R <= B


def test_closed_forms_vanish_and_decay():
    F = DecayFunction.exponential(1, 1.0, 0.3)
    D = convolution_constant_bound(F)
    T = Tree(2, (0, 1))
    assert remainder_bound_exp(T, 0.0, [1, 1], [0, 0, 0], [(0,), (1,), (2,)], F, D) == 0.0
    assert remainder_bound_poly(T, 0.0, [1, 1], [0, 0, 0], [(0,), (1,), (2,)], DecayFunction.polynomial(1, 1.0), D) == 0.0
    vals = [remainder_bound_exp(T, 0.2, [1, 1], [0, 0, 0], [(0,), (r,), (r + 1,)], F, D) for r in range(6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_lattice_exp_sum():
    assert lattice_exp_sum(0.7, 1) == pytest.approx(sum(math.exp(-0.7 * abs(v)) for v in range(-200, 201)), rel=1e-14)
    brute = sum(math.exp(-1.1 * math.hypot(a, b)) for a in range(-60, 61) for b in range(-60, 61))
    assert lattice_exp_sum(1.1, 2) == pytest.approx(brute, rel=1e-12)


def test_tree_sum_bound():
    r = tree_sum_bound_check(1, 1, 0.5)
    two_vertex = lattice_exp_sum(0.5, 1)
    assert r.lhs == pytest.approx(two_vertex)
    assert r.passed
    for k in range(1, 7):
        for d in (1, 2):
            rep = tree_sum_bound_check(k, d, 0.5)
            assert rep.passed
            assert rep.sum_degree_factorial <= math.factorial(k) * (4 * math.e**2) ** k


def test_stirling():
    for g in range(1, 51):
        lo, mid, hi = stirling_bounds(g)
        assert lo <= mid <= hi
