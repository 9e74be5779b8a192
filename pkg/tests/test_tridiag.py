import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gllmg.errors import NonCommuting, SingularDiagonalBlock
from gllmg.flops import FlopCounter
from gllmg.tridiag import (
    BlockTridiagonalSystem,
    build_hierarchy,
    build_two_level,
    cyclic_reduction_reduced_system,
    odd_even_blocks,
    reorder_odd_even,
    solve,
    solve_two_level,
)

from oracles import dense_block_tridiagonal, random_block_tridiagonal


def laplace_1d(n):
    return BlockTridiagonalSystem.toeplitz(n, -1.0, 2.0, -1.0)


def random_system(seed, n, m, batch=()):
    rng = np.random.default_rng(seed)
    return BlockTridiagonalSystem(*random_block_tridiagonal(rng, n, m, batch))


def dense_prolong(f):
    """Dense P assembled block by block from the stored factors."""
    n, m = f.n, f.system.m
    n_even = n // 2
    p = np.zeros((n * m, n_even * m))
    for c in range(n_even):
        p[(2 * c + 1) * m : (2 * c + 2) * m, c * m : (c + 1) * m] = np.eye(m)
    for r in range((n + 1) // 2):
        o = 2 * r
        if r >= 1:
            p[o * m : (o + 1) * m, (r - 1) * m : r * m] = f.prolong_lower[r]
        if r < n_even:
            p[o * m : (o + 1) * m, r * m : (r + 1) * m] = f.prolong_upper[r]
    return p


def dense_smoother(f):
    n, m = f.n, f.system.m
    s = np.zeros((n * m, n * m))
    for r, o in enumerate(range(0, n, 2)):
        s[o * m : (o + 1) * m, o * m : (o + 1) * m] = f.smoother_inverses[r]
    return s


def test_system_shape_validation():
    with pytest.raises(ValueError):
        BlockTridiagonalSystem(np.zeros((2, 1, 1)), np.zeros((4, 1, 1)), np.zeros((3, 1, 1)))
    with pytest.raises(ValueError):
        BlockTridiagonalSystem(np.zeros((0, 2, 3)), np.zeros((1, 2, 3)), np.zeros((0, 2, 3)))


def test_matvec_matches_dense():
    sysm = random_system(0, 6, 3)
    x = np.random.default_rng(1).standard_normal((6, 3))
    ref = dense_block_tridiagonal(sysm.lower, sysm.diag, sysm.upper) @ x.ravel()
    np.testing.assert_allclose(sysm.matvec(x).ravel(), ref, atol=1e-12)
    np.testing.assert_array_equal(sysm.to_dense(), dense_block_tridiagonal(sysm.lower, sysm.diag, sysm.upper))


# --- odd/even reordering ---------------------------------------------------


def test_odd_even_blocks_n3():
    a, b, c, d = odd_even_blocks(laplace_1d(3))
    np.testing.assert_array_equal(a, 2 * np.eye(2))
    np.testing.assert_array_equal(b, [[-1], [-1]])
    np.testing.assert_array_equal(c, [[-1, -1]])
    np.testing.assert_array_equal(d, [[2]])


def test_schur_complement_n5():
    a, b, c, d = odd_even_blocks(laplace_1d(5))
    schur = d - c @ np.linalg.solve(a, b)
    np.testing.assert_allclose(schur, [[1, -0.5], [-0.5, 1]], atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 8, 11])
def test_permutation_is_orthogonal(n):
    v = reorder_odd_even(n)
    q = np.eye(n)[:, v.perm]
    np.testing.assert_array_equal(q @ q.T, np.eye(n))
    np.testing.assert_array_equal(v.odd, np.arange(0, n, 2))
    with pytest.raises(ValueError):
        reorder_odd_even(1)


# --- one reduction step ----------------------------------------------------


def test_two_level_identity():
    sysm = BlockTridiagonalSystem.toeplitz(6, 0.0, 1.0, 0.0)
    f = build_two_level(sysm)
    np.testing.assert_array_equal(f.smoother_inverses[..., 0, 0], 1.0)
    assert not f.prolong_lower.any() and not f.prolong_upper.any()
    np.testing.assert_array_equal(f.coarse.to_dense(), np.eye(3))
    g = np.arange(6.0)
    np.testing.assert_array_equal(solve_two_level(f, g), g)


def test_two_level_coarse_n7():
    f = build_two_level(laplace_1d(7))
    ref = np.diag(np.ones(3)) - 0.5 * (np.eye(3, k=1) + np.eye(3, k=-1))
    np.testing.assert_allclose(f.coarse.to_dense(), ref, atol=1e-15)


def test_two_level_coarse_of_block_system():
    m = 2
    sysm = BlockTridiagonalSystem.toeplitz(5, -np.eye(m), 2 * np.eye(m), -np.eye(m))
    f = build_two_level(sysm)
    np.testing.assert_allclose(f.coarse.diag, np.broadcast_to(np.eye(m), (2, m, m)), atol=1e-15)
    np.testing.assert_allclose(f.coarse.upper, [-0.5 * np.eye(m)], atol=1e-15)


def test_two_level_solve_ones_n7():
    y = solve_two_level(build_two_level(laplace_1d(7)), np.ones(7))
    np.testing.assert_allclose(y, [3.5, 6, 7.5, 8, 7.5, 6, 3.5], atol=1e-13)


def test_two_level_solve_random_block():
    sysm = random_system(4, 9, 3)
    g = np.random.default_rng(5).standard_normal((9, 3))
    y = solve_two_level(build_two_level(sysm), g)
    ref = np.linalg.solve(sysm.to_dense(), g.ravel())
    np.testing.assert_allclose(y.ravel(), ref, atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_coarse_stencil_formula(seed):
    n, m = 9, 3
    sysm = random_system(seed, n, m)
    f = build_two_level(sysm)
    a, lo, up = sysm.diag, sysm.lower, sysm.upper
    inv = np.linalg.inv
    # coupling of row i to i-1 is lower[i-1], to i+1 is upper[i] (0-based)
    for c, e in enumerate(range(1, n, 2)):
        d_ref = a[e] - lo[e - 1] @ inv(a[e - 1]) @ up[e - 1]
        if e + 1 < n:
            d_ref = d_ref - up[e] @ inv(a[e + 1]) @ lo[e]
        np.testing.assert_allclose(f.coarse.diag[c], d_ref, atol=1e-13 * np.abs(d_ref).max())
        if c >= 1:
            l_ref = -lo[e - 1] @ inv(a[e - 1]) @ lo[e - 2]
            np.testing.assert_allclose(f.coarse.lower[c - 1], l_ref, atol=1e-13)
        if e + 2 < n:
            u_ref = -up[e] @ inv(a[e + 1]) @ up[e + 1]
            np.testing.assert_allclose(f.coarse.upper[c], u_ref, atol=1e-13)


@pytest.mark.parametrize("n,m", [(2, 1), (3, 2), (5, 2), (6, 3), (7, 1), (7, 2)])
def test_residual_transfer_identity(n, m):
    # R (I - M S^-1) equals (-C A^-1, I) in odd/even ordering, with R = P^T
    sysm = random_system(n * 10 + m, n, m)
    f = build_two_level(sysm)
    big = sysm.to_dense()
    lhs = dense_prolong(f).T @ (np.eye(n * m) - big @ dense_smoother(f))
    a, _, c, _ = odd_even_blocks(sysm)
    v = reorder_odd_even(n)
    idx = np.concatenate([np.arange(i * m, (i + 1) * m) for i in v.perm])
    rhs = np.hstack([-c @ np.linalg.inv(a), np.eye(len(v.even) * m)])
    np.testing.assert_allclose(lhs[:, idx], rhs, atol=1e-12)


def test_coarse_is_schur_complement():
    sysm = random_system(9, 8, 2)
    f = build_two_level(sysm)
    p = dense_prolong(f)
    a, b, c, d = odd_even_blocks(sysm)
    np.testing.assert_allclose(f.coarse.to_dense(), d - c @ np.linalg.solve(a, b), atol=1e-12)
    # M P vanishes on the odd rows
    mp = sysm.to_dense() @ p
    odd_rows = np.concatenate([np.arange(o * 2, o * 2 + 2) for o in range(0, 8, 2)])
    np.testing.assert_allclose(mp[odd_rows], 0.0, atol=1e-12)


# --- hierarchy and direct solve --------------------------------------------


def test_hierarchy_single_row():
    sysm = BlockTridiagonalSystem.toeplitz(1, 0.0, 4.0, 0.0)
    h = build_hierarchy(sysm)
    assert h.num_levels == 1 and h.n == 1
    np.testing.assert_allclose(solve(h, np.array([2.0])), [0.5])


def test_hierarchy_depth():
    h = build_hierarchy(laplace_1d(1023), base_cutoff=1)
    assert h.num_levels == 10
    assert h.row_counts == [1023, 511, 255, 127, 63, 31, 15, 7, 3, 1]
    assert build_hierarchy(laplace_1d(100)).row_counts[-1] <= 4
    with pytest.raises(ValueError):
        build_hierarchy(laplace_1d(5), base_cutoff=0)


def test_toeplitz_recursion():
    h = build_hierarchy(laplace_1d(31), base_cutoff=1)
    d, c = 2.0, -1.0
    for f in h.levels:
        np.testing.assert_allclose(f.system.diag[:, 0, 0], d, rtol=1e-14)
        np.testing.assert_allclose(f.system.lower[:, 0, 0], c, rtol=1e-14)
        np.testing.assert_allclose(f.system.upper[:, 0, 0], c, rtol=1e-14)
        d, c = d - 2 * c * c / d, -c * c / d
    assert h.base.diag[0, 0, 0] == pytest.approx(d, rel=1e-14)


def test_solve_identity_and_laplacian():
    h = build_hierarchy(BlockTridiagonalSystem.toeplitz(10, 0.0, 1.0, 0.0))
    g = np.arange(10.0)
    np.testing.assert_array_equal(solve(h, g), g)
    sysm = laplace_1d(63)
    g = np.random.default_rng(2).standard_normal(63)
    x = solve(build_hierarchy(sysm), g)
    res = g - sysm.matvec(x[:, None])[:, 0]
    assert np.linalg.norm(res) <= 1e-12 * np.linalg.norm(g)


def test_solve_block_against_dense():
    sysm = random_system(11, 15, 4)
    g = np.random.default_rng(3).standard_normal((15, 4))
    x = solve(build_hierarchy(sysm), g)
    np.testing.assert_allclose(x.ravel(), np.linalg.solve(sysm.to_dense(), g.ravel()), atol=1e-11)
    with pytest.raises(ValueError):
        solve(build_hierarchy(sysm), np.ones((15, 3)))


def test_batched_solve_matches_individual():
    sysm = random_system(12, 13, 2, batch=(3,))
    g = np.random.default_rng(4).standard_normal((3, 13, 2))
    x = solve(build_hierarchy(sysm), g)
    for i in range(3):
        one = BlockTridiagonalSystem(sysm.lower[i], sysm.diag[i], sysm.upper[i])
        np.testing.assert_allclose(x[i], solve(build_hierarchy(one), g[i]), atol=1e-13)


def test_singular_odd_block_raises():
    lower, diag, upper = random_block_tridiagonal(np.random.default_rng(0), 9, 2)
    diag[4] = 0.0
    with pytest.raises(SingularDiagonalBlock) as info:
        build_hierarchy(BlockTridiagonalSystem(lower, diag, upper))
    assert info.value.index == 5 and info.value.level == 0
    scalar = laplace_1d(5)
    d = scalar.diag.copy()
    d[0] = 0.0
    with pytest.raises(SingularDiagonalBlock):
        build_two_level(BlockTridiagonalSystem(scalar.lower, d, scalar.upper))


def _solve_cost(n, m):
    sysm = random_system(0, n, m)
    g = np.ones((n, m))
    with FlopCounter() as fc:
        solve(build_hierarchy(sysm), g)
    return fc.count


def test_cost_linear_in_n():
    ratio = _solve_cost(1024, 2) / _solve_cost(512, 2)
    assert 2 * 0.9 <= ratio <= 2 * 1.1


def test_cost_cubic_in_m():
    ratio = _solve_cost(64, 16) / _solve_cost(64, 8)
    assert 8 * 0.8 <= ratio <= 8 * 1.2


@settings(max_examples=50)
@given(n=st.integers(1, 40), m=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_direct_solver_property(n, m, seed):
    sysm = random_system(seed, n, m)
    g = np.random.default_rng(seed + 1).standard_normal((n, m))
    x = solve(build_hierarchy(sysm), g)
    res = g - sysm.matvec(x)
    assert np.linalg.norm(res) <= 1e-10 * np.linalg.norm(g)


# --- relation to classic cyclic reduction ----------------------------------


def test_classic_reduction_scalar():
    cmp = cyclic_reduction_reduced_system(2.0, -1.0, 7)
    np.testing.assert_allclose(cmp.classic_diag, [[-2.0]])
    np.testing.assert_allclose(cmp.classic_off, [[1.0]])
    np.testing.assert_allclose(cmp.scaling, [[-0.5]])
    np.testing.assert_allclose(cmp.coarse.diag[:, 0, 0], 1.0)
    np.testing.assert_allclose(cmp.coarse.upper[:, 0, 0], -0.5)


def test_classic_reduction_block_identity():
    m = 2
    cmp = cyclic_reduction_reduced_system(2 * np.eye(m), -np.eye(m), 5)
    np.testing.assert_allclose(cmp.scaling @ cmp.classic_diag, np.eye(m), atol=1e-15)
    np.testing.assert_allclose(cmp.coarse.diag, np.broadcast_to(np.eye(m), (2, m, m)), atol=1e-15)


def test_classic_reduction_commuting_random():
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    a = q @ np.diag([5.0, 6.0, 7.0]) @ q.T
    t = 0.3 * a @ a / 7 - 0.5 * np.eye(3)
    n = 9
    cmp = cyclic_reduction_reduced_system(a, t, n)
    for k in range(cmp.coarse.n):
        np.testing.assert_allclose(cmp.scaling @ cmp.classic_diag, cmp.coarse.diag[k], atol=1e-12)
    for blk in (*cmp.coarse.lower, *cmp.coarse.upper):
        np.testing.assert_allclose(cmp.scaling @ cmp.classic_off, blk, atol=1e-12)
    y = rng.standard_normal((n, 3))
    np.testing.assert_allclose(cmp.coarse_rhs(y), cmp.classic_rhs(y) @ cmp.scaling.T, atol=1e-12)


def test_non_commuting_rejected():
    with pytest.raises(NonCommuting):
        cyclic_reduction_reduced_system([[2.0, 1.0], [0.0, 2.0]], [[1.0, 0.0], [1.0, 1.0]], 5)
