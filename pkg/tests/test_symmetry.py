from fractions import Fraction

import numpy as np
import pytest

from cluster_bifurc.continuation import Branch, BranchPoint
from cluster_bifurc.potentials import LennardJones
from cluster_bifurc.symmetry import (
    Perm,
    PermGroup,
    fixed_projection_exact,
    isotropy,
    orbit,
    reduced_system,
    tetra_apex_reduction,
    tetra_equal_pair_reduction,
    tetra_group,
    tetra_opposite_pair_reduction,
    triangle_group,
    triangle_isosceles_reduction,
)
from cluster_bifurc.tetrahedron import cayley_menger, jacobian4, mu_tetra, residual4, trivial4
from cluster_bifurc.triangle import jacobian3, mu3, residual3, trivial3

LJ = LennardJones(1, 2, 12, 6)
F = Fraction


def edge_perm(sources):
    return Perm.from_edge_sources(tuple(sources))


def test_group_orders_and_identity():
    tri = triangle_group()
    tet = tetra_group()
    assert len(tri) == 6
    assert len(tet) == 24
    assert Perm.identity(4) in tri.elements
    assert Perm.identity(7) in tet.elements


def test_perm_algebra():
    p = edge_perm([1, 0, 2])  # swap a, b
    assert p @ p == Perm.identity(4)
    assert p.inverse() == p
    assert np.allclose(p.matrix() @ p.matrix().T, np.eye(4))
    assert p.matrix()[0, 0] == 1.0  # multiplier stays put
    with pytest.raises(ValueError):
        Perm((1, 0, 2, 3))  # must fix the first coordinate
    with pytest.raises(ValueError):
        PermGroup((p,))  # not closed (no identity)


def test_tetra_group_preserves_cayley_menger():
    rng = np.random.default_rng(41)
    e = 1.0 + 0.2 * rng.uniform(-1, 1, 6)
    g0 = cayley_menger(e)
    for P in tetra_group():
        img = P.apply(np.concatenate([[0.0], e]))[1:]
        assert abs(cayley_menger(img) - g0) < 1e-12 * abs(g0)


def test_triangle_isotropy_swap():
    H = isotropy(triangle_group(), (0.0, -2.0, 1.0, 1.0))
    assert len(H) == 2
    assert edge_perm([0, 2, 1]) in H.elements  # swap b, c


def test_tetra_isotropy_pair_vector():
    H = isotropy(tetra_group(), (0, 0, 0, -1.0, 0, 0, 1.0))
    assert len(H) == 4
    # the four tabulated permutations, written as image tuples of (a,b,c,A,B,C)
    expected = {
        edge_perm([0, 1, 2, 3, 4, 5]),
        edge_perm([1, 0, 2, 4, 3, 5]),   # (b, a, c, B, A, C)
        edge_perm([4, 3, 2, 1, 0, 5]),   # (B, A, c, b, a, C)
        edge_perm([3, 4, 2, 0, 1, 5]),   # (A, B, c, a, b, C)
    }
    assert set(H.elements) == expected


def test_tetra_isotropy_apex_vector():
    H = isotropy(tetra_group(), (0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0))
    assert len(H) == 6
    for p in H.elements:
        # same permutation on (a,b,c) and (A,B,C)
        srcs = p.sources[1:]
        assert tuple(s - 3 for s in srcs[3:]) == srcs[:3]


def test_tetra_isotropy_equal_pair_vector():
    """The stabilizer of (0,-2,1,1,-2,1,1) is the order-8 axis stabilizer.

    It strictly contains the six tabulated elements (the tabulated set is not
    closed: its third element has order four), and only the eight-element
    average reproduces the reference projection with the 1/2 block.
    """
    H = isotropy(tetra_group(), (0, -2.0, 1.0, 1.0, -2.0, 1.0, 1.0))
    assert len(H) == 8
    tabulated = {
        edge_perm([0, 1, 2, 3, 4, 5]),
        edge_perm([0, 2, 1, 3, 5, 4]),   # (a, c, b, A, C, B)
        edge_perm([3, 5, 1, 0, 2, 4]),   # (A, C, b, a, c, B)
        edge_perm([3, 1, 5, 0, 4, 2]),   # (A, b, C, a, B, c)
        edge_perm([3, 4, 2, 0, 1, 5]),   # (A, B, c, a, b, C)
        edge_perm([3, 2, 4, 0, 5, 1]),   # (A, c, B, a, C, b)
    }
    assert tabulated <= set(H.elements)
    third = edge_perm([3, 5, 1, 0, 2, 4])
    order = 1
    q = third
    while q != Perm.identity(7):
        q = q @ third
        order += 1
    assert order == 4  # so a closed subgroup containing it cannot have order 6


def test_projection_triangle_printed_matrix():
    exact = fixed_projection_exact(triangle_isosceles_reduction().subgroup)
    assert exact == (
        (F(1), F(0), F(0), F(0)),
        (F(0), F(1), F(0), F(0)),
        (F(0), F(0), F(1, 2), F(1, 2)),
        (F(0), F(0), F(1, 2), F(1, 2)),
    )


def test_projection_tetra_printed_matrices():
    q, t, h = F(1, 4), F(1, 3), F(1, 2)
    pair = fixed_projection_exact(tetra_opposite_pair_reduction().subgroup)
    assert pair == (
        (F(1), F(0), F(0), F(0), F(0), F(0), F(0)),
        (F(0), q, q, F(0), q, q, F(0)),
        (F(0), q, q, F(0), q, q, F(0)),
        (F(0), F(0), F(0), F(1), F(0), F(0), F(0)),
        (F(0), q, q, F(0), q, q, F(0)),
        (F(0), q, q, F(0), q, q, F(0)),
        (F(0), F(0), F(0), F(0), F(0), F(0), F(1)),
    )
    apex = fixed_projection_exact(tetra_apex_reduction().subgroup)
    assert apex == (
        (F(1), F(0), F(0), F(0), F(0), F(0), F(0)),
        (F(0), t, t, t, F(0), F(0), F(0)),
        (F(0), t, t, t, F(0), F(0), F(0)),
        (F(0), t, t, t, F(0), F(0), F(0)),
        (F(0), F(0), F(0), F(0), t, t, t),
        (F(0), F(0), F(0), F(0), t, t, t),
        (F(0), F(0), F(0), F(0), t, t, t),
    )
    eqp = fixed_projection_exact(tetra_equal_pair_reduction().subgroup)
    assert eqp == (
        (F(1), F(0), F(0), F(0), F(0), F(0), F(0)),
        (F(0), h, F(0), F(0), h, F(0), F(0)),
        (F(0), F(0), q, q, F(0), q, q),
        (F(0), F(0), q, q, F(0), q, q),
        (F(0), h, F(0), F(0), h, F(0), F(0)),
        (F(0), F(0), q, q, F(0), q, q),
        (F(0), F(0), q, q, F(0), q, q),
    )


def test_projection_idempotent_symmetric_exact():
    for red in (triangle_isosceles_reduction(), tetra_opposite_pair_reduction(),
                tetra_apex_reduction(), tetra_equal_pair_reduction()):
        P = red.projection_exact
        n = len(P)
        for i in range(n):
            for j in range(n):
                assert P[i][j] == P[j][i]
                assert sum(P[i][k] * P[k][j] for k in range(n)) == P[i][j]
        v = np.asarray(red.kernel_vector)
        assert np.max(np.abs(red.projection @ v - v)) < 1e-14


def test_reduced_jacobian_simple_eigenvalue_triangle():
    red = triangle_isosceles_reduction()
    res, jac = reduced_system(red.projection,
                              lambda x, A: residual3(LJ, x, A),
                              lambda x, A: jacobian3(LJ, x))
    for A in (0.4, 0.5877, 1.1):
        L = jac(trivial3(LJ, A).as_array(), A)
        v = np.array([0.0, -2.0, 1.0, 1.0])
        assert np.max(np.abs(L @ v - mu3(LJ, A) * v)) < 1e-10 * max(1.0, np.abs(L).max())
    # reduced residual of a fixed-space zero is a full-system zero
    x = trivial3(LJ, 0.7).as_array()
    assert np.max(np.abs(res(x, 0.7))) < 1e-12


def test_reduced_jacobian_simple_eigenvalues_tetra():
    x = trivial4(LJ, 0.4).as_array()
    m1, m2 = mu_tetra(LJ, 0.4)
    scale = max(1.0, np.abs(jacobian4(LJ, x)).max())
    for red, vec, mu in (
        (tetra_opposite_pair_reduction(), (0, 0, 0, -1.0, 0, 0, 1.0), m1),
        (tetra_apex_reduction(), (0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0), m1),
        (tetra_equal_pair_reduction(), (0, -2.0, 1.0, 1.0, -2.0, 1.0, 1.0), m2),
    ):
        _, jac = reduced_system(red.projection,
                                lambda y, V: residual4(LJ, y, V),
                                lambda y, V: jacobian4(LJ, y))
        L = jac(x, 0.4)
        v = np.asarray(vec)
        assert np.max(np.abs(L @ v - mu * v)) < 1e-10 * scale


def test_reduced_system_requires_projection():
    with pytest.raises(ValueError):
        reduced_system(np.array([[1.0, 1.0], [0.0, 1.0]]), None, None)


def _branch_from_states(states):
    return Branch(points=[
        BranchPoint(state=tuple(s), parameter=0.5, arclength=float(i),
                    stability="stable", shape="", det_sign=1)
        for i, s in enumerate(states)
    ])


def test_orbit_counts_triangle():
    # an isosceles arc (b = c) maps to exactly three distinct branches
    states = [(-(1.0 + 0.1 * k), 1.0 + 0.1 * k, 0.9, 0.9) for k in range(4)]
    images = orbit(triangle_group(), _branch_from_states(states))
    assert len(images) == 3


def test_orbit_counts_tetra_families():
    pair = [(-1.0, 1.0, 1.0, 0.8 + 0.02 * k, 1.0, 1.0, 1.3 - 0.02 * k) for k in range(4)]
    assert len(orbit(tetra_group(), _branch_from_states(pair))) == 6  # one wing only
    # a full pitchfork branch through the symmetric point maps to 3: the
    # reversing symmetry folds the two wings onto each other
    sym = [(-1.0, 1.0, 1.0, 1.0 + 0.02 * k, 1.0, 1.0, 1.0 - 0.02 * k) for k in range(-3, 4)]
    assert len(orbit(tetra_group(), _branch_from_states(sym))) == 3
    apex = [(-1.0, 1.1, 1.1, 1.1, 0.9 + 0.01 * k, 0.9 + 0.01 * k, 0.9 + 0.01 * k) for k in range(4)]
    assert len(orbit(tetra_group(), _branch_from_states(apex))) == 4
    eqp = [(-1.0, 1.2 + 0.01 * k, 0.9, 0.9, 1.2 + 0.01 * k, 0.9, 0.9) for k in range(4)]
    assert len(orbit(tetra_group(), _branch_from_states(eqp))) == 3


def test_orbit_copies_stability_and_parameter():
    states = [(-1.0, 1.2, 0.9, 0.9)]
    images = orbit(triangle_group(), _branch_from_states(states))
    for img in images:
        assert img.points[0].stability == "stable"
        assert img.points[0].parameter == 0.5


def test_equivariance_full_group_both_systems():
    rng = np.random.default_rng(42)
    for _ in range(50):
        x3 = np.concatenate([[rng.uniform(-2, 2)], rng.uniform(0.6, 1.6, 3)])
        F3 = residual3(LJ, x3, 0.9)
        for P in triangle_group():
            assert np.max(np.abs(residual3(LJ, P.apply(x3), 0.9) - P.apply(F3))) < 1e-12
        x4 = np.concatenate([[rng.uniform(-2, 2)], 1.0 + 0.15 * rng.uniform(-1, 1, 6)])
        F4 = residual4(LJ, x4, 0.2)
        for P in tetra_group():
            assert np.max(np.abs(residual4(LJ, P.apply(x4), 0.2) - P.apply(F4))) < 1e-12
