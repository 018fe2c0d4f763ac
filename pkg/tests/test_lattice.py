"""Integer linear algebra, map-indexed vectors, octahedra, lattice membership."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from designlat.complexes import LabelledComplex
from designlat.errors import BudgetExceeded, ConstructionError
from designlat.lattice import (FMapVector, determinant, diagonal_form, f_B,
                               integer_solve, kernel_basis, lattice_constant,
                               lattice_constant_split, lattice_member_L,
                               lattice_member_Lminus, lattice_member_oracle,
                               null_check, octahedron_complex,
                               octahedron_embeddings, octahedron_generators,
                               octahedron_sign, octahedron_span,
                               octahedron_tops, octahedron_vector,
                               rational_feasible, support_orbits)
from designlat.maps import compose, inj, inverse
from designlat.symmetry import Orbit, PermutationGroup
from designlat.vectors import EdgeVector, VectorSystem
from designlat.applications import complete_design, _indicator_system

from oracles import matrix_rank, smith_invariants

matrices = st.integers(1, 5).flatmap(
    lambda m: st.integers(1, 5).flatmap(
        lambda k: st.lists(
            st.lists(st.integers(-9, 9), min_size=k, max_size=k),
            min_size=m, max_size=m)))


def _matmul(A, B):
    return [[sum(A[i][t] * B[t][j] for t in range(len(B)))
             for j in range(len(B[0]))] for i in range(len(A))]


# -- smith-style diagonalization ---------------------------------------------------

@given(matrices)
@settings(max_examples=50, deadline=None)
def test_diagonal_form_properties(Z):
    m, k = len(Z), len(Z[0])
    df = diagonal_form(Z)
    assert abs(determinant(df.P)) == 1
    assert abs(determinant(df.Q)) == 1
    D = [[df.diag[i] if i == j and i < len(df.diag) else 0
          for j in range(k)] for i in range(m)]
    assert _matmul(_matmul(df.P, Z), df.Q) == D
    nz = [abs(d) for d in df.diag if d]
    assert all(nz[i + 1] % nz[i] == 0 for i in range(len(nz) - 1))
    assert nz == smith_invariants(Z)


@given(matrices, st.randoms(use_true_random=False))
@settings(max_examples=50, deadline=None)
def test_integer_solve_resubstitutes(Z, rng):
    k = len(Z[0])
    x0 = [rng.randint(-5, 5) for _ in range(k)]
    rhs = [sum(a * b for a, b in zip(row, x0)) for row in Z]
    x = integer_solve(Z, rhs)
    assert x is not None
    assert [sum(a * b for a, b in zip(row, x)) for row in Z] == rhs


def test_integer_solve_negative_cases():
    assert integer_solve([[2]], [1]) is None
    assert integer_solve([[0]], [3]) is None
    assert integer_solve([[1, 1], [1, 1]], [0, 1]) is None
    assert integer_solve([], []) == []
    assert integer_solve([[2, 4]], [6]) is not None


@given(matrices)
@settings(max_examples=50, deadline=None)
def test_kernel_basis(Z):
    k = len(Z[0])
    basis = kernel_basis(Z)
    for v in basis:
        assert all(sum(a * b for a, b in zip(row, v)) == 0 for row in Z)
    assert len(basis) == k - matrix_rank(Z)


@given(st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-9, 9), min_size=n, max_size=n),
                       min_size=n, max_size=n)))
@settings(max_examples=60, deadline=None)
def test_determinant_matches_oracle(M):
    import sympy
    assert determinant(M) == int(sympy.Matrix(M).det())


# -- exact rational feasibility ---------------------------------------------------

def test_rational_feasible_basic():
    x = rational_feasible([[1, 1]], [1])
    assert x is not None and sum(x) == 1 and all(v >= 0 for v in x)
    assert rational_feasible([[1, 1]], [-1]) is None
    x, cert = rational_feasible([[1, 1]], [-1], want_certificate=True)
    assert x is None and cert["value"] > 0
    y = cert["multipliers"]
    assert all(sum(yi * zij for yi, zij in zip(y, col)) <= 0
               for col in [[1], [1]])


def test_rational_feasible_bounds():
    # force x = 2/3 via 3x = 2 inside [0, 1]
    x = rational_feasible([[3]], [2], bounds=[(0, 1)])
    assert x == [pytest.approx(2 / 3)] and x[0] * 3 == 2
    assert rational_feasible([[3]], [2], bounds=[(1, 2)]) is None
    assert rational_feasible([[1]], [0], bounds=[(2, 1)]) is None
    x = rational_feasible([[1, -1]], [5], bounds=[(None, None), (None, None)])
    assert x is not None and x[0] - x[1] == 5
    with pytest.raises(ConstructionError):
        rational_feasible([[1, 1]], [1], bounds=[(0, None)])


# -- degree-sum vanishing -----------------------------------------------------------

def test_null_check(octa):
    J = octa.target
    for i in range(3):
        ok, witness = null_check(J, i)
        assert ok and witness is None
    cx = J.complex
    single = EdgeVector(cx, 3, 1,
                        [(min(J.support()), (1,))], validate=False)
    ok, witness = null_check(single, 1)
    assert not ok and witness is not None and len(witness) == 1
    with pytest.raises(ConstructionError):
        null_check(J, 3)


# -- map-indexed vectors ----------------------------------------------------------

def test_fmap_vector_algebra():
    B = (1, 2)
    key = (inj(((1, "a"), (2, "b"))), inj(((1, 1), (2, 2))))
    key2 = (inj(((1, "b"), (2, "a"))), inj(((1, 2), (2, 1))))
    u = FMapVector(B, 1, [(key, (2,)), (key, (-2,))])
    assert not u.data
    v = FMapVector(B, 1, [(key, (1,)), (key2, (3,))])
    w = v + v - v.scale(2)
    assert not w.data and v.scale(0).data == {}
    assert v.get(*key) == (1,) and v.get(*key2) == (3,)
    with pytest.raises(ConstructionError):
        FMapVector(B, 1, [((inj(((1, "a"), (3, "b"))), key[1]), (1,))])
    with pytest.raises(ConstructionError):
        FMapVector(B, 2, [(key, (1,))])
    with pytest.raises(ConstructionError):
        v + FMapVector((1, 3), 1)


def test_f_B_semantics():
    cx = LabelledComplex.complete((1, 2), (1, 2, 3, 4, 5))
    g = PermutationGroup.symmetric((1, 2))
    m = inj(((1, 3), (2, 4)))
    J = EdgeVector(cx, 2, 1, [(m, (5,))])
    fb = f_B(g, J, (1, 2))
    assert len(fb.data) == 2
    for (psi, s), vec in fb.items():
        assert compose(psi, s) == m and vec == (5,)
    assert fb.is_symmetric(g)
    triv = PermutationGroup.trivial((1, 2))
    fb1 = f_B(triv, J, (1, 2))
    assert len(fb1.data) == 1 and not fb1.is_null()


# -- octahedra --------------------------------------------------------------------

def test_octahedron_template_and_tops():
    B = (1, 2, 3)
    tpl = octahedron_complex(B)
    tops = octahedron_tops(B)
    assert len(tops) == 8
    assert sum(octahedron_sign(t) for t in tops) == 0
    assert all(tpl.contains(t) for t in tops)


def test_octahedron_embeddings_count():
    cx = LabelledComplex.complete((1, 2), (1, 2, 3, 4, 5))
    embs = octahedron_embeddings(cx, (1, 2))
    assert len(embs) == 120  # ordered choice of 4 distinct vertices
    assert all(len(set(e[1] for e in emb)) == 4 for emb in embs)


def test_octahedron_vector_symmetric_and_null():
    cx = LabelledComplex.complete((1, 2), (1, 2, 3, 4, 5))
    g = PermutationGroup.symmetric((1, 2))
    emb = octahedron_embeddings(cx, (1, 2))[0]
    taus = g.restricted_maps((1, 2), (1, 2))
    ov = octahedron_vector(cx, g, emb, {t: (1,) for t in taus}, 1)
    assert ov.is_symmetric(g) and ov.is_null()
    assert len(ov.data) == 16
    triv = PermutationGroup.trivial((1, 2))
    ident = inj(((1, 1), (2, 2)))
    ov1 = octahedron_vector(cx, triv, emb, {ident: (1,)}, 1)
    assert ov1.is_null()


def test_octahedron_generators_and_span():
    cx = LabelledComplex.complete((1, 2), (1, 2, 3, 4, 5))
    g = PermutationGroup.symmetric((1, 2))
    gens = octahedron_generators(cx, g, (1, 2), 1)
    assert len(gens) == len(set(gens)) == 30
    fvs = [FMapVector((1, 2), 1, list(col)) for col in gens]
    assert all(f.is_null() and f.is_symmetric(g) for f in fvs)
    target = fvs[0].scale(2) - fvs[7] + fvs[12].scale(-3)
    ok, stats = octahedron_span(cx, g, (1, 2), 1, target, generators=gens)
    assert ok and stats["columns"] == 30
    bad = FMapVector((1, 2), 1,
                     [((inj(((1, 1), (2, 2))), inj(((1, 1), (2, 2)))), (1,))])
    assert not octahedron_span(cx, g, (1, 2), 1, bad, generators=gens)[0]
    with pytest.raises(BudgetExceeded):
        octahedron_span(cx, g, (1, 2), 1, target, budget=1)


# -- support orbits ------------------------------------------------------------------

def test_support_orbits():
    g = PermutationGroup.symmetric((1, 2))
    keys = [inj(((1, "a"), (2, "b"))), inj(((1, "b"), (2, "a"))),
            inj(((1, "a"), (2, "c")))]
    out = support_orbits(g, keys)
    seen = set()
    for rep, members in out:
        assert rep in members.values()
        for sp, m in members.items():
            assert compose(rep, sp) == m
        assert Orbit(g, rep).members() >= set(members.values())
        seen.update(members.values())
    assert seen == set(keys)
    assert len(out) == 2


# -- lattice membership ----------------------------------------------------------------

def test_lattice_member_fano(fano):
    sysm, J = fano.system, fano.target
    assert lattice_member_Lminus(sysm, J) == (True, None)
    assert lattice_member_L(sysm, J, method="sharp") == (True, None)
    assert lattice_member_L(sysm, J, method="shadow") == (True, None)
    assert lattice_member_oracle(sysm, J)
    with pytest.raises(ConstructionError):
        lattice_member_L(sysm, J, method="fancy")


def test_lattice_member_octa(octa):
    sysm, J = octa.system, octa.target
    ok_minus, _ = lattice_member_Lminus(sysm, J)
    assert ok_minus
    ok, witness = lattice_member_L(sysm, J, method="sharp")
    assert not ok and witness[0] == 2
    ok2, witness2 = lattice_member_L(sysm, J, method="shadow")
    assert not ok2
    assert not lattice_member_oracle(sysm, J)


def test_sharp_shadow_oracle_agree_random():
    g = PermutationGroup.symmetric((1, 2, 3))
    sysm = _indicator_system(g, complete_design(3, 2), 2)
    cx = LabelledComplex.complete((1, 2, 3), (1, 2, 3, 4, 5))
    maps = sorted(m for B in cx.level_sets(2) for m in cx.maps_at(B))
    phis = sorted(cx.maps_at((1, 2, 3)))
    hits = 0
    for seed in range(20):
        rng = random.Random(seed)
        if seed % 2:
            # a signed sum of molecules is always a member
            J = EdgeVector(cx, 2, 1)
            for _ in range(3):
                phi = phis[rng.randrange(len(phis))]
                J = J + sysm.molecule(cx, "H", phi).scale(rng.choice((-2, -1, 1, 2)))
        else:
            J = EdgeVector(cx, 2, 1,
                           [(m, (rng.randint(-2, 2),)) for m in maps])
        sharp = lattice_member_L(sysm, J, method="sharp")[0]
        shadow = lattice_member_L(sysm, J, method="shadow")[0]
        want = lattice_member_oracle(sysm, J)
        assert sharp == shadow == want
        hits += want
    assert 0 < hits < 20  # both outcomes exercised


# -- kernel constants -----------------------------------------------------------------

def test_lattice_constant_triangle():
    g = PermutationGroup.symmetric((1, 2, 3))
    tri = _indicator_system(g, complete_design(3, 2), 2)
    assert lattice_constant(tri, (1, 2)) == 2


def test_lattice_constant_split_non_elementary():
    g = PermutationGroup.trivial((1, 2))
    theta = inj(((1, 1), (2, 2)))
    vs = VectorSystem(g, ("a", "b", "c"), 2, 2,
                      {("a", theta): (1, 0), ("b", theta): (0, 1),
                       ("c", theta): (1, 1)})
    const = lattice_constant(vs, (1, 2))
    assert const == 3
    coeffs = {("a", theta): 2, ("b", theta): 2, ("c", theta): -2}
    pieces = lattice_constant_split(vs, (1, 2), coeffs)
    assert len(pieces) == 2
    total = {}
    for piece in pieces:
        assert sum(abs(c) for c in piece.values()) <= const
        for key, c in piece.items():
            total[key] = total.get(key, 0) + c
    want = {(m, tuple(t)): c for (m, t), c in coeffs.items()}
    assert {k: v for k, v in total.items() if v} == want
