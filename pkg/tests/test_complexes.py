"""Labelled complexes: kinds, downward closure, counting, serialization."""

import math
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from designlat.complexes import (Extension, LabelledComplex, count_extensions,
                                 iter_extensions)
from designlat.maps import dom, inj
from designlat.symmetry import PermutationGroup, is_adapted


def test_complete_counts():
    cx = LabelledComplex.complete((1, 2, 3), tuple("abcde"))
    for B in ((1,), (1, 2), (1, 2, 3)):
        assert cx.count_at(B) == math.perm(5, len(B))
    assert cx.size(2) == 3 * 20
    assert cx.contains(inj(((1, "a"), (3, "b"))))
    assert not cx.contains(inj(((1, "z"),)))


def test_explicit_downward_closure():
    top = inj(((1, "a"), (2, "b"), (3, "c")))
    cx = LabelledComplex.explicit((1, 2, 3), tuple("abc"), [top])
    # closure adds all sub-injections, including the empty one
    assert cx.contains(inj(((2, "b"),)))
    assert cx.contains(inj(((1, "a"), (3, "c"))))
    assert cx.contains(inj(()))
    assert not cx.contains(inj(((1, "b"),)))
    assert cx.count_at((1, 2)) == 1


def test_explicit_without_closure_is_literal():
    top = inj(((1, "a"), (2, "b")))
    cx = LabelledComplex.explicit((1, 2), tuple("ab"), [top],
                                  close_down=False)
    assert cx.contains(top)
    assert not cx.contains(inj(((1, "a"),)))


def test_partite_respects_parts():
    verts = [(p, i) for p in (0, 1) for i in (0, 1, 2)]
    cx = LabelledComplex.partite((1, 2), verts, {1: 0, 2: 1},
                                 {v: v[0] for v in verts})
    assert cx.contains(inj(((1, (0, 0)), (2, (1, 2)))))
    assert not cx.contains(inj(((1, (1, 0)),)))
    assert cx.count_at((1, 2)) == 9
    assert cx.count_at((1,)) == 3


def test_pair_colour_complex():
    verts = tuple("abcd")
    colours = {frozenset(p): (1 if "a" in p else 2)
               for p in combinations(verts, 2)}
    pattern = {frozenset(p): 1 for p in combinations((1, 2, 3), 2)}
    cx = LabelledComplex.pair_colour((1, 2, 3), verts, colours, pattern)
    # only pairs through "a" carry colour 1, so no full triple matches
    assert cx.count_at((1, 2, 3)) == 0
    assert cx.contains(inj(((1, "a"), (2, "b"))))
    assert not cx.contains(inj(((2, "b"), (3, "c"))))


def test_partite_template_shape():
    cx = LabelledComplex.partite_template((1, 2), 2)
    assert len(cx.vertices) == 4
    assert cx.count_at((1, 2)) == 4
    assert cx.count_at((1,)) == 2


def test_level_sets_and_restrict():
    cx = LabelledComplex.complete((1, 2), tuple("abc"))
    assert cx.level_sets(1) == [(1,), (2,)]
    assert sum(len(cx.maps_at(B)) for B in cx.level_sets(1)) == 6
    sub = cx.restrict({(1, 2): [inj(((1, "a"), (2, "b")))]})
    assert sub.contains(inj(((1, "a"), (2, "b"))))
    assert not sub.contains(inj(((1, "b"), (2, "a"))))


def test_restrict_vertices():
    cx = LabelledComplex.complete((1, 2), tuple("abcd"))
    sub = cx.restrict_vertices(("a", "b"))
    assert sub.count_at((1, 2)) == 2


def test_neighbourhood():
    cx = LabelledComplex.complete((1, 2, 3), tuple("abcde"))
    nb = cx.neighbourhood(inj(((1, "a"),)))
    # maps over the remaining labels avoiding "a"
    assert nb.contains(inj(((2, "b"), (3, "c"))))
    assert not nb.contains(inj(((2, "a"),)))


def test_known_adapted_fast_paths():
    comp = LabelledComplex.complete((1, 2, 3), tuple("abc"))
    s3 = PermutationGroup.symmetric((1, 2, 3))
    assert comp.known_adapted(s3)
    verts = [(p, i) for p in (0, 1) for i in (0, 1)]
    part = LabelledComplex.partite((1, 2), verts, {1: 0, 2: 1},
                                   {v: v[0] for v in verts})
    swap = PermutationGroup((1, 2), [(2, 1)])
    assert part.known_adapted(PermutationGroup.trivial((1, 2)))
    assert not part.known_adapted(swap)  # swap crosses parts
    ok, wit = is_adapted(part, swap)
    assert not ok and wit is not None


@settings(max_examples=10, deadline=None)
@given(st.integers(3, 4), st.integers(4, 6))
def test_explicit_closure_is_adapted_check(r, n):
    labels = tuple(range(1, r + 1))
    verts = tuple(range(n))
    cx = LabelledComplex.complete(labels, verts)
    grp = PermutationGroup.symmetric(labels)
    ok, _ = is_adapted(cx, grp)
    assert ok


def test_extension_counting_triangles():
    # completing one edge of a triangle template over K_5
    cx = LabelledComplex.complete((1, 2, 3), tuple(range(5)))
    tpl = LabelledComplex.partite_template((1, 2, 3), 1)
    frozen = [v for v in tpl.vertices if v[0] in (1, 2)]
    base = inj(((frozen[0], 0), (frozen[1], 1)))
    ext = Extension(tpl, frozen, base)
    found = list(iter_extensions(cx, ext))
    assert len(found) == 3
    assert count_extensions(cx, ext) == 3
    for phi in found:
        d = dict(phi)
        assert d[frozen[0]] == 0 and d[frozen[1]] == 1
        assert len(set(d.values())) == 3  # injective placement


def test_json_roundtrip_all_kinds():
    comp = LabelledComplex.complete((1, 2), (("t", 0), ("t", 1)))
    assert LabelledComplex.from_json(comp.to_json()).contains(
        inj(((1, ("t", 1)),)))
    expl = LabelledComplex.explicit((1, 2), tuple("ab"),
                                    [inj(((1, "a"), (2, "b")))])
    back = LabelledComplex.from_json(expl.to_json())
    assert back.count_at((1, 2)) == expl.count_at((1, 2))
    verts = [(p, i) for p in (0, 1) for i in (0, 1)]
    part = LabelledComplex.partite((1, 2), verts, {1: 0, 2: 1},
                                   {v: v[0] for v in verts})
    back = LabelledComplex.from_json(part.to_json())
    assert back.count_at((1, 2)) == 4
    colours = {frozenset(("a", "b")): 1}
    pattern = {frozenset((1, 2)): 1}
    pc = LabelledComplex.pair_colour((1, 2), tuple("ab"), colours, pattern)
    back = LabelledComplex.from_json(pc.to_json())
    assert back.contains(inj(((1, "a"), (2, "b"))))


def test_octa_host_level_sizes(octa):
    # frozen from the builtin: twisted gluing keeps exactly these counts
    cx = octa.complex
    assert [cx.size(k) for k in (1, 2, 3, 4)] == [32, 76, 48, 16]
