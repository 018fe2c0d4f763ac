"""Independent brute-force oracles used to freeze derived fixtures.

Everything here is written against the plain combinatorial definitions,
not against the package's engines, so agreement is meaningful.
"""

import math
from fractions import Fraction
from itertools import combinations, permutations

import sympy
from sympy.matrices.normalforms import smith_normal_form


def triangle_decompositions(n):
    """Count edge partitions of K_n into triangles by direct backtracking."""
    edges = list(combinations(range(n), 2))
    covered = set()

    def rec():
        free = next((e for e in edges if e not in covered), None)
        if free is None:
            return 1
        a, b = free
        total = 0
        for c in range(n):
            if c in (a, b):
                continue
            e1 = tuple(sorted((a, c)))
            e2 = tuple(sorted((b, c)))
            if e1 in covered or e2 in covered:
                continue
            covered.update(((a, b), e1, e2))
            total += rec()
            covered.difference_update(((a, b), e1, e2))
        return total

    return rec()


def latin_squares(n):
    """Count n-by-n Latin squares row by row."""
    rows = list(permutations(range(n)))

    def rec(chosen):
        if len(chosen) == n:
            return 1
        total = 0
        for r in rows:
            if all(r[c] != prev[c] for prev in chosen for c in range(n)):
                total += rec(chosen + [r])
        return total

    return rec([])


def one_factorizations(n):
    """Count 1-factorizations of K_n (n even) by matching backtracking."""
    verts = list(range(n))

    def matchings(avail):
        if not avail:
            yield []
            return
        a = avail[0]
        for b in avail[1:]:
            rest = [v for v in avail if v not in (a, b)]
            for m in matchings(rest):
                yield [(a, b)] + m

    used = set()

    def rec(k):
        if k == n - 1:
            return 1
        total = 0
        for m in matchings(verts):
            key = frozenset(m)
            if any(e in used for e in m):
                continue
            used.update(m)
            total += rec(k + 1)
            used.difference_update(m)
        return total

    return rec(0)


def smith_invariants(M):
    """Nonzero diagonal of the Smith normal form, via sympy."""
    if not M or not M[0]:
        return []
    D = smith_normal_form(sympy.Matrix(M))
    out = []
    for i in range(min(D.rows, D.cols)):
        v = int(D[i, i])
        if v:
            out.append(abs(v))
    return out


def matrix_rank(M):
    if not M or not M[0]:
        return 0
    return sympy.Matrix(M).rank()


def design_divisible(n, q, r, lam):
    """Classical divisibility, written out directly."""
    return all(
        lam * math.comb(n - i, r - i) % math.comb(q - i, r - i) == 0
        for i in range(r))


def large_set_divisible(q, r, lam, n):
    """Theorem conditions as printed: lam | C(n-r,q-r) and the design ones."""
    if math.comb(n - r, q - r) % lam:
        return False
    return design_divisible(n, q, r, lam)


def typicality_bruteforce(edges, s):
    """Worst relative intersection error, recomputed from scratch."""
    G = {frozenset(e) for e in edges}
    r = len(next(iter(G)))
    verts = sorted({v for e in G for v in e})
    density = Fraction(len(G), math.comb(len(verts), r))
    worst = Fraction(0)
    subs = list(combinations(verts, r - 1))
    for k in range(1, s + 1):
        for fam in combinations(subs, k):
            count = 0
            for v in verts:
                if any(v in f for f in fam):
                    continue
                if all(frozenset(f) | {v} in G for f in fam):
                    count += 1
            expected = density ** k * len(verts)
            worst = max(worst, abs(Fraction(count) / expected - 1)
                        / Fraction(k))
    return worst


def steiner_system_ok(points, blocks, q, j):
    """Every j-subset of points in exactly one block."""
    cover = {}
    for blk in blocks:
        if len(blk) != q:
            return False
        for f in combinations(sorted(blk), j):
            cover[f] = cover.get(f, 0) + 1
    return all(cover.get(f, 0) == 1
               for f in combinations(sorted(points), j))
