"""Integer lattices of boundaries: diagonal forms, span tests, octahedra.

The membership tests decide whether a target vector lies in the lattice
generated by a system's molecules.  Two finite tests run per orbit and
level: the "sharp" route aggregates, for each map, the degree sums per
top-level label set; the "shadow" route pushes chain-tagged degree maps
down one level at a time.  Both reduce each orbit to a small integer solve
against realizable column patterns, and both must agree.  A brute-force
oracle over explicitly enumerated molecules backs them up on instances
small enough to materialize.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, permutations, product

from .errors import BudgetExceeded, ConstructionError
from .maps import (compose, dom, extends, img_set, inj, inverse, sort_key,
                   sub_injections)

# ---------------------------------------------------------------------------
# integer linear algebra
# ---------------------------------------------------------------------------


class DiagonalForm:
    """P @ Z @ Q = D with P, Q unimodular and a positive divisor chain."""

    __slots__ = ("P", "Q", "diag", "rows", "cols")

    def __init__(self, P, Q, diag, rows, cols):
        self.P = P
        self.Q = Q
        self.diag = diag
        self.rows = rows
        self.cols = cols

    def rank(self):
        return len([d for d in self.diag if d])


def _identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _diagonalize(Z, track_p, rhs=None):
    """Shared elimination core.

    Row operations are mirrored on P (when tracked) and on rhs; column
    operations on Q.  Pivot choice is the smallest absolute nonzero value
    in the working region with row-major tie-breaking, so runs are
    reproducible.
    """
    A = [[int(x) for x in row] for row in Z]
    m = len(A)
    k = len(A[0]) if m else 0
    for row in A:
        if len(row) != k:
            raise ConstructionError("ragged matrix")
    P = _identity(m) if track_p else None
    Q = _identity(k)
    b = [int(x) for x in rhs] if rhs is not None else None
    if b is not None and len(b) != m:
        raise ConstructionError("rhs length mismatch")

    def swap_rows(i, j):
        if i != j:
            A[i], A[j] = A[j], A[i]
            if P is not None:
                P[i], P[j] = P[j], P[i]
            if b is not None:
                b[i], b[j] = b[j], b[i]

    def swap_cols(i, j):
        if i != j:
            for row in A:
                row[i], row[j] = row[j], row[i]
            for row in Q:
                row[i], row[j] = row[j], row[i]

    def add_row(src, dst, mult):
        As, Ad = A[src], A[dst]
        for j in range(k):
            Ad[j] += mult * As[j]
        if P is not None:
            Ps, Pd = P[src], P[dst]
            for j in range(m):
                Pd[j] += mult * Ps[j]
        if b is not None:
            b[dst] += mult * b[src]

    def add_col(src, dst, mult):
        for row in A:
            row[dst] += mult * row[src]
        for row in Q:
            row[dst] += mult * row[src]

    t = 0
    limit = min(m, k)
    while t < limit:
        piv = None
        for i in range(t, m):
            Ai = A[i]
            for j in range(t, k):
                v = Ai[j]
                if v and (piv is None or abs(v) < piv[0]):
                    piv = (abs(v), i, j)
                    if piv[0] == 1:
                        break
            if piv and piv[0] == 1:
                break
        if piv is None:
            break
        swap_rows(t, piv[1])
        swap_cols(t, piv[2])
        while True:
            again = False
            for i in range(t + 1, m):
                if A[i][t]:
                    qv = A[i][t] // A[t][t]
                    if qv:
                        add_row(t, i, -qv)
                    if A[i][t]:
                        swap_rows(t, i)
                        again = True
            if again:
                continue
            for j in range(t + 1, k):
                if A[t][j]:
                    qv = A[t][j] // A[t][t]
                    if qv:
                        add_col(t, j, -qv)
                    if A[t][j]:
                        swap_cols(t, j)
                        again = True
            if again:
                continue
            # divisor-chain sweep: the pivot must divide the untouched block
            bad = None
            p = A[t][t]
            for i in range(t + 1, m):
                Ai = A[i]
                for j in range(t + 1, k):
                    if Ai[j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(bad, t, 1)
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            if P is not None:
                P[t] = [-x for x in P[t]]
            if b is not None:
                b[t] = -b[t]
        t += 1
    diag = [A[i][i] if i < k else 0 for i in range(min(m, k))]
    return diag, P, Q, b


def diagonal_form(Z) -> DiagonalForm:
    m = len(Z)
    k = len(Z[0]) if m else 0
    diag, P, Q, _ = _diagonalize(Z, track_p=True)
    return DiagonalForm(P, Q, diag, m, k)


def integer_solve(Z, rhs):
    """One integer solution of Z x = rhs, or None."""
    m = len(Z)
    k = len(Z[0]) if m else 0
    if m == 0:
        return [0] * k
    diag, _, Q, b = _diagonalize(Z, track_p=False, rhs=rhs)
    r = len([d for d in diag if d])
    y = [0] * k
    for i in range(m):
        if i < r:
            if b[i] % diag[i]:
                return None
            y[i] = b[i] // diag[i]
        elif b[i]:
            return None
    x = [sum(Q[i][j] * y[j] for j in range(r)) for i in range(k)]
    for row, want in zip(Z, rhs):
        if sum(int(a) * v for a, v in zip(row, x)) != int(want):
            return None
    return x


def kernel_basis(Z):
    """A basis of the full integer kernel lattice of Z."""
    m = len(Z)
    k = len(Z[0]) if m else 0
    if k == 0:
        return []
    if m == 0:
        return _identity(k)
    diag, _, Q, _ = _diagonalize(Z, track_p=False)
    r = len([d for d in diag if d])
    return [[Q[i][j] for i in range(k)] for j in range(r, k)]


def determinant(M) -> int:
    """Exact determinant by fraction-free elimination."""
    n = len(M)
    if n == 0:
        return 1
    A = [[int(x) for x in row] for row in M]
    sign = 1
    prev = 1
    for t in range(n - 1):
        if A[t][t] == 0:
            swap = next((i for i in range(t + 1, n) if A[i][t]), None)
            if swap is None:
                return 0
            A[t], A[swap] = A[swap], A[t]
            sign = -sign
        for i in range(t + 1, n):
            for j in range(t + 1, n):
                A[i][j] = (A[i][j] * A[t][t] - A[i][t] * A[t][j]) // prev
            A[i][t] = 0
        prev = A[t][t]
    return sign * A[n - 1][n - 1]


# ---------------------------------------------------------------------------
# exact rational feasibility (phase-1 simplex, Bland's rule)
# ---------------------------------------------------------------------------


def rational_feasible(Z, rhs, bounds=None, want_certificate=False):
    """Exact rational x with Z x = rhs within per-variable bounds.

    By default every variable is nonnegative; `bounds` may give a (lo, hi)
    pair per variable, with either side None for unbounded.  Returns a
    list of Fractions, or None when infeasible.  With want_certificate the
    return is (x, None) or (None, cert) where cert carries the phase-1 row
    multipliers y: y . rhs differs from zero while y prices every feasible
    column direction nonpositively.
    """
    m = len(Z)
    k = len(Z[0]) if m else 0
    if bounds is None:
        bounds = [(0, None)] * k
    if len(bounds) != k:
        raise ConstructionError("bounds arity mismatch")
    lo_hi = []
    for lo, hi in bounds:
        lo = Fraction(lo) if lo is not None else None
        hi = Fraction(hi) if hi is not None else None
        if lo is not None and hi is not None and hi < lo:
            return (None, None) if want_certificate else None
        lo_hi.append((lo, hi))

    # shift every variable into nonnegative parts: x = offset + sign * u
    back = []
    offset = [Fraction(0)] * k
    ubs = []
    for j, (lo, hi) in enumerate(lo_hi):
        if lo is not None:
            offset[j] = lo
            back.append((j, 1))
            if hi is not None:
                ubs.append((len(back) - 1, hi - lo))
        elif hi is not None:
            offset[j] = hi
            back.append((j, -1))
        else:
            back.append((j, 1))
            back.append((j, -1))
    nstd = len(back)

    rows = []
    rhs2 = []
    for i in range(m):
        rows.append([Fraction(Z[i][j]) * sgn for j, sgn in back])
        rhs2.append(Fraction(rhs[i])
                    - sum(Fraction(Z[i][j]) * offset[j] for j in range(k)))
    for c, width in ubs:
        row = [Fraction(0)] * nstd
        row[c] = Fraction(1)
        rows.append(row)
        rhs2.append(width)

    M = len(rows)
    nslack = len(ubs)
    for row in rows:
        row.extend([Fraction(0)] * nslack)
    for s in range(nslack):
        rows[m + s][nstd + s] = Fraction(1)
    total = nstd + nslack

    signs = [1] * M
    for i in range(M):
        if rhs2[i] < 0:
            rows[i] = [-a for a in rows[i]]
            rhs2[i] = -rhs2[i]
            signs[i] = -1
    for i in range(M):
        rows[i].extend(Fraction(1 if t == i else 0) for t in range(M))
    ncols = total + M
    basis = [total + i for i in range(M)]
    cost = [Fraction(0)] * total + [Fraction(1)] * M

    def pivot(r, c):
        pv = rows[r][c]
        rows[r] = [a / pv for a in rows[r]]
        rhs2[r] /= pv
        pr = rows[r]
        for i in range(M):
            f = rows[i][c]
            if i != r and f:
                rows[i] = [a - f * e for a, e in zip(rows[i], pr)]
                rhs2[i] -= f * rhs2[r]
        basis[r] = c

    guard = 0
    while True:
        guard += 1
        if guard > 50000:
            raise ConstructionError("simplex iteration guard tripped")
        red = list(cost)
        for i in range(M):
            lam = cost[basis[i]]
            if lam:
                ri = rows[i]
                for j in range(ncols):
                    if ri[j]:
                        red[j] -= lam * ri[j]
        enter = next((j for j in range(ncols) if red[j] < 0), None)
        if enter is None:
            break
        best = None
        for i in range(M):
            if rows[i][enter] > 0:
                ratio = rhs2[i] / rows[i][enter]
                if (best is None or ratio < best[0]
                        or (ratio == best[0] and basis[i] < basis[best[1]])):
                    best = (ratio, i)
        if best is None:
            raise ConstructionError("phase-1 objective unbounded")
        pivot(best[1], enter)

    obj = sum(rhs2[i] for i in range(M) if basis[i] >= total)
    if obj != 0:
        if want_certificate:
            y = []
            for i in range(M):
                yi = sum(cost[basis[t]] * rows[t][total + i]
                         for t in range(M))
                y.append(yi * signs[i])
            cert = {"multipliers": y[:m], "bound_multipliers": y[m:],
                    "value": obj}
            return None, cert
        return None

    xstd = [Fraction(0)] * ncols
    for i in range(M):
        xstd[basis[i]] = rhs2[i]
    x = list(offset)
    for c, (j, sgn) in enumerate(back):
        x[j] += sgn * xstd[c]
    for i in range(m):
        if sum(Fraction(Z[i][j]) * x[j] for j in range(k)) != Fraction(rhs[i]):
            raise ConstructionError("simplex produced a bad point")
    for j, (lo, hi) in enumerate(lo_hi):
        if (lo is not None and x[j] < lo) or (hi is not None and x[j] > hi):
            raise ConstructionError("simplex violated a bound")
    return (x, None) if want_certificate else x


# ---------------------------------------------------------------------------
# null vectors
# ---------------------------------------------------------------------------


def null_check(J, i):
    """Do the level-i degree sums of J vanish?  Returns (bool, witness)."""
    if not 0 <= i < J.r:
        raise ConstructionError("level out of range")
    acc = {}
    for psi, vec in J.items():
        for sub in sub_injections(psi, i):
            cur = acc.get(sub)
            acc[sub] = vec if cur is None else tuple(
                a + b for a, b in zip(cur, vec))
    bad = sorted((s for s, v in acc.items() if any(v)), key=sort_key)
    if bad:
        return False, bad[0]
    return True, None


# ---------------------------------------------------------------------------
# map-indexed vectors over a fixed label set; octahedra
# ---------------------------------------------------------------------------


class FMapVector:
    """Sparse vector keyed by (map at B, base bijection of B) pairs."""

    __slots__ = ("B", "dim", "data")

    def __init__(self, B, dim, entries=()):
        self.B = tuple(sorted(B))
        self.dim = dim
        self.data = {}
        for (psi, s), vec in entries:
            psi = tuple(psi)
            s = tuple(s)
            if dom(psi) != self.B or dom(s) != self.B:
                raise ConstructionError("key outside the label set")
            vec = tuple(vec)
            if len(vec) != dim:
                raise ConstructionError("value arity mismatch")
            key = (psi, s)
            cur = self.data.get(key)
            out = vec if cur is None else tuple(
                a + b for a, b in zip(cur, vec))
            if any(out):
                self.data[key] = out
            elif cur is not None:
                del self.data[key]

    def get(self, psi, s):
        return self.data.get((tuple(psi), tuple(s)), (0,) * self.dim)

    def items(self):
        return sorted(self.data.items())

    def support(self):
        return frozenset(self.data)

    def _combine(self, other, sign):
        if self.B != other.B or self.dim != other.dim:
            raise ConstructionError("mismatched shapes")
        out = FMapVector(self.B, self.dim)
        out.data = dict(self.data)
        for key, vec in other.data.items():
            cur = out.data.get(key, (0,) * self.dim)
            new = tuple(a + sign * b for a, b in zip(cur, vec))
            if any(new):
                out.data[key] = new
            else:
                out.data.pop(key, None)
        return out

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def scale(self, c):
        out = FMapVector(self.B, self.dim)
        if c:
            out.data = {k: tuple(c * a for a in v)
                        for k, v in self.data.items()}
        return out

    def __eq__(self, other):
        return (isinstance(other, FMapVector) and self.B == other.B
                and self.dim == other.dim and self.data == other.data)

    def is_symmetric(self, group):
        """Right translation of the map matches left translation of s."""
        taus = group.restricted_maps(self.B, self.B)
        zero = (0,) * self.dim
        for (psi, s), vec in self.data.items():
            for tau in taus:
                other = self.data.get(
                    (compose(psi, tau), compose(inverse(tau), s)), zero)
                if other != vec:
                    return False
        return True

    def is_null(self):
        """Every base-bijection slice has vanishing one-lower degree sums."""
        lvl = len(self.B) - 1
        acc = {}
        for (psi, s), vec in self.data.items():
            for sub in sub_injections(psi, lvl):
                key = (sub, s)
                cur = acc.get(key)
                acc[key] = vec if cur is None else tuple(
                    a + b for a, b in zip(cur, vec))
        return all(not any(v) for v in acc.values())


def f_B(group, J, B):
    """Collapse an edge vector to (map, bijection) coordinates at B.

    The entry at (psi, s) is J evaluated at psi∘s, so each support map of J
    is reanchored at every relabelled base map psi = m∘s⁻¹.
    """
    B = tuple(sorted(B))
    taus = sorted(group.restricted_maps(B, B), key=sort_key)
    entries = []
    for m, v in J.items():
        if dom(m) != B or not any(v):
            continue
        for s in taus:
            entries.append(((compose(m, inverse(s)), s), v))
    return FMapVector(B, J.dim, entries)


def octahedron_complex(B):
    """The doubled partite template on the label set B."""
    from .complexes import LabelledComplex
    return LabelledComplex.partite_template(tuple(sorted(B)), 2)


def octahedron_tops(B):
    """Top maps of the doubled template: one of two slots per label."""
    B = tuple(sorted(B))
    return [inj([(b, (b, x)) for b, x in zip(B, choice)])
            for choice in product((1, 2), repeat=len(B))]


def octahedron_sign(top):
    return -1 if sum(v[1] - 1 for _, v in top) % 2 else 1


def octahedron_embeddings(complex_, B):
    """Injective placements of the doubled template with all tops inside."""
    B = tuple(sorted(B))
    tvs = [(b, x) for b in B for x in (1, 2)]
    if complex_.kind == "complete":
        return [inj(zip(tvs, images))
                for images in permutations(complex_.vertices, len(tvs))]
    tops = octahedron_tops(B)
    out = []
    assign = {}
    used = set()

    def placed_ok():
        for top in tops:
            pairs = [(b, assign[v]) for b, v in top if v in assign]
            if pairs and not complex_.contains(inj(pairs)):
                return False
        return True

    def rec(i):
        if i == len(tvs):
            out.append(inj(assign.items()))
            return
        tv = tvs[i]
        for w in complex_.vertices:
            if w in used:
                continue
            assign[tv] = w
            used.add(w)
            if placed_ok():
                rec(i + 1)
            del assign[tv]
            used.remove(w)

    rec(0)
    return out


def octahedron_vector(complex_, group, psi_star, v, dim):
    """Signed doubled-template vector seeded by v over the base bijections.

    v maps base bijections to length-dim tuples; the entry at the tau
    translate of a top composite, in coordinate s, is the top's sign times
    v at tau s.
    """
    psi_star = tuple(psi_star)
    B = tuple(sorted({tv[0] for tv, _ in psi_star}))
    tops = octahedron_tops(B)
    for top in tops:
        if not complex_.contains(compose(psi_star, top)):
            raise ConstructionError("base map is not a template embedding")
    taus = sorted(group.restricted_maps(B, B), key=sort_key)
    zero = (0,) * dim
    entries = []
    for top in tops:
        sgn = octahedron_sign(top)
        pt = compose(psi_star, top)
        for tau in taus:
            key_psi = compose(pt, tau)
            for s in taus:
                val = tuple(v.get(compose(tau, s), zero))
                if any(val):
                    entries.append(((key_psi, s),
                                    tuple(sgn * a for a in val)))
    return FMapVector(B, dim, entries)


def octahedron_generators(complex_, group, B, dim):
    """Deduplicated sparse columns spanning the doubled-template lattice."""
    B = tuple(sorted(B))
    taus = sorted(group.restricted_maps(B, B), key=sort_key)
    seen = {}
    for psi_star in octahedron_embeddings(complex_, B):
        tops = [(octahedron_sign(t), compose(psi_star, t))
                for t in octahedron_tops(B)]
        for s0 in taus:
            for d0 in range(dim):
                entries = {}
                for sgn, pt in tops:
                    for tau in taus:
                        key = (compose(pt, tau), compose(inverse(tau), s0))
                        vec = [0] * dim
                        vec[d0] = sgn
                        entries[key] = tuple(vec)
                flat = tuple(sorted(entries.items()))
                first = next(a for a in flat[0][1] if a)
                if first < 0:
                    flat = tuple((k, tuple(-a for a in vv))
                                 for k, vv in flat)
                seen.setdefault(flat, None)
    return sorted(seen)


def octahedron_span(complex_, group, B, dim, target: FMapVector,
                    budget=None, generators=None):
    """Is the target in the integer span of all doubled-template vectors?

    Columns come from every template embedding and every seed basis
    vector, deduplicated up to sign; membership is one integer solve over
    rows deduplicated by coefficient pattern.  Returns (bool, stats).
    """
    B = tuple(sorted(B))
    if generators is None:
        generators = octahedron_generators(complex_, group, B, dim)
    cols = generators
    rows = set(target.data)
    for col in cols:
        rows.update(k for k, _ in col)
    rows = sorted(rows)
    ncols = len(cols)
    nrows = len(rows) * dim
    if budget is not None and nrows * max(ncols, 1) > budget:
        raise BudgetExceeded("template generator matrix over budget")
    pos = {key: idx for idx, key in enumerate(rows)}
    dense = [[0] * ncols for _ in range(nrows)]
    for ci, col in enumerate(cols):
        for key, vec in col:
            base = pos[key] * dim
            for d, a in enumerate(vec):
                dense[base + d][ci] = a
    rhs = [0] * nrows
    for key, vec in target.data.items():
        base = pos[key] * dim
        for d, a in enumerate(vec):
            rhs[base + d] = a
    grouped = {}
    for rowvec, want in zip(dense, rhs):
        sig = tuple(rowvec)
        if sig in grouped and grouped[sig] != want:
            return False, {"columns": ncols, "rows": nrows}
        grouped[sig] = want
    items = sorted(grouped.items())
    matrix = [list(sig) for sig, _ in items]
    want = [w for _, w in items]
    ok = integer_solve(matrix, want) is not None
    return ok, {"columns": ncols, "rows": len(matrix)}


# ---------------------------------------------------------------------------
# sharp route: top-domain degree sums
# ---------------------------------------------------------------------------


def sharp_degree(J, psi_prime):
    """Degree sums of J over each top label set, restricted above a map."""
    psi_prime = tuple(psi_prime)
    labels = sorted(J.complex.labels)
    out = {B: (0,) * J.dim for B in combinations(labels, J.r)}
    for psi, vec in J.items():
        if extends(psi, psi_prime):
            B = dom(psi)
            out[B] = tuple(a + b for a, b in zip(out[B], vec))
    return out


def _prune(level):
    out = {}
    for key, vals in level.items():
        kept = {pos: a for pos, a in vals.items() if a}
        if kept:
            out[key] = kept
    return out


def _sharp_J_levels(J, r):
    """Per-level degree sums keyed map -> {(top label set, d): value}."""
    levels = [dict() for _ in range(r + 1)]
    for psi, vec in J.items():
        B = dom(psi)
        pairs = [(d, a) for d, a in enumerate(vec) if a]
        for i in range(r + 1):
            lvl = levels[i]
            for sub in sub_injections(psi, i):
                tgt = lvl.get(sub)
                if tgt is None:
                    tgt = lvl[sub] = {}
                for d, a in pairs:
                    key = (B, d)
                    tgt[key] = tgt.get(key, 0) + a
    return [_prune(lvl) for lvl in levels]


def _gamma_sharp(system):
    """Label-side analogue of the sharp sums, cached on the system."""
    cached = system._sharp_cache.get(("gamma",))
    if cached is not None:
        return cached
    r = system.r
    levels = [dict() for _ in range(r + 1)]
    for (member, theta), vec in system.gamma.items():
        B = dom(theta)
        pairs = [(d, a) for d, a in enumerate(vec) if a]
        for i in range(r + 1):
            lvl = levels[i]
            for sub in sub_injections(theta, i):
                key = (member, sub)
                tgt = lvl.get(key)
                if tgt is None:
                    tgt = lvl[key] = {}
                for d, a in pairs:
                    pos = (B, d)
                    tgt[pos] = tgt.get(pos, 0) + a
    levels = [_prune(lvl) for lvl in levels]
    system._sharp_cache[("gamma",)] = levels
    return levels


# ---------------------------------------------------------------------------
# shadow route: iterated chain-tagged degree maps
# ---------------------------------------------------------------------------


def _shadow_J_levels(J, r):
    """Chain-tagged push-downs keyed map -> {(chain of sets, d): value}."""
    levels = [None] * (r + 1)
    cur = {}
    for psi, vec in J.items():
        tag = (dom(psi),)
        cur[psi] = {(tag, d): a for d, a in enumerate(vec) if a}
    levels[r] = _prune(cur)
    for i in range(r - 1, -1, -1):
        nxt = {}
        for psi, vals in levels[i + 1].items():
            for sub in sub_injections(psi, i):
                Bsub = dom(sub)
                tgt = nxt.get(sub)
                if tgt is None:
                    tgt = nxt[sub] = {}
                for (chain, d), a in vals.items():
                    pos = ((Bsub,) + chain, d)
                    tgt[pos] = tgt.get(pos, 0) + a
        levels[i] = _prune(nxt)
    return levels


def _gamma_shadow(system):
    cached = system._shadow_cache.get(("gamma",))
    if cached is not None:
        return cached
    r = system.r
    levels = [None] * (r + 1)
    cur = {}
    for (member, theta), vec in system.gamma.items():
        tag = (dom(theta),)
        cur[(member, theta)] = {(tag, d): a for d, a in enumerate(vec) if a}
    levels[r] = _prune(cur)
    for i in range(r - 1, -1, -1):
        nxt = {}
        for (member, theta), vals in levels[i + 1].items():
            for sub in sub_injections(theta, i):
                Bsub = dom(sub)
                key = (member, sub)
                tgt = nxt.get(key)
                if tgt is None:
                    tgt = nxt[key] = {}
                for (chain, d), a in vals.items():
                    pos = ((Bsub,) + chain, d)
                    tgt[pos] = tgt.get(pos, 0) + a
        levels[i] = _prune(nxt)
    system._shadow_cache[("gamma",)] = levels
    return levels


# ---------------------------------------------------------------------------
# per-orbit span tests shared by both routes
# ---------------------------------------------------------------------------


def support_orbits(group, keys):
    """Group same-level maps into orbits as (rep, {index map: member}).

    The index of a member is the unique group restriction carrying the
    rep onto it; reps are sort-minimal, so the output is deterministic.
    """
    buckets = {}
    for m in keys:
        m = tuple(m)
        buckets.setdefault(frozenset(img_set(m)), []).append(m)
    out = []
    for _, ms in buckets.items():
        remaining = sorted(set(ms), key=sort_key)
        while remaining:
            rep = remaining[0]
            onto = group.restrictions_onto(dom(rep))
            inv_rep = inverse(rep)
            got = {}
            rest = []
            for m in remaining:
                sp = compose(inv_rep, m)
                if sp in onto:
                    got[sp] = m
                else:
                    rest.append(m)
            out.append((rep, got))
            remaining = rest
    out.sort(key=lambda pair: sort_key(pair[0]))
    return out


def _column_classes(system, level, B1, method):
    """Deduplicated column patterns and row classes for one rep domain.

    Patterns depend only on label data, so the result is cached on the
    system and shared by every orbit whose rep has this domain.
    """
    cache = system._sharp_cache if method == "sharp" else system._shadow_cache
    key = ("cols", level, B1)
    hit = cache.get(key)
    if hit is not None:
        return hit
    gam = (_gamma_sharp(system) if method == "sharp"
           else _gamma_shadow(system))[level]
    group = system.group
    onto = sorted(group.restrictions_onto(B1), key=sort_key)
    withd = sorted(group.restrictions_with_domain(B1), key=sort_key)
    buckets = {}
    for member in system.members:
        for s in withd:
            pat = {}
            for sp in onto:
                vals = gam.get((member, compose(s, sp)))
                if vals:
                    for pos, a in vals.items():
                        pat[(sp, pos)] = a
            if pat:
                buckets.setdefault(tuple(sorted(pat.items())),
                                   []).append((member, s))
    classes = [(dict(flat), tuple(mem))
               for flat, mem in sorted(buckets.items())]
    rows = set()
    for pat, _ in classes:
        rows.update(pat)
    row_class = {}
    rc_patterns = []
    rc_sizes = []
    index = {}
    for row in sorted(rows):
        sig = tuple(pat.get(row, 0) for pat, _ in classes)
        rc = index.get(sig)
        if rc is None:
            rc = index[sig] = len(rc_patterns)
            rc_patterns.append(sig)
            rc_sizes.append(0)
        row_class[row] = rc
        rc_sizes[rc] += 1
    data = (classes, row_class, rc_patterns, rc_sizes)
    cache[key] = data
    return data


def _orbit_span_test(system, complex_, rep, members, level_map, cdata,
                     always_realizable):
    classes, row_class, rc_patterns, rc_sizes = cdata
    rhs_rows = {}
    for sp, m in members.items():
        vals = level_map.get(m)
        if not vals:
            continue
        for pos, a in vals.items():
            rhs_rows[(sp, pos)] = a
    if not rhs_rows:
        return True
    cls_val = {}
    cls_cnt = {}
    for row, a in rhs_rows.items():
        rc = row_class.get(row)
        if rc is None:
            # nonzero degree where every generator vanishes
            return False
        if rc in cls_val:
            if cls_val[rc] != a:
                return False
            cls_cnt[rc] += 1
        else:
            cls_val[rc] = a
            cls_cnt[rc] = 1
    for rc, cnt in cls_cnt.items():
        # rows of one class share coefficients; absent rows carry zero
        if cnt != rc_sizes[rc]:
            return False
    if always_realizable:
        keep = range(len(classes))
    else:
        keep = [ci for ci, (_, mem) in enumerate(classes)
                if any(system.extends_to_embedding(
                    complex_, compose(rep, inverse(s))) for _, s in mem)]
    matrix = [[rc_patterns[rc][ci] for ci in keep]
              for rc in range(len(rc_patterns))]
    want = [cls_val.get(rc, 0) for rc in range(len(rc_patterns))]
    return integer_solve(matrix, want) is not None


def _always_realizable(system, complex_):
    return (complex_.kind == "complete"
            and len(complex_.vertices) >= len(system.group.labels))


def lattice_member_Lminus(system, J):
    """Top-level orbit span test only.  Returns (bool, witness rep)."""
    complex_ = J.complex
    level_map = _prune({
        psi: {(dom(psi), d): a for d, a in enumerate(vec)}
        for psi, vec in J.items()})
    always = _always_realizable(system, complex_)
    for rep, members in support_orbits(system.group, level_map.keys()):
        cdata = _column_classes(system, system.r, dom(rep), "sharp")
        if not _orbit_span_test(system, complex_, rep, members, level_map,
                                cdata, always):
            return False, rep
    return True, None


def lattice_member_L(system, J, method="sharp"):
    """Orbit span tests at every level 0..r.  Returns (bool, witness).

    The witness is (level, orbit rep) for the first failing orbit in
    (level ascending, rep sorted) order, or None on success.  The complex
    is assumed to respect the group action.
    """
    if method == "sharp":
        levels = _sharp_J_levels(J, system.r)
    elif method == "shadow":
        levels = _shadow_J_levels(J, system.r)
    else:
        raise ConstructionError("method must be sharp or shadow")
    complex_ = J.complex
    always = _always_realizable(system, complex_)
    for i in range(system.r + 1):
        level_map = levels[i]
        for rep, members in support_orbits(system.group, level_map.keys()):
            cdata = _column_classes(system, i, dom(rep), method)
            if not _orbit_span_test(system, complex_, rep, members,
                                    level_map, cdata, always):
                return False, (i, rep)
    return True, None


def lattice_member_oracle(system, J, budget=None):
    """Brute force: J against the full deduplicated molecule matrix."""
    complex_ = J.complex
    if budget is None:
        budget = 10_000_000
    cols = {}
    examined = 0
    for member, phi in system.iter_embeddings(complex_):
        examined += 1
        if examined > budget:
            raise BudgetExceeded("embedding enumeration over budget")
        mol = system.molecule(complex_, member, phi)
        if mol.data:
            cols.setdefault(tuple(sorted(mol.data.items())), None)
    cols = sorted(cols)
    rows = set(J.data)
    for col in cols:
        rows.update(k for k, _ in col)
    rows = sorted(rows, key=sort_key)
    if len(rows) * J.dim * max(len(cols), 1) > budget:
        raise BudgetExceeded("molecule matrix over budget")
    pos = {psi: idx for idx, psi in enumerate(rows)}
    matrix = [[0] * len(cols) for _ in range(len(rows) * J.dim)]
    for ci, col in enumerate(cols):
        for psi, vec in col:
            base = pos[psi] * J.dim
            for d, a in enumerate(vec):
                matrix[base + d][ci] = a
    rhs = [0] * (len(rows) * J.dim)
    for psi, vec in J.data.items():
        base = pos[psi] * J.dim
        for d, a in enumerate(vec):
            rhs[base + d] = a
    return integer_solve(matrix, rhs) is not None


# ---------------------------------------------------------------------------
# kernel splitting at one label set
# ---------------------------------------------------------------------------


def _type_row_matrix(system, B):
    group = system.group
    withd = sorted(group.restrictions_with_domain(B), key=sort_key)
    sigmas = sorted(group.restrictions_onto(B), key=sort_key)
    order = [(member, s) for member in system.members for s in withd]
    matrix = []
    for sp in sigmas:
        for d in range(system.dim):
            matrix.append([system.value(member, compose(s, sp))[d]
                           for member, s in order])
    return order, matrix


def lattice_constant(system, B):
    """Largest kernel-basis 1-norm at B; 1 when the kernel is trivial."""
    _, matrix = _type_row_matrix(system, tuple(sorted(B)))
    basis = kernel_basis(matrix)
    if not basis:
        return 1
    return max(sum(abs(a) for a in vec) for vec in basis)


def lattice_constant_split(system, B, coeffs):
    """Split a kernel combination of the type rows into bounded pieces.

    coeffs maps (member, map with domain B) to an integer; the weighted
    type rows must sum to zero.  Returns pieces that re-sum to coeffs,
    each a kernel basis element up to sign, so each 1-norm is at most
    lattice_constant(system, B).
    """
    B = tuple(sorted(B))
    order, matrix = _type_row_matrix(system, B)
    slot = {key: idx for idx, key in enumerate(order)}
    n = [0] * len(order)
    for key, c in coeffs.items():
        key = (key[0], tuple(key[1]))
        if key not in slot:
            raise ConstructionError("coefficient key outside the label set")
        n[slot[key]] = int(c)
    for row in matrix:
        if sum(a * c for a, c in zip(row, n)):
            raise ConstructionError("coefficients are not in the kernel")
    basis = kernel_basis(matrix)
    if not basis:
        return []
    bmat = [[basis[j][i] for j in range(len(basis))]
            for i in range(len(order))]
    expansion = integer_solve(bmat, n)
    if expansion is None:
        raise ConstructionError("kernel expansion failed")
    pieces = []
    for c, vec in zip(expansion, basis):
        step = vec if c > 0 else [-a for a in vec]
        for _ in range(abs(c)):
            pieces.append({key: a for key, a in zip(order, step) if a})
    return pieces
