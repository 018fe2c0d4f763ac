"""Problem builders: design instances, partite blowups, reductions, builtins.

Each builder packages a labelled complex, a label symmetry group, a vector
system, and a target vector into a ProblemInstance.  The reductions
(resolvable designs, large sets, complete resolutions) additionally return
a serializable Decoder that maps solver selections back to the decoded
combinatorial object; matching direct verifiers are implemented
independently of the reductions so round-trips are genuinely checked.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import combinations, permutations, product

from .complexes import LabelledComplex
from .errors import ConstructionError, ReductionError
from .maps import compose, dom, img_set, inj, sort_key
from .symmetry import PermutationGroup, is_adapted
from .vectors import EdgeVector, VectorSystem

FORMAT_VERSION = 1


def _as_multigraph(edges, signed=False):
    """Normalize an edge collection to {frozenset: multiplicity}."""
    if isinstance(edges, dict):
        out = {}
        for e, m in edges.items():
            m = int(m)
            if m < 0 and not signed:
                raise ConstructionError("negative edge multiplicity")
            if m:
                out[frozenset(e)] = out.get(frozenset(e), 0) + m
        return out
    out = {}
    for e in edges:
        out[frozenset(e)] = out.get(frozenset(e), 0) + 1
    return out


def _edge_size(G, what="graph"):
    sizes = {len(e) for e in G}
    if len(sizes) != 1:
        raise ConstructionError(f"{what} is not uniform: edge sizes {sizes}")
    return sizes.pop()


def complete_design(q, r):
    """K^r_q on labels 1..q."""
    return {frozenset(e): 1 for e in combinations(range(1, q + 1), r)}


def complete_multigraph(n, r, lam=1, vertices=None):
    """lam copies of K^r_n."""
    vs = tuple(vertices) if vertices is not None else tuple(range(1, n + 1))
    return {frozenset(e): lam for e in combinations(vs, r)}


class PartitionSpec:
    """Label partition with a matching vertex-part assignment."""

    __slots__ = ("parts", "vertex_parts")

    def __init__(self, parts, vertex_parts):
        self.parts = tuple(tuple(sorted(p)) for p in parts)
        seen = set()
        for p in self.parts:
            if seen & set(p):
                raise ConstructionError("label parts overlap")
            seen |= set(p)
        self.vertex_parts = dict(vertex_parts)
        if set(self.vertex_parts.values()) - set(range(len(self.parts))):
            raise ConstructionError("vertex part index out of range")

    @property
    def labels(self):
        return tuple(sorted(a for p in self.parts for a in p))

    def label_part(self, a):
        for i, p in enumerate(self.parts):
            if a in p:
                return i
        raise ConstructionError(f"label {a!r} not in any part")

    def label_index(self, labelset):
        """Count of labels per part: the P-index."""
        out = [0] * len(self.parts)
        for a in labelset:
            out[self.label_part(a)] += 1
        return tuple(out)

    def vertex_index(self, vertexset):
        """Count of vertices per part: the Q-index."""
        out = [0] * len(self.parts)
        for v in vertexset:
            out[self.vertex_parts[v]] += 1
        return tuple(out)

    def group(self):
        """All label permutations preserving every part."""
        labels = self.labels
        gens = []
        for p in self.parts:
            for a, b in zip(p, p[1:]):
                images = [b if x == a else a if x == b else x
                          for x in labels]
                gens.append(tuple(images))
        if not gens:
            return PermutationGroup.trivial(labels)
        return PermutationGroup(labels, gens)

    def complex_for(self, vertices):
        label_parts = {a: self.label_part(a) for a in self.labels}
        return LabelledComplex.partite(self.labels, vertices, label_parts,
                                       self.vertex_parts)


class ProblemInstance:
    """A decomposition problem: complex, symmetry, vector system, target."""

    __slots__ = ("complex", "group", "system", "target", "provenance")

    def __init__(self, complex_, group, system, target, provenance=None):
        self.complex = complex_
        self.group = group
        self.system = system
        self.target = target
        self.provenance = dict(provenance or {})
        self.validate()

    def validate(self):
        if tuple(self.group.labels) != tuple(self.complex.labels):
            raise ConstructionError("group and complex label mismatch")
        if self.system.r != self.target.r or self.system.dim != self.target.dim:
            raise ConstructionError("system and target shape mismatch")
        if not self.complex.known_adapted(self.group):
            ok, witness = is_adapted(self.complex, self.group)
            if not ok:
                raise ConstructionError(
                    f"complex is not adapted to the group at {witness}")
        for psi in self.target.support():
            if not self.complex.contains(psi):
                raise ConstructionError(f"target entry {psi} off the complex")

    def to_json(self):
        return {"format_version": FORMAT_VERSION,
                "provenance": self.provenance,
                "complex": self.complex.to_json(),
                "group": self.group.to_json(),
                "system": self.system.to_json(),
                "target": self.target.to_json()}

    @classmethod
    def from_json(cls, data):
        cx = LabelledComplex.from_json(data["complex"])
        grp = PermutationGroup.from_json(data["group"])
        system = VectorSystem.from_json(grp, data["system"])
        target = EdgeVector.from_json(cx, data["target"])
        return cls(cx, grp, system, target, data.get("provenance"))

    def __repr__(self):
        tag = self.provenance.get("builder", "?")
        return f"ProblemInstance({tag}, {self.complex!r})"


def _indicator_system(group, H, r, member="H"):
    """gamma_theta = 1 when the image of theta is an edge of H."""
    gamma = {}
    for B in combinations(group.labels, r):
        for theta in group.restrictions_with_domain(B):
            if frozenset(img_set(theta)) in H:
                gamma[(member, theta)] = (1,)
    return VectorSystem(group, (member,), r, 1, gamma)


def _lift_target(cx, r, dim, value_fn):
    entries = []
    for B in combinations(cx.labels, r):
        for m in cx.maps_at(B):
            v = value_fn(m)
            if any(v):
                entries.append((m, v))
    return EdgeVector(cx, r, dim, entries, validate=False)


def build_nonpartite(H, G, q=None, n=None):
    """H-decomposition of an r-multigraph G, with the full label symmetry."""
    H = _as_multigraph(H)
    G = _as_multigraph(G)
    r = _edge_size(H, "H")
    if G and _edge_size(G, "G") != r:
        raise ConstructionError("H and G are not of the same uniformity")
    if q is None:
        q = max((max(e) for e in H), default=0)
    if n is None:
        n = max((max(e) for e in G), default=0)
    if n < q:
        raise ConstructionError(f"need n >= q, got n={n} q={q}")
    labels = tuple(range(1, q + 1))
    vertices = tuple(range(1, n + 1))
    cx = LabelledComplex.complete(labels, vertices)
    grp = PermutationGroup.symmetric(labels)
    system = _indicator_system(grp, H, r)
    target = _lift_target(cx, r, 1,
                          lambda m: (G.get(frozenset(img_set(m)), 0),))
    prov = {"builder": "nonpartite", "q": q, "n": n, "r": r}
    return ProblemInstance(cx, grp, system, target, prov)


def build_partite(H, spec: PartitionSpec, G):
    """Partite H-decomposition instance over a part-respecting blowup."""
    H = _as_multigraph(H)
    G = _as_multigraph(G)
    r = _edge_size(H, "H")
    labels = spec.labels
    if any(a not in labels for e in H for a in e):
        raise ConstructionError("H has labels outside the partition")
    I = {spec.label_index(e) for e in H}
    for e in G:
        if _edge_size({e: 1}) != r:
            raise ConstructionError("G is not of H's uniformity")
        if spec.vertex_index(e) not in I:
            raise ConstructionError(
                f"blowup violation: edge {sorted(e, key=repr)} has index "
                f"outside H's index set")
    vertices = tuple(sorted(spec.vertex_parts, key=repr))
    cx = spec.complex_for(vertices)
    grp = spec.group()
    system = _indicator_system(grp, H, r)
    target = _lift_target(cx, r, 1,
                          lambda m: (G.get(frozenset(img_set(m)), 0),))
    prov = {"builder": "partite", "r": r,
            "parts": [list(p) for p in spec.parts]}
    return ProblemInstance(cx, grp, system, target, prov)


# -- divisibility checkers -----------------------------------------------------


def _degree(G, f):
    f = frozenset(f)
    return sum(m for e, m in G.items() if f <= e)


def check_H_divisible(H, G, q=None, n=None):
    """gcd of H's i-set degrees must divide every i-set degree of G."""
    H = _as_multigraph(H)
    G = _as_multigraph(G, signed=True)
    r = _edge_size(H, "H")
    if q is None:
        q = max((max(e) for e in H), default=0)
    verts = sorted({v for e in G for v in e}) if n is None \
        else list(range(1, n + 1))
    for i in range(r):
        g = 0
        for f in combinations(range(1, q + 1), i):
            g = math.gcd(g, _degree(H, f))
        for f in combinations(verts, i):
            d = _degree(G, f)
            if (g == 0 and d != 0) or (g != 0 and d % g):
                return False, (i, f)
    return True, None


def check_HP_divisible(H, spec: PartitionSpec, G):
    """Partite divisibility: every degree vector lies in H's index lattice."""
    from .lattice import integer_solve
    H = _as_multigraph(H)
    G = _as_multigraph(G)
    r = _edge_size(H, "H")
    I = sorted({spec.label_index(e) for e in H})
    pos = {ix: k for k, ix in enumerate(I)}
    verts = sorted(spec.vertex_parts, key=repr)
    for i in range(r):
        gens = {}
        for fl in combinations(spec.labels, i):
            key = spec.label_index(fl)
            vec = [0] * len(I)
            for e, m in H.items():
                if set(fl) <= e:
                    vec[pos[spec.label_index(e)]] += m
            gens.setdefault(key, set()).add(tuple(vec))
        for e in combinations(verts, i):
            vec = [0] * len(I)
            bad = False
            for g, m in G.items():
                if set(e) <= g:
                    ix = spec.vertex_index(g)
                    if ix not in pos:
                        bad = True
                        break
                    vec[pos[ix]] += m
            key = spec.vertex_index(e)
            if bad:
                return False, (e, key)
            cols = sorted(gens.get(key, ()))
            if not cols:
                if any(vec):
                    return False, (e, key)
                continue
            Z = [[col[k] for col in cols] for k in range(len(I))]
            if integer_solve(Z, vec) is None:
                return False, (e, key)
    return True, None


def large_set_Z(q, r, lam, n):
    """Blocks through an i-set in an (n,q,r,lam)-design, for i = 0..r."""
    out = []
    for i in range(r + 1):
        num = lam * math.comb(n - i, r - i)
        den = math.comb(q - i, r - i)
        out.append(Fraction(num, den))
    return out


def check_large_set_divisible(q, r, lam, n, G=None):
    """Z_i integrality plus Z_i dividing every i-set degree of G.

    With G omitted the host is the complete q-graph and the degree checks
    collapse to closed forms, so the sweep stays cheap at large n.
    """
    Z = large_set_Z(q, r, lam, n)
    if G is None:
        for i, z in enumerate(Z):
            if z.denominator != 1 or math.comb(n - i, q - i) % z.numerator:
                return False, i
        return True, None
    G = _as_multigraph(G)
    verts = sorted({v for e in G for v in e})
    for i, z in enumerate(Z):
        if z.denominator != 1:
            return False, i
        for f in combinations(verts, i):
            if _degree(G, f) % z.numerator:
                return False, i
    return True, None


def check_design_divisible(n, q, r, lam):
    """Classical (n,q,r,lam)-design divisibility, in closed form."""
    if not (n >= q >= r >= 0):
        raise ConstructionError(f"need n >= q >= r, got {(n, q, r)}")
    for i in range(r):
        if (lam * math.comb(n - i, r - i)) % math.comb(q - i, r - i):
            return False, i
    return True, None


def inclusion_matrix(q, i, r):
    """0/1 matrix of i-subsets against r-subsets of [q] by containment."""
    rows = list(combinations(range(1, q + 1), i))
    cols = list(combinations(range(1, q + 1), r))
    return [[1 if set(a) <= set(b) else 0 for b in cols] for a in rows]


def check_resolvable_divisible(n, q, r, lam):
    """Preconditions for a resolvable design: q | n, design divisibility,
    and an integral parallel-class count."""
    if n % q:
        return False, f"q={q} does not divide n={n}"
    ok, i = check_design_divisible(n, q, r, lam)
    if not ok:
        return False, f"design divisibility fails at i={i}"
    classes = Fraction(q * lam * math.comb(n, r), math.comb(q, r) * n)
    if classes.denominator != 1:
        return False, f"class count {classes} is not integral"
    return True, None


def check_complete_resolution_divisible(q, n):
    """Congruence for the nested resolution chain: n = q mod lcm(1..q)."""
    mod = math.lcm(*range(1, q + 1))
    if (n - q) % mod:
        return False, f"need n = {q} mod {mod}, got n={n}"
    return True, None


def check_rainbow_divisible(q, r, n, mode="FIXED"):
    """Closed-form divisibility for rainbow complete-design targets."""
    for i in range(r):
        lhs = math.comb(q - i, r - i)
        rhs = math.comb(n - i, r - i)
        if mode == "ALL":
            rhs *= math.comb(q, r)
        if rhs % lhs:
            return False, i
    return True, None


# -- reductions with decoders --------------------------------------------------


class Decoder:
    """Pure, serializable recipe turning a selection into a decoded object."""

    __slots__ = ("kind", "params")

    def __init__(self, kind, params):
        self.kind = kind
        self.params = dict(params)

    def decode(self, selection):
        if self.kind == "resolvable":
            return self._decode_grouped(selection, "classes")
        if self.kind == "large-set":
            return self._decode_grouped(selection, "designs")
        if self.kind == "complete-resolution":
            return self._decode_resolution(selection)
        raise ConstructionError(f"unknown decoder kind {self.kind!r}")

    def _decode_grouped(self, selection, name):
        block_labels = self.params["block_labels"]
        side_labels = self.params["side_labels"]
        groups = {}
        for _, phi, coeff in selection.items():
            if coeff != 1:
                raise ConstructionError("decoder expects a set selection")
            m = dict(phi)
            block = tuple(sorted(m[a] for a in block_labels))
            side = tuple(sorted(m[b] for b in side_labels))
            groups.setdefault(side, []).append(block)
        return {name: [{"index": list(side), "blocks": sorted(blocks)}
                       for side, blocks in sorted(groups.items())]}

    def _decode_resolution(self, selection):
        block_labels = self.params["block_labels"]
        chain_labels = self.params["chain_labels"]
        copies = []
        for _, phi, coeff in selection.items():
            if coeff != 1:
                raise ConstructionError("decoder expects a set selection")
            m = dict(phi)
            block = tuple(sorted(m[a] for a in block_labels))
            chain = tuple(m[b] for b in chain_labels)
            copies.append((block, chain))
        return {"copies": sorted(copies)}

    def to_json(self):
        return {"format_version": FORMAT_VERSION, "kind": self.kind,
                "params": {k: list(v) if isinstance(v, tuple) else v
                           for k, v in self.params.items()}}

    @classmethod
    def from_json(cls, data):
        return cls(data["kind"], data["params"])


def _sample_distinct(universe, k, seed, what):
    pool = sorted(universe)
    if k > len(pool):
        raise ReductionError(f"cannot pick {k} distinct {what} from "
                             f"{len(pool)}")
    return sorted(random.Random(seed).sample(pool, k))


def _least_m(r, count):
    m = max(r, 0)
    while math.comb(m, r) < count:
        m += 1
    return m


def reduce_resolvable(H, G, q=None, n=None, seed=0):
    """Resolvable H-decomposition of G as a partite instance plus decoder."""
    H = _as_multigraph(H)
    G = _as_multigraph(G)
    r = _edge_size(H, "H")
    if q is None:
        q = max(max(e) for e in H)
    if n is None:
        n = max(max(e) for e in G)
    X = tuple(range(1, n + 1))
    degs = {_degree(H, (a,)) for a in range(1, q + 1)}
    if len(degs) != 1:
        raise ReductionError("H is not vertex-regular")
    if len({_degree(G, (x,)) for x in X}) > 1:
        raise ReductionError("G is not vertex-regular")
    if n % q:
        raise ReductionError(f"q={q} does not divide n={n}")
    size = sum(G.values())
    classes = Fraction(q * size, len(H) * n) if H else Fraction(0)
    if classes.denominator != 1 or classes <= 0:
        raise ReductionError(f"class count q|G|/(|H|n) = {classes} "
                             "is not a positive integer")
    classes = classes.numerator
    m = _least_m(r - 1, classes)
    Y = tuple(range(n + 1, n + m + 1))
    J = _sample_distinct(combinations(Y, r - 1), classes, seed,
                         "auxiliary side sets")
    Gp = dict(G)
    for f in J:
        for x in X:
            Gp[frozenset(f) | {x}] = Gp.get(frozenset(f) | {x}, 0) + 1
    A = tuple(range(1, q + 1))
    Bl = tuple(range(q + 1, q + r))
    Hp = dict(H)
    for a in A:
        Hp[frozenset((a,) + Bl)] = 1
    spec = PartitionSpec((A, Bl), {**{x: 0 for x in X},
                                   **{y: 1 for y in Y}})
    inst = build_partite(Hp, spec, Gp)
    inst.provenance.update({"reduction": "resolvable", "seed": seed,
                            "q": q, "r": r, "n": n,
                            "classes": classes,
                            "J": [sorted(f) for f in J]})
    dec = Decoder("resolvable", {"block_labels": A, "side_labels": Bl,
                                 "q": q, "r": r, "n": n})
    return inst, dec


def reduce_large_set(q, r, lam, n, G=None, seed=0):
    """Partition of G into (n,q,r,lam)-designs as an instance plus decoder."""
    if G is None:
        G = complete_multigraph(n, q, 1)
    else:
        G = _as_multigraph(G)
        if _edge_size(G, "G") != q:
            raise ReductionError("G must be q-uniform")
    ok, bad_i = check_large_set_divisible(q, r, lam, n, G)
    if not ok:
        raise ReductionError(f"large-set divisibility fails at i={bad_i}")
    Z0 = large_set_Z(q, r, lam, n)[0]
    size = sum(G.values())
    count = Fraction(size, Z0)
    if count.denominator != 1 or count <= 0:
        raise ReductionError(f"design count |G|/Z_0 = {count} "
                             "is not a positive integer")
    count = count.numerator
    m = _least_m(q - r, count)
    Y = tuple(range(n + 1, n + m + 1))
    J = _sample_distinct(combinations(Y, q - r), count, seed,
                         "design index sets")
    X = tuple(range(1, n + 1))
    Gp = dict(G)
    for f in J:
        for e in combinations(X, r):
            Gp[frozenset(f) | set(e)] = Gp.get(frozenset(f) | set(e), 0) + lam
    A = tuple(range(1, q + 1))
    Bl = tuple(range(q + 1, 2 * q - r + 1))
    Hp = {frozenset(A): 1}
    for e in combinations(A, r):
        Hp[frozenset(e) | set(Bl)] = 1
    spec = PartitionSpec((A, Bl), {**{x: 0 for x in X},
                                   **{y: 1 for y in Y}})
    inst = build_partite(Hp, spec, Gp)
    inst.provenance.update({"reduction": "large-set", "seed": seed,
                            "q": q, "r": r, "lam": lam, "n": n,
                            "designs": count,
                            "J": [sorted(f) for f in J]})
    dec = Decoder("large-set", {"block_labels": A, "side_labels": Bl,
                                "q": q, "r": r, "lam": lam, "n": n})
    return inst, dec


def reduce_complete_resolution(q, n):
    """Nested resolution chain of K^q_n as a partite instance plus decoder."""
    mod = math.lcm(*range(1, q + 1))
    if (n - q) % mod:
        raise ReductionError(f"need n = q mod {mod}, got n={n} q={q}")
    X = tuple(range(1, n + 1))
    Ys = []
    start = n + 1
    for j in range(q):
        size = (n - j) // (q - j)
        Ys.append(tuple(range(start, start + size)))
        start += size
    A = tuple(range(1, q + 1))
    Bl = tuple(range(q + 1, 2 * q + 1))  # Bl[j] plays layer j
    Hp = {}
    for k in range(q + 1):
        suffix = Bl[q - k:]
        for e in combinations(A, q - k):
            Hp[frozenset(e + suffix)] = 1
    Gp = {}
    for k in range(q + 1):
        for e in combinations(X, q - k):
            for ys in product(*Ys[q - k:]):
                Gp[frozenset(e + ys)] = 1
    vparts = {x: 0 for x in X}
    for j, Yj in enumerate(Ys):
        vparts.update({y: j + 1 for y in Yj})
    spec = PartitionSpec((A,) + tuple((b,) for b in Bl), vparts)
    inst = build_partite(Hp, spec, Gp)
    inst.provenance.update({"reduction": "complete-resolution",
                            "q": q, "n": n,
                            "layer_sizes": [len(Yj) for Yj in Ys]})
    dec = Decoder("complete-resolution",
                  {"block_labels": A, "chain_labels": Bl, "q": q, "n": n})
    return inst, dec


# -- direct verifiers (independent of the reductions) ----------------------------


def verify_resolvable(n, q, r, G, decoded):
    """Classes partition the vertex set; blocks' r-sets cover G exactly."""
    G = _as_multigraph(G)
    X = set(range(1, n + 1))
    cover = {}
    for cls in decoded["classes"]:
        seen = set()
        for blk in cls["blocks"]:
            if len(blk) != q or not set(blk) <= X:
                return False, f"block {blk} is not a q-set of the ground set"
            if seen & set(blk):
                return False, f"class {cls['index']} blocks overlap"
            seen |= set(blk)
            for e in combinations(sorted(blk), r):
                cover[frozenset(e)] = cover.get(frozenset(e), 0) + 1
        if seen != X:
            return False, f"class {cls['index']} is not a perfect partition"
    if cover != {e: m for e, m in G.items() if m}:
        return False, "blocks do not cover G exactly"
    return True, None


def verify_large_set(n, q, r, lam, G, decoded):
    """Each group is an (n,q,r,lam)-design; together they partition G."""
    G = _as_multigraph(G)
    X = sorted(range(1, n + 1))
    total = {}
    for grp_ in decoded["designs"]:
        cover = {}
        for blk in grp_["blocks"]:
            if len(blk) != q or not set(blk) <= set(X):
                return False, f"block {blk} is not a q-set of the ground set"
            total[frozenset(blk)] = total.get(frozenset(blk), 0) + 1
            for e in combinations(sorted(blk), r):
                cover[e] = cover.get(e, 0) + 1
        for e in combinations(X, r):
            if cover.get(e, 0) != lam:
                return False, (f"group {grp_['index']} covers {e} "
                               f"{cover.get(e, 0)} times, want {lam}")
    if total != {e: m for e, m in G.items() if m}:
        return False, "groups do not partition G"
    return True, None


def verify_complete_resolution(n, q, decoded):
    """Every chain suffix of length q-j induces a Steiner (n,q,j)-system."""
    X = sorted(range(1, n + 1))
    copies = decoded["copies"]
    for blk, chain in copies:
        if len(blk) != q or len(chain) != q:
            return False, f"copy ({blk}, {chain}) malformed"
    for j in range(q + 1):
        groups = {}
        for blk, chain in copies:
            groups.setdefault(tuple(chain[j:]), []).append(blk)
        for suffix, blocks in groups.items():
            cover = {}
            for blk in blocks:
                for f in combinations(blk, j):
                    cover[f] = cover.get(f, 0) + 1
            for f in combinations(X, j):
                if cover.get(f, 0) != 1:
                    return False, (f"suffix {suffix}: {j}-set {f} covered "
                                   f"{cover.get(f, 0)} times")
    return True, None


# -- rainbow, tryst, oriented -----------------------------------------------------


def build_rainbow(q, r, n, mode="FIXED", b=None):
    """Rainbow complete-design instance with one colour per r-subset slot."""
    if n < q:
        raise ConstructionError(f"need n >= q, got n={n} q={q}")
    RS = [frozenset(e) for e in combinations(range(1, q + 1), r)]
    D = len(RS)
    if b is None:
        b = {e: k for k, e in enumerate(RS)}
    else:
        b = {frozenset(e): c for e, c in b.items()}
        if sorted(b.values()) != list(range(D)):
            raise ConstructionError("colouring must be a bijection onto 0..D-1")
    labels = tuple(range(1, q + 1))
    grp = PermutationGroup.symmetric(labels)
    if mode == "FIXED":
        colourings = [("b", b)]
    elif mode == "ALL":
        colourings = [(f"b{k}", dict(zip(RS, perm)))
                      for k, perm in enumerate(permutations(range(D)))]
    else:
        raise ConstructionError(f"unknown rainbow mode {mode!r}")
    gamma = {}
    for name, col in colourings:
        for B in combinations(labels, r):
            for theta in grp.restrictions_with_domain(B):
                vec = [0] * D
                vec[col[frozenset(img_set(theta))]] = 1
                gamma[(name, theta)] = tuple(vec)
    system = VectorSystem(grp, tuple(name for name, _ in colourings),
                          r, D, gamma)
    cx = LabelledComplex.complete(labels, tuple(range(1, n + 1)))
    target = _lift_target(cx, r, D, lambda m: (1,) * D)
    prov = {"builder": "rainbow", "mode": mode, "q": q, "r": r, "n": n}
    return ProblemInstance(cx, grp, system, target, prov)


TRYST_LABELS = tuple(range(1, 10))
_TRYST_RED = frozenset({1, 4, 7})
_TRYST_TEAMS = {i: frozenset({3 * i - 2, 3 * i - 1, 3 * i}) for i in (1, 2, 3)}


def build_tryst(n):
    """Two-colour tournament-scheduling system on nine labels.

    Row values: (1,0) when the row's image is the position triple {1,4,7};
    (0,1) when the image is a team triple and the least domain label lands
    on the team's captain; zero otherwise.
    """
    if n < 9:
        raise ConstructionError(f"need n >= 9, got n={n}")
    grp = PermutationGroup.symmetric(TRYST_LABELS)
    gamma = {}
    for B in combinations(TRYST_LABELS, 3):
        anchor = min(B)
        for theta in grp.restrictions_with_domain(B):
            im = frozenset(img_set(theta))
            val = None
            if im == _TRYST_RED:
                val = (1, 0)
            else:
                for i, team in _TRYST_TEAMS.items():
                    if im == team and dict(theta)[anchor] == 3 * i - 2:
                        val = (0, 1)
                        break
            if val:
                gamma[("game", theta)] = val
    system = VectorSystem(grp, ("game",), 3, 2, gamma)
    cx = LabelledComplex.complete(TRYST_LABELS, tuple(range(1, n + 1)))
    target = _lift_target(cx, 3, 2, lambda m: (1, 1))
    prov = {"builder": "tryst", "n": n}
    return ProblemInstance(cx, grp, system, target, prov)


def tryst_uniform_fractional(n):
    """Feasibility of the symmetrised fractional relaxation at size n.

    Averaging any fractional solution over vertex relabellings leaves one
    weight per embedding class, so the full relaxation collapses to the
    red and blue slot classes against the single game class.  Coverage
    counts: a fixed position triple is hit by 6 * (n-3)P6 embeddings, and
    a fixed anchored team triple by 3 teams * 2 bijections * (n-3)P6.
    """
    if n < 9:
        raise ConstructionError(f"need n >= 9, got {n}")
    from .lattice import rational_feasible
    cov = 6 * math.perm(n - 3, 6)
    x = rational_feasible([[cov], [cov]], [1, 1])
    if x is None:
        return False, None
    return True, x[0]


def coarse_type_classes(system, B):
    """Row classes at B up to right translation by base bijections."""
    B = tuple(sorted(B))
    taus = system.group.restricted_maps(B, B)
    canon = set()
    for t in system.types(B):
        forms = []
        for tau in taus:
            moved = tuple(sorted(
                (compose(tau, s), v) for s, v in t.pattern.items()))
            forms.append(moved)
        canon.add(min(forms))
    return len(canon)


def _orientation_class(t):
    t = tuple(t)
    srt = tuple(sorted(t))
    perm = [srt.index(x) for x in t]
    swaps = sum(1 for i in range(len(perm))
                for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return srt, swaps % 2


def _orientation_table(edges, what):
    """{(sorted tuple, parity): multiplicity}; per-set class clash rejected."""
    out = {}
    if isinstance(edges, dict):
        items = edges.items()
    else:
        items = ((e, 1) for e in edges)
    for t, m in items:
        cls = _orientation_class(t)
        out[cls] = out.get(cls, 0) + int(m)
    per_set = {}
    for (srt, par), m in out.items():
        per_set.setdefault(srt, set()).add(par)
    if what == "H":
        for srt, pars in per_set.items():
            if len(pars) > 1:
                raise ConstructionError(
                    f"orientation error: {srt} appears in both classes")
    return out


def build_oriented(H, G, q=None, n=None):
    """Oriented H-decomposition: orderings matter up to even permutations."""
    Ht = _orientation_table(H, "H")
    Gt = _orientation_table(G, "G")
    r = _edge_size({srt: 1 for srt, _ in Ht}, "H")
    if q is None:
        q = max(max(srt) for srt, _ in Ht)
    if n is None:
        n = max(max(srt) for srt, _ in Gt)
    labels = tuple(range(1, q + 1))
    grp = PermutationGroup.symmetric(labels)
    gamma = {}
    for B in combinations(labels, r):
        Bs = tuple(sorted(B))
        for theta in grp.restrictions_with_domain(B):
            md = dict(theta)
            cls = _orientation_class(tuple(md[a] for a in Bs))
            if Ht.get(cls):
                gamma[("H", theta)] = (1,)
    system = VectorSystem(grp, ("H",), r, 1, gamma)
    cx = LabelledComplex.complete(labels, tuple(range(1, n + 1)))

    def value(m):
        md = dict(m)
        Bs = tuple(sorted(dom(m)))
        return (Gt.get(_orientation_class(tuple(md[a] for a in Bs)), 0),)

    target = _lift_target(cx, r, 1, value)
    prov = {"builder": "oriented", "q": q, "r": r, "n": n}
    return ProblemInstance(cx, grp, system, target, prov)


def reverse_orientations(edges):
    """Swap the orientation class of every edge (transpose the last pair)."""
    if isinstance(edges, dict):
        return {t[:-2] + (t[-1], t[-2]): m for t, m in
                ((tuple(t), m) for t, m in edges.items())}
    return [tuple(t)[:-2] + (tuple(t)[-1], tuple(t)[-2]) for t in edges]


# -- typicality ----------------------------------------------------------------


def measure_typicality(G, s, n=None):
    """Worst relative intersection error over families of (r-1)-sets."""
    G = _as_multigraph(G)
    if not G:
        raise ConstructionError("degenerate: G has no edges")
    r = _edge_size(G, "G")
    verts = sorted({v for e in G for v in e}) if n is None \
        else list(range(1, n + 1))
    nn = len(verts)
    d = Fraction(sum(G.values()), math.comb(nn, r))
    if d == 0:
        raise ConstructionError("degenerate: density zero")
    nbr = {}
    for f in combinations(verts, r - 1):
        nbr[f] = {v for v in verts
                  if v not in f and frozenset(f) | {v} in G}
    worst = Fraction(0)
    fs = sorted(nbr)
    for k in range(1, s + 1):
        for fam in combinations(fs, k):
            inter = set.intersection(*(nbr[f] for f in fam))
            ratio = Fraction(len(inter)) / (d ** k * nn)
            err = abs(ratio - 1) / k
            if err > worst:
                worst = err
    return worst


def measure_typicality_partite(G, s, spec: PartitionSpec):
    """Partite variant: intersections are measured inside one part at a time."""
    G = _as_multigraph(G)
    if not G:
        raise ConstructionError("degenerate: G has no edges")
    r = _edge_size(G, "G")
    I = {spec.vertex_index(e) for e in G}
    by_part = {}
    for v, p in spec.vertex_parts.items():
        by_part.setdefault(p, []).append(v)
    verts = sorted(spec.vertex_parts, key=repr)
    worst = Fraction(0)
    for x, Vx in sorted(by_part.items()):
        Vx = sorted(Vx, key=repr)
        unit = [0] * len(spec.parts)
        unit[x] = 1
        fs = []
        for f in combinations(verts, r - 1):
            ix = spec.vertex_index(f)
            if any(v in Vx for v in f):
                continue
            if tuple(a + b for a, b in zip(ix, unit)) not in I:
                continue
            fs.append(f)
        nbr = {f: {v for v in Vx if frozenset(f) | {v} in G} for f in fs}
        dens = {f: Fraction(len(nbr[f]), len(Vx)) for f in fs}
        for k in range(1, s + 1):
            for fam in combinations(fs, k):
                scale = len(Vx)
                zero = False
                for f in fam:
                    if dens[f] == 0:
                        zero = True
                        break
                    scale = scale * dens[f]
                inter = set.intersection(*(nbr[f] for f in fam))
                if zero:
                    if inter:
                        return Fraction(1)  # impossible for honest blowups
                    continue
                err = abs(Fraction(len(inter)) / scale - 1) / k
                if err > worst:
                    worst = err
    return worst


# -- twisted octahedron builtin ---------------------------------------------------


_OCTA_VERTICES = ("w0", "w1", "x0", "x1", "y0", "y1", "z0", "z1")
_OCTA_PAIRING = {(1, 2): 3, (1, 3): 2, (2, 3): 1,
                 (1, 4): 4, (2, 4): 5, (3, 4): 6}
_OCTA_CLASSES = ((2, 3), (3, 2), (5, 6), (6, 5))


def _octa_colour(u, v):
    """Edge colour of the twisted octahedron host; 0 marks a non-edge."""
    ys = ("y0", "y1")
    zs = ("z0", "z1")
    if (u in ys and v in zs) or (u in zs and v in ys):
        return 1
    for x, cy, cz, w, cwy, cwz in (("x0", 2, 3, "w0", 6, 5),
                                   ("x1", 3, 2, "w1", 5, 6)):
        if {u, v} == {x, w}:
            return 4
        if x in (u, v):
            o = v if u == x else u
            if o in ys:
                return cy
            if o in zs:
                return cz
        if w in (u, v):
            o = v if u == w else u
            if o in ys:
                return cwy
            if o in zs:
                return cwz
    return 0


def twisted_octahedron():
    """The four-label obstruction instance: 2-null but outside the lattice.

    The host complex keeps exactly the injections whose pairwise edge
    colours match the opposite-pair table under one of the two admitted
    label patterns, which twists half of the octahedron into the opposite
    label plane.  The target is a signed sum of sixteen triangles through
    the twist; its boundary sums vanish at every level yet the per-plane
    equation system has no solution at the marked pair orbit.
    """
    labels = (1, 2, 3, 4)
    sigma = {1: 4, 2: 3, 3: 2, 4: 1}
    ident = {a: a for a in labels}

    def matches(m, tau):
        md = dict(m)
        for i, j in combinations(sorted(md), 2):
            a, b = sorted((tau[i], tau[j]))
            if _octa_colour(md[i], md[j]) != _OCTA_PAIRING[(a, b)]:
                return False
        return True

    flat = []
    for k in range(1, 5):
        for B in combinations(labels, k):
            for imgs in permutations(_OCTA_VERTICES, k):
                m = inj(tuple(zip(B, imgs)))
                if matches(m, ident) or matches(m, sigma):
                    flat.append(m)
    host = LabelledComplex.explicit(labels, _OCTA_VERTICES, flat,
                                    close_down=False)
    grp = PermutationGroup(labels, [(4, 3, 2, 1)])
    gamma = {}
    for B in combinations(labels, 3):
        for theta in grp.restrictions_with_domain(B):
            gamma[("copy", theta)] = (1,)
    system = VectorSystem(grp, ("copy",), 3, 1, gamma)
    entries = []
    for j, k in product((0, 1), repeat=2):
        s = (-1) ** (j + k)
        yj, zk = f"y{j}", f"z{k}"
        entries.append((inj(((1, "x0"), (2, zk), (3, yj))), (s,)))
        entries.append((inj(((2, yj), (3, zk), (4, "x0"))), (s,)))
        entries.append((inj(((1, "x1"), (2, yj), (3, zk))), (-s,)))
        entries.append((inj(((2, zk), (3, yj), (4, "x1"))), (-s,)))
    target = EdgeVector(host, 3, 1, entries)
    prov = {"builder": "twisted-octahedron"}
    return ProblemInstance(host, grp, system, target, prov)


def twisted_octahedron_invariant(instance):
    """Signed triangle count through the pair (y0, z0), per apex class."""
    J = instance.target
    out = []
    for cls in _OCTA_CLASSES:
        tot = 0
        for v in ("w0", "w1", "x0", "x1"):
            if (_octa_colour(v, "y0"), _octa_colour(v, "z0")) != cls:
                continue
            for m in instance.complex.maps_at((1, 2, 3)):
                if img_set(m) == {v, "y0", "z0"}:
                    tot += J.get(m)[0]
        out.append(tot)
    return tuple(out)


def twisted_octahedron_report(instance):
    """Invariant value plus membership in the symmetric-null generator span."""
    from .lattice import integer_solve
    inv = twisted_octahedron_invariant(instance)
    gens = ((1, 0, 1, 0), (0, 1, 0, 1))
    Z = [[g[k] for g in gens] for k in range(4)]
    return {"invariant": list(inv),
            "generators": [list(g) for g in gens],
            "in_generator_span": integer_solve(Z, list(inv)) is not None}


# -- sudoku -------------------------------------------------------------------


SUDOKU_LABELS = (1, 2, 3, 4, 5, 6)
SUDOKU_EDGES = (frozenset({1, 2, 3, 4}), frozenset({1, 2, 5, 6}),
                frozenset({3, 4, 5, 6}), frozenset({1, 3, 5, 6}))


def build_sudoku(n):
    """Box-grid decomposition instance: 4-edges over six coordinate classes."""
    H = {e: 1 for e in SUDOKU_EDGES}
    vparts = {(w, i): w - 1 for w in SUDOKU_LABELS for i in range(1, n + 1)}
    spec = PartitionSpec(tuple((w,) for w in SUDOKU_LABELS), vparts)
    G = {}
    by_label = {w: [v for v in vparts if v[0] == w] for w in SUDOKU_LABELS}
    for e in SUDOKU_EDGES:
        for vs in product(*(by_label[w] for w in sorted(e))):
            G[frozenset(vs)] = 1
    inst = build_partite(H, spec, G)
    inst.provenance.update({"builder": "sudoku", "n": n})
    return inst


# -- builtin registry -----------------------------------------------------------


def builtin_instance(name, seed=0):
    """Named instances used by the command line and the test suite."""
    if name == "fano":
        return {"instance": build_nonpartite(complete_design(3, 2),
                                             complete_multigraph(7, 2)),
                "decoder": None}
    if name == "twisted-octahedron":
        return {"instance": twisted_octahedron(), "decoder": None}
    if name == "tryst-9":
        return {"instance": build_tryst(9), "decoder": None}
    if name == "sudoku-2":
        return {"instance": build_sudoku(2), "decoder": None}
    if name == "latin-3":
        verts = [(w, i) for w in (1, 2, 3) for i in (1, 2, 3)]
        spec = PartitionSpec(((1,), (2,), (3,)), {v: v[0] - 1 for v in verts})
        G = {frozenset((a, b)): 1 for a, b in combinations(verts, 2)
             if a[0] != b[0]}
        return {"instance": build_partite(complete_design(3, 2), spec, G),
                "decoder": None}
    if name == "kts-9":
        inst, dec = reduce_resolvable(complete_design(3, 2),
                                      complete_multigraph(9, 2), seed=seed)
        return {"instance": inst, "decoder": dec}
    if name == "rainbow-fixed-q3n7":
        return {"instance": build_rainbow(3, 2, 7, mode="FIXED"),
                "decoder": None}
    raise ConstructionError(f"unknown builtin {name!r}")


BUILTINS = ("fano", "twisted-octahedron", "tryst-9", "sudoku-2", "latin-3",
            "kts-9", "rainbow-fixed-q3n7")
