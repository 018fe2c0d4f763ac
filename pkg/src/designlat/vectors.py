"""Vector systems over label symmetries: molecules, types, atoms, use counts.

A system assigns an integer vector to selected level-r label injections
(one table per named family member, every family sharing one symmetry
group).  Pushing the table through an embedding gives the embedding's
molecule; sums of molecules are boundaries; restricting a molecule to one
orbit gives an atom.  Types classify atoms up to the right action and drive
every span test downstream.
"""

from __future__ import annotations

import hashlib
from fractions import Fraction

from .errors import ConstructionError
from .maps import (Inj, compose, dom, img_set, inj, inverse, restrict_inj,
                   sort_key, sub_injections)

FORMAT_VERSION = 1

UNDEFINED = "UNDEFINED"
NOT_IN_SPAN = "NOT_IN_SPAN"


def _zero(d):
    return (0,) * d


def _vec_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _vec_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _vec_scale(k, a):
    return tuple(k * x for x in a)


class EdgeVector:
    """Sparse vector over a complex's injections at one level."""

    __slots__ = ("complex", "r", "dim", "data")

    def __init__(self, complex_, r, dim, entries=(), validate=True):
        self.complex = complex_
        self.r = r
        self.dim = dim
        data = {}
        for psi, vec in (entries.items() if isinstance(entries, dict)
                         else entries):
            psi = tuple(psi)
            vec = tuple(vec)
            if len(vec) != dim:
                raise ConstructionError(f"value arity {len(vec)} != {dim}")
            if len(psi) != r:
                raise ConstructionError(f"level {len(psi)} entry in level-{r} "
                                        "vector")
            if any(vec):
                cur = data.get(psi)
                data[psi] = _vec_add(cur, vec) if cur else vec
                if not any(data[psi]):
                    del data[psi]
        if validate:
            for psi in data:
                if not complex_.contains(psi):
                    raise ConstructionError(f"{psi} not in the complex")
        self.data = data

    def get(self, psi):
        return self.data.get(tuple(psi), _zero(self.dim))

    def support(self):
        return self.data.keys()

    def items(self):
        return self.data.items()

    def copy(self):
        out = EdgeVector(self.complex, self.r, self.dim, validate=False)
        out.data = dict(self.data)
        return out

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def _combine(self, other, sign):
        if (other.r, other.dim) != (self.r, self.dim):
            raise ConstructionError("shape mismatch")
        out = dict(self.data)
        for k, v in other.data.items():
            nv = _vec_add(out.get(k, _zero(self.dim)), _vec_scale(sign, v))
            if any(nv):
                out[k] = nv
            else:
                out.pop(k, None)
        res = EdgeVector(self.complex, self.r, self.dim, validate=False)
        res.data = out
        return res

    def scale(self, k):
        res = EdgeVector(self.complex, self.r, self.dim, validate=False)
        res.data = {} if k == 0 else {p: _vec_scale(k, v)
                                      for p, v in self.data.items()}
        return res

    def __eq__(self, other):
        return (isinstance(other, EdgeVector) and self.r == other.r
                and self.dim == other.dim and self.data == other.data)

    def __hash__(self):
        raise TypeError("EdgeVector is mutable-ish; not hashable")

    def is_nonneg(self):
        return all(x >= 0 for v in self.data.values() for x in v)

    def norm1(self):
        return sum(abs(x) for v in self.data.values() for x in v)

    def to_json(self):
        return {"format_version": FORMAT_VERSION, "level": self.r,
                "dim": self.dim,
                "entries": [{"labels": list(dom(p)),
                             "map": [[a, (list(v) if isinstance(v, tuple)
                                          else v)] for a, v in p],
                             "value": list(vec)}
                            for p, vec in sorted(self.data.items(),
                                                 key=lambda kv: sort_key(kv[0]))]}

    @classmethod
    def from_json(cls, complex_, data):
        entries = []
        for e in data["entries"]:
            m = inj(tuple((a, tuple(v) if isinstance(v, list) else v)
                          for a, v in e["map"]))
            entries.append((m, tuple(e["value"])))
        return cls(complex_, data["level"], data["dim"], entries)

    def __repr__(self):
        return (f"EdgeVector(level={self.r}, dim={self.dim}, "
                f"{len(self.data)} entries)")


class Selection:
    """Integer combination of family embeddings."""

    __slots__ = ("data",)

    def __init__(self, entries=()):
        self.data = {}
        for member, phi, coeff in entries:
            if coeff:
                key = (member, tuple(phi))
                self.data[key] = self.data.get(key, 0) + coeff
                if not self.data[key]:
                    del self.data[key]

    def items(self):
        return [(m, p, c) for (m, p), c in self.data.items()]

    def __len__(self):
        return len(self.data)

    def to_json(self):
        return {"format_version": FORMAT_VERSION,
                "entries": [{"family": m,
                             "map": [[a, (list(v) if isinstance(v, tuple)
                                          else v)] for a, v in p],
                             "coefficient": c}
                            for (m, p), c in sorted(
                                self.data.items(),
                                key=lambda kv: (kv[0][0], sort_key(kv[0][1])))]}

    @classmethod
    def from_json(cls, data):
        out = []
        for e in data["entries"]:
            phi = inj(tuple((a, tuple(v) if isinstance(v, list) else v)
                            for a, v in e["map"]))
            out.append((e["family"], phi, e["coefficient"]))
        return cls(out)


class AtomType:
    """Equivalence class of table rows with one fixed pattern."""

    __slots__ = ("B", "type_id", "pattern", "members", "is_zero")

    def __init__(self, B, pattern, members):
        self.B = B
        self.pattern = pattern  # {sigma: vec}, zero-free
        self.members = tuple(members)
        self.is_zero = not pattern
        blob = repr((B, sorted(pattern.items())))
        self.type_id = hashlib.sha256(blob.encode()).hexdigest()[:16]

    def __repr__(self):
        kind = "zero" if self.is_zero else f"{len(self.pattern)} entries"
        return f"AtomType({self.type_id}, B={self.B}, {kind})"


class VectorSystem:
    __slots__ = ("group", "members", "r", "dim", "gamma", "_supp_by_member",
                 "_types_cache", "_type_of_cache", "_embed_cache",
                 "_sharp_cache", "_shadow_cache", "_image_cache",
                 "_slot_cache")

    def __init__(self, group, members, r, dim, gamma):
        """gamma: {(member, theta): vec} with theta a level-r restriction."""
        self.group = group
        self.members = tuple(members)
        self.r = r
        self.dim = dim
        self.gamma = {}
        self._supp_by_member = {m: [] for m in self.members}
        for (member, theta), vec in gamma.items():
            theta = tuple(theta)
            vec = tuple(vec)
            if member not in self._supp_by_member:
                raise ConstructionError(f"unknown family {member!r}")
            if len(theta) != r:
                raise ConstructionError("table rows must sit at the top level")
            if theta not in group.restrictions_with_domain(dom(theta)):
                raise ConstructionError(
                    f"{theta} is not a restriction of the symmetry group")
            if len(vec) != dim:
                raise ConstructionError("value arity mismatch")
            if any(vec):
                self.gamma[(member, theta)] = vec
                self._supp_by_member[member].append((theta, vec))
        for m in self._supp_by_member:
            self._supp_by_member[m].sort(key=lambda tv: sort_key(tv[0]))
        self._types_cache = {}
        self._type_of_cache = {}
        self._embed_cache = {}
        self._sharp_cache = {}
        self._shadow_cache = {}
        self._image_cache = {}
        self._slot_cache = ({}, {})

    # -- lookups ---------------------------------------------------------------

    def value(self, member, theta):
        return self.gamma.get((member, tuple(theta)), _zero(self.dim))

    def support(self, member=None):
        if member is None:
            return [(m, t, v) for m in self.members
                    for t, v in self._supp_by_member[m]]
        return list(self._supp_by_member[member])

    def supp_by_image(self, member):
        """Support rows of one member grouped by the image of the row map."""
        out = self._image_cache.get(member)
        if out is None:
            out = {}
            for theta, _ in self._supp_by_member[member]:
                out.setdefault(tuple(sorted(img_set(theta))),
                               []).append(theta)
            self._image_cache[member] = out
        return out

    def to_json(self):
        return {"format_version": FORMAT_VERSION,
                "members": list(self.members), "level": self.r,
                "dim": self.dim,
                "table": [{"family": m, "map": [[a, b] for a, b in t],
                           "value": list(v)}
                          for m, t, v in self.support()]}

    @classmethod
    def from_json(cls, group, data):
        gamma = {}
        for row in data["table"]:
            theta = inj(tuple((a, b) for a, b in row["map"]))
            gamma[(row["family"], theta)] = tuple(row["value"])
        return cls(group, data["members"], data["level"], data["dim"], gamma)

    # -- molecules and boundaries ------------------------------------------------

    def molecule(self, complex_, member, phi) -> EdgeVector:
        """Push the member's table through an embedding (possibly partial)."""
        phi = tuple(phi)
        present = set(dom(phi))
        entries = []
        for theta, vec in self._supp_by_member[member]:
            if img_set(theta) <= present:
                entries.append((compose(phi, theta), vec))
        return EdgeVector(complex_, self.r, self.dim, entries, validate=False)

    def boundary(self, complex_, selection: Selection) -> EdgeVector:
        out = EdgeVector(complex_, self.r, self.dim, validate=False)
        for member, phi, coeff in selection.items():
            out = out + self.molecule(complex_, member, phi).scale(coeff)
        return out

    # -- types -------------------------------------------------------------------

    def types(self, B):
        """All row classes at label set B, zero class included."""
        B = tuple(sorted(B))
        cached = self._types_cache.get(B)
        if cached is not None:
            return cached
        sigmas = sorted(self.group.restrictions_onto(B), key=sort_key)
        buckets = {}
        for member in self.members:
            for theta in sorted(self.group.restrictions_with_domain(B),
                                key=sort_key):
                pat = {}
                for s in sigmas:
                    v = self.value(member, compose(theta, s))
                    if any(v):
                        pat[s] = v
                key = tuple(sorted(pat.items()))
                buckets.setdefault(key, []).append((member, theta))
        out = [AtomType(B, dict(key), members)
               for key, members in sorted(buckets.items())]
        self._types_cache[B] = out
        for t in out:
            for mt in t.members:
                self._type_of_cache[mt] = t
        return out

    def type_of(self, member, theta) -> AtomType:
        theta = tuple(theta)
        t = self._type_of_cache.get((member, theta))
        if t is None:
            self.types(dom(theta))
            t = self._type_of_cache[(member, theta)]
        return t

    def check_elementary(self):
        """Nonzero patterns at every label set must be Q-independent."""
        from itertools import combinations
        for B in combinations(self.group.labels, self.r):
            pats = [t.pattern for t in self.types(B) if not t.is_zero]
            if not _independent(pats, self.dim):
                return False, B
        return True, None

    # -- atoms ---------------------------------------------------------------------

    def atom_vector(self, complex_, psi, type_: AtomType) -> EdgeVector:
        """The atom anchored at psi with the given type, as a sparse vector."""
        entries = [(compose(psi, s), v) for s, v in type_.pattern.items()]
        return EdgeVector(complex_, self.r, self.dim, entries, validate=False)

    def is_A_embedding(self, complex_, phi) -> bool:
        """Does phi carry every group restriction into the complex?"""
        phi = tuple(phi)
        if not complex_.contains(phi):
            return False
        if complex_.kind == "complete":
            return True
        if self.group.order() == 1:
            return True  # restrictions of phi itself; downward closure
        from itertools import combinations
        for k in range(2, len(phi) + 1):
            for Bsub in combinations(dom(phi), k):
                for s in self.group.restrictions_with_domain(Bsub):
                    if not complex_.contains(compose(phi, s)):
                        return False
        return True

    def iter_embeddings(self, complex_):
        """All (member, phi) with phi an embedding of the family's complex."""
        labels = self.group.labels
        for phi in complex_.maps_at(labels):
            if self.is_A_embedding(complex_, phi):
                for m in self.members:
                    yield m, phi

    def extends_to_embedding(self, complex_, partial) -> bool:
        """Can the partial map grow to a full family embedding?"""
        partial = tuple(partial)
        if complex_.kind == "complete":
            q = len(self.group.labels)
            return (len(complex_.vertices) >= q
                    and all(v in complex_._vset for _, v in partial))
        key = (id(complex_), partial)
        hit = self._embed_cache.get(key)
        if hit is not None:
            return hit
        labels = self.group.labels
        free = [a for a in labels if a not in set(dom(partial))]
        assign = dict(partial)
        used = set(assign.values())

        def rec(i):
            if i == len(free):
                return self.is_A_embedding(complex_, inj(assign.items()))
            a = free[i]
            for v in complex_.vertices:
                if v in used:
                    continue
                assign[a] = v
                used.add(v)
                if complex_.contains(inj(assign.items())) and rec(i + 1):
                    del assign[a]
                    used.remove(v)
                    return True
                del assign[a]
                used.remove(v)
            return False

        out = rec(0)
        self._embed_cache[key] = out
        return out

    def atom_realizable(self, complex_, psi, type_: AtomType) -> bool:
        """Is the atom at psi the orbit slice of some embedding's molecule?"""
        if type_.is_zero:
            return True
        for member, theta in type_.members:
            partial = compose(psi, inverse(theta))
            if self.extends_to_embedding(complex_, partial):
                return True
        return False

    def orbit_atoms(self, complex_, orbit):
        """(type, realizable) for the nonzero types at the orbit's level set."""
        B = dom(orbit.rep)
        out = []
        for t in self.types(B):
            if t.is_zero:
                continue
            out.append((t, self.atom_realizable(complex_, orbit.rep, t)))
        return out

    # -- atom decomposition, use, boundedness -----------------------------------

    def _orbit_solve(self, complex_, orbit, J: EdgeVector, minimize=False,
                     cap=3):
        """Coefficients writing J's orbit slice as realizable atoms.

        Returns (coeffs dict type_id -> int, capped flag) or None.
        """
        from .lattice import integer_solve, kernel_basis
        rep = orbit.rep
        B = dom(rep)
        sigmas = sorted(self.group.restrictions_onto(B), key=sort_key)
        atoms = [t for t, ok in self.orbit_atoms(complex_, orbit) if ok]
        # dedupe identical patterns (possible for non-elementary tables)
        seen = {}
        for t in atoms:
            seen.setdefault(tuple(sorted(t.pattern.items())), t)
        atoms = sorted(seen.values(), key=lambda t: t.type_id)
        rows = []
        rhs = []
        for s in sigmas:
            jv = J.get(compose(rep, s))
            for d in range(self.dim):
                rows.append([t.pattern.get(s, _zero(self.dim))[d]
                             for t in atoms])
                rhs.append(jv[d])
        x = integer_solve(rows, rhs)
        if x is None:
            return None
        capped = False
        if minimize and atoms:
            ker = kernel_basis(rows)
            if ker:
                x, capped = _min_norm_over_lattice(x, ker, cap)
        return {t.type_id: c for t, c in zip(atoms, x) if c}, capped

    def atom_decomposition(self, complex_, J: EdgeVector):
        """Per-orbit atom coefficients of J, or the first offending orbit."""
        from .symmetry import Orbit
        elementary, _ = self.check_elementary()
        seen = set()
        coeffs = {}
        capped = False
        for psi in sorted(J.support(), key=sort_key):
            if psi in seen:
                continue
            orbit = Orbit(self.group, psi)
            seen |= orbit.members()
            got = self._orbit_solve(complex_, orbit, J,
                                    minimize=not elementary)
            if got is None:
                return AtomDecomposition(False, orbit.rep, {}, False)
            c, was_capped = got
            capped = capped or was_capped
            if c:
                coeffs[orbit.rep] = c
        return AtomDecomposition(True, None, coeffs, capped)

    def use(self, complex_, J: EdgeVector, psi):
        """Minimum atom mass at psi's orbit, or summed over extensions."""
        from .symmetry import Orbit
        psi = tuple(psi)
        if not complex_.contains(psi):
            raise ConstructionError(f"{psi} not in the complex")
        k = len(psi)
        if k == self.r:
            orbit = Orbit(self.group, psi)
            if not (orbit.members() & set(J.support())):
                return 0
            elementary, _ = self.check_elementary()
            got = self._orbit_solve(complex_, orbit, J,
                                    minimize=not elementary)
            if got is None:
                return UNDEFINED
            c, _ = got
            return sum(abs(v) for v in c.values())
        if k != self.r - 1:
            raise ConstructionError("use is defined at the top level and one "
                                    "below it")
        total = 0
        seen = set()
        for supp in sorted(J.support(), key=sort_key):
            if supp in seen:
                continue
            orbit = Orbit(self.group, supp)
            seen |= orbit.members()
            u = self.use(complex_, J, orbit.rep)
            if u == UNDEFINED:
                return UNDEFINED
            if not u:
                continue
            hits = sum(1 for m in orbit.members() if extends_inj(m, psi))
            total += u * hits
        return total

    def boundedness(self, complex_, J: EdgeVector, theta_bound):
        """Check use counts one level down stay under theta * |V|."""
        n = len(complex_.vertices)
        worst = 0
        witness = None
        cand = set()
        for psi in J.support():
            for sub in sub_injections(psi, self.r - 1):
                cand.add(sub)
        for psi in sorted(cand, key=sort_key):
            u = self.use(complex_, J, psi)
            if u == UNDEFINED:
                return False, UNDEFINED, psi
            if u > worst:
                worst, witness = u, psi
        ratio = Fraction(worst, n)
        return Fraction(theta_bound) > ratio, ratio, witness

    def edge_atoms_restriction(self, complex_, G: EdgeVector):
        """Per family: top-level maps whose molecule fits under G."""
        from .symmetry import Orbit
        dec = self.atom_decomposition(complex_, G)
        out = {m: set() for m in self.members}
        if not dec.in_span or any(c < 0 for cs in dec.coefficients.values()
                                  for c in cs.values()):
            return out
        budget = {rep: dict(cs) for rep, cs in dec.coefficients.items()}
        rep_of = {}
        for B in complex_.level_sets(self.r):
            for psi in complex_.maps_at(B):
                orbit_rep = rep_of.get(psi)
                if orbit_rep is None:
                    orb = Orbit(self.group, psi)
                    for m2 in orb.members():
                        rep_of[m2] = orb.rep
                    orbit_rep = orb.rep
                # translate psi into the rep frame so the type id matches
                # the budget keys (types are hashed with their label set)
                frame = compose(inverse(psi), orbit_rep)
                for member in self.members:
                    t = self.type_of(member, frame)
                    if t.is_zero:
                        out[member].add(psi)
                        continue
                    have = budget.get(orbit_rep, {}).get(t.type_id, 0)
                    if have >= 1:
                        out[member].add(psi)
        return {m: frozenset(v) for m, v in out.items()}


class AtomDecomposition:
    __slots__ = ("in_span", "offending_orbit", "coefficients", "capped")

    def __init__(self, in_span, offending_orbit, coefficients, capped):
        self.in_span = in_span
        self.offending_orbit = offending_orbit
        self.coefficients = coefficients
        self.capped = capped

    def __repr__(self):
        if not self.in_span:
            return f"AtomDecomposition(NOT_IN_SPAN at {self.offending_orbit})"
        return f"AtomDecomposition({len(self.coefficients)} orbits)"


def extends_inj(m: Inj, sub: Inj) -> bool:
    md = dict(m)
    return all(md.get(a) == v for a, v in sub)


def _theta_of(system, psi):
    """Identity row at psi's own label set."""
    return tuple((a, a) for a in dom(psi))


def _independent(patterns, dim) -> bool:
    coords = sorted({(s, d) for p in patterns for s in p for d in range(dim)})
    if not patterns:
        return True
    index = {c: i for i, c in enumerate(coords)}
    rows = []
    for p in patterns:
        row = [Fraction(0)] * len(coords)
        for s, v in p.items():
            for d in range(dim):
                if v[d]:
                    row[index[(s, d)]] = Fraction(v[d])
        rows.append(row)
    rank = 0
    ncols = len(coords)
    col = 0
    r = 0
    while r < len(rows) and col < ncols:
        piv = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if piv is None:
            col += 1
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                f = rows[i][col] / rows[r][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        col += 1
        rank += 1
    return rank == len(patterns)


def _min_norm_over_lattice(x0, kernel, cap):
    """Smallest 1-norm point of x0 + Z-span(kernel); bounded search."""
    from itertools import product
    best = list(x0)
    best_norm = sum(abs(v) for v in x0)
    capped = False
    k = len(kernel)
    if k > 6:
        return best, True  # refuse unbounded searches; flag the cap
    span = cap
    for zs in product(range(-span, span + 1), repeat=k):
        if all(z == 0 for z in zs):
            continue
        cand = list(x0)
        for z, basis in zip(zs, kernel):
            if z:
                cand = [c + z * b for c, b in zip(cand, basis)]
        norm = sum(abs(v) for v in cand)
        if norm < best_norm:
            best, best_norm = cand, norm
            if any(abs(z) == span for z in zs):
                capped = True
    return best, capped
