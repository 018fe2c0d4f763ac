"""Label symmetries: permutation groups, restriction sets, map orbits.

A group acts on a finite ordered label set.  Permutations are stored in
one-line notation: a tuple t with t[i] = image of labels[i].  Everything a
computation needs (orders, membership, restriction sets, pointwise
stabilizers) comes from generator closures and a stabilizer chain; full
element lists are materialized only on demand for small groups.
"""

from __future__ import annotations

from . import maps
from .maps import Inj, compose, dom, img_set, inj, inverse, sort_key

ELEMENT_CAP = 100_000


class PermutationGroup:
    __slots__ = ("labels", "generators", "_pos", "_chains", "_order",
                 "_elements", "_domain_maps", "_onto_maps", "_set_orbits")

    def __init__(self, labels, generators):
        self.labels = tuple(sorted(labels))
        self._pos = {a: i for i, a in enumerate(self.labels)}
        gens = []
        seen = set()
        ident = self.labels
        for g in generators:
            t = self._coerce(g)
            if t != ident and t not in seen:
                seen.add(t)
                gens.append(t)
        self.generators = tuple(gens)
        self._chains = {}
        self._order = None
        self._elements = None
        self._domain_maps = {}
        self._onto_maps = {}
        self._set_orbits = {}

    # -- construction helpers ------------------------------------------------

    @classmethod
    def symmetric(cls, labels):
        labels = tuple(sorted(labels))
        if len(labels) <= 1:
            return cls(labels, [])
        swap = list(labels)
        swap[0], swap[1] = swap[1], swap[0]
        cycle = list(labels[1:]) + [labels[0]]
        return cls(labels, [tuple(swap), tuple(cycle)])

    @classmethod
    def trivial(cls, labels):
        return cls(labels, [])

    @classmethod
    def from_cycles(cls, labels, cycles_list):
        """Each element of cycles_list is a list of cycles, one generator."""
        labels = tuple(sorted(labels))
        gens = []
        for cycles in cycles_list:
            m = {a: a for a in labels}
            for cyc in cycles:
                for i, a in enumerate(cyc):
                    m[a] = cyc[(i + 1) % len(cyc)]
            gens.append(tuple(m[a] for a in labels))
        return cls(labels, gens)

    def _coerce(self, g):
        if isinstance(g, dict):
            return tuple(g[a] for a in self.labels)
        t = tuple(g)
        if len(t) == len(self.labels) and t and isinstance(t[0], tuple):
            d = dict(t)  # an Inj over the full label set
            return tuple(d[a] for a in self.labels)
        if sorted(t) != list(self.labels):
            raise ValueError(f"not a permutation of {self.labels}: {g!r}")
        return t

    # -- elementwise operations ----------------------------------------------

    @property
    def identity(self):
        return self.labels

    def apply(self, g, label):
        return g[self._pos[label]]

    def _compose(self, a, b):
        # a after b
        pos = self._pos
        return tuple(a[pos[x]] for x in b)

    def _inv(self, a):
        out = [None] * len(a)
        pos = self._pos
        for i, x in enumerate(a):
            out[pos[x]] = self.labels[i]
        return tuple(out)

    def perm_as_inj(self, g) -> Inj:
        return tuple(zip(self.labels, g))

    # -- stabilizer chain ----------------------------------------------------

    def _chain(self, base_prefix=()):
        key = tuple(base_prefix)
        chain = self._chains.get(key)
        if chain is None:
            chain = self._build_chain(list(key))
            self._chains[key] = chain
        return chain

    def _build_chain(self, forced_prefix):
        """Deterministic Schreier-Sims; forced_prefix pins the first base points."""
        pos = self._pos
        ident = self.labels
        base = []
        gens_at = []        # gens_at[i] fix base[:i] and move base[i]
        transversals = []

        def new_level(point):
            base.append(point)
            gens_at.append([])
            transversals.append({point: ident})

        for p in forced_prefix:
            new_level(p)

        def recompute_orbit(i):
            t = {base[i]: ident}
            frontier = [base[i]]
            while frontier:
                x = frontier.pop()
                ux = t[x]
                for s in gens_at[i]:
                    y = s[pos[x]]
                    if y not in t:
                        t[y] = self._compose(s, ux)
                        frontier.append(y)
            transversals[i] = t

        def strip(g):
            for i in range(len(base)):
                x = g[pos[base[i]]]
                u = transversals[i].get(x)
                if u is None:
                    return g, i
                if u is not ident:
                    g = self._compose(self._inv(u), g)
            return g, len(base)

        def add_generator(g):
            res, lev = strip(g)
            if res == ident:
                return False
            if lev == len(base):
                moved = next(a for a in self.labels if res[pos[a]] != a)
                new_level(moved)
            # res fixes base[:lev], so it belongs to every level up to lev
            for i in range(lev + 1):
                gens_at[i].append(res)
                recompute_orbit(i)
            return True

        for g in self.generators:
            add_generator(g)

        changed = True
        while changed:
            changed = False
            for i in range(len(base)):
                recompute_orbit(i)
                t = transversals[i]
                for x in sorted(t, key=pos.get):
                    ux = t[x]
                    for s in list(gens_at[i]):
                        y = s[pos[x]]
                        uy = t.get(y)
                        if uy is None:
                            changed = True
                            continue
                        h = self._compose(self._inv(uy), self._compose(s, ux))
                        if h != ident and add_generator(h):
                            changed = True
        for i in range(len(base)):
            recompute_orbit(i)
        return {"base": base, "sgs": gens_at, "transversals": transversals}

    def order(self) -> int:
        if self._order is None:
            chain = self._chain()
            n = 1
            for t in chain["transversals"]:
                n *= len(t)
            self._order = n
        return self._order

    def __contains__(self, g) -> bool:
        try:
            t = self._coerce(g)
        except (ValueError, KeyError):
            return False
        chain = self._chain()
        pos = self._pos
        for i, b in enumerate(chain["base"]):
            x = t[pos[b]]
            u = chain["transversals"][i].get(x)
            if u is None:
                return False
            t = self._compose(self._inv(u), t)
        return t == self.identity

    def elements(self):
        """All elements, cached; refuses to materialize above ELEMENT_CAP."""
        if self._elements is None:
            if self.order() > ELEMENT_CAP:
                raise ValueError(
                    f"group order {self.order()} exceeds element cap "
                    f"{ELEMENT_CAP}; use orbit/restriction queries instead")
            chain = self._chain()
            out = [self.identity]
            for t in reversed(chain["transversals"]):
                out = [self._compose(u, e) for u in t.values() for e in out]
            assert len(out) == self.order()
            self._elements = tuple(sorted(set(out)))
        return self._elements

    # -- restriction sets ----------------------------------------------------

    def restrictions_with_domain(self, B):
        """{σ|_B : σ in the group} as injections with domain B."""
        B = tuple(sorted(B))
        cached = self._domain_maps.get(B)
        if cached is not None:
            return cached
        pos = self._pos
        start = B
        seen = {start}
        queue = [start]
        invs = [self._inv(g) for g in self.generators]
        while queue:
            t = queue.pop()
            for g in list(self.generators) + invs:
                y = tuple(g[pos[x]] for x in t)
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        out = frozenset(inj(zip(B, t)) for t in seen)
        self._domain_maps[B] = out
        return out

    def restrictions_onto(self, B):
        """All restrictions with image exactly B (any domain)."""
        B = tuple(sorted(B))
        cached = self._onto_maps.get(B)
        if cached is None:
            cached = frozenset(inverse(m)
                               for m in self.restrictions_with_domain(B))
            self._onto_maps[B] = cached
        return cached

    def restricted_maps(self, B, Bp):
        """Restrictions with domain B and image exactly Bp."""
        want = frozenset(Bp)
        return frozenset(m for m in self.restrictions_with_domain(B)
                         if img_set(m) == want)

    def set_orbit(self, B) -> frozenset:
        """Orbit of the label set B under the setwise action."""
        B = frozenset(B)
        cached = self._set_orbits.get(B)
        if cached is not None:
            return cached
        pos = self._pos
        seen = {B}
        queue = [B]
        invs = [self._inv(g) for g in self.generators]
        while queue:
            s = queue.pop()
            for g in list(self.generators) + invs:
                y = frozenset(g[pos[x]] for x in s)
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        out = frozenset(seen)
        for s in seen:
            self._set_orbits[s] = out
        return out

    def stabilizer_pointwise(self, B_star):
        """Subgroup fixing B_star pointwise, restricted to the other labels."""
        B_star = tuple(sorted(B_star))
        for a in B_star:
            if a not in self._pos:
                raise ValueError(f"label {a!r} not acted on")
        chain = self._chain(B_star)
        k = len(B_star)
        rest = tuple(a for a in self.labels if a not in set(B_star))
        pos = self._pos
        sgs = chain["sgs"]
        gens = []
        if k < len(sgs):
            for g in sgs[k]:
                assert all(g[pos[b]] == b for b in B_star)
                gens.append(tuple(g[pos[a]] for a in rest))
        return PermutationGroup(rest, gens)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {"labels": list(self.labels),
                "generators": [list(g) for g in self.generators]}

    @classmethod
    def from_json(cls, data) -> "PermutationGroup":
        return cls(data["labels"], [tuple(g) for g in data["generators"]])

    def __repr__(self):
        return (f"PermutationGroup(labels={self.labels}, "
                f"{len(self.generators)} generators)")


class Orbit:
    """Orbit of a partial injection under right translation by restrictions."""

    __slots__ = ("group", "rep", "_members")

    def __init__(self, group: PermutationGroup, psi: Inj):
        self.group = group
        members = orbit_of_map(group, psi)
        self.rep = min(members, key=sort_key)
        self._members = members

    def members(self) -> frozenset:
        return self._members

    def __len__(self):
        return len(self._members)

    def __contains__(self, psi):
        return psi in self._members

    def __iter__(self):
        return iter(sorted(self._members, key=sort_key))

    def __eq__(self, other):
        return isinstance(other, Orbit) and self.rep == other.rep

    def __hash__(self):
        return hash(self.rep)

    def __repr__(self):
        return f"Orbit(rep={self.rep}, size={len(self._members)})"


def orbit_of_map(group: PermutationGroup, psi: Inj) -> frozenset:
    """{psi ∘ σ} over restrictions σ with image Dom(psi)."""
    B = dom(psi)
    return frozenset(compose(psi, m) for m in group.restrictions_onto(B))


def equivalence_classes(group: PermutationGroup, r: int):
    """Partition of the r-element label subsets into translate classes."""
    from itertools import combinations
    classes = []
    seen = set()
    for B in combinations(group.labels, r):
        fs = frozenset(B)
        if fs in seen:
            continue
        orb = group.set_orbit(fs)
        seen |= orb
        classes.append(frozenset(orb))
    return classes


def is_adapted(complex_, group: PermutationGroup, limit=None):
    """Check right-translation closure; returns (bool, witness or None).

    The witness is a pair (phi, sigma) with phi in the complex but
    phi ∘ sigma not in it.
    """
    checked = 0
    for B in complex_.level_sets():
        onto = group.restrictions_onto(B)
        for phi in complex_.maps_at(B):
            for s in onto:
                if limit is not None and checked >= limit:
                    raise RuntimeError("adaptedness check budget exceeded")
                checked += 1
                tr = compose(phi, s)
                if not complex_.contains(tr):
                    return False, (phi, s)
    return True, None


def is_exactly_adapted(complex_, group: PermutationGroup) -> bool:
    """Adapted, and relabellings stay inside only along group restrictions."""
    from itertools import combinations, permutations
    labels = complex_.labels
    for B in complex_.level_sets():
        k = len(B)
        for Bp in combinations(labels, k):
            allowed = group.restricted_maps(Bp, B)
            for perm in permutations(B):
                tau = inj(zip(Bp, perm))  # tau: Bp -> B
                in_group = tau in allowed
                for phi in complex_.maps_at(B):
                    if complex_.contains(compose(phi, tau)) != in_group:
                        return False
    return True


def orbits(complex_, group: PermutationGroup, r: int):
    """Orbits of the complex's level-r maps; requires an adapted complex."""
    if not complex_.known_adapted(group):
        ok, witness = is_adapted(complex_, group, limit=2_000_000)
        if not ok:
            raise ValueError(f"complex is not adapted: witness {witness}")
    out = []
    seen = set()
    for B in complex_.level_sets(r):
        for psi in complex_.maps_at(B):
            if psi in seen:
                continue
            orb = Orbit(group, psi)
            seen |= orb.members()
            out.append(orb)
    out.sort(key=lambda o: sort_key(o.rep))
    return out
