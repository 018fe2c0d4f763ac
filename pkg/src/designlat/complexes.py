"""Labelled complexes: downward-closed families of partial injections.

A complex over a label set R assigns to every B within R a set of injections
B -> V, closed under restriction.  Four representations are supported:

- "explicit": levels stored as sets (always downward-closed on build);
- "complete": every injection of every label subset;
- "partite": labels and vertices both carry parts; maps respect parts and
  are otherwise free (the complete partite complex);
- "pair_colour": an edge-colouring on the vertices and a required colour
  pattern on label pairs; a map is in when every pair matches.

The partite template over labels R with s slots per label has vertices
(i, x) for i in R, x in 1..s; extension counting embeds such templates.
"""

from __future__ import annotations

from itertools import combinations, permutations

from .errors import BudgetExceeded, ConstructionError
from .maps import (Inj, compose, dom, extends, img, img_set, inj, restrict_inj,
                   sort_key, sub_injections)

FORMAT_VERSION = 1


def _key(B) -> tuple:
    return tuple(sorted(B))


class LabelledComplex:
    __slots__ = ("labels", "vertices", "kind", "_levels", "_label_parts",
                 "_vertex_parts", "_edge_colours", "_pair_pattern", "_vset",
                 "_lset")

    def __init__(self, labels, vertices, kind, *, levels=None,
                 label_parts=None, vertex_parts=None, edge_colours=None,
                 pair_pattern=None):
        self.labels = tuple(sorted(labels))
        self.vertices = tuple(sorted(vertices))
        self._vset = frozenset(self.vertices)
        self._lset = frozenset(self.labels)
        self.kind = kind
        self._levels = levels
        self._label_parts = label_parts
        self._vertex_parts = vertex_parts
        self._edge_colours = edge_colours
        self._pair_pattern = pair_pattern
        if kind not in ("explicit", "complete", "partite", "pair_colour"):
            raise ConstructionError(f"unknown kind {kind!r}")

    # -- constructors ----------------------------------------------------------

    @classmethod
    def complete(cls, labels, vertices) -> "LabelledComplex":
        return cls(labels, vertices, "complete")

    @classmethod
    def explicit(cls, labels, vertices, level_maps, close_down=True):
        """level_maps: iterable of injections (any levels); closed downward."""
        levels = {}
        for m in level_maps:
            levels.setdefault(_key(dom(m)), set()).add(tuple(m))
        if close_down:
            work = [m for ms in levels.values() for m in ms]
            while work:
                m = work.pop()
                if len(m) == 0:
                    continue
                for sub in sub_injections(m, len(m) - 1):
                    bucket = levels.setdefault(_key(dom(sub)), set())
                    if sub not in bucket:
                        bucket.add(sub)
                        work.append(sub)
        levels.setdefault((), {()})
        frozen = {B: frozenset(ms) for B, ms in levels.items()}
        return cls(labels, vertices, "explicit", levels=frozen)

    @classmethod
    def partite(cls, labels, vertices, label_parts, vertex_parts):
        """label_parts: {label: part}, vertex_parts: {vertex: part}."""
        if set(label_parts) != set(labels):
            raise ConstructionError("every label needs a part")
        if set(vertex_parts) != set(vertices):
            raise ConstructionError("every vertex needs a part")
        return cls(labels, vertices, "partite", label_parts=dict(label_parts),
                   vertex_parts=dict(vertex_parts))

    @classmethod
    def pair_colour(cls, labels, vertices, edge_colours, pair_pattern):
        """Maps phi with colour(phi(i), phi(j)) == pattern(i, j) on all pairs."""
        ec = {frozenset(e): c for e, c in edge_colours.items()}
        pp = {frozenset(p): c for p, c in pair_pattern.items()}
        for u, v in combinations(sorted(vertices), 2):
            if frozenset((u, v)) not in ec:
                raise ConstructionError(f"missing colour for {u!r},{v!r}")
        for a, b in combinations(sorted(labels), 2):
            if frozenset((a, b)) not in pp:
                raise ConstructionError(f"missing pattern for {a!r},{b!r}")
        return cls(labels, vertices, "pair_colour", edge_colours=ec,
                   pair_pattern=pp)

    @classmethod
    def partite_template(cls, labels, s: int) -> "LabelledComplex":
        """Template with s interchangeable slots per label; vertices (i, x)."""
        if s < 1:
            raise ConstructionError("need at least one slot per label")
        vertices = [(i, x) for i in labels for x in range(1, s + 1)]
        label_parts = {i: i for i in labels}
        vertex_parts = {v: v[0] for v in vertices}
        return cls.partite(labels, vertices, label_parts, vertex_parts)

    # -- basic queries ---------------------------------------------------------

    def level_sets(self, r=None):
        """Sorted label tuples B with maps present; all sizes or one size."""
        if self.kind == "explicit":
            Bs = [B for B, ms in self._levels.items() if ms]
            if r is not None:
                Bs = [B for B in Bs if len(B) == r]
            return sorted(Bs)
        sizes = range(len(self.labels) + 1) if r is None else [r]
        out = []
        for k in sizes:
            out.extend(combinations(self.labels, k))
        return out

    def maps_at(self, B):
        B = _key(B)
        if self.kind == "explicit":
            return sorted(self._levels.get(B, ()), key=sort_key)
        if self.kind == "complete":
            return [tuple(zip(B, images))
                    for images in permutations(self.vertices, len(B))]
        if self.kind == "partite":
            return list(self._iter_partite(B))
        return [m for m in self._iter_colour(B)]

    def _iter_partite(self, B):
        pools = []
        for a in B:
            part = self._label_parts[a]
            pools.append([v for v in self.vertices
                          if self._vertex_parts[v] == part])
        used = set()
        picked = []

        def rec(i):
            if i == len(B):
                yield tuple(zip(B, picked))
                return
            for v in pools[i]:
                if v not in used:
                    used.add(v)
                    picked.append(v)
                    yield from rec(i + 1)
                    picked.pop()
                    used.remove(v)

        yield from rec(0)

    def _iter_colour(self, B):
        pat = self._pair_pattern
        col = self._edge_colours
        picked = []

        def ok(v, i):
            for j in range(i):
                if col[frozenset((picked[j], v))] != pat[frozenset((B[j], B[i]))]:
                    return False
            return True

        def rec(i):
            if i == len(B):
                yield tuple(zip(B, picked))
                return
            for v in self.vertices:
                if v not in picked and ok(v, i):
                    picked.append(v)
                    yield from rec(i + 1)
                    picked.pop()

        yield from rec(0)

    def count_at(self, B) -> int:
        B = _key(B)
        if self.kind == "explicit":
            return len(self._levels.get(B, ()))
        if self.kind == "complete":
            n, k = len(self.vertices), len(B)
            out = 1
            for i in range(k):
                out *= n - i
            return out
        if self.kind == "partite":
            per_part = {}
            for v in self.vertices:
                p = self._vertex_parts[v]
                per_part[p] = per_part.get(p, 0) + 1
            need = {}
            for a in B:
                p = self._label_parts[a]
                need[p] = need.get(p, 0) + 1
            out = 1
            for p, k in need.items():
                m = per_part.get(p, 0)
                for i in range(k):
                    out *= m - i
            return max(out, 0)
        return sum(1 for _ in self._iter_colour(B))

    def size(self, r: int) -> int:
        return sum(self.count_at(B) for B in self.level_sets(r))

    def contains(self, m: Inj) -> bool:
        B = dom(m)
        if any(a not in self._lset for a in B):
            return False
        if any(v not in self._vset for v in img(m)):
            return False
        if self.kind == "explicit":
            return tuple(m) in self._levels.get(_key(B), ())
        if self.kind == "complete":
            return True
        if self.kind == "partite":
            return all(self._vertex_parts[v] == self._label_parts[a]
                       for a, v in m)
        pat, col = self._pair_pattern, self._edge_colours
        return all(col[frozenset((u, v))] == pat[frozenset((a, b))]
                   for (a, u), (b, v) in combinations(m, 2))

    def known_adapted(self, group) -> bool:
        """True when adaptedness holds by construction for this group."""
        if tuple(group.labels) != self.labels:
            return False
        if self.kind == "complete":
            return True
        if self.kind == "partite":
            lp = self._label_parts
            return all(lp[group.apply(g, a)] == lp[a]
                       for g in group.generators for a in self.labels)
        if self.kind == "pair_colour":
            pat = self._pair_pattern
            return all(pat[frozenset((group.apply(g, a), group.apply(g, b)))]
                       == pat[frozenset((a, b))]
                       for g in group.generators
                       for a, b in combinations(self.labels, 2))
        return False

    # -- derived complexes -----------------------------------------------------

    def restrict(self, partial_levels) -> "LabelledComplex":
        """Keep maps whose restrictions lie in the given partial system.

        partial_levels: {label_subset: collection of injections}; every map of
        this complex is filtered at each provided level that fits inside its
        domain.
        """
        filt = {}
        for B, ms in partial_levels.items():
            B = _key(B)
            if not set(B) <= set(self.labels):
                raise ConstructionError(f"level {B} outside labels")
            filt[B] = {tuple(m) for m in ms}

        def keep(m):
            B = set(dom(m))
            for Bp, allowed in filt.items():
                if set(Bp) <= B and restrict_inj(m, Bp) not in allowed:
                    return False
            return True

        kept = []
        for B in self.level_sets():
            for m in self.maps_at(B):
                if keep(m):
                    kept.append(m)
        return LabelledComplex.explicit(self.labels, self.vertices, kept,
                                        close_down=False)

    def restrict_vertices(self, U) -> "LabelledComplex":
        """Maps landing inside U; complete stays complete, parts shrink."""
        U = frozenset(U)
        if self.kind == "complete":
            return LabelledComplex.complete(self.labels,
                                            [v for v in self.vertices if v in U])
        if self.kind == "partite":
            vs = [v for v in self.vertices if v in U]
            return LabelledComplex.partite(
                self.labels, vs, self._label_parts,
                {v: p for v, p in self._vertex_parts.items() if v in U})
        singleton = {(a,): {((a, v),) for v in U if self.contains(((a, v),))}
                     for a in self.labels}
        return self.restrict(singleton)

    def neighbourhood(self, phi_star: Inj) -> "LabelledComplex":
        """Maps on the unused labels whose union with phi_star stays inside."""
        if not self.contains(phi_star):
            raise ConstructionError("base map not in the complex")
        B_star = set(dom(phi_star))
        rest = tuple(a for a in self.labels if a not in B_star)
        used = img_set(phi_star)
        free = [v for v in self.vertices if v not in used]
        if self.kind == "complete":
            return LabelledComplex.complete(rest, free)
        if self.kind == "partite":
            return LabelledComplex.partite(
                rest, free,
                {a: p for a, p in self._label_parts.items() if a in rest},
                {v: p for v, p in self._vertex_parts.items() if v in free})
        kept = []
        base = tuple(phi_star)
        for B in self.level_sets():
            if not set(B) <= set(rest):
                continue
            for m in self.maps_at(B):
                if used & img_set(m):
                    continue
                try:
                    union = inj(base + tuple(m))
                except ValueError:
                    continue
                if self.contains(union):
                    kept.append(tuple(m))
        return LabelledComplex.explicit(rest, free, kept, close_down=False)

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        out = {"format_version": FORMAT_VERSION,
               "labels": list(self.labels),
               "vertices": [list(v) if isinstance(v, tuple) else v
                            for v in self.vertices],
               "kind": self.kind}
        if self.kind == "explicit":
            out["levels"] = [
                {"label_subset": list(B),
                 "maps": [[[a, v] for a, v in m] for m in
                          sorted(ms, key=sort_key)]}
                for B, ms in sorted(self._levels.items())]
        elif self.kind == "partite":
            out["label_parts"] = [[a, p] for a, p in
                                  sorted(self._label_parts.items())]
            out["vertex_parts"] = [[v, p] for v, p in
                                   sorted(self._vertex_parts.items())]
        elif self.kind == "pair_colour":
            out["edge_colours"] = [[sorted(e), c] for e, c in
                                   sorted(self._edge_colours.items(),
                                          key=lambda kv: sorted(kv[0]))]
            out["pair_pattern"] = [[sorted(p), c] for p, c in
                                   sorted(self._pair_pattern.items(),
                                          key=lambda kv: sorted(kv[0]))]
        return out

    @classmethod
    def from_json(cls, data) -> "LabelledComplex":
        kind = data["kind"]
        labels = data["labels"]
        vertices = [tuple(v) if isinstance(v, list) else v
                    for v in data["vertices"]]
        if kind == "complete":
            return cls.complete(labels, vertices)
        if kind == "explicit":
            ms = [inj(tuple((a, v) for a, v in entry))
                  for lev in data["levels"] for entry in lev["maps"]]
            return cls.explicit(labels, vertices, ms, close_down=False)
        if kind == "partite":
            return cls.partite(labels, vertices,
                               dict(tuple(p) for p in data["label_parts"]),
                               {(tuple(v) if isinstance(v, list) else v): p
                                for v, p in data["vertex_parts"]})
        if kind == "pair_colour":
            return cls.pair_colour(
                labels, vertices,
                {tuple(e): c for e, c in data["edge_colours"]},
                {tuple(p): c for p, c in data["pair_pattern"]})
        raise ConstructionError(f"unknown kind {kind!r}")

    def __repr__(self):
        return (f"LabelledComplex(kind={self.kind}, labels={self.labels}, "
                f"{len(self.vertices)} vertices)")


class Extension:
    """A partite template, a frozen vertex set, and a base embedding of it."""

    __slots__ = ("template", "frozen", "base")

    def __init__(self, template: LabelledComplex, frozen, base: Inj):
        for B in template.level_sets():
            for m in template.maps_at(B):
                for a, v in m:
                    if not (isinstance(v, tuple) and len(v) == 2 and v[0] == a):
                        raise ConstructionError(
                            "template must keep each label on its own slots")
        self.template = template
        self.frozen = tuple(sorted(frozen))
        base = inj(base)
        if dom(base) != self.frozen:
            raise ConstructionError("base embedding must cover exactly the "
                                    "frozen vertices")
        self.base = base

    @property
    def free_vertices(self):
        fs = set(self.frozen)
        return tuple(v for v in self.template.vertices if v not in fs)


def iter_extensions(complex_: LabelledComplex, ext: Extension,
                    constraints=(), budget=None):
    """Embeddings of the template extending the base; optional constraints.

    Each constraint is (template_maps, sub_complex): the listed template maps
    must additionally land inside sub_complex.  Constraint map sets must be
    disjoint and avoid maps fully inside the frozen set.
    """
    tpl = ext.template
    frozen = set(ext.frozen)
    claimed = set()
    con = []
    for tmaps, sub in constraints:
        tmaps = {tuple(m) for m in tmaps}
        for m in tmaps:
            if set(img(m)) <= frozen:
                raise ConstructionError("constraint on a fully frozen map")
            if m in claimed:
                raise ConstructionError("constraint map sets must be disjoint")
        claimed |= tmaps
        con.append((tmaps, sub))

    order = list(ext.free_vertices)
    assign = dict(ext.base)
    # template maps checked as soon as their last slot is placed
    all_maps = [m for B in tpl.level_sets() for m in tpl.maps_at(B) if m]
    placed_at = []
    for idx in range(len(order)):
        ready = []
        done = set(order[:idx + 1]) | frozen
        prev = set(order[:idx]) | frozen
        for m in all_maps:
            vs = set(img(m))
            if vs <= done and not vs <= prev:
                ready.append(m)
        placed_at.append(ready)
    base_ready = [m for m in all_maps if set(img(m)) <= frozen]
    steps = 0

    def host_ok(m, image_map):
        target = inj((a, image_map[v]) for a, v in m)
        if not complex_.contains(target):
            return False
        for tmaps, sub in con:
            if m in tmaps and not sub.contains(target):
                return False
        return True

    for m in base_ready:
        if not host_ok(m, assign):
            return

    used = set(assign.values())

    def rec(i):
        nonlocal steps
        if i == len(order):
            yield inj(assign.items())
            return
        slot = order[i]
        for v in complex_.vertices:
            steps += 1
            if budget is not None and steps > budget:
                raise BudgetExceeded("extension enumeration budget exceeded")
            if v in used:
                continue
            assign[slot] = v
            used.add(v)
            if all(host_ok(m, assign) for m in placed_at[i]):
                yield from rec(i + 1)
            del assign[slot]
            used.remove(v)

    yield from rec(0)


def count_extensions(complex_: LabelledComplex, ext: Extension,
                     constraints=(), budget=None) -> int:
    return sum(1 for _ in iter_extensions(complex_, ext, constraints, budget))


def extendability_certificate(complex_: LabelledComplex, omega, s: int,
                              max_top_maps: int = 2, budget: int = 2_000_000):
    """Check all small partite extensions for density at least omega.

    Templates are downward closures of up to max_top_maps top-level maps of
    the s-slot template over this complex's labels.  Returns a report dict;
    raises BudgetExceeded (with the partial report attached) if the sweep
    cannot finish.
    """
    from fractions import Fraction
    R = complex_.labels
    tpl_full = LabelledComplex.partite_template(R, s)
    top = tpl_full.maps_at(R)
    n = len(complex_.vertices)
    report = {"omega": str(Fraction(omega)), "slots": s,
              "satisfied": True, "min_density": None, "witness": None,
              "extensions_checked": 0}
    best = None
    steps = 0
    for k in range(1, max_top_maps + 1):
        for chosen in combinations(top, k):
            verts = sorted({v for m in chosen for v in img(m)})
            sub = LabelledComplex.explicit(R, verts, chosen, close_down=True)
            for fsize in range(len(verts) + 1):
                for frozen in combinations(verts, fsize):
                    free = [v for v in verts if v not in frozen]
                    v_e = len(free)
                    frozen_maps = [m for B in sub.level_sets()
                                   for m in sub.maps_at(B)
                                   if set(img(m)) <= set(frozen)]
                    base_sub = LabelledComplex.explicit(
                        R, list(frozen), frozen_maps, close_down=False)
                    bases = _embed_all(complex_, base_sub, frozen)
                    for base in bases:
                        steps += 1
                        if steps > budget:
                            raise BudgetExceeded(
                                "extendability sweep budget exceeded",
                                partial=report)
                        ext = Extension(sub, frozen, base)
                        cnt = count_extensions(complex_, ext,
                                               budget=budget - steps)
                        dens = Fraction(cnt, n ** v_e) if v_e else Fraction(cnt)
                        report["extensions_checked"] += 1
                        if best is None or dens < best:
                            best = dens
                            report["min_density"] = str(dens)
                            report["witness"] = {
                                "top_maps": [[[a, list(v)] for a, v in m]
                                             for m in chosen],
                                "frozen": [list(v) for v in frozen],
                                "base": [[list(a), b] for a, b in base],
                                "count": cnt}
                        if dens < omega:
                            report["satisfied"] = False
    return report


def _embed_all(complex_, sub, frozen):
    """All embeddings of the frozen part of a template into the complex."""
    frozen = list(frozen)
    if not frozen:
        return [()]
    maps_all = [m for B in sub.level_sets() for m in sub.maps_at(B) if m]
    out = []
    assign = {}
    used = set()

    def ok():
        for m in maps_all:
            if all(v in assign for v in img(m)):
                if not complex_.contains(inj((a, assign[v]) for a, v in m)):
                    return False
        return True

    def rec(i):
        if i == len(frozen):
            out.append(inj(assign.items()))
            return
        for v in complex_.vertices:
            if v in used:
                continue
            assign[frozen[i]] = v
            used.add(v)
            if ok():
                rec(i + 1)
            del assign[frozen[i]]
            used.remove(v)

    rec(0)
    return out
