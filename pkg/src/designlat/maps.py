"""Partial injective maps (labels -> vertices), the common currency of the package.

An injection is stored as a tuple of (label, vertex) pairs sorted by label.
Labels within one object are mutually orderable (ints in practice); vertices
are hashable and mutually orderable within one complex.
"""

from __future__ import annotations

from itertools import combinations


Inj = tuple  # tuple[tuple[label, vertex], ...], sorted by label


def inj(pairs) -> Inj:
    """Build an injection from (label, vertex) pairs; validates injectivity."""
    items = tuple(sorted(pairs, key=lambda p: p[0]))
    labels = [p[0] for p in items]
    values = [p[1] for p in items]
    if len(set(labels)) != len(labels):
        raise ValueError(f"repeated label in {items!r}")
    if len(set(values)) != len(values):
        raise ValueError(f"not injective: {items!r}")
    return items


def inj_from_images(labels, images) -> Inj:
    """Injection sending sorted(labels)[i] to images[i]."""
    return inj(zip(sorted(labels), images))


def dom(m: Inj) -> tuple:
    return tuple(p[0] for p in m)


def img(m: Inj) -> tuple:
    """Images in label order."""
    return tuple(p[1] for p in m)


def img_set(m: Inj) -> frozenset:
    return frozenset(p[1] for p in m)


def as_dict(m: Inj) -> dict:
    return dict(m)


def apply_to(m: Inj, label):
    for a, v in m:
        if a == label:
            return v
    raise KeyError(label)


def compose(m: Inj, s: Inj) -> Inj:
    """m after s: label a -> m(s(a)).  Needs Im(s) within Dom(m)."""
    md = dict(m)
    return tuple(sorted(((a, md[b]) for a, b in s), key=lambda p: p[0]))


def inverse(m: Inj) -> Inj:
    """Swap roles: vertex -> label map, valid when both sides are labels."""
    return tuple(sorted(((v, a) for a, v in m), key=lambda p: p[0]))


def restrict_inj(m: Inj, labels) -> Inj:
    want = set(labels)
    return tuple(p for p in m if p[0] in want)


def extends(m: Inj, sub: Inj) -> bool:
    """True when m agrees with sub on all of sub's labels."""
    md = dict(m)
    return all(md.get(a, _MISSING) == v for a, v in sub)


_MISSING = object()


def sort_key(m: Inj):
    """Canonical order: by label set, then by images in label order."""
    return (dom(m), img(m))


def sub_injections(m: Inj, size: int):
    """All restrictions of m with |domain| = size."""
    for ps in combinations(m, size):
        yield ps


def union_inj(a: Inj, b: Inj) -> Inj:
    """Union of two compatible injections; raises on conflict."""
    d = dict(a)
    for k, v in b:
        if k in d:
            if d[k] != v:
                raise ValueError("incompatible on a shared label")
        else:
            d[k] = v
    out = inj(d.items())
    return out
