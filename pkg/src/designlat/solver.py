"""Decomposition engines over vector systems.

solve_exact searches for a set decomposition by exact multiset cover in
atom-coefficient space: the target is decomposed into per-orbit atom
coefficients once, every candidate embedding contributes one atom per
nonzero image set of the table, and backtracking matches the two.
solve_integral instead solves the molecule matrix over the integers.
nibble_greedy is a seeded random-greedy simulator with leave statistics,
and generic_matrix builds Cauchy matrices over F_p with a minor sweep.
"""

from __future__ import annotations

import os
import random
import time
from fractions import Fraction
from itertools import combinations

from .errors import BudgetExceeded, ConstructionError
from .maps import compose, dom, sort_key
from .vectors import Selection

SOLVED = "SOLVED"
UNSAT = "UNSAT"
BUDGET = "BUDGET"
NOT_IN_LATTICE = "NOT_IN_LATTICE"

DEFAULT_BUDGET = 10_000_000


def _env_budget():
    raw = os.environ.get("DESIGNLAT_BUDGET")
    if not raw:
        return DEFAULT_BUDGET
    try:
        return max(1, int(raw))
    except ValueError:
        return DEFAULT_BUDGET


class SearchConfig:
    """Knobs for the exact search; a fixed seed gives a deterministic run."""

    __slots__ = ("budget", "heuristic", "seed", "symmetry_pruning",
                 "time_limit")

    def __init__(self, budget=None, heuristic="mrc", seed=0,
                 symmetry_pruning=False, time_limit=None):
        self.budget = _env_budget() if budget is None else int(budget)
        if self.budget <= 0:
            raise ConstructionError("budget must be positive")
        self.heuristic = heuristic
        self.seed = int(seed)
        self.symmetry_pruning = bool(symmetry_pruning)
        self.time_limit = time_limit


class SolveResult:
    __slots__ = ("status", "selection", "nodes")

    def __init__(self, status, selection, nodes):
        self.status = status
        self.selection = selection
        self.nodes = nodes

    def __repr__(self):
        return f"SolveResult({self.status}, nodes={self.nodes})"


class GreedyTrace:
    """Record of one random-greedy run: choices, leave, and use statistics."""

    __slots__ = ("chosen", "leave", "histogram", "ratio", "fixpoint")

    def __init__(self, chosen, leave, histogram, ratio, fixpoint):
        self.chosen = chosen
        self.leave = leave
        self.histogram = histogram
        self.ratio = ratio
        self.fixpoint = fixpoint


# -- atom-slot machinery ------------------------------------------------------


def _slot_of(system, member, theta, phi, rep_cache):
    """Canonical (orbit rep, type id) slot hit by the embedding at theta.

    rep is the sort-minimal orbit member, matching the anchors used by
    atom decompositions, and sp right-translates psi onto it.
    """
    psi = compose(phi, theta)
    hit = rep_cache.get(psi)
    if hit is None:
        rep = sp = key = None
        for s in system.group.restrictions_onto(dom(psi)):
            cand = compose(psi, s)
            ck = sort_key(cand)
            if key is None or ck < key:
                rep, sp, key = cand, s, ck
        hit = (rep, sp)
        rep_cache[psi] = hit
    rep, sp = hit
    t = system.type_of(member, compose(theta, sp))
    return rep, t.type_id


def footprint(system, member, phi):
    """Atom slots covered by one embedding: {(orbit rep, type id): 1}.

    The table's support is grouped by image set; the contribution of each
    group depends only on the restriction of phi to that image set, which
    makes the per-restriction cache effective across embeddings.
    """
    by_f, rep_cache = system._slot_cache
    phi_d = dict(phi)
    out = {}
    for F, thetas in system.supp_by_image(member).items():
        fkey = (member, F, tuple(phi_d[x] for x in F))
        slot = by_f.get(fkey)
        if slot is None:
            slot = _slot_of(system, member, thetas[0], phi, rep_cache)
            by_f[fkey] = slot
        out[slot] = 1
    return out


def target_slots(system, complex_, G):
    """Per-slot required coefficients of the target, or None when G has no
    atom decomposition (hence no decomposition at all)."""
    decomp = system.atom_decomposition(complex_, G)
    if not decomp.in_span:
        return None
    slots = {}
    for rep, per_type in decomp.coefficients.items():
        for tid, c in per_type.items():
            slots[(rep, tid)] = c
    return slots


def _candidates(system, complex_, slots, cap=1):
    """Embeddings deduplicated by slot footprint.

    Each entry is (presentations, footprint) where presentations holds up
    to cap distinct (member, phi) pairs sharing the footprint; a footprint
    used with multiplicity k in a set decomposition needs k of them.
    """
    seen = {}
    for member, phi in system.iter_embeddings(complex_):
        fp = footprint(system, member, phi)
        if not fp:
            continue
        if any(s not in slots for s in fp):
            continue
        key = tuple(sorted(fp))
        entry = seen.get(key)
        if entry is None:
            seen[key] = ([(member, phi)], fp)
        elif len(entry[0]) < cap:
            entry[0].append((member, phi))
    return [seen[k] for k in sorted(seen)]


def _free_signature(fp, fixed):
    """Footprint with unfixed vertices renamed by first occurrence."""
    names = {}
    sig = []
    for (rep, tid) in sorted(fp):
        row = []
        for a, v in rep:
            if v in fixed:
                row.append((a, ("#", v)))
            else:
                if v not in names:
                    names[v] = len(names)
                row.append((a, ("*", names[v])))
        sig.append((tuple(row), tid))
    return tuple(sig)


def solve_exact(system, complex_, G, cfg=None):
    """Set decomposition of G by exact cover over atom slots.

    Returns SolveResult with status SOLVED (selection attached), UNSAT,
    or BUDGET.  Instances failing the lattice membership pre-check are
    UNSAT without any search.
    """
    from .lattice import lattice_member_L
    cfg = cfg or SearchConfig()
    ok, _ = lattice_member_L(system, G)
    if not ok:
        return SolveResult(UNSAT, None, 0)
    slots = target_slots(system, complex_, G)
    if slots is None:
        return SolveResult(UNSAT, None, 0)
    if not slots:
        return SolveResult(SOLVED, Selection(), 0)
    cap = max(slots.values())
    cands = _candidates(system, complex_, slots, cap)

    covers = {}
    for idx, (_, fp) in enumerate(cands):
        for s in fp:
            covers.setdefault(s, []).append(idx)

    deadline = (time.monotonic() + cfg.time_limit
                if cfg.time_limit is not None else None)
    need = dict(slots)
    uses = [0] * len(cands)
    chosen = []
    nodes = 0
    prune_root = (cfg.symmetry_pruning and complex_.kind == "complete"
                  and len(set(map(tuple, G.data.values()))) <= 1)

    def admissible(idx):
        pres, fp = cands[idx]
        if uses[idx] >= len(pres):
            return False
        return all(need.get(s, 0) >= 1 for s in fp)

    def search(depth):
        nonlocal nodes
        open_slots = [s for s, c in need.items() if c]
        if not open_slots:
            return True
        nodes += 1
        if nodes > cfg.budget:
            raise BudgetExceeded("node budget exhausted")
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceeded("time limit exhausted")
        best = None
        best_opts = None
        for s in sorted(open_slots):
            opts = [i for i in covers.get(s, ()) if admissible(i)]
            if best_opts is None or len(opts) < len(best_opts):
                best, best_opts = s, opts
                if len(opts) <= 1:
                    break
        if not best_opts:
            return False
        if depth == 0 and prune_root:
            # branches identical up to renaming vertices outside the branch
            # slot's image reach the same subproblem; keep one of each
            root_fixed = {v for _, v in best[0]}
            seen_sigs = set()
            pruned = []
            for i in best_opts:
                sig = _free_signature(cands[i][1], root_fixed)
                if sig in seen_sigs:
                    continue
                seen_sigs.add(sig)
                pruned.append(i)
            best_opts = pruned
        for i in best_opts:
            _, fp = cands[i]
            for s in fp:
                need[s] -= 1
            uses[i] += 1
            chosen.append(i)
            if search(depth + 1):
                return True
            chosen.pop()
            uses[i] -= 1
            for s in fp:
                need[s] += 1
        return False

    try:
        found = search(0)
    except BudgetExceeded:
        return SolveResult(BUDGET, None, nodes)
    if not found:
        return SolveResult(UNSAT, None, nodes)
    counts = {}
    for i in chosen:
        counts[i] = counts.get(i, 0) + 1
    entries = []
    for i, c in sorted(counts.items()):
        for member, phi in cands[i][0][:c]:
            entries.append((member, phi, 1))
    return SolveResult(SOLVED, Selection(entries), nodes)


def count_exact(system, complex_, G, cfg=None):
    """Exact number of set decompositions of G (raw labelled count).

    Branches on the first open slot in canonical order with a
    non-decreasing candidate index within a slot, so every multiset of
    embeddings is counted exactly once.  Symmetry pruning is never used.
    """
    cfg = cfg or SearchConfig()
    slots = target_slots(system, complex_, G)
    if slots is None:
        return 0
    if not slots:
        return 1
    cap = max(slots.values())
    cands = _candidates(system, complex_, slots, cap)
    covers = {}
    for idx, (_, fp) in enumerate(cands):
        for s in fp:
            covers.setdefault(s, []).append(idx)
    order = sorted(slots)
    need = dict(slots)
    uses = [0] * len(cands)
    nodes = 0

    def count(from_slot, min_idx):
        nonlocal nodes
        nodes += 1
        if nodes > cfg.budget:
            raise BudgetExceeded("node budget exhausted",
                                 partial={"nodes": nodes})
        slot = None
        for s in order[from_slot:]:
            if need[s]:
                slot = s
                break
            from_slot += 1
        if slot is None:
            return 1
        total = 0
        for i in covers.get(slot, ()):
            if i < min_idx:
                continue
            pres, fp = cands[i]
            if uses[i] >= len(pres):
                continue
            if any(need.get(s, 0) < 1 for s in fp):
                continue
            for s in fp:
                need[s] -= 1
            uses[i] += 1
            still_open = need[slot] > 0
            total += count(from_slot, i if still_open else 0)
            uses[i] -= 1
            for s in fp:
                need[s] += 1
        return total

    return count(0, 0)


def solve_integral(system, complex_, J, cfg=None):
    """Integral decomposition via the molecule matrix.

    Returns SolveResult whose selection carries integer coefficients, or
    status NOT_IN_LATTICE when the system is exactly infeasible.
    """
    from .lattice import integer_solve
    cfg = cfg or SearchConfig()
    molecules = []
    seen = {}
    for member, phi in system.iter_embeddings(complex_):
        mol = system.molecule(complex_, member, phi)
        key = tuple(sorted(mol.data.items()))
        if key and key not in seen:
            seen[key] = True
            molecules.append((member, phi, mol))
    rows_keys = set(J.support())
    for _, _, mol in molecules:
        rows_keys.update(mol.support())
    rows_keys = sorted(rows_keys, key=sort_key)
    n_rows = len(rows_keys) * system.dim
    if n_rows * max(1, len(molecules)) > cfg.budget:
        raise BudgetExceeded("molecule matrix exceeds budget")
    index = {k: i for i, k in enumerate(rows_keys)}
    Z = [[0] * len(molecules) for _ in range(n_rows)]
    for c, (_, _, mol) in enumerate(molecules):
        for psi, vec in mol.items():
            base = index[psi] * system.dim
            for d in range(system.dim):
                Z[base + d][c] = vec[d]
    rhs = [0] * n_rows
    for psi, vec in J.items():
        base = index[psi] * system.dim
        for d in range(system.dim):
            rhs[base + d] = vec[d]
    x = integer_solve(Z, rhs)
    if x is None:
        return SolveResult(NOT_IN_LATTICE, None, 0)
    sel = Selection([(m, phi, c)
                     for (m, phi, _), c in zip(molecules, x) if c])
    return SolveResult(SOLVED, sel, 0)


def verify(system, complex_, selection, G, mode="SET"):
    """Check that the selection's boundary equals G.

    Returns (ok, report).  SET mode additionally requires coefficients in
    {0,1} and every molecule to fit inside G coordinatewise.  The report
    lists at most 20 mismatching (injection, colour) coordinates.
    """
    if mode not in ("SET", "INTEGRAL"):
        raise ConstructionError(f"unknown verify mode {mode!r}")
    report = {"mode": mode, "mismatches": [], "mode_violation": False}
    ok = True
    if mode == "SET":
        for member, phi, coeff in selection.items():
            if coeff not in (0, 1):
                report["mode_violation"] = True
                ok = False
            if not system.is_A_embedding(complex_, phi):
                report["mode_violation"] = True
                ok = False
            else:
                mol = system.molecule(complex_, member, phi)
                for psi, vec in mol.items():
                    gv = G.get(psi)
                    if any(v > g for v, g in zip(vec, gv)):
                        report["mode_violation"] = True
                        ok = False
                        break
    bound = system.boundary(complex_, selection)
    diff = bound - G
    for psi, vec in sorted(diff.items(), key=lambda kv: sort_key(kv[0])):
        for d in range(system.dim):
            if vec[d]:
                ok = False
                if len(report["mismatches"]) < 20:
                    report["mismatches"].append(
                        {"injection": psi, "colour": d, "excess": vec[d]})
    report["ok"] = ok
    return ok, report


# -- random greedy ------------------------------------------------------------


def nibble_greedy(system, complex_, G, seed=0, policy="UNIFORM", weights=None):
    """Random-greedy cover simulation; returns a GreedyTrace.

    Repeatedly samples an admissible embedding (molecule fits inside the
    residual coordinatewise), subtracts it, and stops at a fixpoint.  The
    fixpoint is re-checked before returning.
    """
    rng = random.Random(seed)
    cands = []
    for member, phi in system.iter_embeddings(complex_):
        mol = system.molecule(complex_, member, phi)
        if len(mol.data):
            cands.append((member, phi, mol))
    residual = G.copy()

    def fits(mol):
        for psi, vec in mol.items():
            gv = residual.get(psi)
            if any(v > g for v, g in zip(vec, gv)):
                return False
        return True

    chosen = []
    alive = list(range(len(cands)))
    while alive:
        pick = rng.randrange(len(alive))
        idx = alive[pick]
        member, phi, mol = cands[idx]
        if not fits(mol):
            alive[pick] = alive[-1]
            alive.pop()
            continue
        if policy == "WEIGHTED" and weights is not None:
            w = weights(member, phi)
            if w <= 0:  # zero inclusion probability: drop outright
                alive[pick] = alive[-1]
                alive.pop()
                continue
            if w < 1 and rng.random() > float(w):
                continue
        chosen.append((member, phi, 1))
        residual = residual - mol
        if not residual.is_nonneg():
            raise ConstructionError("residual went negative")
    for member, phi, mol in cands:
        if (policy == "WEIGHTED" and weights is not None
                and weights(member, phi) <= 0):
            continue
        if fits(mol) and len(mol.data):
            raise ConstructionError("fixpoint certificate failed")

    r = system.r

    def degree_histogram(vec_source):
        hist = {}
        for psi, vec in vec_source.items():
            mass = sum(abs(v) for v in vec)
            for sub in combinations(psi, r - 1):
                hist[sub] = hist.get(sub, 0) + mass
        return hist

    histogram = degree_histogram(residual)
    g_hist = degree_histogram(G)
    worst = max(histogram.values()) if histogram else 0
    g_worst = max(g_hist.values()) if g_hist else 0
    ratio = Fraction(worst, g_worst) if g_worst else Fraction(0)
    return GreedyTrace(chosen, residual, histogram, ratio, True)


# -- generic matrices over F_p -------------------------------------------------


def _det_mod(mat, p):
    m = [row[:] for row in mat]
    n = len(m)
    det = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] % p), None)
        if piv is None:
            return 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        inv = pow(m[c][c], p - 2, p)
        det = det * m[c][c] % p
        for i in range(c + 1, n):
            f = m[i][c] * inv % p
            if f:
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[c])]
    return det % p


def generic_matrix(q, r, p, paper_window=False):
    """q x r Cauchy matrix over F_p plus a full minor sweep report.

    Entries are (x_i + y_j)^{-1} with distinct x's and y's chosen so all
    sums are nonzero; every square submatrix is then nonsingular, which
    the sweep verifies by exact determinants mod p.
    """
    if p < q + r:
        raise ConstructionError(f"p={p} too small for a {q}x{r} Cauchy matrix")
    for d in range(2, int(p ** 0.5) + 1):
        if p % d == 0:
            raise ConstructionError(f"p={p} is not prime")
    if p < 2:
        raise ConstructionError(f"p={p} is not prime")
    if paper_window and not (2 ** (8 * q) < p < 2 ** (9 * q)):
        raise ConstructionError("p outside the requested window")
    xs = list(range(q))
    banned = {(-x) % p for x in xs}
    ys = [v for v in range(p) if v not in banned][:r]
    if len(ys) < r:
        raise ConstructionError("not enough field elements for the y side")
    M = [[pow(x + y, p - 2, p) for y in ys] for x in xs]
    checked = 0
    for k in range(1, min(q, r) + 1):
        for rows in combinations(range(q), k):
            for cols in combinations(range(r), k):
                sub = [[M[i][j] for j in cols] for i in rows]
                checked += 1
                if _det_mod(sub, p) == 0:
                    return M, {"generic": False, "minors_checked": checked,
                               "failing": (rows, cols)}
    return M, {"generic": True, "minors_checked": checked, "failing": None}
