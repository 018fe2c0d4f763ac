"""Exact search, counting, integral solve, greedy simulation, Cauchy matrices."""

import pytest

from designlat.applications import (build_nonpartite, builtin_instance,
                                    complete_design, complete_multigraph)
from designlat.errors import ConstructionError
from designlat.solver import (BUDGET, DEFAULT_BUDGET, NOT_IN_LATTICE, SOLVED,
                              UNSAT, SearchConfig, count_exact, generic_matrix,
                              nibble_greedy, solve_exact, solve_integral,
                              verify)
from designlat.vectors import Selection

from oracles import latin_squares, triangle_decompositions


def _triangles_on(n, lam=1):
    return build_nonpartite(complete_design(3, 2),
                            complete_multigraph(n, 2, lam=lam), 3, n)


def test_fano_solved_and_verified(fano):
    res = solve_exact(fano.system, fano.complex, fano.target)
    assert res.status == SOLVED
    items = res.selection.items()
    assert len(items) == 7 and all(c == 1 for _, _, c in items)
    ok, report = verify(fano.system, fano.complex, res.selection, fano.target)
    assert ok and report["ok"] and not report["mismatches"]


def test_fano_count_matches_bruteforce(fano):
    assert count_exact(fano.system, fano.complex, fano.target) == 30
    assert triangle_decompositions(7) == 30


def test_latin3_count_matches_bruteforce(latin3):
    assert count_exact(latin3.system, latin3.complex, latin3.target) == 12
    assert latin_squares(3) == 12


def test_k6_unsat_without_search():
    inst = _triangles_on(6)
    res = solve_exact(inst.system, inst.complex, inst.target)
    assert res.status == UNSAT and res.nodes == 0
    resi = solve_integral(inst.system, inst.complex, inst.target)
    assert resi.status == NOT_IN_LATTICE


def test_doubled_k4():
    inst = _triangles_on(4, lam=2)
    res = solve_exact(inst.system, inst.complex, inst.target)
    assert res.status == SOLVED
    items = res.selection.items()
    assert len(items) == 4 and all(c == 1 for _, _, c in items)
    assert len({p for _, p, _ in items}) == 4
    ok, _ = verify(inst.system, inst.complex, res.selection, inst.target)
    assert ok


def test_budget_status(fano):
    res = solve_exact(fano.system, fano.complex, fano.target,
                      SearchConfig(budget=1))
    assert res.status == BUDGET and res.selection is None


def test_symmetry_pruning_agrees(fano):
    plain = solve_exact(fano.system, fano.complex, fano.target)
    pruned = solve_exact(fano.system, fano.complex, fano.target,
                         SearchConfig(symmetry_pruning=True))
    assert plain.status == pruned.status == SOLVED
    ok, _ = verify(fano.system, fano.complex, pruned.selection, fano.target)
    assert ok
    assert pruned.nodes <= plain.nodes


def test_verify_tampered_selection(fano):
    res = solve_exact(fano.system, fano.complex, fano.target)
    items = res.selection.items()
    short = Selection(items[:-1])
    ok, report = verify(fano.system, fano.complex, short, fano.target)
    assert not ok and len(report["mismatches"]) == 18
    assert all(m["excess"] == -1 for m in report["mismatches"])
    with pytest.raises(ConstructionError):
        verify(fano.system, fano.complex, short, fano.target, mode="LOOSE")


def test_verify_modes_on_coefficients(fano):
    phi = next(p for m, p in fano.system.iter_embeddings(fano.complex))
    sel = Selection([("H", phi, 2)])
    G = fano.system.molecule(fano.complex, "H", phi).scale(2)
    ok_set, rep_set = verify(fano.system, fano.complex, sel, G, mode="SET")
    assert not ok_set and rep_set["mode_violation"]
    ok_int, rep_int = verify(fano.system, fano.complex, sel, G,
                             mode="INTEGRAL")
    assert ok_int and not rep_int["mismatches"]


def test_solve_integral_fano(fano):
    res = solve_integral(fano.system, fano.complex, fano.target)
    assert res.status == SOLVED
    ok, _ = verify(fano.system, fano.complex, res.selection, fano.target,
                   mode="INTEGRAL")
    assert ok


def test_nibble_deterministic_and_consistent():
    inst = _triangles_on(15)
    tr = nibble_greedy(inst.system, inst.complex, inst.target, seed=0)
    again = nibble_greedy(inst.system, inst.complex, inst.target, seed=0)
    assert [p for _, p, _ in tr.chosen] == [p for _, p, _ in again.chosen]
    assert tr.fixpoint and tr.leave.is_nonneg()
    assert len(tr.chosen) == 29 and tr.leave.norm1() == 108
    assert tr.ratio == pytest.approx(2 / 7)
    covered = inst.system.boundary(inst.complex, Selection(tr.chosen))
    assert covered + tr.leave == inst.target
    other = nibble_greedy(inst.system, inst.complex, inst.target, seed=1)
    assert [p for _, p, _ in other.chosen] != [p for _, p, _ in tr.chosen]


def test_nibble_weighted_policy(fano):
    base = nibble_greedy(fano.system, fano.complex, fano.target, seed=3)
    same = nibble_greedy(fano.system, fano.complex, fano.target, seed=3,
                         policy="WEIGHTED", weights=lambda m, p: 1)
    assert [p for _, p, _ in base.chosen] == [p for _, p, _ in same.chosen]
    half = nibble_greedy(fano.system, fano.complex, fano.target, seed=3,
                         policy="WEIGHTED", weights=lambda m, p: 0.5)
    assert half.fixpoint and half.leave.is_nonneg()
    none = nibble_greedy(fano.system, fano.complex, fano.target, seed=3,
                         policy="WEIGHTED", weights=lambda m, p: 0)
    assert not none.chosen and none.leave == fano.target


def test_generic_matrix():
    M, rep = generic_matrix(4, 2, 11)
    assert rep == {"generic": True, "minors_checked": 14, "failing": None}
    assert len(M) == 4 and len(M[0]) == 2
    _, rep2 = generic_matrix(3, 2, 5)
    assert rep2["generic"] and rep2["minors_checked"] == 9
    _, rep3 = generic_matrix(5, 3, 11)
    assert rep3["generic"] and rep3["minors_checked"] == 55
    with pytest.raises(ConstructionError):
        generic_matrix(3, 2, 3)  # p below q + r
    with pytest.raises(ConstructionError):
        generic_matrix(3, 2, 6)  # composite
    with pytest.raises(ConstructionError):
        generic_matrix(2, 2, 11, paper_window=True)
    _, repw = generic_matrix(2, 2, 65537, paper_window=True)
    assert repw["generic"]


def test_search_config_env(monkeypatch):
    monkeypatch.setenv("DESIGNLAT_BUDGET", "5")
    assert SearchConfig().budget == 5
    monkeypatch.setenv("DESIGNLAT_BUDGET", "junk")
    assert SearchConfig().budget == DEFAULT_BUDGET
    monkeypatch.delenv("DESIGNLAT_BUDGET")
    assert SearchConfig().budget == DEFAULT_BUDGET
    assert SearchConfig(budget=7).budget == 7
    with pytest.raises(ConstructionError):
        SearchConfig(budget=0)
