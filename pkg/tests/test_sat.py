"""CDCL solver checked against brute-force enumeration on random formulas."""
import itertools

import numpy as np
import pytest

from ipcamo.cnf import CnfFormula, SatResult, _luby, sat_solve


def brute_force_sat(cnf: CnfFormula, assumptions=()) -> bool:
    clauses = [list(cl) for cl in cnf.clauses] + [[a] for a in assumptions]
    for bits in itertools.product((False, True), repeat=cnf.n_vars):
        val = {i + 1: b for i, b in enumerate(bits)}
        if all(any(val[abs(l)] == (l > 0) for l in cl) for cl in clauses):
            return True
    return False


def model_satisfies(cnf: CnfFormula, model: dict[int, bool], assumptions=()) -> bool:
    clauses = [list(cl) for cl in cnf.clauses] + [[a] for a in assumptions]
    return all(any(model[abs(l)] == (l > 0) for l in cl) for cl in clauses)


def random_cnf(rng, n_vars, n_clauses, width=3) -> CnfFormula:
    cnf = CnfFormula()
    cnf.new_vars(n_vars)
    for _ in range(n_clauses):
        k = 1 + int(rng.integers(width))
        vs = rng.choice(n_vars, size=min(k, n_vars), replace=False) + 1
        cnf.add_clause([int(v) if rng.integers(2) else -int(v) for v in vs])
    return cnf


def test_trivial_cases():
    cnf = CnfFormula()
    x = cnf.new_var()
    assert sat_solve(cnf).status == "SAT"  # no clauses
    cnf.add_clause([x])
    cnf.add_clause([-x])
    assert sat_solve(cnf).status == "UNSAT"


def test_unit_propagation_chain():
    cnf = CnfFormula()
    vs = cnf.new_vars(6)
    cnf.add_clause([vs[0]])
    for a, b in zip(vs, vs[1:]):
        cnf.add_clause([-a, b])  # a -> b
    res = sat_solve(cnf)
    assert res.status == "SAT"
    assert all(res.model[v] for v in vs)
    assert res.decisions == 0  # pure propagation


@pytest.mark.parametrize("seed", range(40))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    cnf = random_cnf(rng, n_vars=2 + int(rng.integers(7)),
                     n_clauses=int(rng.integers(1, 25)))
    res = sat_solve(cnf)
    expected = brute_force_sat(cnf)
    assert (res.status == "SAT") == expected
    if expected:
        assert model_satisfies(cnf, res.model)


def test_assumptions():
    cnf = CnfFormula()
    a, b = cnf.new_vars(2)
    cnf.add_clause([a, b])
    res = sat_solve(cnf, assumptions=[-a])
    assert res.status == "SAT" and res.model[b]
    assert sat_solve(cnf, assumptions=[-a, -b]).status == "UNSAT"
    with pytest.raises(ValueError, match="assumption"):
        sat_solve(cnf, assumptions=[5])


def test_assumptions_do_not_mutate_formula():
    cnf = CnfFormula()
    a = cnf.new_var()
    cnf.add_clause([a, -a])
    before = [list(cl) for cl in cnf.clauses]
    sat_solve(cnf, assumptions=[-a])
    assert cnf.clauses == before


def test_deterministic_reruns():
    rng = np.random.default_rng(123)
    cnf = random_cnf(rng, n_vars=9, n_clauses=35)
    r1 = sat_solve(cnf)
    r2 = sat_solve(cnf)
    assert (r1.status, r1.model, r1.conflicts, r1.decisions) == \
           (r2.status, r2.model, r2.conflicts, r2.decisions)


def test_conflict_budget_trips():
    # pigeonhole PHP(4,3): 4 pigeons, 3 holes; UNSAT and needs real search
    cnf = CnfFormula()
    p = {(i, j): cnf.new_var() for i in range(4) for j in range(3)}
    for i in range(4):
        cnf.add_clause([p[(i, j)] for j in range(3)])
    for j in range(3):
        for i1 in range(4):
            for i2 in range(i1 + 1, 4):
                cnf.add_clause([-p[(i1, j)], -p[(i2, j)]])
    assert sat_solve(cnf).status == "UNSAT"
    res = sat_solve(cnf, conflict_budget=1)
    assert res.status == "BUDGET" and res.model is None
    assert sat_solve(cnf, time_budget=0.0).status == "BUDGET"


def test_luby_sequence():
    got = [_luby(i) for i in range(1, 16)]
    assert got == [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]


def test_dimacs_and_validation():
    cnf = CnfFormula()
    a, b = cnf.new_vars(2)
    cnf.add_clause([a, -b])
    assert cnf.to_dimacs() == "p cnf 2 1\n1 -2 0\n"
    with pytest.raises(ValueError, match="empty"):
        cnf.add_clause([])
    with pytest.raises(ValueError, match="bad literal"):
        cnf.add_clause([3])
    with pytest.raises(ValueError, match="bad literal"):
        cnf.add_clause([0])
    c2 = cnf.copy()
    c2.add_clause([b])
    assert len(cnf.clauses) == 1  # copies are independent
