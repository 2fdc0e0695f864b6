"""CNF container, DIMACS export, and a deterministic CDCL SAT solver.

Two-watched-literal propagation, first-UIP clause learning, VSIDS-style
activities with phase saving and Luby restarts. Small and dependency-free;
ties in branching break toward the lowest variable index so runs repeat
bit-for-bit.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field


@dataclass
class CnfFormula:
    n_vars: int = 0
    clauses: list[list[int]] = field(default_factory=list)

    def new_var(self) -> int:
        self.n_vars += 1
        return self.n_vars

    def new_vars(self, k: int) -> list[int]:
        return [self.new_var() for _ in range(k)]

    def add_clause(self, lits) -> None:
        lits = list(lits)
        if not lits:
            raise ValueError("empty clause")
        for l in lits:
            if not isinstance(l, int) or l == 0 or abs(l) > self.n_vars:
                raise ValueError(f"bad literal {l!r} (have {self.n_vars} vars)")
        self.clauses.append(lits)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.n_vars} {len(self.clauses)}"]
        lines += [" ".join(map(str, cl)) + " 0" for cl in self.clauses]
        return "\n".join(lines) + "\n"

    def copy(self) -> "CnfFormula":
        return CnfFormula(self.n_vars, [list(cl) for cl in self.clauses])


@dataclass
class SatResult:
    status: str                     # "SAT" | "UNSAT" | "BUDGET"
    model: dict[int, bool] | None = None
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0


def _luby(i: int) -> int:
    """1,1,2,1,1,2,4,... (1-indexed)."""
    k = i + 1
    if k & (k - 1) == 0:
        return k >> 1
    return _luby(i - (1 << (k.bit_length() - 1)) + 1)


def sat_solve(
    cnf: CnfFormula,
    assumptions: tuple[int, ...] | list[int] = (),
    conflict_budget: int | None = None,
    time_budget: float | None = None,
) -> SatResult:
    """Solve cnf (plus unit assumptions); BUDGET when a limit trips first."""
    n = cnf.n_vars
    clauses = [list(cl) for cl in cnf.clauses]
    for a in assumptions:
        if a == 0 or abs(a) > n:
            raise ValueError(f"bad assumption literal {a}")
        clauses.append([a])

    value = [0] * (n + 1)       # 0 unassigned, +1 true, -1 false
    level = [0] * (n + 1)
    reason: list[int | None] = [None] * (n + 1)
    saved = [False] * (n + 1)   # phase saving
    activity = [0.0] * (n + 1)
    var_inc = 1.0
    trail: list[int] = []
    lim: list[int] = []
    qhead = 0
    watches: dict[int, list[int]] = {}
    stats = SatResult("BUDGET")
    deadline = time.monotonic() + time_budget if time_budget is not None else None

    def val(lit: int) -> int:
        v = value[abs(lit)]
        return v if lit > 0 else -v

    def enqueue(lit: int, why: int | None) -> None:
        v = abs(lit)
        value[v] = 1 if lit > 0 else -1
        level[v] = len(lim)
        reason[v] = why
        trail.append(lit)

    def attach(ci: int) -> bool:
        """Set up watches; returns False on immediate top-level conflict."""
        cl = clauses[ci]
        if len(cl) == 1:
            if val(cl[0]) < 0:
                return False
            if val(cl[0]) == 0:
                enqueue(cl[0], ci)
            return True
        watches.setdefault(cl[0], []).append(ci)
        watches.setdefault(cl[1], []).append(ci)
        return True

    for ci in range(len(clauses)):
        if not attach(ci):
            return SatResult("UNSAT", conflicts=stats.conflicts)

    def propagate() -> int | None:
        nonlocal qhead
        while qhead < len(trail):
            lit = trail[qhead]
            qhead += 1
            stats.propagations += 1
            false_lit = -lit
            ws = watches.get(false_lit, [])
            keep: list[int] = []
            i = 0
            while i < len(ws):
                ci = ws[i]
                i += 1
                cl = clauses[ci]
                if cl[0] == false_lit:
                    cl[0], cl[1] = cl[1], cl[0]
                if val(cl[0]) > 0:
                    keep.append(ci)
                    continue
                moved = False
                for k in range(2, len(cl)):
                    if val(cl[k]) >= 0:
                        cl[1], cl[k] = cl[k], cl[1]
                        watches.setdefault(cl[1], []).append(ci)
                        moved = True
                        break
                if moved:
                    continue
                keep.append(ci)
                if val(cl[0]) < 0:
                    keep.extend(ws[i:])
                    watches[false_lit] = keep
                    return ci
                enqueue(cl[0], ci)
            watches[false_lit] = keep
        return None

    def bump(v: int) -> None:
        nonlocal var_inc
        activity[v] += var_inc
        if activity[v] > 1e100:
            for u in range(1, n + 1):
                activity[u] *= 1e-100
            var_inc *= 1e-100

    def analyze(confl: int) -> tuple[list[int], int]:
        learnt = [0]
        seen = [False] * (n + 1)
        counter = 0
        p = None
        idx = len(trail) - 1
        ci: int | None = confl
        while True:
            cl = clauses[ci]
            for q in cl:
                if p is not None and q == p:
                    continue
                v = abs(q)
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    bump(v)
                    if level[v] == len(lim):
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(trail[idx])]:
                idx -= 1
            p = trail[idx]
            seen[abs(p)] = False
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            ci = reason[abs(p)]
        learnt[0] = -p
        back = 0
        if len(learnt) > 1:
            # watch a literal from the backjump level in slot 1
            hi = max(range(1, len(learnt)), key=lambda k: level[abs(learnt[k])])
            learnt[1], learnt[hi] = learnt[hi], learnt[1]
            back = level[abs(learnt[1])]
        return learnt, back

    def cancel_until(lvl: int) -> None:
        nonlocal qhead
        while trail and level[abs(trail[-1])] > lvl:
            lit = trail.pop()
            v = abs(lit)
            saved[v] = lit > 0
            value[v] = 0
            reason[v] = None
        del lim[lvl:]
        qhead = len(trail)

    def decide() -> int | None:
        best, best_act = None, -1.0
        for v in range(1, n + 1):
            if value[v] == 0 and activity[v] > best_act:
                best, best_act = v, activity[v]
        if best is None:
            return None
        return best if saved[best] else -best

    restarts = 0
    conflicts_until_restart = 64 * _luby(1)
    confl = propagate()
    if confl is not None:
        return SatResult("UNSAT", conflicts=stats.conflicts)
    while True:
        if deadline is not None and time.monotonic() > deadline:
            return SatResult("BUDGET", conflicts=stats.conflicts,
                             decisions=stats.decisions,
                             propagations=stats.propagations)
        confl = propagate()
        if confl is not None:
            stats.conflicts += 1
            if conflict_budget is not None and stats.conflicts > conflict_budget:
                return SatResult("BUDGET", conflicts=stats.conflicts,
                                 decisions=stats.decisions,
                                 propagations=stats.propagations)
            if not lim:
                return SatResult("UNSAT", conflicts=stats.conflicts,
                                 decisions=stats.decisions,
                                 propagations=stats.propagations)
            learnt, back = analyze(confl)
            cancel_until(back)
            ci = len(clauses)
            clauses.append(learnt)
            if len(learnt) > 1:
                watches.setdefault(learnt[0], []).append(ci)
                watches.setdefault(learnt[1], []).append(ci)
            enqueue(learnt[0], ci)
            var_inc /= 0.95
            conflicts_until_restart -= 1
            if conflicts_until_restart <= 0:
                restarts += 1
                conflicts_until_restart = 64 * _luby(restarts + 1)
                cancel_until(0)
            continue
        lit = decide()
        if lit is None:
            model = {v: value[v] > 0 for v in range(1, n + 1)}
            return SatResult("SAT", model=model, conflicts=stats.conflicts,
                             decisions=stats.decisions,
                             propagations=stats.propagations)
        stats.decisions += 1
        lim.append(len(trail))
        enqueue(lit, None)
