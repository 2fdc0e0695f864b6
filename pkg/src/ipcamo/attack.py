"""Attack-side tooling: CNF encoding, equivalence checking and the DIP loop.

The camouflaged netlist is re-expressed as an ordinary circuit with extra
key inputs (2 bits per candidate cell), so the oracle-guided SAT attack and
the logic-locking baseline share one code path.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .aig import AigGraph
from .camouflage import CamouflagedNetlist
from .cnf import CnfFormula, sat_solve
from .covert import CovertConfig, CovertGateKind, config_key_bits
from .gatelevel import Circuit, Gate, from_aig, miter, prune, simplify

# -- Tseitin ------------------------------------------------------------------


def tseitin_encode(
    cnf: CnfFormula,
    c: Circuit,
    inputs: dict[str, int],
    true_lit: int,
) -> dict[str, int]:
    """Encode the circuit over pre-assigned input literals; returns net -> literal.

    inputs may bind input nets to any literal, including +-true_lit for
    constants. One auxiliary variable per internal net; an AND costs three
    clauses.
    """
    lit: dict[str, int] = {}
    for net in c.topo_order():
        g = c.gates[net]
        if g.op == "input":
            if net not in inputs:
                raise KeyError(f"no literal bound for input {net!r}")
            lit[net] = inputs[net]
            continue
        if g.op == "const1":
            lit[net] = true_lit
            continue
        if g.op == "const0":
            lit[net] = -true_lit
            continue
        ins = [lit[s] for s in g.ins]
        if g.op == "buf":
            lit[net] = ins[0]
            continue
        if g.op == "not":
            lit[net] = -ins[0]
            continue
        o = cnf.new_var()
        if g.op in ("and", "nand"):
            w = o if g.op == "and" else -o
            for i in ins:
                cnf.add_clause([-w, i])
            cnf.add_clause([w] + [-i for i in ins])
        elif g.op == "or":
            for i in ins:
                cnf.add_clause([o, -i])
            cnf.add_clause([-o] + ins)
        elif g.op in ("xor", "xnor"):
            a, b = ins
            w = o if g.op == "xor" else -o
            cnf.add_clause([-w, a, b])
            cnf.add_clause([-w, -a, -b])
            cnf.add_clause([w, -a, b])
            cnf.add_clause([w, a, -b])
        lit[net] = o
    return lit


# -- Equivalence --------------------------------------------------------------


def _as_circuit(x) -> Circuit:
    return from_aig(x) if isinstance(x, AigGraph) else x


def equivalence_check(a, b, time_budget: float | None = None) -> bool:
    """Exact combinational equivalence; truth tables when small, miter-SAT else.

    Both circuits are simplified and pruned first, so inputs with no path to
    an output never enter the comparison and structurally identical designs
    collapse without search.
    """
    c1 = prune(simplify(_as_circuit(a)))
    c2 = prune(simplify(_as_circuit(b)))
    if len(c1.outputs) != len(c2.outputs):
        return False
    support = sorted(set(c1.inputs) | set(c2.inputs))
    if len(support) <= 16:
        for idx in range(2 ** len(support)):
            assign = {n: (idx >> k) & 1 for k, n in enumerate(support)}
            v1 = [*c1.evaluate(assign).values()]
            v2 = [*c2.evaluate(assign).values()]
            if v1 != v2:
                return False
        return True
    m = simplify(miter(c1, c2))
    g = m.gates[m.outputs[0]]
    if g.op == "const0":
        return True
    if g.op == "const1":
        return False
    cnf = CnfFormula()
    t = cnf.new_var()
    cnf.add_clause([t])
    lits = tseitin_encode(cnf, m, {n: cnf.new_var() for n in m.inputs}, t)
    cnf.add_clause([lits[m.outputs[0]]])
    res = sat_solve(cnf, time_budget=time_budget)
    if res.status == "BUDGET":
        raise TimeoutError("equivalence check exceeded its time budget")
    return res.status == "UNSAT"


# -- Keyed netlists -----------------------------------------------------------


@dataclass
class KeyedNetlist:
    """A circuit whose inputs split into payload inputs and key inputs."""

    circuit: Circuit
    key_inputs: list[str]
    correct_key: list[int]
    elements: list[dict] = field(default_factory=list)

    @property
    def n_key_bits(self) -> int:
        return len(self.key_inputs)

    @property
    def payload_inputs(self) -> list[str]:
        keys = set(self.key_inputs)
        return [n for n in self.circuit.inputs if n not in keys]

    def evaluate(self, key: list[int], assignment: dict[str, int]) -> dict[str, int]:
        full = dict(assignment)
        full.update({n: k for n, k in zip(self.key_inputs, key)})
        return self.circuit.evaluate(full)


def _keyed_cell(c: Circuit, out: str, normal: str, k1: str, k0: str) -> None:
    """out = k1 ? 1 : (k0 ? 0 : normal)."""
    nk0 = c.add(f"{out}__nk0", "not", k0)
    pick = c.add(f"{out}__pick", "and", nk0, normal)
    c.add(out, "or", k1, pick)


def keyize_netlist(nl: CamouflagedNetlist) -> KeyedNetlist:
    """Attacker's key-programmable model of a camouflaged netlist.

    Every covert placement and every genuine inverter/buffer/NAND cell is a
    candidate with 2 key bits: 00 keeps the true cell function, 01 ties the
    output low, 10 (and its alias 11) ties it high.
    """
    src = nl.appearance_view
    by_out = {p.out: p for p in nl.placements}
    consumed: set[str] = set()
    for p in nl.placements:
        consumed.add(p.out)
        if p.kind is CovertGateKind.FB:  # second cell of the inverter pair
            consumed.add(src.gates[p.out].ins[0])

    candidates: list[tuple[str, dict]] = []
    for net in sorted(src.gates):
        g = src.gates[net]
        if net in by_out:
            p = by_out[net]
            candidates.append((net, {
                "kind": p.kind.value, "covert": True, "config": p.config.value,
                "real_in": p.real_in, "dummy_in": p.dummy_in,
            }))
        elif g.op in ("not", "buf", "nand") and net not in consumed:
            candidates.append((net, {"kind": g.op, "covert": False}))

    cand_nets = {n for n, _ in candidates}
    c = Circuit()
    for net, g in src.gates.items():
        if net not in cand_nets:
            c.gates[net] = g
    c.outputs = list(src.outputs)
    key_inputs: list[str] = []
    correct: list[int] = []
    elements: list[dict] = []
    for i, (net, info) in enumerate(candidates):
        k1 = c.add(f"key{2 * i}", "input")
        k0 = c.add(f"key{2 * i + 1}", "input")
        key_inputs += [k1, k0]
        if info["covert"]:
            cfg = CovertConfig(info["config"])
            b1, b0 = config_key_bits(cfg)
            kind = CovertGateKind(info["kind"])
            if kind is CovertGateKind.UT_A:
                normal = info["real_in"]  # true pass-through is a buffer
            elif kind is CovertGateKind.UT_B:
                normal = c.add(f"{net}__norm", "not", info["real_in"])
            elif kind is CovertGateKind.FI:  # no pass mode; key 00 reads the mask
                normal = c.add(f"{net}__norm", "not", info["real_in"])
            else:  # FB
                normal = info["real_in"]
        else:
            b1 = b0 = 0
            g = src.gates[net]
            if g.op == "not":
                normal = c.add(f"{net}__norm", "not", g.ins[0])
            elif g.op == "buf":
                normal = g.ins[0]
            else:
                normal = c.add(f"{net}__norm", "nand", *g.ins)
        correct += [b1, b0]
        _keyed_cell(c, net, normal, k1, k0)
        elements.append({"out": net, **info})
    return KeyedNetlist(prune(c), key_inputs, correct, elements)


def make_ll_baseline(f: AigGraph, n_key_bits: int, seed: int = 0) -> KeyedNetlist:
    """Area-matched logic-locking reference: XOR/XNOR key gates on random nets."""
    c = _as_circuit(f)
    sites = sorted(n for n, g in c.gates.items() if g.op not in ("input",))
    if n_key_bits > len(sites):
        raise ValueError(f"only {len(sites)} lockable nets for {n_key_bits} key bits")
    rng = np.random.default_rng(seed)
    chosen = [sites[i] for i in sorted(rng.choice(len(sites), size=n_key_bits,
                                                  replace=False))]
    locked = Circuit(gates=dict(c.gates), outputs=list(c.outputs))
    key_inputs, correct = [], []
    for i, net in enumerate(chosen):
        raw = f"{net}__raw"
        locked.gates[raw] = locked.gates[net]
        k = locked.add(f"key{i}", "input")
        key_inputs.append(k)
        flavor = int(rng.integers(2))  # 0: XOR (key 0), 1: XNOR (key 1)
        locked.gates[net] = Gate("xnor" if flavor else "xor", (raw, k))
        correct.append(flavor)
    return KeyedNetlist(locked, key_inputs, correct)


# -- DIP-based SAT attack -----------------------------------------------------


@dataclass
class DipTrace:
    status: str                      # "solved" | "budget"
    key: list[int] | None
    iterations: int
    dips: list[dict] = field(default_factory=list)
    conflicts: int = 0
    elapsed: float = 0.0


def make_oracle(kn: KeyedNetlist):
    """Black-box oracle: the netlist evaluated under its correct key."""
    def oracle(assignment: dict[str, int]) -> dict[str, int]:
        return kn.evaluate(kn.correct_key, assignment)
    return oracle


def dip_attack(
    kn: KeyedNetlist,
    oracle,
    time_budget: float | None = None,
    max_iters: int = 10_000,
) -> DipTrace:
    """Classic oracle-guided attack: find distinguishing inputs until the
    two-key miter is UNSAT, then read a consistent key off the constraints."""
    t0 = time.monotonic()
    xs = kn.payload_inputs
    out_net = kn.circuit.outputs[0]

    cnf = CnfFormula()
    t = cnf.new_var()
    cnf.add_clause([t])
    x_vars = {n: cnf.new_var() for n in xs}
    ka = {n: cnf.new_var() for n in kn.key_inputs}
    kb = {n: cnf.new_var() for n in kn.key_inputs}
    oa = tseitin_encode(cnf, kn.circuit, {**x_vars, **ka}, t)[out_net]
    ob = tseitin_encode(cnf, kn.circuit, {**x_vars, **kb}, t)[out_net]
    cnf.add_clause([oa, ob])
    cnf.add_clause([-oa, -ob])

    observations: list[tuple[dict[str, int], int]] = []

    def add_constraints(target: CnfFormula, keys: dict[str, int], tl: int,
                        obs) -> None:
        for dip, y in obs:
            binding = {n: tl if dip[n] else -tl for n in xs}
            o = tseitin_encode(target, kn.circuit, {**binding, **keys}, tl)[out_net]
            target.add_clause([o if y else -o])

    trace = DipTrace("budget", None, 0)
    proved = False
    while trace.iterations < max_iters:
        remaining = None
        if time_budget is not None:
            remaining = time_budget - (time.monotonic() - t0)
            if remaining <= 0:
                trace.elapsed = time.monotonic() - t0
                return trace
        res = sat_solve(cnf, time_budget=remaining)
        trace.conflicts += res.conflicts
        if res.status == "BUDGET":
            trace.elapsed = time.monotonic() - t0
            return trace
        if res.status == "UNSAT":
            proved = True
            break
        dip = {n: int(res.model[x_vars[n]]) for n in xs}
        y = oracle(dip)[out_net]
        observations.append((dip, y))
        trace.dips.append(dip)
        trace.iterations += 1
        add_constraints(cnf, ka, t, [observations[-1]])
        add_constraints(cnf, kb, t, [observations[-1]])

    if not proved:  # ran out of iterations with distinguishing inputs left
        trace.elapsed = time.monotonic() - t0
        return trace

    # key extraction: any key satisfying every recorded observation
    final = CnfFormula()
    tf = final.new_var()
    final.add_clause([tf])
    kf = {n: final.new_var() for n in kn.key_inputs}
    add_constraints(final, kf, tf, observations)
    remaining = None
    if time_budget is not None:
        remaining = time_budget - (time.monotonic() - t0)
        if remaining <= 0:
            trace.elapsed = time.monotonic() - t0
            return trace
    res = sat_solve(final, time_budget=remaining)
    trace.conflicts += res.conflicts
    trace.elapsed = time.monotonic() - t0
    if res.status != "SAT":
        return trace
    trace.status = "solved"
    trace.key = [int(res.model[kf[n]]) for n in kn.key_inputs]
    return trace


def key_is_correct(kn: KeyedNetlist, key: list[int]) -> bool:
    """Does the recovered key realize the oracle function (not necessarily
    bit-identical to the designer's key, thanks to the 11/10 alias)?"""
    keyed = _bind_key(kn, key)
    truth = _bind_key(kn, kn.correct_key)
    return equivalence_check(keyed, truth)


def _bind_key(kn: KeyedNetlist, key: list[int]) -> Circuit:
    gates = dict(kn.circuit.gates)
    for n, k in zip(kn.key_inputs, key):
        gates[n] = Gate("const1" if k else "const0")
    return simplify(Circuit(gates=gates, outputs=list(kn.circuit.outputs)))
