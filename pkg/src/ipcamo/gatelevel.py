"""Small gate-level netlist IR: named nets, evaluation, const-prop, strashing."""
from __future__ import annotations

from dataclasses import dataclass, field

from .aig import AigGraph, NodeType

# unary: buf, not; n-ary: and, or, nand; binary: xor, xnor; leaf: input, const0, const1
OPS = {"input", "const0", "const1", "buf", "not", "and", "or", "nand", "xor", "xnor"}
_COMMUTATIVE = {"and", "or", "nand", "xor", "xnor"}


@dataclass(frozen=True)
class Gate:
    op: str
    ins: tuple[str, ...] = ()

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown gate op {self.op!r}")
        if self.op in ("input", "const0", "const1") and self.ins:
            raise ValueError(f"{self.op} gate takes no inputs")
        if self.op in ("buf", "not") and len(self.ins) != 1:
            raise ValueError(f"{self.op} gate takes one input")
        if self.op in ("xor", "xnor") and len(self.ins) != 2:
            raise ValueError(f"{self.op} gate takes two inputs")
        if self.op in ("and", "or", "nand") and len(self.ins) < 1:
            raise ValueError(f"{self.op} gate needs at least one input")


@dataclass
class Circuit:
    """Combinational netlist; gates maps each net to its (unique) driver."""

    gates: dict[str, Gate] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def add(self, net: str, op: str, *ins: str) -> str:
        if net in self.gates:
            raise ValueError(f"net {net!r} already driven")
        self.gates[net] = Gate(op, tuple(ins))
        return net

    @property
    def inputs(self) -> list[str]:
        return [n for n, g in self.gates.items() if g.op == "input"]

    def cell_count(self) -> int:
        """Physical cell estimate; inputs and constant ties are free."""
        return sum(1 for g in self.gates.values()
                   if g.op not in ("input", "const0", "const1"))

    def topo_order(self) -> list[str]:
        order: list[str] = []
        state: dict[str, int] = {}
        for root in self.gates:
            stack = [(root, False)]
            while stack:
                net, expanded = stack.pop()
                if expanded:
                    state[net] = 2
                    order.append(net)
                    continue
                st = state.get(net, 0)
                if st == 2:
                    continue
                if st == 1:
                    raise ValueError(f"combinational cycle through net {net!r}")
                if net not in self.gates:
                    raise ValueError(f"undriven net {net!r}")
                state[net] = 1
                stack.append((net, True))
                for src in self.gates[net].ins:
                    stack.append((src, False))
        return order

    def evaluate(self, assignment: dict[str, int]) -> dict[str, int]:
        """Output values under a complete primary-input assignment."""
        val: dict[str, int] = {}
        for net in self.topo_order():
            g = self.gates[net]
            if g.op == "input":
                if net not in assignment:
                    raise KeyError(f"missing assignment for input {net!r}")
                val[net] = int(bool(assignment[net]))
                continue
            ins = [val[s] for s in g.ins]
            val[net] = _EVAL[g.op](ins)
        return {o: val[o] for o in self.outputs}

    def renamed(self, mapping: dict[str, str]) -> "Circuit":
        """Copy with nets renamed; unmapped nets keep their name."""
        f = lambda n: mapping.get(n, n)
        gates = {f(n): Gate(g.op, tuple(f(s) for s in g.ins))
                 for n, g in self.gates.items()}
        return Circuit(gates=gates, outputs=[f(o) for o in self.outputs])


_EVAL = {
    "const0": lambda ins: 0,
    "const1": lambda ins: 1,
    "buf": lambda ins: ins[0],
    "not": lambda ins: 1 - ins[0],
    "and": lambda ins: int(all(ins)),
    "or": lambda ins: int(any(ins)),
    "nand": lambda ins: 1 - int(all(ins)),
    "xor": lambda ins: ins[0] ^ ins[1],
    "xnor": lambda ins: 1 - (ins[0] ^ ins[1]),
}


def circuit_to_obj(c: Circuit) -> dict:
    return {
        "gates": {n: {"op": g.op, "ins": list(g.ins)} for n, g in sorted(c.gates.items())},
        "outputs": list(c.outputs),
    }


def circuit_from_obj(obj: dict) -> Circuit:
    gates = {n: Gate(rec["op"], tuple(rec["ins"])) for n, rec in obj["gates"].items()}
    return Circuit(gates=gates, outputs=list(obj["outputs"]))


def from_aig(g: AigGraph, prefix: str = "") -> Circuit:
    """Lower a canonical AIG to gates; PIs with equal names share one input net."""
    bad = g.issues()
    if bad:
        raise ValueError("graph is not canonical: " + "; ".join(bad))
    c = Circuit()
    preds = g.pred_table()
    net_of: dict[int, str] = {}

    def lit(src: int, inv: bool, dst_net: str, k: int) -> str:
        if not inv:
            return net_of[src]
        nn = f"{dst_net}__n{k}"
        c.add(nn, "not", net_of[src])
        return nn

    for i, t in enumerate(g.types):
        if t is NodeType.PI:
            name = prefix + g.names[i]
            if name not in c.gates:
                c.add(name, "input")
            net_of[i] = name
        elif t is NodeType.AND:
            net = f"{prefix}n{i}"
            ins = [lit(s, inv, net, k) for k, (s, inv) in enumerate(preds[i])]
            c.add(net, "and", *ins)
            net_of[i] = net
        else:
            net = prefix + g.names[i]
            (s, inv), = preds[i]
            c.add(net, "not" if inv else "buf", net_of[s])
            net_of[i] = net
            c.outputs.append(net)
    return c


def prune(c: Circuit) -> Circuit:
    """Keep only the fan-in cones of the outputs (inputs outside them drop too)."""
    keep: set[str] = set()
    stack = list(c.outputs)
    while stack:
        net = stack.pop()
        if net in keep:
            continue
        keep.add(net)
        stack.extend(c.gates[net].ins)
    return Circuit(gates={n: g for n, g in c.gates.items() if n in keep},
                   outputs=list(c.outputs))


def simplify(c: Circuit) -> Circuit:
    """Constant propagation, buffer elision and structural hashing.

    Structurally identical cones collapse to one net, so a miter of two
    copies of the same circuit reduces to a constant without any search.
    """
    rep: dict[str, str] = {}       # net -> representative net in the new circuit
    out = Circuit()
    hashed: dict[tuple, str] = {}
    const_of: dict[str, int] = {}  # representative -> constant value, if known
    compl: dict[str, str] = {}     # representative -> its known complement
    _OPPOSITE = {"xor": "xnor", "xnor": "xor", "and": "nand", "nand": "and"}

    def mark_compl(a: str, b: str) -> None:
        compl[a] = b
        compl[b] = a

    def emit(net: str, op: str, ins: tuple[str, ...]) -> str:
        key = (op, tuple(sorted(ins)) if op in _COMMUTATIVE else ins)
        if key in hashed:
            return hashed[key]
        out.gates[net] = Gate(op, ins)
        hashed[key] = net
        if op == "const0":
            const_of[net] = 0
        elif op == "const1":
            const_of[net] = 1
        elif op == "not":
            mark_compl(net, ins[0])
        elif op in _OPPOSITE:
            twin = hashed.get((_OPPOSITE[op], tuple(sorted(ins))))
            if twin is not None:
                mark_compl(net, twin)
        return net

    for net in c.topo_order():
        g = c.gates[net]
        if g.op == "input":
            out.gates.setdefault(net, g)
            rep[net] = net
            continue
        ins = tuple(rep[s] for s in g.ins)
        consts = [const_of.get(s) for s in ins]
        op = g.op

        if op == "buf":
            rep[net] = ins[0]
            continue
        if op == "not":
            v = consts[0]
            if v is not None:
                rep[net] = emit(net, "const1" if v == 0 else "const0", ())
            elif ins[0] in compl:  # double negation
                rep[net] = compl[ins[0]]
            else:
                rep[net] = emit(net, "not", ins)
            continue
        if op in ("const0", "const1"):
            rep[net] = emit(net, op, ())
            continue
        if op in ("and", "nand"):
            if 0 in consts:
                rep[net] = emit(net, "const1" if op == "nand" else "const0", ())
                continue
            live = tuple(dict.fromkeys(s for s, v in zip(ins, consts) if v != 1))
            if any(compl.get(a) in live for a in live):  # x AND NOT x
                rep[net] = emit(net, "const1" if op == "nand" else "const0", ())
            elif not live:  # all inputs tied to 1
                rep[net] = emit(net, "const0" if op == "nand" else "const1", ())
            elif len(live) == 1 and op == "and":
                rep[net] = live[0]
            elif len(live) == 1:
                rep[net] = emit(net, "not", live)
            else:
                rep[net] = emit(net, op, live)
            continue
        if op == "or":
            if 1 in consts:
                rep[net] = emit(net, "const1", ())
                continue
            live = tuple(dict.fromkeys(s for s, v in zip(ins, consts) if v != 0))
            if any(compl.get(a) in live for a in live):  # x OR NOT x
                rep[net] = emit(net, "const1", ())
            elif not live:
                rep[net] = emit(net, "const0", ())
            elif len(live) == 1:
                rep[net] = live[0]
            else:
                rep[net] = emit(net, "or", live)
            continue
        # xor / xnor
        a, b = ins
        va, vb = consts
        odd = op == "xor"
        if va is not None and vb is not None:
            bit = (va ^ vb) if odd else 1 - (va ^ vb)
            rep[net] = emit(net, "const1" if bit else "const0", ())
        elif a == b:
            rep[net] = emit(net, "const0" if odd else "const1", ())
        elif compl.get(a) == b:
            rep[net] = emit(net, "const1" if odd else "const0", ())
        elif va is not None or vb is not None:
            x, v = (b, va) if va is not None else (a, vb)
            plain = (v == 0) if odd else (v == 1)
            rep[net] = x if plain else emit(net, "not", (x,))
        else:
            rep[net] = emit(net, op, ins)

    outs = []
    for o in c.outputs:
        r = rep[o]
        if r not in out.gates:  # representative is a raw input net
            out.gates.setdefault(r, Gate("input"))
        if r != o and o not in out.gates:  # keep the output's public name
            g = out.gates[r]
            out.gates[o] = g if g.op in ("const0", "const1") else Gate("buf", (r,))
            r = o
        outs.append(r)
    out.outputs = outs
    return prune(out)


def substitute(c: Circuit, binding: dict[str, int]) -> Circuit:
    """Tie some inputs to constants and simplify the result."""
    gates = dict(c.gates)
    for net, bit in binding.items():
        if net not in gates or gates[net].op != "input":
            raise ValueError(f"{net!r} is not an input net")
        gates[net] = Gate("const1" if bit else "const0")
    return simplify(Circuit(gates=gates, outputs=list(c.outputs)))


def miter(c1: Circuit, c2: Circuit) -> Circuit:
    """Single-output circuit that is 1 iff the two circuits disagree.

    Inputs with equal names are shared; the output lists must align.
    """
    if len(c1.outputs) != len(c2.outputs):
        raise ValueError("output count mismatch")
    m = Circuit()
    out_nets = []
    for src, tag in ((c1, "a"), (c2, "b")):
        ren = {n: n if g.op == "input" else f"m_{tag}_{n}"
               for n, g in src.gates.items()}
        part = src.renamed(ren)
        for n, g in part.gates.items():
            if n in m.gates:
                if g.op == "input" and m.gates[n].op == "input":
                    continue
                raise ValueError(f"net collision on {n!r}")
            m.gates[n] = g
        out_nets.append([ren[o] for o in src.outputs])
    diffs = []
    for k, (o1, o2) in enumerate(zip(*out_nets)):
        diffs.append(m.add(f"m_diff{k}", "xor", o1, o2))
    if len(diffs) == 1:
        m.add("m_out", "buf", diffs[0])
    else:
        m.add("m_out", "or", *diffs)
    m.outputs = ["m_out"]
    return m
