"""And-Inverter Graph data model, AIGER I/O, cone extraction and tensor encoding."""
from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

AIG_JSON_FORMAT = "ipcamo-aig-v1"
AAG_COMMENT = "ipcamo-aag-v1"


class NodeType(enum.Enum):
    PI = 0
    PO = 1
    AND = 2

    def one_hot(self) -> np.ndarray:
        v = np.zeros(3)
        v[self.value] = 1.0
        return v


class AigerParseError(ValueError):
    """Raised on malformed AIGER input; message carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass
class AigGraph:
    """A DAG of PI/PO/AND nodes with inversion flags on edges.

    Nodes are indexed 0..n-1 in topological order; every edge goes from a
    lower index to a higher index.
    """

    types: list[NodeType]
    edges: list[tuple[int, int, bool]]  # (src, dst, inverted)
    names: list[str | None] = field(default_factory=list)
    dummy: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.names:
            self.names = [None] * len(self.types)
        if not self.dummy:
            self.dummy = [False] * len(self.types)
        pi_k = po_k = 0
        for i, t in enumerate(self.types):
            if self.names[i] is None:
                if t is NodeType.PI:
                    self.names[i] = f"pi{pi_k}"
                elif t is NodeType.PO:
                    self.names[i] = f"po{po_k}"
            if t is NodeType.PI:
                pi_k += 1
            elif t is NodeType.PO:
                po_k += 1

    @property
    def n(self) -> int:
        return len(self.types)

    def indices(self, t: NodeType) -> list[int]:
        return [i for i, x in enumerate(self.types) if x is t]

    @property
    def pi_indices(self) -> list[int]:
        return self.indices(NodeType.PI)

    @property
    def po_indices(self) -> list[int]:
        return self.indices(NodeType.PO)

    @property
    def and_indices(self) -> list[int]:
        return self.indices(NodeType.AND)

    @property
    def pi_names(self) -> list[str]:
        """Distinct PI names in first-occurrence order (cone trees repeat names)."""
        seen, out = set(), []
        for i in self.pi_indices:
            nm = self.names[i]
            if nm not in seen:
                seen.add(nm)
                out.append(nm)
        return out

    @property
    def po_names(self) -> list[str]:
        return [self.names[i] for i in self.po_indices]

    def preds(self, i: int) -> list[tuple[int, bool]]:
        return [(s, inv) for s, d, inv in self.edges if d == i]

    def pred_table(self) -> list[list[tuple[int, bool]]]:
        tbl: list[list[tuple[int, bool]]] = [[] for _ in range(self.n)]
        for s, d, inv in self.edges:
            tbl[d].append((s, inv))
        return tbl

    def issues(self) -> list[str]:
        """Structural violations of the canonical-AIG invariants (empty = canonical)."""
        out = []
        indeg = [0] * self.n
        for s, d, inv in self.edges:
            if not (0 <= s < self.n and 0 <= d < self.n):
                out.append(f"edge ({s},{d}) out of range")
                continue
            if s >= d:
                out.append(f"edge ({s},{d}) not forward")
            indeg[d] += 1
        for i, t in enumerate(self.types):
            if t is NodeType.PI and indeg[i] != 0:
                out.append(f"PI node {i} has in-degree {indeg[i]}")
            elif t is NodeType.AND and indeg[i] != 2:
                out.append(f"AND node {i} has in-degree {indeg[i]}")
            elif t is NodeType.PO and indeg[i] != 1:
                out.append(f"PO node {i} has in-degree {indeg[i]}")
        return out

    @property
    def is_canonical(self) -> bool:
        return not self.issues()

    def is_tree(self) -> bool:
        return (
            len(self.po_indices) == 1
            and len(self.edges) == self.n - 1
            and self.is_canonical
        )

    def type_counts(self) -> dict[NodeType, int]:
        return {t: len(self.indices(t)) for t in NodeType}

    def structurally_equal(self, other: "AigGraph") -> bool:
        return self.types == other.types and sorted(self.edges) == sorted(other.edges)

    # -- JSON debug dump ----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": AIG_JSON_FORMAT,
                "types": [t.name for t in self.types],
                "names": self.names,
                "dummy": self.dummy,
                "edges": [[s, d, int(inv)] for s, d, inv in self.edges],
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "AigGraph":
        obj = json.loads(text)
        if obj.get("format") != AIG_JSON_FORMAT:
            raise ValueError(f"unsupported graph dump format: {obj.get('format')!r}")
        return AigGraph(
            types=[NodeType[t] for t in obj["types"]],
            edges=[(s, d, bool(inv)) for s, d, inv in obj["edges"]],
            names=list(obj["names"]),
            dummy=list(obj["dummy"]),
        )


@dataclass
class TensorTriple:
    """Matrix encoding of an AIG: node types, connections and inverters."""

    type_mat: np.ndarray  # N x 3
    conn_mat: np.ndarray  # N x N, strictly lower triangular support
    inv_mat: np.ndarray  # N x N

    @property
    def n(self) -> int:
        return self.type_mat.shape[0]

    def is_binary(self) -> bool:
        return all(
            np.isin(m, (0.0, 1.0)).all()
            for m in (self.type_mat, self.conn_mat, self.inv_mat)
        )


# -- AIGER (ASCII "aag") ------------------------------------------------------


def parse_aiger(data: bytes | str) -> AigGraph:
    """Parse a combinational ASCII AIGER file into an AigGraph."""
    if isinstance(data, bytes):
        data = data.decode("ascii")
    lines = data.splitlines()
    if not lines or not lines[0].strip():
        raise AigerParseError("missing header", line=1)
    head = lines[0].split()
    if len(head) != 6 or head[0] != "aag":
        raise AigerParseError(f"malformed header {lines[0]!r}", line=1)
    try:
        m, i_cnt, l_cnt, o_cnt, a_cnt = (int(x) for x in head[1:])
    except ValueError:
        raise AigerParseError(f"non-numeric header field in {lines[0]!r}", line=1)
    if l_cnt != 0:
        raise AigerParseError("latch declarations present; only combinational AIGs are supported", line=1)

    pos = 1

    def take(expect: str) -> tuple[list[int], int]:
        nonlocal pos
        if pos >= len(lines):
            raise AigerParseError(f"unexpected end of file, expected {expect}", line=pos + 1)
        ln = pos + 1
        try:
            vals = [int(x) for x in lines[pos].split()]
        except ValueError:
            raise AigerParseError(f"malformed {expect} {lines[pos]!r}", line=ln)
        pos += 1
        return vals, ln

    in_lits = []
    for _ in range(i_cnt):
        vals, ln = take("input literal")
        if len(vals) != 1 or vals[0] < 2 or vals[0] % 2:
            raise AigerParseError(f"invalid input literal {lines[ln - 1]!r}", line=ln)
        in_lits.append(vals[0])
    out_lits = []
    for _ in range(o_cnt):
        vals, ln = take("output literal")
        if len(vals) != 1 or vals[0] < 0:
            raise AigerParseError(f"invalid output literal {lines[ln - 1]!r}", line=ln)
        out_lits.append((vals[0], ln))
    and_defs = []
    for _ in range(a_cnt):
        vals, ln = take("AND definition")
        if len(vals) != 3 or vals[0] < 2 or vals[0] % 2:
            raise AigerParseError(f"invalid AND definition {lines[ln - 1]!r}", line=ln)
        and_defs.append((vals, ln))

    # symbol table
    in_names: dict[int, str] = {}
    out_names: dict[int, str] = {}
    while pos < len(lines) and lines[pos].strip():
        ln = lines[pos]
        if ln == "c":
            break
        parts = ln.split(None, 1)
        tag = parts[0]
        if tag[0] in "io" and tag[1:].isdigit() and len(parts) == 2:
            idx = int(tag[1:])
            (in_names if tag[0] == "i" else out_names)[idx] = parts[1]
        elif tag[0] == "l":
            raise AigerParseError("latch symbol present", line=pos + 1)
        else:
            raise AigerParseError(f"malformed symbol entry {ln!r}", line=pos + 1)
        pos += 1

    var_node: dict[int, int] = {}
    types: list[NodeType] = []
    names: list[str | None] = []
    for k, lit in enumerate(in_lits):
        var_node[lit // 2] = len(types)
        types.append(NodeType.PI)
        names.append(in_names.get(k, f"pi{k}"))

    # AND gates in topological order (aag files are not required to be sorted)
    defined = {v[0] // 2: (v, ln) for v, ln in and_defs}
    order: list[int] = []
    state: dict[int, int] = {}

    def visit(var: int, ln: int):
        stack = [(var, ln, False)]
        while stack:
            v, l, expanded = stack.pop()
            if v in var_node or state.get(v) == 2:
                continue
            if v not in defined:
                raise AigerParseError(f"dangling literal reference {2 * v}", line=l)
            if expanded:
                state[v] = 2
                order.append(v)
                continue
            if state.get(v) == 1:
                raise AigerParseError(f"cyclic AND definition for literal {2 * v}", line=l)
            state[v] = 1
            stack.append((v, l, True))
            (lhs, a, b), dln = defined[v]
            for child in (a, b):
                if child < 2:
                    raise AigerParseError("constant literals are not supported", line=dln)
                stack.append((child // 2, dln, False))

    for v, (vals, ln) in sorted(defined.items()):
        visit(v, ln)

    edges: list[tuple[int, int, bool]] = []
    for v in order:
        (lhs, a, b), ln = defined[v]
        var_node[v] = len(types)
        types.append(NodeType.AND)
        names.append(None)
        for child in (a, b):
            edges.append((var_node[child // 2], var_node[v], bool(child & 1)))

    for k, (lit, ln) in enumerate(out_lits):
        if lit < 2:
            raise AigerParseError("constant output literals are not supported", line=ln)
        if lit // 2 not in var_node:
            raise AigerParseError(f"dangling literal reference {lit}", line=ln)
        src = var_node[lit // 2]
        dst = len(types)
        types.append(NodeType.PO)
        names.append(out_names.get(k, f"po{k}"))
        edges.append((src, dst, bool(lit & 1)))

    return AigGraph(types=types, edges=edges, names=names)


def write_aiger(g: AigGraph) -> bytes:
    """Serialize a canonical AigGraph as ASCII AIGER; inverse of parse_aiger."""
    bad = g.issues()
    if bad:
        raise ValueError("graph is not canonical: " + "; ".join(bad))
    pis = g.pi_indices
    ands = g.and_indices  # index order is topological by invariant
    pos = g.po_indices
    var_of = {}
    for k, i in enumerate(pis):
        var_of[i] = k + 1
    for k, i in enumerate(ands):
        var_of[i] = len(pis) + k + 1

    def lit(src: int, inv: bool) -> int:
        return 2 * var_of[src] + int(inv)

    preds = g.pred_table()
    out = [f"aag {len(pis) + len(ands)} {len(pis)} 0 {len(pos)} {len(ands)}"]
    for i in pis:
        out.append(str(2 * var_of[i]))
    for i in pos:
        (src, inv), = preds[i]
        out.append(str(lit(src, inv)))
    for i in ands:
        (s0, i0), (s1, i1) = preds[i]
        a, b = sorted((lit(s0, i0), lit(s1, i1)), reverse=True)
        out.append(f"{2 * var_of[i]} {a} {b}")
    for k, i in enumerate(pis):
        out.append(f"i{k} {g.names[i]}")
    for k, i in enumerate(pos):
        out.append(f"o{k} {g.names[i]}")
    out.append("c")
    out.append(AAG_COMMENT)
    return ("\n".join(out) + "\n").encode("ascii")


def normalize(g: AigGraph) -> AigGraph:
    """Reorder nodes as PIs, ANDs (topological), POs; the write_aiger layout."""
    order = g.pi_indices + g.and_indices + g.po_indices
    perm = {old: new for new, old in enumerate(order)}
    return AigGraph(
        types=[g.types[i] for i in order],
        edges=sorted((perm[s], perm[d], inv) for s, d, inv in g.edges),
        names=[g.names[i] for i in order],
        dummy=[g.dummy[i] for i in order],
    )


# -- Cone extraction ----------------------------------------------------------


def extract_cone_tree(g: AigGraph, output_name: str, max_nodes: int = 200) -> AigGraph | None:
    """Fan-in cone of one output, with shared nodes duplicated into a tree.

    Returns None (rejection, not an error) when the tree exceeds max_nodes.
    """
    try:
        po = next(i for i in g.po_indices if g.names[i] == output_name)
    except StopIteration:
        raise KeyError(f"unknown output name {output_name!r}")
    preds = g.pred_table()

    types: list[NodeType] = []
    names: list[str | None] = []
    edges: list[tuple[int, int, bool]] = []

    def build(node: int) -> int | None:
        # post-order duplication; each call materializes a fresh node
        if len(types) >= max_nodes:
            return None
        if g.types[node] is NodeType.PI:
            types.append(NodeType.PI)
            names.append(g.names[node])
            return len(types) - 1
        kids = []
        for src, inv in preds[node]:
            k = build(src)
            if k is None:
                return None
            kids.append((k, inv))
        if len(types) >= max_nodes:
            return None
        types.append(NodeType.AND)
        names.append(None)
        me = len(types) - 1
        for k, inv in kids:
            edges.append((k, me, inv))
        return me

    (root, root_inv), = preds[po]
    top = build(root)
    if top is None or len(types) + 1 > max_nodes:
        return None
    types.append(NodeType.PO)
    names.append(output_name)
    edges.append((top, len(types) - 1, root_inv))
    return AigGraph(types=types, edges=edges, names=names)


# -- Tensor encoding ----------------------------------------------------------


def to_tensors(g: AigGraph) -> TensorTriple:
    bad = g.issues()
    if bad:
        raise ValueError("graph is not canonical: " + "; ".join(bad))
    n = g.n
    type_mat = np.zeros((n, 3))
    for i, t in enumerate(g.types):
        type_mat[i, t.value] = 1.0
    conn = np.zeros((n, n))
    inv = np.zeros((n, n))
    for s, d, e in g.edges:
        conn[d, s] = 1.0
        if e:
            inv[d, s] = 1.0
    return TensorTriple(type_mat, conn, inv)


def from_tensors(t: TensorTriple) -> AigGraph:
    """Rebuild a (possibly non-canonical) AigGraph from a binary triple."""
    if not t.is_binary():
        raise ValueError("triple is not binary")
    n = t.n
    types = []
    for i in range(n):
        row = t.type_mat[i]
        if row.sum() != 1.0:
            raise ValueError(f"type row {i} is not one-hot: {row.tolist()}")
        types.append(NodeType(int(np.argmax(row))))
    edges = []
    dropped = 0
    for i in range(n):
        for j in range(i):
            if t.conn_mat[i, j]:
                edges.append((j, i, bool(t.inv_mat[i, j])))
            elif t.inv_mat[i, j]:
                dropped += 1
    if dropped:
        warnings.warn(
            f"dropped {dropped} inverter bit(s) without a connection bit",
            stacklevel=2,
        )
    return AigGraph(types=types, edges=edges)


# -- Padding ------------------------------------------------------------------


def pad_to_match(g: AigGraph, reference: AigGraph) -> AigGraph:
    """Extend g with dummy PI/AND nodes so per-type counts reach the pairwise max."""
    mine = g.type_counts()
    ref = reference.type_counts()
    if mine[NodeType.PO] != ref[NodeType.PO]:
        raise ValueError("PO counts differ; dummy POs are not supported")
    types = list(g.types)
    names = list(g.names)
    dummy = list(g.dummy)
    k = sum(dummy)
    for t in (NodeType.PI, NodeType.AND):
        for _ in range(max(0, ref[t] - mine[t])):
            types.append(t)
            names.append(f"dummy_{t.name.lower()}{k}")
            dummy.append(True)
            k += 1
    return AigGraph(types=types, edges=list(g.edges), names=names, dummy=dummy)


# -- Simulation ---------------------------------------------------------------


def simulate(g: AigGraph, assignment: dict[str, int]) -> dict[str, int]:
    """Evaluate all POs under a per-PI-name assignment of bits."""
    preds = g.pred_table()
    val = [0] * g.n
    out = {}
    for i, t in enumerate(g.types):
        if t is NodeType.PI:
            name = g.names[i]
            if name not in assignment:
                raise KeyError(f"missing assignment for PI {name!r}")
            val[i] = int(bool(assignment[name]))
        elif t is NodeType.AND:
            v = 1
            for s, inv in preds[i]:
                v &= val[s] ^ int(inv)
            val[i] = v  # in-degree 0 (dummy AND) evaluates to 1 and feeds nothing
        else:
            if not preds[i]:
                raise ValueError(f"PO node {i} is undriven")
            (s, inv), = preds[i]
            val[i] = val[s] ^ int(inv)
            out[g.names[i]] = val[i]
    return out


def truth_table(g: AigGraph, pi_order: list[str] | None = None) -> np.ndarray:
    """Exhaustive output table; rows ordered lexicographically over the PIs.

    Returns a 1-D array of length 2^|PI| for single-PO graphs, else one row
    per PO in PO order.
    """
    pis = pi_order if pi_order is not None else g.pi_names
    if len(pis) > 20:
        raise ValueError(f"too many PIs for truth table: {len(pis)}")
    pos = g.po_names
    table = np.zeros((len(pos), 2 ** len(pis)), dtype=np.uint8)
    for idx in range(2 ** len(pis)):
        assign = {
            name: (idx >> (len(pis) - 1 - k)) & 1 for k, name in enumerate(pis)
        }
        res = simulate(g, assign)
        for r, name in enumerate(pos):
            table[r, idx] = res[name]
    return table[0] if len(pos) == 1 else table


# -- Random tree generation (toy datasets, demos, tests) ----------------------


def random_tree(
    rng: np.random.Generator,
    n_ands: int,
    n_pi_pool: int = 6,
    inv_prob: float = 0.3,
) -> AigGraph:
    """Random single-PO AIG tree with n_ands AND nodes; PI names drawn from a pool."""
    if n_ands < 1:
        raise ValueError("need at least one AND node")
    # shape: random recursive split of the AND budget
    types: list[NodeType] = []
    names: list[str | None] = []
    edges: list[tuple[int, int, bool]] = []

    def build(budget: int) -> int:
        if budget == 0:
            types.append(NodeType.PI)
            names.append(f"pi{int(rng.integers(n_pi_pool))}")
            return len(types) - 1
        left = int(rng.integers(budget))  # ANDs under the left child
        a = build(left)
        b = build(budget - 1 - left)
        types.append(NodeType.AND)
        names.append(None)
        me = len(types) - 1
        edges.append((a, me, bool(rng.random() < inv_prob)))
        edges.append((b, me, bool(rng.random() < inv_prob)))
        return me

    root = build(n_ands)
    types.append(NodeType.PO)
    names.append("po0")
    edges.append((root, len(types) - 1, bool(rng.random() < inv_prob)))
    return AigGraph(types=types, edges=edges, names=names)
