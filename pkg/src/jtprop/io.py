"""Reading and writing networks: a Hugin-NET subset and a native JSON format.

The NET subset covers discrete `node` blocks with `states` and `potential`
blocks with `data`; other block attributes are skipped, and NET features
outside the subset (continuous nodes, model expressions, decision/utility
nodes) are rejected by name.  NET data lists read in document order land
directly on the (parents..., child) scope with the child varying fastest.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArityMismatchError,
    ParseError,
    SchemaViolationError,
    UnknownVariableError,
    UnsupportedFeatureError,
)
from .model import BayesianNetwork, Variable, make_cpt, validate_network

NET_EXTENSION = ".net"
NATIVE_EXTENSION = ".bn.json"

_UNSUPPORTED_BLOCKS = ("continuous", "decision", "utility", "class")
_UNSUPPORTED_POTENTIAL_KEYS = ("model_nodes", "model_data")


# --- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<number>[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.\-]*)
  | (?P<punct>[{}()=;|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind, text=None) -> _Token:
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text!r}", tok.line, tok.col)
        return tok


# --- NET parsing -------------------------------------------------------------

def _skip_value(ts: _TokenStream):
    """Consume one attribute value: scalar or balanced parenthesis group."""
    tok = ts.next()
    if tok.kind in ("string", "number", "ident"):
        return
    if tok.text == "(":
        depth = 1
        while depth:
            tok = ts.next()
            if tok.kind == "eof":
                raise ParseError("unterminated '('", tok.line, tok.col)
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1
        return
    raise ParseError(f"unexpected {tok.text!r} in attribute value", tok.line, tok.col)


def _parse_states(ts: _TokenStream) -> int:
    ts.expect("punct", "=")
    ts.expect("punct", "(")
    count = 0
    while ts.peek().kind == "string":
        ts.next()
        count += 1
    ts.expect("punct", ")")
    ts.expect("punct", ";")
    return count


def _parse_data(ts: _TokenStream) -> list[float]:
    ts.expect("punct", "=")
    values = []
    depth = 0
    tok = ts.expect("punct", "(")
    depth = 1
    while depth:
        tok = ts.next()
        if tok.kind == "eof":
            raise ParseError("unterminated data list", tok.line, tok.col)
        if tok.text == "(":
            depth += 1
        elif tok.text == ")":
            depth -= 1
        elif tok.kind == "number":
            values.append(float(tok.text))
        else:
            raise ParseError(f"unexpected {tok.text!r} in data list", tok.line, tok.col)
    ts.expect("punct", ";")
    return values


def _parse_node_block(ts: _TokenStream):
    name_tok = ts.expect("ident")
    ts.expect("punct", "{")
    n_states = None
    while True:
        tok = ts.next()
        if tok.text == "}":
            break
        if tok.kind == "eof":
            raise ParseError("unterminated node block", tok.line, tok.col)
        if tok.kind != "ident":
            raise ParseError(f"expected attribute name, found {tok.text!r}", tok.line, tok.col)
        if tok.text == "states":
            n_states = _parse_states(ts)
        else:
            # labels, positions and other benign attributes
            ts.expect("punct", "=")
            _skip_value(ts)
            ts.expect("punct", ";")
    if n_states is None:
        raise ParseError(f"node {name_tok.text!r} has no states", name_tok.line, name_tok.col)
    return name_tok.text, n_states


def _parse_potential_block(ts: _TokenStream):
    ts.expect("punct", "(")
    child_tok = ts.expect("ident")
    parents = []
    tok = ts.next()
    if tok.text == "|":
        while ts.peek().kind == "ident":
            parents.append(ts.next().text)
        tok = ts.next()
    if tok.text != ")":
        raise ParseError(f"expected ')', found {tok.text!r}", tok.line, tok.col)

    ts.expect("punct", "{")
    data = None
    while True:
        tok = ts.next()
        if tok.text == "}":
            break
        if tok.kind == "eof":
            raise ParseError("unterminated potential block", tok.line, tok.col)
        if tok.kind != "ident":
            raise ParseError(f"expected attribute name, found {tok.text!r}", tok.line, tok.col)
        if tok.text in _UNSUPPORTED_POTENTIAL_KEYS:
            raise UnsupportedFeatureError(tok.text)
        if tok.text == "data":
            data = _parse_data(ts)
        else:
            ts.expect("punct", "=")
            _skip_value(ts)
            ts.expect("punct", ";")
    if data is None:
        raise ParseError(
            f"potential block for {child_tok.text!r} has no data",
            child_tok.line, child_tok.col,
        )
    return child_tok.text, parents, data, child_tok


def parse_net(text: str) -> BayesianNetwork:
    """Parse the supported NET subset into a validated network."""
    ts = _TokenStream(_tokenize(text))
    names: list[str] = []
    cardinalities: dict[str, int] = {}
    potentials = []

    while True:
        tok = ts.next()
        if tok.kind == "eof":
            break
        if tok.kind != "ident":
            raise ParseError(f"expected block keyword, found {tok.text!r}", tok.line, tok.col)
        if tok.text == "net":
            ts.expect("punct", "{")
            while True:
                inner = ts.next()
                if inner.text == "}":
                    break
                if inner.kind == "eof":
                    raise ParseError("unterminated net block", inner.line, inner.col)
                if inner.kind != "ident":
                    raise ParseError(
                        f"expected attribute name, found {inner.text!r}",
                        inner.line, inner.col,
                    )
                ts.expect("punct", "=")
                _skip_value(ts)
                ts.expect("punct", ";")
        elif tok.text == "node":
            name, n_states = _parse_node_block(ts)
            if name in cardinalities:
                raise ParseError(f"duplicate node {name!r}", tok.line, tok.col)
            names.append(name)
            cardinalities[name] = n_states
        elif tok.text == "potential":
            potentials.append(_parse_potential_block(ts))
        elif tok.text in _UNSUPPORTED_BLOCKS:
            raise UnsupportedFeatureError(tok.text)
        else:
            raise ParseError(f"unknown block {tok.text!r}", tok.line, tok.col)

    ids = {name: i for i, name in enumerate(names)}
    variables = [Variable(ids[n], n, cardinalities[n]) for n in names]
    cards = [cardinalities[n] for n in names]

    cpts = []
    for child_name, parent_names, data, tok in potentials:
        if child_name not in ids:
            raise UnknownVariableError(child_name)
        for p in parent_names:
            if p not in ids:
                raise UnknownVariableError(p)
        child = ids[child_name]
        parents = [ids[p] for p in parent_names]
        expected = int(np.prod([cards[p] for p in parents] + [cards[child]], dtype=np.int64))
        if len(data) != expected:
            raise ArityMismatchError(child_name, expected, len(data))
        if any(not math.isfinite(v) for v in data):
            raise ParseError(f"non-finite value in data for {child_name!r}", tok.line, tok.col)
        try:
            cpts.append(make_cpt(cards, child, parents, data))
        except ValueError as exc:
            raise ParseError(str(exc), tok.line, tok.col) from exc

    if len(cpts) != len(variables):
        have = {c.child for c in cpts}
        missing = [v.name for v in variables if v.id not in have]
        dup = len(cpts) - len(have)
        if dup:
            raise ParseError("duplicate potential block", 1, 1)
        raise ParseError(f"missing potential block for {missing[0]!r}", 1, 1)
    try:
        net = BayesianNetwork(variables, cpts)
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from exc
    return validate_network(net)


# --- native JSON -------------------------------------------------------------

def _expect_key(obj, key, path, kind):
    if not isinstance(obj, dict):
        raise SchemaViolationError(path, f"expected object, got {type(obj).__name__}")
    if key not in obj:
        raise SchemaViolationError(f"{path}/{key}", "missing field")
    value = obj[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaViolationError(f"{path}/{key}", "expected number")
    elif not isinstance(value, kind) or isinstance(value, bool):
        raise SchemaViolationError(f"{path}/{key}", f"expected {kind.__name__}")
    return value


def network_from_dict(doc, path="") -> BayesianNetwork:
    """Build and validate a network from the native JSON object structure."""
    raw_vars = _expect_key(doc, "variables", path, list)
    raw_cpts = _expect_key(doc, "cpts", path, list)

    variables = []
    for i, item in enumerate(raw_vars):
        vpath = f"{path}/variables/{i}"
        name = _expect_key(item, "name", vpath, str)
        card = _expect_key(item, "cardinality", vpath, int)
        if not 0 <= card <= 2**31:
            raise SchemaViolationError(f"{vpath}/cardinality", "out of range")
        variables.append(Variable(i, name, card))
    ids = {v.name: v.id for v in variables}
    if len(ids) != len(variables):
        raise SchemaViolationError(f"{path}/variables", "duplicate names")
    cards = [v.cardinality for v in variables]

    cpts = []
    for i, item in enumerate(raw_cpts):
        cpath = f"{path}/cpts/{i}"
        child_name = _expect_key(item, "child", cpath, str)
        parent_names = _expect_key(item, "parents", cpath, list)
        table = _expect_key(item, "table", cpath, list)
        if child_name not in ids:
            raise SchemaViolationError(f"{cpath}/child", f"unknown variable {child_name!r}")
        parents = []
        for j, p in enumerate(parent_names):
            if not isinstance(p, str) or p not in ids:
                raise SchemaViolationError(f"{cpath}/parents/{j}", "unknown variable")
            parents.append(ids[p])
        for j, v in enumerate(table):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise SchemaViolationError(f"{cpath}/table/{j}", "expected number")
        child = ids[child_name]
        expected = int(np.prod([cards[p] for p in parents] + [cards[child]], dtype=np.int64))
        if len(table) != expected:
            raise SchemaViolationError(
                f"{cpath}/table", f"expected {expected} entries, got {len(table)}"
            )
        try:
            cpts.append(make_cpt(cards, child, parents, [float(v) for v in table]))
        except ValueError as exc:
            raise SchemaViolationError(cpath, str(exc)) from exc

    try:
        net = BayesianNetwork(variables, cpts)
    except ValueError as exc:
        raise SchemaViolationError(path or "/", str(exc)) from exc
    return validate_network(net)


def parse_native(text: str) -> BayesianNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    return network_from_dict(doc)


# --- serialization -----------------------------------------------------------

def format_float(x: float) -> str:
    """17 significant digits: enough to reparse to the identical double."""
    return format(float(x), ".17g")


def emit_json(obj, indent=0) -> str:
    """Deterministic JSON emitter with fixed float formatting.

    Dicts keep insertion order; callers build documents in a stable order.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f'{inner}{json.dumps(str(k))}: {emit_json(v, indent + 1)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [emit_json(v, indent + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple)) for v in obj) and sum(map(len, items)) < 72:
            return "[" + ", ".join(items) + "]"
        return "[\n" + ",\n".join(inner + s for s in items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot emit {type(obj).__name__}")


def network_to_dict(net: BayesianNetwork) -> dict:
    return {
        "variables": [
            {"name": v.name, "cardinality": v.cardinality} for v in net.variables
        ],
        "cpts": [
            {
                "child": net.variables[c.child].name,
                "parents": [net.variables[p].name for p in c.parents],
                "table": [float(x) for x in c.table.values],
            }
            for c in net.cpts
        ],
    }


def serialize_native(net: BayesianNetwork) -> str:
    """Stable text form; parse_native(serialize_native(net)) == net."""
    return emit_json(network_to_dict(net)) + "\n"


# --- compiled tree dumps -----------------------------------------------------

TREE_FORMAT = "jtprop-tree"


def tree_to_dict(tree, mappings=None, net: BayesianNetwork | None = None,
                 include_mappings: bool = False) -> dict:
    """Stable JSON object for a compiled tree.

    The source network is embedded so the dump alone supports inference;
    mapping tables are optional since they rebuild quickly.
    """
    doc = {
        "format": TREE_FORMAT,
        "version": 1,
        "layout": mappings.layout if mappings is not None else "flat",
        "cardinalities": list(tree.cards),
        "cliques": [list(c.members) for c in tree.cliques],
        "edges": [list(s.edge) for s in tree.separators],
        "separators": [list(s.members) for s in tree.separators],
        "roots": list(tree.roots),
        "cpt_assignment": [
            tree.cpt_assignment[v] for v in sorted(tree.cpt_assignment)
        ],
    }
    if net is not None:
        doc["network"] = network_to_dict(net)
    if include_mappings and mappings is not None:
        doc["mapping_tables"] = {
            f"{c}:{s}": [[int(i) for i in row] for row in table]
            for (c, s), table in sorted(mappings.tables.items())
        }
    return doc


def serialize_tree(tree, mappings=None, net=None, include_mappings=False) -> str:
    return emit_json(tree_to_dict(tree, mappings, net, include_mappings)) + "\n"


def parse_tree(text: str):
    """Rebuild (tree, mappings, network) from a dump produced by
    :func:`serialize_tree`.

    Mapping tables are reconstructed in the recorded layout when the dump
    omits them.
    """
    from .compiler import (
        Clique,
        JunctionTree,
        MappingTableSet,
        Separator,
        build_mapping_tables,
    )
    from .potential import Scope

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict) or doc.get("format") != TREE_FORMAT:
        raise SchemaViolationError("/format", f"expected {TREE_FORMAT!r}")

    cards = tuple(_expect_key(doc, "cardinalities", "", list))
    layout = _expect_key(doc, "layout", "", str)

    def scope_of(members):
        members = tuple(int(m) for m in members)
        return members, Scope(members, tuple(cards[m] for m in members))

    cliques = []
    for i, raw in enumerate(_expect_key(doc, "cliques", "", list)):
        members, scope = scope_of(raw)
        cliques.append(Clique(i, members, scope))

    separators = []
    edges = _expect_key(doc, "edges", "", list)
    raw_seps = _expect_key(doc, "separators", "", list)
    if len(edges) != len(raw_seps):
        raise SchemaViolationError("/separators", "edge/separator count mismatch")
    neighbors = [[] for _ in cliques]
    for i, (edge, raw) in enumerate(zip(edges, raw_seps)):
        members, scope = scope_of(raw)
        a, b = int(edge[0]), int(edge[1])
        separators.append(Separator(i, (a, b), members, scope))
        neighbors[a].append((b, i))
        neighbors[b].append((a, i))
    for lst in neighbors:
        lst.sort()

    assignment_list = _expect_key(doc, "cpt_assignment", "", list)
    tree = JunctionTree(
        cards=cards,
        cliques=cliques,
        separators=separators,
        neighbors=neighbors,
        roots=[int(r) for r in _expect_key(doc, "roots", "", list)],
        cpt_assignment={v: int(c) for v, c in enumerate(assignment_list)},
    )

    if "mapping_tables" in doc:
        tables = {}
        for key, rows in doc["mapping_tables"].items():
            c, s = (int(x) for x in key.split(":"))
            arr = np.asarray(rows)
            tables[(c, s)] = np.asfortranarray(arr) if layout == "interleaved" else np.ascontiguousarray(arr)
        mappings = MappingTableSet(layout=layout, tables=tables)
    else:
        mappings = build_mapping_tables(tree, layout=layout)

    net = None
    if "network" in doc:
        net = network_from_dict(doc["network"], path="/network")
    return tree, mappings, net


# --- documents ---------------------------------------------------------------

@dataclass(frozen=True)
class NetworkDocument:
    format: str  # "net" | "native-json"
    network: BayesianNetwork
    source: str  # file name or "<string>"


def load_network(path) -> NetworkDocument:
    """Load a network file, choosing the parser by extension."""
    path = str(path)
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(NET_EXTENSION):
        return NetworkDocument("net", parse_net(text), path)
    return NetworkDocument("native-json", parse_native(text), path)


def is_tree_document(text: str) -> bool:
    head = text.lstrip()[:256]
    return head.startswith("{") and TREE_FORMAT in head
