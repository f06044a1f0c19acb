"""Regular (rational) type and value terms as finite cyclic term graphs.

A term is a node in a graph; cycles encode the infinite unfoldings.  Two
terms denote the same infinite tree iff they are bisimilar, and
canonicalize() interns one node per bisimulation class so that equality
of canonical nodes is plain identity.
"""

from __future__ import annotations

import itertools
import json as _json
from dataclasses import dataclass

_uids = itertools.count(1)


class TermError(Exception):
    pass


class ParseError(TermError):
    def __init__(self, msg, line, col):
        super().__init__("line %d, col %d: %s" % (line, col, msg))
        self.line = line
        self.col = col


class BudgetExceeded(Exception):
    """A search exhausted its configured memo budget (not a judgment)."""


# ---------------------------------------------------------------------------
# term graph nodes

class TypeTerm:
    """Node of a type term graph.  Nodes compare and hash by identity."""

    __slots__ = ("uid",)

    def __init__(self):
        self.uid = next(_uids)


class IntType(TypeTerm):
    __slots__ = ()

    def __repr__(self):
        return "<type#%d int>" % self.uid


class ObjType(TypeTerm):
    __slots__ = ("class_name", "fields")

    def __init__(self, class_name, fields=None):
        super().__init__()
        self.class_name = class_name
        # field name -> TypeTerm, kept sorted by name
        self.fields = dict(sorted((fields or {}).items()))

    def __repr__(self):
        return "<type#%d obj %s/%d>" % (self.uid, self.class_name, len(self.fields))


class UnionType(TypeTerm):
    __slots__ = ("left", "right")

    def __init__(self, left=None, right=None):
        super().__init__()
        self.left = left
        self.right = right

    def __repr__(self):
        return "<type#%d union>" % self.uid


class ValueTerm:
    """Node of a value term graph (integer or cyclic object value)."""

    __slots__ = ("uid",)

    def __init__(self):
        self.uid = next(_uids)


class IntValue(ValueTerm):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = value

    def __repr__(self):
        return "<val#%d %d>" % (self.uid, self.value)


class ObjValue(ValueTerm):
    __slots__ = ("class_name", "fields")

    def __init__(self, class_name, fields=None):
        super().__init__()
        self.class_name = class_name
        self.fields = dict(sorted((fields or {}).items()))

    def __repr__(self):
        return "<val#%d obj %s/%d>" % (self.uid, self.class_name, len(self.fields))


def _children(node):
    if isinstance(node, (IntType, IntValue)):
        return ()
    if isinstance(node, (ObjType, ObjValue)):
        return tuple(node.fields[f] for f in sorted(node.fields))
    return (node.left, node.right)


def _shape(node):
    """Local constructor signature, ignoring children."""
    if isinstance(node, IntType):
        return ("int",)
    if isinstance(node, ObjType):
        return ("obj", node.class_name, tuple(sorted(node.fields)))
    if isinstance(node, UnionType):
        return ("union",)
    if isinstance(node, IntValue):
        return ("intval", node.value)
    if isinstance(node, ObjValue):
        return ("objval", node.class_name, tuple(sorted(node.fields)))
    raise TypeError("not a term node: %r" % (node,))


def subterm_closure(t):
    """All distinct nodes reachable from t (including t itself)."""
    seen = {}
    todo = [t]
    while todo:
        n = todo.pop()
        if n.uid in seen:
            continue
        seen[n.uid] = n
        todo.extend(_children(n))
    return set(seen.values())


# ---------------------------------------------------------------------------
# syntactic equation systems (the parsed form)

@dataclass
class IntExpr:
    pass


@dataclass
class RefExpr:
    name: str


@dataclass
class ObjExpr:
    class_name: str
    fields: list  # of (name, expr)


@dataclass
class UnionExpr:
    left: object
    right: object


@dataclass
class IntLitExpr:
    value: int


@dataclass
class ObjValExpr:
    class_name: str
    fields: list


@dataclass
class EquationSystem:
    """Bindings VAR -> syntactic expression, plus a root variable.

    Guardedness is not required: ``X = X \\/ X`` is legal and denotes the
    all-union infinite tree.  Only pure variable alias cycles (``X = X``)
    are rejected, at resolve time, since they denote no unique tree.
    """

    bindings: dict
    root: str


# ---------------------------------------------------------------------------
# scanner / parser

_SYMBOLS = ("->", "\\/", "=", ";", "(", ")", "[", "]", ",", ":")


class _Scanner:
    def __init__(self, source):
        self.src = source
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens = []
        self._scan()

    def _err(self, msg):
        raise ParseError(msg, self.line, self.col)

    def _scan(self):
        src = self.src
        n = len(src)
        while self.pos < n:
            c = src[self.pos]
            if c == "#":
                while self.pos < n and src[self.pos] != "\n":
                    self.pos += 1
                continue
            if c in " \t\r\n":
                self.pos += 1
                if c == "\n":
                    self.line += 1
                    self.col = 1
                else:
                    self.col += 1
                continue
            start_line, start_col = self.line, self.col
            for sym in _SYMBOLS:
                if src.startswith(sym, self.pos):
                    self.tokens.append((sym, sym, start_line, start_col))
                    self.pos += len(sym)
                    self.col += len(sym)
                    break
            else:
                if c.isalpha() or c == "_":
                    j = self.pos
                    while j < n and (src[j].isalnum() or src[j] == "_"):
                        j += 1
                    word = src[self.pos:j]
                    kind = "VAR" if word[0].isupper() else "IDENT"
                    self.tokens.append((kind, word, start_line, start_col))
                    self.col += j - self.pos
                    self.pos = j
                elif c.isdigit() or (c == "-" and self.pos + 1 < n and src[self.pos + 1].isdigit()):
                    j = self.pos + 1
                    while j < n and src[j].isdigit():
                        j += 1
                    self.tokens.append(("INT", src[self.pos:j], start_line, start_col))
                    self.col += j - self.pos
                    self.pos = j
                else:
                    self._err("unexpected character %r" % c)
        self.tokens.append(("EOF", "", self.line, self.col))


class _Parser:
    def __init__(self, source):
        self.toks = _Scanner(source).tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def err(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok[2], tok[3])

    def expect(self, kind, what=None):
        t = self.next()
        if t[0] != kind:
            self.err("expected %s, found %r" % (what or kind, t[1] or "end of input"), t)
        return t

    def at(self, kind, value=None):
        t = self.peek()
        return t[0] == kind and (value is None or t[1] == value)

    # system := (VAR '=' expr ';')* 'root' VAR ';'?
    def system(self, values):
        bindings = {}
        while True:
            t = self.peek()
            if t[0] == "IDENT" and t[1] == "root":
                break
            if t[0] != "VAR":
                self.err("expected a declaration 'VAR = ...' or 'root VAR'", t)
            name_tok = self.next()
            if name_tok[1] in bindings:
                self.err("duplicate binding for %s" % name_tok[1], name_tok)
            self.expect("=", "'='")
            bindings[name_tok[1]] = self.expr(values)
            self.expect(";", "';'")
        self.next()  # root
        root = self.expect("VAR", "root variable name")
        if self.at(";"):
            self.next()
        self.expect("EOF", "end of input")
        for name, expr in bindings.items():
            self._check_bound(expr, bindings)
        if root[1] not in bindings:
            self.err("unbound root variable %s" % root[1], root)
        return EquationSystem(bindings, root[1])

    def _check_bound(self, expr, bindings):
        todo = [expr]
        while todo:
            e = todo.pop()
            if isinstance(e, RefExpr):
                if e.name not in bindings:
                    raise TermError("unbound variable %s" % e.name)
            elif isinstance(e, UnionExpr):
                todo.extend((e.left, e.right))
            elif isinstance(e, (ObjExpr, ObjValExpr)):
                todo.extend(sub for _, sub in e.fields)

    # expr := atom ('\/' expr)?   right associative; values have no unions
    def expr(self, values):
        parts = [self.atom(values)]
        while self.at("\\/") and not values:
            self.next()
            parts.append(self.atom(values))
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = UnionExpr(p, out)
        return out

    def atom(self, values):
        t = self.peek()
        if t[0] == "(":
            self.next()
            inner = self.expr(values)
            self.expect(")", "')'")
            return inner
        if t[0] == "VAR":
            self.next()
            return RefExpr(t[1])
        if t[0] == "INT":
            if not values:
                self.err("integer literals only appear in value terms", t)
            self.next()
            return IntLitExpr(int(t[1]))
        if t[0] == "IDENT":
            if t[1] == "int":
                if values:
                    self.err("'int' is a type, not a value", t)
                self.next()
                return IntExpr()
            if t[1] == "obj":
                return self.obj(values)
            self.err("unexpected identifier %r" % t[1], t)
        self.err("expected a term, found %r" % (t[1] or "end of input"), t)

    def obj(self, values):
        self.next()  # obj
        self.expect("(", "'('")
        cls = self.expect("IDENT", "class name")
        self.expect(",", "','")
        self.expect("[", "'['")
        sep = "->" if values else ":"
        fields = []
        seen = set()
        if not self.at("]"):
            while True:
                f = self.expect("IDENT", "field name")
                if f[1] in seen:
                    self.err("duplicate field %s" % f[1], f)
                seen.add(f[1])
                self.expect(sep, "'%s'" % sep)
                fields.append((f[1], self.expr(values)))
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect("]", "']'")
        self.expect(")", "')'")
        make = ObjValExpr if values else ObjExpr
        return make(cls[1], fields)


def parse_type(source):
    """Parse equation-system text into an EquationSystem of type expressions."""
    return _Parser(source).system(values=False)


def parse_value(source):
    """Parse equation-system text into an EquationSystem of value expressions."""
    return _Parser(source).system(values=True)


# ---------------------------------------------------------------------------
# resolving a system into a term graph

def _representatives(system):
    """Chase pure-variable aliases; reject alias cycles like X = Y; Y = X."""
    reps = {}
    for name in system.bindings:
        seen = [name]
        expr = system.bindings[name]
        while isinstance(expr, RefExpr):
            if expr.name in seen:
                raise TermError(
                    "variable cycle %s has no unique solution" % " = ".join(seen + [expr.name]))
            seen.append(expr.name)
            expr = system.bindings[expr.name]
        for alias in seen:
            reps[alias] = expr
    return reps


def _resolve(system, values):
    reps = _representatives(system)

    def make_node(expr):
        if isinstance(expr, IntExpr):
            if values:
                raise TermError("type expression in a value system")
            return IntType()
        if isinstance(expr, ObjExpr):
            if values:
                raise TermError("type expression in a value system")
            return ObjType(expr.class_name)
        if isinstance(expr, UnionExpr):
            if values:
                raise TermError("union is not a value constructor")
            return UnionType()
        if isinstance(expr, IntLitExpr):
            if not values:
                raise TermError("value expression in a type system")
            return IntValue(expr.value)
        if isinstance(expr, ObjValExpr):
            if not values:
                raise TermError("value expression in a type system")
            return ObjValue(expr.class_name)
        raise TypeError(expr)

    # one node per distinct bound expression; aliases share it
    by_expr = {}
    named = {}
    for name, expr in reps.items():
        if id(expr) not in by_expr:
            by_expr[id(expr)] = (make_node(expr), expr)
        named[name] = by_expr[id(expr)][0]

    pending = list(by_expr.values())

    def subnode(expr):
        if isinstance(expr, RefExpr):
            return named[expr.name]
        node = make_node(expr)
        pending.append((node, expr))
        return node

    while pending:
        node, expr = pending.pop()
        if isinstance(expr, UnionExpr):
            node.left = subnode(expr.left)
            node.right = subnode(expr.right)
        elif isinstance(expr, (ObjExpr, ObjValExpr)):
            node.fields = dict(sorted((f, subnode(sub)) for f, sub in expr.fields))
    return named[system.root]


def resolve(system):
    """Build the type term graph denoted by an equation system."""
    return _resolve(system, values=False)


def resolve_value(system):
    """Build the value term graph denoted by an equation system."""
    return _resolve(system, values=True)


def type_from_source(source):
    return resolve(parse_type(source))


def value_from_source(source):
    return resolve_value(parse_value(source))


# ---------------------------------------------------------------------------
# bisimulation minimization and canonical interning

_canonical = {}        # serialization key -> canonical node
_canonical_uids = set()


def _partition(nodes):
    """Refine blocks until bisimulation-stable; returns node uid -> block id."""
    shapes = {}
    block = {}
    for n in nodes:
        s = _shape(n)
        if s not in shapes:
            shapes[s] = len(shapes)
        block[n.uid] = shapes[s]
    nblocks = len(shapes)
    while True:
        sigs = {}
        nxt = {}
        for n in nodes:
            sig = (block[n.uid],) + tuple(block[c.uid] for c in _children(n))
            if sig not in sigs:
                sigs[sig] = len(sigs)
            nxt[n.uid] = sigs[sig]
        if len(sigs) == nblocks:
            return nxt
        block = nxt
        nblocks = len(sigs)


def _scc_order(block_ids, block_children):
    """Tarjan over the block graph, iterative; yields SCCs bottom-up."""
    index = {}
    low = {}
    onstack = set()
    stack = []
    sccs = []
    counter = itertools.count()
    for start in block_ids:
        if start in index:
            continue
        work = [(start, iter(block_children[start]))]
        index[start] = low[start] = next(counter)
        stack.append(start)
        onstack.add(start)
        while work:
            b, it = work[-1]
            advanced = False
            for c in it:
                if c not in index:
                    index[c] = low[c] = next(counter)
                    stack.append(c)
                    onstack.add(c)
                    work.append((c, iter(block_children[c])))
                    advanced = True
                    break
                if c in onstack:
                    low[b] = min(low[b], index[c])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[b])
            if low[b] == index[b]:
                scc = []
                while True:
                    m = stack.pop()
                    onstack.discard(m)
                    scc.append(m)
                    if m == b:
                        break
                sccs.append(scc)
    return sccs


def _serialize_block(start, block_children, block_shape, canon_of_block):
    """Flat canonical serialization of the part of the block graph reachable
    from `start` that has no canonical node yet; canonical exits are cited
    by uid.  Iterative so deep chains do not recurse."""
    order = {}
    out = []
    todo = [("visit", start)]
    while todo:
        op, b = todo.pop()
        if op == "ref":
            out.append(("r", order[b]))
            continue
        if b in canon_of_block:
            out.append(("x", canon_of_block[b].uid))
            continue
        if b in order:
            out.append(("r", order[b]))
            continue
        order[b] = len(order)
        kids = block_children[b]
        out.append(("n", block_shape[b], len(kids)))
        for c in reversed(kids):
            todo.append(("visit", c))
    return tuple(out)


def canonicalize(t):
    """Return the canonical node for t's bisimulation class.

    Canonical nodes are interned globally: bisimilar inputs map to the
    identical node object, so node identity after canonicalization is
    bisimulation equality.
    """
    if t.uid in _canonical_uids:
        return t
    nodes = list(subterm_closure(t))
    block = _partition(nodes)

    rep = {}
    for n in nodes:
        rep.setdefault(block[n.uid], n)
    block_children = {b: tuple(block[c.uid] for c in _children(n))
                      for b, n in rep.items()}
    block_shape = {b: _shape(n) for b, n in rep.items()}

    canon_of_block = {}
    for scc in _scc_order(list(rep), block_children):
        keys = {b: _serialize_block(b, block_children, block_shape, canon_of_block)
                for b in scc}
        hits = [b for b in scc if keys[b] in _canonical]
        if hits:
            assert len(hits) == len(scc), "partial SCC intern"
            for b in scc:
                canon_of_block[b] = _canonical[keys[b]]
            continue
        fresh = {}
        for b in scc:
            shape = block_shape[b]
            if shape[0] == "int":
                fresh[b] = IntType()
            elif shape[0] == "union":
                fresh[b] = UnionType()
            elif shape[0] == "obj":
                fresh[b] = ObjType(shape[1])
            elif shape[0] == "intval":
                fresh[b] = IntValue(shape[1])
            else:
                fresh[b] = ObjValue(shape[1])
        for b in scc:
            node = fresh[b]
            kids = [canon_of_block.get(c) or fresh[c] for c in block_children[b]]
            shape = block_shape[b]
            if shape[0] == "union":
                node.left, node.right = kids
            elif shape[0] in ("obj", "objval"):
                node.fields = dict(zip(shape[2], kids))
        for b in scc:
            canon_of_block[b] = fresh[b]
            _canonical[keys[b]] = fresh[b]
            _canonical_uids.add(fresh[b].uid)
    return canon_of_block[block[t.uid]]


def equal(t1, t2):
    """Bisimulation equality: same infinite unfolding (fields unordered)."""
    return canonicalize(t1) is canonicalize(t2)


# ---------------------------------------------------------------------------
# printing terms back to equation-system text

def _naming_pass(root):
    """Nodes that need a binding: the root, shared nodes, and cycle targets."""
    named = {root.uid}
    state = {}  # uid -> "open" | "done"
    todo = [("enter", root)]
    while todo:
        op, n = todo.pop()
        if op == "exit":
            state[n.uid] = "done"
            continue
        st = state.get(n.uid)
        if st is not None:
            named.add(n.uid)
            continue
        state[n.uid] = "open"
        todo.append(("exit", n))
        for c in reversed(_children(n)):
            todo.append(("enter", c))
    return named


def _format_term(root, values):
    named = _naming_pass(root)
    names = {}
    lines = []
    sep = " -> " if values else ": "

    def name_of(node):
        if node.uid not in names:
            names[node.uid] = "T%d" % len(names)
            lines.append(None)  # reserve slot to keep discovery order
            slot = len(lines) - 1
            lines[slot] = "%s = %s;" % (names[node.uid], fmt(node, inline=True))
        return names[node.uid]

    def fmt(node, inline=False, parens=False):
        if node.uid in named and not inline:
            return name_of(node)
        if isinstance(node, IntType):
            return "int"
        if isinstance(node, IntValue):
            return str(node.value)
        if isinstance(node, (ObjType, ObjValue)):
            inner = ", ".join("%s%s%s" % (f, sep, fmt(node.fields[f]))
                              for f in sorted(node.fields))
            return "obj(%s, [%s])" % (node.class_name, inner)
        body = "%s \\/ %s" % (fmt(node.left, parens=True), fmt(node.right))
        return "(%s)" % body if parens else body

    rootname = name_of(root)
    lines.append("root " + rootname)
    return "\n".join(lines)


def print_type(t):
    """Equation-system text for a type graph; parses back to a bisimilar term."""
    return _format_term(t, values=False)


def print_value(v):
    return _format_term(v, values=True)


# ---------------------------------------------------------------------------
# JSON form (same structure as the text syntax: bindings + root)

def _expr_to_json(expr):
    if isinstance(expr, IntExpr):
        return {"kind": "int"}
    if isinstance(expr, RefExpr):
        return {"kind": "ref", "name": expr.name}
    if isinstance(expr, UnionExpr):
        return {"kind": "union", "left": _expr_to_json(expr.left),
                "right": _expr_to_json(expr.right)}
    if isinstance(expr, ObjExpr):
        return {"kind": "obj", "class": expr.class_name,
                "fields": {f: _expr_to_json(e) for f, e in expr.fields}}
    if isinstance(expr, IntLitExpr):
        return {"kind": "intval", "value": expr.value}
    if isinstance(expr, ObjValExpr):
        return {"kind": "objval", "class": expr.class_name,
                "fields": {f: _expr_to_json(e) for f, e in expr.fields}}
    raise TypeError(expr)


def _expr_from_json(data, values):
    kind = data["kind"]
    if kind == "int":
        return IntExpr()
    if kind == "ref":
        return RefExpr(data["name"])
    if kind == "union":
        return UnionExpr(_expr_from_json(data["left"], values),
                         _expr_from_json(data["right"], values))
    if kind == "obj":
        return ObjExpr(data["class"],
                       [(f, _expr_from_json(e, values)) for f, e in data["fields"].items()])
    if kind == "intval":
        return IntLitExpr(data["value"])
    if kind == "objval":
        return ObjValExpr(data["class"],
                          [(f, _expr_from_json(e, values)) for f, e in data["fields"].items()])
    raise TermError("unknown term kind %r" % kind)


def term_to_json(t):
    """JSON text with the same bindings/root shape as the textual syntax."""
    values = isinstance(t, ValueTerm)
    system = (parse_value if values else parse_type)(_format_term(t, values))
    return _json.dumps({
        "root": system.root,
        "bindings": {name: _expr_to_json(e) for name, e in system.bindings.items()},
    }, indent=2)


def type_from_json(text):
    data = _json.loads(text)
    bindings = {name: _expr_from_json(e, values=False)
                for name, e in data["bindings"].items()}
    return resolve(EquationSystem(bindings, data["root"]))


def value_from_json(text):
    data = _json.loads(text)
    bindings = {name: _expr_from_json(e, values=True)
                for name, e in data["bindings"].items()}
    return resolve_value(EquationSystem(bindings, data["root"]))
