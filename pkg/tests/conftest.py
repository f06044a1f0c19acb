"""Shared helpers: independent equality oracle and random graph generators.

The oracle here deliberately uses a different algorithm (product-graph
search) than the library's canonicalization, so the two can check each
other.
"""

import random

from coinfer.term_core import (
    IntType,
    IntValue,
    ObjType,
    ObjValue,
    UnionType,
)

CLASS_POOL = ("a", "b", "c")
FIELD_POOL = ("f", "g", "h")


def local_shape(node):
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
    raise TypeError(node)


def node_children(node):
    if isinstance(node, (IntType, IntValue)):
        return ()
    if isinstance(node, (ObjType, ObjValue)):
        return tuple(node.fields[f] for f in sorted(node.fields))
    return (node.left, node.right)


def trees_equal_oracle(t1, t2):
    """True iff the two graphs unfold to the same infinite tree.

    Product-graph search: the unfoldings differ iff some reachable pair
    of positions disagrees on its local constructor.
    """
    seen = set()
    todo = [(t1, t2)]
    while todo:
        a, b = todo.pop()
        if (a.uid, b.uid) in seen:
            continue
        seen.add((a.uid, b.uid))
        if local_shape(a) != local_shape(b):
            return False
        todo.extend(zip(node_children(a), node_children(b)))
    return True


def random_type(rng, size):
    """Random connected type graph with at most `size` nodes (cycles allowed)."""
    kinds = [rng.choice(("int", "obj", "union")) for _ in range(size)]
    nodes = []
    for kind in kinds:
        if kind == "int":
            nodes.append(IntType())
        elif kind == "obj":
            nodes.append(ObjType(rng.choice(CLASS_POOL)))
        else:
            nodes.append(UnionType())
    for node in nodes:
        if isinstance(node, UnionType):
            node.left = rng.choice(nodes)
            node.right = rng.choice(nodes)
        elif isinstance(node, ObjType):
            names = rng.sample(FIELD_POOL, rng.randint(0, len(FIELD_POOL)))
            node.fields = dict(sorted((f, rng.choice(nodes)) for f in names))
    return nodes[0]


def random_value(rng, size, max_int=5):
    """Random connected value graph with at most `size` nodes."""
    nodes = []
    for _ in range(size):
        if rng.random() < 0.4:
            nodes.append(IntValue(rng.randint(-max_int, max_int)))
        else:
            nodes.append(ObjValue(rng.choice(CLASS_POOL)))
    for node in nodes:
        if isinstance(node, ObjValue):
            names = rng.sample(FIELD_POOL, rng.randint(0, len(FIELD_POOL)))
            node.fields = dict(sorted((f, rng.choice(nodes)) for f in names))
    return nodes[0]


def seeded(seed):
    return random.Random(seed)


_FAMILY_DECLS = """
Zer = obj(zero, []);
Nat = Zer \\/ obj(succ, [pred: Nat]);
Pos = obj(succ, [pred: Zer]) \\/ obj(succ, [pred: Pos]);
Evn = Zer \\/ obj(succ, [pred: obj(succ, [pred: Evn])]);
Odd = obj(succ, [pred: Zer]) \\/ obj(succ, [pred: obj(succ, [pred: Odd])]);
Bot = Bot \\/ Bot;
root %s
"""


def number_types():
    """The zero/succ family: zer, nat, pos, evn, odd, plus the empty type."""
    from coinfer.term_core import type_from_source

    return {name.lower(): type_from_source(_FAMILY_DECLS % name)
            for name in ("Zer", "Nat", "Pos", "Evn", "Odd", "Bot")}


def _shell(node):
    if isinstance(node, IntType):
        return IntType()
    if isinstance(node, UnionType):
        return UnionType()
    if isinstance(node, ObjType):
        return ObjType(node.class_name)
    if isinstance(node, IntValue):
        return IntValue(node.value)
    return ObjValue(node.class_name)


def inflate(t, rng, copies=2):
    """Bisimilar graph with every node duplicated and edges re-wired
    randomly among the duplicates (representation noise)."""
    from coinfer.term_core import subterm_closure

    nodes = list(subterm_closure(t))
    clones = {n.uid: [_shell(n) for _ in range(copies)] for n in nodes}
    for n in nodes:
        for clone in clones[n.uid]:
            if isinstance(n, UnionType):
                clone.left = rng.choice(clones[n.left.uid])
                clone.right = rng.choice(clones[n.right.uid])
            elif isinstance(n, (ObjType, ObjValue)):
                clone.fields = {f: rng.choice(clones[c.uid])
                                for f, c in n.fields.items()}
    return clones[t.uid][0]
