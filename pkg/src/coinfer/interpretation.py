"""Membership of values in regular types, and value sampling.

member decides v ∈ t coinductively: a cycle in the judgment graph is
accepted iff it passes through an object-rule application (union steps
alone never justify membership).  Results whose justification stays
within the judgment's own subtree are cached; path-dependent outcomes
are recomputed in each context.

sample_values draws members of a type: the canonical witness first, one
deliberately cyclic value when the type admits any, then seeded random
walks over the inhabited part of the type graph.
"""

import random
from collections import deque

from coinfer.emptiness import not_empty, witness
from coinfer.term_core import (
    BudgetExceeded,
    IntType,
    IntValue,
    ObjType,
    ObjValue,
    UnionType,
    canonicalize,
    subterm_closure,
)

_INF = float("inf")

DEFAULT_LIMIT = 1_000_000


def _obj_applies(v, t):
    return (isinstance(v, ObjValue)
            and v.class_name == t.class_name
            and all(f in v.fields for f in t.fields))


def _expand(v, t):
    if isinstance(t, UnionType):
        ok, low = yield (v, t.left)
        if ok:
            return (True, low)
        ok2, low2 = yield (v, t.right)
        if ok2:
            return (True, low2)
        return (False, min(low, low2))
    low = _INF
    for f in sorted(t.fields):
        ok, l = yield (v.fields[f], t.fields[f])
        if not ok:
            return (False, l)
        low = min(low, l)
    return (True, low)


def member(v, t, limit=DEFAULT_LIMIT):
    """True iff the value inhabits the type.

    limit bounds the number of judgment expansions; exceeding it raises
    BudgetExceeded.
    """
    path = {}   # (v uid, t uid) -> position
    objs = []   # ascending positions of object-rule applications
    memo = {}   # (v uid, t uid) -> bool, context-free results only
    steps = 0

    def classify(v, t):
        nonlocal steps
        key = (v.uid, t.uid)
        if key in memo:
            return ("done", (memo[key], _INF))
        if key in path:
            q = path[key]
            return ("done", (bool(objs) and objs[-1] >= q, q))
        if isinstance(t, IntType):
            return ("done", (isinstance(v, IntValue), _INF))
        if isinstance(t, ObjType) and not _obj_applies(v, t):
            return ("done", (False, _INF))
        steps += 1
        if steps > limit:
            raise BudgetExceeded("membership budget of %d expansions" % limit)
        pos = len(path)
        path[key] = pos
        if isinstance(t, ObjType):
            objs.append(pos)
        return ("run", (_expand(v, t), key, pos, isinstance(t, ObjType)))

    kind, payload = classify(v, t)
    if kind == "done":
        return payload[0]

    stack = [payload]
    sent = None
    while stack:
        gen, key, pos, is_obj = stack[-1]
        try:
            child = gen.send(sent) if sent is not None else next(gen)
        except StopIteration as fin:
            ok, low = fin.value
            del path[key]
            if is_obj:
                objs.pop()
            stack.pop()
            if low >= pos:
                memo[key] = ok
                low = _INF
            sent = (ok, low)
            continue
        kind, payload = classify(*child)
        if kind == "done":
            sent = payload
        else:
            stack.append(payload)
            sent = None
    return sent[0]


# ---------------------------------------------------------------------------
# sampling

def _viable_children(node, nonempty):
    if isinstance(node, UnionType):
        return [c for c in (node.left, node.right) if nonempty[c.uid]]
    if isinstance(node, ObjType):
        return [node.fields[f] for f in sorted(node.fields)]
    return []


def _find_obj_cycle(t, nonempty):
    """A reachable object node that can reach itself through inhabited
    nodes; returns the forced route t -> ... -> O -> ... -> O, or None."""
    reach = sorted((n for n in subterm_closure(t) if nonempty[n.uid]),
                   key=lambda n: n.uid)

    def bfs(starts, goal_uid):
        parents = {}
        queue = deque(starts)
        seen = {n.uid for n in queue}
        while queue:
            n = queue.popleft()
            if n.uid == goal_uid:
                out = [n]
                while out[-1].uid in parents:
                    out.append(parents[out[-1].uid])
                return list(reversed(out))
            for c in _viable_children(n, nonempty):
                if c.uid not in seen:
                    seen.add(c.uid)
                    parents[c.uid] = n
                    queue.append(c)
        return None

    for node in reach:
        if not isinstance(node, ObjType):
            continue
        back = bfs(_viable_children(node, nonempty), node.uid)
        if back is None:
            continue
        entry = bfs([t], node.uid)
        if entry is not None:
            return entry + back
    return None


def _forced_cyclic(t, nonempty, wit):
    """A member of t whose value graph is cyclic, or None if t has none.

    Follows a route ending in a repeated object node; the repeat ties the
    knot, fields off the route take witness values.
    """
    route = _find_obj_cycle(t, nonempty)
    if route is None:
        return None
    knot_uid = route[-1].uid
    pending = {}

    def build(i):
        node = route[i]
        if i == len(route) - 1:
            return pending[knot_uid]
        if isinstance(node, UnionType):
            return build(i + 1)
        val = ObjValue(node.class_name)
        val.fields = {}
        if node.uid == knot_uid and knot_uid not in pending:
            pending[knot_uid] = val
        nxt = route[i + 1]
        route_field = next(f for f in sorted(node.fields) if node.fields[f] is nxt)
        for f in sorted(node.fields):
            if f == route_field:
                val.fields[f] = build(i + 1)
            else:
                val.fields[f] = wit(node.fields[f])
        return val

    return build(0)


def _random_walk(t, rng, nonempty, wit, max_nodes=60):
    pending = {}  # type uid -> stack of object values under construction
    budget = [max_nodes]

    def go(node):
        budget[0] -= 1
        if budget[0] <= 0:
            return wit(node)
        if isinstance(node, IntType):
            return IntValue(rng.randint(-999, 999))
        if isinstance(node, UnionType):
            return go(rng.choice(_viable_children(node, nonempty)))
        here = pending.get(node.uid)
        if here and rng.random() < 0.25:
            return here[-1]
        val = ObjValue(node.class_name)
        val.fields = {}
        pending.setdefault(node.uid, []).append(val)
        for f in sorted(node.fields):
            val.fields[f] = go(node.fields[f])
        pending[node.uid].pop()
        return val

    return go(t)


def sample_values(t, count, seed):
    """Up to `count` distinct members of t, deterministic for a seed.

    The canonical witness comes first, then a cyclic member when the type
    admits one, then random walks.  Raises ValueError on an empty type.
    Every emitted value is re-checked with member.
    """
    nonempty = {n.uid: not_empty(n) for n in subterm_closure(t)}
    if not nonempty[t.uid]:
        raise ValueError("cannot sample values of an empty type")
    if count <= 0:
        return []
    rng = random.Random(seed)
    wit_cache = {}

    def wit(node):
        if node.uid not in wit_cache:
            wit_cache[node.uid] = witness(node)
        return wit_cache[node.uid]

    out = []
    seen = set()

    def emit(v):
        if v is None:
            return
        c = canonicalize(v)
        if c.uid in seen:
            return
        assert member(v, t), "sampler produced a non-member"
        seen.add(c.uid)
        out.append(v)

    emit(wit(t))
    if len(out) < count:
        emit(_forced_cyclic(t, nonempty, wit))
    attempts = 0
    while len(out) < count and attempts < 30 * count:
        attempts += 1
        emit(_random_walk(t, rng, nonempty, wit))
    return out[:count]
