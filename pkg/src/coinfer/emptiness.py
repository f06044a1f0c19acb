"""Linear-time emptiness of regular types, with witness extraction.

A type is inhabited iff it admits a derivation of the "not empty"
judgment in which no infinite (cyclic) branch consists of union steps
alone: every cycle must pass through an object node.  The checker walks
the term graph once, keeping the current path on an explicit stack that
answers "is the cycle back to this node contractive?" in O(1).

True results whose justification is fully contained in the subtree below
the node are cached for the rest of the call; provisional trues (those
leaning on a cycle to a node still under exploration) and all false
results are recomputed, since they may depend on the path.
"""

from bisect import bisect_left

from coinfer.term_core import IntType, IntValue, ObjType, ObjValue, UnionType

_INF = float("inf")


class PathStack:
    """Path of in-progress nodes with O(1) contractive-cycle queries.

    Tracks, alongside the entries, the positions of object entries in
    ascending order; a cycle back to position q is contractive iff the
    deepest object position is at least q.
    """

    def __init__(self):
        self.entries = []   # (uid, is_obj, position)
        self._pos = {}      # uid -> position
        self._objs = []     # ascending positions of object entries
        self._vals = []     # pending object values, parallel to _objs

    def __len__(self):
        return len(self.entries)

    def push(self, node, pending=None):
        pos = len(self.entries)
        is_obj = isinstance(node, (ObjType, ObjValue))
        self.entries.append((node.uid, is_obj, pos))
        self._pos[node.uid] = pos
        if is_obj:
            self._objs.append(pos)
            self._vals.append(pending)
        return pos

    def pop(self):
        uid, is_obj, _ = self.entries.pop()
        del self._pos[uid]
        if is_obj:
            self._objs.pop()
            self._vals.pop()

    def position_of(self, uid):
        return self._pos.get(uid)

    def is_contractive(self, uid):
        """Does the cycle back to uid's entry pass through an object?"""
        return bool(self._objs) and self._objs[-1] >= self._pos[uid]

    def knot_value(self, uid):
        """Pending value at the first object entry at or after uid's entry.

        Unions pass witness values through unchanged, so this is the value
        the cycle target will end up denoting.
        """
        return self._vals[bisect_left(self._objs, self._pos[uid])]


def _expand(node, pending):
    """Generator protocol: yields children, receives (ok, lowlink, value),
    returns the node's own triple."""
    if isinstance(node, UnionType):
        ok, low, val = yield node.left
        if ok:
            return (True, low, val)
        return (yield node.right)
    low = _INF
    for f in sorted(node.fields):
        ok, l, val = yield node.fields[f]
        if not ok:
            return (False, _INF, None)
        low = min(low, l)
        if pending is not None:
            pending.fields[f] = val
    return (True, low, pending)


def _search(root, build_value):
    path = PathStack()
    memo = {}  # uid -> witness value (or None); only context-free trues
    visits = 0

    def enter(node):
        nonlocal visits
        visits += 1
        if node.uid in memo:
            return ("done", (True, _INF, memo[node.uid]))
        if path.position_of(node.uid) is not None:
            if path.is_contractive(node.uid):
                val = path.knot_value(node.uid) if build_value else None
                return ("done", (True, path.position_of(node.uid), val))
            return ("done", (False, _INF, None))
        if isinstance(node, IntType):
            return ("done", (True, _INF, IntValue(0) if build_value else None))
        pending = None
        if build_value and isinstance(node, ObjType):
            pending = ObjValue(node.class_name)
            pending.fields = {}
        pos = path.push(node, pending)
        return ("run", (_expand(node, pending), node, pos))

    kind, payload = enter(root)
    if kind == "done":
        return payload[0], payload[2], visits

    stack = [payload]
    sent = None
    while stack:
        gen, node, pos = stack[-1]
        try:
            child = gen.send(sent) if sent is not None else next(gen)
        except StopIteration as fin:
            ok, low, val = fin.value
            path.pop()
            stack.pop()
            if ok and low >= pos:
                memo[node.uid] = val
                low = _INF
            sent = (ok, low, val)
            continue
        kind, payload = enter(child)
        if kind == "done":
            sent = payload
        else:
            stack.append(payload)
            sent = None
    return sent[0], sent[2], visits


def not_empty(t):
    """True iff the type is inhabited by at least one value."""
    ok, _, _ = _search(t, build_value=False)
    return ok


def not_empty_with_stats(t):
    """(verdict, node visit count) for measuring traversal cost."""
    ok, _, visits = _search(t, build_value=False)
    return ok, visits


def witness(t):
    """An inhabitant of t (possibly cyclic), or None if t is empty."""
    ok, val, _ = _search(t, build_value=True)
    return val if ok else None
