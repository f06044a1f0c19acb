import pytest

from coinfer.emptiness import not_empty, witness
from coinfer.interpretation import member, sample_values
from coinfer.term_core import (
    BudgetExceeded,
    IntType,
    IntValue,
    ObjType,
    ObjValue,
    UnionType,
    canonicalize,
    type_from_source,
    value_from_source,
)

from conftest import CLASS_POOL, FIELD_POOL, random_type, random_value, seeded

NAT = "N = obj(zero, []) \\/ obj(succ, [pred: N]); root N"
BOT = "B = B \\/ B; root B"
VINF = "V = obj(succ, [pred -> V]); root V"


# Oracle: inductive membership for acyclic values.  A repeated
# value/type pair on the path means the type side looped through unions
# without consuming any value structure, which can never succeed.

def inductive_member(v, t, path=frozenset()):
    key = (v.uid, t.uid)
    if key in path:
        return False
    if isinstance(t, IntType):
        return isinstance(v, IntValue)
    if isinstance(t, UnionType):
        return (inductive_member(v, t.left, path | {key})
                or inductive_member(v, t.right, path | {key}))
    return (isinstance(v, ObjValue)
            and v.class_name == t.class_name
            and all(f in v.fields for f in t.fields)
            and all(inductive_member(v.fields[f], t.fields[f]) for f in t.fields))


def tree_value(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        return IntValue(rng.randint(-5, 5))
    node = ObjValue(rng.choice(CLASS_POOL))
    names = rng.sample(FIELD_POOL, rng.randint(0, len(FIELD_POOL)))
    node.fields = dict(sorted((f, tree_value(rng, depth - 1)) for f in names))
    return node


def has_cycle(v):
    state = {}

    def walk(n):
        if state.get(n.uid) == "open":
            return True
        if n.uid in state:
            return False
        state[n.uid] = "open"
        kids = n.fields.values() if isinstance(n, ObjValue) else ()
        hit = any(walk(c) for c in kids)
        state[n.uid] = "done"
        return hit

    return walk(v)


# --- fixed examples ----------------------------------------------------------

def test_integer_in_int():
    assert member(IntValue(0), IntType())
    assert member(IntValue(-17), IntType())


def test_cyclic_value_in_recursive_type():
    vinf = value_from_source(VINF)
    nat = type_from_source(NAT)
    assert member(vinf, nat)


def test_nothing_in_bottom():
    bot = type_from_source(BOT)
    assert not member(IntValue(0), bot)
    assert not member(value_from_source(VINF), bot)
    for v in sample_values(type_from_source(NAT), 5, seed=1):
        assert not member(v, bot)


def test_any_integer_in_int_union_loop():
    t = type_from_source("T = int \\/ T; root T")
    for i in (-3, 0, 7, 123456):
        assert member(IntValue(i), t)


def test_value_may_have_extra_fields():
    v = value_from_source("V = obj(c, [f -> 1, g -> 2]); root V")
    t = type_from_source("T = obj(c, [f: int]); root T")
    assert member(v, t)


def test_class_names_must_match():
    v = value_from_source("V = obj(c, [f -> 1]); root V")
    t = type_from_source("T = obj(d, [f: int]); root T")
    assert not member(v, t)


def test_type_field_missing_from_value():
    v = value_from_source("V = obj(c, []); root V")
    t = type_from_source("T = obj(c, [f: int]); root T")
    assert not member(v, t)


def test_finite_value_needs_matching_depth():
    two = value_from_source(
        "V = obj(succ, [pred -> obj(succ, [pred -> obj(zero, [])])]); root V")
    nat = type_from_source(NAT)
    evn = type_from_source(
        "E = obj(zero, []) \\/ obj(succ, [pred: obj(succ, [pred: E])]); root E")
    assert member(two, nat)
    assert member(two, evn)
    one = value_from_source("V = obj(succ, [pred -> obj(zero, [])]); root V")
    assert member(one, nat)
    assert not member(one, evn)


def test_member_budget_raises():
    with pytest.raises(BudgetExceeded):
        member(value_from_source(VINF), type_from_source(NAT), limit=1)


# --- sampling ----------------------------------------------------------------

def test_sample_int_gives_distinct_integers():
    vals = sample_values(IntType(), 3, seed=11)
    assert len(vals) == 3
    assert len({v.value for v in vals}) == 3


def test_sample_nat_includes_zero_object():
    vals = sample_values(type_from_source(NAT), 3, seed=7)
    zero = ObjValue("zero")
    assert any(canonicalize(v) is canonicalize(zero) for v in vals)


def test_sample_includes_cyclic_value_when_admitted():
    nat = type_from_source(NAT)
    vals = sample_values(nat, 10, seed=3)
    vinf = value_from_source(VINF)
    cyclic = [v for v in vals if has_cycle(v)]
    assert cyclic
    assert all(canonicalize(v) is canonicalize(vinf) for v in cyclic)


def test_sample_on_empty_type_rejected():
    with pytest.raises(ValueError):
        sample_values(type_from_source(BOT), 3, seed=1)


def test_sample_deterministic_per_seed():
    t = type_from_source(NAT)
    a = [canonicalize(v).uid for v in sample_values(t, 8, seed=42)]
    b = [canonicalize(v).uid for v in sample_values(t, 8, seed=42)]
    assert a == b


def test_sample_finite_type_returns_fewer():
    t = type_from_source("T = obj(zero, []); root T")
    vals = sample_values(t, 5, seed=2)
    assert len(vals) == 1


def test_samples_all_members():
    rng = seeded(888)
    produced = 0
    for _ in range(120):
        t = random_type(rng, rng.randint(1, 8))
        if not not_empty(t):
            continue
        for v in sample_values(t, 5, seed=rng.randint(0, 10**6)):
            produced += 1
            assert member(v, t)
    assert produced > 100


# --- properties ---------------------------------------------------------------

def test_witness_always_member():
    rng = seeded(999)
    for _ in range(400):
        t = random_type(rng, rng.randint(1, 10))
        w = witness(t)
        if w is not None:
            assert member(w, t)


def test_union_membership_splits():
    rng = seeded(123)
    for _ in range(250):
        t1 = random_type(rng, rng.randint(1, 5))
        t2 = random_type(rng, rng.randint(1, 5))
        u = UnionType(t1, t2)
        v = tree_value(rng, 3)
        assert member(v, u) == (member(v, t1) or member(v, t2))


def test_member_invariant_under_canonicalize():
    rng = seeded(321)
    for _ in range(250):
        t = random_type(rng, rng.randint(1, 8))
        v = random_value(rng, rng.randint(1, 6))
        assert member(v, t) == member(canonicalize(v), canonicalize(t))


def test_acyclic_agreement_with_inductive_oracle():
    rng = seeded(777)
    for _ in range(500):
        t = random_type(rng, rng.randint(1, 8))
        v = tree_value(rng, 3)
        assert member(v, t) == inductive_member(v, t)
