"""Coinductive subtyping and Horn-clause type inference over regular terms."""

from coinfer.term_core import (
    BudgetExceeded,
    EquationSystem,
    IntType,
    IntValue,
    ObjType,
    ObjValue,
    ParseError,
    TermError,
    TypeTerm,
    UnionType,
    ValueTerm,
    canonicalize,
    equal,
    parse_type,
    parse_value,
    print_type,
    print_value,
    resolve,
    resolve_value,
    subterm_closure,
    type_from_source,
    value_from_source,
)

__all__ = [
    "BudgetExceeded",
    "EquationSystem",
    "IntType",
    "IntValue",
    "ObjType",
    "ObjValue",
    "ParseError",
    "TermError",
    "TypeTerm",
    "UnionType",
    "ValueTerm",
    "canonicalize",
    "equal",
    "parse_type",
    "parse_value",
    "print_type",
    "print_value",
    "resolve",
    "resolve_value",
    "subterm_closure",
    "type_from_source",
    "value_from_source",
]
