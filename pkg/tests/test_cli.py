import json

import pytest

from coinfer.cli import main
from coinfer.term_core import (
    equal,
    type_from_json,
    type_from_source,
    value_from_json,
    value_from_source,
)
from coinfer.interpretation import member

BOT = "B = B \\/ B; root B;"
INT = "T = int; root T;"
NAT = "Z = obj(zero, []); N = Z \\/ obj(succ, [pred: N]); root N;"
ODD = ("O = obj(succ, [pred: obj(zero, [])])"
       " \\/ obj(succ, [pred: obj(succ, [pred: O])]); root O;")
EVN = ("E = obj(zero, [])"
       " \\/ obj(succ, [pred: obj(succ, [pred: E])]); root E;")

ZERO_SUCC = """
class Zero {
  add(n) { return n; }
}
class Succ {
  pred;
  Succ(n) { this.pred = n; }
  add(n) { return pred.add(new Succ(n)); }
}
"""

ZER_QUERY = ("Z = obj(zero, []); "
             "O = obj(succ, [pred: obj(zero, [])])"
             " \\/ obj(succ, [pred: obj(succ, [pred: O])]); "
             "invoke(Z, add, [O], R)")

EVN_QUERY = ("E = obj(zero, [])"
             " \\/ obj(succ, [pred: obj(succ, [pred: E])]); "
             "O = obj(succ, [pred: obj(zero, [])])"
             " \\/ obj(succ, [pred: obj(succ, [pred: O])]); "
             "invoke(E, add, [O], R)")


def put(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_subtype_bottom_below_int(tmp_path, capsys):
    bot = put(tmp_path, "bot.ty", BOT)
    i = put(tmp_path, "int.ty", INT)
    assert main(["subtype", bot, i]) == 0
    assert "subtype" in capsys.readouterr().out


def test_subtype_int_not_below_bottom(tmp_path, capsys):
    bot = put(tmp_path, "bot.ty", BOT)
    i = put(tmp_path, "int.ty", INT)
    assert main(["subtype", i, bot]) == 1
    assert "not" in capsys.readouterr().out


def test_subtype_trace_prints_derivation(tmp_path, capsys):
    bot = put(tmp_path, "bot.ty", BOT)
    i = put(tmp_path, "int.ty", INT)
    assert main(["subtype", bot, i, "--trace"]) == 0
    out = capsys.readouterr().out
    assert "<=" in out


def test_subtype_budget_reported_as_exit3(tmp_path, capsys):
    nat = put(tmp_path, "nat.ty", NAT)
    rc = main(["subtype", nat, nat, "--memo-limit", "1"])
    assert rc == 3
    assert "budget" in capsys.readouterr().err


def test_empty_bottom_prints_empty(tmp_path, capsys):
    bot = put(tmp_path, "bot.ty", BOT)
    assert main(["empty", bot]) == 1
    assert capsys.readouterr().out.strip() == "empty"


def test_empty_inhabited_with_witness(tmp_path, capsys):
    nat = put(tmp_path, "nat.ty", NAT)
    assert main(["empty", nat, "--witness"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].strip() == "not empty"
    wit = value_from_source("\n".join(out.splitlines()[1:]))
    assert member(wit, type_from_source(NAT))


def test_parse_text_round_trip(tmp_path, capsys):
    nat = put(tmp_path, "nat.ty", NAT)
    assert main(["parse", nat]) == 0
    printed = capsys.readouterr().out
    assert equal(type_from_source(printed), type_from_source(NAT))


def test_parse_json_round_trip(tmp_path, capsys):
    nat = put(tmp_path, "nat.ty", NAT)
    assert main(["parse", nat, "--format", "json"]) == 0
    blob = capsys.readouterr().out
    assert equal(type_from_json(blob), type_from_source(NAT))


def test_json_files_accepted_as_input(tmp_path, capsys):
    nat = put(tmp_path, "nat.ty", NAT)
    main(["parse", nat, "--format", "json"])
    blob = capsys.readouterr().out
    jf = put(tmp_path, "nat.json", blob)
    assert main(["subtype", jf, nat]) == 0
    capsys.readouterr()


def test_parse_value_file(tmp_path, capsys):
    vf = put(tmp_path, "two.val",
             "V = obj(succ, [pred -> obj(succ, [pred -> obj(zero, [])])]); root V;")
    assert main(["parse", vf, "--value"]) == 0
    printed = capsys.readouterr().out
    assert member(value_from_source(printed), type_from_source(NAT))


def test_parse_error_is_usage_error(tmp_path, capsys):
    bad = put(tmp_path, "bad.ty", "T = obj(; root T;")
    assert main(["parse", bad]) == 2
    assert capsys.readouterr().err != ""


def test_missing_file_is_usage_error(tmp_path, capsys):
    assert main(["parse", str(tmp_path / "nope.ty")]) == 2
    capsys.readouterr()


def test_unknown_command_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2
    capsys.readouterr()


def test_compile_prints_clause_program(tmp_path, capsys):
    prog = put(tmp_path, "prog.src", ZERO_SUCC)
    assert main(["compile", prog]) == 0
    out = capsys.readouterr().out
    assert "subclass(X,Y) :- extends(X,Z),subclass(Z,Y)." in out
    assert "new(object,[],obj(object,[]))." in out
    assert ("has_meth(succ,add,[This,N],V2) :- field_acc(This,pred,V0),"
            "new(succ,[N],V1),invoke(V0,add,[V1],V2)." in out)


def test_compile_json_matches_text(tmp_path, capsys):
    prog = put(tmp_path, "prog.src", ZERO_SUCC)
    main(["compile", prog])
    text_lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    assert main(["compile", prog, "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["clauses"] == text_lines


def test_compile_bad_program_is_usage_error(tmp_path, capsys):
    prog = put(tmp_path, "prog.src", "class A extends Missing { }")
    assert main(["compile", prog]) == 2
    capsys.readouterr()


def test_member_positive_and_negative(tmp_path, capsys):
    nat = put(tmp_path, "nat.ty", NAT)
    zero = put(tmp_path, "zero.val", "V = obj(zero, []); root V;")
    num = put(tmp_path, "num.val", "V = 7; root V;")
    assert main(["member", zero, nat]) == 0
    assert main(["member", num, nat]) == 1
    capsys.readouterr()


def test_sample_values_all_members(tmp_path, capsys):
    nat = put(tmp_path, "nat.ty", NAT)
    assert main(["sample", nat, "--count", "5", "--seed", "3",
                 "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert 1 <= len(data["values"]) <= 5
    t = type_from_source(NAT)
    for blob in data["values"]:
        assert member(value_from_json(json.dumps(blob)), t)


def test_sample_deterministic_for_seed(tmp_path, capsys):
    nat = put(tmp_path, "nat.ty", NAT)
    main(["sample", nat, "--count", "4", "--seed", "9"])
    first = capsys.readouterr().out
    main(["sample", nat, "--count", "4", "--seed", "9"])
    assert capsys.readouterr().out == first


def test_sample_empty_type_is_negative(tmp_path, capsys):
    bot = put(tmp_path, "bot.ty", BOT)
    assert main(["sample", bot]) == 1
    assert "empty" in capsys.readouterr().err


def test_solve_ground_receiver(tmp_path, capsys):
    prog = put(tmp_path, "prog.src", ZERO_SUCC)
    assert main(["solve", prog, "--query", ZER_QUERY]) == 0
    out = capsys.readouterr().out
    assert "R =" in out


def test_solve_json_answer_round_trips(tmp_path, capsys):
    prog = put(tmp_path, "prog.src", ZERO_SUCC)
    assert main(["solve", prog, "--query", ZER_QUERY,
                 "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["complete"] is True
    assert len(data["answers"]) == 1
    r = data["answers"][0]["bindings"]["R"]
    assert r["kind"] == "type"
    back = type_from_json(json.dumps(r["term"]))
    assert equal(back, type_from_source(ODD))


def test_solve_expectation_check(tmp_path, capsys):
    prog = put(tmp_path, "prog.src", ZERO_SUCC)
    odd = put(tmp_path, "odd.ty", ODD)
    evn = put(tmp_path, "evn.ty", EVN)
    assert main(["solve", prog, "--query", ZER_QUERY, "--expect", odd]) == 0
    assert main(["solve", prog, "--query", ZER_QUERY, "--expect", evn]) == 1
    capsys.readouterr()


def test_solve_union_receiver_needs_subsumption(tmp_path, capsys):
    prog = put(tmp_path, "prog.src", ZERO_SUCC)
    assert main(["solve", prog, "--query", EVN_QUERY]) == 0
    out = capsys.readouterr().out
    assert "R =" in out
    rc = main(["solve", prog, "--query", EVN_QUERY, "--no-subsumption",
               "--max-depth", "16"])
    assert rc == 3
    assert "inconclusive" in capsys.readouterr().out


def test_solve_no_answers_is_negative(tmp_path, capsys):
    prog = put(tmp_path, "prog.src", ZERO_SUCC)
    assert main(["solve", prog, "--query", "dec_field(zero, F)"]) == 1
    assert "no answers" in capsys.readouterr().out


def test_solve_bad_query_is_usage_error(tmp_path, capsys):
    prog = put(tmp_path, "prog.src", ZERO_SUCC)
    assert main(["solve", prog, "--query", "invoke("]) == 2
    capsys.readouterr()
