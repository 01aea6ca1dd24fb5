import pytest

from odecirc.circuit import decode, encode, example_and_circuit, validate_normal_form
from odecirc.cli import main
from odecirc.dsl import parse_dsl
from odecirc.errors import InconsistentArity, ParseError, UnknownStdName
from odecirc.evaluator import evaluate
from odecirc.stdlib import get
from odecirc.terms import Ode1, Ode4


@pytest.mark.parametrize("text,args,want", [
    ("(+ x1 x2)", (3, 4), 7),
    ("(- x1 x2)", (3, 4), -1),
    ("(len x1)", (8,), 4),
    ("(sg (div2 x1))", (1,), 0),
    ("(ode1 x1 0)", (6, 5), 40),
    ("(ode3 x1)", (3, 20), 5),
    ("(std smash)", (3, 5), 64),
    ("(comp (std msp) x2 x1)", (20, 3), 5),
    ("(proj 2 3)", (1, 2, 3), 2),
    ("1 ; a comment", (), 1),
])
def test_parse_examples(text, args, want):
    assert evaluate(parse_dsl(text), args) == want


def test_parse_shapes():
    assert isinstance(parse_dsl("(ode1 x1 0)"), Ode1)
    t = parse_dsl("(ode4 1 1 -)")
    assert isinstance(t, Ode4) and t.direction == -1
    assert parse_dsl("x1", arity=3).arity == 3


@pytest.mark.parametrize("text,err", [
    ("(+ 0", ParseError),
    ("(+ 1 2 3)", ParseError),
    ("(frob x1)", ParseError),
    ("(proj 3 2)", ParseError),
    ("(ode4 1 1 ?)", ParseError),
    ("(std nope)", UnknownStdName),
    ("x1 x2", ParseError),
])
def test_parse_errors(text, err):
    with pytest.raises(err):
        parse_dsl(text)


def test_parse_error_position():
    with pytest.raises(ParseError) as exc:
        parse_dsl("(+ x1\n  (bogus))")
    assert exc.value.line == 2


def test_requested_arity_conflict():
    with pytest.raises(InconsistentArity):
        parse_dsl("x3", arity=2)


def run(capsys, *argv):
    rc = main(list(argv))
    cap = capsys.readouterr()
    return rc, cap.out + cap.err


def test_cli_eval(capsys):
    assert run(capsys, "eval", "(std smash)", "3", "5") == (0, "64\n")
    rc, out = run(capsys, "eval", "--mode", "TCDL-STAR", "--step", "(std bcount)", "255")
    assert (rc, out) == (0, "8\n")


def test_cli_check(capsys):
    rc, out = run(capsys, "check", "(std BIT)")
    assert rc == 0
    rc, out = run(capsys, "check", "(* x1 x2)")
    assert rc == 1 and "ForbiddenNode" in out


def test_cli_parse_error(capsys):
    rc, out = run(capsys, "eval", "(+ 0", "1")
    assert rc == 1 and "ParseError" in out


def test_cli_verify_is_deterministic(capsys):
    first = run(capsys, "verify", "(std mod2)", "--samples", "30", "--seed", "3")
    second = run(capsys, "verify", "(std mod2)", "--samples", "30", "--seed", "3")
    assert first == second
    assert first[0] == 0 and first[1].count("PASS") == 2


def test_cli_compile_writes_valid_circuit(capsys, tmp_path):
    out = tmp_path / "c.txt"
    rc, _ = run(capsys, "compile", "(std shift)", "--widths", "3,3", "--out", str(out))
    assert rc == 0
    c = decode(out.read_text())
    validate_normal_form(c)
    assert decode(encode(c)) == c


def test_cli_simulate_and_roundtrip(capsys, tmp_path):
    path = tmp_path / "and.txt"
    path.write_text(encode(example_and_circuit()))
    assert run(capsys, "simulate", str(path), "11") == (0, "1\n")
    rc, out = run(capsys, "roundtrip", str(path))
    assert rc == 0 and "PASS" in out


def test_cli_stats_and_list(capsys):
    rc, out = run(capsys, "stats", "(std if)", "--widths", "4,8")
    assert rc == 0
    rc, out = run(capsys, "stdlib-list")
    assert rc == 0 and "bcount" in out and "smash" in out
    assert run(capsys, "stdlib", "list")[1] == out


def test_cli_missing_file(capsys, tmp_path):
    rc, out = run(capsys, "simulate", str(tmp_path / "none.txt"), "1")
    assert rc == 1 and out.startswith("error:")
