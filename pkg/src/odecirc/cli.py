"""Command-line front end (``odecirc``)."""
from __future__ import annotations

import argparse
import os
import random
import sys
from typing import List, Optional, Sequence

from . import circuit as cir
from .errors import OdeCircError, ValidationError
from .modes import diagnose, get_mode, specialize, validate


def _widths(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(w) for w in text.split(",") if w.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad width list {text!r}") from None


def _load_term(args):
    from .dsl import parse_dsl
    text = args.expr
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            text = fh.read()
    return parse_dsl(text, args.arity)


def _checked(args):
    raw = _load_term(args)
    mode = get_mode(args.mode)
    return validate(specialize(raw, mode), mode)


def _oracles():
    from .stdlib import default_oracles
    return default_oracles()


def _variant(checked) -> str:
    return "TC" if checked.mode.is_tc else "AC"


def _out(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# verbs

def cmd_check(args) -> int:
    raw = _load_term(args)
    mode = get_mode(args.mode)
    diags = diagnose(specialize(raw, mode), mode)
    for d in diags:
        print(d)
    errors = [d for d in diags if d.severity == "error"]
    if not errors:
        print(f"OK {mode.name} arity {raw.arity}")
    return 1 if errors else 0


def cmd_eval(args) -> int:
    from .evaluator import Evaluator, StepEvaluator
    t = _checked(args)
    vals = [int(v) for v in args.values]
    ev = StepEvaluator(_oracles(), args.max_oracle_x) if args.step else Evaluator(_oracles())
    print(ev(t, vals))
    return 0


def cmd_compile(args) -> int:
    from .compiler import compile_term
    t = _checked(args)
    widths = args.widths or [8] * t.arity
    if len(widths) == 1 and t.arity > 1:
        widths = widths * t.arity
    comp = compile_term(t, widths, _variant(t))
    _out(args, cir.encode(comp.circuit))
    plan = comp.plan
    print(f"# widths {','.join(map(str, plan.input_widths))} -> {plan.out_width} output bits"
          f"{' (signed)' if plan.signed else ''}; phantom inputs {comp.phantom_inputs}",
          file=sys.stderr)
    return 0


def _read_circuit(path: str):
    with open(path, encoding="utf-8") as fh:
        return cir.validate_normal_form(cir.decode(fh.read()))


def cmd_simulate(args) -> int:
    c = _read_circuit(args.circuit)
    bits = args.bits.strip()
    if any(ch not in "01" for ch in bits):
        raise OdeCircError(f"input must be a bit string, got {bits!r}")
    if len(bits) != c.n_inputs:
        raise OdeCircError(f"circuit has {c.n_inputs} inputs, got {len(bits)} bits")
    print(str(cir.simulate(c, [int(ch) for ch in bits])))
    return 0


def _sample_args(rng: random.Random, widths: Sequence[int]):
    return tuple(rng.randrange(1 << w) for w in widths)


def cmd_verify(args) -> int:
    from .compiler import compile_term
    from .errors import BoundExceeded, UnboundOracle
    from .evaluator import Evaluator, StepEvaluator
    t = _checked(args)
    p = t.arity
    widths = args.widths or [8] * p
    if len(widths) == 1 and p > 1:
        widths = widths * p
    rng = random.Random(args.seed)
    samples = [_sample_args(rng, widths) for _ in range(args.samples)]
    ev = Evaluator(_oracles())
    expected = [ev(t, s) for s in samples]
    failed = False

    step = StepEvaluator(_oracles(), args.max_oracle_x)
    bad = 0
    try:
        for s, e in zip(samples, expected):
            if step(t, s) != e:
                bad += 1
        verdict = "PASS" if bad == 0 else "FAIL"
        print(f"{verdict} step-oracle {len(samples) - bad}/{len(samples)}")
    except BoundExceeded as exc:
        print(f"FAIL step-oracle {exc}")
        bad = 1
    failed |= bad > 0

    try:
        comp = compile_term(t, widths, _variant(t))
    except UnboundOracle as exc:
        print(f"SKIP compiled-circuit ({exc})")
    else:
        got = comp.run_batch(samples)
        bad = sum(g != e for g, e in zip(got, expected))
        verdict = "PASS" if bad == 0 else "FAIL"
        print(f"{verdict} compiled-circuit {len(samples) - bad}/{len(samples)} "
              f"(depth {comp.circuit.depth}, size {comp.circuit.size})")
        failed |= bad > 0
    return 1 if failed else 0


def cmd_stats(args) -> int:
    from .compiler import depth_profile
    t = _checked(args)
    print("width depth size")
    for row in depth_profile(t, args.widths or [4, 8, 16], _variant(t)):
        print(f"{row['width']} {row['depth']} {row['size']}")
    return 0


def cmd_stdlib_list(args) -> int:
    from .stdlib import REGISTRY
    for name in REGISTRY:
        nt = REGISTRY[name]()
        modes = ",".join(sorted(nt.modes))
        print(f"{name}\tarity {nt.arity}\t{modes}\t{nt.doc}".rstrip())
    return 0


def cmd_roundtrip(args) -> int:
    from .nonuniform import all_inputs, roundtrip_check
    c = _read_circuit(args.circuit)
    inputs = all_inputs(c.n_inputs)
    if args.samples is not None and args.samples < len(inputs):
        inputs = random.Random(args.seed).sample(inputs, args.samples)
    report = roundtrip_check(c, inputs)
    print(report.format())
    print("PASS roundtrip" if report.ok else "FAIL roundtrip")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="odecirc",
                                 description="Discrete-ODE function algebras and their circuits.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", default="ACDL", help="preset name (default ACDL)")
    common.add_argument("--arity", type=int, default=None, help="override the inferred arity")
    common.add_argument("--widths", type=_widths, default=None, help="comma separated bit widths")
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-oracle-x", type=int, default=None,
                        help="step-oracle bound (env ODECIRC_MAX_ORACLE_X)")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    sub = ap.add_subparsers(dest="verb", required=True)

    def term_verb(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("expr", help="term in the DSL, or @file")
        p.set_defaults(fn=fn)
        return p

    term_verb("check", cmd_check, "validate a term under a mode")
    p = term_verb("eval", cmd_eval, "evaluate a term on decimal arguments")
    p.add_argument("values", nargs="*")
    p.add_argument("--step", action="store_true", help="iterate the schemas instead")
    term_verb("compile", cmd_compile, "compile a term to the circuit interchange format")
    term_verb("verify", cmd_verify, "eval vs step oracle and vs compiled circuit")
    term_verb("stats", cmd_stats, "depth and size across widths")
    p = sub.add_parser("simulate", parents=[common], help="run a circuit file on an LSB-first bit string")
    p.add_argument("circuit")
    p.add_argument("bits")
    p.set_defaults(fn=cmd_simulate)
    p = sub.add_parser("roundtrip", parents=[common], help="non-uniform round trip on a circuit file")
    p.add_argument("circuit")
    p.set_defaults(fn=cmd_roundtrip)
    p = sub.add_parser("stdlib-list", parents=[common], help="list stdlib terms")
    p.set_defaults(fn=cmd_stdlib_list)
    p = sub.add_parser("stdlib", parents=[common], help="stdlib commands ('stdlib list')")
    p.add_argument("action", choices=["list"])
    p.set_defaults(fn=cmd_stdlib_list)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "verify" and args.samples is None:
        args.samples = 100
    if args.max_oracle_x is None and os.environ.get("ODECIRC_MAX_ORACLE_X"):
        args.max_oracle_x = int(os.environ["ODECIRC_MAX_ORACLE_X"])
    try:
        return args.fn(args)
    except ValidationError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return 1
    except (OdeCircError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
