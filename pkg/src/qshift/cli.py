"""Problem-file DSL, command dispatch, and machine-readable JSON reports.

Grammar (a deliberately small, diff-friendly surface):

    problem := "vars" ident+ ";" "f" "=" expr ";" (option ";")*
    option  := ident "=" (rational | ident)
    expr    := ["-"] term (("+" | "-") term)*
    term    := factor ("*" factor)*
    factor  := base ("^" nat)?
    base    := ident | rational | "(" expr ")"

Rational literals are integers or a/b fractions.  Reports are JSON on
stdout (schema shipped as ``report_schema.json``), diagnostics on stderr;
exit code 0 means status ok, 1 a violated identity, 2 bad input or a
truncation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from .cohomology import (DEGREE_TRUNCATED, WEIGHT_GRADED, TruncationSpec,
                         koszul_dims_at_hbar_zero, milnor_number,
                         twisted_derham_dims)
from .derham import (SearchWindow, canonical_symplectic, check_compatibility)
from .duality import is_self_dual, solve_sign_profile
from .diffops import format_op_monomial
from .errors import ParseError, QShiftError, UnknownVariable
from .gca import Element, make_crit_locus
from .quantise import (FiltrationLabel, bv_quantisation, filtration_dims,
                       mc_residual, nu_eigen_analysis, truncate_quantisation)

SCHEMA_VERSION = 1

_KIND_MAP = {"g": FiltrationLabel.G, "ftilde": FiltrationLabel.FTILDE,
             "conv": FiltrationLabel.CONV}


# ---------------------------------------------------------------------------
# Tokeniser / parser
# ---------------------------------------------------------------------------

class _Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind}, {self.value!r})"


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            num = int(text[i:j])
            if j < n and text[j] == "/" and j + 1 < n and text[j + 1].isdigit():
                j += 1
                k = j
                while k < n and text[k].isdigit():
                    k += 1
                den = int(text[j:k])
                if den == 0:
                    raise ParseError("zero denominator", line, start_col)
                tokens.append(_Token("number", Fraction(num, den), line, start_col))
                col += k - i
                i = k
            else:
                tokens.append(_Token("number", Fraction(num), line, start_col))
                col += j - i
                i = j
            continue
        if ch.isascii() and (ch.isalpha() or ch == "_"):
            j = i
            while j < n and text[j].isascii() and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch in ";=+-*^()":
            tokens.append(_Token(ch, ch, line, start_col))
            col += 1
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", None, line, col))
    return tokens


class ProblemFile:
    __slots__ = ("vars", "f", "options")

    def __init__(self, vars, f, options=None):
        self.vars = list(vars)
        self.f = f
        self.options = dict(options or {})

    def __eq__(self, other):
        if not isinstance(other, ProblemFile):
            return NotImplemented
        return (self.vars == other.vars and self.f == other.f
                and self.options == other.options)

    def crit_locus(self):
        return make_crit_locus(self.f, len(self.vars))


class _Parser:
    def __init__(self, tokens, var_index):
        self.tokens = tokens
        self.pos = 0
        self.var_index = var_index
        self.m = len(var_index)

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.value!r}",
                             tok.line, tok.col)
        return self.advance()

    def parse_expr(self):
        if self.peek().kind == "-":
            self.advance()
            acc = -self.parse_term()
        else:
            acc = self.parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            term = self.parse_term()
            acc = acc + term if op == "+" else acc - term
        return acc

    def parse_term(self):
        acc = self.parse_factor()
        while self.peek().kind == "*":
            self.advance()
            acc = acc * self.parse_factor()
        return acc

    def parse_factor(self):
        base = self.parse_base()
        if self.peek().kind == "^":
            self.advance()
            tok = self.expect("number")
            if tok.value.denominator != 1 or tok.value < 0:
                raise ParseError("exponent must be a natural number",
                                 tok.line, tok.col)
            return base ** int(tok.value)
        return base

    def parse_base(self):
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            idx = self.var_index.get(tok.value)
            if idx is None:
                raise UnknownVariable(f"unknown variable {tok.value!r}",
                                      tok.line, tok.col)
            return Element.y(self.m, idx)
        if tok.kind == "number":
            self.advance()
            return Element.const(self.m, tok.value)
        if tok.kind == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        raise ParseError(f"unexpected token {tok.value!r}", tok.line, tok.col)


def parse_problem(text: str) -> ProblemFile:
    """Parse the problem-file grammar; exact rationals, positions on error."""
    tokens = _tokenize(text)
    pos = 0

    def peek():
        return tokens[pos]

    def advance():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    tok = advance()
    if tok.kind != "ident" or tok.value != "vars":
        raise ParseError("problem must start with 'vars'", tok.line, tok.col)
    names = []
    while peek().kind == "ident":
        names.append(advance().value)
    if not names:
        tok = peek()
        raise ParseError("need at least one variable", tok.line, tok.col)
    if len(set(names)) != len(names):
        raise ParseError("variable names must be unique", tok.line, tok.col)
    tok = peek()
    if tok.kind != ";":
        raise ParseError("expected ';' after variable list", tok.line, tok.col)
    advance()
    tok = advance()
    if tok.kind != "ident" or tok.value != "f":
        raise ParseError("expected 'f = <expr>;'", tok.line, tok.col)
    tok = peek()
    if tok.kind != "=":
        raise ParseError("expected '=' after 'f'", tok.line, tok.col)
    advance()
    var_index = {name: i + 1 for i, name in enumerate(names)}
    parser = _Parser(tokens, var_index)
    parser.pos = pos
    f = parser.parse_expr()
    pos = parser.pos
    tok = peek()
    if tok.kind != ";":
        raise ParseError("expected ';' after f", tok.line, tok.col)
    advance()
    options = {}
    while peek().kind == "ident":
        key = advance().value
        tok = peek()
        if tok.kind != "=":
            raise ParseError("expected '=' in option", tok.line, tok.col)
        advance()
        tok = advance()
        if tok.kind == "number":
            options[key] = tok.value
        elif tok.kind == "ident":
            options[key] = tok.value
        else:
            raise ParseError("option value must be a rational or identifier",
                             tok.line, tok.col)
        tok = peek()
        if tok.kind != ";":
            raise ParseError("expected ';' after option", tok.line, tok.col)
        advance()
    tok = peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.value!r}", tok.line, tok.col)
    return ProblemFile(names, f, options)


def _format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_polynomial(f: Element, names) -> str:
    """Canonical printable form of a polynomial over the declared names."""
    if f.is_zero():
        return "0"
    parts = []
    for key in sorted(f.terms, reverse=True):
        a, _ = key
        coeff = f.terms[key][0]
        mono = []
        for i, e in enumerate(a):
            if e == 1:
                mono.append(names[i])
            elif e > 1:
                mono.append(f"{names[i]}^{e}")
        body = "*".join(mono)
        c = abs(coeff)
        if not body:
            piece = _format_rational(c)
        elif c == 1:
            piece = body
        else:
            piece = f"{_format_rational(c)}*{body}"
        if not parts:
            parts.append(piece if coeff > 0 else f"-{piece}")
        else:
            parts.append(f"+ {piece}" if coeff > 0 else f"- {piece}")
    return " ".join(parts)


def print_problem(problem: ProblemFile) -> str:
    """Canonical text; re-parsing yields an identical structure."""
    lines = [f"vars {' '.join(problem.vars)};",
             f"f = {format_polynomial(problem.f, problem.vars)};"]
    for key in sorted(problem.options):
        value = problem.options[key]
        text = _format_rational(value) if isinstance(value, Fraction) else str(value)
        lines.append(f"{key} = {text};")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Reports and command dispatch
# ---------------------------------------------------------------------------

class Report:
    __slots__ = ("command", "status", "payload", "residual_terms", "timing_ms")

    def __init__(self, command, status, payload, residual_terms=None,
                 timing_ms=0):
        self.command = command
        self.status = status
        self.payload = payload
        self.residual_terms = residual_terms
        self.timing_ms = timing_ms

    def as_dict(self):
        out = {"schema_version": SCHEMA_VERSION, "command": self.command,
               "status": self.status, "payload": self.payload,
               "timing_ms": self.timing_ms}
        if self.residual_terms is not None:
            out["residual_terms"] = self.residual_terms
        return out

    @property
    def exit_code(self):
        return {"ok": 0, "fail": 1, "error": 2}[self.status]


def _residual_terms(op):
    out = []
    for key in sorted(op.terms):
        out.append([format_op_monomial(key, op.m), str(op.terms[key])])
    return out


def _seed(problem, flags):
    env = os.environ.get("QSHIFT_SEED")
    if env is not None:
        return int(env)
    if flags.get("seed") is not None:
        return int(flags["seed"])
    if "seed" in problem.options:
        return int(problem.options["seed"])
    return 0


DEFAULT_HBAR_TRUNC = 8


def _canonical_quantisation(X, problem, flags):
    """The BV quantisation, G-truncated at the configured hbar order."""
    order = int(flags.get("hbar_trunc")
                or problem.options.get("hbar_trunc")
                or DEFAULT_HBAR_TRUNC)
    return truncate_quantisation(bv_quantisation(X), order)


def _trunc_spec(problem, flags, default_mode=None):
    mode_opt = flags.get("mode") or problem.options.get("mode")
    if mode_opt in ("weight", WEIGHT_GRADED):
        mode = WEIGHT_GRADED
    elif mode_opt in ("truncate", "degree", DEGREE_TRUNCATED):
        mode = DEGREE_TRUNCATED
    elif mode_opt is None:
        mode = default_mode
    else:
        raise QShiftError(f"unknown truncation mode {mode_opt!r}")
    bound = flags.get("max_degree") or problem.options.get("max_degree") or 30
    window = problem.options.get("stab_window", 2)
    return mode, TruncationSpec(mode or DEGREE_TRUNCATED, int(bound), int(window))


def run_command(cmd: str, problem: ProblemFile, flags=None) -> Report:
    """Execute one command against a parsed problem file."""
    flags = dict(flags or {})
    t0 = time.monotonic()
    status = "ok"
    payload = {}
    residual_terms = None
    try:
        if cmd == "milnor":
            n = milnor_number(problem.f, len(problem.vars))
            payload = {"milnor": n}
        elif cmd in ("vc-dims", "koszul-dims"):
            X = problem.crit_locus()
            mode, trunc = _trunc_spec(problem, flags)
            if mode is None:
                mode = (WEIGHT_GRADED if X.signature.weights is not None
                        else DEGREE_TRUNCATED)
                trunc = TruncationSpec(mode, trunc.bound,
                                       trunc.stabilisation_window)
            if cmd == "vc-dims":
                report = twisted_derham_dims(X, trunc, seed=_seed(problem, flags))
                payload = report.as_dict()
                payload["field"] = "Q(hbar)"
            else:
                report = koszul_dims_at_hbar_zero(X, trunc)
                payload = report.as_dict()
        elif cmd == "check-mc":
            X = problem.crit_locus()
            residual = mc_residual(X, _canonical_quantisation(X, problem, flags))
            residual_terms = _residual_terms(residual)
            payload = {"residual_zero": residual.is_zero()}
            if not residual.is_zero():
                status = "fail"
                payload["reason"] = "master-equation residual is nonzero"
        elif cmd == "check-compat":
            X = problem.crit_locus()
            size = int(flags.get("window") or problem.options.get("window") or 3)
            window = SearchWindow(order_cap=size, ydeg_cap=size,
                                  hbar_max=size + 2)
            verdict = check_compatibility(canonical_symplectic(X),
                                          _canonical_quantisation(X, problem, flags),
                                          X, window)
            payload = {"verdict": verdict.kind, "window": window.as_dict()}
            if verdict.kind == "CoboundaryWitness":
                payload["witness_terms"] = _residual_terms(verdict.witness)
            if not verdict.ok():
                status = "fail"
                payload["reason"] = "no coboundary witness in the window"
                residual_terms = _residual_terms(verdict.residual)
        elif cmd == "check-selfdual":
            X = problem.crit_locus()
            profile = solve_sign_profile(X)
            verdict = is_self_dual(_canonical_quantisation(X, problem, flags), profile)
            payload = {"verdict": verdict.kind,
                       "profile": dict(profile.gen_signs)}
            if not verdict.ok():
                status = "fail"
                payload["reason"] = "star involution does not fix the quantisation"
                residual_terms = _residual_terms(verdict.residual)
        elif cmd == "eigen":
            X = problem.crit_locus()
            p = int(flags["p"])
            k = int(flags["k"])
            bound = int(flags.get("max_degree")
                        or problem.options.get("max_degree") or 2)
            trunc = TruncationSpec(DEGREE_TRUNCATED, bound)
            report = nu_eigen_analysis(X, p, k, trunc)
            payload = report.as_dict()
        elif cmd == "filtration":
            X = problem.crit_locus()
            kind = _KIND_MAP[flags.get("kind") or "ftilde"]
            level = int(flags.get("level") or 0)
            p = int(flags.get("p") or 2)
            bound = int(flags.get("max_degree")
                        or problem.options.get("max_degree") or 2)
            trunc = TruncationSpec(DEGREE_TRUNCATED, bound)
            degrees = range(-X.m, X.m + 1)
            hbar_exps = range(-1, int(flags.get("hbar_max") or 4) + 1)
            table = filtration_dims(FiltrationLabel(kind, level), p, degrees,
                                    hbar_exps, X, trunc)
            payload = {"dims": [{"degree": d, "hbar_exp": e, "dim": n}
                                for (d, e), n in sorted(table.items())],
                       "kind": kind, "level": level, "p": p}
        else:
            raise QShiftError(f"unknown command {cmd!r}")
    except (QShiftError, KeyError, ValueError) as exc:
        status = "error"
        payload = {"reason": str(exc) or repr(exc),
                   "error_type": type(exc).__name__}
    timing_ms = int((time.monotonic() - t0) * 1000)
    return Report(cmd, status, payload, residual_terms, timing_ms)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_argparser():
    ap = argparse.ArgumentParser(
        prog="qshift",
        description="Exact checks and cohomology for BV quantisations of "
                    "derived critical loci of polynomials.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="problem file (vars ...; f = ...;)")
        p.add_argument("--seed", type=int, default=None)

    for name in ("milnor", "check-mc", "check-selfdual"):
        common(sub.add_parser(name))
    p = sub.add_parser("vc-dims")
    common(p)
    p.add_argument("--mode", choices=["weight", "truncate"], default=None)
    p.add_argument("--max-degree", type=int, default=None, dest="max_degree")
    p = sub.add_parser("koszul-dims")
    common(p)
    p.add_argument("--mode", choices=["weight", "truncate"], default=None)
    p.add_argument("--max-degree", type=int, default=None, dest="max_degree")
    p = sub.add_parser("check-compat")
    common(p)
    p.add_argument("--window", type=int, default=None)
    p = sub.add_parser("eigen")
    common(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-degree", type=int, default=None, dest="max_degree")
    p = sub.add_parser("filtration")
    common(p)
    p.add_argument("--kind", choices=["g", "ftilde", "conv"], default="ftilde")
    p.add_argument("--level", type=int, default=0)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--max-degree", type=int, default=None, dest="max_degree")
    p.add_argument("--hbar-max", type=int, default=4, dest="hbar_max")
    return ap


def main(argv=None) -> int:
    ap = _build_argparser()
    args = ap.parse_args(argv)
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "file")}
    try:
        with open(args.file, "r", encoding="utf-8") as fh:
            text = fh.read()
        problem = parse_problem(text)
    except OSError as exc:
        print(f"qshift: cannot read {args.file}: {exc}", file=sys.stderr)
        report = Report(args.command, "error",
                        {"reason": str(exc), "error_type": "IOError"})
        print(json.dumps(report.as_dict(), indent=2))
        return 2
    except QShiftError as exc:
        print(f"qshift: {exc}", file=sys.stderr)
        report = Report(args.command, "error",
                        {"reason": str(exc), "error_type": type(exc).__name__})
        print(json.dumps(report.as_dict(), indent=2))
        return 2
    report = run_command(args.command, problem, flags)
    if report.status != "ok":
        print(f"qshift: {report.status}: "
              f"{report.payload.get('reason', '')}", file=sys.stderr)
    print(json.dumps(report.as_dict(), indent=2))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
