"""Length-abstraction constraints over symbolic regexes.

Each regex node gets an integer variable for the length of the string it
matches; operators relate a node's variable to its children's. The resulting
formulas are necessary conditions: if a completed regex accepts a string, the
formula is satisfiable with the root variable set to that string's length.
Solving is exact — constraints form a tree, so feasible value sets propagate
bottom-up as finite unions of integer intervals.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .partial import (
    PInt,
    PLeaf,
    PNode,
    POp,
    PSym,
    all_syms,
    is_concrete,
    substitute_sym,
    to_regex,
    unify,
)
from .regex import Cls, Eps, Null, Regex
from .sketch import SymInt

MAX_INTERVALS = 64  # coarsen (soundly widen) beyond this many pieces


# ---------------------------------------------------------------------------
# Variables, terms, formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Var:
    kind: str  # 'len' | 'sym'
    uid: int

    def label(self) -> str:
        return ("x" if self.kind == "len" else "k") + str(self.uid)


# vars key every dict in the hot path; spare the generated tuple-hash
Var.__hash__ = lambda self: (self.uid << 1) | (self.kind == "sym")  # type: ignore[method-assign]


def kappa_var(sym: SymInt) -> Var:
    return Var("sym", sym.uid)


@dataclass(frozen=True)
class Term:
    """const + sum(coef * var) + sum(coef * var * var)."""

    const: int = 0
    linear: tuple[tuple[Var, int], ...] = ()
    bilinear: tuple[tuple[Var, Var, int], ...] = ()

    def __str__(self) -> str:
        parts = [str(self.const)] if self.const or not (self.linear or self.bilinear) else []
        parts += [f"{c}*{v.label()}" for v, c in self.linear]
        parts += [f"{c}*{a.label()}*{b.label()}" for a, b, c in self.bilinear]
        return " + ".join(parts)


def _term(const: int = 0, linear: dict[Var, int] | None = None,
          bilinear: dict[tuple[Var, Var], int] | None = None) -> Term:
    lin = tuple(sorted(
        ((v, c) for v, c in (linear or {}).items() if c),
        key=lambda e: (e[0].kind, e[0].uid),
    ))
    bil = tuple(sorted(
        ((a, b, c) for (a, b), c in (bilinear or {}).items() if c),
        key=lambda e: (e[0].kind, e[0].uid, e[1].kind, e[1].uid),
    ))
    return Term(const, lin, bil)


def t_const(c: int) -> Term:
    return _term(c)


def t_var(v: Var, coef: int = 1) -> Term:
    return _term(0, {v: coef})


def t_add(*ts: Term) -> Term:
    const = sum(t.const for t in ts)
    lin: dict[Var, int] = {}
    bil: dict[tuple[Var, Var], int] = {}
    for t in ts:
        for v, c in t.linear:
            lin[v] = lin.get(v, 0) + c
        for a, b, c in t.bilinear:
            bil[(a, b)] = bil.get((a, b), 0) + c
    return _term(const, lin, bil)


def t_neg(t: Term) -> Term:
    return _term(-t.const, {v: -c for v, c in t.linear},
                 {(a, b): -c for a, b, c in t.bilinear})


def t_mul_var(t: Term, v: Var) -> Term:
    """Multiply a term by a variable; the term must already be linear."""
    if t.bilinear:
        raise ValueError("product would exceed degree 2")
    lin = {v: t.const} if t.const else {}
    bil = {(min(w, v, key=lambda u: (u.kind, u.uid)),
            max(w, v, key=lambda u: (u.kind, u.uid))): c for w, c in t.linear}
    return _term(0, lin, bil)


def term_free_vars(t: Term) -> frozenset[Var]:
    fv = t.__dict__.get("_fv")
    if fv is None:
        out = {v for v, _ in t.linear}
        for a, b, _ in t.bilinear:
            out.add(a)
            out.add(b)
        t.__dict__["_fv"] = fv = frozenset(out)
    return fv


def term_substitute(t: Term, env: dict[Var, int]) -> Term:
    const = t.const
    lin: dict[Var, int] = {}
    bil: dict[tuple[Var, Var], int] = {}
    for v, c in t.linear:
        if v in env:
            const += c * env[v]
        else:
            lin[v] = lin.get(v, 0) + c
    for a, b, c in t.bilinear:
        va, vb = env.get(a), env.get(b)
        if va is not None and vb is not None:
            const += c * va * vb
        elif va is not None:
            lin[b] = lin.get(b, 0) + c * va
        elif vb is not None:
            lin[a] = lin.get(a, 0) + c * vb
        else:
            bil[(a, b)] = bil.get((a, b), 0) + c
    return _term(const, lin, bil)


def term_rename(t: Term, old: Var, new: Var) -> Term:
    lin: dict[Var, int] = {}
    for v, c in t.linear:
        w = new if v == old else v
        lin[w] = lin.get(w, 0) + c
    bil: dict[tuple[Var, Var], int] = {}
    for a, b, c in t.bilinear:
        a2 = new if a == old else a
        b2 = new if b == old else b
        key = (min(a2, b2, key=lambda u: (u.kind, u.uid)),
               max(a2, b2, key=lambda u: (u.kind, u.uid)))
        bil[key] = bil.get(key, 0) + c
    return _term(t.const, lin, bil)


class Formula:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True, slots=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Cmp(Formula):
    op: str  # '==' | '<=' | '>=' | '!='
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"({self.lhs} {self.op} {self.rhs})"


@dataclass(frozen=True)
class AndF(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class OrF(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Exists(Formula):
    bound: tuple[Var, ...]
    body: Formula


_EMPTY_VARS: frozenset[Var] = frozenset()


def free_vars(f: Formula) -> frozenset[Var]:
    if isinstance(f, (TrueF, FalseF)):
        return _EMPTY_VARS
    fv = f.__dict__.get("_fv")
    if fv is not None:
        return fv
    if isinstance(f, Cmp):
        fv = term_free_vars(f.lhs) | term_free_vars(f.rhs)
    elif isinstance(f, (AndF, OrF)):
        out: frozenset[Var] = frozenset()
        for a in f.args:
            out |= free_vars(a)
        fv = out
    elif isinstance(f, Exists):
        fv = free_vars(f.body) - set(f.bound)
    else:
        raise TypeError(f"unknown formula {f!r}")
    f.__dict__["_fv"] = fv
    return fv


def substitute(f: Formula, env: dict[Var, int]) -> Formula:
    # untouched subtrees come back identical, so shared structure stays shared
    if isinstance(f, (TrueF, FalseF)):
        return f
    fv = free_vars(f)
    if not any(v in fv for v in env):
        return f
    if isinstance(f, Cmp):
        return Cmp(f.op, term_substitute(f.lhs, env), term_substitute(f.rhs, env))
    if isinstance(f, AndF):
        return AndF(tuple(substitute(a, env) for a in f.args))
    if isinstance(f, OrF):
        return OrF(tuple(substitute(a, env) for a in f.args))
    if isinstance(f, Exists):
        inner = {v: c for v, c in env.items() if v not in f.bound}
        return Exists(f.bound, substitute(f.body, inner)) if inner else f
    raise TypeError(f"unknown formula {f!r}")


def rename_var(f: Formula, old: Var, new: Var) -> Formula:
    """Rename a free variable (capture is impossible: bound vars are fresh)."""
    if isinstance(f, (TrueF, FalseF)):
        return f
    if old not in free_vars(f):
        return f
    if isinstance(f, Cmp):
        return Cmp(f.op, term_rename(f.lhs, old, new), term_rename(f.rhs, old, new))
    if isinstance(f, AndF):
        return AndF(tuple(rename_var(a, old, new) for a in f.args))
    if isinstance(f, OrF):
        return OrF(tuple(rename_var(a, old, new) for a in f.args))
    if isinstance(f, Exists):
        if old in f.bound:
            return f
        return Exists(f.bound, rename_var(f.body, old, new))
    raise TypeError(f"unknown formula {f!r}")


def _eval_ground(op: str, value: int) -> bool:
    if op == "==":
        return value == 0
    if op == "!=":
        return value != 0
    if op == "<=":
        return value <= 0
    return value >= 0  # '>='


def simplify(f: Formula) -> Formula:
    if isinstance(f, (TrueF, FalseF)):
        return f
    hit = f.__dict__.get("_simp")
    if hit is not None:
        return hit
    out = _simplify(f)
    f.__dict__["_simp"] = out
    if out is not f and not isinstance(out, (TrueF, FalseF)):
        out.__dict__["_simp"] = out  # simplification is idempotent
    return out


def _simplify(f: Formula) -> Formula:
    if isinstance(f, Cmp):
        diff = t_add(f.lhs, t_neg(f.rhs))
        if not diff.linear and not diff.bilinear:
            return TrueF() if _eval_ground(f.op, diff.const) else FalseF()
        return f
    if isinstance(f, AndF):
        flat: list[Formula] = []
        for a in f.args:
            a = simplify(a)
            if isinstance(a, FalseF):
                return FalseF()
            if isinstance(a, TrueF):
                continue
            if isinstance(a, AndF):
                flat.extend(a.args)
            else:
                flat.append(a)
        if not flat:
            return TrueF()
        return flat[0] if len(flat) == 1 else AndF(tuple(flat))
    if isinstance(f, OrF):
        flat = []
        for a in f.args:
            a = simplify(a)
            if isinstance(a, TrueF):
                return TrueF()
            if isinstance(a, FalseF):
                continue
            if isinstance(a, OrF):
                flat.extend(a.args)
            else:
                flat.append(a)
        if not flat:
            return FalseF()
        return flat[0] if len(flat) == 1 else OrF(tuple(flat))
    if isinstance(f, Exists):
        body = simplify(f.body)
        if isinstance(body, (TrueF, FalseF)):
            return body
        kept = tuple(v for v in f.bound if v in free_vars(body))
        return Exists(kept, body) if kept else body
    return f


# ---------------------------------------------------------------------------
# Interval sets over the naturals
# ---------------------------------------------------------------------------

INF = None  # open upper end
_FULL_PARTS: tuple[tuple[int, None]] = ((0, INF),)


@dataclass(frozen=True, slots=True)
class IntervalSet:
    """Finite union of disjoint [lo, hi] intervals over non-negative ints."""

    parts: tuple[tuple[int, int | None], ...] = ()

    @staticmethod
    def empty() -> "IntervalSet":
        return IntervalSet(())

    @staticmethod
    def full() -> "IntervalSet":
        return IntervalSet(((0, INF),))

    @staticmethod
    def of(lo: int, hi: int | None) -> "IntervalSet":
        lo = max(lo, 0)
        if hi is not INF and hi < lo:
            return IntervalSet(())
        return IntervalSet(((lo, hi),))

    @staticmethod
    def point(v: int) -> "IntervalSet":
        return IntervalSet.of(v, v)

    def is_empty(self) -> bool:
        return not self.parts

    def min(self) -> int | None:
        return self.parts[0][0] if self.parts else None

    def max(self) -> int | None:
        """Largest element; INF when unbounded, None when empty."""
        if not self.parts:
            return None
        return self.parts[-1][1]

    def __contains__(self, v: int) -> bool:
        if v < 0:
            return False
        for lo, hi in self.parts:
            if v < lo:
                return False
            if hi is INF or v <= hi:
                return True
        return False

    def union(self, other: "IntervalSet") -> "IntervalSet":
        if not self.parts:
            return other
        if not other.parts:
            return self
        return _normalize(list(self.parts) + list(other.parts))

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        a, b = self.parts, other.parts
        if a == _FULL_PARTS or not b:
            return other
        if b == _FULL_PARTS or not a:
            return self
        out: list[tuple[int, int | None]] = []
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi_a, hi_b = a[i][1], b[j][1]
            hi = hi_b if hi_a is INF else hi_a if hi_b is INF else min(hi_a, hi_b)
            if hi is INF or lo <= hi:
                out.append((lo, hi))
            if hi_a is not INF and (hi_b is INF or hi_a <= hi_b):
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(out))

    def add(self, other: "IntervalSet") -> "IntervalSet":
        """Minkowski sum: {a + b}."""
        if not self.parts or not other.parts:
            return IntervalSet(())
        sums = []
        for lo1, hi1 in self.parts:
            for lo2, hi2 in other.parts:
                hi = INF if hi1 is INF or hi2 is INF else hi1 + hi2
                sums.append((lo1 + lo2, hi))
        return _normalize(sums)

    def remove_point(self, v: int) -> "IntervalSet":
        out: list[tuple[int, int | None]] = []
        for lo, hi in self.parts:
            if v < lo or (hi is not INF and v > hi):
                out.append((lo, hi))
                continue
            if v > lo:
                out.append((lo, v - 1))
            if hi is INF or v < hi:
                out.append((v + 1, hi))
        return IntervalSet(tuple(out))


def _normalize(parts: list[tuple[int, int | None]]) -> IntervalSet:
    parts = sorted(parts, key=lambda p: p[0])
    out: list[tuple[int, int | None]] = []
    for lo, hi in parts:
        if out:
            plo, phi = out[-1]
            if phi is INF:
                break  # everything beyond is covered
            if lo <= phi + 1:
                out[-1] = (plo, INF if hi is INF else max(phi, hi))
                continue
        out.append((lo, hi))
    if len(out) > MAX_INTERVALS:
        # sound widening: keep the hull (supersets never cut off real models)
        out = [(out[0][0], out[-1][1])]
    return IntervalSet(tuple(out))


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _floor_div(a: int, b: int) -> int:
    return a // b


def _cmp_to_set(op: str, coef: int, const: int) -> IntervalSet:
    """Solutions of coef*v + const (op) 0 over v >= 0, coef != 0."""
    if op == "!=":
        eq = _cmp_to_set("==", coef, const)
        out = IntervalSet.full()
        for lo, hi in eq.parts:
            out = out.remove_point(lo)
        return out
    if op == "==":
        if const % coef != 0:
            return IntervalSet.empty()
        v = -const // coef
        return IntervalSet.point(v) if v >= 0 else IntervalSet.empty()
    ge = (op == ">=") == (coef > 0)  # after dividing by coef, direction
    if ge:
        return IntervalSet.of(_ceil_div(-const, coef) if coef > 0 else _ceil_div(const, -coef), INF)
    bound = _floor_div(-const, coef) if coef > 0 else _floor_div(const, -coef)
    return IntervalSet.of(0, bound) if bound >= 0 else IntervalSet.empty()


# ---------------------------------------------------------------------------
# Exact satisfiability by bottom-up projection
# ---------------------------------------------------------------------------

class UnsupportedFormula(ValueError):
    """The formula falls outside the tree-shaped fragment produced here."""


def _conjuncts(f: Formula) -> tuple[Formula, ...]:
    return f.args if isinstance(f, AndF) else (f,)


_NO_ENV: dict[Var, int] = {}


def _diff_parts(
    c: Cmp, env: dict[Var, int]
) -> tuple[int, dict[Var, int], dict[tuple[Var, Var], int]]:
    """lhs - rhs under env, as (const, linear coefs, bilinear coefs).

    The raw difference term is cached on the atom; applying env touches at
    most a handful of entries and allocates no Term objects.
    """
    d = c.__dict__.get("_diff")
    if d is None:
        c.__dict__["_diff"] = d = t_add(c.lhs, t_neg(c.rhs))
    const = d.const
    lin: dict[Var, int] = {}
    bil: dict[tuple[Var, Var], int] = {}
    for v, k in d.linear:
        val = env.get(v)
        if val is None:
            lin[v] = lin.get(v, 0) + k
        else:
            const += k * val
    for a, b, k in d.bilinear:
        va, vb = env.get(a), env.get(b)
        if va is not None and vb is not None:
            const += k * va * vb
        elif va is not None:
            lin[b] = lin.get(b, 0) + k * va
        elif vb is not None:
            lin[a] = lin.get(a, 0) + k * vb
        else:
            bil[(a, b)] = bil.get((a, b), 0) + k
    if 0 in lin.values():
        lin = {v: k for v, k in lin.items() if k}
    return const, lin, bil


def _range_under(
    const: int, lin: dict[Var, int], bil: dict[tuple[Var, Var], int], max_int: int
) -> tuple[int, int]:
    """Value bounds of the difference with every leftover var in [1, max_int]."""
    lo = hi = const
    for k in lin.values():
        if k > 0:
            lo += k
            hi += k * max_int
        else:
            lo += k * max_int
            hi += k
    sq = max_int * max_int
    for k in bil.values():
        if k > 0:
            lo += k
            hi += k * sq
        else:
            lo += k * sq
            hi += k
    return lo, hi


def _range_sat(op: str, lo: int, hi: int) -> bool:
    if op == "==":
        return lo <= 0 <= hi
    if op == "!=":
        return not (lo == hi == 0)
    if op == ">=":
        return hi >= 0
    return lo <= 0  # '<='


def is_satisfiable(f: Formula) -> bool:
    """Exact check for closed formulas from the encoder's fragment."""
    return _sat_env(simplify(f), _NO_ENV, _EMPTY_VARS, 0)


def _sat_env(
    f: Formula, env: dict[Var, int], loose: frozenset[Var], max_int: int
) -> bool:
    """Satisfiability with env resolving variables in place of substitution.

    Vars in loose are unassigned symbolic ints ranging over [1, max_int],
    handled optimistically: conjuncts they push outside the tree fragment are
    widened or dropped, so the answer may be a false positive but never a
    false negative. With loose empty the check is exact.
    """
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, AndF):
        return all(_sat_env(a, env, loose, max_int) for a in f.args)
    if isinstance(f, OrF):
        return any(_sat_env(a, env, loose, max_int) for a in f.args)
    if isinstance(f, Exists):
        return _solve_exists(f.bound, _conjuncts(f.body), None, env, loose, max_int)[0]
    if isinstance(f, Cmp):
        const, lin, bil = _diff_parts(f, env)
        if not lin and not bil:
            return _eval_ground(f.op, const)
        left = set(lin)
        for a, b in bil:
            left.add(a)
            left.add(b)
        if left <= loose:
            return _range_sat(f.op, *_range_under(const, lin, bil, max_int))
        raise UnsupportedFormula(f"free variables in {f}")
    raise TypeError(f"unknown formula {f!r}")


def project(f: Formula, v: Var, env: dict[Var, int] = _NO_ENV) -> IntervalSet:
    """Feasible values of v (the only free variable of f under env)."""
    if isinstance(f, TrueF):
        return IntervalSet.full()
    if isinstance(f, FalseF):
        return IntervalSet.empty()
    if isinstance(f, Cmp):
        const, lin, bil = _diff_parts(f, env)
        if bil:
            raise UnsupportedFormula(f"bilinear atom {f}")
        if not lin:
            return IntervalSet.full() if _eval_ground(f.op, const) else IntervalSet.empty()
        if len(lin) != 1 or v not in lin:
            raise UnsupportedFormula(f"atom {f} not over {v.label()}")
        return _cmp_to_set(f.op, lin[v], const)
    if isinstance(f, AndF):
        out = IntervalSet.full()
        for a in f.args:
            out = out.intersect(project(a, v, env))
            if out.is_empty():
                break
        return out
    if isinstance(f, OrF):
        out = IntervalSet.empty()
        for a in f.args:
            out = out.union(project(a, v, env))
        return out
    if isinstance(f, Exists):
        ok, result = _solve_exists(f.bound, _conjuncts(f.body), v, env)
        if not ok:
            return IntervalSet.empty()
        assert result is not None
        return result
    raise TypeError(f"unknown formula {f!r}")


def _sym_fvs(c: Formula) -> tuple[Var, ...]:
    sf = c.__dict__.get("_symfv")
    if sf is None:
        sf = tuple(
            sorted((v for v in free_vars(c) if v.kind == "sym"), key=lambda v: v.uid)
        )
        c.__dict__["_symfv"] = sf
    return sf


def _project_cached(c: Formula, w: Var, env: dict[Var, int]) -> IntervalSet:
    """project(c, w, env), memoized on the atom by the values env gives the
    atom's symbolic variables (the only part of env the result depends on)."""
    cache = c.__dict__.get("_pcache")
    if cache is None:
        c.__dict__["_pcache"] = cache = {}
    key = (w.uid,) + tuple(env[v] for v in _sym_fvs(c) if v != w)
    hit = cache.get(key)
    if hit is None:
        cache[key] = hit = project(c, w, env)
    return hit


def _ground_sat_cached(c: Formula, env: dict[Var, int]) -> bool:
    """Ground-conjunct satisfiability memoized like _project_cached."""
    if isinstance(c, TrueF):
        return True
    if isinstance(c, FalseF):
        return False
    cache = c.__dict__.get("_scache")
    if cache is None:
        c.__dict__["_scache"] = cache = {}
    key = tuple(env[v] for v in _sym_fvs(c))
    hit = cache.get(key)
    if hit is None:
        cache[key] = hit = _sat_env(c, env, _EMPTY_VARS, 0)
    return hit


def _solve_exists(
    bound: tuple[Var, ...],
    conjuncts: tuple[Formula, ...],
    target: Var | None,
    env: dict[Var, int] = _NO_ENV,
    loose: frozenset[Var] = frozenset(),
    max_int: int = 0,
    widen_target: bool = False,
    outer: dict[Var, IntervalSet] | None = None,
) -> tuple[bool, IntervalSet | None]:
    """Handle one quantifier block: unary constraints first, then links.

    Returns (satisfiable, feasible-set-of-target). Exactness relies on each
    link atom relating the target to bound variables no other link uses,
    which holds for every formula the encoder builds. Conjuncts that loose
    vars push outside that shape are dropped (a sound over-approximation);
    the same shapes without loose vars still raise. With widen_target the
    target may also appear as a repeat multiplier or inside a nested block:
    those conjuncts contribute interval bounds instead of raising, so the
    result is a superset; outer carries the enclosing block's variable sets
    into such a nested call.
    """
    sets: dict[Var, IntervalSet] = dict(outer) if outer else {}
    for w in bound:
        sets[w] = IntervalSet.full()
    for w in loose:
        sets[w] = IntervalSet.of(1, max_int) if max_int else IntervalSet.full()
    links: list[Cmp] = []
    nested: list[Formula] = []
    out = IntervalSet.full()
    for c in conjuncts:
        fv = free_vars(c)
        if env:
            fv = fv - env.keys()
        if not fv:
            if not _ground_sat_cached(c, env):
                return False, None
        elif len(fv) == 1 and target is not None and target in fv:
            if widen_target:
                try:
                    out = out.intersect(_project_cached(c, target, env))
                except UnsupportedFormula:
                    nested.append(c)
            else:
                out = out.intersect(_project_cached(c, target, env))
        elif len(fv) == 1 and next(iter(fv)) in sets:
            w = next(iter(fv))
            sets[w] = sets[w].intersect(_project_cached(c, w, env))
        elif isinstance(c, Cmp):
            links.append(c)
        elif widen_target and target is not None and target in fv:
            nested.append(c)
        elif fv & loose:
            continue
        elif widen_target:
            continue  # superset mode: dropping a conjunct only widens
        else:
            raise UnsupportedFormula(f"non-atomic multi-variable conjunct {c}")

    # one propagation pass: narrow each linear link participant through the
    # others' hulls, so nested blocks see real bounds for outer lengths
    for c in links:
        try:
            const, lin, bil = _diff_parts(c, env)
        except UnsupportedFormula:
            continue
        if bil or len(lin) < 2:
            continue
        if any(w not in sets for w in lin):
            continue
        _refine_by_link(c.op, const, lin, sets)

    used: set[Var] = set()
    for c in links:
        try:
            const, lin, bil = _diff_parts(c, env)
            if bil:
                if widen_target and target is not None:
                    got = _multiplier_bounds(c.op, const, lin, bil, target, sets)
                    if got is not None:
                        out = out.intersect(got)
                        continue
                raise UnsupportedFormula(f"bilinear link {c}")
            coefs = dict(lin)
            t_coef = coefs.pop(target, None) if target is not None else None
            # encoder links always read: target + const - sum(d_i * w_i) (op) 0
            if t_coef not in (None, 1):
                raise UnsupportedFormula(f"unexpected target coefficient in {c}")
            if any(w not in sets or d >= 0 for w, d in coefs.items()):
                raise UnsupportedFormula(f"unexpected link shape {c}")
            if any(w in used for w in coefs):
                raise UnsupportedFormula(f"bound variable shared between links: {c}")
        except UnsupportedFormula:
            if widen_target or free_vars(c) & loose:
                continue
            raise
        used.update(coefs)
        img = _image({w: -d for w, d in coefs.items()}, sets)
        if t_coef is None:
            if not _gate_holds(c.op, const, img):
                return False, None
        else:
            out = out.intersect(_transfer(c.op, const, img))
    if any(s.is_empty() for s in sets.values()):
        return False, None
    for c in nested:
        assert target is not None
        out = out.intersect(_candidate_set(c, target, env, loose, max_int, sets))
        if out.is_empty():
            return False, None
    if target is None:
        return True, None
    return (not out.is_empty()), out


def _refine_by_link(
    op: str, const: int, lin: dict[Var, int], sets: dict[Var, IntervalSet]
) -> None:
    """Narrow each variable's set by hull-solving the link for it.

    Sound: a model's value for w satisfies the link with the other variables
    drawn from supersets of their true values, so it survives the cut.
    """
    if op not in ("==", ">=", "<="):
        return
    hulls: dict[Var, tuple[int, int | None]] = {}
    for w in lin:
        s = sets[w]
        if s.is_empty():
            return
        hulls[w] = (s.min(), s.max())  # type: ignore[assignment]
    for w, d in lin.items():
        # rest = const + sum(other terms); need d*w + rest (op) 0
        r_lo = r_hi = const
        unbounded_hi = unbounded_lo = False
        for u, du in lin.items():
            if u is w:
                continue
            ulo, uhi = hulls[u]
            if du > 0:
                r_lo += du * ulo
                if uhi is INF:
                    unbounded_hi = True
                else:
                    r_hi += du * uhi
            else:
                if uhi is INF:
                    unbounded_lo = True
                else:
                    r_lo += du * uhi
                r_hi += du * ulo
        lo, hi = 0, INF
        # d*w (op) -rest for some rest in [r_lo, r_hi]
        if d > 0:
            if op in ("==", "<=") and not unbounded_lo:
                # w <= -rest/d for the smallest rest
                if -r_lo >= 0:
                    hi = _floor_div(-r_lo, d)
                else:
                    hi = -1
            if op in ("==", ">=") and not unbounded_hi:
                # w >= -rest/d for the largest rest
                lo = max(lo, _ceil_div(-r_hi, d))
        else:
            m = -d
            if op in ("==", "<=") and not unbounded_lo:
                # m*w >= rest for the smallest rest
                lo = max(lo, _ceil_div(r_lo, m))
            if op in ("==", ">=") and not unbounded_hi:
                # m*w <= rest for the largest rest
                if r_hi >= 0:
                    hi = _floor_div(r_hi, m)
                else:
                    hi = -1
        if hi is not INF and hi < lo:
            sets[w] = IntervalSet.empty()
            return
        if lo > 0 or hi is not INF:
            cut = IntervalSet.of(lo, hi)
            sets[w] = sets[w].intersect(cut)
            if sets[w].is_empty():
                return


def _multiplier_bounds(
    op: str,
    const: int,
    lin: dict[Var, int],
    bil: dict[tuple[Var, Var], int],
    target: Var,
    sets: dict[Var, IntervalSet],
) -> IntervalSet | None:
    """Superset of target values satisfying x + const - m*target*w (op) 0.

    Handles the repeat-link shape where target multiplies a length variable;
    any true value survives because the model's x and w lie inside their
    current sets. None means the atom has some other shape.
    """
    if len(bil) != 1 or len(lin) != 1:
        return None
    (a, b), coef = next(iter(bil.items()))
    if coef >= 0 or op not in ("==", ">=", "<="):
        return None
    w = b if a is target else a if b is target else None
    if w is None or w not in sets:
        return None
    xv, xc = next(iter(lin.items()))
    if xc != 1 or xv not in sets:
        return None
    m = -coef
    xs, ws = sets[xv], sets[w]
    if xs.is_empty() or ws.is_empty():
        return IntervalSet.empty()
    x_lo, x_hi = xs.min(), xs.max()
    w_lo, w_hi = ws.min(), ws.max()
    lo, hi = 0, INF
    if op in ("==", ">="):  # m*t*w <= x + const for some x, w
        if w_lo >= 1:
            if x_hi is INF:
                pass
            elif x_hi + const < m * w_lo:
                return IntervalSet.empty() if op == "==" else IntervalSet.of(0, 0)
            else:
                hi = (x_hi + const) // (m * w_lo)
        # w may be 0: the product vanishes, so no upper bound then
    if op in ("==", "<="):  # m*t*w >= x + const for some x, w
        if w_hi is not INF and x_lo + const > 0:
            if w_hi == 0:
                return IntervalSet.empty()
            lo = _ceil_div(x_lo + const, m * w_hi)
    if hi is INF:
        return IntervalSet.of(lo, INF)
    return IntervalSet.of(lo, hi)


def _image(coefs: dict[Var, int], sets: dict[Var, IntervalSet]) -> IntervalSet:
    """Value set of sum(coef * w) for independent w's; coefs are positive."""
    img = IntervalSet.point(0)
    for w, c in coefs.items():
        s = sets[w]
        if s.is_empty():
            return IntervalSet.empty()
        img = img.add(_scale(s, c))
        if img.is_empty():
            break
    return img


def _scale(s: IntervalSet, k: int) -> IntervalSet:
    """Exact {k*w : w in s}, preserving stride gaps for small finite parts."""
    if k == 1:
        return s
    parts: list[tuple[int, int | None]] = []
    count = 0
    for lo, hi in s.parts:
        if hi is INF or count > 4 * MAX_INTERVALS:
            # hull widening: sound, since supersets never cut off models
            top = s.parts[-1][1]
            parts.append((k * lo, INF if top is INF else k * top))
            break
        for w in range(lo, hi + 1):
            parts.append((k * w, k * w))
            count += 1
    return _normalize(parts)


def _gate_holds(op: str, const: int, img: IntervalSet) -> bool:
    """Is const - y (op) 0 for some y in img?"""
    if img.is_empty():
        return False
    if op == "==":
        return const in img
    if op == "!=":
        return not (img.min() == img.max() == const)
    if op == ">=":  # need y <= const
        return img.min() <= const  # type: ignore[operator]
    mx = img.max()  # '<=': need y >= const
    return mx is INF or mx >= const


def _transfer(op: str, const: int, img: IntervalSet) -> IntervalSet:
    """Feasible t with t + const - y (op) 0 for some y in img."""
    if img.is_empty():
        return IntervalSet.empty()
    if op == "==":  # t = y - const
        shifted = [
            (max(lo - const, 0), INF if hi is INF else hi - const)
            for lo, hi in img.parts
            if hi is INF or hi - const >= 0
        ]
        return _normalize(shifted)
    if op == ">=":  # t >= y - const for the smallest y
        return IntervalSet.of(img.min() - const, INF)  # type: ignore[operator]
    if op == "<=":  # t <= y - const for the largest y
        mx = img.max()
        if mx is INF:
            return IntervalSet.full()
        return IntervalSet.of(0, mx - const)
    raise UnsupportedFormula(f"link operator {op!r}")


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class EncodeResult:
    formula: Formula
    root: Var
    syms: tuple[SymInt, ...]  # preorder, deduplicated
    max_int: int


def strip_null(p: PNode) -> PNode:
    """Language-preserving removal of empty-set subtrees (except under Not)."""
    if not isinstance(p, POp):
        return p
    args = tuple(strip_null(a) for a in p.args)
    node = POp(p.name, args)
    def null(n: PNode) -> bool:
        return isinstance(n, PLeaf) and isinstance(n.regex, Null)
    if p.name == "Or":
        if null(args[0]):
            return args[1]
        if null(args[1]):
            return args[0]
    elif p.name in ("Concat", "And"):
        if null(args[0]) or null(args[1]):
            return PLeaf(Null())
    elif p.name in ("StartsWith", "EndsWith", "Contains"):
        if null(args[0]):
            return PLeaf(Null())
    elif p.name in ("Optional", "KleeneStar"):
        if null(args[0]):
            return PLeaf(Eps())
    elif p.name in ("Repeat", "RepeatAtLeast", "RepeatRange"):
        if null(args[0]):
            return PLeaf(Null())
    # Not is kept as-is: its encoding carries no child constraints anyway
    return node


def ordered_syms(p: PNode) -> tuple[SymInt, ...]:
    return tuple(dict.fromkeys(all_syms(p)))


def encode(p: PNode | Regex, max_int: int) -> EncodeResult:
    """Length constraint for a symbolic partial; root var is the string length."""
    if isinstance(p, Regex):
        from .partial import from_regex

        p = from_regex(p)
    p = strip_null(unify(p))
    syms = ordered_syms(p)
    counter = [0]

    def fresh() -> Var:
        counter[0] += 1
        return Var("len", counter[0])

    root = Var("len", 0)

    def slot_term(n: PNode) -> tuple[Term, list[Formula]]:
        if isinstance(n, PInt):
            return t_const(n.value), []
        assert isinstance(n, PSym)
        kv = kappa_var(n.sym)
        bounds: list[Formula] = [
            Cmp(">=", t_var(kv), t_const(1)),
            Cmp("<=", t_var(kv), t_const(max_int)),
        ]
        return t_var(kv), bounds

    def enc(n: PNode, x: Var) -> Formula:
        if isinstance(n, PLeaf):
            r = n.regex
            if isinstance(r, Cls):
                return Cmp("==", t_var(x), t_const(1))
            if isinstance(r, Eps):
                return Cmp("==", t_var(x), t_const(0))
            if isinstance(r, Null):
                return FalseF()
            raise TypeError(f"unexpected leaf {r!r}")
        assert isinstance(n, POp), f"cannot encode {n!r}"
        name = n.name
        if name == "Not":
            return TrueF()
        if name in ("StartsWith", "EndsWith", "Contains"):
            x1 = fresh()
            return Exists((x1,), AndF((
                Cmp(">=", t_var(x), t_var(x1)), enc(n.args[0], x1))))
        if name == "Optional":
            x1 = fresh()
            return OrF((
                Cmp("==", t_var(x), t_const(0)),
                Exists((x1,), AndF((Cmp("==", t_var(x), t_var(x1)), enc(n.args[0], x1)))),
            ))
        if name == "KleeneStar":
            x1 = fresh()
            return OrF((
                Cmp("==", t_var(x), t_const(0)),
                Exists((x1,), AndF((Cmp(">=", t_var(x), t_var(x1)), enc(n.args[0], x1)))),
            ))
        if name == "Concat":
            x1, x2 = fresh(), fresh()
            return Exists((x1, x2), AndF((
                Cmp("==", t_var(x), t_add(t_var(x1), t_var(x2))),
                enc(n.args[0], x1), enc(n.args[1], x2))))
        if name == "Or":
            x1, x2 = fresh(), fresh()
            return OrF((
                Exists((x1,), AndF((Cmp("==", t_var(x), t_var(x1)), enc(n.args[0], x1)))),
                Exists((x2,), AndF((Cmp("==", t_var(x), t_var(x2)), enc(n.args[1], x2)))),
            ))
        if name == "And":
            x1, x2 = fresh(), fresh()
            return Exists((x1, x2), AndF((
                Cmp("==", t_var(x), t_var(x1)),
                Cmp("==", t_var(x), t_var(x2)),
                enc(n.args[0], x1), enc(n.args[1], x2))))
        if name == "Repeat":
            k, kb = slot_term(n.args[1])
            x1, x1p = fresh(), fresh()
            phi1 = enc(n.args[0], x1)
            phi1p = rename_var(phi1, x1, x1p)
            return Exists((x1, x1p), AndF((
                Cmp(">=", t_var(x), t_mul_var(k, x1)),
                Cmp("<=", t_var(x), t_mul_var(k, x1p)),
                phi1, phi1p, *kb)))
        if name == "RepeatAtLeast":
            k, kb = slot_term(n.args[1])
            x1 = fresh()
            return Exists((x1,), AndF((
                Cmp(">=", t_var(x), t_mul_var(k, x1)),
                enc(n.args[0], x1), *kb)))
        if name == "RepeatRange":
            k1, kb1 = slot_term(n.args[1])
            k2, kb2 = slot_term(n.args[2])
            x1, x1p = fresh(), fresh()
            phi1 = enc(n.args[0], x1)
            phi1p = rename_var(phi1, x1, x1p)
            return Exists((x1, x1p), AndF((
                Cmp(">=", t_var(x), t_mul_var(k1, x1)),
                Cmp("<=", t_var(x), t_mul_var(k2, x1p)),
                # a crossed range is not a regex, so no instantiation has one
                Cmp("<=", k1, k2),
                phi1, phi1p, *kb1, *kb2)))
        raise ValueError(f"unknown operator {name!r}")

    return EncodeResult(enc(p, root), root, syms, max_int)


def instantiate_positives(enc: EncodeResult, lengths: Iterable[int]) -> Formula:
    """Conjunction of the encoding at each positive example's length."""
    parts = tuple(substitute(enc.formula, {enc.root: n}) for n in lengths)
    return simplify(AndF(parts)) if parts else TrueF()


# ---------------------------------------------------------------------------
# Solving and constant inference
# ---------------------------------------------------------------------------

def _opt_sat(
    f: Formula,
    env: dict[Var, int],
    loose: frozenset[Var],
    max_int: int,
    sets: dict[Var, IntervalSet] | None,
) -> bool:
    """Optimistic satisfiability: may say yes wrongly, never no wrongly.

    Unlike _sat_env this consults the enclosing block's variable sets and
    shrugs off anything outside the fragment instead of raising.
    """
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, AndF):
        return all(_opt_sat(a, env, loose, max_int, sets) for a in f.args)
    if isinstance(f, OrF):
        return any(_opt_sat(a, env, loose, max_int, sets) for a in f.args)
    if isinstance(f, Exists):
        try:
            return _solve_exists(
                f.bound, _conjuncts(f.body), None, env, loose, max_int,
                widen_target=True, outer=sets,
            )[0]
        except UnsupportedFormula:
            return True
    if isinstance(f, Cmp):
        const, lin, bil = _diff_parts(f, env)
        if bil:
            return True
        if not lin:
            return _eval_ground(f.op, const)
        if len(lin) == 1:
            (w, coef), = lin.items()
            s = _cmp_to_set(f.op, coef, const)
            if sets and w in sets:
                return not s.intersect(sets[w]).is_empty()
            if w in loose:
                return not s.intersect(IntervalSet.of(1, max_int)).is_empty()
            return True
        if set(lin) <= loose:
            return _range_sat(f.op, *_range_under(const, lin, {}, max_int))
        return True
    raise TypeError(f"unknown formula {f!r}")


def _candidate_set(
    f: Formula,
    v: Var,
    env: dict[Var, int],
    loose: frozenset[Var],
    max_int: int,
    sets: dict[Var, IntervalSet] | None = None,
) -> IntervalSet:
    """Superset of v's feasible values under env, other unknowns loose.

    sets, when given, carries the enclosing quantifier block's variable
    ranges so repeat links and sibling branches can be bounded instead of
    widened to everything.
    """
    if isinstance(f, TrueF):
        return IntervalSet.full()
    if isinstance(f, FalseF):
        return IntervalSet.empty()
    if isinstance(f, AndF):
        out = IntervalSet.full()
        for a in f.args:
            out = out.intersect(_candidate_set(a, v, env, loose, max_int, sets))
            if out.is_empty():
                break
        return out
    if isinstance(f, OrF):
        out = IntervalSet.empty()
        for a in f.args:
            if v in free_vars(a):
                got = _candidate_set(a, v, env, loose, max_int, sets)
            elif _opt_sat(a, env, loose, max_int, sets):
                return IntervalSet.full()  # a v-free arm may hold for any v
            else:
                continue
            out = out.union(got)
        return out
    if isinstance(f, Exists):
        try:
            ok, got = _solve_exists(
                f.bound, _conjuncts(f.body), v, env, loose, max_int,
                widen_target=True, outer=sets,
            )
        except UnsupportedFormula:
            return IntervalSet.full()
        return got if ok else IntervalSet.empty()
    if isinstance(f, Cmp):
        const, lin, bil = _diff_parts(f, env)
        if bil:
            if sets is not None:
                got = _multiplier_bounds(f.op, const, lin, bil, v, sets)
                if got is not None:
                    return got
            return IntervalSet.full()
        if not lin:
            ok = _eval_ground(f.op, const)
            return IntervalSet.full() if ok else IntervalSet.empty()
        if set(lin) == {v}:
            return _cmp_to_set(f.op, lin[v], const)
        return IntervalSet.full()
    raise TypeError(f"unknown formula {f!r}")


def solve(
    f: Formula,
    syms: tuple[SymInt, ...],
    max_int: int,
    env: dict[Var, int] | None = None,
    banned: frozenset[int] = frozenset(),
    memo: dict | None = None,
) -> dict[SymInt, int] | None:
    """Smallest model in lexicographic order over syms, values 1..max_int.

    env fixes other variables' values without rewriting the formula; banned
    excludes values for the first symbol (the factored form of conjoined
    disequalities). memo, shared across calls on the same formula, caches
    feasibility and candidate intervals per assignment-so-far. Each level
    scans only a projected superset of its symbol's feasible values; the
    exact per-value check keeps the model stream unchanged.
    """
    base = simplify(f)
    if isinstance(base, FalseF):
        return None
    env = dict(env) if env else {}
    kvs = tuple(kappa_var(s) for s in syms)
    if memo is None:
        memo = {}

    def feasible(e: dict[Var, int], loose: frozenset[Var]) -> bool:
        # every env at a given depth assigns the same variables in the same
        # insertion order, so the value tuple alone keys the result
        key = tuple(e.values())
        hit = memo.get(key)
        if hit is None:
            memo[key] = hit = _sat_env(base, e, loose, max_int)
        return hit

    def candidates(e: dict[Var, int], i: int, loose: frozenset[Var]) -> list[int]:
        key = (kvs[i].uid, tuple(e.values()))
        hit = memo.get(key)
        if hit is None:
            try:
                got = _candidate_set(base, kvs[i], e, loose, max_int)
            except UnsupportedFormula:
                got = IntervalSet.full()
            vals: list[int] = []
            for lo, hi in got.parts:
                top = max_int if hi is INF else min(hi, max_int)
                vals.extend(range(max(lo, 1), top + 1))
            memo[key] = hit = vals
        return hit

    def dfs(e: dict[Var, int], i: int) -> dict[SymInt, int] | None:
        if i == len(syms):
            return {} if feasible(e, _EMPTY_VARS) else None
        loose = frozenset(kvs[i + 1:])
        last = i + 1 == len(syms)
        for v in candidates(e, i, loose):
            if i == 0 and v in banned:
                continue
            e2 = {**e, kvs[i]: v}
            if not feasible(e2, loose):
                continue
            if last:
                return {syms[i]: v}
            sub = dfs(e2, i + 1)
            if sub is not None:
                sub[syms[i]] = v
                return sub
        return None

    return dfs(env, 0)


def infer_stream(
    p: PNode,
    positives: Iterable[str],
    max_int: int,
    infeasible_fn: Callable[[PNode], bool] | None = None,
) -> Iterator[PNode]:
    """Instantiations of the symbolic partial consistent with the positive
    examples' length constraints, yielded as they are found.

    Explores models by blocking the leftmost symbolic integer's value, then
    recursing on the residual partial; instantiations an injected
    infeasibility check rules out are dropped along the way. Each worklist
    entry stands for the constraint with past choices substituted in and past
    models blocked; both are kept factored (an assignment plus a banned-value
    set) so the base formula is never rebuilt. The generator suspends between
    models, so a caller can interleave several inferences.
    """
    enc = encode(p, max_int)
    psi0 = instantiate_positives(enc, [len(s) for s in positives])
    if not enc.syms:
        if is_satisfiable(psi0):
            yield p
        return

    memo: dict[tuple[tuple[int, int], ...], bool] = {}
    work: deque[tuple[PNode, dict[Var, int], frozenset[int]]] = deque(
        [(p, {}, frozenset())]
    )
    while work:
        cur, env, banned = work.popleft()
        syms = ordered_syms(cur)
        model = solve(psi0, syms, max_int, env, banned, memo)
        if model is None:
            continue
        kappa = syms[0]
        value = model[kappa]
        work.append((cur, env, banned | {value}))
        nxt = substitute_sym(cur, kappa, value)
        if is_concrete(nxt):
            try:
                to_regex(nxt)
            except ValueError:
                continue  # e.g. a repeat range whose bounds crossed
            yield nxt
        elif infeasible_fn is None or not infeasible_fn(nxt):
            work.append((nxt, {**env, kappa_var(kappa): value}, frozenset()))


def infer_constants(
    p: PNode,
    positives: Iterable[str],
    max_int: int,
    infeasible_fn: Callable[[PNode], bool] | None = None,
) -> list[PNode]:
    """All instantiations of infer_stream, fully drained."""
    return list(infer_stream(p, positives, max_int, infeasible_fn))
