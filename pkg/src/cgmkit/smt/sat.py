"""CDCL SAT core: two-watched-literal propagation, 1UIP learning, VSIDS with
phase saving, Luby restarts, assumption-based solving, and a theory hook for
the lazy SMT loop (theory literals are flushed at every propagation fixpoint).

Literals are ints: lit = var*2 (positive) or var*2+1 (negated).
"""

from __future__ import annotations

import time
from heapq import heappush, heappop
from typing import Callable, List, Optional, Sequence


def lit(var: int, positive: bool = True) -> int:
    return var * 2 + (0 if positive else 1)


def neg(l: int) -> int:
    return l ^ 1


def lit_var(l: int) -> int:
    return l >> 1


class BudgetExhausted(Exception):
    pass


def luby(x: int) -> int:
    """Luby restart sequence: 1,1,2,1,1,2,4,1,1,2,1,1,2,4,8,..."""
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) // 2
        seq -= 1
        x %= size
    return 1 << seq


def _splitmix64(state: int) -> int:
    state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


class TheoryHook:
    """Interface the SMT layer implements; the default does nothing."""

    def assert_lit(self, l: int) -> Optional[List[int]]:
        """Assert a theory literal; return conflicting lits (all true) or None."""
        return None

    def check(self) -> Optional[List[int]]:
        """Full consistency check; return conflicting lits (all true) or None."""
        return None

    def needs_check(self) -> bool:
        return False

    def is_theory_var(self, v: int) -> bool:
        return False

    def mark(self) -> object:
        return None

    def pop_to(self, mark: object) -> None:
        pass


class SatSolver:
    def __init__(self, theory: Optional[TheoryHook] = None, seed: int = 0,
                 static_order: bool = False, trace: Optional[Callable[[str], None]] = None):
        self.theory = theory or TheoryHook()
        self.static_order = static_order
        self.trace = trace
        self.nvars = 0
        self.assigns: List[int] = []  # 0 undef, 1 true, 2 false
        self.level: List[int] = []
        self.reason: List[Optional[list]] = []
        self.activity: List[float] = []
        self.phase: List[int] = []  # sign bit tried first (1 = negative)
        self.watches: List[list] = []
        self.clauses: List[list] = []
        self.learnts: List[list] = []
        self.trail: List[int] = []
        self.trail_lim: List[int] = []
        self.qhead = 0
        self.thead = 0
        self.tstack: List[tuple] = []  # (trail position, theory mark)
        self.heap: List[tuple] = []
        self.var_inc = 1.0
        self.var_decay = 0.95
        self.seen = bytearray()
        self.ok = True
        self.conflicts = 0
        self.decisions = 0
        self.propagations = 0
        self.max_learnts = 4000.0
        self.seed = seed
        self._rng = seed & 0xFFFFFFFFFFFFFFFF

    # -- variables / clauses --------------------------------------------------

    def new_var(self) -> int:
        v = self.nvars
        self.nvars += 1
        self.assigns.append(0)
        self.level.append(0)
        self.reason.append(None)
        jitter = 0.0
        if self.seed:
            self._rng = _splitmix64(self._rng)
            jitter = (self._rng & 0xFFFF) * 1e-9
        self.activity.append(jitter)
        self.phase.append(1)
        self.watches.append([])
        self.watches.append([])
        self.seen.append(0)
        heappush(self.heap, (-self.activity[v], v))
        return v

    def value_lit(self, l: int) -> int:
        """0 undef, 1 true, 2 false."""
        a = self.assigns[l >> 1]
        if a == 0:
            return 0
        return 1 if (a == 2) == (l & 1) else 2

    def add_clause(self, lits: Sequence[int]) -> bool:
        """Add a clause at level 0; returns False if it makes the problem unsat."""
        assert len(self.trail_lim) == 0
        out = []
        seen = set()
        for l in lits:
            v = self.value_lit(l)
            if v == 1:
                return True  # already satisfied at level 0
            if v == 2:
                continue
            if l in seen:
                continue
            if (l ^ 1) in seen:
                return True  # tautology
            seen.add(l)
            out.append(l)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            if not self._enqueue(out[0], None):
                self.ok = False
                return False
            return True
        self.clauses.append(out)
        self._watch(out)
        return True

    def _watch(self, c: list) -> None:
        # watches[l] holds the clauses in which literal l is watched
        self.watches[c[0]].append(c)
        self.watches[c[1]].append(c)

    def _enqueue(self, l: int, why: Optional[list]) -> bool:
        v = l >> 1
        a = self.assigns[v]
        if a != 0:
            return (a == 2) != (l & 1 == 0)  # consistent?
        self.assigns[v] = 1 if (l & 1) == 0 else 2
        self.level[v] = len(self.trail_lim)
        self.reason[v] = why
        self.trail.append(l)
        return True

    # -- propagation ------------------------------------------------------------

    def propagate(self) -> Optional[list]:
        assigns = self.assigns
        watches = self.watches
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                first = c[0]
                a = assigns[first >> 1]
                if a != 0 and (a == 2) == (first & 1):
                    ws[j] = c  # clause satisfied by first watch
                    j += 1
                    continue
                found = False
                for k in range(2, len(c)):
                    lk = c[k]
                    ak = assigns[lk >> 1]
                    if ak == 0 or (ak == 2) == (lk & 1):
                        c[1], c[k] = lk, c[1]
                        watches[lk].append(c)
                        found = True
                        break
                if found:
                    continue
                # unit or conflict on first watch
                ws[j] = c
                j += 1
                if a != 0:  # first watch is false: conflict
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    return c
                self.assigns[first >> 1] = 1 if (first & 1) == 0 else 2
                self.level[first >> 1] = len(self.trail_lim)
                self.reason[first >> 1] = c
                self.trail.append(first)
            del ws[j:]
        return None

    def propagate_fixpoint(self) -> Optional[list]:
        """BCP + theory flush until mutual fixpoint; returns conflict clause or None."""
        theory = self.theory
        while True:
            confl = self.propagate()
            if confl is not None:
                return confl
            while self.thead < len(self.trail):
                l = self.trail[self.thead]
                if theory.is_theory_var(l >> 1):
                    self.tstack.append((self.thead, theory.mark()))
                    bad = theory.assert_lit(l)
                    if bad is not None:
                        self.thead += 1
                        return [x ^ 1 for x in bad]
                self.thead += 1
            if theory.needs_check():
                bad = theory.check()
                if bad is not None:
                    return [x ^ 1 for x in bad]
            if self.qhead == len(self.trail):
                return None

    # -- conflict analysis --------------------------------------------------------

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            inv = 1e-100
            for i in range(self.nvars):
                self.activity[i] *= inv
            self.var_inc *= inv
        heappush(self.heap, (-self.activity[v], v))

    def analyze(self, confl: list):
        """1UIP learning; returns (learnt clause, backjump level)."""
        seen = self.seen
        learnt = [0]
        counter = 0
        p = -1
        index = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        c = confl
        while True:
            for q in c:
                if p != -1 and q == p:
                    continue
                v = q >> 1
                if not seen[v] and self.level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[index] >> 1]:
                index -= 1
            p = self.trail[index]
            index -= 1
            v = p >> 1
            seen[v] = 0
            counter -= 1
            if counter == 0:
                break
            c = self.reason[v]
            assert c is not None
        learnt[0] = p ^ 1
        # backjump level = max level among learnt[1:]
        bt = 0
        if len(learnt) > 1:
            max_i = 1
            for i in range(2, len(learnt)):
                if self.level[learnt[i] >> 1] > self.level[learnt[max_i] >> 1]:
                    max_i = i
            learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
            bt = self.level[learnt[1] >> 1]
        for q in learnt:
            seen[q >> 1] = 0
        return learnt, bt

    def analyze_final(self, p: int) -> set:
        """Assumption lits responsible for the falsification of assumption lit p."""
        out = {p}
        if not self.trail_lim:
            return out
        seen = self.seen
        seen[p >> 1] = 1
        for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            l = self.trail[i]
            v = l >> 1
            if not seen[v]:
                continue
            r = self.reason[v]
            if r is None:
                out.add(l)  # an assumption decision
            else:
                for q in r:
                    if (q >> 1) != v and self.level[q >> 1] > 0:
                        seen[q >> 1] = 1
            seen[v] = 0
        seen[p >> 1] = 0
        return out

    def cancel_until(self, level: int) -> None:
        if len(self.trail_lim) <= level:
            return
        bound = self.trail_lim[level]
        while self.tstack and self.tstack[-1][0] >= bound:
            _, m = self.tstack.pop()
            self.theory.pop_to(m)
        for i in range(len(self.trail) - 1, bound - 1, -1):
            l = self.trail[i]
            v = l >> 1
            self.phase[v] = l & 1
            self.assigns[v] = 0
            self.reason[v] = None
            heappush(self.heap, (-self.activity[v], v))
        del self.trail[bound:]
        del self.trail_lim[level:]
        self.qhead = min(self.qhead, len(self.trail))
        self.thead = min(self.thead, len(self.trail))

    # -- learned clause management ---------------------------------------------

    def _locked(self, c: list) -> bool:
        return self.reason[c[0] >> 1] is c

    def reduce_db(self) -> None:
        keep = [c for c in self.learnts if len(c) <= 2 or self._locked(c)]
        rest = sorted(
            (c for c in self.learnts if len(c) > 2 and not self._locked(c)), key=len
        )
        rest = rest[: len(rest) // 2]
        dead = set(map(id, self.learnts)) - set(map(id, keep)) - set(map(id, rest))
        if not dead:
            return
        for wl in self.watches:
            wl[:] = [c for c in wl if id(c) not in dead]
        self.learnts = keep + rest

    # -- search -------------------------------------------------------------------

    def _decide(self) -> int:
        if self.static_order:
            for v in range(self.nvars):
                if self.assigns[v] == 0:
                    return v * 2 + 1  # try false first
            return -1
        while self.heap:
            negact, v = heappop(self.heap)
            if self.assigns[v] == 0 and -negact == self.activity[v]:
                return v * 2 + self.phase[v]
        for v in range(self.nvars):
            if self.assigns[v] == 0:
                return v * 2 + self.phase[v]
        return -1

    def solve(
        self,
        assumptions: Sequence[int] = (),
        conflict_limit: Optional[int] = None,
        deadline: Optional[float] = None,
    ):
        """Returns ('sat', None) | ('unsat', core: set of assumption lits) | raises BudgetExhausted."""
        if not self.ok:
            return "unsat", set()
        self.cancel_until(0)
        restart_count = 0
        conflicts_at_start = self.conflicts
        next_restart = luby(restart_count) * 100
        while True:
            confl = self.propagate_fixpoint()
            if confl is not None:
                self.conflicts += 1
                if conflict_limit is not None and self.conflicts - conflicts_at_start > conflict_limit:
                    raise BudgetExhausted()
                if self.conflicts % 256 == 0 and deadline is not None and time.monotonic() > deadline:
                    raise BudgetExhausted()
                top = 0
                for q in confl:
                    if self.level[q >> 1] > top:
                        top = self.level[q >> 1]
                if top == 0 or len(self.trail_lim) == 0:
                    self.ok = False
                    return "unsat", set()
                # theory conflicts can sit below the current decision level
                if top < len(self.trail_lim):
                    self.cancel_until(top)
                learnt, bt = self.analyze(confl)
                self.cancel_until(max(bt, 0))
                if len(learnt) == 1:
                    self.cancel_until(0)
                    if not self._enqueue(learnt[0], None):
                        self.ok = False
                        return "unsat", set()
                else:
                    self.learnts.append(learnt)
                    self._watch(learnt)
                    self._enqueue(learnt[0], learnt)
                self.var_inc /= self.var_decay
                if len(self.learnts) > self.max_learnts:
                    self.reduce_db()
                    self.max_learnts *= 1.3
                if self.conflicts - conflicts_at_start >= next_restart:
                    restart_count += 1
                    next_restart += luby(restart_count) * 100
                    if self.trace:
                        self.trace(f"restart {restart_count} conflicts={self.conflicts}")
                    self.cancel_until(0)
                continue
            # no conflict: decide next assumption or branch
            if len(self.trail_lim) < len(assumptions):
                p = assumptions[len(self.trail_lim)]
                v = self.value_lit(p)
                if v == 1:
                    self.trail_lim.append(len(self.trail))  # dummy level
                    continue
                if v == 2:
                    assumed = set(assumptions)
                    core = self.analyze_final(p)
                    return "unsat", {l for l in core if l in assumed}
                self.trail_lim.append(len(self.trail))
                self._enqueue(p, None)
                continue
            if len(self.trail) == self.nvars:
                return "sat", None
            self.decisions += 1
            if deadline is not None and self.decisions % 512 == 0 and time.monotonic() > deadline:
                raise BudgetExhausted()
            l = self._decide()
            if l < 0:
                return "sat", None
            self.trail_lim.append(len(self.trail))
            self._enqueue(l, None)

    def model(self) -> List[bool]:
        return [self.assigns[v] == 1 for v in range(self.nvars)]
