"""Incremental exact simplex over delta-rationals for the theory of linear
rational arithmetic, in the bounds-plus-tableau style of lazy SMT solvers.

Variables are integers.  Extra "slack" variables are introduced for linear
combinations via ``define_slack``; their defining rows stay in the tableau
for the solver's lifetime (pivoting preserves the solution set, so rows are
never undone).  Only bound changes are trailed and undone on backtracking.

Bound reasons are opaque tags (the SAT layer passes literals); ``None``
marks a permanent bound that never appears in explanations.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .rat import Delta, Q, QZERO


class Unbounded(Exception):
    pass


class Simplex:
    def __init__(self):
        self.nvars = 0
        self.rows: Dict[int, Dict[int, object]] = {}  # basic var -> {var: coeff}
        self.cols: Dict[int, set] = {}  # var -> set of basic vars whose row mentions it
        self.lower: List[Optional[Delta]] = []
        self.upper: List[Optional[Delta]] = []
        self.why_lower: List[object] = []
        self.why_upper: List[object] = []
        self.beta: List[Delta] = []
        self.undo: List[Tuple] = []  # (var, 'L'/'U', old bound, old reason)

    # -- construction ------------------------------------------------------

    def new_var(self) -> int:
        v = self.nvars
        self.nvars += 1
        self.lower.append(None)
        self.upper.append(None)
        self.why_lower.append(None)
        self.why_upper.append(None)
        self.beta.append(Delta(0))
        self.cols.setdefault(v, set())
        return v

    def define_slack(self, combo: Dict[int, object]) -> int:
        """New basic variable s with defining row s = sum(coeff * var)."""
        s = self.new_var()
        row: Dict[int, object] = {}
        value = Delta(0)
        for x, c in combo.items():
            c = Q(c)
            if c == 0:
                continue
            if x in self.rows:  # substitute basic vars by their rows
                for y, cy in self.rows[x].items():
                    row[y] = row.get(y, QZERO) + c * cy
            else:
                row[x] = row.get(x, QZERO) + c
        row = {x: c for x, c in row.items() if c != 0}
        for x, c in row.items():
            value = value + self.beta[x].scaled(c)
            self.cols[x].add(s)
        self.rows[s] = row
        self.beta[s] = value
        return s

    # -- bound assertion / retraction ---------------------------------------

    def mark(self) -> int:
        return len(self.undo)

    def pop_to(self, mark: int) -> None:
        while len(self.undo) > mark:
            v, which, old, why = self.undo.pop()
            if which == "L":
                self.lower[v] = old
                self.why_lower[v] = why
            else:
                self.upper[v] = old
                self.why_upper[v] = why

    def assert_upper(self, v: int, bound: Delta, reason) -> Optional[List]:
        """Tighten v's upper bound; returns a conflict (list of reasons) or None."""
        old = self.upper[v]
        if old is not None and old <= bound:
            return None
        lo = self.lower[v]
        if lo is not None and bound < lo:
            return [w for w in (self.why_lower[v], reason) if w is not None]
        self.undo.append((v, "U", old, self.why_upper[v]))
        self.upper[v] = bound
        self.why_upper[v] = reason
        if v not in self.rows and self.beta[v] > bound:
            self._update(v, bound)
        return None

    def assert_lower(self, v: int, bound: Delta, reason) -> Optional[List]:
        old = self.lower[v]
        if old is not None and old >= bound:
            return None
        up = self.upper[v]
        if up is not None and bound > up:
            return [w for w in (self.why_upper[v], reason) if w is not None]
        self.undo.append((v, "L", old, self.why_lower[v]))
        self.lower[v] = bound
        self.why_lower[v] = reason
        if v not in self.rows and self.beta[v] < bound:
            self._update(v, bound)
        return None

    def _update(self, v: int, value: Delta) -> None:
        diff = value - self.beta[v]
        for b in self.cols[v]:
            self.beta[b] = self.beta[b] + diff.scaled(self.rows[b][v])
        self.beta[v] = value

    # -- feasibility ---------------------------------------------------------

    def check(self) -> Optional[List]:
        """Pivot until all bounds hold; returns a conflict reason list or None.

        Bland's rule (smallest index) on both choices avoids cycling.
        """
        while True:
            bad = -1
            for b in self.rows:
                lo, up = self.lower[b], self.upper[b]
                if (lo is not None and self.beta[b] < lo) or (
                    up is not None and self.beta[b] > up
                ):
                    if bad < 0 or b < bad:
                        bad = b
            if bad < 0:
                return None
            row = self.rows[bad]
            lo, up = self.lower[bad], self.upper[bad]
            if lo is not None and self.beta[bad] < lo:
                target, need_increase = lo, True
            else:
                target, need_increase = up, False
            enter = -1
            for x in row:
                c = row[x]
                if (c > 0) == need_increase:
                    # x must increase
                    if self.upper[x] is None or self.beta[x] < self.upper[x]:
                        if enter < 0 or x < enter:
                            enter = x
                else:
                    if self.lower[x] is None or self.beta[x] > self.lower[x]:
                        if enter < 0 or x < enter:
                            enter = x
            if enter < 0:
                conflict = []
                for x in sorted(row):
                    c = row[x]
                    if (c > 0) == need_increase:
                        w = self.why_upper[x]
                    else:
                        w = self.why_lower[x]
                    if w is not None:
                        conflict.append(w)
                own = self.why_lower[bad] if need_increase else self.why_upper[bad]
                if own is not None:
                    conflict.append(own)
                return conflict
            self._pivot_and_update(bad, enter, target)

    def _pivot_and_update(self, b: int, x: int, v: Delta) -> None:
        """b leaves the basis pinned at v, x enters."""
        row = self.rows.pop(b)
        a = row[x]
        theta = (v - self.beta[b]).scaled(1 / a)
        self.beta[b] = v
        self.beta[x] = self.beta[x] + theta
        for y, cy in row.items():
            self.cols[y].discard(b)
        # new row for x: x = (b - sum_{y != x} c_y y) / a
        inv = 1 / a
        new_row: Dict[int, object] = {b: inv}
        for y, cy in row.items():
            if y != x:
                new_row[y] = -cy * inv
        # update other rows' values and substitute x
        for other in list(self.cols.get(x, ())):
            if other == b:
                continue
            orow = self.rows[other]
            cx = orow.pop(x)
            self.beta[other] = self.beta[other] + theta.scaled(cx)
            for y, cy in new_row.items():
                nv = orow.get(y, QZERO) + cx * cy
                if nv == 0:
                    if y in orow:
                        del orow[y]
                        self.cols[y].discard(other)
                else:
                    if y not in orow:
                        self.cols.setdefault(y, set()).add(other)
                    orow[y] = nv
        self.cols[x] = set()
        self.rows[x] = new_row
        for y in new_row:
            self.cols.setdefault(y, set()).add(x)

    # -- optimization ----------------------------------------------------------

    def minimize(self, z: int, step_limit: Optional[int] = None) -> Delta:
        """Exact minimum of variable z over the current bounds; state stays feasible.

        Raises Unbounded when z can decrease forever.
        """
        steps = 0
        while True:
            steps += 1
            if step_limit is not None and steps > step_limit:
                raise RuntimeError("simplex step limit exceeded")
            if z in self.rows:
                row = self.rows[z]
                enter = -1
                for x in row:
                    c = row[x]
                    if c > 0:
                        if self.lower[x] is None or self.beta[x] > self.lower[x]:
                            if enter < 0 or x < enter:
                                enter = x
                    else:
                        if self.upper[x] is None or self.beta[x] < self.upper[x]:
                            if enter < 0 or x < enter:
                                enter = x
                if enter < 0:
                    return self.beta[z]
                c = row[enter]
                direction = -1 if c > 0 else 1  # entering var moves this way
                self._improve(z, enter, direction)
            else:
                # z nonbasic: z itself can only move down to its lower bound,
                # limited by rows that mention z.
                if self.lower[z] is not None and self.beta[z] == self.lower[z]:
                    return self.beta[z]
                self._improve(z, z, -1)
                if z not in self.rows:
                    # no pivot happened: z sits at its lower bound or is unbounded
                    if self.lower[z] is None:
                        raise Unbounded()
                    return self.beta[z]

    def _improve(self, z: int, x: int, direction: int) -> None:
        """Move nonbasic x by theta*direction, pivoting at the tightest limit."""
        theta_cap: Optional[Delta] = None
        limiter = -1  # -1: x's own bound
        if direction > 0:
            if self.upper[x] is not None:
                theta_cap = self.upper[x] - self.beta[x]
        else:
            if self.lower[x] is not None:
                theta_cap = self.beta[x] - self.lower[x]
        for b in sorted(self.cols.get(x, ())):
            c = self.rows[b][x]
            # beta[b] changes by c*direction*theta
            grow = (c > 0) == (direction > 0)
            if grow:
                if self.upper[b] is None:
                    continue
                room = self.upper[b] - self.beta[b]
            else:
                if self.lower[b] is None:
                    continue
                room = self.beta[b] - self.lower[b]
            cap = room.scaled(1 / abs(c))
            if theta_cap is None or cap < theta_cap:
                theta_cap = cap
                limiter = b
        if theta_cap is None:
            raise Unbounded()
        if limiter < 0:
            target = (
                self.upper[x] if direction > 0 else self.lower[x]
            )
            self._update(x, target)
        else:
            c = self.rows[limiter][x]
            grow = (c > 0) == (direction > 0)
            bound = self.upper[limiter] if grow else self.lower[limiter]
            self._pivot_and_update(limiter, x, bound)

    # -- models -----------------------------------------------------------------

    def concrete_delta(self) -> object:
        """A concrete positive value for the infinitesimal making all bounds strict-safe."""
        candidates = []
        for v in range(self.nvars):
            val = self.beta[v]
            lo, up = self.lower[v], self.upper[v]
            if lo is not None and val.a > lo.a and val.b < lo.b:
                candidates.append((val.a - lo.a) / (lo.b - val.b))
            if up is not None and val.a < up.a and val.b > up.b:
                candidates.append((up.a - val.a) / (val.b - up.b))
        delta = Q(1)
        for c in candidates:
            if c < delta:
                delta = c
        return delta / 2 if candidates else delta

    def value(self, v: int, delta) -> object:
        return self.beta[v].concretize(delta)
