"""Problem model for systems of difference equations on a cycle.

An instance over an even domain size p is a list of equations (i, j, d)
asking for x_j - x_i = d (mod p).  An assignment places every variable at
an integer position in [0, p); each equation contributes 1 - 2*y/p to the
objective, where y is the circular distance between the achieved
difference and d.  Objective values are kept as exact fractions with
denominator p, so shift and scaling identities hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

# enumeration budget for the exhaustive solver and domain-size guard for scaling
BRUTE_FORCE_LIMIT = 10**8
DOMAIN_LIMIT = 10**9
_CHUNK = 1 << 16

FORMAT_MAGIC = "relq"
FORMAT_VERSION = 1


def circular_distance(a: int, b: int, p: int) -> int:
    """Arc distance min((b - a) mod p, (a - b) mod p) on the p-cycle."""
    if p <= 0 or p % 2 != 0:
        raise ValueError(f"domain size must be a positive even integer, got {p}")
    if not (0 <= a < p and 0 <= b < p):
        raise ValueError(f"labels {a}, {b} outside [0, {p})")
    d = (b - a) % p
    return min(d, p - d)


@dataclass
class Instance:
    """A system of equations x_j - x_i = d (mod p) over n cycle-valued variables."""

    p: int
    n: int
    equations: list[tuple[int, int, int]]

    def __post_init__(self):
        if self.p <= 0 or self.p % 2 != 0:
            raise ValueError(f"domain size must be a positive even integer, got {self.p}")
        if self.n < 1:
            raise ValueError(f"need at least one variable, got {self.n}")
        self.equations = [tuple(eq) for eq in self.equations]
        for i, j, d in self.equations:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"equation ({i}, {j}, {d}) references a missing variable")
            if i == j:
                raise ValueError(f"equation ({i}, {j}, {d}) relates a variable to itself")
            if not (0 <= d < self.p):
                raise ValueError(f"target difference {d} outside [0, {self.p})")

    @property
    def m(self) -> int:
        return len(self.equations)


@dataclass
class Assignment:
    """Integer positions, one per variable, each in [0, p)."""

    positions: list[int]

    def __post_init__(self):
        self.positions = [int(x) for x in self.positions]


@dataclass
class EvalBreakdown:
    """Objective total plus (equation index, slack y, term) for every equation."""

    total: Fraction
    per_equation: list[tuple[int, int, Fraction]]


def evaluate(inst: Instance, asg: Assignment) -> EvalBreakdown:
    """Score an assignment: each equation yields 1 - 2*y/p with y its circular slack."""
    if len(asg.positions) != inst.n:
        raise ValueError(f"expected {inst.n} positions, got {len(asg.positions)}")
    for x in asg.positions:
        if not (0 <= x < inst.p):
            raise ValueError(f"position {x} outside [0, {inst.p})")
    per = []
    total = Fraction(0)
    for idx, (i, j, d) in enumerate(inst.equations):
        delta = (asg.positions[j] - asg.positions[i] - d) % inst.p
        y = min(delta, inst.p - delta)
        term = Fraction(inst.p - 2 * y, inst.p)
        per.append((idx, y, term))
        total += term
    return EvalBreakdown(total=total, per_equation=per)


def _score_chunk(inst: Instance, states: np.ndarray) -> np.ndarray:
    """Integer scores sum(p - 2y) for a chunk of assignments encoded in mixed radix."""
    p = inst.p
    n = inst.n
    pos = np.empty((states.shape[0], n), dtype=np.int64)
    pos[:, 0] = 0  # shift invariance: pin the first variable
    rest = states
    for k in range(1, n):
        pos[:, k] = rest % p
        rest = rest // p
    score = np.zeros(states.shape[0], dtype=np.int64)
    for i, j, d in inst.equations:
        delta = (pos[:, j] - pos[:, i] - d) % p
        y = np.minimum(delta, p - delta)
        score += p - 2 * y
    return score


def brute_force_optimum(inst: Instance) -> tuple[Assignment, Fraction]:
    """Exhaustive optimum over p^(n-1) assignments with the first variable pinned at 0.

    Deterministic tie-break: the first maximizer in mixed-radix order.  Raises
    if the enumeration exceeds the budget.
    """
    total_states = inst.p ** (inst.n - 1)
    if total_states > BRUTE_FORCE_LIMIT:
        raise ValueError(f"enumeration of {total_states} assignments exceeds budget {BRUTE_FORCE_LIMIT}")
    best_score = -1
    best_state = 0
    for start in range(0, total_states, _CHUNK):
        states = np.arange(start, min(start + _CHUNK, total_states), dtype=np.int64)
        scores = _score_chunk(inst, states)
        k = int(np.argmax(scores))
        if scores[k] > best_score:
            best_score = int(scores[k])
            best_state = int(states[k])
    positions = [0]
    rest = best_state
    for _ in range(1, inst.n):
        positions.append(rest % inst.p)
        rest //= inst.p
    return Assignment(positions), Fraction(best_score, inst.p)


def scale_instance(inst: Instance, ell: int) -> Instance:
    """Scale the domain to ell*p and every target difference to ell*d.

    Slacks scale with the domain, so every assignment value is preserved under
    x -> ell*x and the optimum is unchanged.
    """
    if ell < 1:
        raise ValueError(f"scale factor must be >= 1, got {ell}")
    s = ell * inst.p
    if s > DOMAIN_LIMIT:
        raise ValueError(f"scaled domain {s} exceeds limit {DOMAIN_LIMIT}")
    return Instance(p=s, n=inst.n, equations=[(i, j, ell * d) for i, j, d in inst.equations])


def generate_instance(
    n: int, p: int, m: int, seed: int, planted: bool = False
) -> tuple[Instance, Assignment | None]:
    """Random instance with m equations over random distinct pairs.

    With planted=True the targets are consistent with a hidden assignment,
    which then scores exactly m.  Deterministic per seed.
    """
    if n < 2:
        raise ValueError(f"need at least two variables, got {n}")
    if p <= 0 or p % 2 != 0:
        raise ValueError(f"domain size must be a positive even integer, got {p}")
    rng = np.random.Generator(np.random.Philox(key=np.array([seed & (2**64 - 1), 0xB5], dtype=np.uint64)))
    hidden = None
    positions = rng.integers(0, p, size=n) if planted else None
    equations = []
    for _ in range(m):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n - 1))
        if j >= i:
            j += 1
        if planted:
            d = int((positions[j] - positions[i]) % p)
        else:
            d = int(rng.integers(0, p))
        equations.append((i, j, d))
    inst = Instance(p=p, n=n, equations=equations)
    if planted:
        hidden = Assignment([int(x) for x in positions])
    return inst, hidden


def format_instance(inst: Instance) -> str:
    """Canonical text form; parsing it back reproduces the instance bit-exactly."""
    lines = [f"{FORMAT_MAGIC} {FORMAT_VERSION}", f"{inst.p} {inst.n} {inst.m}"]
    lines.extend(f"{i} {j} {d}" for i, j, d in inst.equations)
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    """Parse the text format; '#' starts a comment, blank lines are ignored."""
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line)
    if not rows:
        raise ValueError("empty instance text")
    header = rows[0].split()
    if header != [FORMAT_MAGIC, str(FORMAT_VERSION)]:
        raise ValueError(f"bad header {rows[0]!r}, expected '{FORMAT_MAGIC} {FORMAT_VERSION}'")
    if len(rows) < 2:
        raise ValueError("missing size line")
    try:
        p, n, m = (int(tok) for tok in rows[1].split())
    except ValueError as exc:
        raise ValueError(f"bad size line {rows[1]!r}") from exc
    body = rows[2:]
    if len(body) != m:
        raise ValueError(f"expected {m} equations, found {len(body)}")
    equations = []
    for line in body:
        try:
            i, j, d = (int(tok) for tok in line.split())
        except ValueError as exc:
            raise ValueError(f"bad equation line {line!r}") from exc
        equations.append((i, j, d))
    return Instance(p=p, n=n, equations=equations)


def save_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(format_instance(inst))


def load_instance(path: str | Path) -> Instance:
    return parse_instance(Path(path).read_text())
