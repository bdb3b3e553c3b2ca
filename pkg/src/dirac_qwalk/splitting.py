"""Splitting schemes with exact rational coefficients and Suzuki composition."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

OPERATOR_TAGS = ("X", "Y", "Z", "M", "V", "A")
TIME_SHIFT = "T"
STREAM_TAGS = {"X": 0, "Y": 1, "Z": 2}


class SplittingError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    tag: str
    coefficient: Fraction

    def __post_init__(self):
        if self.tag not in OPERATOR_TAGS and self.tag != TIME_SHIFT:
            raise SplittingError(f"unknown operator tag {self.tag!r}")
        object.__setattr__(self, "coefficient", Fraction(self.coefficient))


@dataclass(frozen=True)
class SplittingScheme:
    """Ordered product of exponentials, listed in the order they act on the state.

    Time-shift entries (tag ``"T"``) advance the clock at which the
    time-dependent operators V and A are evaluated.
    """

    steps: tuple[Step, ...]
    order: int
    name: str = ""

    @property
    def operator_steps(self) -> tuple[Step, ...]:
        return tuple(s for s in self.steps if s.tag != TIME_SHIFT)

    def coefficient_sums(self) -> dict[str, Fraction]:
        sums = {tag: Fraction(0) for tag in (*OPERATOR_TAGS, TIME_SHIFT)}
        for s in self.steps:
            sums[s.tag] += s.coefficient
        return sums

    def is_consistent(self) -> bool:
        return all(v == 1 for v in self.coefficient_sums().values())

    def scaled(self, p: Fraction) -> tuple[Step, ...]:
        return tuple(Step(s.tag, s.coefficient * p) for s in self.steps)

    def tags(self) -> list[str]:
        return [s.tag for s in self.operator_steps]


def _scheme(pairs: Iterable[tuple[str, object]], order: int, name: str) -> SplittingScheme:
    return SplittingScheme(tuple(Step(t, Fraction(c)) for t, c in pairs), order, name)


def scheme_second_order() -> SplittingScheme:
    """Q_A Q_V Q_m Q_z Q_y Q_x: X acts first; V and A see the time at the start of the step."""
    return _scheme([(t, 1) for t in OPERATOR_TAGS] + [(TIME_SHIFT, 1)], 2, "second-order")


def scheme_third_order() -> SplittingScheme:
    half = Fraction(1, 2)
    first = [(TIME_SHIFT, half), ("X", half), ("Y", half), ("Z", half), ("M", half), ("V", half)]
    return _scheme(first + [("A", 1)] + first[::-1], 3, "third-order")


def check_suzuki(p: Sequence[Fraction], m: int) -> None:
    p = [Fraction(x) for x in p]
    if sum(p) != 1:
        raise SplittingError(f"Suzuki parameters must sum to 1, got {sum(p)}")
    if sum(x**m for x in p) != 0:
        raise SplittingError(f"sum of p_i^{m} must vanish, got {sum(x**m for x in p)}")


def suzuki_compose(base: SplittingScheme, p: Sequence, m: int | None = None) -> SplittingScheme:
    """F_m(dt) = F_{m-1}(p_1 dt) ... F_{m-1}(p_r dt), with p_1 acting first.

    ``m`` defaults to base.order + 1. The leading error of the base cancels
    only if it is of order dt^m, so the symmetric scheme pairs with m = 3.
    """
    p = [Fraction(x) for x in p]
    m = base.order + 1 if m is None else m
    check_suzuki(p, m)
    steps: list[Step] = []
    for pi in p:
        steps.extend(base.scaled(pi))
    return SplittingScheme(tuple(steps), base.order + 1, f"suzuki({base.name}; r={len(p)})")


@dataclass(frozen=True)
class RationalSolution:
    """Suzuki parameters p_i = 1 / p_tilde_i with integer p_tilde."""

    r: int
    p_tilde: tuple[int, ...]

    @property
    def p(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(1, q) for q in self.p_tilde)

    def satisfies(self, m: int) -> bool:
        p = self.p
        return sum(p) == 1 and sum(x**m for x in p) == 0

    def is_commensurate(self) -> bool:
        largest = max(abs(q) for q in self.p_tilde)
        return all(largest % abs(q) == 0 for q in self.p_tilde)


def canonical_order(values: Iterable[int]) -> tuple[int, ...]:
    """Positives descending, then negatives by increasing magnitude."""
    vals = list(values)
    pos = sorted((v for v in vals if v > 0), reverse=True)
    neg = sorted((v for v in vals if v < 0), reverse=True)
    return tuple(pos + neg)


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def search_rational_splittings(m: int, r: int, p_max: int = 12) -> list[RationalSolution]:
    """All multisets of r nonzero integers with |p_tilde| <= p_max solving the Suzuki conditions.

    Every |p_tilde_i| must divide the largest |p_tilde_j| so that each p_i is an
    integer multiple of the smallest one. The search is exhaustive relative to
    ``p_max``; sums are kept as integers over a common denominator.
    """
    if m < 2:
        raise SplittingError("m must be at least 2")
    if r < 1:
        return []
    found: set[tuple[int, ...]] = set()
    for largest in range(1, p_max + 1):
        divs = _divisors(largest)
        values = sorted(divs + [-d for d in divs], key=lambda v: (-v))
        # scale so that 1/p and 1/p^m become integers
        lin = {v: largest // v for v in values}
        pow_m = {v: (largest // abs(v)) ** m * (1 if v > 0 or m % 2 == 0 else -1) for v in values}
        target_lin = largest
        max_lin = max(abs(x) for x in lin.values())
        max_pow = max(abs(x) for x in pow_m.values())

        def dfs(start: int, left: int, s_lin: int, s_pow: int, chosen: list[int]):
            if left == 0:
                if s_lin == target_lin and s_pow == 0 and largest in (abs(c) for c in chosen):
                    found.add(canonical_order(chosen))
                return
            # remaining terms can move each sum by at most left * max
            if abs(target_lin - s_lin) > left * max_lin or abs(s_pow) > left * max_pow:
                return
            for idx in range(start, len(values)):
                v = values[idx]
                chosen.append(v)
                dfs(idx, left - 1, s_lin + lin[v], s_pow + pow_m[v], chosen)
                chosen.pop()

        dfs(0, r, 0, 0, [])
    return [RationalSolution(r, sol) for sol in sorted(found, key=_table_key)]


def _table_key(sol: tuple[int, ...]):
    return tuple(-v for v in sol)


def streaming_denominator(scheme: SplittingScheme) -> int:
    """Smallest integer N such that N * s is an integer for every streaming coefficient s."""
    from math import lcm

    d = 1
    for s in scheme.steps:
        if s.tag in STREAM_TAGS:
            d = lcm(d, s.coefficient.denominator)
    return d
