"""Coupling of the doubled life-length walk with its stationary shift.

Two marked renewal walks are built from one stream of sticks and one
stream of fair signs.  The first walk starts at a doubled life length
2V, the second at a doubled stationary overshoot; each stream element
carries the doubled life length 2V as step size and the stick's birth
measure as mark.  Until the signed difference walk first enters [0, eps],
the plus signs feed the first walk and the minus signs feed the second;
afterwards plus-signed elements feed both.

On the event that (i) neither walk has passed level t using pre-meeting
steps only, and (ii) the second walk clears t + 2 eps at its crossing,
the last m + 1 steps before the two crossings must agree exactly -- same
step sizes, same marks -- because from the meeting time on the walks are
parallel with offset inside [0, eps].  ``run_coupling`` replays one
replica and checks that agreement literally, step by step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..measures import PointMeasure
from .laws import StickLaw
from .renewal import sample_vhat

__all__ = ["CouplingResult", "run_coupling", "run_coupling_many", "summarize_coupling"]


@dataclass
class CouplingResult:
    """Outcome of one coupling replica.

    status is "held" (event occurred, all m+1 step comparisons passed),
    "violated" (event occurred, some comparison failed), "no_event" (the
    qualifying event did not occur), or "undecided" (a budget ran out
    before the event could be evaluated).
    """

    status: str
    eps: float
    t: float
    m: int
    meet_time: Optional[int] = None  # steps of the difference walk
    sigma: Optional[int] = None  # plus signs among them
    sigma_prime: Optional[int] = None
    gamma: Optional[float] = None  # max of both walks up to the meeting
    psi: Optional[int] = None  # crossing steps of the walks
    psi_prime: Optional[int] = None
    offset: Optional[float] = None  # walk difference after the meeting
    alpha: float = math.nan  # starting points, for marginal checks
    alpha_prime: float = math.nan
    first_step: float = math.nan
    first_step_prime: float = math.nan
    mismatches: list = field(default_factory=list)

    @property
    def event(self) -> Optional[bool]:
        if self.status == "undecided":
            return None
        return self.status in ("held", "violated")


class _Stream:
    """Lazy i.i.d. stream of (sign, doubled life length, mark)."""

    def __init__(self, law: StickLaw, rng: np.random.Generator, block: int = 256):
        self.law = law
        self.rng = rng
        self.block = block
        self._batch = None
        self._signs = None
        self._pos = 0

    def next(self) -> tuple[int, float, PointMeasure]:
        if self._batch is None or self._pos >= self._batch.n:
            self._batch = self.law.sample_batch(self.rng, self.block)
            self._signs = self.rng.integers(0, 2, self.block) * 2 - 1
            self._pos = 0
        i = self._pos
        self._pos += 1
        return int(self._signs[i]), 2.0 * float(self._batch.v[i]), self._batch.measure(i)


class _Walk:
    """One marked walk: values plus the (step, mark) history."""

    def __init__(self, start: float):
        self.values = [start]
        self.steps: list[float] = []
        self.marks: list[PointMeasure] = []
        self.running_max = start
        self.crossing: Optional[int] = None  # first index with value >= t

    def push(self, xi: float, mark: PointMeasure, t: float) -> None:
        val = self.values[-1] + xi
        self.values.append(val)
        self.steps.append(xi)
        self.marks.append(mark)
        if val > self.running_max:
            self.running_max = val
        if self.crossing is None and val >= t:
            self.crossing = len(self.values) - 1


def run_coupling(
    law: StickLaw,
    eps: float,
    t: float,
    m: int,
    rng: np.random.Generator,
    meet_budget: int = 200_000,
    walk_budget: int = 200_000,
) -> CouplingResult:
    """Run one replica of the coupling and check the step agreement.

    eps = 0 demands an exact meeting of the difference walk and is only
    feasible when life lengths are arithmetic.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0 and not law.arithmetic:
        raise ValueError("eps = 0 requires an arithmetic life-length law")
    if m < 0 or t <= 0:
        raise ValueError("need m >= 0 and t > 0")

    alpha = 2.0 * float(law.sample_v(rng))
    alpha_prime = 2.0 * float(sample_vhat(law, rng))
    walk = _Walk(alpha)
    walk_prime = _Walk(alpha_prime)
    stream = _Stream(law, rng)

    # diff tracks (second walk) - (first walk) over the partial sums: a
    # plus-signed element feeds the first walk, so it lowers the gap.
    diff = alpha_prime - alpha
    meet: Optional[int] = None
    k = 0
    if 0.0 <= diff <= eps:
        meet = 0
    while meet is None and k < meet_budget:
        sign, xi, mark = stream.next()
        k += 1
        diff -= sign * xi
        if sign > 0:
            walk.push(xi, mark, t)
        else:
            walk_prime.push(xi, mark, t)
        if 0.0 <= diff <= eps:
            meet = k
    result = CouplingResult(
        status="undecided",
        eps=eps,
        t=t,
        m=m,
        alpha=alpha,
        alpha_prime=alpha_prime,
    )
    if meet is None:
        return result

    result.meet_time = meet
    result.sigma = len(walk.steps)
    result.sigma_prime = len(walk_prime.steps)
    result.offset = diff
    result.gamma = max(walk.running_max, walk_prime.running_max)

    # After the meeting, plus-signed stream elements drive both walks.
    k = 0
    while (walk.crossing is None or walk_prime.crossing is None) and k < walk_budget:
        sign, xi, mark = stream.next()
        k += 1
        if sign > 0:
            walk.push(xi, mark, t)
            walk_prime.push(xi, mark, t)
    if walk.crossing is None or walk_prime.crossing is None:
        return result

    result.psi = walk.crossing
    result.psi_prime = walk_prime.crossing
    if walk.steps:
        result.first_step = walk.steps[0]
    if walk_prime.steps:
        result.first_step_prime = walk_prime.steps[0]

    event = (
        result.gamma < t
        and result.psi > result.sigma + m
        and walk_prime.values[result.psi_prime] >= t + 2.0 * eps
    )
    if not event:
        result.status = "no_event"
        return result

    # The claim: counted back from the crossings, the last m+1 steps of the
    # two walks are identical stream elements.
    mismatches = []
    for back in range(m + 1):
        i = result.psi - 1 - back
        j = result.psi_prime - 1 - back
        if j < 0:
            mismatches.append({"back": back, "reason": "second walk too short"})
            continue
        ok_step = walk.steps[i] == walk_prime.steps[j]
        ok_mark = walk.marks[i] == walk_prime.marks[j]
        if not (ok_step and ok_mark):
            mismatches.append(
                {
                    "back": back,
                    "step": (walk.steps[i], walk_prime.steps[j]),
                    "marks_equal": ok_mark,
                }
            )
    result.mismatches = mismatches
    result.status = "held" if not mismatches else "violated"
    return result


def run_coupling_many(
    law: StickLaw,
    eps: float,
    t: float,
    m: int,
    rng: np.random.Generator,
    n: int,
    meet_budget: int = 200_000,
    walk_budget: int = 200_000,
) -> list[CouplingResult]:
    return [
        run_coupling(law, eps, t, m, rng, meet_budget=meet_budget, walk_budget=walk_budget)
        for _ in range(n)
    ]


def summarize_coupling(results: list[CouplingResult]) -> dict:
    counts = {"held": 0, "violated": 0, "no_event": 0, "undecided": 0}
    for r in results:
        counts[r.status] += 1
    return {
        "replicas": len(results),
        **counts,
        "event_rate": (counts["held"] + counts["violated"]) / max(len(results), 1),
    }
