"""Scaling experiments on simulated forests.

One replicate at population scale p simulates enough sticks to cover raw
chronological time p * t_max, then records the rescaled functionals at the
requested times t:

* Hp      -- eps_p * (chronological height at index [pt]);
* Hcalp   -- eps_p * (generation depth at index [pt]);
* Cp      -- eps_p * (contour value at raw time pt);
* Sp      -- count walk at [pt], over p * eps_p;
* phip    -- first index whose contour visit time passes pt, over p;
* phibarp -- first index whose doubled length sum passes pt, over p;
* deltaH  -- Hp minus (mean atom age of the size-biased stick) * Hcalp;
* deltaC  -- Cp minus eps_p * height at index [pt / (2 mean_v)];
* epsDelta-- eps_p * (raw index gap between the two time changes).

The rows go to CSV with exactly these columns; window minima of the two
contours over a fixed scaled interval are aggregated in the summary.
"""

from __future__ import annotations

import csv
import io
import math
import multiprocessing
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..forest import ContourPath
from ..lukasiewicz import ladder_decomp, walk
from ..measures import Stick
from ..spine import height_profile_arrays
from .laws import StickLaw, parse_law

__all__ = [
    "ExperimentConfig",
    "parse_config",
    "resolve_scale",
    "CSV_COLUMNS",
    "simulate_replicate",
    "ExperimentResult",
    "scaling_experiment",
    "max_rise_in_window",
    "simulate_contour",
    "verify_time_change_gap",
]

CSV_COLUMNS = [
    "p",
    "t",
    "replicate",
    "Hp",
    "Hcalp",
    "Cp",
    "Sp",
    "phip",
    "phibarp",
    "deltaH",
    "deltaC",
    "epsDelta",
]


@dataclass
class ExperimentConfig:
    law: str = "gw"
    p_values: tuple[int, ...] = (1000, 10000)
    times: tuple[float, ...] = (0.5, 1.0)
    replicates: int = 20
    seed: int = 0
    eps_rule: Optional[str] = None  # default: the law's own rule
    epsbar_rule: Optional[str] = None  # default: same as eps_rule
    interval: tuple[float, float] = (0.5, 1.0)

    def __post_init__(self):
        if not self.p_values or any(p <= 0 for p in self.p_values):
            raise ValueError("p values must be positive")
        if not self.times or any(t <= 0 for t in self.times):
            raise ValueError("times must be positive")
        if self.replicates <= 0:
            raise ValueError("replicates must be positive")
        u, v = self.interval
        if not 0 <= u < v:
            raise ValueError("interval must satisfy 0 <= u < v")

    def to_text(self) -> str:
        lines = [
            f"law = {self.law}",
            "p = " + ",".join(str(p) for p in self.p_values),
            "times = " + ",".join(format(t, ".12g") for t in self.times),
            f"replicates = {self.replicates}",
            f"seed = {self.seed}",
        ]
        if self.eps_rule:
            lines.append(f"eps = {self.eps_rule}")
        if self.epsbar_rule:
            lines.append(f"epsbar = {self.epsbar_rule}")
        lines.append(
            "interval = " + ",".join(format(x, ".12g") for x in self.interval)
        )
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines (# comments allowed) into a config."""
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = line.split("=", 1)
        fields[key.strip().lower()] = val.strip()
    kwargs: dict = {}
    if "law" in fields:
        kwargs["law"] = fields.pop("law")
    if "p" in fields:
        kwargs["p_values"] = tuple(int(x) for x in fields.pop("p").split(","))
    if "times" in fields:
        kwargs["times"] = tuple(float(x) for x in fields.pop("times").split(","))
    if "replicates" in fields:
        kwargs["replicates"] = int(fields.pop("replicates"))
    if "seed" in fields:
        kwargs["seed"] = int(fields.pop("seed"))
    if "eps" in fields:
        kwargs["eps_rule"] = fields.pop("eps")
    if "epsbar" in fields:
        kwargs["epsbar_rule"] = fields.pop("epsbar")
    if "interval" in fields:
        u, v = (float(x) for x in fields.pop("interval").split(","))
        kwargs["interval"] = (u, v)
    if fields:
        raise ValueError(f"unknown config keys: {sorted(fields)}")
    return ExperimentConfig(**kwargs)


def resolve_scale(rule: str, p: int) -> float:
    """Scale factor for population size p under a named rule.

    ``invsqrt`` is 1/sqrt(p); ``stable:a`` is p^-(1 - 1/a); ``pow:x`` is
    p^-x; a bare number is a constant.
    """
    rule = rule.strip()
    if rule == "invsqrt":
        return float(p) ** -0.5
    if rule.startswith("stable:"):
        a = float(rule.split(":", 1)[1])
        if not 1.0 < a <= 2.0:
            raise ValueError("stable index must be in (1, 2]")
        return float(p) ** -(1.0 - 1.0 / a)
    if rule.startswith("pow:"):
        return float(p) ** -float(rule.split(":", 1)[1])
    try:
        return float(rule)
    except ValueError:
        raise ValueError(f"unknown scale rule {rule!r}") from None


@dataclass
class _Population:
    """Raw simulated arrays for one replicate, long enough for all asks."""

    counts: np.ndarray
    v: np.ndarray
    s: np.ndarray  # count walk, length n+1
    vc2: np.ndarray  # doubled cumulative life lengths, length n
    heights: np.ndarray  # chronological heights, length n+1
    depths: np.ndarray  # generation depths, length n+1
    k: np.ndarray  # contour visit times, length n+1

    @property
    def n(self) -> int:
        return len(self.counts)

    def contour(self) -> ContourPath:
        return ContourPath(self.k, self.heights, self.v)

    def generation_contour(self) -> ContourPath:
        kcal = 2.0 * np.arange(self.n + 1) - self.depths
        return ContourPath(kcal, self.depths.astype(float), np.ones(self.n))


def _simulate_population(
    law: StickLaw, rng: np.random.Generator, min_sticks: int, raw_time: float, raw_gen_time: float
) -> _Population:
    """Sample sticks until index, contour and generation-contour coverage."""
    counts = np.empty(0, dtype=np.int64)
    v = np.empty(0)
    ages = np.empty(0)
    # cushion: the contour visit times lag the doubled length sums by the
    # running height, which for a critical forest grows like sqrt(n)
    base = max(min_sticks, int(raw_time / (2.0 * law.mean_v)) + 1, 64)
    chunk = base + int(6.0 * math.sqrt(base)) + 64
    while True:
        batch = law.sample_batch(rng, chunk)
        counts = np.concatenate([counts, batch.counts])
        v = np.concatenate([v, batch.v])
        ages = np.concatenate([ages, batch.ages])
        offsets = np.zeros(len(counts) + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        heights, depths = height_profile_arrays(counts, offsets, ages)
        n = len(counts)
        vc2 = 2.0 * np.cumsum(v)
        k = np.empty(n + 1)
        k[0] = 0.0
        k[1:] = vc2 - heights[1:]
        kcal_end = 2.0 * n - depths[n]
        if n >= min_sticks and k[-1] >= raw_time and kcal_end >= raw_gen_time:
            s = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts - 1, out=s[1:])
            assert np.all(np.diff(k) >= -1e-9)
            return _Population(counts, v, s, vc2, heights, depths, k)
        chunk = max(chunk // 2, 256)


def simulate_replicate(
    law: StickLaw,
    p: int,
    times: Sequence[float],
    eps: float,
    epsbar: float,
    interval: tuple[float, float],
    rng: np.random.Generator,
) -> tuple[list[dict], dict]:
    """Rows (one per requested time) and window-minimum extras."""
    t_max = max(max(times), interval[1])
    beta = law.mean_v
    ystar = law.mean_ystar
    if ystar is None:
        raise ValueError(f"law {law.name} has no known mean atom-age total")
    min_sticks = int(math.floor(p * t_max * max(1.0, 1.0 / (2.0 * beta)))) + 2
    pop = _simulate_population(
        law, rng, min_sticks, p * t_max, p * interval[1] / beta
    )
    path = pop.contour()
    rows = []
    for t in times:
        s_raw = p * t
        j = int(math.floor(s_raw))
        phi = int(np.searchsorted(pop.k, s_raw, side="left"))
        phibar = int(np.searchsorted(pop.vc2, s_raw, side="left"))
        assert phi >= phibar
        hp = eps * pop.heights[j]
        hcalp = eps * pop.depths[j]
        cp = eps * path.eval(s_raw)
        j_slow = int(math.floor(s_raw / (2.0 * beta)))
        rows.append(
            {
                "p": p,
                "t": t,
                "replicate": -1,  # filled by the caller
                "Hp": hp,
                "Hcalp": hcalp,
                "Cp": cp,
                "Sp": pop.s[j] / (p * eps),
                "phip": phi / p,
                "phibarp": phibar / p,
                "deltaH": hp - ystar * hcalp,
                "deltaC": cp - eps * pop.heights[j_slow],
                "epsDelta": eps * (phi - phibar),
            }
        )
    u, w = interval
    gen_path = pop.generation_contour()
    t_last = max(times)
    phibar_last = int(np.searchsorted(pop.vc2, p * t_last, side="left"))
    extras = {
        "min_contour": eps * path.min_on(p * u, p * w),
        "min_gen_contour": epsbar * gen_path.min_on(p * u / beta, p * w / beta),
        "v_at_phibar": float(pop.v[min(phibar_last, pop.n - 1)]),
    }
    return rows, extras


def _run_task(args) -> tuple[tuple[int, int], list[dict], dict]:
    (law_spec, p, p_idx, rep, times, eps, epsbar, interval, seed) = args
    law = parse_law(law_spec)
    seq = np.random.SeedSequence(seed, spawn_key=(p_idx, rep))
    rng = np.random.Generator(np.random.Philox(seq))
    rows, extras = simulate_replicate(law, p, times, eps, epsbar, interval, rng)
    for row in rows:
        row["replicate"] = rep
    return (p_idx, rep), rows, extras


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[dict]
    extras: dict[tuple[int, int], dict] = field(default_factory=dict)

    def write_csv(self, fp) -> None:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(
                [
                    row["p"],
                    format(row["t"], ".12g"),
                    row["replicate"],
                ]
                + [format(row[c], ".12g") for c in CSV_COLUMNS[3:]]
            )

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def summary(self) -> dict:
        law = parse_law(self.config.law)
        out: dict = {
            "law": law.describe(),
            "config": {
                "p": list(self.config.p_values),
                "times": list(self.config.times),
                "replicates": self.config.replicates,
                "seed": self.config.seed,
                "interval": list(self.config.interval),
            },
            "cells": [],
            "interval_minima": [],
        }
        quantiles = [0.1, 0.25, 0.5, 0.75, 0.9]
        for p in self.config.p_values:
            for t in self.config.times:
                sel = [r for r in self.rows if r["p"] == p and r["t"] == t]
                if not sel:
                    continue
                cell: dict = {"p": p, "t": t, "n": len(sel)}
                for col in CSV_COLUMNS[3:]:
                    vals = np.array([r[col] for r in sel])
                    qs = np.quantile(vals, quantiles)
                    cell[col] = {
                        "mean": float(vals.mean()),
                        "abs_mean": float(np.abs(vals).mean()),
                        "quantiles": {
                            format(q, "g"): float(x) for q, x in zip(quantiles, qs)
                        },
                    }
                out["cells"].append(cell)
        for p_idx, p in enumerate(self.config.p_values):
            mins = [
                self.extras[(p_idx, rep)]
                for rep in range(self.config.replicates)
                if (p_idx, rep) in self.extras
            ]
            if not mins:
                continue
            mc = np.array([m["min_contour"] for m in mins])
            mg = np.array([m["min_gen_contour"] for m in mins])
            target = (law.mean_ystar or 0.0) * mg
            out["interval_minima"].append(
                {
                    "p": p,
                    "min_contour_mean": float(mc.mean()),
                    "scaled_gen_min_mean": float(target.mean()),
                    "abs_gap_mean": float(np.abs(mc - target).mean()),
                    "v_at_phibar_mean": float(
                        np.mean([m["v_at_phibar"] for m in mins])
                    ),
                }
            )
        return out


def scaling_experiment(
    config: ExperimentConfig, workers: int = 1, law: Optional[StickLaw] = None
) -> ExperimentResult:
    """Run the full grid of (p, replicate) simulations.

    Each task gets a Philox generator keyed by (p index, replicate), so the
    result is byte-identical for any worker count.
    """
    law = law if law is not None else parse_law(config.law)
    if not 0.0 <= law.mean_offspring <= 1.0 + 1e-12:
        raise ValueError("scaling experiments need a (sub)critical law")
    eps_rule = config.eps_rule or law.eps_rule
    epsbar_rule = config.epsbar_rule or eps_rule
    tasks = []
    for p_idx, p in enumerate(config.p_values):
        eps = resolve_scale(eps_rule, p)
        epsbar = resolve_scale(epsbar_rule, p)
        for rep in range(config.replicates):
            tasks.append(
                (
                    config.law,
                    p,
                    p_idx,
                    rep,
                    tuple(config.times),
                    eps,
                    epsbar,
                    config.interval,
                    config.seed,
                )
            )
    results: dict[tuple[int, int], tuple[list[dict], dict]] = {}
    if workers > 1:
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            for key, rows, extras in pool.imap_unordered(_run_task, tasks):
                results[key] = (rows, extras)
    else:
        for task in tasks:
            key, rows, extras = _run_task(task)
            results[key] = (rows, extras)
    all_rows: list[dict] = []
    extras_map: dict[tuple[int, int], dict] = {}
    for p_idx in range(len(config.p_values)):
        for rep in range(config.replicates):
            rows, extras = results[(p_idx, rep)]
            all_rows.extend(rows)
            extras_map[(p_idx, rep)] = extras
    return ExperimentResult(config, all_rows, extras_map)


def simulate_contour(
    law: StickLaw, p: int, t_max: float, rng: np.random.Generator
) -> ContourPath:
    """A contour path covering raw time p * t_max (helper for window scans)."""
    min_sticks = int(p * t_max / (2.0 * law.mean_v)) + 2
    pop = _simulate_population(law, rng, min_sticks, p * t_max, 0.0)
    return pop.contour()


def max_rise_in_window(path: ContourPath, width: float) -> float:
    """Largest rise of the contour over any window of the given width.

    The optimal window ends at a peak apex (on a climb the value gains at
    unit rate while the trailing minimum cannot gain faster).  For each
    stick's apex the window minimum combines the contour value at the left
    edge with the local minima whose visit times fall inside the window;
    the latter are tracked with a monotone deque as the apex advances.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    k = path.visit_times
    heights = path.heights
    v = path.v
    n = len(v)
    best = 0.0
    minima: deque[int] = deque()  # indices with increasing heights
    apex_times = k[:n] + v
    left_edges = np.clip(apex_times - width, 0.0, None)
    for i in range(n):
        # maintain deque of local-minimum indices in [left_edge, apex]
        while minima and heights[minima[-1]] >= heights[i]:
            minima.pop()
        minima.append(i)
        while minima and k[minima[0]] < left_edges[i]:
            minima.popleft()
        window_min = path.eval(float(left_edges[i]))
        if minima:
            window_min = min(window_min, float(heights[minima[0]]))
        rise = heights[i] + v[i] - window_min
        if rise > best:
            best = rise
    return float(best)


def verify_time_change_gap(sticks: Sequence[Stick], raw_time: float) -> tuple[int, int]:
    """The index gap between the contour and length time changes, twice.

    Returns (direct, formula): the direct count of extra sticks the contour
    time change needs beyond the length one, and the same number rebuilt
    from the spine height of the restarted sequence and the ladder-age
    functional of the prefix.  The two must agree exactly.
    """
    sticks = list(sticks)
    n = len(sticks)
    v = np.array([s.v for s in sticks])
    vc2 = 2.0 * np.cumsum(v)
    counts = np.array([s.births.mass for s in sticks], dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    ages = np.array([a for s in sticks for a in s.births.atoms])
    heights, _ = height_profile_arrays(counts, offsets, ages)
    k = np.empty(n + 1)
    k[0] = 0.0
    k[1:] = vc2 - heights[1:]
    if vc2[-1] < raw_time or k[-1] < raw_time:
        raise ValueError("not enough sticks to cover the requested time")
    j0 = int(np.searchsorted(vc2, raw_time, side="left"))
    direct = int(np.searchsorted(k, raw_time, side="left")) - j0

    # Rebuild: the gap is the first offset d >= 0 at which the doubled extra
    # length since j0 beats the restarted spine height minus the ladder ages
    # recoverable below the running minimum of the restarted count walk,
    # minus the length overshoot at j0.
    tail_counts = counts[j0:]
    tail_offsets = offsets[j0:] - offsets[j0]
    tail_heights, _ = height_profile_arrays(
        tail_counts, tail_offsets, ages[offsets[j0] :]
    )
    decomp = ladder_decomp(sticks[:j0], j0)
    w = walk(sticks)
    overshoot = vc2[j0] - raw_time
    assert overshoot >= 0.0
    run_min = int(w.s[j0])
    formula = None
    for d in range(n - j0 + 1):
        if d > 0:
            run_min = min(run_min, int(w.s[j0 + d]))
        level = int(w.s[j0]) - run_min
        doubled_extra = (vc2[j0 + d - 1] - vc2[j0]) if d >= 1 else -2.0 * v[j0]
        rhs = tail_heights[d] - decomp.D(level, sticks[:j0]) - overshoot
        if doubled_extra - heights[j0] >= rhs - 1e-9:
            formula = d
            break
    assert formula is not None, "gap formula found no admissible offset"
    return direct, formula
