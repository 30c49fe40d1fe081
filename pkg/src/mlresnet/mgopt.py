"""Multilevel V-cycle driver: schedules, smoothing, coupling, work units.

One V-cycle descends from the finest level to the coarsest and back.  On
the way down each level runs a few gradient-descent smoothing steps, its
iterate is restricted, and a linear coupling term is built so the coarser
objective starts with the restricted fine gradient.  On the way up the
coarse parameter change is prolongated and added as a correction, followed
by optional post-smoothing.  Work is accounted in finest-level gradient
units: an evaluation on level ``l`` of ``L`` costs ``2**(l - L)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .data import batches
from .errors import NumericOverflowError, ScheduleError
from .net import ParamVector
from .objective import CoupledObjective, gradient
from .transfer import PARAM_RESTRICTION_MODES

_ENTRY_RE = re.compile(r"^(?:(\d+)|\((\d+)\)|\{(\d+)\})$")


@dataclass(frozen=True)
class VCycleSchedule:
    """Smoothing-step counts per level.

    ``smoothing[i]`` holds (pre, post) counts for level ``i + 2``; the
    coarsest level runs ``coarse_steps`` plain optimizer steps instead.
    """

    smoothing: tuple[tuple[int, int], ...]
    coarse_steps: int

    def __post_init__(self):
        if self.coarse_steps < 1:
            raise ValueError("coarsest step count must be >= 1")
        if any(a < 0 or b < 0 for a, b in self.smoothing):
            raise ValueError("smoothing counts must be nonnegative")

    @property
    def n_levels(self) -> int:
        return len(self.smoothing) + 1

    def pre_steps(self, level) -> int:
        return self.smoothing[level - 2][0]

    def post_steps(self, level) -> int:
        return self.smoothing[level - 2][1]


def parse_schedule(text) -> VCycleSchedule:
    """Parse the bracketed step-count list, ordered finest to coarsest.

    A plain number means equal pre- and post-smoothing counts, ``(n)``
    means no post-smoothing, and ``{n}`` is the coarsest-level count, which
    must appear exactly once, in last position:  ``[(1),1,2,{2}]``.
    """
    stripped = text.strip()
    offset = len(text) - len(text.lstrip())
    if not stripped.startswith("["):
        raise ScheduleError("schedule must start with '['", offset)
    if not stripped.endswith("]"):
        raise ScheduleError("schedule must end with ']'", offset + len(stripped))
    inner = stripped[1:-1]
    if not inner.strip():
        raise ScheduleError("schedule is empty", offset + 1)
    entries = []
    pos = offset + 1
    for raw in inner.split(","):
        token = raw.strip()
        token_pos = pos + (len(raw) - len(raw.lstrip()))
        match = _ENTRY_RE.match(token)
        if match is None:
            raise ScheduleError(f"bad schedule entry {token!r}", token_pos)
        plain, paren, curly = match.groups()
        if curly is not None:
            entries.append(("coarse", int(curly), token_pos))
        elif paren is not None:
            entries.append(("pre_only", int(paren), token_pos))
        else:
            entries.append(("both", int(plain), token_pos))
        pos += len(raw) + 1
    curly_entries = [e for e in entries if e[0] == "coarse"]
    if not curly_entries:
        raise ScheduleError("missing coarsest-level entry in braces", offset + len(stripped) - 1)
    if len(curly_entries) > 1 or entries[-1][0] != "coarse":
        bad = curly_entries[0] if entries[-1][0] == "coarse" else curly_entries[-1]
        raise ScheduleError("braced coarsest entry must be the last entry", bad[2])
    coarse_steps = entries[-1][1]
    if coarse_steps < 1:
        raise ScheduleError("coarsest step count must be >= 1", entries[-1][2])
    smoothing = []
    for kind, count, _ in reversed(entries[:-1]):   # store coarse-to-fine
        smoothing.append((count, 0) if kind == "pre_only" else (count, count))
    return VCycleSchedule(tuple(smoothing), coarse_steps)


def default_schedule(n_levels) -> str:
    """Step-count list used by the reference experiments.

    One smoothing step on the finer half of the hierarchy (none after the
    correction on the finest level), two on the coarser half, two on the
    coarsest grid.
    """
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    if n_levels == 1:
        return "[{1}]"
    parts = ["(1)"]
    parts += ["1" if l > n_levels // 2 else "2" for l in range(n_levels - 1, 1, -1)]
    parts.append("{2}")
    return "[" + ",".join(parts) + "]"


def vcycle_cost(schedule, n_levels=None) -> float:
    """Nominal cost of one V-cycle in finest-level work units.

    Sums the coarsest steps at their cost factor plus, per finer level,
    the smoothing steps and the one extra gradient the coupling term
    requires, all weighted by ``2**(l - L)``.
    """
    levels = schedule.n_levels
    if n_levels is not None and n_levels != levels:
        raise ValueError(f"schedule has {levels} levels, expected {n_levels}")
    total = 2.0 ** (1 - levels) * schedule.coarse_steps
    for l in range(2, levels + 1):
        total += (schedule.pre_steps(l) + schedule.post_steps(l) + 1) * 2.0 ** (l - levels)
    return total


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by all level optimizers.

    ``level_rates`` optionally overrides the learning rate per level;
    ``deterministic`` asks the harness for bit-reproducible output (it does
    not change the optimization itself when ``threads == 1``).
    """

    learning_rate: float
    deterministic: bool = True
    param_restriction: str = "average"
    threads: int = 1
    level_rates: dict | None = None

    def __post_init__(self):
        if not np.isfinite(self.learning_rate) or self.learning_rate <= 0.0:
            raise ValueError(f"learning rate must be finite and positive, got {self.learning_rate}")
        if self.param_restriction not in PARAM_RESTRICTION_MODES:
            raise ValueError(f"unknown param restriction {self.param_restriction!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def rate(self, level) -> float:
        if self.level_rates:
            return self.level_rates.get(level, self.learning_rate)
        return self.learning_rate


class WorkLedger:
    """Running account of gradient evaluations in finest-level work units."""

    def __init__(self):
        self.total = 0.0
        self.counts = {}

    def charge(self, level, factor):
        self.counts[level] = self.counts.get(level, 0) + 1
        self.total += factor

    def __repr__(self):
        return f"WorkLedger(total={self.total}, counts={self.counts})"


class CoherenceMonitor:
    """Collects, per level transition, the infinity-norm gap between the
    freshly evaluated coarse gradient at the restriction point and the
    restricted fine-level gradient."""

    def __init__(self):
        self.residuals = []

    def record(self, level, residual):
        self.residuals.append((level, float(residual)))

    def worst(self) -> float:
        return max((r for _, r in self.residuals), default=0.0)


def _is_finite(grad) -> bool:
    if hasattr(grad, "is_finite"):
        return grad.is_finite()
    return bool(np.all(np.isfinite(grad)))


def level_optimizer(obj, theta0, max_it, cfg, ledger=None, level=1, cost=1.0,
                    first_grad=None):
    """``max_it`` fixed-step gradient-descent steps on the level objective.

    ``first_grad`` supplies an already-evaluated gradient for the first
    step (the coupling construction yields one for free); it is not charged
    to the ledger.  ``max_it = 0`` returns ``theta0`` unchanged.
    """
    if max_it < 0:
        raise ValueError("max_it must be >= 0")
    theta = theta0
    rate = cfg.rate(level)
    for it in range(1, max_it + 1):
        if it == 1 and first_grad is not None:
            grad = first_grad
        else:
            _, grad = obj.gradient(theta)
            if ledger is not None:
                ledger.charge(level, cost)
        if not _is_finite(grad):
            raise NumericOverflowError(
                f"non-finite gradient on level {level} at iteration {it}",
                level=level,
                iteration=it,
            )
        theta = theta - rate * grad
    return theta


def _nn_factory(batch, threads):
    return lambda spec, coupling: CoupledObjective(
        spec, batch, coupling, threads=threads
    )


def _coupling_parts(fine_obj, theta_fine, theta_coarse0, coarse_spec, factory,
                    pair, ledger=None, fine_cost=1.0):
    """Shared coupling computation.

    Returns (coupling, coarse_loss_grad, restricted_fine_grad).  Charges
    one fine-level and one coarse-level gradient when a ledger is given.
    """
    _, fine_grad = fine_obj.gradient(theta_fine)
    if ledger is not None:
        ledger.charge(fine_obj.spec.level, fine_cost)
    restricted = pair.restrict_gradient(fine_grad)
    plain_coarse = factory(coarse_spec, None)
    _, coarse_grad = plain_coarse.gradient(theta_coarse0)
    if ledger is not None:
        ledger.charge(coarse_spec.level, fine_cost / 2.0)
    return restricted - coarse_grad, coarse_grad, restricted


def make_coupling(fine_obj, theta_fine, theta_coarse0, coarse_spec, batch,
                  pair, ledger=None, fine_cost=1.0) -> ParamVector:
    """Coupling coefficients for the coarse objective below ``fine_obj``.

    Computed as the restricted fine-level gradient at ``theta_fine`` minus
    the plain coarse loss gradient at ``theta_coarse0`` (which must be the
    restriction of ``theta_fine``), both on the same ``batch``.  Adding the
    resulting linear term makes the coarse gradient at ``theta_coarse0``
    match the restricted fine gradient.
    """
    factory = _nn_factory(batch, fine_obj.threads)
    coupling, _, _ = _coupling_parts(
        fine_obj, theta_fine, theta_coarse0, coarse_spec, factory, pair,
        ledger=ledger, fine_cost=fine_cost,
    )
    return coupling


def vcycle(level, theta, coupling, hierarchy, schedule, cfg, batch,
           ledger=None, monitor=None, objective_factory=None,
           first_grad=None) -> ParamVector:
    """One V-cycle of multilevel descent starting on ``level``.

    Pre-smooths, restricts the iterate, builds the coarser coupling term,
    recurses (or solves approximately on the coarsest level), prolongates
    the coarse correction, then post-smooths.  ``coupling`` is None on the
    finest level.  ``objective_factory(spec, coupling)`` may replace the
    network objective with any object exposing ``gradient(theta)``.
    """
    if schedule.n_levels != hierarchy.n_levels:
        raise ValueError(
            f"schedule has {schedule.n_levels} levels, hierarchy has {hierarchy.n_levels}"
        )
    factory = objective_factory or _nn_factory(batch, cfg.threads)
    return _vcycle(level, theta, coupling, hierarchy, schedule, cfg, factory,
                   ledger, monitor, first_grad)


def _vcycle(level, theta, coupling, hierarchy, schedule, cfg, factory,
            ledger, monitor, first_grad):
    spec = hierarchy.level(level)
    obj = factory(spec, coupling)
    cost = hierarchy.cost_factor(level)
    if level == 1:
        return level_optimizer(obj, theta, schedule.coarse_steps, cfg,
                               ledger, level, cost, first_grad)

    theta = level_optimizer(obj, theta, schedule.pre_steps(level), cfg,
                            ledger, level, cost, first_grad)

    pair = hierarchy.pair(level)
    coarse_spec = hierarchy.level(level - 1)
    theta_coarse = pair.restrict_params(theta, mode=cfg.param_restriction)
    # The pre-smoothed iterate did not move when pre_steps == 0, so the
    # gradient handed down to this level doubles as the coupling gradient.
    reusable = first_grad if schedule.pre_steps(level) == 0 else None
    if reusable is not None:
        fine_grad = reusable
        restricted = pair.restrict_gradient(fine_grad)
        plain_coarse = factory(coarse_spec, None)
        _, coarse_grad = plain_coarse.gradient(theta_coarse)
        if ledger is not None:
            ledger.charge(coarse_spec.level, cost / 2.0)
        coarse_coupling = restricted - coarse_grad
    else:
        coarse_coupling, coarse_grad, restricted = _coupling_parts(
            obj, theta, theta_coarse, coarse_spec, factory, pair,
            ledger=ledger, fine_cost=cost,
        )
    # The first coarse gradient is known in advance: plain loss gradient
    # plus coupling, which a fresh evaluation would reproduce bit for bit.
    coarse_first = coarse_grad + coarse_coupling
    if monitor is not None:
        check_obj = factory(coarse_spec, coarse_coupling)
        _, fresh = check_obj.gradient(theta_coarse)
        monitor.record(level - 1, (fresh - restricted).norm_inf())

    coarse_out = _vcycle(level - 1, theta_coarse, coarse_coupling, hierarchy,
                         schedule, cfg, factory, ledger, monitor, coarse_first)

    theta = theta + pair.prolong(coarse_out - theta_coarse)
    return level_optimizer(obj, theta, schedule.post_steps(level), cfg,
                           ledger, level, cost)


def sgd_epoch(theta, hierarchy, schedule, cfg, dataset, batch_size,
              seed=0, epoch=0, ledger=None, monitor=None, on_cycle=None) -> ParamVector:
    """One epoch of multilevel mini-batch descent.

    Shuffles the dataset (keyed by seed and epoch), then runs one full
    V-cycle per mini-batch from the current parameters.  ``on_cycle`` is
    called with the updated parameters after each V-cycle; returning truth
    stops the epoch early.
    """
    top = hierarchy.n_levels
    for batch in batches(dataset, batch_size, seed, epoch):
        theta = vcycle(top, theta, None, hierarchy, schedule, cfg, batch,
                       ledger=ledger, monitor=monitor)
        if on_cycle is not None and on_cycle(theta):
            break
    return theta
