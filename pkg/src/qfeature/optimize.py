"""Derivative-free minimisers: unconstrained COBYLA and Nelder-Mead.

COBYLA follows Powell's scheme with the constraint machinery removed: the
objective is modelled by the linear interpolant on a simplex of ``n + 1``
points, each trust-region step moves a distance ``delta`` down the model
gradient, and the resolution ``rho`` is halved whenever progress stalls on an
acceptable simplex.  With ``adaptive_radius`` (the default) ``delta >= rho``
grows after successful steps and shrinks after poor ones, as in Zhang's
modernised COBYLA; without it ``delta`` is pinned to ``rho`` as in the
original Fortran code.

An *iteration* is one evaluated trust-region step; geometry-repair
evaluations and the initial simplex count as evaluations only.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

COBYLA = "cobyla"
NELDER_MEAD = "nelder_mead"

# Powell's simplex acceptability constants
_ALPHA, _BETA, _GAMMA, _DELTA = 0.25, 2.1, 0.5, 1.1


class ObjectiveError(RuntimeError):
    """The objective returned a non-finite value."""


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = COBYLA
    rho_begin: float = 1.0
    rho_end: float = 1e-4
    max_evaluations: int = 1000
    iteration_budget: int = 100_000
    seed: int = 0
    adaptive_radius: bool = True

    def __post_init__(self):
        if self.method not in (COBYLA, NELDER_MEAD):
            raise ValueError(f"unknown optimizer method {self.method!r}")
        if not (0 < self.rho_end < self.rho_begin):
            raise ValueError("need 0 < rho_end < rho_begin")
        if self.max_evaluations < 1 or self.iteration_budget < 1:
            raise ValueError("evaluation and iteration caps must be >= 1")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    params: np.ndarray
    value: float  # best value seen so far


@dataclass
class OptimizerResult:
    best_params: np.ndarray
    best_value: float
    evaluations_used: int
    iterations: int
    trace: list[TraceEntry] = field(default_factory=list)
    message: str = ""


class _BudgetExhausted(Exception):
    pass


class _Tracker:
    """Wraps the objective: counts calls, enforces the cap, keeps the best point."""

    def __init__(self, fun, max_evaluations: int):
        self.fun = fun
        self.cap = max_evaluations
        self.evaluations = 0
        self.best_x: np.ndarray | None = None
        self.best_f = np.inf
        self.trace: list[TraceEntry] = []

    def __call__(self, x: np.ndarray) -> float:
        if self.evaluations >= self.cap:
            raise _BudgetExhausted
        value = float(self.fun(np.array(x, dtype=float)))
        self.evaluations += 1
        if not np.isfinite(value):
            raise ObjectiveError(
                f"objective returned {value!r} at evaluation {self.evaluations}, x={x!r}"
            )
        if value < self.best_f:
            self.best_f = value
            self.best_x = np.array(x, dtype=float)
        return value

    def record(self, iteration: int, callback=None) -> None:
        self.trace.append(TraceEntry(iteration, self.best_x.copy(), self.best_f))
        if callback is not None:
            callback(iteration, self.best_x.copy(), self.best_f)

    def result(self, iterations: int, message: str) -> OptimizerResult:
        if not self.trace or self.trace[-1].value != self.best_f:
            if self.trace and self.trace[-1].iteration == iterations:
                self.trace.pop()
            self.trace.append(TraceEntry(iterations, self.best_x.copy(), self.best_f))
        return OptimizerResult(
            self.best_x.copy(), self.best_f, self.evaluations, iterations,
            list(self.trace), message,
        )


def cobyla_minimize(
    objective: Callable[[np.ndarray], float],
    x0,
    config: OptimizerConfig = OptimizerConfig(),
    callback: Callable | None = None,
) -> OptimizerResult:
    """Minimise ``objective`` without derivatives using linear simplex models.

    ``callback(iteration, best_x, best_value)`` runs after the initial
    simplex (iteration 0) and after every trust-region step.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    n = x0.size
    f = _Tracker(objective, config.max_evaluations)
    rho = config.rho_begin
    delta = rho
    iteration = 0

    base = x0.copy()
    try:
        fbase = f(base)
        sim = rho * np.eye(n)
        fsim = np.empty(n)
        for j in range(n):
            fsim[j] = f(base + sim[:, j])
            if fsim[j] < fbase:
                # vertex j becomes the base; the old base sits at -rho e_j
                base = base + sim[:, j]
                fbase, fsim[j] = fsim[j], fbase
                sim[j, j] = -rho
    except _BudgetExhausted:
        return f.result(iteration, "evaluation cap reached while building simplex")
    f.record(iteration, callback)

    message = "rho reached rho_end"
    trial_pending = True  # Powell's IBRNCH: next pass takes a trust-region step
    try:
        while True:
            jbest = int(np.argmin(fsim))
            if fsim[jbest] < fbase:
                shift = sim[:, jbest].copy()
                base = base + shift
                sim -= shift[:, None]
                sim[:, jbest] = -shift
                fbase, fsim[jbest] = fsim[jbest], fbase
            if np.linalg.cond(sim) > 1e12:
                # degenerate simplex: rebuild it around the base point
                sim = delta * np.eye(n)
                for j in range(n):
                    fsim[j] = f(base + sim[:, j])
                continue
            simi = np.linalg.inv(sim)
            vsig = 1.0 / np.linalg.norm(simi, axis=1)
            veta = np.linalg.norm(sim, axis=0)
            acceptable = bool(np.all(vsig >= _ALPHA * delta) and np.all(veta <= _BETA * delta))
            grad = simi.T @ (fsim - fbase)

            if not trial_pending and not acceptable:
                if np.any(veta > _BETA * delta):
                    jdrop = int(np.argmax(veta))
                else:
                    jdrop = int(np.argmin(vsig))
                step = _GAMMA * delta * vsig[jdrop] * simi[jdrop]
                if grad @ step > 0:
                    step = -step
                sim[:, jdrop] = step
                fsim[jdrop] = f(base + step)
                trial_pending = True
                continue

            gnorm = float(np.linalg.norm(grad))
            improved = False
            if gnorm > 0 and rho * gnorm > 1e-300:
                step = -delta * grad / gnorm
                iteration += 1
                fnew = f(base + step)
                predicted = delta * gnorm
                actual = fbase - fnew
                weights = np.abs(simi @ step)
                ratio = 1.0 if actual <= 0 else 0.0
                jdrop = -1
                for j in range(n):
                    if weights[j] > ratio:
                        jdrop, ratio = j, weights[j]
                if config.adaptive_radius:
                    # the step has length delta, so 0.1 < r <= 0.7 leaves it unchanged
                    r = actual / predicted
                    if r <= 0.1:
                        delta *= 0.5
                    elif r > 0.7:
                        delta *= 2.0
                    if delta <= 1.5 * rho:
                        delta = rho
                sigbar = weights * vsig
                edgmax = _DELTA * delta
                far = -1
                for j in range(n):
                    if sigbar[j] >= _ALPHA * delta or sigbar[j] >= vsig[j]:
                        dist = veta[j] if actual <= 0 else float(np.linalg.norm(step - sim[:, j]))
                        if dist > edgmax:
                            far, edgmax = j, dist
                if far >= 0:
                    jdrop = far
                if jdrop >= 0:
                    sim[:, jdrop] = step
                    fsim[jdrop] = fnew
                f.record(iteration, callback)
                if iteration >= config.iteration_budget:
                    message = "iteration budget reached"
                    break
                improved = jdrop >= 0 and actual > 0 and actual >= 0.1 * predicted
            if improved:
                continue
            if not acceptable:
                trial_pending = False
                continue
            if delta > rho:
                delta = rho if delta <= 1.5 * rho else 0.5 * delta
                trial_pending = True
                continue
            if rho > config.rho_end:
                old = rho
                rho *= 0.5
                if rho <= 1.5 * config.rho_end:
                    rho = config.rho_end
                delta = max(0.5 * old, rho) if config.adaptive_radius else rho
                trial_pending = True
                continue
            break
    except _BudgetExhausted:
        message = "evaluation cap reached"
    return f.result(iteration, message)


def neldermead_minimize(
    objective: Callable[[np.ndarray], float],
    x0,
    config: OptimizerConfig = OptimizerConfig(method=NELDER_MEAD),
    callback: Callable | None = None,
) -> OptimizerResult:
    """Classic Nelder-Mead with reflection 1, expansion 2, contraction and shrink 0.5.

    The initial simplex is ``x0`` plus ``rho_begin`` along each axis; the run
    stops once every vertex lies within ``rho_end`` of the best one.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    n = x0.size
    f = _Tracker(objective, config.max_evaluations)
    iteration = 0
    message = "simplex diameter below rho_end"
    try:
        pts = np.vstack([x0, x0 + config.rho_begin * np.eye(n)])
        vals = np.array([f(p) for p in pts])
        f.record(iteration, callback)
        while True:
            order = np.argsort(vals, kind="stable")
            pts, vals = pts[order], vals[order]
            if np.max(np.linalg.norm(pts[1:] - pts[0], axis=1)) <= config.rho_end:
                break
            if iteration >= config.iteration_budget:
                message = "iteration budget reached"
                break
            iteration += 1
            centroid = pts[:-1].mean(axis=0)
            xr = centroid + (centroid - pts[-1])
            fr = f(xr)
            if fr < vals[0]:
                xe = centroid + 2.0 * (centroid - pts[-1])
                fe = f(xe)
                if fe < fr:
                    pts[-1], vals[-1] = xe, fe
                else:
                    pts[-1], vals[-1] = xr, fr
            elif fr < vals[-2]:
                pts[-1], vals[-1] = xr, fr
            else:
                if fr < vals[-1]:
                    xc = centroid + 0.5 * (xr - centroid)
                else:
                    xc = centroid + 0.5 * (pts[-1] - centroid)
                fc = f(xc)
                if fc < min(fr, vals[-1]):
                    pts[-1], vals[-1] = xc, fc
                else:
                    for j in range(1, n + 1):
                        pts[j] = pts[0] + 0.5 * (pts[j] - pts[0])
                        vals[j] = f(pts[j])
            f.record(iteration, callback)
    except _BudgetExhausted:
        message = "evaluation cap reached"
    return f.result(iteration, message)


def minimize(objective, x0, config: OptimizerConfig = OptimizerConfig(), callback=None):
    if config.method == COBYLA:
        return cobyla_minimize(objective, x0, config, callback)
    return neldermead_minimize(objective, x0, config, callback)


def write_trace_csv(result: OptimizerResult, path) -> None:
    """Write ``iteration,best_loss,best_accuracy`` rows for a ``1 - accuracy`` objective."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "best_loss", "best_accuracy"])
        for e in result.trace:
            w.writerow([e.iteration, repr(e.value), repr(1.0 - e.value)])
