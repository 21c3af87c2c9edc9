"""Explicit Dormand-Prince 5(4) integrator with PI step control.

An embedded 7-stage pair with the first-same-as-last property, a PI
stepsize controller, cubic Hermite dense output over accepted steps, and
event location by bisection on the interpolant to 1e-12 in t.  Works in
either time direction (t1 < t0 integrates backward); an empty span
returns the single initial sample.  Runs are deterministic: identical
inputs give bit-identical trajectories.

The error norm is the RMS of the per-component local error over the
scale abs_tol + rel_tol * max(|y0|, |y1|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# Dormand-Prince 5(4) tableau.
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0),
)
# The 5th-order weights equal the last A row (first-same-as-last); the
# error weights are the difference against the embedded 4th-order pair.
_E = (71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
      -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
_BETA = 0.04
_EXPO = 0.2 - _BETA * 0.75

EVENT_T_TOL = 1e-12

STOP_REACHED_END = "reached_end"
STOP_EVENT = "event"
STOP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class Event:
    """Zero crossing of fn(t, y) to detect along the trajectory.

    direction > 0 reports only rising crossings, < 0 only falling ones,
    0 both.  A terminal event stops the integration at the crossing.
    """

    fn: Callable[[float, np.ndarray], float]
    direction: int = 0
    terminal: bool = True
    name: str = "event"


@dataclass(frozen=True)
class EventHit:
    name: str
    t: float
    y: np.ndarray
    index: int


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    min_step: float = 1e-14
    events: tuple[Event, ...] = ()
    max_steps: int = 1_000_000
    first_step: float | None = None

    def __post_init__(self):
        if not (1e-16 <= self.rel_tol < 1e-2 and 1e-16 <= self.abs_tol < 1e-2):
            raise ValueError("tolerances must lie in [1e-16, 1e-2)")
        if not (0.0 < self.min_step <= self.max_step):
            raise ValueError("need 0 < min_step <= max_step")


@dataclass
class Trajectory:
    """Accepted-step skeleton of one integration run.

    ts, ys, fs hold the accepted times, states, and derivatives (one row
    per point); `sample` interpolates between rows with the cubic Hermite
    matching both endpoint values and slopes.
    """

    ts: np.ndarray
    ys: np.ndarray
    fs: np.ndarray
    stop_reason: str
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    events: list[EventHit] = field(default_factory=list)
    nfev: int = 0
    naccept: int = 0
    nreject: int = 0

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.ys[-1].copy()

    def sample(self, t: float | Sequence[float]) -> np.ndarray:
        """Dense output at time(s) t inside the integrated span."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        forward = self.ts[-1] >= self.ts[0]
        ts = self.ts if forward else self.ts[::-1]
        lo, hi = ts[0], ts[-1]
        pad = 1e-9 * (1.0 + abs(lo) + abs(hi))
        if np.any(t_arr < lo - pad) or np.any(t_arr > hi + pad):
            raise ValueError("sample time outside the integrated span")
        if len(self.ts) == 1:
            out = np.repeat(self.ys[:1], len(t_arr), axis=0)
            return out if np.ndim(t) else out[0]
        idx = np.clip(np.searchsorted(ts, t_arr, side="right") - 1, 0, len(ts) - 2)
        if not forward:
            idx = len(self.ts) - 2 - idx
        out = np.empty(t_arr.shape + self.ys.shape[1:])
        for k, (tq, i) in enumerate(zip(t_arr, idx)):
            out[k] = self._hermite(tq, int(i))
        return out if np.ndim(t) else out[0]

    def _hermite(self, t: float, i: int) -> np.ndarray:
        t0, t1 = self.ts[i], self.ts[i + 1]
        h = t1 - t0
        if h == 0.0:
            return self.ys[i].copy()
        th = (t - t0) / h
        h00 = (1.0 + 2.0 * th) * (1.0 - th) ** 2
        h10 = th * (1.0 - th) ** 2
        h01 = th * th * (3.0 - 2.0 * th)
        h11 = th * th * (th - 1.0)
        return (h00 * self.ys[i] + h01 * self.ys[i + 1]
                + h * (h10 * self.fs[i] + h11 * self.fs[i + 1]))


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray,
                rel_tol: float, abs_tol: float) -> float:
    sc = abs_tol + rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / sc) ** 2)))


def _initial_step(f, t0: float, y0: np.ndarray, f0: np.ndarray, sign: float,
                  rel_tol: float, abs_tol: float, span: float) -> float:
    sc = abs_tol + rel_tol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / sc) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / sc) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = f(t0 + sign * h0, y0 + sign * h0 * f0)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / sc) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, span)


def integrate(field_fn: Callable[[float, np.ndarray], np.ndarray],
              y0: Sequence[float],
              t_span: tuple[float, float],
              cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate dy/dt = field_fn(t, y) over t_span from y0.

    Stops at the far end of the span, at the first terminal event, or
    when the controller can no longer resolve a step; the stop reason is
    recorded on the trajectory.
    """
    if cfg is None:
        cfg = IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.asarray(y0, dtype=float).copy()
    if y.ndim != 1:
        raise ValueError("state must be one-dimensional")

    nfev = 0

    def f(t: float, yy: np.ndarray) -> np.ndarray:
        nonlocal nfev
        nfev += 1
        return np.asarray(field_fn(t, yy), dtype=float)

    if t1 == t0:
        f0 = f(t0, y)
        return Trajectory(ts=np.array([t0]), ys=np.array([y]),
                          fs=np.array([f0]), stop_reason=STOP_REACHED_END,
                          rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, nfev=nfev)

    sign = 1.0 if t1 > t0 else -1.0
    events = tuple(cfg.events)
    t = t0
    k1 = f(t, y)
    h = cfg.first_step if cfg.first_step is not None else _initial_step(
        f, t, y, k1, sign, cfg.rel_tol, cfg.abs_tol, abs(t1 - t0))
    h = min(abs(h), cfg.max_step)

    ts = [t]
    ys = [y.copy()]
    fs = [k1.copy()]
    g_prev = [ev.fn(t, y) for ev in events]

    traj_events: list[EventHit] = []
    stop_reason = ""
    naccept = 0
    nreject = 0
    facold = 1e-4
    just_rejected = False
    ks: list[np.ndarray] = [k1] * 7

    for _ in range(cfg.max_steps):
        rem = abs(t1 - t)
        h = min(h, rem)
        last = h == rem
        if not last and (h < cfg.min_step or t + sign * h == t):
            stop_reason = STOP_UNDERFLOW
            break
        hs = sign * h

        ks[0] = k1
        for i in range(1, 7):
            acc = _A[i][0] * ks[0]
            for j in range(1, i):
                acc = acc + _A[i][j] * ks[j]
            ks[i] = f(t + _C[i] * hs, y + hs * acc)
        y_new = y + hs * sum(_A[6][j] * ks[j] for j in range(6))
        # First-same-as-last: stage 7 sits at (t+h, y_new) already.
        k_new = ks[6]
        err_vec = hs * sum(_E[j] * ks[j] for j in range(7))
        err = _error_norm(err_vec, y, y_new, cfg.rel_tol, cfg.abs_tol)

        if err <= 1.0:
            # Accept.  Land exactly on t1 when the step was clamped to it.
            facold = max(err, 1e-4)
            t_new = t1 if last else t + hs
            ts.append(t_new)
            ys.append(y_new.copy())
            fs.append(k_new.copy())
            naccept += 1

            if events:
                hit = _locate_events(events, g_prev, t, t_new, ts, ys, fs,
                                     traj_events)
                if hit is not None:
                    # Truncate at the terminal crossing.
                    t_ev, y_ev = hit
                    ts[-1] = t_ev
                    ys[-1] = y_ev
                    fs[-1] = f(t_ev, y_ev)
                    stop_reason = STOP_EVENT
                    break
                g_prev = [ev.fn(t_new, y_new) for ev in events]

            t, y, k1 = t_new, y_new, k_new
            if last:
                stop_reason = STOP_REACHED_END
                break

            fac11 = err ** _EXPO
            fac = fac11 / facold ** _BETA
            fac = max(1.0 / _FAC_MAX, min(1.0 / _FAC_MIN, fac / _SAFETY))
            h_next = h / fac
            if just_rejected:
                h_next = min(h_next, h)
            h = min(h_next, cfg.max_step)
            just_rejected = False
        else:
            nreject += 1
            just_rejected = True
            fac11 = err ** _EXPO
            h = h / min(1.0 / _FAC_MIN, fac11 / _SAFETY)
    else:
        raise RuntimeError(f"no convergence within {cfg.max_steps} steps")

    return Trajectory(ts=np.array(ts), ys=np.array(ys), fs=np.array(fs),
                      stop_reason=stop_reason, rel_tol=cfg.rel_tol,
                      abs_tol=cfg.abs_tol, events=traj_events,
                      nfev=nfev, naccept=naccept, nreject=nreject)


def _locate_events(events: Sequence[Event], g_prev: list[float],
                   t_lo: float, t_hi: float,
                   ts: list, ys: list, fs: list,
                   out: list[EventHit]) -> tuple[float, np.ndarray] | None:
    """Scan one accepted step for crossings; return a terminal hit if any."""
    step = Trajectory(ts=np.array(ts[-2:]), ys=np.array(ys[-2:]),
                      fs=np.array(fs[-2:]), stop_reason="")
    terminal_hit: tuple[float, np.ndarray] | None = None
    for idx, ev in enumerate(events):
        ga = g_prev[idx]
        gb = ev.fn(t_hi, step.ys[-1])
        if ga == 0.0 or ga * gb > 0.0:
            continue
        rising = gb > ga
        if ev.direction > 0 and not rising:
            continue
        if ev.direction < 0 and rising:
            continue
        a, b, ga_ = t_lo, t_hi, ga
        while abs(b - a) > EVENT_T_TOL:
            m = 0.5 * (a + b)
            gm = ev.fn(m, step.sample(m))
            if gm == 0.0:
                a = b = m
                break
            if (gm > 0.0) == (ga_ > 0.0):
                a, ga_ = m, gm
            else:
                b = m
        t_ev = 0.5 * (a + b)
        y_ev = step.sample(t_ev)
        out.append(EventHit(name=ev.name, t=t_ev, y=y_ev, index=idx))
        if ev.terminal:
            if terminal_hit is None or abs(t_ev - t_lo) < abs(terminal_hit[0] - t_lo):
                terminal_hit = (t_ev, y_ev)
    if terminal_hit is not None:
        # Hits past the stopping point never happened.
        direction = 1.0 if t_hi > t_lo else -1.0
        out[:] = [hit for hit in out
                  if direction * (hit.t - terminal_hit[0]) <= EVENT_T_TOL]
        return terminal_hit
    return None


def integrate_scalar(rhs: Callable[[float, float], float],
                     x_span: tuple[float, float],
                     y0: float,
                     cfg: IntegratorConfig | None = None) -> Trajectory:
    """Convenience wrapper for one-dimensional systems y' = rhs(x, y)."""

    def fv(x: float, y: np.ndarray) -> np.ndarray:
        return np.array([rhs(x, float(y[0]))])

    if cfg is not None and cfg.events:
        wrapped = tuple(
            Event(fn=(lambda x, y, _g=ev.fn: _g(x, float(y[0]))),
                  direction=ev.direction, terminal=ev.terminal, name=ev.name)
            for ev in cfg.events)
        cfg = IntegratorConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                               max_step=cfg.max_step, min_step=cfg.min_step,
                               events=wrapped, max_steps=cfg.max_steps,
                               first_step=cfg.first_step)
    return integrate(fv, [y0], x_span, cfg)
