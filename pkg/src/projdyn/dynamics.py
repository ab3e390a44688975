"""Fixed-step integration of projected dynamics.

Two first-order schemes are provided:

``tangent_euler``
    Step along the primary branch of the projected field, then restore
    feasibility.
``projected_euler``
    Step along the raw field, then restore feasibility; the velocity is the
    resulting difference quotient.
"""

from dataclasses import dataclass, field
from enum import Enum
import io
import warnings

import numpy as np

from ._validation import as_vector, make_rng
from .errors import RestorationError
from .metric import diagnostics
from .projection import krasovskii_hull, project_field


class Scheme(str, Enum):
    TANGENT_EULER = "tangent_euler"
    PROJECTED_EULER = "projected_euler"


class Termination(str, Enum):
    HORIZON_REACHED = "horizon_reached"
    EQUILIBRIUM = "equilibrium"
    RESTORATION_FAILURE = "restoration_failure"
    STEP_FLOOR = "step_floor"


class EquilibriumKind(str, Enum):
    STRONG = "strong-candidate"
    WEAK = "weak-candidate"
    NONE = "none"


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings of the fixed-step integrators.

    ``dt_floor`` defaults to ``dt / 1024``. ``max_restore`` caps the
    restoration iterations per step. ``kappa_bound`` is the condition-number
    level above which a warning is issued once per run.
    """

    dt: float = 1e-3
    scheme: Scheme = Scheme.TANGENT_EULER
    equil_tol: float = 1e-9
    max_restore: int = 50
    dt_floor: float = None
    kappa_bound: float = 1e8

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.dt_floor is None:
            object.__setattr__(self, "dt_floor", self.dt / 1024.0)
        if not 0 < self.dt_floor <= self.dt:
            raise ValueError("dt_floor must lie in (0, dt]")
        if not self.equil_tol > 0:
            raise ValueError("equil_tol must be positive")
        if self.max_restore < 1:
            raise ValueError("max_restore must be at least 1")

    def to_dict(self):
        return {
            "dt": self.dt,
            "scheme": self.scheme.value,
            "equil_tol": self.equil_tol,
            "max_restore": self.max_restore,
            "dt_floor": self.dt_floor,
            "kappa_bound": self.kappa_bound,
        }


@dataclass(frozen=True)
class Event:
    time: float
    old: tuple
    new: tuple


@dataclass
class Trajectory:
    """Output of :func:`integrate`.

    ``velocities[k]`` is the velocity used on the step leaving
    ``states[k]``; the last entry is the projected field at the final state.
    """

    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray
    active_sets: list
    events: list
    termination: Termination
    message: str = ""
    kappa_max: float = field(default=1.0)

    @property
    def final_state(self):
        return self.states[-1]

    def state_at(self, t):
        """State at the last grid time not after ``t`` (constant after the end)."""
        k = int(np.searchsorted(self.times, t + 1e-12, side="right")) - 1
        return self.states[max(k, 0)]

    def to_csv(self, stream=None, seed=None, scenario=None):
        """Write the CSV representation; returns the text if no stream is given."""
        own = stream is None
        out = io.StringIO() if own else stream
        n = self.states.shape[1]
        meta = []
        if seed is not None:
            meta.append(f"seed={seed}")
        if scenario is not None:
            meta.append(f"scenario={scenario}")
        if meta:
            out.write("# " + " ".join(meta) + "\n")
        cols = ["t"] + [f"x{i}" for i in range(n)] + [f"v{i}" for i in range(n)] + ["active"]
        out.write(",".join(cols) + "\n")
        for t, x, v, act in zip(self.times, self.states, self.velocities, self.active_sets):
            nums = [t, *x, *v]
            out.write(",".join(format(float(a), ".17g") for a in nums))
            out.write("," + "|".join(str(i) for i in act) + "\n")
        out.write(f"# termination={self.termination.value}\n")
        return out.getvalue() if own else None

    @classmethod
    def from_csv(cls, text):
        rows, termination = [], Termination.HORIZON_REACHED
        header = None
        for line in text.splitlines():
            if line.startswith("# termination="):
                termination = Termination(line.split("=", 1)[1].strip())
            elif line.startswith("#") or not line.strip():
                continue
            elif header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
        n = (len(header) - 2) // 2
        nums = np.array([[float(a) for a in r[:-1]] for r in rows])
        active = [tuple(r[-1].split("|")) if r[-1] else () for r in rows]
        active = [tuple(int(a) if a.lstrip("-").isdigit() else a for a in act) for act in active]
        events = [Event(nums[k, 0], active[k - 1], active[k])
                  for k in range(1, len(active)) if active[k] != active[k - 1]]
        return cls(nums[:, 0], nums[:, 1:1 + n], nums[:, 1 + n:1 + 2 * n], active, events,
                   termination)


class _StepFloorReached(Exception):
    pass


def _metric_norm(G, v):
    return float(np.sqrt(max(v @ G @ v, 0.0)))


def _advance(S, g, f, x, cfg, dt):
    """One accepted step; returns ``(x_next, v, dt_used)``."""
    h = dt
    if cfg.scheme is Scheme.PROJECTED_EULER:
        fx = np.asarray(f(x), dtype=float)
        while True:
            try:
                x_next = S.project(x + h * fx, g, anchor=x, max_iter=cfg.max_restore)
                return x_next, (x_next - x) / h, h
            except RestorationError:
                if h / 2 < cfg.dt_floor:
                    raise
                h /= 2
    v = project_field(S, g, f, x).primary
    speed = np.linalg.norm(v)
    while True:
        x_hat = x + h * v
        try:
            x_next = S.project(x_hat, g, anchor=x, max_iter=cfg.max_restore)
        except RestorationError:
            if h / 2 < cfg.dt_floor:
                raise
            h /= 2
            continue
        if np.linalg.norm(x_next - x_hat) <= h * speed + 1e-14 * (1.0 + np.linalg.norm(x)):
            return x_next, v, h
        if h / 2 < cfg.dt_floor:
            raise _StepFloorReached(f"restoration displacement exceeds step at dt={h:.3e}")
        h /= 2


def step(S, g, f, x, cfg):
    """Advance one step from ``x``; returns ``(x_next, v)``.

    Raises
    ------
    RestorationError
        If restoration fails even at ``cfg.dt_floor``.
    """
    x = as_vector(x, S.dim)
    x_next, v, _ = _advance(S, g, f, x, cfg, cfg.dt)
    return x_next, v


def integrate(S, g, f, x0, horizon, cfg=None):
    """Integrate the projected dynamics from ``x0`` up to ``horizon``.

    Stops early after three consecutive steps with ``|v|_g <= equil_tol``,
    or when restoration fails or the step size falls below ``dt_floor``;
    the reason is stored in :attr:`Trajectory.termination`.
    """
    cfg = cfg or IntegratorConfig()
    x = as_vector(x0, S.dim, "x0")
    if not S.contains(x):
        x = S.project(x, g)
    times, states, vels = [0.0], [x], []
    prev_active = S.active_set(x)
    actives, events = [prev_active], []
    termination, message = Termination.HORIZON_REACHED, ""
    t, quiet = 0.0, 0
    kappa_max, warned = 1.0, False
    end_tol = 1e-12 * max(1.0, horizon)
    while horizon - t > end_tol:
        G = g(x)
        if not warned and (not g.is_constant or len(times) == 1):
            kappa = diagnostics(g, x).kappa
            kappa_max = max(kappa_max, kappa)
            if kappa > cfg.kappa_bound:
                warnings.warn(f"metric condition number {kappa:.3e} exceeds {cfg.kappa_bound:.1e} "
                              f"at t={t:.6g}", RuntimeWarning, stacklevel=2)
                warned = True
        try:
            x_next, v, used = _advance(S, g, f, x, cfg, min(cfg.dt, horizon - t))
        except _StepFloorReached as exc:
            termination, message = Termination.STEP_FLOOR, str(exc)
            break
        except RestorationError as exc:
            termination, message = Termination.RESTORATION_FAILURE, str(exc)
            break
        vels.append(v)
        t = t + used
        if horizon - t <= end_tol:
            t = float(horizon)
        x = x_next
        times.append(t)
        states.append(x)
        active = S.active_set(x)
        if active != prev_active:
            events.append(Event(t, prev_active, active))
            prev_active = active
        actives.append(active)
        quiet = quiet + 1 if _metric_norm(G, v) <= cfg.equil_tol else 0
        if quiet >= 3:
            termination = Termination.EQUILIBRIUM
            break
    try:
        vels.append(project_field(S, g, f, x).primary)
    except Exception:
        vels.append(np.zeros(S.dim))
    return Trajectory(np.array(times), np.array(states), np.array(vels), actives, events,
                      termination, message, kappa_max)


def escape_quotients(S, g, f, x, radii, count=512, rng=0):
    """Largest outward rate ``<v_y, y - x>_G / |y - x|_G^2`` per radius.

    For each radius ``r`` the sample points lie in the shell
    ``r/10 <= |y - x| <= r`` and every projection branch at ``y`` counts.
    """
    rng = make_rng(rng)
    x = as_vector(x, S.dim)
    G = g(x)
    out = []
    for r in radii:
        pts = S.sample_neighborhood(x, r, count, rng, inner=r / 10.0)
        best = 0.0
        for y in pts:
            d = y - x
            dd = float(d @ G @ d)
            if dd == 0.0:
                continue
            for v in project_field(S, g, f, y).projected:
                best = max(best, float(v @ G @ d) / dd)
        out.append(best)
    return out


def detect_equilibrium(S, g, f, x, tol=1e-8, radius=1e-2, count=512, seed=0):
    """Classify ``x`` as a strong, weak or non-equilibrium candidate.

    ``x`` is a candidate when the primary projected vector is below ``tol``.
    If every vertex of the sampled Krasovskii hull is also below ``tol`` it
    is a strong candidate. Otherwise nearby solutions may still be unable
    to leave, so the rate at which the projected field pushes away from
    ``x`` is measured on shells of radius ``radius``, ``radius/100`` and
    ``radius/10**4``: a rate that at least doubles at each shrink means
    trajectories can escape in finite time (weak candidate); a bounded rate
    means the constant solution is the only one (strong candidate).
    """
    x = as_vector(x, S.dim)
    r = project_field(S, g, f, x)
    G = g(x)
    if _metric_norm(G, r.primary) > tol:
        return EquilibriumKind.NONE
    hull = krasovskii_hull(S, g, f, x, radius, count, rng=seed)
    if all(_metric_norm(G, w) <= tol for w in hull.vertices):
        return EquilibriumKind.STRONG
    q = escape_quotients(S, g, f, x, [radius, radius * 1e-2, radius * 1e-4], count, rng=seed)
    if q[-1] > 0 and all(b >= 2.0 * a for a, b in zip(q, q[1:])):
        return EquilibriumKind.WEAK
    return EquilibriumKind.STRONG
