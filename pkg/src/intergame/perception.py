"""Multistage perception games.

Play is chopped into sets: a set runs until the stop functional F(omega, phi)
reaches its critical value F0 (or a horizon cap), the window functionals of
the finished set produce the next omega, the criterion is recalibrated with
it, and the next set starts from the final state of the previous one.  Set
boundaries are the partition of the session, so each set contributes one
utterance to the transcript.

Omega is frozen within a set, and a freshly recalibrated criterion takes
effect at the tick after the junction; both choices keep the boundary times
strictly increasing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .engine import Engine, Jet, Trajectory, tick_time
from .epsilon import (
    CellComplex,
    EpsilonEstimate,
    EpsilonRepresentation,
    EpsilonTrace,
    estimate_epsilon,
)
from .errors import DimensionMismatch, EngineError
from .verbalize import (
    DialogueState,
    FunctionalSpec,
    Transcript,
    Window,
    compute_window_functionals,
    transcript as build_transcript,
)

DEFAULT_SET_CAP_S = 60.0


@dataclass
class StopCriterion:
    """Scalar stop functional F(omega_at_set_start, phi) with threshold f0.

    base kinds:
      "neg_distance"  F = -|phi_block - target|
      "norm"          F = |phi|
      "coordinate"    F = scale * phi[index]
      "constant"      F = value (useful for unreachable-threshold tests)

    omega_weights, when set, add a dot product with the omega at set start.
    recalibration, when set, is applied to the parameters after each set.
    """

    f0: float
    base_kind: str = "neg_distance"
    params: dict = field(default_factory=dict)
    omega_weights: np.ndarray | None = None
    recalibration: "RecalibrationMap | None" = None

    def __post_init__(self):
        if not np.isfinite(self.f0):
            raise DimensionMismatch("f0 must be finite")
        if self.base_kind not in ("neg_distance", "norm", "coordinate", "constant"):
            raise DimensionMismatch(f"unknown stop functional kind {self.base_kind!r}")
        if self.omega_weights is not None:
            self.omega_weights = np.asarray(self.omega_weights, dtype=float)

    def value(self, omega, phi) -> float:
        phi = np.asarray(phi, dtype=float)
        if self.base_kind == "neg_distance":
            target = np.asarray(self.params.get("target", np.zeros(phi.size)), dtype=float)
            base = -float(np.linalg.norm(phi[: target.size] - target))
        elif self.base_kind == "norm":
            base = float(np.linalg.norm(phi))
        elif self.base_kind == "coordinate":
            base = float(self.params.get("scale", 1.0)) * float(
                phi[int(self.params.get("index", 0))]
            )
        else:
            base = float(self.params["value"])
        if self.omega_weights is not None and self.omega_weights.size:
            omega = np.asarray(omega, dtype=float)
            if omega.shape != self.omega_weights.shape:
                raise DimensionMismatch(
                    f"omega has shape {omega.shape}, criterion expects "
                    f"{self.omega_weights.shape}"
                )
            base += float(self.omega_weights @ omega)
        return base

    def param_vector(self) -> np.ndarray:
        w = self.omega_weights if self.omega_weights is not None else np.zeros(0)
        return np.concatenate([[self.f0], w])

    def with_param_vector(self, p: np.ndarray) -> "StopCriterion":
        return StopCriterion(
            f0=float(p[0]),
            base_kind=self.base_kind,
            params=dict(self.params),
            omega_weights=None if self.omega_weights is None else np.asarray(p[1:]),
            recalibration=self.recalibration,
        )


@dataclass
class RecalibrationMap:
    """Affine update p' = a p + b omega + c of the criterion parameters.

    The parameter vector is [f0, *omega_weights].  Identity maps return an
    equal criterion; maps compose like the underlying matrices.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_2d(np.asarray(self.b, dtype=float))
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        p = self.a.shape[0]
        if self.a.shape != (p, p) or self.b.shape[0] != p or self.c.shape != (p,):
            raise DimensionMismatch("recalibration matrices have inconsistent shapes")

    @classmethod
    def identity(cls, n_params: int = 1, d_omega: int = 0) -> "RecalibrationMap":
        return cls(np.eye(n_params), np.zeros((n_params, d_omega)), np.zeros(n_params))

    def update(self, p: np.ndarray, omega_new: np.ndarray) -> np.ndarray:
        omega_new = np.asarray(omega_new, dtype=float)
        if omega_new.shape != (self.b.shape[1],):
            raise DimensionMismatch(
                f"recalibration expects omega of dim {self.b.shape[1]}, got {omega_new.shape}"
            )
        if p.shape != (self.a.shape[0],):
            raise DimensionMismatch("criterion parameter vector has unexpected size")
        return self.a @ p + self.b @ omega_new + self.c

    def compose(self, inner: "RecalibrationMap") -> "RecalibrationMap":
        """Map equal to applying `inner` first, then self (same omega)."""
        return RecalibrationMap(
            a=self.a @ inner.a,
            b=self.a @ inner.b + self.b,
            c=self.a @ inner.c + self.c,
        )


def recalibrate_stop(criterion: StopCriterion, omega_new) -> StopCriterion:
    """Apply the criterion's declared recalibration to the new omega."""
    if criterion.recalibration is None:
        return criterion.with_param_vector(criterion.param_vector())
    p = criterion.recalibration.update(
        criterion.param_vector(), np.asarray(omega_new, dtype=float)
    )
    return criterion.with_param_vector(p)


# ---------------------------------------------------------------------------
# Records


@dataclass
class SetRecord:
    """One finished set of a perception game."""

    index: int
    start_tick: int
    end_tick: int
    phi_initial: np.ndarray
    phi_final: np.ndarray
    omega_start: np.ndarray
    f_trace: np.ndarray
    stop_reason: str  # "threshold" | "horizon-cap" | "aborted"
    f0: float

    @property
    def n_ticks(self) -> int:
        return self.end_tick - self.start_tick


@dataclass
class FigureConfig:
    """Hidden-figure predicate: at least min_observers distinct observers'
    eps estimates simultaneously inside one designated cell, sustained for
    dwell seconds."""

    target_cells: tuple[tuple[int, ...], ...]
    dwell: float
    min_observers: int = 2
    view_angle_step: float = 0.5

    def dwell_ticks(self, dt: float) -> int:
        return max(1, int(np.ceil(self.dwell / dt - 1e-12)))


@dataclass
class FigureState:
    """Observable object state of the interactive-perspective demo."""

    params: np.ndarray
    views: list[np.ndarray]
    visible: bool
    dwell_ticks: int


@dataclass
class MatchRecord:
    """Ordered sets of one match plus the dialogue they realize."""

    sets: list[SetRecord]
    states: list[DialogueState]
    transcript: Transcript
    termination: str

    def junctions_exact(self) -> bool:
        return all(
            np.array_equal(a.phi_final, b.phi_initial)
            for a, b in zip(self.sets, self.sets[1:])
        )


@dataclass
class TickSample:
    """Everything the loop knows at one tick, ready for logging."""

    j: int
    t: float
    set_index: int
    phi: np.ndarray
    xi: np.ndarray
    u0: list[np.ndarray]
    u: list[np.ndarray]
    eps: list[np.ndarray | None]
    f_value: float | None
    figure: FigureState | None = None


# ---------------------------------------------------------------------------
# The match loop


def _view_transform(params: np.ndarray, observer: int, angle_step: float) -> np.ndarray:
    """Toy per-observer perspective: rotate the leading plane per observer."""
    out = params.copy()
    if out.size >= 2:
        a = observer * angle_step
        c, s = np.cos(a), np.sin(a)
        x, y = out[0], out[1]
        out[0] = c * x - s * y
        out[1] = s * x + c * y
    else:
        out *= 1.0 + 0.1 * observer
    return out


class MatchRunner:
    """Single engine loop for one session: simulation, online estimation,
    set logic and figure predicate, one tick at a time.

    Drives plain horizon runs (criterion None) as well as perception games.
    Live input arrives through the per-tick `overrides` mapping; everything
    else is reproduced from the seed, which is what makes logs replayable.
    """

    def __init__(
        self,
        compiled,
        seed: int | None = None,
        set_limit: int | None = 1,
        open_ended: bool = False,
        set_cap_s: float = DEFAULT_SET_CAP_S,
        wall_cap_s: float | None = None,
        max_ticks: int | None = None,
        omega0: np.ndarray | None = None,
        phi0=None,
        xi0=None,
        criterion: StopCriterion | None = None,
    ):
        if set_limit is None and not open_ended:
            raise DimensionMismatch("need a set limit or an explicit open-ended flag")
        if open_ended and set_limit is None and wall_cap_s is None:
            raise DimensionMismatch("open-ended matches need a wall-clock cap")
        self.compiled = compiled
        self.dt = float(compiled.dt)
        self.seed = int(compiled.seed if seed is None else seed)
        self.set_limit = set_limit
        self.wall_cap_s = wall_cap_s
        self._t_wall0 = time.monotonic()
        self.set_cap_ticks = max(1, int(round(set_cap_s / self.dt)))
        self.criterion = criterion if criterion is not None else compiled.criterion
        if self.criterion is None and max_ticks is None:
            horizon = float(getattr(compiled, "horizon", 10.0))
            max_ticks = int(round(horizon / self.dt)) + 1
        self.max_ticks = max_ticks
        self.engine = Engine(
            compiled.dynamics,
            compiled.feedbacks,
            compiled.phi0 if phi0 is None else phi0,
            compiled.xi0 if xi0 is None else xi0,
            dt=self.dt,
            seed=self.seed,
            noise_std=compiled.noise_std,
        )
        self.reps: list[EpsilonRepresentation | None] | None = compiled.representations
        self.cells: CellComplex | None = compiled.cells
        self.functionals: FunctionalSpec = compiled.functionals
        self.figure_cfg: FigureConfig | None = getattr(compiled, "figure", None)
        self.omega_prev = (
            np.zeros(self._omega_dim()) if omega0 is None else np.asarray(omega0, dtype=float)
        )
        self.set_index = 0
        self.set_start = 0
        self.sets: list[SetRecord] = []
        self.states: list[DialogueState] = []
        self.windows: list[Window] = []
        self.done = False
        self.termination: str | None = None
        self._dwell = 0
        self._visible = False
        self._was_visible = False
        self.first_visible_tick: int | None = None
        n = compiled.dynamics.n_players
        self._phi: list[np.ndarray] = []
        self._xi: list[np.ndarray] = []
        self._u0: list[list[np.ndarray]] = [[] for _ in range(n)]
        self._u: list[list[np.ndarray]] = [[] for _ in range(n)]
        self._est: list[list[EpsilonEstimate | None]] = [[] for _ in range(n)]
        self._f: list[float | None] = []

    def _omega_dim(self) -> int:
        if self.criterion is not None and self.criterion.omega_weights is not None:
            return self.criterion.omega_weights.size
        if self.criterion is not None and self.criterion.recalibration is not None:
            return self.criterion.recalibration.b.shape[1]
        return 0

    # -- per-tick pipeline -------------------------------------------------

    def _sources(self, jet: Jet) -> list[np.ndarray]:
        eng = self.engine
        out = []
        for i, pol in enumerate(self.compiled.policies):
            v = np.asarray(pol(eng.t, eng.j, eng.phi, eng.xi, jet, eng.rng), dtype=float)
            if v.shape != (self.compiled.dynamics.control_dims[i],):
                raise DimensionMismatch(f"policy for player {i} returned shape {v.shape}")
            out.append(v)
        return out

    def _estimates(self, u0, u, jet) -> list[EpsilonEstimate | None]:
        if self.reps is None or not jet.valid:
            return [None] * len(u0)
        out = []
        for i, rep in enumerate(self.reps):
            if rep is None:
                out.append(None)
            else:
                out.append(estimate_epsilon(rep, u[i], u0[i], jet, xi=self.engine.xi))
        return out

    def _figure(self, ests: list[EpsilonEstimate | None]) -> FigureState | None:
        cfg = self.figure_cfg
        if cfg is None:
            return None
        occupied = 0
        if self.cells is not None:
            for cell in cfg.target_cells:
                n_in = 0
                for est in ests:
                    if est is None or est.value.size != self.cells.dim:
                        continue
                    c, oob = self.cells.cell_of(est.value)
                    if not oob and c == tuple(cell):
                        n_in += 1
                occupied = max(occupied, n_in)
        if occupied >= cfg.min_observers:
            self._dwell += 1
        else:
            self._dwell = 0
        self._visible = self._dwell >= cfg.dwell_ticks(self.dt)
        params = self.engine.phi.copy()
        views = [
            _view_transform(params, i, cfg.view_angle_step)
            for i in range(self.compiled.dynamics.n_players)
        ]
        return FigureState(
            params=params, views=views, visible=self._visible, dwell_ticks=self._dwell
        )

    def tick(self, overrides: dict[int, np.ndarray] | None = None):
        """Advance one tick.  Returns (TickSample, events).

        overrides maps player id to a live control sample applied at this
        tick boundary.  In intent wiring it replaces the pure control; in
        behavior wiring it replaces the realized control while the nominal
        policy keeps providing the pure reference.
        """
        if self.done:
            raise EngineError("match already finished")
        eng = self.engine
        jet = eng.jet()
        sources = self._sources(jet)
        behavior = getattr(self.compiled, "wiring", "intent") == "behavior"
        if behavior:
            u0 = sources
            scripts = getattr(self.compiled, "behavior_scripts", None)
            realized_override = {}
            for i in range(len(sources)):
                if overrides is not None and i in overrides:
                    realized_override[i] = np.asarray(overrides[i], dtype=float)
                elif scripts is not None and scripts[i] is not None:
                    realized_override[i] = np.asarray(
                        scripts[i](eng.t, eng.j, eng.phi, eng.xi, jet, eng.rng),
                        dtype=float,
                    )
                else:
                    realized_override[i] = sources[i]
            u, eta = eng.realize(u0, realized_override=realized_override)
        else:
            u0 = list(sources)
            if overrides is not None:
                for i, val in overrides.items():
                    u0[i] = np.asarray(val, dtype=float)
            realized_override = None
            u, eta = eng.realize(u0)

        ests = self._estimates(u0, u, jet)
        figure = self._figure(ests)
        f_val = (
            self.criterion.value(self.omega_prev, eng.phi)
            if self.criterion is not None
            else None
        )

        j = eng.j
        self._phi.append(eng.phi.copy())
        self._xi.append(eng.xi.copy())
        for i in range(len(u0)):
            self._u0[i].append(u0[i].copy())
            self._u[i].append(u[i].copy())
            self._est[i].append(ests[i])
        self._f.append(f_val)

        sample = TickSample(
            j=j,
            t=eng.t,
            set_index=self.set_index,
            phi=self._phi[-1],
            xi=self._xi[-1],
            u0=[a[-1] for a in self._u0],
            u=[a[-1] for a in self._u],
            eps=[None if e is None else e.value for e in ests],
            f_value=f_val,
            figure=figure,
        )
        events: list[dict] = []
        if figure is not None and figure.visible and not self._was_visible:
            events.append({"type": "figure-visible", "j": j, "t": eng.t})
            if self.first_visible_tick is None:
                self.first_visible_tick = j
        self._was_visible = figure.visible if figure is not None else False

        if self.criterion is not None:
            stop_reason = None
            if f_val >= self.criterion.f0:
                stop_reason = "threshold"
            elif j - self.set_start >= self.set_cap_ticks:
                stop_reason = "horizon-cap"
            if stop_reason is not None:
                events.extend(self._close_set(j, stop_reason))
        if self.max_ticks is not None and not self.done and j + 1 >= self.max_ticks:
            if self.criterion is None:
                events.extend(self._close_set(j, "horizon-cap"))
            self._finish("horizon")
        if (
            self.wall_cap_s is not None
            and not self.done
            and time.monotonic() - self._t_wall0 > self.wall_cap_s
        ):
            self._finish("wall-clock-cap")

        if not self.done:
            eng.step(u0, eta, realized_override)
        return sample, events

    def _set_window(self, start: int, end: int) -> Window:
        phi = np.stack(self._phi[start : end + 1])
        u0_all = np.concatenate([np.stack(a[start : end + 1]) for a in self._u0], axis=1)
        u_all = np.concatenate([np.stack(a[start : end + 1]) for a in self._u], axis=1)
        eps = None
        rows = []
        for j in range(start, end + 1):
            vals = [col[j] for col in self._est if col[j] is not None]
            rows.append(np.concatenate([v.value for v in vals]) if vals else None)
        good = [r for r in rows if r is not None]
        if good:
            width = good[0].size
            stacked = np.stack(
                [r if r is not None else np.full(width, np.nan) for r in rows]
            )
            keep = ~np.isnan(stacked).any(axis=1)
            # warm-up ticks carry no estimate; functionals see valid rows only
            eps = stacked[keep] if keep.any() else None
        return Window(
            start_tick=start,
            end_tick=end,
            dt=self.dt,
            phi=phi,
            u0=u0_all,
            u=u_all,
            eps=eps,
            cell=self._window_cell(eps),
            t0=0.0,
        )

    def _window_cell(self, eps: np.ndarray | None):
        if eps is None or self.cells is None or eps.shape[1] != self.cells.dim:
            return None
        cell, _ = self.cells.cell_of(eps.mean(axis=0))
        return cell

    def _close_set(self, end_tick: int, reason: str) -> list[dict]:
        start = self.set_start
        f_trace = np.asarray(
            [f if f is not None else np.nan for f in self._f[start : end_tick + 1]]
        )
        rec = SetRecord(
            index=self.set_index,
            start_tick=start,
            end_tick=end_tick,
            phi_initial=self._phi[start].copy(),
            phi_final=self._phi[end_tick].copy(),
            omega_start=self.omega_prev.copy(),
            f_trace=f_trace,
            stop_reason=reason,
            f0=self.criterion.f0 if self.criterion is not None else float("nan"),
        )
        self.sets.append(rec)
        window = self._set_window(start, end_tick)
        self.windows.append(window)
        state = compute_window_functionals(window, self.functionals, index=self.set_index)
        self.states.append(state)
        events = [
            {
                "type": "set-boundary",
                "set": self.set_index,
                "j": end_tick,
                "t": tick_time(end_tick, self.dt),
                "reason": reason,
                "F": None if self.criterion is None else float(f_trace[-1]),
            },
            {
                "type": "utterance",
                "n": self.set_index,
                "j": end_tick,
                "t_start": window.t_start,
                "t_end": window.t_end,
                "cell": None if state.cell is None else list(state.cell),
                "omega": state.omega.tolist(),
                "v": state.v.tolist(),
            },
        ]
        if self.criterion is not None:
            self.criterion = recalibrate_stop(self.criterion, state.omega)
            self.omega_prev = state.omega.copy()
        self.set_index += 1
        zero_length = end_tick == self.set_start
        self.set_start = end_tick
        if self.set_limit is not None and self.set_index >= self.set_limit:
            self._finish("set-limit")
        elif zero_length and len(self.sets) >= 2 and self.sets[-2].n_ticks == 0:
            self._finish("no-progress")
        return events

    def abort(self, reason: str) -> list[dict]:
        """Abort the running set (live controller gone) and end the match."""
        if self.done:
            return []
        events = []
        if self._phi:
            events = self._close_set(len(self._phi) - 1, "aborted")
        self._finish(reason)
        return events

    def _finish(self, termination: str):
        self.done = True
        self.termination = termination

    # -- results -----------------------------------------------------------

    def run(self, controller: Callable[[int], dict[int, np.ndarray] | None] | None = None):
        """Tick to completion; controller(j) may supply per-tick overrides."""
        while not self.done:
            overrides = controller(self.engine.j) if controller is not None else None
            self.tick(overrides)
        return self.result()

    def result(self) -> MatchRecord:
        tr = build_transcript(self.windows, self.states) if self.windows else Transcript([])
        return MatchRecord(
            sets=list(self.sets),
            states=list(self.states),
            transcript=tr,
            termination=self.termination or "running",
        )

    def trajectory(self) -> Trajectory:
        n = len(self._phi)
        if n == 0:
            raise EngineError("no ticks recorded")
        d_xi = self.compiled.dynamics.d_xi
        return Trajectory(
            dt=self.dt,
            seed=self.seed,
            jet_order=self.compiled.dynamics.jet_order,
            phi=np.stack(self._phi),
            xi=np.stack(self._xi) if d_xi else np.zeros((n, 0)),
            u0=[np.stack(a) for a in self._u0],
            u=[np.stack(a) for a in self._u],
        )

    def trace(self, player: int) -> EpsilonTrace:
        if self.reps is None or self.reps[player] is None:
            raise DimensionMismatch(f"player {player} has no declared representation")
        rows = self._est[player]
        n = len(rows)
        d = self.reps[player].d_eps
        values = np.full((n, d), np.nan)
        residual = np.full(n, np.nan)
        valid = np.zeros(n, dtype=bool)
        for j, est in enumerate(rows):
            if est is not None:
                values[j] = est.value
                residual[j] = est.residual
                valid[j] = True
        return EpsilonTrace(values, residual, valid, self.dt)

    def f_series(self) -> np.ndarray:
        return np.asarray([f if f is not None else np.nan for f in self._f])


def run_set(
    compiled,
    phi0,
    xi0,
    omega_prev,
    criterion: StopCriterion,
    seed: int | None = None,
    set_cap_s: float = DEFAULT_SET_CAP_S,
    controller=None,
) -> SetRecord:
    """Run one set from a given state and omega; see MatchRunner for the loop."""
    runner = MatchRunner(
        compiled,
        seed=seed,
        set_limit=1,
        set_cap_s=set_cap_s,
        phi0=phi0,
        xi0=xi0,
        omega0=np.asarray(omega_prev, dtype=float),
        criterion=criterion,
    )
    runner.run(controller)
    return runner.sets[0]


def run_match(
    compiled,
    set_limit: int | None,
    seed: int | None = None,
    open_ended: bool = False,
    set_cap_s: float = DEFAULT_SET_CAP_S,
    wall_cap_s: float | None = None,
    controller=None,
) -> MatchRecord:
    """Chain sets into a match; each set starts from its predecessor's end."""
    runner = MatchRunner(
        compiled,
        seed=seed,
        set_limit=set_limit,
        open_ended=open_ended,
        set_cap_s=set_cap_s,
        wall_cap_s=wall_cap_s,
    )
    return runner.run(controller)
