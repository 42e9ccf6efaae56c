"""Interactive-system core: coupled state/intention dynamics under partially
known feedback couplings, integrated by a deterministic fixed-step RK4 loop.

The engine integrates

    dphi/dt = Phi(phi, u_1 .. u_n)                      (realized controls)
    dxi/dt  = Xi(xi, phi, u0_1 .. u0_n, u_1 .. u_n)

where each realized control u_i comes from the player's pure control u0_i
through a memoryless coupling map u_i = f_i(t, u0_i, phi, xi, jet).  Coupling
maps are re-evaluated inside the integrator stages (so couplings through phi
and xi are integrated consistently), while pure controls, disturbances and
jets are sampled once per tick and held for the step.  Together with the
precomputed tick grid this makes every run bit-reproducible from its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EvaluationFailure,
    IntegrationDiverged,
    UnsupportedKernel,
)

DEFAULT_DT = 0.01


def tick_time(j: int, dt: float, t0: float = 0.0) -> float:
    """Time of tick j on a constructed (never accumulated) grid."""
    return t0 + j * dt


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return v


# ---------------------------------------------------------------------------
# Sampled quantities


@dataclass(frozen=True)
class StateVector:
    """System state sample at one tick."""

    values: np.ndarray
    time: float

    def __post_init__(self):
        object.__setattr__(self, "values", _as_vector(self.values, "state"))


@dataclass(frozen=True)
class IntentionField:
    """Intention-field sample at one tick.

    Dimension zero is allowed and means the scenario carries no reduction
    variables.
    """

    values: np.ndarray
    time: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise DimensionMismatch(f"intention field must be 1-d, got {v.shape}")
        if v.size and not np.all(np.isfinite(v)):
            raise DimensionMismatch("intention field contains non-finite entries")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ControlSeries:
    """Per-player control samples on the engine tick grid."""

    player: int
    values: np.ndarray  # (n_ticks, du)
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise DimensionMismatch(f"control series must be 2-d, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DimensionMismatch("control series contains non-finite entries")
        if self.dt <= 0:
            raise DimensionMismatch("tick spacing must be positive")
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.values.shape[0]) * self.dt


class PureControl(ControlSeries):
    """Independent (pure) control samples u0_i."""


class RealizedControl(ControlSeries):
    """Realized interactive control samples u_i, coupled with the feedbacks."""


@dataclass(frozen=True)
class Jet:
    """phi and its first `order` time derivatives at one tick.

    Derivatives are backward finite differences over the tick history; the
    first `order` ticks of a run cannot fill the stencil and produce jets
    with valid=False (derivative rows zero-filled).
    """

    order: int
    values: np.ndarray  # (order + 1, d_phi); row m is the m-th derivative
    valid: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != self.order + 1:
            raise DimensionMismatch(
                f"jet of order {self.order} needs {self.order + 1} rows, got {v.shape}"
            )
        object.__setattr__(self, "values", v)

    @property
    def phi(self) -> np.ndarray:
        return self.values[0]

    def derivative(self, m: int) -> np.ndarray:
        return self.values[m]


def backward_jet(history: np.ndarray, dt: float, order: int) -> Jet:
    """Jet at the newest sample of `history` (rows = ticks, newest last).

    Uses iterated backward differences: the m-th derivative needs m+1
    samples.  If history is shorter than order+1 the jet is marked invalid
    and derivative rows are zero.
    """
    hist = np.atleast_2d(np.asarray(history, dtype=float))
    d = hist.shape[1]
    rows = np.zeros((order + 1, d))
    rows[0] = hist[-1]
    valid = hist.shape[0] >= order + 1
    avail = min(order, hist.shape[0] - 1)
    for m in range(1, avail + 1):
        acc = np.zeros(d)
        for i in range(m + 1):
            acc += ((-1) ** i) * math.comb(m, i) * hist[-1 - i]
        rows[m] = acc / dt**m
    if not valid:
        rows[avail + 1 :] = 0.0
    return Jet(order=order, values=rows, valid=valid)


# ---------------------------------------------------------------------------
# Dynamics

PhiRhs = Callable[[np.ndarray, list[np.ndarray]], np.ndarray]
XiRhs = Callable[[np.ndarray, np.ndarray, list[np.ndarray], list[np.ndarray]], np.ndarray]
# Coupling map: (t_tick, u0_i, phi, xi, jet) -> u_i.  phi and xi are stage
# values during integration; t and the jet are frozen at the tick.
FeedbackMap = Callable[[float, np.ndarray, np.ndarray, np.ndarray, Jet], np.ndarray]


def identity_feedback(t, u0, phi, xi, jet):
    """Feedback-free limit: the realized control equals the pure one."""
    return u0


@dataclass
class DynamicsSpec:
    """Right-hand sides and dimensions of one interactive system.

    phi_rhs(phi, controls) and xi_rhs(xi, phi, pure, realized) must be pure
    functions of their arguments.  xi_rhs receives the pure controls as well
    as the realized ones because memory-feedback reductions need them; either
    list may be ignored.
    """

    n_players: int
    d_phi: int
    d_xi: int
    control_dims: tuple[int, ...]
    phi_rhs: PhiRhs
    xi_rhs: XiRhs | None = None
    jet_order: int = 1

    def __post_init__(self):
        self.control_dims = tuple(int(d) for d in self.control_dims)
        if self.n_players < 1:
            raise DimensionMismatch("need at least one player")
        if len(self.control_dims) != self.n_players:
            raise DimensionMismatch(
                f"control_dims has {len(self.control_dims)} entries for "
                f"{self.n_players} players"
            )
        if self.d_phi < 1 or self.d_xi < 0 or self.jet_order < 0:
            raise DimensionMismatch("invalid dimensions")
        if self.d_xi > 0 and self.xi_rhs is None:
            raise DimensionMismatch("d_xi > 0 requires an xi right-hand side")


def _check_controls(spec: DynamicsSpec, controls: Sequence[np.ndarray], what: str):
    if len(controls) != spec.n_players:
        raise DimensionMismatch(
            f"{what}: got {len(controls)} control vectors for {spec.n_players} players"
        )
    for i, (u, d) in enumerate(zip(controls, spec.control_dims)):
        if np.shape(u) != (d,):
            raise DimensionMismatch(
                f"{what}: player {i} control has shape {np.shape(u)}, expected ({d},)"
            )


def _rk4(deriv, phi: np.ndarray, xi: np.ndarray, dt: float):
    """One classical RK4 step of the stacked (phi, xi) state."""
    k1p, k1x = deriv(phi, xi)
    k2p, k2x = deriv(phi + 0.5 * dt * k1p, xi + 0.5 * dt * k1x)
    k3p, k3x = deriv(phi + 0.5 * dt * k2p, xi + 0.5 * dt * k2x)
    k4p, k4x = deriv(phi + dt * k3p, xi + dt * k3x)
    phi_next = phi + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    xi_next = xi + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    return phi_next, xi_next


def rk4_step(
    spec: DynamicsSpec,
    phi: np.ndarray,
    xi: np.ndarray,
    controls: Sequence[np.ndarray],
    dt: float,
    pure_controls: Sequence[np.ndarray] | None = None,
    tick: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """One RK4 step with the realized controls held constant over the step.

    pure_controls defaults to the realized ones; it only matters for systems
    whose xi dynamics read the pure channel.
    """
    if dt <= 0:
        raise DimensionMismatch("dt must be positive")
    phi = np.asarray(phi, dtype=float)
    xi = np.asarray(xi, dtype=float)
    controls = [np.asarray(u, dtype=float) for u in controls]
    _check_controls(spec, controls, "rk4_step")
    pure = controls if pure_controls is None else [np.asarray(u, dtype=float) for u in pure_controls]

    def deriv(p, x):
        dp = spec.phi_rhs(p, controls)
        dx = spec.xi_rhs(x, p, pure, controls) if spec.d_xi else np.zeros(0)
        return np.asarray(dp, dtype=float), np.asarray(dx, dtype=float)

    phi_next, xi_next = _rk4(deriv, phi, xi, dt)
    if not (np.all(np.isfinite(phi_next)) and np.all(np.isfinite(xi_next))):
        raise IntegrationDiverged(tick)
    return phi_next, xi_next


# ---------------------------------------------------------------------------
# Trajectories


@dataclass
class Trajectory:
    """Tick-indexed record of one simulated session.

    The grid is constructed, never accumulated: times are j * dt + t0 exactly.
    Replaying the producing scenario with the same seed reproduces the arrays
    bit for bit.
    """

    dt: float
    seed: int
    jet_order: int
    phi: np.ndarray  # (n_ticks, d_phi)
    xi: np.ndarray  # (n_ticks, d_xi)
    u0: list[np.ndarray]  # per player, (n_ticks, du_i)
    u: list[np.ndarray]
    t0: float = 0.0

    @property
    def n_ticks(self) -> int:
        return self.phi.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_ticks) * self.dt

    @property
    def n_players(self) -> int:
        return len(self.u0)

    @property
    def warmup(self) -> int:
        """Number of leading ticks whose jets cannot fill the stencil."""
        return self.jet_order

    def state_at(self, j: int) -> StateVector:
        return StateVector(self.phi[j].copy(), tick_time(j, self.dt, self.t0))

    def intention_at(self, j: int) -> IntentionField:
        return IntentionField(self.xi[j].copy(), tick_time(j, self.dt, self.t0))

    def pure_control(self, player: int) -> PureControl:
        return PureControl(player, self.u0[player].copy(), self.dt, self.t0)

    def realized_control(self, player: int) -> RealizedControl:
        return RealizedControl(player, self.u[player].copy(), self.dt, self.t0)

    def jet_at(self, j: int) -> Jet:
        lo = max(0, j - self.jet_order)
        return backward_jet(self.phi[lo : j + 1], self.dt, self.jet_order)


# Pure-control policy: (t, tick, phi, xi, jet, rng) -> u0_i.
Policy = Callable[[float, int, np.ndarray, np.ndarray, Jet, np.random.Generator], np.ndarray]


def constant_policy(value) -> Policy:
    v = np.asarray(value, dtype=float)
    return lambda t, j, phi, xi, jet, rng: v


class Engine:
    """Single-session stepping core.

    Holds the current (phi, xi), the phi history needed for jets, and the
    session RNG.  All mutation happens through tick(); the class is intended
    to be owned by exactly one loop.
    """

    def __init__(
        self,
        spec: DynamicsSpec,
        feedbacks: Sequence[FeedbackMap],
        phi0,
        xi0,
        dt: float = DEFAULT_DT,
        seed: int = 0,
        noise_std: Sequence[float] | None = None,
        t0: float = 0.0,
    ):
        if len(feedbacks) != spec.n_players:
            raise DimensionMismatch("one coupling map per player required")
        self.spec = spec
        self.feedbacks = list(feedbacks)
        self.dt = float(dt)
        if self.dt <= 0:
            raise DimensionMismatch("dt must be positive")
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.noise_std = list(noise_std) if noise_std is not None else [0.0] * spec.n_players
        self.t0 = float(t0)
        self.j = 0
        self.phi = _as_vector(phi0, "phi0")
        xi0 = np.asarray(xi0 if xi0 is not None else np.zeros(spec.d_xi), dtype=float)
        if self.phi.shape != (spec.d_phi,) or xi0.shape != (spec.d_xi,):
            raise DimensionMismatch("initial state dimensions do not match the spec")
        self.xi = xi0
        self._hist = [self.phi.copy()]

    @property
    def t(self) -> float:
        return tick_time(self.j, self.dt, self.t0)

    def jet(self) -> Jet:
        return backward_jet(np.array(self._hist), self.dt, self.spec.jet_order)

    def realize(self, u0: Sequence[np.ndarray], realized_override: dict[int, np.ndarray] | None = None):
        """Realized controls at the current tick point, plus held disturbances.

        Returns (u_list, eta_list).  Disturbance draws happen here, once per
        tick, in player order; they are replayed exactly from the seed.
        """
        jet = self.jet()
        t = self.t
        eta = []
        for i, sigma in enumerate(self.noise_std):
            if sigma > 0:
                eta.append(sigma * self.rng.standard_normal(self.spec.control_dims[i]))
            else:
                eta.append(np.zeros(self.spec.control_dims[i]))
        u = []
        for i in range(self.spec.n_players):
            if realized_override is not None and i in realized_override:
                ui = np.asarray(realized_override[i], dtype=float)
            else:
                ui = np.asarray(self.feedbacks[i](t, u0[i], self.phi, self.xi, jet), dtype=float)
                ui = ui + eta[i]
            if ui.shape != (self.spec.control_dims[i],):
                raise DimensionMismatch(
                    f"coupling for player {i} returned shape {ui.shape}, "
                    f"expected ({self.spec.control_dims[i]},)"
                )
            u.append(ui)
        return u, eta

    def step(
        self,
        u0: Sequence[np.ndarray],
        eta: Sequence[np.ndarray],
        realized_override: dict[int, np.ndarray] | None = None,
    ):
        """Advance (phi, xi) by one tick with couplings evaluated per stage.

        Players present in realized_override have their realized control held
        constant over the step (live input is data, not a law to re-evaluate).
        """
        spec = self.spec
        jet = self.jet()
        t = self.t

        def deriv(p, x):
            u_stage = []
            for i in range(spec.n_players):
                if realized_override is not None and i in realized_override:
                    u_stage.append(np.asarray(realized_override[i], dtype=float))
                else:
                    ui = np.asarray(self.feedbacks[i](t, u0[i], p, x, jet), dtype=float)
                    u_stage.append(ui + eta[i])
            dp = np.asarray(spec.phi_rhs(p, u_stage), dtype=float)
            dx = (
                np.asarray(spec.xi_rhs(x, p, list(u0), u_stage), dtype=float)
                if spec.d_xi
                else np.zeros(0)
            )
            if dp.shape != (spec.d_phi,) or dx.shape != (spec.d_xi,):
                raise DimensionMismatch("dynamics returned wrong output dimensions")
            return dp, dx

        phi_next, xi_next = _rk4(deriv, self.phi, self.xi, self.dt)
        if not (np.all(np.isfinite(phi_next)) and np.all(np.isfinite(xi_next))):
            raise IntegrationDiverged(self.j)
        self.j += 1
        self.phi = phi_next
        self.xi = xi_next
        self._hist.append(phi_next.copy())
        if len(self._hist) > spec.jet_order + 1:
            del self._hist[0]


def simulate(
    spec: DynamicsSpec,
    policies: Sequence[Policy],
    feedbacks: Sequence[FeedbackMap],
    phi0,
    xi0,
    horizon: float,
    dt: float = DEFAULT_DT,
    seed: int = 0,
    noise_std: Sequence[float] | None = None,
) -> Trajectory:
    """Run the closed loop for `horizon` seconds and record every tick.

    horizon must be a positive multiple of dt.  Identical (spec, policies,
    seed) calls return byte-identical trajectories.
    """
    steps = horizon / dt
    n_steps = int(round(steps))
    if horizon <= 0 or abs(steps - n_steps) > 1e-9 or n_steps < 1:
        raise DimensionMismatch("horizon must be a positive multiple of dt")
    if len(policies) != spec.n_players:
        raise DimensionMismatch("one pure-control policy per player required")

    eng = Engine(spec, feedbacks, phi0, xi0, dt=dt, seed=seed, noise_std=noise_std)
    phis = np.empty((n_steps + 1, spec.d_phi))
    xis = np.empty((n_steps + 1, spec.d_xi))
    u0s = [np.empty((n_steps + 1, d)) for d in spec.control_dims]
    us = [np.empty((n_steps + 1, d)) for d in spec.control_dims]

    for j in range(n_steps + 1):
        jet = eng.jet()
        u0 = []
        for i, pol in enumerate(policies):
            v = np.asarray(pol(eng.t, j, eng.phi, eng.xi, jet, eng.rng), dtype=float)
            if v.shape != (spec.control_dims[i],):
                raise DimensionMismatch(
                    f"policy for player {i} returned shape {v.shape}, "
                    f"expected ({spec.control_dims[i]},)"
                )
            u0.append(v)
        u, eta = eng.realize(u0)
        phis[j] = eng.phi
        xis[j] = eng.xi
        for i in range(spec.n_players):
            u0s[i][j] = u0[i]
            us[i][j] = u[i]
        if j < n_steps:
            eng.step(u0, eta)

    return Trajectory(
        dt=dt,
        seed=seed,
        jet_order=spec.jet_order,
        phi=phis,
        xi=xis,
        u0=u0s,
        u=us,
    )


# ---------------------------------------------------------------------------
# Memory-feedback reduction


@dataclass(frozen=True)
class MemoryKernel:
    """Supported integrodifferential feedback forms.

    kind "integral":  u_i(t) = u0_i(t) + gain @ integral_0^t phi dtau
    kind "exp_lag":   du_i/dt = (u0_i - u_i) / lam, u_i(0) = u_init
    kind "none":      keep the player's existing memoryless coupling

    Anything else is rejected; there is deliberately no generic approximation
    path.
    """

    kind: str
    gain: np.ndarray | None = None
    lam: float = 0.0
    u_init: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("none", "integral", "exp_lag"):
            raise UnsupportedKernel(f"unsupported memory kernel {self.kind!r}")
        if self.kind == "exp_lag" and self.lam <= 0:
            raise UnsupportedKernel("exp_lag kernel needs a positive time constant")


@dataclass
class ReducedSystem:
    """Result of a memory-feedback reduction.

    The realized controls of (spec, feedbacks) started at xi0 reproduce the
    memory feedbacks of the original system along trajectories.
    """

    spec: DynamicsSpec
    feedbacks: list[FeedbackMap]
    xi0: np.ndarray
    xi_slices: dict[int, slice]


def reduce_memory_feedback(
    kernels: Sequence[MemoryKernel | None],
    base: DynamicsSpec,
    base_feedbacks: Sequence[FeedbackMap],
    xi0_base=None,
) -> ReducedSystem:
    """Rewrite memory feedbacks as extra intention-field coordinates.

    Each player with an integral or exp_lag kernel gets a block of new xi
    coordinates so that the reduced system's memoryless coupling equals the
    original memory feedback.  The choice of reduction is canonical here but
    not unique in general.
    """
    if len(kernels) != base.n_players or len(base_feedbacks) != base.n_players:
        raise DimensionMismatch("one kernel and coupling entry per player required")
    d0 = base.d_xi
    xi0_base = np.asarray(
        xi0_base if xi0_base is not None else np.zeros(d0), dtype=float
    )
    if xi0_base.shape != (d0,):
        raise DimensionMismatch("base xi0 dimension mismatch")

    slices: dict[int, slice] = {}
    init_blocks: list[np.ndarray] = []
    offset = d0
    active: list[tuple[int, MemoryKernel]] = []
    for i, k in enumerate(kernels):
        if k is None or k.kind == "none":
            continue
        du = base.control_dims[i]
        if k.kind == "integral":
            gain = np.asarray(k.gain if k.gain is not None else np.eye(du, base.d_phi), dtype=float)
            if gain.shape != (du, base.d_phi):
                raise DimensionMismatch(
                    f"integral kernel gain for player {i} must be ({du}, {base.d_phi})"
                )
            k = MemoryKernel("integral", gain=gain)
            init_blocks.append(np.zeros(du))
        else:
            u_init = np.asarray(
                k.u_init if k.u_init is not None else np.zeros(du), dtype=float
            )
            if u_init.shape != (du,):
                raise DimensionMismatch(f"exp_lag u_init for player {i} must be ({du},)")
            k = MemoryKernel("exp_lag", lam=k.lam, u_init=u_init)
            init_blocks.append(u_init.copy())
        slices[i] = slice(offset, offset + du)
        offset += du
        active.append((i, k))

    if not active:
        return ReducedSystem(base, list(base_feedbacks), xi0_base, {})

    d_xi = offset
    base_xi = base.xi_rhs

    def xi_rhs(xi, phi, pure, realized):
        parts = []
        if d0:
            parts.append(np.asarray(base_xi(xi[:d0], phi, pure, realized), dtype=float))
        for i, k in active:
            block = xi[slices[i]]
            if k.kind == "integral":
                parts.append(k.gain @ phi)
            else:
                parts.append((pure[i] - block) / k.lam)
        return np.concatenate(parts) if parts else np.zeros(0)

    feedbacks = list(base_feedbacks)
    for i, k in active:
        sl = slices[i]
        if k.kind == "integral":
            def fb(t, u0, phi, xi, jet, sl=sl):
                return u0 + xi[sl]
        else:
            def fb(t, u0, phi, xi, jet, sl=sl):
                return xi[sl].copy()
        feedbacks[i] = fb

    spec = DynamicsSpec(
        n_players=base.n_players,
        d_phi=base.d_phi,
        d_xi=d_xi,
        control_dims=base.control_dims,
        phi_rhs=base.phi_rhs,
        xi_rhs=xi_rhs,
        jet_order=base.jet_order,
    )
    xi0 = np.concatenate([xi0_base] + init_blocks)
    return ReducedSystem(spec, feedbacks, xi0, slices)


# ---------------------------------------------------------------------------
# Coalitions


@dataclass(frozen=True)
class Coalition:
    """One coalition of action: member players, aggregation weights, and an
    optional declared feedback term on the state jet."""

    members: tuple[int, ...]
    weights: tuple[float, ...]
    jet_feedback: Callable[[Jet], np.ndarray] | None = None

    def __post_init__(self):
        if len(self.members) == 0:
            raise DimensionMismatch("coalition must have at least one member")
        if len(self.weights) != len(self.members):
            raise DimensionMismatch(
                f"coalition has {len(self.members)} members but {len(self.weights)} weights"
            )


@dataclass(frozen=True)
class CoalitionSpec:
    """Coalition table; players may belong to several coalitions, and
    singleton coalitions with unit weight reproduce the per-player game."""

    coalitions: tuple[Coalition, ...]

    def __post_init__(self):
        if len(self.coalitions) == 0:
            raise DimensionMismatch("need at least one coalition")


def coalition_control(
    spec: CoalitionSpec, pure_controls: Sequence[np.ndarray], jet: Jet
) -> list[np.ndarray]:
    """Per-coalition interactive controls v_i from the members' pure controls."""
    out = []
    for c in spec.coalitions:
        for m in c.members:
            if m < 0 or m >= len(pure_controls):
                raise DimensionMismatch(f"coalition member {m} has no pure control")
        v = sum(
            w * np.asarray(pure_controls[m], dtype=float)
            for m, w in zip(c.members, c.weights)
        )
        if c.jet_feedback is not None:
            v = v + np.asarray(c.jet_feedback(jet), dtype=float)
        out.append(np.asarray(v, dtype=float))
    return out


# ---------------------------------------------------------------------------
# Indeterminate-game invariants


@dataclass(frozen=True)
class InvariantSpec:
    """Named scalar functions of (u, u0, jet) declared time-independent."""

    functions: tuple[tuple[str, Callable[[list[np.ndarray], list[np.ndarray], Jet], float]], ...]


def check_invariants(traj: Trajectory, invariants: InvariantSpec) -> dict[str, float]:
    """Max drift |F(t) - F(t_first)| of each declared invariant.

    Evaluation starts at the first tick whose jet stencil is filled; the
    caller compares drifts against its own tolerance.
    """
    start = min(traj.warmup, traj.n_ticks - 1)
    drifts: dict[str, float] = {}
    for name, fn in invariants.functions:
        ref = None
        worst = 0.0
        for j in range(start, traj.n_ticks):
            u = [traj.u[i][j] for i in range(traj.n_players)]
            u0 = [traj.u0[i][j] for i in range(traj.n_players)]
            try:
                val = float(fn(u, u0, traj.jet_at(j)))
            except Exception as exc:  # noqa: BLE001 - reported with tick index
                raise EvaluationFailure(name, j, exc) from exc
            if ref is None:
                ref = val
            else:
                worst = max(worst, abs(val - ref))
        drifts[name] = worst
    return drifts
