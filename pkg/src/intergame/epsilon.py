"""Feedback identification through declared parameter representations.

A representation writes a player's realized control as a known function of
the pure control, the state jet and the intention field, with all unknowns
collapsed into a parameter vector eps.  Inverting it tick by tick turns a
trajectory into an eps trace; relations that hold identically across several
simultaneous traces are mined as unit-norm null-space directions; and a cell
decomposition of eps-space turns the trace into a partition whose boundary
times are the cell-transition moments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import Jet, Trajectory
from .errors import DimensionMismatch, UnderDetermined

# Basis builder for affine representations: (u0, phi, xi, jet) -> (du, d_eps).
BasisFn = Callable[[np.ndarray, np.ndarray, np.ndarray, Jet], np.ndarray]
# General representation: (u0, phi, xi, jet, eps) -> u.
ApplyFn = Callable[[np.ndarray, np.ndarray, np.ndarray, Jet, np.ndarray], np.ndarray]


@dataclass
class EpsilonRepresentation:
    """Declared known map (u0, jet; eps) -> u for one player's coupling.

    structure "affine" promises u - u0 = B(u0, phi, xi, jet) @ eps exactly,
    which buys closed-form minimal-norm inversion.  structure "general"
    supplies an arbitrary apply function and is inverted numerically.
    """

    d_eps: int
    structure: str = "affine"
    basis_fn: BasisFn | None = None
    apply_fn: ApplyFn | None = None

    def __post_init__(self):
        if self.d_eps < 1:
            raise DimensionMismatch("d_eps must be at least 1")
        if self.structure == "affine":
            if self.basis_fn is None:
                raise DimensionMismatch("affine representation needs a basis function")
        elif self.structure == "general":
            if self.apply_fn is None:
                raise DimensionMismatch("general representation needs an apply function")
        else:
            raise DimensionMismatch(f"unknown representation structure {self.structure!r}")

    def basis(self, u0, phi, xi, jet) -> np.ndarray:
        B = np.asarray(self.basis_fn(u0, phi, xi, jet), dtype=float)
        if B.ndim != 2 or B.shape[1] != self.d_eps:
            raise DimensionMismatch(
                f"basis must be (du, {self.d_eps}), got {B.shape}"
            )
        return B

    def apply(self, u0, phi, xi, jet, eps) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        if eps.shape != (self.d_eps,):
            raise DimensionMismatch(f"eps must have shape ({self.d_eps},), got {eps.shape}")
        u0 = np.asarray(u0, dtype=float)
        if self.structure == "affine":
            return u0 + self.basis(u0, phi, xi, jet) @ eps
        return np.asarray(self.apply_fn(u0, phi, xi, jet, eps), dtype=float)

    def as_feedback(self, eps_of_t: Callable[[float], np.ndarray]):
        """Coupling map driven by a planted eps schedule (synthetic play)."""

        def fb(t, u0, phi, xi, jet):
            return self.apply(u0, phi, xi, jet, np.asarray(eps_of_t(t), dtype=float))

        return fb


def apply_representation(rep: EpsilonRepresentation, u0, jet: Jet, eps, xi=None) -> np.ndarray:
    """Evaluate the declared map at one sample."""
    xi = np.zeros(0) if xi is None else np.asarray(xi, dtype=float)
    return rep.apply(u0, jet.phi, xi, jet, eps)


@dataclass
class EpsilonEstimate:
    value: np.ndarray
    residual: float
    budget_exhausted: bool = False


def _coordinate_descent(f, x0: np.ndarray, budget: int) -> tuple[np.ndarray, float, bool]:
    """Derivative-free minimization with a hard evaluation budget.

    Cycles coordinates with an expanding/shrinking step; stops early when the
    step underflows or the residual is numerically zero.
    """
    x = x0.copy()
    best = f(x)
    evals = 1
    step = 0.5
    while evals < budget and step > 1e-12 and best > 1e-14:
        improved = False
        for k in range(x.size):
            for sgn in (1.0, -1.0):
                if evals >= budget:
                    break
                trial = x.copy()
                trial[k] += sgn * step
                val = f(trial)
                evals += 1
                if val < best:
                    x, best = trial, val
                    improved = True
                    break
        if not improved:
            step *= 0.5
    exhausted = evals >= budget and best > 1e-14 and step > 1e-12
    return x, best, exhausted


def estimate_epsilon(
    rep: EpsilonRepresentation,
    u_observed,
    u0,
    jet: Jet,
    xi=None,
    budget: int = 200,
) -> EpsilonEstimate:
    """Invert the representation at one sample.

    Affine representations get the minimal-norm least-squares solution of
    B eps = u - u0; general ones get a bounded-budget residual minimization
    from a zero initial guess.  A blown budget flags the sample but still
    returns the best eps found.
    """
    u_obs = np.asarray(u_observed, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    xi = np.zeros(0) if xi is None else np.asarray(xi, dtype=float)
    if not (np.all(np.isfinite(u_obs)) and np.all(np.isfinite(u0))):
        raise DimensionMismatch("non-finite control sample")
    if u_obs.shape != u0.shape:
        raise DimensionMismatch(
            f"observed {u_obs.shape} and pure {u0.shape} control shapes differ"
        )
    phi = jet.phi
    if rep.structure == "affine":
        B = rep.basis(u0, phi, xi, jet)
        if B.shape[0] != u_obs.shape[0]:
            raise DimensionMismatch(
                f"basis rows {B.shape[0]} do not match control dimension {u_obs.shape[0]}"
            )
        eps, *_ = np.linalg.lstsq(B, u_obs - u0, rcond=None)
        residual = float(np.linalg.norm(u_obs - u0 - B @ eps))
        return EpsilonEstimate(eps, residual)

    def f(eps):
        return float(np.linalg.norm(u_obs - rep.apply(u0, phi, xi, jet, eps)))

    eps, residual, exhausted = _coordinate_descent(f, np.zeros(rep.d_eps), budget)
    return EpsilonEstimate(eps, residual, exhausted)


@dataclass
class EpsilonTrace:
    """Tick-sampled eps estimates on the trajectory grid.

    Warm-up ticks (jet stencil unfilled) carry NaN values and valid=False
    rather than extrapolated estimates.
    """

    values: np.ndarray  # (n_ticks, d_eps), NaN where invalid
    residual: np.ndarray  # (n_ticks,), NaN where invalid
    valid: np.ndarray  # (n_ticks,) bool
    dt: float
    t0: float = 0.0
    flagged: np.ndarray | None = None  # budget-exhausted samples, general case

    @property
    def n_ticks(self) -> int:
        return self.values.shape[0]

    @property
    def d_eps(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_ticks) * self.dt

    def valid_values(self) -> np.ndarray:
        return self.values[self.valid]

    def first_valid(self) -> int:
        idx = np.flatnonzero(self.valid)
        if idx.size == 0:
            raise DimensionMismatch("trace has no valid ticks")
        return int(idx[0])


def epsilon_trace(
    traj: Trajectory,
    rep: EpsilonRepresentation,
    player: int = 0,
    budget: int = 200,
) -> EpsilonTrace:
    """Invert one player's coupling at every post-warm-up tick."""
    if player < 0 or player >= traj.n_players:
        raise DimensionMismatch(f"trajectory has no player {player}")
    n = traj.n_ticks
    values = np.full((n, rep.d_eps), np.nan)
    residual = np.full(n, np.nan)
    valid = np.zeros(n, dtype=bool)
    flagged = np.zeros(n, dtype=bool)
    for j in range(n):
        jet = traj.jet_at(j)
        if not jet.valid:
            continue
        try:
            est = estimate_epsilon(
                rep, traj.u[player][j], traj.u0[player][j], jet, xi=traj.xi[j], budget=budget
            )
        except DimensionMismatch as exc:
            raise DimensionMismatch(f"tick {j}: {exc}") from exc
        values[j] = est.value
        residual[j] = est.residual
        valid[j] = True
        flagged[j] = est.budget_exhausted
    return EpsilonTrace(values, residual, valid, traj.dt, traj.t0, flagged)


def stack_traces(traces: Sequence[EpsilonTrace]) -> EpsilonTrace:
    """Concatenate simultaneous traces into one session-level trace.

    A tick is valid only where every input trace is; the stacked residual is
    the Euclidean norm of the per-trace residuals.
    """
    if not traces:
        raise DimensionMismatch("need at least one trace")
    n = traces[0].n_ticks
    for tr in traces:
        if tr.n_ticks != n or tr.dt != traces[0].dt:
            raise DimensionMismatch("traces must share one tick grid")
    valid = np.logical_and.reduce([tr.valid for tr in traces])
    values = np.concatenate([tr.values for tr in traces], axis=1)
    residual = np.sqrt(sum(np.where(tr.valid, tr.residual, np.nan) ** 2 for tr in traces))
    values[~valid] = np.nan
    residual[~valid] = np.nan
    return EpsilonTrace(values, residual, valid, traces[0].dt, traces[0].t0)


# ---------------------------------------------------------------------------
# Correlation integrals


@dataclass(frozen=True)
class Monomial:
    """Product of named per-tick channels raised to integer powers.

    Channel grammar: "eps{a}[c]" (trace a, component c), "phi[c]",
    "dphi{m}[c]", "xi[c]", "u0{i}[c]", and "1" for the constant term.
    """

    factors: tuple[tuple[str, int], ...]

    @property
    def name(self) -> str:
        if not self.factors:
            return "1"
        return "*".join(ch if p == 1 else f"{ch}^{p}" for ch, p in self.factors)


def monomial(*factors) -> Monomial:
    """Convenience constructor: monomial("eps0[0]", ("phi[0]", 2))."""
    norm = []
    for f in factors:
        if isinstance(f, str):
            norm.append((f, 1))
        else:
            norm.append((str(f[0]), int(f[1])))
    return Monomial(tuple(norm))


def _channel_value(
    channel: str,
    j: int,
    traces: Sequence[EpsilonTrace],
    traj: Trajectory | None,
) -> float:
    if channel == "1":
        return 1.0
    name, _, idx = channel.partition("[")
    comp = int(idx.rstrip("]")) if idx else 0
    if name.startswith("eps"):
        a = int(name[3:] or 0)
        return float(traces[a].values[j, comp])
    if traj is None:
        raise DimensionMismatch(f"channel {channel!r} needs trajectory context")
    if name == "phi":
        return float(traj.phi[j, comp])
    if name == "xi":
        return float(traj.xi[j, comp])
    if name.startswith("dphi"):
        m = int(name[4:] or 1)
        return float(traj.jet_at(j).derivative(m)[comp])
    if name.startswith("u0"):
        i = int(name[2:] or 0)
        return float(traj.u0[i][j, comp])
    raise DimensionMismatch(f"unknown channel {channel!r}")


@dataclass
class CorrelationIntegral:
    """One relation that vanishes identically along the play.

    coefficients is unit-norm over the declared monomial basis; residual_rms
    is measured on the full trajectory.
    """

    basis: tuple[str, ...]
    coefficients: np.ndarray
    residual_rms: float


def find_correlation_integrals(
    traces: Sequence[EpsilonTrace],
    basis: Sequence[Monomial],
    tolerance: float = 1e-6,
    traj: Trajectory | None = None,
) -> list[CorrelationIntegral]:
    """Unit-norm null directions of the basis sample matrix, by residual.

    Needs at least as many common valid ticks as basis functions; relations
    are reported only when their residual RMS over the whole trace is within
    tolerance, ordered best first.  Sign is fixed by making the first nonzero
    coefficient positive.
    """
    if not basis:
        raise DimensionMismatch("empty monomial basis")
    if not traces:
        raise DimensionMismatch("need at least one trace")
    valid = np.logical_and.reduce([tr.valid for tr in traces])
    ticks = np.flatnonzero(valid)
    if ticks.size < len(basis):
        raise UnderDetermined(
            f"{ticks.size} samples cannot determine relations over {len(basis)} basis functions"
        )
    M = np.empty((ticks.size, len(basis)))
    for r, j in enumerate(ticks):
        for c, mono in enumerate(basis):
            val = 1.0
            for channel, power in mono.factors:
                val *= _channel_value(channel, int(j), traces, traj) ** power
            M[r, c] = val
    _, sing, vt = np.linalg.svd(M, full_matrices=True)
    out = []
    sqrt_n = np.sqrt(ticks.size)
    for k in range(len(basis)):
        rms = float(sing[k] / sqrt_n) if k < sing.size else 0.0
        if rms <= tolerance:
            vec = vt[k].copy()
            nz = np.flatnonzero(np.abs(vec) > 1e-12)
            if nz.size and vec[nz[0]] < 0:
                vec = -vec
            out.append(
                CorrelationIntegral(
                    basis=tuple(m.name for m in basis),
                    coefficients=vec,
                    residual_rms=rms,
                )
            )
    out.sort(key=lambda ci: ci.residual_rms)
    return out


# ---------------------------------------------------------------------------
# Cell decomposition of eps-space and the a-posteriori partition


@dataclass(frozen=True)
class CellComplex:
    """Axis-aligned uniform box decomposition of the admissible eps region.

    The hysteresis margin is a fraction of the cell width per axis: the
    current cell is left only when a sample exits the cell box inflated by
    margin * width, which suppresses chattering at boundaries.
    """

    lo: np.ndarray
    hi: np.ndarray
    counts: tuple[int, ...]
    margin: float = 0.05

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        counts = tuple(int(c) for c in self.counts)
        if lo.shape != hi.shape or lo.ndim != 1 or len(counts) != lo.size:
            raise DimensionMismatch("lo, hi and counts must agree in dimension")
        if np.any(hi <= lo):
            raise DimensionMismatch("box upper bounds must exceed lower bounds")
        if any(c < 1 for c in counts):
            raise DimensionMismatch("cell counts must be at least 1")
        if not 0 <= self.margin < 0.5:
            raise DimensionMismatch("hysteresis margin must lie in [0, 0.5)")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "counts", counts)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def widths(self) -> np.ndarray:
        return (self.hi - self.lo) / np.array(self.counts, dtype=float)

    def cell_of(self, eps) -> tuple[tuple[int, ...], bool]:
        """Cell multi-index of a point; out-of-box points clamp (flagged)."""
        x = np.asarray(eps, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"point has shape {x.shape}, complex is {self.dim}-d")
        raw = np.floor((x - self.lo) / self.widths).astype(int)
        clamped = np.clip(raw, 0, np.array(self.counts) - 1)
        out_of_box = bool(np.any(x < self.lo) or np.any(x >= self.hi))
        return tuple(int(c) for c in clamped), out_of_box

    def box(self, cell: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(cell, dtype=float)
        w = self.widths
        return self.lo + idx * w, self.lo + (idx + 1) * w

    def exits(self, cell: tuple[int, ...], eps) -> bool:
        """True when eps lies outside the cell box inflated by the margin."""
        lo, hi = self.box(cell)
        pad = self.margin * self.widths
        x = np.asarray(eps, dtype=float)
        return bool(np.any(x < lo - pad) or np.any(x > hi + pad))

    def flat_index(self, cell: tuple[int, ...]) -> int:
        return int(np.ravel_multi_index(cell, self.counts))


@dataclass
class Partition:
    """A-posteriori segmentation of a trace into cell-occupancy intervals.

    times[0] is the trace start; each later time is a detected transition
    moment, and consecutive intervals occupy different cells.
    """

    times: np.ndarray
    ticks: np.ndarray
    cells: list[tuple[int, ...]]
    clamped_ticks: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def n_intervals(self) -> int:
        return len(self.cells)

    def boundaries(self) -> np.ndarray:
        """Transition times, excluding the trace start."""
        return self.times[1:]


def detect_cell_transitions(trace: EpsilonTrace, complex_: CellComplex) -> Partition:
    """Partition a trace at the moments its eps estimate changes cell.

    The occupied cell changes only when the estimate exits the current cell's
    hysteresis box; the boundary time is the first tick inside the new cell.
    """
    if trace.n_ticks == 0 or not np.any(trace.valid):
        raise DimensionMismatch("cannot partition an empty trace")
    if trace.d_eps != complex_.dim:
        raise DimensionMismatch(
            f"trace is {trace.d_eps}-d but the complex is {complex_.dim}-d"
        )
    start = trace.first_valid()
    times = [trace.t0 + start * trace.dt]
    ticks = [start]
    clamped = []
    cell, oob = complex_.cell_of(trace.values[start])
    if oob:
        clamped.append(start)
    cells = [cell]
    for j in range(start + 1, trace.n_ticks):
        if not trace.valid[j]:
            continue
        x = trace.values[j]
        here, oob = complex_.cell_of(x)
        if oob:
            clamped.append(j)
        if complex_.exits(cells[-1], x):
            cells.append(here)
            ticks.append(j)
            times.append(trace.t0 + j * trace.dt)
    return Partition(
        times=np.asarray(times),
        ticks=np.asarray(ticks, dtype=int),
        cells=cells,
        clamped_ticks=np.asarray(clamped, dtype=int),
    )
