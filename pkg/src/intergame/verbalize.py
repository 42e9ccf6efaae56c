"""Interpretation of continuous play as a discrete dialogue.

Each partition interval becomes a window; window functionals compress the
eps estimates and state into a dialogue state (omega_n from the eps/state
channels, v_n from the pure-control/state channels); and an affine recursion
omega_n = A omega_{n-1} + B v_n + C mean(phi) + d is fitted across steps.
The session is labelled verbalizable when the fit explains the omega
sequence almost exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import Trajectory
from .epsilon import EpsilonTrace, Partition
from .errors import DimensionMismatch, UnderDetermined, WindowTooShort

OMEGA_CHANNELS = ("eps", "phi")
V_CHANNELS = ("u0", "phi")
FUNCTIONAL_KINDS = ("window-mean", "trapezoid-integral", "endpoint-delta", "window-variance")


@dataclass(frozen=True)
class FunctionalSpec:
    """Built-in window functionals per channel.

    Each entry is (channel, kind); omega entries read the eps/phi channels,
    v entries read the u0/phi channels.  Kinds come from the fixed menu only.
    """

    omega: tuple[tuple[str, str], ...]
    v: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.omega or not self.v:
            raise DimensionMismatch("functional spec must declare omega and v entries")
        for ch, kind in self.omega:
            if ch not in OMEGA_CHANNELS:
                raise DimensionMismatch(f"omega channel {ch!r} not in {OMEGA_CHANNELS}")
            if kind not in FUNCTIONAL_KINDS:
                raise DimensionMismatch(f"unknown functional {kind!r}")
        for ch, kind in self.v:
            if ch not in V_CHANNELS:
                raise DimensionMismatch(f"v channel {ch!r} not in {V_CHANNELS}")
            if kind not in FUNCTIONAL_KINDS:
                raise DimensionMismatch(f"unknown functional {kind!r}")


@dataclass
class Window:
    """Contiguous tick range [start_tick, end_tick] of one partition interval."""

    start_tick: int
    end_tick: int
    dt: float
    phi: np.ndarray  # (m, d_phi)
    u0: np.ndarray  # (m, sum du), players stacked
    u: np.ndarray
    eps: np.ndarray | None = None  # (m, d_eps)
    cell: tuple[int, ...] | None = None
    t0: float = 0.0

    def __post_init__(self):
        m = self.end_tick - self.start_tick + 1
        if m < 1:
            raise DimensionMismatch("window must contain at least one tick")
        for name in ("phi", "u0", "u"):
            arr = getattr(self, name)
            if arr.shape[0] != m:
                raise DimensionMismatch(f"window {name} has {arr.shape[0]} rows, expected {m}")

    @property
    def n_ticks(self) -> int:
        return self.end_tick - self.start_tick + 1

    @property
    def t_start(self) -> float:
        return self.t0 + self.start_tick * self.dt

    @property
    def t_end(self) -> float:
        return self.t0 + self.end_tick * self.dt

    def channel(self, name: str) -> np.ndarray:
        if name == "phi":
            return self.phi
        if name == "u0":
            return self.u0
        if name == "eps":
            if self.eps is None:
                raise DimensionMismatch("window carries no eps samples")
            return self.eps
        raise DimensionMismatch(f"unknown window channel {name!r}")


@dataclass
class DialogueState:
    """One dialogue step: window functionals of the understanding (omega)
    and of the speech-producing controls (v)."""

    index: int
    omega: np.ndarray
    v: np.ndarray
    cell: tuple[int, ...] | None = None


def _window_eps(trace: EpsilonTrace | None, a: int, b: int) -> np.ndarray | None:
    if trace is None:
        return None
    block = trace.values[a : b + 1]
    keep = ~np.isnan(block).any(axis=1)
    # warm-up ticks carry no estimate; functionals see valid rows only
    if not keep.any():
        return None
    return block[keep]


def windows_from_boundaries(
    traj: Trajectory,
    start_ticks: Sequence[int],
    trace: EpsilonTrace | None = None,
    cells: Sequence[tuple[int, ...]] | None = None,
) -> list[Window]:
    """Cut the trajectory into windows starting at the given ticks.

    Consecutive windows share their boundary tick, matching the closed
    intervals the functionals integrate over; the last window runs to the
    trajectory end.
    """
    if not start_ticks:
        raise DimensionMismatch("need at least one window start")
    ticks = [int(j) for j in start_ticks] + [traj.n_ticks - 1]
    u0_all = np.concatenate(traj.u0, axis=1)
    u_all = np.concatenate(traj.u, axis=1)
    out = []
    for n in range(len(start_ticks)):
        a, b = ticks[n], ticks[n + 1]
        if b < a:
            raise DimensionMismatch("window boundary beyond trajectory end")
        out.append(
            Window(
                start_tick=a,
                end_tick=b,
                dt=traj.dt,
                phi=traj.phi[a : b + 1],
                u0=u0_all[a : b + 1],
                u=u_all[a : b + 1],
                eps=_window_eps(trace, a, b),
                cell=None if cells is None else cells[n],
                t0=traj.t0,
            )
        )
    return out


def windows_from_partition(
    traj: Trajectory,
    partition: Partition,
    trace: EpsilonTrace | None = None,
) -> list[Window]:
    """Cut the trajectory into windows along the partition intervals."""
    return windows_from_boundaries(traj, list(partition.ticks), trace, partition.cells)


def _functional(kind: str, samples: np.ndarray, dt: float) -> np.ndarray:
    if kind == "window-mean":
        return samples.mean(axis=0)
    if samples.shape[0] < 2:
        raise WindowTooShort(f"{kind} needs at least 2 ticks, window has {samples.shape[0]}")
    if kind == "trapezoid-integral":
        return np.trapezoid(samples, dx=dt, axis=0)
    if kind == "endpoint-delta":
        return samples[-1] - samples[0]
    if kind == "window-variance":
        return samples.var(axis=0)
    raise DimensionMismatch(f"unknown functional {kind!r}")


def compute_window_functionals(
    window: Window, spec: FunctionalSpec, index: int = 0
) -> DialogueState:
    """Evaluate the declared functionals over one window."""
    omega = np.concatenate(
        [_functional(kind, window.channel(ch), window.dt) for ch, kind in spec.omega]
    )
    v = np.concatenate(
        [_functional(kind, window.channel(ch), window.dt) for ch, kind in spec.v]
    )
    return DialogueState(index=index, omega=omega, v=v, cell=window.cell)


def dialogue_states(
    windows: Sequence[Window], spec: FunctionalSpec
) -> list[DialogueState]:
    return [compute_window_functionals(w, spec, index=n) for n, w in enumerate(windows)]


# ---------------------------------------------------------------------------
# The dialogue recursion


@dataclass
class RecursionModel:
    """Affine step map omega_n = A omega_{n-1} + B v_n + C phibar_n + d.

    residuals holds the per-step prediction error norm; nrmse is the step
    RMSE normalized by the centered omega scale (zero when the fit is exact).
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    intercept: np.ndarray
    residuals: np.ndarray
    nrmse: float

    def predict(self, omega_prev, v, phi_mean) -> np.ndarray:
        return (
            self.a @ np.asarray(omega_prev, dtype=float)
            + self.b @ np.asarray(v, dtype=float)
            + self.c @ np.asarray(phi_mean, dtype=float)
            + self.intercept
        )


def _phi_means(windows: Sequence[Window]) -> np.ndarray:
    return np.stack([w.phi.mean(axis=0) for w in windows])


def fit_recursion(
    states: Sequence[DialogueState], windows: Sequence[Window]
) -> RecursionModel:
    """Least-squares fit of the affine dialogue recursion.

    Needs max(3, regressor count) steps; raises UnderDetermined with the
    required count otherwise.  The fit is deterministic.
    """
    if len(states) != len(windows):
        raise DimensionMismatch("states and windows must align")
    if len(states) < 2:
        raise UnderDetermined("need at least 2 dialogue states to form one step")
    d_omega = states[0].omega.size
    d_v = states[0].v.size
    for s in states:
        if s.omega.size != d_omega or s.v.size != d_v:
            raise DimensionMismatch("dialogue state dimensions vary across the session")
    phibar = _phi_means(windows)
    d_phi = phibar.shape[1]
    steps = len(states) - 1
    n_cols = d_omega + d_v + d_phi + 1
    required = max(3, n_cols)
    if steps < required:
        raise UnderDetermined(
            f"recursion fit needs at least {required} steps ({required + 1} states), got {steps}"
        )
    X = np.empty((steps, n_cols))
    Y = np.empty((steps, d_omega))
    for n in range(1, len(states)):
        X[n - 1] = np.concatenate(
            [states[n - 1].omega, states[n].v, phibar[n], [1.0]]
        )
        Y[n - 1] = states[n].omega
    theta, *_ = np.linalg.lstsq(X, Y, rcond=None)
    pred = X @ theta
    residuals = np.linalg.norm(Y - pred, axis=1)
    rmse = float(np.sqrt(np.mean(residuals**2)))
    scale = float(np.sqrt(np.mean(np.sum((Y - Y.mean(axis=0)) ** 2, axis=1))))
    nrmse = 0.0 if rmse < 1e-15 else rmse / max(scale, 1e-15)
    theta = theta.T  # (d_omega, n_cols)
    return RecursionModel(
        a=theta[:, :d_omega],
        b=theta[:, d_omega : d_omega + d_v],
        c=theta[:, d_omega + d_v : d_omega + d_v + d_phi],
        intercept=theta[:, -1],
        residuals=residuals,
        nrmse=nrmse,
    )


def verbalizability_score(model: RecursionModel) -> float:
    """1 - nrmse clamped to [0, 1]; at least 0.99 labels a session verbalizable."""
    return float(np.clip(1.0 - model.nrmse, 0.0, 1.0))


VERBALIZABLE_THRESHOLD = 0.99


# ---------------------------------------------------------------------------
# Transcripts


@dataclass(eq=False)
class Utterance:
    """One typed utterance: the dialogue state spoken over an interval."""

    index: int
    t_start: float
    t_end: float
    cell: tuple[int, ...] | None
    omega: np.ndarray
    v: np.ndarray

    def to_dict(self) -> dict:
        return {
            "n": self.index,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "cell": None if self.cell is None else list(self.cell),
            "omega": self.omega.tolist(),
            "v": self.v.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Utterance":
        return cls(
            index=int(d["n"]),
            t_start=float(d["t_start"]),
            t_end=float(d["t_end"]),
            cell=None if d.get("cell") is None else tuple(int(c) for c in d["cell"]),
            omega=np.asarray(d["omega"], dtype=float),
            v=np.asarray(d["v"], dtype=float),
        )

    def equals(self, other: "Utterance") -> bool:
        return (
            self.index == other.index
            and self.t_start == other.t_start
            and self.t_end == other.t_end
            and self.cell == other.cell
            and np.array_equal(self.omega, other.omega)
            and np.array_equal(self.v, other.v)
        )


@dataclass(eq=False)
class Transcript:
    """Time-ordered utterance list mirroring the partition intervals."""

    utterances: list[Utterance]

    def __len__(self) -> int:
        return len(self.utterances)

    def to_jsonl(self) -> str:
        return "\n".join(
            json.dumps(u.to_dict(), sort_keys=True, separators=(",", ":"))
            for u in self.utterances
        )

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        return cls([Utterance.from_dict(json.loads(ln)) for ln in lines])

    def equals(self, other: "Transcript") -> bool:
        return len(self) == len(other) and all(
            a.equals(b) for a, b in zip(self.utterances, other.utterances)
        )


def transcript(
    partition_windows: Sequence[Window], states: Sequence[DialogueState]
) -> Transcript:
    """One utterance per interval, in time order."""
    if len(partition_windows) != len(states):
        raise DimensionMismatch(
            f"{len(partition_windows)} windows but {len(states)} dialogue states"
        )
    utterances = [
        Utterance(
            index=n,
            t_start=w.t_start,
            t_end=w.t_end,
            cell=s.cell,
            omega=s.omega.copy(),
            v=s.v.copy(),
        )
        for n, (w, s) in enumerate(zip(partition_windows, states))
    ]
    return Transcript(utterances)
