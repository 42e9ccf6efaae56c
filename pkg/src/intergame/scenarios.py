"""Concrete runnable scenarios and their declarative JSON form.

A ScenarioSpec is a plain-data document (schema version 1) that round-trips
losslessly through JSON; compile() resolves every declared kind through the
registries below into the runtime objects the engine consumes.  Ground-truth
metadata for desk checks lives under the reserved "ground_truth" key, which
the engine never reads.

Schema v1 layout (all arrays are JSON lists):

    {
      "schema": 1, "name": str,
      "n_players": int, "d_phi": int, "d_xi": int,
      "control_dims": [int, ...], "jet_order": int,
      "dt": float, "horizon": float, "seed": int,
      "phi0": [...], "xi0": [...],
      "phi_dynamics": {"kind": ...}, "xi_dynamics": {"kind": ...} | null,
      "nominal": [policy decl per player],
      "wiring": "intent" | "behavior",
      "feedback": [coupling decl per player],
      "behavior": [script decl | null per player] | null,
      "representation": [repr decl | null per player] | null,
      "kernel": [kernel decl | null per player] | null,
      "noise_std": [float per player],
      "cells": {"lo": [...], "hi": [...], "counts": [...], "margin": float} | null,
      "functionals": {"omega": [[channel, kind], ...], "v": [[channel, kind], ...]},
      "stop": {"f0": float, "base": str, "params": {...},
               "omega_weights": [...] | null, "recalibration": {...} | null} | null,
      "figure": {"target_cells": [[...]], "dwell": float,
                 "min_observers": int, "view_angle_step": float} | null,
      "coalitions": {"coalitions": [{"members": [...], "weights": [...]}]} | null,
      "ground_truth": {...}
    }
"""

from __future__ import annotations

import bisect
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .engine import (
    Coalition,
    CoalitionSpec,
    DynamicsSpec,
    FeedbackMap,
    MemoryKernel,
    Policy,
    identity_feedback,
    reduce_memory_feedback,
)
from .epsilon import CellComplex, EpsilonRepresentation
from .errors import DimensionMismatch, SchemaError
from .perception import FigureConfig, RecalibrationMap, StopCriterion
from .verbalize import FunctionalSpec

SCHEMA_VERSION = 1

_T_SLACK = 1e-12  # schedule switches land on exact tick times


# ---------------------------------------------------------------------------
# Declarative spec


@dataclass
class ScenarioSpec:
    """Plain-data description of one runnable scenario (see module docstring)."""

    name: str
    n_players: int
    d_phi: int
    d_xi: int
    control_dims: list[int]
    dt: float
    horizon: float
    seed: int
    phi0: list[float]
    xi0: list[float]
    phi_dynamics: dict
    xi_dynamics: dict | None
    nominal: list[dict]
    feedback: list[dict]
    functionals: dict
    wiring: str = "intent"
    behavior: list[dict | None] | None = None
    representation: list[dict | None] | None = None
    kernel: list[dict | None] | None = None
    noise_std: list[float] = field(default_factory=list)
    jet_order: int = 1
    cells: dict | None = None
    stop: dict | None = None
    figure: dict | None = None
    coalitions: dict | None = None
    ground_truth: dict = field(default_factory=dict)
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema != SCHEMA_VERSION:
            raise SchemaError(f"unsupported scenario schema {self.schema}")
        if self.wiring not in ("intent", "behavior"):
            raise SchemaError(f"unknown wiring {self.wiring!r}")
        if not self.noise_std:
            self.noise_std = [0.0] * self.n_players
        for name in ("nominal", "feedback"):
            if len(getattr(self, name)) != self.n_players:
                raise SchemaError(f"{name} must declare one entry per player")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        try:
            return cls(**d)
        except TypeError as exc:
            raise SchemaError(f"bad scenario document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        return cls.from_dict(json.loads(text))

    def compile(self) -> "CompiledScenario":
        return compile_scenario(self)


def load_scenario(source) -> ScenarioSpec:
    """Load a scenario from a dict, JSON text, or a file path."""
    if isinstance(source, ScenarioSpec):
        return source
    if isinstance(source, dict):
        return ScenarioSpec.from_dict(source)
    text = str(source)
    if text.lstrip().startswith("{"):
        return ScenarioSpec.from_json(text)
    return ScenarioSpec.from_json(Path(text).read_text())


# ---------------------------------------------------------------------------
# Registries


def _mat(value, shape, name) -> np.ndarray:
    m = np.asarray(value, dtype=float)
    if m.shape != shape:
        raise SchemaError(f"{name} must have shape {shape}, got {m.shape}")
    return m


def _build_phi_rhs(decl: dict, spec: ScenarioSpec):
    kind = decl.get("kind", "zero")
    d = spec.d_phi
    if kind == "zero":
        zero = np.zeros(d)
        return lambda phi, u: zero
    if kind == "linear":
        a = _mat(decl.get("a", np.zeros((d, d))), (d, d), "phi a")
        bs = [
            _mat(b, (d, du), f"phi b[{i}]")
            for i, (b, du) in enumerate(zip(decl.get("b", []), spec.control_dims))
        ]
        bias = _mat(decl.get("bias", np.zeros(d)), (d,), "phi bias")

        def rhs(phi, u):
            out = a @ phi + bias
            for b, ui in zip(bs, u):
                out = out + b @ ui
            return out

        return rhs
    raise SchemaError(f"unknown phi dynamics kind {kind!r}")


def _build_xi_rhs(decl: dict | None, spec: ScenarioSpec):
    if decl is None or spec.d_xi == 0:
        return None
    kind = decl.get("kind", "zero")
    dx, dp = spec.d_xi, spec.d_phi
    if kind == "zero":
        zero = np.zeros(dx)
        return lambda xi, phi, pure, realized: zero
    if kind == "linear":
        a = _mat(decl.get("a", np.zeros((dx, dx))), (dx, dx), "xi a")
        c = _mat(decl.get("c", np.zeros((dx, dp))), (dx, dp), "xi c")
        bs = [
            _mat(b, (dx, du), f"xi b[{i}]")
            for i, (b, du) in enumerate(zip(decl.get("b", []), spec.control_dims))
        ]
        bias = _mat(decl.get("bias", np.zeros(dx)), (dx,), "xi bias")
        channel = decl.get("controls", "realized")
        if channel not in ("realized", "pure"):
            raise SchemaError(f"unknown xi control channel {channel!r}")

        def rhs(xi, phi, pure, realized):
            u = realized if channel == "realized" else pure
            out = a @ xi + c @ phi + bias
            for b, ui in zip(bs, u):
                out = out + b @ ui
            return out

        return rhs
    raise SchemaError(f"unknown xi dynamics kind {kind!r}")


def _build_policy(decl: dict, du: int) -> Policy:
    kind = decl.get("kind", "zero")
    if kind == "zero":
        zero = np.zeros(du)
        return lambda t, j, phi, xi, jet, rng: zero
    if kind == "constant":
        v = _mat(decl["value"], (du,), "constant policy value")
        return lambda t, j, phi, xi, jet, rng: v
    if kind == "proportional":
        gain = float(decl.get("gain", 1.0))
        target = np.asarray(decl.get("target", np.zeros(du)), dtype=float)
        return lambda t, j, phi, xi, jet, rng: gain * (target - phi[:du])
    if kind == "sinusoid":
        amp = _mat(decl.get("amp", np.ones(du)), (du,), "sinusoid amp")
        freq = _mat(decl.get("freq", np.ones(du)), (du,), "sinusoid freq")
        phase = _mat(decl.get("phase", np.zeros(du)), (du,), "sinusoid phase")
        return lambda t, j, phi, xi, jet, rng: amp * np.sin(freq * t + phase)
    raise SchemaError(f"unknown policy kind {kind!r}")


# Basis columns shared by representations and planted couplings.


def _column(name: str, du: int):
    if name == "phi":
        def col(u0, phi, xi, jet):
            if phi.size != du:
                raise DimensionMismatch("column 'phi' needs du == d_phi")
            return phi
    elif name == "rot90_phi":
        def col(u0, phi, xi, jet):
            if phi.size != 2 or du != 2:
                raise DimensionMismatch("column 'rot90_phi' needs 2-d phi and control")
            return np.array([-phi[1], phi[0]])
    elif name == "dphi1":
        def col(u0, phi, xi, jet):
            return jet.derivative(1)[:du]
    elif name == "xi":
        def col(u0, phi, xi, jet):
            if xi.size != du:
                raise DimensionMismatch("column 'xi' needs du == d_xi")
            return xi
    elif name == "ones":
        ones = np.ones(du)

        def col(u0, phi, xi, jet):
            return ones
    elif name == "u0":
        def col(u0, phi, xi, jet):
            return u0
    else:
        raise SchemaError(f"unknown basis column {name!r}")
    return col


def _basis_fn(columns: list[str], du: int):
    cols = [_column(c, du) for c in columns]

    def basis(u0, phi, xi, jet):
        return np.column_stack([c(u0, phi, xi, jet) for c in cols])

    return basis


def _build_representation(decl: dict | None, du: int) -> EpsilonRepresentation | None:
    if decl is None:
        return None
    structure = decl.get("structure", "affine")
    if structure != "affine":
        raise SchemaError("only affine representations are declarable; build general ones in code")
    columns = list(decl["columns"])
    return EpsilonRepresentation(
        d_eps=len(columns), structure="affine", basis_fn=_basis_fn(columns, du)
    )


def _schedule(entries) -> tuple[list[float], list[np.ndarray]]:
    ts = [float(e[0]) for e in entries]
    vals = [np.asarray(e[1], dtype=float) for e in entries]
    if ts != sorted(ts):
        raise SchemaError("schedule times must be sorted")
    return ts, vals


def _schedule_fn(entries):
    ts, vals = _schedule(entries)

    def eps_of(t: float) -> np.ndarray:
        k = bisect.bisect_right(ts, t + _T_SLACK) - 1
        return vals[max(k, 0)]

    return eps_of


def _build_feedback(decl: dict, du: int) -> FeedbackMap:
    kind = decl.get("kind", "identity")
    if kind == "identity":
        return identity_feedback
    if kind == "planted_affine":
        basis = _basis_fn(list(decl["columns"]), du)
        eps_of = _schedule_fn(decl["schedule"])

        def fb(t, u0, phi, xi, jet):
            return u0 + basis(u0, phi, xi, jet) @ eps_of(t)

        return fb
    raise SchemaError(f"unknown coupling kind {kind!r}")


def _build_behavior(decl: dict | None, du: int, nominal: Policy) -> Policy | None:
    if decl is None:
        return None
    kind = decl.get("kind", "nominal")
    if kind == "nominal":
        return nominal
    if kind == "idle":
        zero = np.zeros(du)
        return lambda t, j, phi, xi, jet, rng: zero
    if kind == "offset":
        basis = _basis_fn(list(decl.get("columns", ["ones"])), du)
        eps_of = _schedule_fn(decl["schedule"])

        def script(t, j, phi, xi, jet, rng):
            base = np.asarray(nominal(t, j, phi, xi, jet, rng), dtype=float)
            return base + basis(base, phi, xi, jet) @ eps_of(t)

        return script
    if kind == "random_walk":
        scale = float(decl.get("scale", 0.05))
        state = {"x": np.zeros(du)}

        def script(t, j, phi, xi, jet, rng):
            state["x"] = state["x"] + scale * rng.standard_normal(du)
            base = np.asarray(nominal(t, j, phi, xi, jet, rng), dtype=float)
            return base + state["x"]

        return script
    raise SchemaError(f"unknown behavior kind {kind!r}")


def _build_kernel(decl: dict | None) -> MemoryKernel | None:
    if decl is None:
        return None
    kind = decl["kind"]
    if kind == "none":
        return MemoryKernel("none")
    if kind == "integral":
        gain = decl.get("gain")
        return MemoryKernel("integral", gain=None if gain is None else np.asarray(gain, dtype=float))
    if kind == "exp_lag":
        u_init = decl.get("u_init")
        return MemoryKernel(
            "exp_lag",
            lam=float(decl["lam"]),
            u_init=None if u_init is None else np.asarray(u_init, dtype=float),
        )
    # MemoryKernel itself raises UnsupportedKernel for anything else
    return MemoryKernel(kind)


def _build_stop(decl: dict | None) -> StopCriterion | None:
    if decl is None:
        return None
    recal = None
    if decl.get("recalibration") is not None:
        r = decl["recalibration"]
        recal = RecalibrationMap(a=r["a"], b=r["b"], c=r["c"])
    weights = decl.get("omega_weights")
    return StopCriterion(
        f0=float(decl["f0"]),
        base_kind=decl.get("base", "neg_distance"),
        params=dict(decl.get("params", {})),
        omega_weights=None if weights is None else np.asarray(weights, dtype=float),
        recalibration=recal,
    )


def _build_functionals(decl: dict) -> FunctionalSpec:
    return FunctionalSpec(
        omega=tuple((str(ch), str(kind)) for ch, kind in decl["omega"]),
        v=tuple((str(ch), str(kind)) for ch, kind in decl["v"]),
    )


def _build_cells(decl: dict | None) -> CellComplex | None:
    if decl is None:
        return None
    return CellComplex(
        lo=np.asarray(decl["lo"], dtype=float),
        hi=np.asarray(decl["hi"], dtype=float),
        counts=tuple(int(c) for c in decl["counts"]),
        margin=float(decl.get("margin", 0.05)),
    )


def _build_figure(decl: dict | None) -> FigureConfig | None:
    if decl is None:
        return None
    return FigureConfig(
        target_cells=tuple(tuple(int(i) for i in c) for c in decl["target_cells"]),
        dwell=float(decl["dwell"]),
        min_observers=int(decl.get("min_observers", 2)),
        view_angle_step=float(decl.get("view_angle_step", 0.5)),
    )


def _build_coalitions(decl: dict | None) -> CoalitionSpec | None:
    if decl is None:
        return None
    return CoalitionSpec(
        coalitions=tuple(
            Coalition(
                members=tuple(int(m) for m in c["members"]),
                weights=tuple(float(w) for w in c["weights"]),
            )
            for c in decl["coalitions"]
        )
    )


# ---------------------------------------------------------------------------
# Compilation


@dataclass
class CompiledScenario:
    """Runtime objects resolved from a ScenarioSpec."""

    spec: ScenarioSpec
    dynamics: DynamicsSpec
    policies: list[Policy]
    feedbacks: list[FeedbackMap]
    wiring: str
    behavior_scripts: list[Policy | None] | None
    representations: list[EpsilonRepresentation | None] | None
    cells: CellComplex | None
    functionals: FunctionalSpec
    criterion: StopCriterion | None
    noise_std: list[float]
    phi0: np.ndarray
    xi0: np.ndarray
    dt: float
    seed: int
    horizon: float
    figure: FigureConfig | None = None
    coalition_spec: CoalitionSpec | None = None


def compile_scenario(spec: ScenarioSpec) -> CompiledScenario:
    dynamics = DynamicsSpec(
        n_players=spec.n_players,
        d_phi=spec.d_phi,
        d_xi=spec.d_xi,
        control_dims=tuple(spec.control_dims),
        phi_rhs=_build_phi_rhs(spec.phi_dynamics, spec),
        xi_rhs=_build_xi_rhs(spec.xi_dynamics, spec),
        jet_order=spec.jet_order,
    )
    policies = [
        _build_policy(decl, du) for decl, du in zip(spec.nominal, spec.control_dims)
    ]
    feedbacks = [
        _build_feedback(decl, du) for decl, du in zip(spec.feedback, spec.control_dims)
    ]
    phi0 = np.asarray(spec.phi0, dtype=float)
    xi0 = np.asarray(spec.xi0, dtype=float)
    if spec.kernel is not None:
        kernels = [_build_kernel(k) for k in spec.kernel]
        reduced = reduce_memory_feedback(kernels, dynamics, feedbacks, xi0)
        dynamics, feedbacks, xi0 = reduced.spec, reduced.feedbacks, reduced.xi0
    reps = None
    if spec.representation is not None:
        reps = [
            _build_representation(decl, du)
            for decl, du in zip(spec.representation, spec.control_dims)
        ]
    scripts = None
    if spec.behavior is not None:
        scripts = [
            _build_behavior(decl, du, pol)
            for decl, du, pol in zip(spec.behavior, spec.control_dims, policies)
        ]
    return CompiledScenario(
        spec=spec,
        dynamics=dynamics,
        policies=policies,
        feedbacks=feedbacks,
        wiring=spec.wiring,
        behavior_scripts=scripts,
        representations=reps,
        cells=_build_cells(spec.cells),
        functionals=_build_functionals(spec.functionals),
        criterion=_build_stop(spec.stop),
        noise_std=list(spec.noise_std),
        phi0=phi0,
        xi0=xi0,
        dt=float(spec.dt),
        seed=int(spec.seed),
        horizon=float(spec.horizon),
        figure=_build_figure(spec.figure),
        coalition_spec=_build_coalitions(spec.coalitions),
    )


# ---------------------------------------------------------------------------
# Reference scenarios


def build_pursuit(
    dim: int = 1,
    planted_eps=None,
    noise: float = 0.0,
    seed: int = 7,
    horizon: float = 10.0,
    dt: float = 0.01,
) -> ScenarioSpec:
    """Target-tracking scenario with a planted affine feedback coupling.

    The nominal policy closes on the origin proportionally; the coupling adds
    B(phi) @ eps with B = [phi] in 1-d and B = [phi, rot90(phi)] in 2-d, so
    the declared representation recovers the plant exactly on noise-free runs.
    """
    if dim not in (1, 2):
        raise DimensionMismatch("pursuit scenario supports dim 1 or 2")
    if noise < 0:
        raise DimensionMismatch("noise level must be nonnegative")
    columns = ["phi"] if dim == 1 else ["phi", "rot90_phi"]
    d_eps = len(columns)
    if planted_eps is None:
        planted_eps = [0.3] if dim == 1 else [0.3, -0.1]
    planted_eps = [float(x) for x in np.atleast_1d(planted_eps)]
    if len(planted_eps) != d_eps:
        raise DimensionMismatch(f"pursuit dim {dim} plants {d_eps} parameters")
    cells = (
        {"lo": [-1.0], "hi": [1.0], "counts": [20], "margin": 0.05}
        if dim == 1
        else {"lo": [-1.0, -1.0], "hi": [1.0, 1.0], "counts": [10, 10], "margin": 0.05}
    )
    return ScenarioSpec(
        name=f"pursuit-{dim}d",
        n_players=1,
        d_phi=dim,
        d_xi=0,
        control_dims=[dim],
        dt=dt,
        horizon=horizon,
        seed=seed,
        phi0=[1.0] + [0.5] * (dim - 1),
        xi0=[],
        phi_dynamics={"kind": "linear", "b": [np.eye(dim).tolist()]},
        xi_dynamics=None,
        nominal=[{"kind": "proportional", "gain": 0.5, "target": [0.0] * dim}],
        feedback=[
            {"kind": "planted_affine", "columns": columns, "schedule": [[0.0, planted_eps]]}
        ],
        representation=[{"structure": "affine", "columns": columns}],
        noise_std=[noise],
        jet_order=0,
        cells=cells,
        functionals={"omega": [["eps", "window-mean"]], "v": [["u0", "window-mean"]]},
        stop={
            "f0": -0.05,
            "base": "neg_distance",
            "params": {"target": [0.0] * dim},
            "omega_weights": [0.0] * d_eps,
            "recalibration": None,
        },
        ground_truth={"eps": planted_eps},
    )


_TOY_BOUNDARIES = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]


def _toy_schedule(start: float, step: float) -> list:
    times = [0.0] + _TOY_BOUNDARIES
    return [[t, [start + step * k]] for k, t in enumerate(times)]


def build_dialogue_toy(seed: int = 11, dt: float = 0.01) -> ScenarioSpec:
    """Two-player toy with continuous intention dynamics and piecewise-constant
    planted couplings that drift one cell per segment.

    Both players switch at the same known times, so the detected partition has
    a planted ground truth, and the segment means of the estimates follow the
    exact accumulation omega_n = omega_{n-1} + step.
    """
    horizon = 8.0
    eps1 = _toy_schedule(0.05, 0.1)
    eps2 = _toy_schedule(-0.35, 0.1)
    return ScenarioSpec(
        name="dialogue-toy",
        n_players=2,
        d_phi=1,
        d_xi=1,
        control_dims=[1, 1],
        dt=dt,
        horizon=horizon,
        seed=seed,
        phi0=[0.0],
        xi0=[1.0],
        phi_dynamics={"kind": "linear", "b": [[[0.3]], [[-0.3]]]},
        xi_dynamics={
            "kind": "linear",
            "a": [[-0.8]],
            "b": [[[0.2]], [[0.2]]],
            "bias": [0.8],
            "controls": "realized",
        },
        nominal=[
            {"kind": "sinusoid", "amp": [0.4], "freq": [1.3], "phase": [0.0]},
            {"kind": "sinusoid", "amp": [0.4], "freq": [0.9], "phase": [1.5707963267948966]},
        ],
        feedback=[
            {"kind": "planted_affine", "columns": ["xi"], "schedule": eps1},
            {"kind": "planted_affine", "columns": ["xi"], "schedule": eps2},
        ],
        representation=[
            {"structure": "affine", "columns": ["xi"]},
            {"structure": "affine", "columns": ["xi"]},
        ],
        jet_order=0,
        cells={"lo": [0.0, -0.4], "hi": [0.8, 0.4], "counts": [8, 8], "margin": 0.05},
        functionals={"omega": [["eps", "window-mean"]], "v": [["u0", "window-mean"]]},
        stop=None,
        ground_truth={
            "boundaries": list(_TOY_BOUNDARIES),
            "segments": len(_TOY_BOUNDARIES) + 1,
            "eps_step": [0.1, 0.1],
            "eps_start": [0.05, -0.35],
        },
    )


IAVR_TARGET_CELL = (6,)
IAVR_SOLO_LIBRARY_VERSION = "1"


def iavr_solo_library() -> list[dict]:
    """Versioned scripted single-user policies for the impossibility check."""
    in_cell = [[0.0, [0.625]]]
    hop = [[float(k), [0.625 if k % 2 == 0 else 0.1]] for k in range(8)]
    return [
        {"kind": "idle"},
        {"kind": "nominal"},
        {"kind": "offset", "columns": ["ones"], "schedule": in_cell},
        {"kind": "offset", "columns": ["ones"], "schedule": [[0.0, [-0.8]]]},
        {"kind": "offset", "columns": ["ones"], "schedule": hop},
        {"kind": "random_walk", "scale": 0.05},
    ]


def build_iavr_figure(
    n_observers: int = 2,
    dwell: float = 0.3,
    target_cells=None,
    seed: int = 23,
    horizon: float = 8.0,
    dt: float = 0.01,
    scripts: list[dict | None] | None = None,
) -> ScenarioSpec:
    """Multi-observer interpretational-figure demo.

    Observers jointly steer the object parameters; each observer's deviation
    from the nominal policy is read back through a one-parameter affine
    representation, and the hidden figure becomes visible only while at least
    two observers hold their estimates in a designated cell for the dwell
    time.  This is a constructed minimal model of the multi-user-only effect,
    not a claim about all interpretational geometries.
    """
    if n_observers < 1:
        raise DimensionMismatch("need at least one observer")
    if dwell <= 0:
        raise DimensionMismatch("dwell time must be positive")
    if target_cells is None:
        target_cells = [list(IAVR_TARGET_CELL)]
    du = 2
    if scripts is None:
        scripts = [{"kind": "nominal"}] * n_observers
    if len(scripts) != n_observers:
        raise DimensionMismatch("one behavior script (or null) per observer")
    rate = 0.5
    return ScenarioSpec(
        name=f"iavr-{n_observers}u",
        n_players=n_observers,
        d_phi=2,
        d_xi=0,
        control_dims=[du] * n_observers,
        dt=dt,
        horizon=horizon,
        seed=seed,
        phi0=[0.5, 0.0],
        xi0=[],
        phi_dynamics={
            "kind": "linear",
            "a": (-rate * np.eye(2)).tolist(),
            "b": [((rate / n_observers) * np.eye(2)).tolist()] * n_observers,
        },
        xi_dynamics=None,
        nominal=[{"kind": "zero"}] * n_observers,
        wiring="behavior",
        feedback=[{"kind": "identity"}] * n_observers,
        behavior=list(scripts),
        representation=[{"structure": "affine", "columns": ["ones"]}] * n_observers,
        jet_order=0,
        cells={"lo": [-1.0], "hi": [1.0], "counts": [8], "margin": 0.05},
        functionals={"omega": [["eps", "window-mean"]], "v": [["u0", "window-mean"]]},
        stop=None,
        figure={
            "target_cells": [list(c) for c in target_cells],
            "dwell": dwell,
            "min_observers": 2,
            "view_angle_step": 0.5,
        },
        ground_truth={
            "target_eps": 0.625,
            "solo_library_version": IAVR_SOLO_LIBRARY_VERSION,
        },
    )


def builtin_scenario(name: str, seed: int | None = None) -> ScenarioSpec:
    """Named reference scenarios for the command line and tests."""
    builders = {
        "pursuit1d": lambda: build_pursuit(1),
        "pursuit2d": lambda: build_pursuit(2),
        "pursuit1d-noisy": lambda: build_pursuit(1, noise=0.01),
        "dialogue": build_dialogue_toy,
        "iavr": lambda: build_iavr_figure(2),
        "iavr-room": lambda: build_iavr_figure(2, dwell=0.25, dt=0.05, horizon=20.0),
    }
    if name not in builders:
        raise SchemaError(
            f"unknown builtin scenario {name!r}; available: {sorted(builders)}"
        )
    spec = builders[name]()
    if seed is not None:
        spec.seed = int(seed)
    return spec
