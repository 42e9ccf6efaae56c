"""A-posteriori session analyses: estimation, segmentation, recursion fit.

Works off a recorded trajectory, so live sessions and replayed logs go
through the same code path.  In perception-game sessions the set boundaries
are the canonical partition; the cell-transition partition is still computed
when the stacked trace matches the cell complex, and reports list both.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import Trajectory
from .epsilon import (
    CellComplex,
    EpsilonTrace,
    Partition,
    detect_cell_transitions,
    epsilon_trace,
    stack_traces,
)
from .errors import UnderDetermined, WindowTooShort
from .verbalize import (
    DialogueState,
    FunctionalSpec,
    RecursionModel,
    Transcript,
    Window,
    dialogue_states,
    fit_recursion,
    transcript as build_transcript,
    verbalizability_score,
    windows_from_boundaries,
)


@dataclass
class SessionAnalysis:
    traces: list[EpsilonTrace | None]
    stacked: EpsilonTrace | None
    cell_partition: Partition | None
    boundary_ticks: list[int]
    windows: list[Window]
    states: list[DialogueState]
    model: RecursionModel | None
    score: float | None
    transcript: Transcript

    @property
    def verbalizable(self) -> bool:
        return self.score is not None and self.score >= 0.99


def analyze_session(
    traj: Trajectory,
    representations,
    cells: CellComplex | None,
    functionals: FunctionalSpec,
    set_boundary_ticks: list[int] | None = None,
) -> SessionAnalysis:
    """Recompute the offline analyses for one recorded session.

    set_boundary_ticks, when given (perception mode), define the windows;
    otherwise the cell-transition partition of the stacked trace does.
    """
    traces: list[EpsilonTrace | None] = []
    if representations is not None:
        for i, rep in enumerate(representations):
            traces.append(None if rep is None else epsilon_trace(traj, rep, i))
    present = [tr for tr in traces if tr is not None]
    stacked = stack_traces(present) if present else None

    cell_partition = None
    if stacked is not None and cells is not None and stacked.d_eps == cells.dim:
        cell_partition = detect_cell_transitions(stacked, cells)

    if set_boundary_ticks is not None:
        starts = list(set_boundary_ticks)
    elif cell_partition is not None:
        starts = [int(j) for j in cell_partition.ticks]
    else:
        starts = [stacked.first_valid() if stacked is not None else 0]
    cell_labels = None if cell_partition is None or set_boundary_ticks is not None else cell_partition.cells
    windows = windows_from_boundaries(traj, starts, stacked, cell_labels)

    states = dialogue_states(windows, functionals)
    model = None
    score = None
    try:
        model = fit_recursion(states, windows)
        score = verbalizability_score(model)
    except (UnderDetermined, WindowTooShort):
        pass
    return SessionAnalysis(
        traces=traces,
        stacked=stacked,
        cell_partition=cell_partition,
        boundary_ticks=starts,
        windows=windows,
        states=states,
        model=model,
        score=score,
        transcript=build_transcript(windows, states),
    )
