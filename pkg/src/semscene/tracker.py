"""Multi-object tracking with count-change resets and pointer re-identification.

Per frame, detections are matched to active tracks by Hungarian assignment on
a bounding-box corner-distance cost. When the detection count rises, the
surplus detections are compared against dormant tracks' remembered embedding
pointers (projected to 3-D); a detection closer than tau to some memory entry
resumes that track, otherwise it starts a new one. When the count falls, the
unmatched tracks go dormant but keep their memories for the rest of the run.

Re-identification results use ``None`` for "no assignment, start a new track".
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

POINTER_DIM = 256
MEMORY_SIZE = 8  # pointer memories kept per track, FIFO


def _check_bbox(bbox) -> np.ndarray:
    b = np.asarray(bbox, dtype=np.float64).reshape(-1)
    if b.shape != (4,):
        raise ValueError(f"bbox must have 4 values, got {b.shape}")
    if not (b[0] < b[2] and b[1] < b[3]):
        raise ValueError(f"bbox min corner must precede max corner: {b.tolist()}")
    return b


@dataclass(frozen=True)
class Detection:
    """One detected subject: pixel bbox plus an optional embedding pointer."""

    bbox: tuple
    pointer: np.ndarray | None = None
    frame_index: int = 0

    def __post_init__(self):
        b = _check_bbox(self.bbox)
        object.__setattr__(self, "bbox", tuple(b.tolist()))
        if self.pointer is not None:
            p = np.asarray(self.pointer, dtype=np.float64).reshape(-1)
            if p.shape != (POINTER_DIM,):
                raise ValueError(f"pointer must have {POINTER_DIM} values, got {p.shape[0]}")
            object.__setattr__(self, "pointer", p)


@dataclass(frozen=True)
class PcaProjector:
    """Affine projection p -> components @ (p - mean) onto a small subspace."""

    components: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=np.float64)
        m = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        if c.ndim != 2 or c.shape[1] != m.shape[0]:
            raise ValueError(f"components {c.shape} do not match mean length {m.shape[0]}")
        gram = c @ c.T
        if np.abs(gram - np.eye(c.shape[0])).max() > 1e-6:
            raise ValueError("component rows must be pairwise orthonormal")
        object.__setattr__(self, "components", c)
        object.__setattr__(self, "mean", m)


def project_pointer(pointer, proj: PcaProjector) -> np.ndarray:
    p = np.asarray(pointer, dtype=np.float64).reshape(-1)
    if p.shape[0] != proj.mean.shape[0]:
        raise ValueError(f"pointer length {p.shape[0]} does not match projector "
                         f"input dimension {proj.mean.shape[0]}")
    return proj.components @ (p - proj.mean)


@dataclass
class TrackedObject:
    track_id: int
    last_bbox: tuple
    last_seen_frame: int
    pointer_memory: deque = field(default_factory=lambda: deque(maxlen=MEMORY_SIZE))
    dormant: bool = False


@dataclass(frozen=True)
class Assignment:
    """Matching result: pairs plus whatever stayed unmatched on each side."""

    pairs: tuple = ()
    unassigned_current: tuple = ()
    unassigned_previous: tuple = ()


@dataclass
class TrackState:
    """All tracks (active and dormant) plus the bookkeeping ``step`` needs.

    tau gates re-identification distance in projected-pointer space; it has no
    sensible universal default and must be chosen per deployment.
    """

    tau: float
    projector: PcaProjector | None = None
    memory_size: int = MEMORY_SIZE
    tracks: list = field(default_factory=list)
    next_id: int = 0
    prev_detection_count: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.memory_size < 1:
            raise ValueError("memory_size must be at least 1")

    def active_tracks(self) -> list:
        return [t for t in self.tracks if not t.dormant]

    def dormant_tracks(self) -> list:
        return [t for t in self.tracks if t.dormant]

    def _new_track(self, det: Detection) -> TrackedObject:
        t = TrackedObject(self.next_id, det.bbox, det.frame_index,
                          deque(maxlen=self.memory_size))
        self.next_id += 1
        self.tracks.append(t)
        self._observe(t, det)
        return t

    def _observe(self, track: TrackedObject, det: Detection):
        track.last_bbox = det.bbox
        track.last_seen_frame = det.frame_index
        track.dormant = False
        if det.pointer is not None and self.projector is not None:
            track.pointer_memory.append(project_pointer(det.pointer, self.projector))


def bbox_cost(a, b) -> float:
    """Euclidean distance between min corners plus distance between max corners."""
    pa, pb = _check_bbox(a), _check_bbox(b)
    d = pa - pb
    return float(np.hypot(d[0], d[1]) + np.hypot(d[2], d[3]))


def assign_hungarian(cost) -> Assignment:
    """Minimum-total-cost matching of size min(I, J); pairs sorted by row index."""
    c = np.atleast_2d(np.asarray(cost, dtype=np.float64))
    if c.size and (not np.isfinite(c).all() or c.min() < 0):
        raise ValueError("costs must be finite and non-negative")
    if c.shape[0] == 0 or c.shape[1] == 0:
        return Assignment((), tuple(range(c.shape[0])), tuple(range(c.shape[1])))
    rows, cols = linear_sum_assignment(c)
    order = np.argsort(rows)
    pairs = tuple((int(rows[k]), int(cols[k])) for k in order)
    used_r = {r for r, _ in pairs}
    used_c = {c_ for _, c_ in pairs}
    return Assignment(pairs,
                      tuple(i for i in range(c.shape[0]) if i not in used_r),
                      tuple(j for j in range(c.shape[1]) if j not in used_c))


def reidentify(unassigned, state: TrackState) -> list:
    """Match surplus detections to dormant tracks by pointer-memory distance.

    Returns one (detection_index, track_id or None) per input detection, in
    input order. Candidates are taken greedily in ascending distance, each
    dormant track used at most once, and only while distance < state.tau;
    leftovers get None (caller starts fresh tracks).
    """
    results: dict = {}
    if state.projector is None:
        return [(i, None) for i in range(len(unassigned))]
    dormant = state.dormant_tracks()
    candidates = []
    for i, det in enumerate(unassigned):
        if det.pointer is None:
            raise ValueError("re-identification requires detections with pointers")
        q = project_pointer(det.pointer, state.projector)
        for t in dormant:
            if not t.pointer_memory:
                continue
            mem = np.asarray(t.pointer_memory)
            d = float(np.sqrt(((mem - q) ** 2).sum(axis=1).min()))
            candidates.append((d, i, t.track_id))
    taken = set()
    for d, i, tid in sorted(candidates):
        if d >= state.tau:
            break
        if i in results or tid in taken:
            continue
        results[i] = tid
        taken.add(tid)
    return [(i, results.get(i)) for i in range(len(unassigned))]


def step(state: TrackState, detections) -> tuple:
    """Advance the tracker by one frame; mutates and returns ``state``.

    Returns (state, Assignment, reset_flag). The Assignment's pairs give every
    detection's final track id (matched, re-identified, or freshly created);
    unassigned_previous lists the track ids that went dormant this frame.
    reset_flag is true exactly when the detection count changed, the signal
    for the upstream segmenter to be reset.
    """
    detections = list(detections)
    frames = {d.frame_index for d in detections}
    if len(frames) > 1:
        raise ValueError(f"detections span multiple frames: {sorted(frames)}")
    count = len(detections)
    reset_flag = count != state.prev_detection_count

    active = state.active_tracks()
    cost = np.zeros((count, len(active)))
    for i, det in enumerate(detections):
        for j, t in enumerate(active):
            cost[i, j] = bbox_cost(det.bbox, t.last_bbox)
    geo = assign_hungarian(cost)

    final = {}
    for i, j in geo.pairs:
        t = active[j]
        state._observe(t, detections[i])
        final[i] = t.track_id

    leftover = [i for i in range(count) if i not in final]
    if count > state.prev_detection_count and leftover:
        pointered = [i for i in leftover if detections[i].pointer is not None]
        reid = reidentify([detections[i] for i in pointered], state)
        by_id = {t.track_id: t for t in state.tracks}
        for k, tid in reid:
            if tid is not None:
                i = pointered[k]
                state._observe(by_id[tid], detections[i])
                final[i] = tid
    for i in range(count):
        if i not in final:
            final[i] = state._new_track(detections[i]).track_id

    newly_dormant = []
    for j, t in enumerate(active):
        if j in {jj for _, jj in geo.pairs}:
            continue
        t.dormant = True
        newly_dormant.append(t.track_id)

    state.prev_detection_count = count
    asg = Assignment(tuple(sorted((i, final[i]) for i in final)), (),
                     tuple(newly_dormant))
    return state, asg, reset_flag
