"""Ground-truth vehicle traces on a fixed discrete time grid.

Loading and saving of FCD-style CSV files, kinematics derivation from
positions, short-trace filtering, window extraction and a seeded
Manhattan-grid traffic generator for desk-scale experiments.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError, ValidationError

DEFAULT_STEP_S = 1.0
DEFAULT_MIN_BBOX_AREA_M2 = 100.0
DEFAULT_MIN_DURATION_S = 15.0

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TraceSample:
    """One vehicle state sample: positions in meters, speed m/s, heading rad in [0, 2pi)."""

    step: int
    x: float
    y: float
    speed: float = 0.0
    heading: float = 0.0


class Trace:
    """Time-ordered samples of one vehicle on consecutive step indices.

    Samples are stored as column arrays; ``first_step + i`` is the step
    index of row ``i``.  At least two samples, no gaps.
    """

    __slots__ = ("vehicle_id", "first_step", "x", "y", "speed", "heading")

    def __init__(self, vehicle_id, first_step, x, y, speed=None, heading=None):
        self.vehicle_id = str(vehicle_id)
        self.first_step = int(first_step)
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        n = self.x.size
        self.speed = np.zeros(n) if speed is None else np.asarray(speed, dtype=float)
        self.heading = np.zeros(n) if heading is None else np.asarray(heading, dtype=float)
        if n < 2:
            raise ValidationError(f"trace {vehicle_id!r}: needs >= 2 samples, got {n}")
        if not (self.y.size == self.speed.size == self.heading.size == n):
            raise ValidationError(f"trace {vehicle_id!r}: column length mismatch")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise ValidationError(f"trace {vehicle_id!r}: non-finite positions")
        if (self.speed < 0).any():
            raise ValidationError(f"trace {vehicle_id!r}: negative speed")

    @classmethod
    def from_samples(cls, vehicle_id, samples):
        samples = sorted(samples, key=lambda s: s.step)
        steps = [s.step for s in samples]
        for a, b in zip(steps, steps[1:]):
            if b == a:
                raise ValidationError(f"trace {vehicle_id!r}: duplicate sample at step {a}")
            if b != a + 1:
                raise ValidationError(
                    f"trace {vehicle_id!r}: gap between steps {a} and {b}"
                )
        return cls(
            vehicle_id,
            steps[0],
            [s.x for s in samples],
            [s.y for s in samples],
            [s.speed for s in samples],
            [s.heading for s in samples],
        )

    def __len__(self):
        return self.x.size

    @property
    def last_step(self):
        return self.first_step + len(self) - 1

    @property
    def lifetime_steps(self):
        """L(v) in steps: last - first + 1."""
        return len(self)

    @property
    def samples(self):
        return [
            TraceSample(self.first_step + i, self.x[i], self.y[i], self.speed[i], self.heading[i])
            for i in range(len(self))
        ]

    def row(self, step):
        i = step - self.first_step
        if i < 0 or i >= len(self):
            raise IndexError(f"step {step} outside trace {self.vehicle_id!r}")
        return i

    def bbox(self):
        return (self.x.min(), self.y.min(), self.x.max(), self.y.max())

    def replace_kinematics(self, speed, heading):
        return Trace(self.vehicle_id, self.first_step, self.x, self.y, speed, heading)


class TraceSet:
    """A collection of traces sharing one step grid."""

    def __init__(self, traces, step_duration_s=DEFAULT_STEP_S):
        if step_duration_s <= 0:
            raise ValidationError("step_duration_s must be > 0")
        self.step_duration_s = float(step_duration_s)
        self.traces = {}
        for tr in traces:
            if tr.vehicle_id in self.traces:
                raise ValidationError(f"duplicate vehicle id {tr.vehicle_id!r}")
            self.traces[tr.vehicle_id] = tr
        self.traces = dict(sorted(self.traces.items()))

    def __len__(self):
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces.values())

    def __getitem__(self, vehicle_id):
        return self.traces[vehicle_id]

    @property
    def vehicle_ids(self):
        return list(self.traces)

    @property
    def bounds(self):
        """(xmin, ymin, xmax, ymax) over all positions; None when empty."""
        if not self.traces:
            return None
        boxes = np.array([tr.bbox() for tr in self])
        return (boxes[:, 0].min(), boxes[:, 1].min(), boxes[:, 2].max(), boxes[:, 3].max())

    @property
    def step_range(self):
        """(min first_step, max last_step); None when empty."""
        if not self.traces:
            return None
        return (
            min(tr.first_step for tr in self),
            max(tr.last_step for tr in self),
        )

    def duration_s(self, trace):
        return trace.lifetime_steps * self.step_duration_s


def load_traces(path, fmt="csv", step_duration_s=DEFAULT_STEP_S):
    """Load a TraceSet from a ``time,id,x,y`` CSV file (header optional).

    Times are snapped to the step grid.  Duplicate (vehicle, step) pairs and
    gaps in a vehicle's step sequence are validation errors; unparsable rows
    are parse errors carrying the line number.
    """
    if fmt != "csv":
        raise ConfigError(f"unsupported trace format {fmt!r}")
    path = Path(path)
    rows = {}  # vehicle -> {step: (x, y)}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, cells in enumerate(reader, start=1):
            if not cells or (len(cells) == 1 and not cells[0].strip()):
                continue
            if len(cells) < 4:
                raise ParseError(f"expected 4 columns time,id,x,y, got {len(cells)}", lineno)
            try:
                t = float(cells[0])
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ParseError(f"bad time value {cells[0]!r}", lineno) from None
            vid = cells[1].strip()
            if not vid:
                raise ParseError("empty vehicle id", lineno)
            try:
                x = float(cells[2])
                y = float(cells[3])
            except ValueError:
                raise ParseError(f"bad coordinate in {cells[2]!r},{cells[3]!r}", lineno) from None
            step = round(t / step_duration_s)
            per = rows.setdefault(vid, {})
            if step in per:
                raise ValidationError(
                    f"duplicate sample for vehicle {vid!r} at step {step}"
                )
            per[step] = (x, y)
    traces = []
    for vid, per in rows.items():
        steps = sorted(per)
        for a, b in zip(steps, steps[1:]):
            if b != a + 1:
                raise ValidationError(f"trace {vid!r}: missing step between {a} and {b}")
        if len(steps) < 2:
            raise ValidationError(f"trace {vid!r}: needs >= 2 samples, got {len(steps)}")
        xs = [per[s][0] for s in steps]
        ys = [per[s][1] for s in steps]
        traces.append(Trace(vid, steps[0], xs, ys))
    return TraceSet(traces, step_duration_s)


def save_traces(ts, path):
    """Write a TraceSet back to the ``time,id,x,y`` CSV schema."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "id", "x", "y"])
        for tr in ts:
            for i in range(len(tr)):
                t = (tr.first_step + i) * ts.step_duration_s
                writer.writerow([f"{t:g}", tr.vehicle_id, repr(float(tr.x[i])), repr(float(tr.y[i]))])


def derive_kinematics(ts):
    """Compute speed and heading from consecutive positions.

    speed_k = |p_{k+1} - p_k| / dt, heading_k = atan2 of the displacement;
    the last sample copies the previous values.  Zero displacement keeps the
    previous heading (and the stored one for a leading stationary run), with
    speed 0.  Idempotent.
    """
    dt = ts.step_duration_s
    out = []
    for tr in ts:
        dx = np.diff(tr.x)
        dy = np.diff(tr.y)
        dist = np.hypot(dx, dy)
        n = len(tr)
        speed = np.empty(n)
        heading = np.empty(n)
        speed[:-1] = dist / dt
        moving = dist > 0.0
        heading[:-1] = np.where(moving, np.arctan2(dy, dx) % TWO_PI, np.nan)
        heading[-1] = np.nan
        speed[-1] = speed[-2]
        prev = tr.heading[0] % TWO_PI  # fallback for a leading stationary run
        for i in range(n):
            if math.isnan(heading[i]):
                heading[i] = prev
            else:
                prev = heading[i]
        out.append(tr.replace_kinematics(speed, heading))
    return TraceSet(out, dt)


def filter_traces(ts, min_area_m2=DEFAULT_MIN_BBOX_AREA_M2, min_duration_s=DEFAULT_MIN_DURATION_S):
    """Drop traces confined to a small region or alive only briefly.

    A trace is confined when its position bounding box fits inside a square
    of ``min_area_m2`` (both extents <= sqrt(min_area_m2)); this keeps long
    straight traces whose degenerate bbox area would otherwise be zero.
    Duration below ``min_duration_s`` also drops the trace.
    """
    side = math.sqrt(min_area_m2)
    kept = []
    for tr in ts:
        x0, y0, x1, y1 = tr.bbox()
        confined = (x1 - x0) <= side and (y1 - y0) <= side
        if confined:
            continue
        if ts.duration_s(tr) < min_duration_s:
            continue
        kept.append(tr)
    return TraceSet(kept, ts.step_duration_s)


def rebase_steps(ts):
    """Shift all traces so the earliest step becomes 0 (origin is arbitrary)."""
    rng = ts.step_range
    if rng is None or rng[0] == 0:
        return ts
    off = rng[0]
    moved = [
        Trace(tr.vehicle_id, tr.first_step - off, tr.x, tr.y, tr.speed, tr.heading)
        for tr in ts
    ]
    return TraceSet(moved, ts.step_duration_s)


def extract_window(ts, start_s, duration_s, min_duration_s=60.0):
    """Clip every trace to [start_s, start_s + duration_s); drop short leftovers."""
    dt = ts.step_duration_s
    k0 = round(start_s / dt)
    k1 = k0 + round(duration_s / dt)  # exclusive
    kept = []
    for tr in ts:
        a = max(tr.first_step, k0)
        b = min(tr.last_step, k1 - 1)
        n = b - a + 1
        if n < 2 or n * dt < min_duration_s:
            continue
        i = a - tr.first_step
        kept.append(
            Trace(tr.vehicle_id, a, tr.x[i : i + n], tr.y[i : i + n], tr.speed[i : i + n], tr.heading[i : i + n])
        )
    return TraceSet(kept, dt)


def extract_subdatasets(ts, window_s=360.0, min_duration_s=60.0):
    """Two clips from the start and the end of the run ('early', 'late')."""
    lo, hi = ts.step_range
    dt = ts.step_duration_s
    total = (hi - lo + 1) * dt
    early = extract_window(ts, lo * dt, window_s, min_duration_s)
    late = extract_window(ts, lo * dt + max(0.0, total - window_s), window_s, min_duration_s)
    return {"early": early, "late": late}


@dataclass
class SynthConfig:
    """Manhattan-grid traffic generator settings.

    ``grid_cols`` x ``grid_rows`` blocks of ``block_length_m``; ``grid_rows=0``
    degenerates to a single horizontal road.  Speed is redrawn per block from
    U[speed_min, speed_max]; at interior intersections the vehicle turns with
    ``turn_probability``, at the boundary it picks a feasible direction.
    """

    vehicle_count: int = 50
    grid_cols: int = 5
    grid_rows: int = 5
    block_length_m: float = 250.0
    speed_min_mps: float = 8.0
    speed_max_mps: float = 14.0
    duration_s: float = 300.0
    turn_probability: float = 0.5
    step_duration_s: float = DEFAULT_STEP_S

    def validate(self):
        problems = []
        if self.vehicle_count < 1:
            problems.append("vehicle_count must be >= 1")
        if self.grid_cols < 1:
            problems.append("grid_cols must be >= 1")
        if self.grid_rows < 0:
            problems.append("grid_rows must be >= 0")
        if self.block_length_m <= 0:
            problems.append("block_length_m must be > 0")
        if not (0 < self.speed_min_mps <= self.speed_max_mps):
            problems.append("need 0 < speed_min_mps <= speed_max_mps")
        if not (0 <= self.turn_probability <= 1):
            problems.append("turn_probability must be in [0, 1]")
        if self.step_duration_s <= 0:
            problems.append("step_duration_s must be > 0")
        elif self.duration_s < 2 * self.step_duration_s:
            problems.append("duration_s must cover at least 2 steps")
        if problems:
            raise ConfigError(problems)

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError([f"unknown synthetic option {k!r}" for k in sorted(extra)])
        cfg = cls(**d)
        cfg.validate()
        return cfg


def _walk_vehicle(cfg, rng, n_steps):
    """Random walk on the grid; returns (x, y) arrays of length n_steps."""
    B = cfg.block_length_m
    xmax = cfg.grid_cols * B
    ymax = cfg.grid_rows * B
    dt = cfg.step_duration_s

    if cfg.grid_rows == 0:
        axis, fixed = 0, 0.0
        pos = rng.uniform(0.0, xmax)
    else:
        # pick a road weighted by length
        n_h = cfg.grid_rows + 1
        n_v = cfg.grid_cols + 1
        total_h = n_h * xmax
        total_v = n_v * ymax
        if rng.uniform(0.0, total_h + total_v) < total_h:
            axis = 0
            fixed = rng.integers(0, n_h) * B
            pos = rng.uniform(0.0, xmax)
        else:
            axis = 1
            fixed = rng.integers(0, n_v) * B
            pos = rng.uniform(0.0, ymax)
    direction = 1 if rng.random() < 0.5 else -1
    speed = rng.uniform(cfg.speed_min_mps, cfg.speed_max_mps)

    xs = np.empty(n_steps)
    ys = np.empty(n_steps)

    def limit(ax):
        return xmax if ax == 0 else ymax

    def record(i):
        if axis == 0:
            xs[i], ys[i] = pos, fixed
        else:
            xs[i], ys[i] = fixed, pos

    record(0)
    for i in range(1, n_steps):
        remaining = speed * dt
        while remaining > 1e-9:
            if direction > 0:
                next_node = math.floor(pos / B + 1.0 - 1e-9) * B
                gap = next_node - pos
            else:
                next_node = math.ceil(pos / B - 1.0 + 1e-9) * B
                gap = pos - next_node
            if remaining < gap - 1e-9:
                pos += direction * remaining
                remaining = 0.0
                break
            # arrive at an intersection (or road end) and decide
            pos = next_node
            remaining -= gap
            speed_next = rng.uniform(cfg.speed_min_mps, cfg.speed_max_mps)
            if cfg.grid_rows == 0:
                if (direction > 0 and pos >= xmax - 1e-9) or (direction < 0 and pos <= 1e-9):
                    direction = -direction  # dead end: U-turn
                speed = speed_next
                continue
            straight_ok = 0.0 - 1e-9 < pos + direction * 1e-6 and (
                (direction > 0 and pos < limit(axis) - 1e-9)
                or (direction < 0 and pos > 1e-9)
            )
            cross_limit = limit(1 - axis)
            turn_options = []
            if fixed < cross_limit - 1e-9:
                turn_options.append(1)
            if fixed > 1e-9:
                turn_options.append(-1)
            must_turn = not straight_ok
            if turn_options and (must_turn or rng.random() < cfg.turn_probability):
                new_dir = turn_options[rng.integers(0, len(turn_options))]
                axis, fixed, pos = 1 - axis, pos, fixed
                direction = new_dir
            elif must_turn:
                direction = -direction  # corner with no options: U-turn
            speed = speed_next
        record(i)
    return xs, ys


def generate_synthetic(cfg, seed):
    """Deterministic Manhattan-grid traffic.

    Every vehicle is alive for the full duration.  When the grid admits
    turning and the duration allows, vehicles are regenerated (bounded, with
    derived sub-seeds) until they pass `filter_traces` with defaults, so the
    output survives default preprocessing.
    """
    cfg.validate()
    n_steps = round(cfg.duration_s / cfg.step_duration_s)
    ensure_filter = cfg.duration_s >= DEFAULT_MIN_DURATION_S
    side = math.sqrt(DEFAULT_MIN_BBOX_AREA_M2)

    traces = []
    width = len(str(cfg.vehicle_count - 1))
    for v in range(cfg.vehicle_count):
        for attempt in range(200):
            rng = np.random.default_rng(np.random.SeedSequence((seed, v, attempt)))
            xs, ys = _walk_vehicle(cfg, rng, n_steps)
            if not ensure_filter:
                break
            if (xs.max() - xs.min()) > side or (ys.max() - ys.min()) > side:
                break
        traces.append(Trace(f"v{v:0{width}d}", 0, xs, ys))
    ts = TraceSet(traces, cfg.step_duration_s)
    return derive_kinematics(ts)
