"""Normalization, RUL labeling and window extraction.

Feature layout contract: a model input row is
``[setting_1, setting_2, setting_3, <surviving sensors in file-column order>]``
(the three operational settings can be excluded with
``include_op_settings=False``, which shifts the sensor block left).  Sensors
that are constant on the training split are dropped; min-max statistics are
fitted on the training split only and reused everywhere else.  Values outside
the training range are deliberately left unclamped so that injected
perturbations stay visible after scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .cmapss import OP_SETTING_NAMES, EngineTrajectory, ParseError

STATS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NormStats:
    """Per-feature min/max fitted on training data.

    ``op_min``/``op_max`` cover the three operational settings,
    ``sensor_min``/``sensor_max`` the sensors named by ``sensor_names``.
    ``constant_sensors`` lists sensor tags whose training range is zero;
    those columns are dropped by :func:`normalize`.
    """

    sensor_names: tuple[str, ...]
    sensor_min: np.ndarray
    sensor_max: np.ndarray
    op_min: np.ndarray
    op_max: np.ndarray
    constant_sensors: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if np.any(self.sensor_min > self.sensor_max) or np.any(self.op_min > self.op_max):
            raise ValueError("min exceeds max in normalization stats")

    @property
    def surviving_sensors(self) -> tuple[str, ...]:
        return tuple(n for n in self.sensor_names if n not in self.constant_sensors)

    def sensor_range(self, tag: str) -> tuple[float, float]:
        idx = self.sensor_names.index(tag)
        return float(self.sensor_min[idx]), float(self.sensor_max[idx])


def fit_norm_stats(trajectories: Sequence[EngineTrajectory]) -> NormStats:
    """Min/max per sensor and per op setting over all rows of all trajectories."""
    if not trajectories:
        raise ValueError("cannot fit normalization stats on an empty trajectory list")
    names = trajectories[0].sensor_names
    for t in trajectories:
        if t.sensor_names != names:
            raise ValueError(f"engine {t.engine_id} has a different sensor tag set")
    sensors = np.vstack([t.sensors for t in trajectories])
    ops = np.vstack([t.op_settings for t in trajectories])
    s_min, s_max = sensors.min(axis=0), sensors.max(axis=0)
    constant = frozenset(n for n, lo, hi in zip(names, s_min, s_max) if lo == hi)
    return NormStats(
        sensor_names=names,
        sensor_min=s_min,
        sensor_max=s_max,
        op_min=ops.min(axis=0),
        op_max=ops.max(axis=0),
        constant_sensors=constant,
    )


def _affine(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = hi - lo
    # Zero-range features (possible for op settings, which are never dropped)
    # map to 0.0 rather than dividing by zero.
    safe = np.where(span == 0.0, 1.0, span)
    out = (values - lo) / safe
    return np.where(span == 0.0, 0.0, out)


def normalize(trajectory: EngineTrajectory, stats: NormStats) -> EngineTrajectory:
    """Map every surviving sensor and op setting through the fitted affine scaler.

    Constant sensors are dropped from the output.  Out-of-range values pass
    through unclamped.
    """
    if trajectory.sensor_names != stats.sensor_names:
        unknown = set(trajectory.sensor_names) - set(stats.sensor_names)
        raise ValueError(
            f"engine {trajectory.engine_id}: sensor tags do not match fitted stats"
            + (f" (unknown: {sorted(unknown)})" if unknown else "")
        )
    keep = [i for i, n in enumerate(stats.sensor_names) if n not in stats.constant_sensors]
    sensors = _affine(
        trajectory.sensors[:, keep], stats.sensor_min[keep], stats.sensor_max[keep]
    )
    ops = _affine(trajectory.op_settings, stats.op_min, stats.op_max)
    return EngineTrajectory(
        engine_id=trajectory.engine_id,
        cycles=trajectory.cycles,
        op_settings=ops,
        sensors=sensors,
        sensor_names=tuple(stats.sensor_names[i] for i in keep),
    )


def denormalize(trajectory: EngineTrajectory, stats: NormStats) -> EngineTrajectory:
    """Invert :func:`normalize`, reinstating constant sensors from the stats."""
    surviving = stats.surviving_sensors
    if trajectory.sensor_names != surviving:
        raise ValueError("trajectory does not carry the surviving-sensor layout of these stats")
    raw = np.empty((len(trajectory), len(stats.sensor_names)))
    j = 0
    for i, name in enumerate(stats.sensor_names):
        if name in stats.constant_sensors:
            raw[:, i] = stats.sensor_min[i]
        else:
            lo, hi = stats.sensor_min[i], stats.sensor_max[i]
            raw[:, i] = trajectory.sensors[:, j] * (hi - lo) + lo
            j += 1
    op_span = stats.op_max - stats.op_min
    ops = trajectory.op_settings * np.where(op_span == 0.0, 0.0, op_span) + stats.op_min
    return EngineTrajectory(
        engine_id=trajectory.engine_id,
        cycles=trajectory.cycles,
        op_settings=ops,
        sensors=raw,
        sensor_names=stats.sensor_names,
    )


@dataclass(frozen=True)
class RulLabeling:
    """Piecewise-linear RUL target: linear decay to zero, capped early on."""

    rul_cap: int = 130

    def __post_init__(self):
        if self.rul_cap <= 0:
            raise ValueError(f"rul_cap must be positive, got {self.rul_cap}")


def label_rul(
    trajectory: EngineTrajectory,
    labeling: RulLabeling = RulLabeling(),
    final_rul: float | None = None,
) -> np.ndarray:
    """Per-row RUL labels.

    Row ``t`` (1-based) gets ``min((T - t) + final_rul, cap)`` where
    ``final_rul`` is 0 for run-to-failure trajectories and the ground-truth
    remaining life at the last observed row for truncated test trajectories.
    """
    t_n = len(trajectory)
    offset = 0.0 if final_rul is None else float(final_rul)
    if offset < 0:
        raise ValueError(f"final_rul must be non-negative, got {final_rul}")
    raw = (t_n - np.arange(1, t_n + 1, dtype=np.float64)) + offset
    return np.minimum(raw, float(labeling.rul_cap))


def feature_matrix(trajectory: EngineTrajectory, include_op_settings: bool = True) -> np.ndarray:
    """Model-input matrix (T, d): op settings first, then sensors."""
    if include_op_settings:
        return np.hstack([trajectory.op_settings, trajectory.sensors])
    return np.array(trajectory.sensors)


@dataclass(frozen=True)
class SequenceSample:
    """One fixed-length window plus its scalar RUL target."""

    engine_id: int
    window: np.ndarray  # (seq_len, d)
    target_rul: float
    end_cycle: int

    def __post_init__(self):
        w = np.ascontiguousarray(self.window, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "window", w)
        if self.target_rul < 0:
            raise ValueError(f"target_rul must be >= 0, got {self.target_rul}")


def windowize(
    trajectory: EngineTrajectory,
    seq_len: int,
    labels: np.ndarray,
    include_op_settings: bool = True,
) -> list[SequenceSample]:
    """Sliding windows of length ``seq_len``; one sample per end row.

    ``labels`` must be the per-row RUL labels for this trajectory (see
    :func:`label_rul`).  Trajectories shorter than ``seq_len`` yield no
    samples.
    """
    if seq_len <= 0:
        raise ValueError(f"seq_len must be >= 1, got {seq_len}")
    t_n = len(trajectory)
    if len(labels) != t_n:
        raise ValueError(f"engine {trajectory.engine_id}: {len(labels)} labels for {t_n} rows")
    if t_n < seq_len:
        return []
    features = feature_matrix(trajectory, include_op_settings)
    samples = []
    for end in range(seq_len, t_n + 1):
        samples.append(
            SequenceSample(
                engine_id=trajectory.engine_id,
                window=features[end - seq_len: end],
                target_rul=float(labels[end - 1]),
                end_cycle=int(trajectory.cycles[end - 1]),
            )
        )
    return samples


def stack_samples(samples: Sequence[SequenceSample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack samples into (X, y, engine_ids) arrays for batched training."""
    if not samples:
        raise ValueError("no samples to stack")
    x = np.stack([s.window for s in samples])
    y = np.array([s.target_rul for s in samples])
    groups = np.array([s.engine_id for s in samples], dtype=np.int64)
    return x, y, groups


def save_norm_stats(stats: NormStats, path: str | Path, header_lines: Sequence[str] = ()) -> None:
    """Write stats in the documented key/value text format (deterministic)."""
    Path(path).write_text(format_norm_stats(stats, header_lines))


def format_norm_stats(stats: NormStats, header_lines: Sequence[str] = ()) -> str:
    lines = [f"# rulbench norm stats v{STATS_FORMAT_VERSION}"]
    lines += [f"# {h}" for h in header_lines]
    for name, lo, hi in zip(OP_SETTING_NAMES, stats.op_min, stats.op_max):
        lines.append(f"setting {name} min={float(lo)!r} max={float(hi)!r}")
    for name, lo, hi in zip(stats.sensor_names, stats.sensor_min, stats.sensor_max):
        lines.append(f"sensor {name} min={float(lo)!r} max={float(hi)!r}")
    for name in stats.sensor_names:
        if name in stats.constant_sensors:
            lines.append(f"constant {name}")
    return "\n".join(lines) + "\n"


def load_norm_stats(source: str | Path | IO[str]) -> NormStats:
    text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
    first = text.splitlines()[0] if text else ""
    if not first.startswith(f"# rulbench norm stats v{STATS_FORMAT_VERSION}"):
        raise ParseError(1, f"unrecognized stats header {first!r}")
    op_entries: dict[str, tuple[float, float]] = {}
    sensor_entries: list[tuple[str, float, float]] = []
    constants: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        try:
            kind = parts[0]
            if kind == "constant":
                constants.add(parts[1])
                continue
            name = parts[1]
            lo = float(parts[2].split("=", 1)[1])
            hi = float(parts[3].split("=", 1)[1])
        except (IndexError, ValueError):
            raise ParseError(line_no, f"malformed stats line {line!r}") from None
        if kind == "setting":
            op_entries[name] = (lo, hi)
        elif kind == "sensor":
            sensor_entries.append((name, lo, hi))
        else:
            raise ParseError(line_no, f"unknown entry kind {kind!r}")
    if set(op_entries) != set(OP_SETTING_NAMES):
        raise ParseError(1, "stats file is missing op-setting entries")
    return NormStats(
        sensor_names=tuple(n for n, _, _ in sensor_entries),
        sensor_min=np.array([lo for _, lo, _ in sensor_entries]),
        sensor_max=np.array([hi for _, _, hi in sensor_entries]),
        op_min=np.array([op_entries[n][0] for n in OP_SETTING_NAMES]),
        op_max=np.array([op_entries[n][1] for n in OP_SETTING_NAMES]),
        constant_sensors=frozenset(constants),
    )
