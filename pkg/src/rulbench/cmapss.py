"""Reading, validating and writing C-MAPSS style trajectory files.

The on-disk format is the 26-column whitespace-separated text layout used by
the NASA turbofan degradation data: engine id, cycle number, three
operational settings, then 21 sensor readings per row.  Ground-truth RUL
files carry one non-negative number per line, the i-th line belonging to the
i-th test engine.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

#: Canonical tags for the 21 sensor columns, in file-column order.
SENSOR_NAMES: tuple[str, ...] = (
    "T2", "T24", "T30", "T50", "P2", "P15", "P30", "Nf", "Nc", "epr",
    "Ps30", "phi", "NRf", "NRc", "BPR", "farB", "htBleed", "Nf_dmd",
    "PCNfR_dmd", "W31", "W32",
)

OP_SETTING_NAMES: tuple[str, ...] = ("setting_1", "setting_2", "setting_3")

N_COLUMNS = 2 + len(OP_SETTING_NAMES) + len(SENSOR_NAMES)


class ParseError(ValueError):
    """Malformed input text; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ValidationError(ValueError):
    """Structurally well-formed input that violates a data invariant."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EngineTrajectory:
    """One engine's multivariate time series.

    ``sensors`` has one column per entry of ``sensor_names``; raw parsed
    trajectories carry all 21 canonical sensors, normalized ones may carry a
    reduced set.  Arrays are read-only: operations return new trajectories
    rather than mutating.
    """

    engine_id: int
    cycles: np.ndarray       # (T,) consecutive ints starting at 1
    op_settings: np.ndarray  # (T, 3)
    sensors: np.ndarray      # (T, len(sensor_names))
    sensor_names: tuple[str, ...] = SENSOR_NAMES

    def __post_init__(self):
        object.__setattr__(self, "cycles", _readonly(np.asarray(self.cycles, dtype=np.int64)))
        object.__setattr__(self, "op_settings", _readonly(np.asarray(self.op_settings, dtype=np.float64)))
        object.__setattr__(self, "sensors", _readonly(np.asarray(self.sensors, dtype=np.float64)))
        object.__setattr__(self, "sensor_names", tuple(self.sensor_names))
        if self.engine_id < 1:
            raise ValidationError(f"engine id must be positive, got {self.engine_id}")
        t = len(self.cycles)
        if self.op_settings.shape != (t, len(OP_SETTING_NAMES)):
            raise ValidationError(
                f"engine {self.engine_id}: op_settings shape {self.op_settings.shape} "
                f"does not match {t} cycles"
            )
        if self.sensors.shape != (t, len(self.sensor_names)):
            raise ValidationError(
                f"engine {self.engine_id}: sensors shape {self.sensors.shape} does not "
                f"match {t} cycles x {len(self.sensor_names)} tags"
            )
        if t and not (self.cycles[0] == 1 and np.all(np.diff(self.cycles) == 1)):
            raise ValidationError(
                f"engine {self.engine_id}: cycles must be consecutive integers starting at 1"
            )

    def __len__(self) -> int:
        return len(self.cycles)

    @property
    def n_cycles(self) -> int:
        return len(self.cycles)

    def sensor_column(self, tag: str) -> np.ndarray:
        try:
            idx = self.sensor_names.index(tag)
        except ValueError:
            raise KeyError(f"engine {self.engine_id} has no sensor {tag!r}") from None
        return self.sensors[:, idx]

    def with_sensors(self, sensors: np.ndarray, sensor_names: Sequence[str] | None = None) -> "EngineTrajectory":
        """Copy of this trajectory with the sensor block replaced."""
        return EngineTrajectory(
            engine_id=self.engine_id,
            cycles=self.cycles,
            op_settings=self.op_settings,
            sensors=sensors,
            sensor_names=tuple(sensor_names) if sensor_names is not None else self.sensor_names,
        )


def _open_lines(source: str | Path | IO[str] | Iterable[str]) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        return Path(source).read_text().splitlines()
    if isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        return source.read().splitlines()
    return source


def parse_cmapss(source: str | Path | IO[str] | Iterable[str]) -> list[EngineTrajectory]:
    """Parse 26-column trajectory text into one trajectory per engine.

    Rows are grouped by engine id in file order and the resulting list is
    sorted by engine id.  Raises :class:`ParseError` for malformed rows
    (pointing at the offending line) and :class:`ValidationError` when an
    engine's cycle numbers are not consecutive from 1.
    """
    by_engine: dict[int, list[list[float]]] = {}
    for line_no, line in enumerate(_open_lines(source), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != N_COLUMNS:
            raise ParseError(line_no, f"expected {N_COLUMNS} columns, got {len(tokens)}")
        try:
            values = [float(tok) for tok in tokens]
        except ValueError:
            bad = next(tok for tok in tokens if not _is_number(tok))
            raise ParseError(line_no, f"non-numeric token {bad!r}") from None
        engine_id = values[0]
        if engine_id != int(engine_id) or engine_id < 1:
            raise ParseError(line_no, f"engine id must be a positive integer, got {tokens[0]}")
        cycle = values[1]
        if cycle != int(cycle) or cycle < 1:
            raise ParseError(line_no, f"cycle must be a positive integer, got {tokens[1]}")
        by_engine.setdefault(int(engine_id), []).append(values)

    trajectories = []
    for engine_id in sorted(by_engine):
        rows = np.array(by_engine[engine_id], dtype=np.float64)
        trajectories.append(
            EngineTrajectory(
                engine_id=engine_id,
                cycles=rows[:, 1].astype(np.int64),
                op_settings=rows[:, 2:5],
                sensors=rows[:, 5:],
            )
        )
    return trajectories


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def parse_rul_file(source: str | Path | IO[str] | Iterable[str]) -> list[float]:
    """Parse a ground-truth RUL file: one non-negative value per line."""
    values: list[float] = []
    for line_no, line in enumerate(_open_lines(source), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            value = float(stripped)
        except ValueError:
            raise ParseError(line_no, f"non-numeric RUL value {stripped!r}") from None
        if value < 0:
            raise ValidationError(f"line {line_no}: RUL must be non-negative, got {value}")
        values.append(value)
    return values


def filter_engines(trajectories: Sequence[EngineTrajectory], min_cycles: int) -> list[EngineTrajectory]:
    """Keep trajectories strictly longer than ``min_cycles``, order preserved."""
    if min_cycles < 0:
        raise ValueError(f"min_cycles must be >= 0, got {min_cycles}")
    return [t for t in trajectories if len(t) > min_cycles]


def format_cmapss(trajectories: Sequence[EngineTrajectory]) -> str:
    """Render trajectories back to 26-column text.

    Floats are written in shortest round-trip form so that parsing the output
    reproduces every value bit for bit (needed for lossless interchange of
    attacked datasets).
    """
    lines = []
    for traj in trajectories:
        if traj.sensor_names != SENSOR_NAMES:
            raise ValueError(
                f"engine {traj.engine_id}: only full 21-sensor trajectories can be "
                "written in C-MAPSS format"
            )
        for i in range(len(traj)):
            fields = [str(traj.engine_id), str(int(traj.cycles[i]))]
            fields += [repr(float(v)) for v in traj.op_settings[i]]
            fields += [repr(float(v)) for v in traj.sensors[i]]
            lines.append(" ".join(fields))
    return "\n".join(lines) + ("\n" if lines else "")


def write_cmapss(trajectories: Sequence[EngineTrajectory], path: str | Path) -> None:
    Path(path).write_text(format_cmapss(trajectories))
