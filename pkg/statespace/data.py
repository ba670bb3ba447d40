"""
Наблюдения: последовательности с нерегулярными моментами времени, панели по
индивидам, чтение и запись CSV (id, time, y[, age, gender]).
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .emissions import Covariates
from .exceptions import IngestionError, InvalidArgumentError
from .splines import AGE_MAX, AGE_MIN

logger = logging.getLogger(__name__)

DATA_COLUMNS = ["id", "time", "y"]
COVARIATE_COLUMNS = ["age", "gender"]
STATE_COLUMNS = ["id", "time", "x"]


@dataclass(frozen=True, eq=False)
class ObservationSequence:
    times: np.ndarray
    counts: np.ndarray
    ages: np.ndarray | None = None
    genders: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        counts = np.asarray(self.counts)
        if times.ndim != 1 or times.size == 0:
            raise InvalidArgumentError("Последовательность должна содержать хотя бы одно наблюдение.")
        if counts.shape != times.shape:
            raise InvalidArgumentError("Длины times и counts должны совпадать.")
        if np.any(~np.isfinite(times)) or times[0] < 0:
            raise InvalidArgumentError("Моменты времени должны быть конечными и неотрицательными.")
        if np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("Моменты времени должны строго возрастать.")
        as_float = counts.astype(float)
        if np.any(~np.isfinite(as_float)) or np.any(as_float < 0) or np.any(as_float != np.round(as_float)):
            raise InvalidArgumentError("Наблюдения должны быть целыми неотрицательными числами.")
        if (self.ages is None) != (self.genders is None):
            raise InvalidArgumentError("Возраст и пол задаются только вместе.")

        object.__setattr__(self, "times", times)
        object.__setattr__(self, "counts", as_float.astype(np.int64))
        if self.ages is not None:
            ages = np.asarray(self.ages, dtype=float)
            genders = np.asarray(self.genders)
            if ages.shape != times.shape or genders.shape != times.shape:
                raise InvalidArgumentError("Ковариаты должны быть заданы для каждого наблюдения.")
            if np.any(~np.isin(genders, (0, 1))):
                raise InvalidArgumentError("Пол кодируется 0 или 1.")
            object.__setattr__(self, "ages", ages)
            object.__setattr__(self, "genders", genders.astype(np.int64))

        for name in ("times", "counts", "ages", "genders"):
            value = getattr(self, name)
            if value is not None:
                value.setflags(write=False)

    def __len__(self):
        return self.times.size

    @property
    def has_covariates(self):
        return self.ages is not None

    @property
    def gaps(self):
        return np.diff(self.times)

    def covariates(self, index):
        if not self.has_covariates:
            return None
        return Covariates(age=float(self.ages[index]), gender=int(self.genders[index]))

    def covariate_list(self):
        return [self.covariates(k) for k in range(len(self))]

    def shifted(self, offset):
        return ObservationSequence(self.times + offset, self.counts, self.ages, self.genders)


@dataclass(frozen=True, eq=False)
class PanelDataset:
    sequences: tuple

    def __post_init__(self):
        sequences = tuple((str(key), sequence) for key, sequence in self.sequences)
        ids = [key for key, _ in sequences]
        if not sequences:
            raise InvalidArgumentError("Панель не может быть пустой.")
        if len(set(ids)) != len(ids):
            raise InvalidArgumentError("Идентификаторы индивидов должны быть уникальны.")
        for key, sequence in sequences:
            if not isinstance(sequence, ObservationSequence) or len(sequence) == 0:
                raise InvalidArgumentError(f"Последовательность индивида {key} пуста или некорректна.")
        object.__setattr__(self, "sequences", sequences)

    @classmethod
    def single(cls, sequence, key="1"):
        return cls(((key, sequence),))

    def __len__(self):
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    @property
    def ids(self):
        return [key for key, _ in self.sequences]

    @property
    def n_observations(self):
        return sum(len(sequence) for _, sequence in self.sequences)

    @property
    def has_covariates(self):
        return all(sequence.has_covariates for _, sequence in self.sequences)

    def ordered(self):
        """Последовательности в порядке идентификаторов: порядок редукции не зависит от входного."""
        return sorted(self.sequences, key=lambda item: _id_sort_key(item[0]))

    def to_frame(self):
        frames = []
        for key, sequence in self.sequences:
            frame = pd.DataFrame({"id": key, "time": sequence.times, "y": sequence.counts})
            if sequence.has_covariates:
                frame["age"] = sequence.ages
                frame["gender"] = sequence.genders
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)


def _id_sort_key(key):
    return (0, int(key), key) if key.lstrip("-").isdigit() else (1, 0, key)


def as_panel(data):
    if isinstance(data, PanelDataset):
        return data
    if isinstance(data, ObservationSequence):
        return PanelDataset.single(data)
    raise InvalidArgumentError("Ожидается ObservationSequence или PanelDataset.")


def read_dataset(path):
    try:
        frame = pd.read_csv(path, dtype={"id": str})
    except FileNotFoundError as exc:
        raise IngestionError(f"Файл данных не найден: {path}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise IngestionError(f"Не удалось разобрать CSV {path}: {exc}") from exc
    return panel_from_frame(frame)


def panel_from_frame(frame):
    for column in DATA_COLUMNS:
        if column not in frame.columns:
            raise IngestionError("Отсутствует обязательный столбец", column=column)
    has_covariates = any(column in frame.columns for column in COVARIATE_COLUMNS)
    if has_covariates:
        for column in COVARIATE_COLUMNS:
            if column not in frame.columns:
                raise IngestionError("Возраст и пол задаются только вместе", column=column)

    checked = ["time", "y"] + (COVARIATE_COLUMNS if has_covariates else [])
    # номер строки файла: заголовок занимает строку 1
    for column in ["id"] + checked:
        missing = frame[column].isna()
        if missing.any():
            raise IngestionError("Пропущенное значение", row=int(missing.idxmax()) + 2, column=column)
    for column in checked:
        numeric = pd.to_numeric(frame[column], errors="coerce")
        bad = numeric.isna()
        if bad.any():
            raise IngestionError("Значение не является числом", row=int(bad.idxmax()) + 2, column=column)
        frame[column] = numeric

    _reject(frame, frame["time"] < 0, "Время должно быть неотрицательным", "time")
    _reject(frame, (frame["y"] < 0) | (frame["y"] != frame["y"].round()),
            "Наблюдение должно быть целым неотрицательным числом", "y")
    if has_covariates:
        _reject(frame, (frame["age"] < AGE_MIN) | (frame["age"] > AGE_MAX),
                f"Возраст вне области сплайнов [{AGE_MIN:g}, {AGE_MAX:g}]", "age")
        _reject(frame, ~frame["gender"].isin([0, 1]), "Пол кодируется 0 или 1", "gender")

    sequences = []
    for key, group in frame.groupby("id", sort=False):
        times = group["time"].to_numpy(dtype=float)
        steps = np.diff(times)
        if np.any(steps <= 0):
            row = int(group.index[int(np.argmax(steps <= 0)) + 1]) + 2
            raise IngestionError(f"Моменты времени индивида {key} должны строго возрастать", row=row, column="time")
        sequence = ObservationSequence(
            times=times,
            counts=group["y"].to_numpy(dtype=float),
            ages=group["age"].to_numpy(dtype=float) if has_covariates else None,
            genders=group["gender"].to_numpy(dtype=float).astype(np.int64) if has_covariates else None,
        )
        sequences.append((key, sequence))
    panel = PanelDataset(tuple(sequences))
    logger.info("Загружено %d наблюдений по %d индивидам", panel.n_observations, len(panel))
    return panel


def _reject(frame, mask, message, column):
    if mask.any():
        raise IngestionError(message, row=int(mask.idxmax()) + 2, column=column)


def write_dataset(panel, path):
    frame = as_panel(panel).to_frame()
    frame.to_csv(path, index=False)
    return frame


def states_frame(states):
    """states: словарь id -> SamplePath истинных состояний."""
    frames = [pd.DataFrame({"id": key, "time": path.times, "x": path.values}) for key, path in states.items()]
    return pd.concat(frames, ignore_index=True)


def write_states(states, path):
    frame = states_frame(states)
    frame.to_csv(path, index=False)
    return frame


def read_states(path):
    try:
        frame = pd.read_csv(path, dtype={"id": str})
    except FileNotFoundError as exc:
        raise IngestionError(f"Файл состояний не найден: {path}") from exc
    for column in STATE_COLUMNS:
        if column not in frame.columns:
            raise IngestionError("Отсутствует обязательный столбец", column=column)
    return frame


def describe_panel(panel, age_classes=((12, 14), (14, 16), (16, 18), (18, 20), (20, 22), (22, 24), (24, 26), (26, 29))):
    """Описательная статистика до моделирования: доля нулей и медиана положительных счётов по возрасту и полу."""
    frame = as_panel(panel).to_frame()
    overall = {
        "individuals": len(panel),
        "observations": int(len(frame)),
        "zero_share": float((frame["y"] == 0).mean()),
    }
    positive = frame.loc[frame["y"] > 0, "y"]
    if len(positive):
        overall.update(
            positive_median=float(positive.median()),
            positive_min=int(positive.min()),
            positive_max=int(positive.max()),
        )
    if "age" not in frame.columns:
        return overall, None

    edges = [low for low, _ in age_classes] + [age_classes[-1][1]]
    labels = [f"{low}-{high}" for low, high in age_classes]
    frame["age_class"] = pd.cut(frame["age"], bins=edges, labels=labels, right=False)
    grouped = frame.groupby(["age_class", "gender"], observed=True)["y"]
    table = pd.DataFrame({
        "observations": grouped.size(),
        "zero_share": grouped.apply(lambda y: float((y == 0).mean())),
        "positive_median": grouped.apply(lambda y: float(y[y > 0].median()) if (y > 0).any() else np.nan),
        "mean": grouped.mean(),
    }).reset_index()
    return overall, table
