"""
Дискретизация непрерывного состояния в HMM из m состояний: сетка, матрицы
переходов для зазора delta, стационарное начальное распределение и кэш матриц.
"""
import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import IllConditionedGridError, InvalidArgumentError

logger = logging.getLogger(__name__)

# ниже этой доли массы сетка считается слишком узкой для процесса
MIN_CAPTURED_MASS = 0.5
DELTA_QUANTUM = 1e-9


@dataclass(frozen=True)
class Grid:
    b0: float
    bm: float
    m: int

    def __post_init__(self):
        if not (np.isfinite(self.b0) and np.isfinite(self.bm)):
            raise InvalidArgumentError("Границы сетки должны быть конечными.")
        if not self.b0 < self.bm:
            raise InvalidArgumentError(f"Нужно b0 < bm, получено [{self.b0}, {self.bm}].")
        if int(self.m) != self.m or self.m < 2:
            raise InvalidArgumentError(f"Число интервалов m должно быть целым и не меньше 2, получено {self.m}.")
        object.__setattr__(self, "b0", float(self.b0))
        object.__setattr__(self, "bm", float(self.bm))
        object.__setattr__(self, "m", int(self.m))

    @property
    def width(self):
        return (self.bm - self.b0) / self.m

    @cached_property
    def boundaries(self):
        values = self.b0 + np.arange(self.m + 1) * self.width
        values[-1] = self.bm
        values.setflags(write=False)
        return values

    @cached_property
    def midpoints(self):
        values = self.b0 + (np.arange(self.m) + 0.5) * self.width
        values.setflags(write=False)
        return values

    def covers(self, law, n_sd=6.0):
        sd = float(np.sqrt(law.variance))
        return self.b0 <= law.mean - n_sd * sd and self.bm >= law.mean + n_sd * sd

    def resolves_mean(self, law, tolerance=0.5):
        """
        Есть ли середина интервала ближе tolerance стационарных sd к среднему.
        При чётном m на симметричной сетке ближайшие середины отстоят от mu на h/2,
        и при sigma → 0 модель не вырождается в модель без состояния.
        """
        offset = float(np.abs(self.midpoints - law.mean).min())
        return offset <= tolerance * float(np.sqrt(law.variance))

    def as_dict(self):
        return {"b0": self.b0, "bm": self.bm, "m": self.m}


def build_grid(b0, bm, m):
    return Grid(b0=b0, bm=bm, m=m)


def default_range(params, n_sd=6.0):
    """mu ± 6 стационарных стандартных отклонений."""
    half_width = n_sd * params.sigma / np.sqrt(2.0 * params.theta)
    return params.mu - half_width, params.mu + half_width


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    entries: np.ndarray
    delta: float
    captured_mass: float = 1.0

    @property
    def m(self):
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class InitialDistribution:
    probabilities: np.ndarray
    captured_mass: float = 1.0

    def __post_init__(self):
        probabilities = np.asarray(self.probabilities, dtype=float)
        if probabilities.ndim != 1 or np.any(probabilities < 0):
            raise InvalidArgumentError("Начальное распределение должно быть неотрицательным вектором.")
        if abs(probabilities.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("Начальное распределение должно суммироваться в 1.")
        probabilities.setflags(write=False)
        object.__setattr__(self, "probabilities", probabilities)

    @classmethod
    def point_mass(cls, m, index):
        probabilities = np.zeros(m)
        probabilities[index] = 1.0
        return cls(probabilities)


def _interval_masses(cdf_values):
    return np.clip(np.diff(cdf_values, axis=-1), 0.0, 1.0)


def transition_matrix(process, grid, delta):
    if not delta > 0:
        raise InvalidArgumentError(f"Зазор delta должен быть положительным, получено {delta}.")
    law = process.transition_law(grid.midpoints[:, np.newaxis], delta)
    raw = _interval_masses(law.cdf(grid.boundaries[np.newaxis, :]))
    row_sums = raw.sum(axis=1)
    captured = float(row_sums.min())
    if captured < MIN_CAPTURED_MASS:
        raise IllConditionedGridError(
            f"Сетка [{grid.b0}, {grid.bm}] слишком узка: строка матрицы переходов удерживает "
            f"лишь {captured:.3g} массы при delta={delta}."
        )
    entries = raw / row_sums[:, np.newaxis]
    entries.setflags(write=False)
    return TransitionMatrix(entries=entries, delta=float(delta), captured_mass=captured)


def initial_distribution(process, grid):
    law = process.stationary_law()
    raw = _interval_masses(law.cdf(grid.boundaries))
    captured = float(raw.sum())
    if captured < MIN_CAPTURED_MASS:
        raise IllConditionedGridError(
            f"Сетка [{grid.b0}, {grid.bm}] удерживает лишь {captured:.3g} стационарной массы."
        )
    return InitialDistribution(raw / captured, captured_mass=captured)


def quantize_delta(delta):
    return int(round(float(delta) / DELTA_QUANTUM))


class MatrixCache:
    """
    Кэш матриц переходов по ключу (процесс, сетка, квантованный delta).

    Поиск и вставка идут под блокировкой, сама матрица строится вне её. Хранит
    матрицы лишь для max_models последних использованных пар (процесс, сетка):
    оптимизатор на каждом шаге порождает новую точку параметров.
    """

    def __init__(self, max_models=8):
        self.max_models = max_models
        self._models = OrderedDict()
        self._lock = threading.Lock()
        self.builds = 0
        self.hits = 0

    def __len__(self):
        with self._lock:
            return sum(len(matrices) for matrices in self._models.values())

    def get(self, process, grid, delta):
        if not delta > 0:
            raise InvalidArgumentError(f"Зазор delta должен быть положительным, получено {delta}.")
        model_key = (process, grid)
        delta_key = quantize_delta(delta)
        with self._lock:
            matrices = self._models.get(model_key)
            if matrices is not None:
                self._models.move_to_end(model_key)
                matrix = matrices.get(delta_key)
                if matrix is not None:
                    self.hits += 1
                    return matrix

        matrix = transition_matrix(process, grid, delta_key * DELTA_QUANTUM)
        with self._lock:
            matrices = self._models.get(model_key)
            if matrices is None:
                matrices = self._models[model_key] = {}
                while len(self._models) > self.max_models:
                    self._models.popitem(last=False)
            else:
                self._models.move_to_end(model_key)
            matrix = matrices.setdefault(delta_key, matrix)
            self.builds += 1
        return matrix

    def clear(self):
        with self._lock:
            self._models.clear()


def matrix_cache_get(cache, process, grid, delta):
    return cache.get(process, grid, delta)
