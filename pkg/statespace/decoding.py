"""Глобальное декодирование Витерби на дискретизированной модели и ожидаемые траектории."""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .data import as_panel
from .discretization import MatrixCache
from .exceptions import InvalidArgumentError
from .inference import log_emission_matrix

logger = logging.getLogger(__name__)

DECODED_COLUMNS = ["id", "time", "state_index", "state_value", "expected_count", "equilibrium_count"]


@dataclass(frozen=True, eq=False)
class DecodedPath:
    state_indices: np.ndarray
    state_values: np.ndarray
    log_prob: float

    def __post_init__(self):
        indices = np.asarray(self.state_indices, dtype=np.int64)
        values = np.asarray(self.state_values, dtype=float)
        if indices.shape != values.shape:
            raise InvalidArgumentError("Длины индексов и значений состояний должны совпадать.")
        if indices.size and indices.min() < 1:
            raise InvalidArgumentError("Индексы состояний нумеруются с 1.")
        object.__setattr__(self, "state_indices", indices)
        object.__setattr__(self, "state_values", values)

    def __len__(self):
        return self.state_indices.size


def viterbi(seq, spec, cache=None):
    """
    Наиболее вероятная последовательность интервалов. При равенстве
    выбирается меньший индекс (argmax возвращает первый максимум).
    """
    if spec.stateless:
        raise InvalidArgumentError("У модели без латентного процесса нечего декодировать.")
    cache = MatrixCache() if cache is None else cache
    log_emissions = log_emission_matrix([seq], spec)
    n_obs, m = log_emissions.shape
    with np.errstate(divide="ignore"):
        scores = np.log(spec.initial_distribution().probabilities) + log_emissions[0]
    pointers = np.zeros((n_obs, m), dtype=np.int64)
    for step, gap in enumerate(seq.gaps, start=1):
        with np.errstate(divide="ignore"):
            log_gamma = np.log(cache.get(spec.process, spec.grid, gap).entries)
        candidates = scores[:, np.newaxis] + log_gamma
        pointers[step] = np.argmax(candidates, axis=0)
        scores = candidates[pointers[step], np.arange(m)] + log_emissions[step]

    path = np.empty(n_obs, dtype=np.int64)
    path[-1] = int(np.argmax(scores))
    log_prob = float(scores[path[-1]])
    for step in range(n_obs - 1, 0, -1):
        path[step - 1] = pointers[step, path[step]]
    return DecodedPath(state_indices=path + 1, state_values=spec.grid.midpoints[path], log_prob=log_prob)


def path_log_prob(seq, spec, indices, cache=None):
    """Совместная лог-вероятность заданного пути (индексы с 1) и данных."""
    cache = MatrixCache() if cache is None else cache
    states = np.asarray(indices) - 1
    log_emissions = log_emission_matrix([seq], spec)
    with np.errstate(divide="ignore"):
        total = np.log(spec.initial_distribution().probabilities[states[0]]) + log_emissions[0, states[0]]
        for step, gap in enumerate(seq.gaps, start=1):
            entry = cache.get(spec.process, spec.grid, gap).entries[states[step - 1], states[step]]
            total += np.log(entry) + log_emissions[step, states[step]]
    return float(total)


@dataclass(frozen=True, eq=False)
class ExpectedTrajectory:
    expected: np.ndarray
    equilibrium: np.ndarray


def expected_trajectory(path, emission, covs=None):
    """Ожидаемые счёты при декодированном состоянии и при состоянии 0 (равновесие)."""
    ages = genders = None
    if emission.needs_covariates:
        if covs is None or len(covs) != len(path):
            raise InvalidArgumentError("Число ковариат должно совпадать с длиной декодированного пути.")
        ages = np.array([cov.age for cov in covs], dtype=float)
        genders = np.array([cov.gender for cov in covs], dtype=np.int64)
    elif covs is not None and len(covs) != len(path):
        raise InvalidArgumentError("Число ковариат должно совпадать с длиной декодированного пути.")
    expected = emission.expected(path.state_values, ages, genders)
    equilibrium = emission.expected(np.zeros(len(path)), ages, genders)
    return ExpectedTrajectory(expected=np.asarray(expected, dtype=float), equilibrium=np.asarray(equilibrium, dtype=float))


def decode_panel(panel, spec, cache=None):
    """Декодирование всех индивидов; строки для CSV с фиксированными столбцами."""
    cache = MatrixCache() if cache is None else cache
    frames = []
    paths = {}
    for key, sequence in as_panel(panel).ordered():
        path = viterbi(sequence, spec, cache)
        trajectory = expected_trajectory(path, spec.emission, sequence.covariate_list() if sequence.has_covariates else None)
        paths[key] = path
        frames.append(pd.DataFrame({
            "id": key,
            "time": sequence.times,
            "state_index": path.state_indices,
            "state_value": path.state_values,
            "expected_count": trajectory.expected,
            "equilibrium_count": trajectory.equilibrium,
        }))
    logger.info("Декодировано %d индивидов", len(paths))
    return paths, pd.concat(frames, ignore_index=True)[DECODED_COLUMNS]
