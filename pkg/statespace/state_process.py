"""
Латентный процесс в непрерывном времени: параметры OU, переходный и
стационарный законы, точная симуляция и схема Эйлера–Маруямы.

Единица времени абстрактная: симуляционные эксперименты трактуют её как дни,
панели кейс-стади как годы.
"""
import logging
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
from scipy.special import ndtr

from .exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianLaw:
    mean: float | np.ndarray
    variance: float | np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.variance) < 0):
            raise InvalidArgumentError("Дисперсия не может быть отрицательной.")

    @property
    def sd(self):
        return np.sqrt(self.variance)

    def cdf(self, x):
        """Функция распределения; mean и x транслируются по правилам numpy."""
        x = np.asarray(x, dtype=float)
        sd = self.sd
        if np.all(sd == 0):
            return (x >= self.mean).astype(float)
        return ndtr((x - self.mean) / sd)


@runtime_checkable
class StateProcess(Protocol):
    """Всё, что умеет отдавать переходный и стационарный законы, годится для дискретизации."""

    def transition_law(self, x, delta: float) -> GaussianLaw: ...

    def stationary_law(self) -> GaussianLaw: ...


@dataclass(frozen=True)
class OUParams:
    theta: float
    mu: float
    sigma: float

    def __post_init__(self):
        for name in ("theta", "mu", "sigma"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"Параметр {name} должен быть конечным числом.")
        if self.theta <= 0:
            raise InvalidArgumentError(f"theta должен быть положительным, получено {self.theta}.")
        if self.sigma <= 0:
            raise InvalidArgumentError(f"sigma должен быть положительным, получено {self.sigma}.")

    @property
    def stationary_variance(self):
        return self.sigma ** 2 / (2.0 * self.theta)

    @property
    def stationary_sd(self):
        return float(np.sqrt(self.stationary_variance))

    def transition_law(self, x, delta):
        return ou_transition_law(self, x, delta)

    def stationary_law(self):
        return ou_stationary_law(self)

    def replace(self, **changes):
        values = {"theta": self.theta, "mu": self.mu, "sigma": self.sigma}
        values.update(changes)
        return OUParams(**values)


def ou_transition_law(params, x, delta):
    """Закон X(t + delta) | X(t) = x; x может быть массивом."""
    if not delta > 0:
        raise InvalidArgumentError(f"Шаг по времени должен быть положительным, получено {delta}.")
    decay = np.exp(-params.theta * delta)
    mean = decay * np.asarray(x, dtype=float) + params.mu * (1.0 - decay)
    # -expm1 держит точность при delta -> 0
    variance = params.stationary_variance * -np.expm1(-2.0 * params.theta * delta)
    if np.ndim(mean) == 0:
        mean = float(mean)
    return GaussianLaw(mean=mean, variance=float(variance))


def ou_stationary_law(params):
    return GaussianLaw(mean=float(params.mu), variance=float(params.stationary_variance))


@dataclass(frozen=True, eq=False)
class SamplePath:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or values.shape != times.shape:
            raise InvalidArgumentError("Длины times и values должны совпадать.")
        if times.size and times[0] < 0:
            raise InvalidArgumentError("Моменты времени должны быть неотрицательными.")
        if np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("Моменты времени должны строго возрастать.")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.times.size

    def to_frame(self):
        import pandas as pd

        return pd.DataFrame({"time": self.times, "value": self.values})


def simulate_exact(params, x0, times, rng):
    """
    Точная симуляция по переходному закону: x0 задаёт состояние в момент 0,
    values[k] содержит состояние в момент times[k].
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise InvalidArgumentError("Нужен непустой одномерный массив моментов времени.")
    if times[0] < 0:
        raise InvalidArgumentError("Первый момент времени должен быть неотрицательным.")
    if np.any(np.diff(times) <= 0):
        raise InvalidArgumentError("Моменты времени должны строго возрастать.")

    gaps = np.diff(np.concatenate(([0.0], times)))
    noise = rng.standard_normal(times.size)
    values = np.empty(times.size)
    current = float(x0)
    for k, gap in enumerate(gaps):
        if gap > 0:
            law = ou_transition_law(params, current, gap)
            current = law.mean + np.sqrt(law.variance) * noise[k]
        values[k] = current
    return SamplePath(times=times, values=values)


def euler_maruyama_ensemble(params, x0, step, horizon, n_paths, rng):
    """Ансамбль путей Эйлера–Маруямы на сетке {0, step, ..., horizon}; values имеет форму (n_paths, n)."""
    if not step > 0:
        raise InvalidArgumentError(f"Шаг должен быть положительным, получено {step}.")
    if not horizon > 0:
        raise InvalidArgumentError(f"Горизонт должен быть положительным, получено {horizon}.")
    n_steps = int(round(horizon / step))
    times = np.arange(n_steps + 1) * step
    values = np.empty((n_paths, n_steps + 1))
    values[:, 0] = x0
    scale = params.sigma * np.sqrt(step)
    for k in range(n_steps):
        current = values[:, k]
        values[:, k + 1] = current + params.theta * (params.mu - current) * step + scale * rng.standard_normal(n_paths)
    return times, values


def simulate_euler_maruyama(params, x0, step, horizon, rng):
    times, values = euler_maruyama_ensemble(params, x0, step, horizon, 1, rng)
    return SamplePath(times=times, values=values[0])
