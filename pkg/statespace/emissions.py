"""
Распределения наблюдений при заданном состоянии: Пуассон с масштабом alpha и
отрицательное биномиальное со сплайновыми эффектами возраста и пола.

Все плотности считаются в логарифмах. Пол кодируется фиктивной переменной:
0: мужчины (кривая f1), 1: женщины (f1 + f2).
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, gammaln

from .discretization import Grid
from .exceptions import InvalidArgumentError, NumericDomainError
from .splines import DEFAULT_BASIS, SplineBasis, SplineCoefficients, design_matrix

# exp(700) ещё представим в float64
MAX_LOG_MEAN = 700.0


@dataclass(frozen=True)
class Covariates:
    age: float
    gender: int

    def __post_init__(self):
        if self.gender not in (0, 1):
            raise InvalidArgumentError(f"Пол кодируется 0 или 1, получено {self.gender}.")
        if not np.isfinite(self.age):
            raise InvalidArgumentError("Возраст должен быть конечным числом.")


def validate_counts(y):
    counts = np.asarray(y)
    if counts.dtype.kind not in "iu":
        as_float = counts.astype(float)
        if np.any(~np.isfinite(as_float)) or np.any(as_float != np.round(as_float)):
            raise InvalidArgumentError("Наблюдения должны быть целыми неотрицательными числами.")
        counts = as_float.astype(np.int64)
    if np.any(counts < 0):
        raise InvalidArgumentError("Наблюдения должны быть целыми неотрицательными числами.")
    return counts


def _check_log_mean(log_mean):
    if np.any(log_mean > MAX_LOG_MEAN):
        raise NumericDomainError(
            f"Логарифм среднего превышает {MAX_LOG_MEAN:g}: среднее не представимо в float64."
        )


def _covariate_arrays(cov, size):
    if cov is None:
        return None, None
    if isinstance(cov, Covariates):
        return np.full(size, float(cov.age)), np.full(size, int(cov.gender))
    ages, genders = cov
    return np.asarray(ages, dtype=float), np.asarray(genders, dtype=int)


@dataclass(frozen=True)
class PoissonScaleEmission:
    alpha: float

    family = "poisson-scale"
    needs_covariates = False

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidArgumentError(f"alpha должен быть положительным, получено {self.alpha}.")

    def log_mean(self, x, ages=None, genders=None):
        log_mean = np.asarray(x, dtype=float) + np.log(self.alpha)
        _check_log_mean(log_mean)
        return log_mean

    def log_density_matrix(self, counts, midpoints, ages=None, genders=None):
        """Матрица log p(y_k | x = b*_i) формы (n, m)."""
        counts = validate_counts(counts).astype(float)[:, np.newaxis]
        log_rate = self.log_mean(np.asarray(midpoints, dtype=float))[np.newaxis, :]
        return counts * log_rate - np.exp(log_rate) - gammaln(counts + 1.0)

    def expected(self, x, ages=None, genders=None):
        return np.exp(self.log_mean(x))

    def sample(self, x, rng, ages=None, genders=None):
        return rng.poisson(self.expected(x))


@dataclass(frozen=True)
class NegBinSplineEmission:
    phi: float
    omega1: SplineCoefficients
    omega2: SplineCoefficients
    basis: SplineBasis = field(default=DEFAULT_BASIS)

    family = "negbin-spline"
    needs_covariates = True

    def __post_init__(self):
        if not (np.isfinite(self.phi) and self.phi > 0):
            raise InvalidArgumentError(f"phi должен быть положительным, получено {self.phi}.")
        for name in ("omega1", "omega2"):
            coefficients = getattr(self, name)
            if not isinstance(coefficients, SplineCoefficients):
                coefficients = SplineCoefficients(coefficients)
                object.__setattr__(self, name, coefficients)
            if len(coefficients) != self.basis.basis_count:
                raise InvalidArgumentError(
                    f"{name}: нужно {self.basis.basis_count} коэффициентов, получено {len(coefficients)}."
                )

    def covariate_effect(self, ages, genders):
        """f1(age) + f2(age) * gender."""
        design = design_matrix(self.basis, ages)
        return design @ self.omega1.array + (design @ self.omega2.array) * np.asarray(genders, dtype=float)

    def log_mean(self, x, ages, genders):
        if ages is None or genders is None:
            raise InvalidArgumentError("Отрицательной биномиальной модели нужны возраст и пол.")
        log_mean = np.asarray(x, dtype=float) + self.covariate_effect(ages, genders)
        _check_log_mean(log_mean)
        return log_mean

    def log_density_matrix(self, counts, midpoints, ages=None, genders=None):
        if ages is None or genders is None:
            raise InvalidArgumentError("Отрицательной биномиальной модели нужны возраст и пол.")
        counts = validate_counts(counts).astype(float)
        eta = self.covariate_effect(ages, genders)
        log_nu = np.asarray(midpoints, dtype=float)[np.newaxis, :] + eta[:, np.newaxis]
        _check_log_mean(log_nu)
        return _negbin_logpmf(counts[:, np.newaxis], log_nu, self.phi, _negbin_count_term(counts, self.phi)[:, np.newaxis])

    def expected(self, x, ages, genders):
        return np.exp(self.log_mean(x, ages, genders))

    def sample(self, x, rng, ages=None, genders=None):
        nu = self.expected(x, ages, genders)
        # смесь Гамма–Пуассон: дисперсия nu + nu^2 / phi
        return rng.poisson(rng.gamma(self.phi, nu / self.phi))

    def with_curves(self, phi=None, omega1=None, omega2=None):
        return NegBinSplineEmission(
            phi=self.phi if phi is None else phi,
            omega1=self.omega1 if omega1 is None else omega1,
            omega2=self.omega2 if omega2 is None else omega2,
            basis=self.basis,
        )


def _negbin_count_term(counts, phi):
    """lgamma(y + phi) - lgamma(phi) - lgamma(y + 1) через бета-функцию: точнее при больших phi."""
    counts = np.asarray(counts, dtype=float)
    safe = np.where(counts > 0, counts, 1.0)
    return np.where(counts > 0, -betaln(phi, safe) - np.log(safe), 0.0)


def _negbin_logpmf(counts, log_nu, phi, count_term):
    log_phi = np.log(phi)
    log_total = np.logaddexp(log_phi, log_nu)
    # phi * log(phi / (phi + nu)) = -phi * log1p(nu / phi)
    zero_term = -phi * np.logaddexp(0.0, log_nu - log_phi)
    return count_term + zero_term + counts * (log_nu - log_total)


def poisson_logpmf(emission, y, x):
    counts = validate_counts(y)
    log_rate = emission.log_mean(x)
    counts = counts.astype(float)
    value = counts * log_rate - np.exp(log_rate) - gammaln(counts + 1.0)
    return float(value) if np.ndim(value) == 0 else value


def negbin_logpmf(emission, y, x, cov):
    counts = validate_counts(y)
    size = max(np.size(counts), np.size(x))
    ages, genders = _covariate_arrays(cov, size)
    if ages is None:
        raise InvalidArgumentError("Отрицательной биномиальной модели нужны ковариаты.")
    log_nu = emission.log_mean(np.broadcast_to(np.asarray(x, dtype=float), (size,)), ages, genders)
    counts = np.broadcast_to(counts.astype(float), (size,))
    value = _negbin_logpmf(counts, log_nu, emission.phi, _negbin_count_term(counts, emission.phi))
    if np.ndim(y) == 0 and np.ndim(x) == 0:
        return float(value[0])
    return value


def negbin_marginal_logpmf(emission, y, cov):
    """Модель без латентного процесса: состояние исключено, то есть x = 0."""
    return negbin_logpmf(emission, y, 0.0, cov)


def emission_vector(emission, y, cov, grid: Grid):
    """Диагональ P(y) в логарифмах: вектор длины m, плотная диагональная матрица не строится."""
    ages, genders = _covariate_arrays(cov, 1)
    if emission.needs_covariates and ages is None:
        raise InvalidArgumentError("Этой модели наблюдений нужны ковариаты.")
    return emission.log_density_matrix(np.atleast_1d(y), grid.midpoints, ages, genders)[0]


def marginal_log_density(emission, counts, ages=None, genders=None):
    """Вектор log p(y_k) без состояния (x = 0) для всех наблюдений сразу."""
    return emission.log_density_matrix(counts, np.zeros(1), ages, genders)[:, 0]
