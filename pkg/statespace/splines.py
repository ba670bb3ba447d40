"""
Кубические B-сплайны для возрастных эффектов f1, f2.

Узлы: простой (без повторов) вектор из 12 равноотстоящих значений от 7 до 35,
что даёт 12 - 4 = 8 базисных функций. Разбиение единицы выполняется только
на [knot_4, knot_9].
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError, OutOfDomainError

AGE_MIN = 7.0
AGE_MAX = 35.0
KNOT_COUNT = 12
ORDER = 4


@dataclass(frozen=True)
class SplineBasis:
    knots: tuple = tuple(np.linspace(AGE_MIN, AGE_MAX, KNOT_COUNT))
    order: int = ORDER

    def __post_init__(self):
        knots = tuple(float(k) for k in self.knots)
        if len(knots) < self.order + 1 or np.any(np.diff(knots) <= 0):
            raise InvalidArgumentError("Узлы должны строго возрастать, и их должно быть больше порядка.")
        object.__setattr__(self, "knots", knots)

    @property
    def basis_count(self):
        return len(self.knots) - self.order

    @property
    def domain(self):
        return self.knots[0], self.knots[-1]

    @property
    def full_support(self):
        return self.knots[self.order - 1], self.knots[-self.order]

    def in_full_support(self, ages):
        low, high = self.full_support
        ages = np.asarray(ages, dtype=float)
        return (ages >= low) & (ages <= high)


DEFAULT_BASIS = SplineBasis()


@dataclass(frozen=True)
class SplineCoefficients:
    omega: tuple

    def __post_init__(self):
        omega = tuple(float(w) for w in np.ravel(self.omega))
        object.__setattr__(self, "omega", omega)

    def __len__(self):
        return len(self.omega)

    @property
    def array(self):
        return np.asarray(self.omega)

    @classmethod
    def zeros(cls, count=KNOT_COUNT - ORDER):
        return cls(np.zeros(count))


def design_matrix(basis, ages):
    """Рекурсия Кокса–де Бура сразу для вектора возрастов; результат формы (n, basis_count)."""
    ages = np.atleast_1d(np.asarray(ages, dtype=float))
    low, high = basis.domain
    if np.any(~np.isfinite(ages)) or np.any(ages < low) or np.any(ages > high):
        raise OutOfDomainError(f"Возраст должен лежать в [{low:g}, {high:g}].")

    knots = np.asarray(basis.knots)
    intervals = knots.size - 1
    # степень 0: индикатор интервала, правый конец относим к последнему интервалу
    values = ((ages[:, None] >= knots[None, :-1]) & (ages[:, None] < knots[None, 1:])).astype(float)
    values[ages == knots[-1], intervals - 1] = 1.0

    for degree in range(1, basis.order):
        count = intervals - degree
        left_span = knots[degree:degree + count] - knots[:count]
        right_span = knots[degree + 1:degree + 1 + count] - knots[1:count + 1]
        left = (ages[:, None] - knots[None, :count]) / left_span[None, :] * values[:, :count]
        right = (knots[None, degree + 1:degree + 1 + count] - ages[:, None]) / right_span[None, :] * values[:, 1:count + 1]
        values = left + right
    return values


def basis_eval(basis, age):
    return design_matrix(basis, [age])[0]


def curve_eval(basis, coefficients, age):
    if len(coefficients) != basis.basis_count:
        raise InvalidArgumentError(
            f"Нужно {basis.basis_count} коэффициентов сплайна, получено {len(coefficients)}."
        )
    values = design_matrix(basis, age) @ coefficients.array
    if np.ndim(age) == 0:
        return float(values[0])
    return values
