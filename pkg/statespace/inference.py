"""
Приближённое правдоподобие и его максимизация.

Прямой алгоритм с нормировкой на каждом шаге считает логарифм произведения
delta P(y_0) prod(Gamma_d P(y_k)) 1 за O(T m^2). Полный перебор по всем
последовательностям интервалов служит оракулом на малых примерах.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .data import as_panel
from .discretization import DELTA_QUANTUM, Grid, InitialDistribution, MatrixCache, initial_distribution
from .emissions import NegBinSplineEmission, PoissonScaleEmission
from .exceptions import InvalidArgumentError, InvalidStartError, NumericFailureError, StateSpaceError, TooLargeError
from .splines import SplineCoefficients, design_matrix
from .state_process import OUParams

logger = logging.getLogger(__name__)

LOG_PARAMETERS = ("theta", "sigma", "alpha", "phi")
BRUTE_FORCE_LIMIT = 10 ** 7
CI_LEVEL_Z = 1.959963984540054
GRADIENT_STEP = 1e-6
HESSIAN_STEP = 1e-4


def omega_names(curve, count):
    return [f"omega{curve}_{k}" for k in range(1, count + 1)]


@dataclass(frozen=True)
class ModelSpec:
    """process=None задаёт эталонную модель без латентного состояния."""

    process: OUParams | None
    emission: PoissonScaleEmission | NegBinSplineEmission
    grid: Grid | None = None
    initial: InitialDistribution | None = None

    def __post_init__(self):
        if self.process is not None and self.grid is None:
            raise InvalidArgumentError("Модели с латентным процессом нужна сетка.")
        if self.initial is not None and self.grid is not None and self.initial.probabilities.size != self.grid.m:
            raise InvalidArgumentError("Размер начального распределения не совпадает с числом интервалов.")

    @property
    def stateless(self):
        return self.process is None

    @property
    def family(self):
        return "benchmark" if self.stateless else self.emission.family

    @property
    def coverage_ok(self):
        return self.stateless or self.grid.covers(self.process.stationary_law())

    def initial_distribution(self):
        if self.initial is not None:
            return self.initial
        return initial_distribution(self.process, self.grid)

    def parameter_values(self):
        values = {}
        if self.process is not None:
            values["theta"] = self.process.theta
            values["sigma"] = self.process.sigma
        emission = self.emission
        if isinstance(emission, PoissonScaleEmission):
            values["alpha"] = emission.alpha
        else:
            values["phi"] = emission.phi
            for curve, coefficients in ((1, emission.omega1), (2, emission.omega2)):
                values.update(zip(omega_names(curve, len(coefficients)), coefficients.omega))
        return values

    def with_parameters(self, values):
        process = self.process
        if process is not None and ("theta" in values or "sigma" in values):
            process = process.replace(
                theta=values.get("theta", process.theta),
                sigma=values.get("sigma", process.sigma),
            )
        emission = self.emission
        if isinstance(emission, PoissonScaleEmission):
            if "alpha" in values:
                emission = PoissonScaleEmission(alpha=values["alpha"])
        else:
            curves = []
            for curve, coefficients in ((1, emission.omega1), (2, emission.omega2)):
                names = omega_names(curve, len(coefficients))
                omega = [values.get(name, current) for name, current in zip(names, coefficients.omega)]
                curves.append(SplineCoefficients(omega))
            emission = emission.with_curves(phi=values.get("phi", emission.phi), omega1=curves[0], omega2=curves[1])
        return replace(self, process=process, emission=emission)


# Прямой алгоритм

def log_emission_matrix(sequences, spec):
    counts = np.concatenate([sequence.counts for sequence in sequences])
    ages = genders = None
    if spec.emission.needs_covariates:
        if not all(sequence.has_covariates for sequence in sequences):
            raise InvalidArgumentError("Модель наблюдений требует возраст и пол для каждого наблюдения.")
        ages = np.concatenate([sequence.ages for sequence in sequences])
        genders = np.concatenate([sequence.genders for sequence in sequences])
    midpoints = np.zeros(1) if spec.stateless else spec.grid.midpoints
    return spec.emission.log_density_matrix(counts, midpoints, ages, genders)


def _forward_batch(sequences, spec, cache):
    """Логарифмы правдоподобия для списка последовательностей; шаги выполняются для всех сразу."""
    log_emissions = log_emission_matrix(sequences, spec)
    if spec.stateless:
        offsets = np.cumsum([0] + [len(sequence) for sequence in sequences])
        return np.array([log_emissions[start:stop, 0].sum() for start, stop in zip(offsets[:-1], offsets[1:])])

    n = len(sequences)
    lengths = np.array([len(sequence) for sequence in sequences])
    offsets = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    longest = int(lengths.max())
    gap_keys = np.zeros((n, max(longest - 1, 0)), dtype=np.int64)
    for row, sequence in enumerate(sequences):
        gap_keys[row, :len(sequence) - 1] = np.rint(sequence.gaps / DELTA_QUANTUM).astype(np.int64)

    with np.errstate(divide="ignore"):
        log_initial = np.log(spec.initial_distribution().probabilities)

    loglik = np.zeros(n)
    forward = np.empty((n, spec.grid.m))
    rows = np.arange(n)
    log_weights = log_initial[np.newaxis, :] + log_emissions[offsets]
    for step in range(longest):
        if step > 0:
            rows = np.flatnonzero(lengths > step)
            keys = gap_keys[rows, step - 1]
            predicted = np.empty((rows.size, spec.grid.m))
            for key in np.unique(keys):
                selected = keys == key
                matrix = cache.get(spec.process, spec.grid, key * DELTA_QUANTUM)
                predicted[selected] = forward[rows[selected]] @ matrix.entries
            with np.errstate(divide="ignore"):
                log_weights = np.log(predicted) + log_emissions[offsets[rows] + step]

        shift = log_weights.max(axis=1)
        if not np.all(np.isfinite(shift)):
            raise NumericFailureError(
                f"Прямой алгоритм: нулевое или нечисловое правдоподобие на шаге {step}.", step=step
            )
        weights = np.exp(log_weights - shift[:, np.newaxis])
        totals = weights.sum(axis=1)
        forward[rows] = weights / totals[:, np.newaxis]
        loglik[rows] += shift + np.log(totals)
    if not np.all(np.isfinite(loglik)):
        raise NumericFailureError("Прямой алгоритм вернул нечисловое значение.", step=longest - 1)
    return loglik


def forward_loglik(seq, spec, cache=None):
    cache = MatrixCache() if cache is None else cache
    return float(_forward_batch([seq], spec, cache)[0])


def brute_force_loglik(seq, spec):
    """Полная (T+1)-кратная сумма по интервалам; только для малых m и T."""
    if spec.stateless:
        return float(log_emission_matrix([seq], spec)[:, 0].sum())
    m = spec.grid.m
    n_obs = len(seq)
    n_paths = m ** n_obs
    if n_paths > BRUTE_FORCE_LIMIT:
        raise TooLargeError(f"Перебор {m}^{n_obs} = {n_paths} путей превышает предел {BRUTE_FORCE_LIMIT}.")

    cache = MatrixCache()
    log_emissions = log_emission_matrix([seq], spec)
    with np.errstate(divide="ignore"):
        log_initial = np.log(spec.initial_distribution().probabilities)
        log_transitions = [np.log(cache.get(spec.process, spec.grid, gap).entries) for gap in seq.gaps]

    total = -np.inf
    chunk = 200_000
    for start in range(0, n_paths, chunk):
        paths = np.array(np.unravel_index(np.arange(start, min(start + chunk, n_paths)), (m,) * n_obs))
        log_joint = log_initial[paths[0]] + log_emissions[0, paths[0]]
        for step in range(1, n_obs):
            log_joint = log_joint + log_transitions[step - 1][paths[step - 1], paths[step]]
            log_joint = log_joint + log_emissions[step, paths[step]]
        total = np.logaddexp(total, logsumexp(log_joint))
    return float(total)


def sequence_logliks(panel, spec, cache=None, threads=1):
    """Вклады индивидов в порядке идентификаторов."""
    cache = MatrixCache() if cache is None else cache
    ordered = as_panel(panel).ordered()
    sequences = [sequence for _, sequence in ordered]
    if threads <= 1 or len(sequences) < 2 * threads:
        values = _forward_batch(sequences, spec, cache)
    else:
        chunks = np.array_split(np.arange(len(sequences)), threads)
        with ThreadPoolExecutor(max_workers=threads) as executor:
            parts = executor.map(lambda idx: _forward_batch([sequences[i] for i in idx], spec, cache), chunks)
            values = np.concatenate(list(parts))
    return [key for key, _ in ordered], values


def panel_loglik(panel, spec, cache=None, threads=1):
    _, values = sequence_logliks(panel, spec, cache, threads)
    # numpy суммирует попарно; порядок слагаемых фиксирован идентификаторами
    return float(np.sum(values))


# Параметризация и стартовые значения

class Parameterization:
    """Свободные параметры <-> вектор на преобразованной шкале (log для положительных)."""

    def __init__(self, template, free):
        available = template.parameter_values()
        free = tuple(free)
        if not free:
            raise InvalidArgumentError("Нужен хотя бы один свободный параметр.")
        unknown = [name for name in free if name not in available]
        if unknown:
            raise InvalidArgumentError(f"Неизвестные параметры модели: {', '.join(unknown)}.")
        self.template = template
        self.names = free
        self.log_scaled = np.array([name in LOG_PARAMETERS for name in free])

    def __len__(self):
        return len(self.names)

    def to_vector(self, values):
        vector = np.array([float(values[name]) for name in self.names])
        if np.any(vector[self.log_scaled] <= 0):
            raise InvalidArgumentError("Положительные параметры должны быть больше нуля.")
        vector[self.log_scaled] = np.log(vector[self.log_scaled])
        return vector

    def to_values(self, vector):
        vector = np.asarray(vector, dtype=float).copy()
        vector[self.log_scaled] = np.exp(vector[self.log_scaled])
        return dict(zip(self.names, vector.tolist()))

    def spec(self, vector):
        return self.template.with_parameters(self.to_values(vector))


def default_free(template):
    return tuple(template.parameter_values())


def _log_proxy(counts):
    return np.log(np.asarray(counts, dtype=float) + 0.5)


def starting_values(data, template, free):
    """
    Грубые стартовые значения: лог-счёты как заменитель состояния (метод моментов
    для theta, sigma) и безлатентная лог-линейная подгонка для alpha, phi, omega.
    """
    panel = as_panel(data)
    ordered = [sequence for _, sequence in panel.ordered()]
    counts = np.concatenate([sequence.counts for sequence in ordered]).astype(float)
    proxy = _log_proxy(counts)
    values = template.parameter_values()
    emission = template.emission

    if isinstance(emission, PoissonScaleEmission):
        level = np.full(counts.size, proxy.mean())
        design = None
    else:
        ages = np.concatenate([sequence.ages for sequence in ordered])
        genders = np.concatenate([sequence.genders for sequence in ordered])
        basis_values = design_matrix(emission.basis, ages)
        design = np.hstack([basis_values, basis_values * genders[:, np.newaxis]])
        omega, *_ = np.linalg.lstsq(design, proxy, rcond=None)
        level = design @ omega

    residual = proxy - level
    total_var = max(float(residual.var()), 1e-6)
    state_var = 0.0
    if not template.stateless:
        noise_var = float(np.mean(1.0 / (counts + 0.5)))
        state_var = max(total_var - noise_var, 0.25 * total_var, 1e-4)

    if isinstance(emission, PoissonScaleEmission):
        values["alpha"] = max(float(counts.mean()) * np.exp(-state_var / 2.0), 1e-3)
    else:
        nu = np.exp(level)
        omega[:emission.basis.basis_count] += np.log(counts.mean() / nu.mean()) - state_var / 2.0
        count = emission.basis.basis_count
        for name, value in zip(omega_names(1, count) + omega_names(2, count), omega):
            values[name] = float(value)
        nu = np.exp(design @ omega + state_var / 2.0)
        excess = float(np.mean((counts - nu) ** 2 - nu))
        values["phi"] = float(np.clip(np.mean(nu ** 2) / excess, 0.05, 100.0)) if excess > 0 else 100.0

    if not template.stateless:
        pairs = [(residual_seq[:-1], residual_seq[1:], sequence.gaps)
                 for residual_seq, sequence in zip(np.split(residual, np.cumsum([len(s) for s in ordered])[:-1]), ordered)
                 if len(sequence) > 1]
        theta = 0.1
        if pairs:
            lead = np.concatenate([pair[0] for pair in pairs])
            lag = np.concatenate([pair[1] for pair in pairs])
            gap = float(np.median(np.concatenate([pair[2] for pair in pairs])))
            if lead.size > 2 and lead.std() > 0 and lag.std() > 0:
                observed = float(np.corrcoef(lead, lag)[0, 1])
                # шум наблюдений ослабляет автокорреляцию состояния
                rho = float(np.clip(observed * total_var / state_var, 0.05, 0.95))
                theta = -np.log(rho) / gap
        values["theta"] = theta
        values["sigma"] = float(np.sqrt(2.0 * theta * state_var))

    template_values = template.parameter_values()
    return {name: (values[name] if name in free else template_values[name]) for name in template_values}


# Оптимизация

@dataclass(frozen=True)
class FitOptions:
    method: str = "nelder-mead"
    refine: bool = True
    maxiter: int = 4000
    xatol: float = 1e-6
    fatol: float = 1e-7
    n_starts: int | None = None
    jitter: float = 0.1
    panel_starts: int = 3
    seed: int = 0
    threads: int = 1
    compute_ci: bool = True
    start: str = "auto"

    def __post_init__(self):
        if self.method not in ("nelder-mead", "bfgs"):
            raise InvalidArgumentError(f"Неизвестный метод оптимизации: {self.method}.")
        if self.start not in ("auto", "template"):
            raise InvalidArgumentError(f"Неизвестный способ выбора старта: {self.start}.")


@dataclass
class Convergence:
    status: str
    message: str
    iterations: int
    evaluations: int
    seconds: float
    gradient_norm: float | None = None
    near_singular: bool | None = None
    starts: int = 1

    @property
    def converged(self):
        return self.status == "converged"


@dataclass
class FitResult:
    model: str
    estimates: dict
    loglik: float
    n_params: int
    convergence: Convergence
    spec: ModelSpec
    free: tuple
    se: dict = field(default_factory=dict)
    ci95: dict = field(default_factory=dict)
    grid: Grid | None = None
    seed: int | None = None
    diagnostics: list = field(default_factory=list)

    @property
    def aic(self):
        return aic(self)

    @property
    def neg_llk(self):
        return -self.loglik

    @property
    def m_used(self):
        return None if self.grid is None else self.grid.m

    @property
    def limiting_law(self):
        return None if self.spec.stateless else self.spec.process.stationary_law()

    def fixed(self):
        values = self.spec.parameter_values()
        return {name: value for name, value in values.items() if name not in self.free}

    def to_report(self):
        law = self.limiting_law
        return {
            "model": self.model,
            "estimates": dict(self.estimates),
            "fixed": self.fixed(),
            "se": dict(self.se),
            "ci95": {name: list(bounds) if bounds is not None else None for name, bounds in self.ci95.items()},
            "loglik": self.loglik,
            "neg_llk": self.neg_llk,
            "aic": self.aic,
            "n_params": self.n_params,
            "limiting_sd": None if law is None else float(law.sd),
            "convergence": {
                "status": self.convergence.status,
                "iterations": self.convergence.iterations,
                "evaluations": self.convergence.evaluations,
                "seconds": self.convergence.seconds,
                "gradient_norm": self.convergence.gradient_norm,
                "near_singular": self.convergence.near_singular,
                "starts": self.convergence.starts,
                "message": self.convergence.message,
            },
            "grid": None if self.grid is None else self.grid.as_dict(),
            "seed": self.seed,
            "diagnostics": list(self.diagnostics),
        }


def aic(fit):
    return 2.0 * fit.n_params - 2.0 * fit.loglik


class _Objective:
    """Отрицательное лог-правдоподобие на преобразованной шкале со счётчиком вызовов."""

    def __init__(self, panel, parameterization, threads=1):
        self.panel = panel
        self.parameterization = parameterization
        self.threads = threads
        self.cache = MatrixCache()
        self.evaluations = 0

    def exact(self, vector):
        self.evaluations += 1
        spec = self.parameterization.spec(vector)
        return -panel_loglik(self.panel, spec, self.cache, self.threads)

    def __call__(self, vector):
        try:
            value = self.exact(vector)
        except (StateSpaceError, FloatingPointError, OverflowError) as exc:
            logger.debug("Точка %s отброшена: %s", np.round(vector, 4), exc)
            return np.inf
        return value if np.isfinite(value) else np.inf


def central_gradient(objective, x, step=GRADIENT_STEP):
    x = np.asarray(x, dtype=float)
    gradient = np.empty(x.size)
    for i in range(x.size):
        h = step * (1.0 + abs(x[i]))
        forward, backward = x.copy(), x.copy()
        forward[i] += h
        backward[i] -= h
        gradient[i] = (objective(forward) - objective(backward)) / (2.0 * h)
    return gradient


def central_hessian(objective, x, step=HESSIAN_STEP):
    x = np.asarray(x, dtype=float)
    n = x.size
    h = step * (1.0 + np.abs(x))
    center = objective(x)
    hessian = np.empty((n, n))
    for i in range(n):
        plus, minus = x.copy(), x.copy()
        plus[i] += h[i]
        minus[i] -= h[i]
        hessian[i, i] = (objective(plus) - 2.0 * center + objective(minus)) / h[i] ** 2
        for j in range(i + 1, n):
            corners = []
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                point = x.copy()
                point[i] += si * h[i]
                point[j] += sj * h[j]
                corners.append(objective(point))
            value = (corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * h[i] * h[j])
            hessian[i, j] = hessian[j, i] = value
    return hessian


@dataclass
class FisherInfo:
    hessian: np.ndarray
    covariance: np.ndarray
    defined: np.ndarray
    positive_definite: bool
    near_singular: bool
    diagnostics: list


def fisher_from_objective(objective, x_hat, step=HESSIAN_STEP):
    """Наблюдаемая информация Фишера: численный гессиан отрицательного лог-правдоподобия в оптимуме."""
    hessian = central_hessian(objective, x_hat, step)
    diagnostics = []
    if not np.all(np.isfinite(hessian)):
        diagnostics.append("Гессиан содержит нечисловые элементы.")
        n = hessian.shape[0]
        return FisherInfo(hessian, np.full((n, n), np.nan), np.zeros(n, dtype=bool), False, True, diagnostics)

    eigenvalues, eigenvectors = np.linalg.eigh(hessian)
    scale = max(float(np.abs(eigenvalues).max()), 1e-300)
    near_singular = bool(eigenvalues.min() <= 1e-8 * scale)
    positive_definite = bool(eigenvalues.min() > 0)
    if positive_definite:
        covariance = np.linalg.inv(hessian)
        defined = np.diag(covariance) > 0
    else:
        diagnostics.append("Гессиан не положительно определён: стандартные ошибки части параметров не определены.")
        covariance = np.linalg.pinv(hessian)
        bad = eigenvalues <= 1e-8 * scale
        affected = np.any(np.abs(eigenvectors[:, bad]) > 1e-3, axis=1)
        defined = ~affected & (np.diag(covariance) > 0)
    if near_singular:
        diagnostics.append("Гессиан почти вырожден: параметры, вероятно, неидентифицируемы.")
    return FisherInfo(hessian, covariance, defined, positive_definite, near_singular, diagnostics)


@dataclass
class ConfidenceIntervals:
    se: dict
    ci95: dict
    fisher: FisherInfo


def intervals_from_fisher(parameterization, x_hat, fisher):
    estimates = parameterization.to_values(x_hat)
    se, ci95 = {}, {}
    for i, name in enumerate(parameterization.names):
        if not fisher.defined[i]:
            se[name] = None
            ci95[name] = None
            continue
        se_transformed = float(np.sqrt(fisher.covariance[i, i]))
        estimate = estimates[name]
        if parameterization.log_scaled[i]:
            # дельта-метод; интервал строится на лог-шкале и потому несимметричен
            se[name] = estimate * se_transformed
            ci95[name] = (float(np.exp(x_hat[i] - CI_LEVEL_Z * se_transformed)),
                          float(np.exp(x_hat[i] + CI_LEVEL_Z * se_transformed)))
        else:
            se[name] = se_transformed
            ci95[name] = (estimate - CI_LEVEL_Z * se_transformed, estimate + CI_LEVEL_Z * se_transformed)
    return ConfidenceIntervals(se=se, ci95=ci95, fisher=fisher)


def observed_fisher_ci(fit, data, threads=1):
    parameterization = Parameterization(fit.spec, fit.free)
    objective = _Objective(as_panel(data), parameterization, threads)
    x_hat = parameterization.to_vector(fit.spec.parameter_values())
    fisher = fisher_from_objective(objective.exact, x_hat)
    if fisher.diagnostics:
        for message in fisher.diagnostics:
            logger.warning(message)
    return intervals_from_fisher(parameterization, x_hat, fisher)


@dataclass
class _Outcome:
    x: np.ndarray
    fun: float
    success: bool
    iterations: int
    message: str


def _minimize(objective, x0, options):
    outcome = None
    if options.method == "nelder-mead":
        result = minimize(
            objective, x0, method="Nelder-Mead",
            options={
                "maxiter": options.maxiter,
                "maxfev": options.maxiter * 2,
                "xatol": options.xatol,
                "fatol": options.fatol,
                "adaptive": len(x0) > 4,
            },
        )
        outcome = _Outcome(result.x, float(result.fun), bool(result.success), int(result.nit), str(result.message))
        if not options.refine:
            return outcome
        x0 = outcome.x

    gradient = lambda x: central_gradient(objective, x)  # noqa: E731
    with np.errstate(invalid="ignore", over="ignore"):
        result = minimize(objective, x0, method="BFGS", jac=gradient, options={"maxiter": options.maxiter, "gtol": 1e-4})
    refined = _Outcome(result.x, float(result.fun), bool(result.success), int(result.nit), str(result.message))
    if outcome is None:
        return refined
    if np.isfinite(refined.fun) and refined.fun <= outcome.fun:
        return _Outcome(refined.x, refined.fun, outcome.success or refined.success,
                        outcome.iterations + refined.iterations, f"{outcome.message}; BFGS: {refined.message}")
    return outcome


def fit(data, template, free=None, options=None):
    """Максимизация приближённого правдоподобия по свободным параметрам шаблона."""
    options = options or FitOptions()
    panel = as_panel(data)
    free = default_free(template) if free is None else tuple(free)
    parameterization = Parameterization(template, free)
    objective = _Objective(panel, parameterization, options.threads)
    started = time.perf_counter()

    start_values = template.parameter_values() if options.start == "template" else starting_values(panel, template, free)
    x0 = parameterization.to_vector(start_values)
    try:
        initial_value = objective.exact(x0)
    except StateSpaceError as exc:
        raise InvalidStartError(f"Правдоподобие не вычисляется в стартовой точке: {exc}") from exc
    if not np.isfinite(initial_value):
        raise InvalidStartError("Правдоподобие в стартовой точке не является конечным числом.")

    n_starts = options.n_starts
    if n_starts is None:
        n_starts = options.panel_starts if len(panel) > 1 else 1
    rng = np.random.default_rng(options.seed)
    starts = [x0] + [x0 + rng.normal(0.0, options.jitter, x0.size) for _ in range(n_starts - 1)]
    logger.info("Оценка %s: %d свободных параметров, %d наблюдений, стартов: %d",
                template.family, len(free), panel.n_observations, len(starts))

    best = None
    for index, start in enumerate(starts):
        outcome = _minimize(objective, start, options)
        logger.info("Старт %d: -llk = %.4f (%s)", index + 1, outcome.fun, outcome.message)
        if best is None or outcome.fun < best.fun:
            best = outcome

    fitted = parameterization.spec(best.x)
    loglik = -best.fun
    status = "converged" if best.success and np.isfinite(loglik) else "failed"
    diagnostics = []
    gradient_norm = None
    if np.isfinite(loglik):
        gradient_norm = float(np.abs(central_gradient(objective, best.x)).max())
    if not fitted.coverage_ok:
        diagnostics.append("Сетка уже шести стационарных стандартных отклонений процесса.")
    if not fitted.stateless and not fitted.grid.resolves_mean(fitted.process.stationary_law()):
        diagnostics.append(
            f"Ни одна середина интервала не лежит рядом со стационарным средним (m = {fitted.grid.m}): "
            "при малом sigma модель не сводится к модели без состояния; возьмите нечётное или большее m."
        )
    if isinstance(fitted.emission, NegBinSplineEmission):
        ages = np.concatenate([sequence.ages for _, sequence in panel])
        outside = int((~fitted.emission.basis.in_full_support(ages)).sum())
        if outside:
            diagnostics.append(f"{outside} наблюдений вне участка, где сплайны дают разбиение единицы.")

    result = FitResult(
        model=template.family,
        estimates=parameterization.to_values(best.x),
        loglik=float(loglik),
        n_params=len(free),
        convergence=Convergence(
            status=status,
            message=best.message,
            iterations=best.iterations,
            evaluations=objective.evaluations,
            seconds=0.0,
            gradient_norm=gradient_norm,
            starts=len(starts),
        ),
        spec=fitted,
        free=free,
        grid=fitted.grid,
        seed=options.seed,
        diagnostics=diagnostics,
    )

    if options.compute_ci and status == "converged":
        fisher = fisher_from_objective(objective, best.x)
        intervals = intervals_from_fisher(parameterization, best.x, fisher)
        result.se = intervals.se
        result.ci95 = intervals.ci95
        result.convergence.near_singular = fisher.near_singular
        result.diagnostics.extend(fisher.diagnostics)
        result.convergence.evaluations = objective.evaluations

    result.convergence.seconds = time.perf_counter() - started
    for message in result.diagnostics:
        logger.warning(message)
    logger.info("Готово: %s, -llk = %.4f, AIC = %.2f, %.1f с", status, -loglik, result.aic, result.convergence.seconds)
    return result


def fit_benchmark(panel, emission_template, options=None, free=None):
    """Эталонная модель без латентного процесса: то же уравнение наблюдений без X."""
    template = ModelSpec(process=None, emission=emission_template, grid=None)
    return fit(panel, template, free=free, options=options)
