"""
Воспроизведение экспериментов: три настройки OU с пуассоновскими счётами на
нерегулярных моментах, перебор m, исследование состоятельности и синтетические
панели в форме кейс-стади.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .data import ObservationSequence, PanelDataset
from .discretization import build_grid
from .emissions import NegBinSplineEmission, PoissonScaleEmission
from .exceptions import InvalidArgumentError, StateSpaceError
from .inference import FitOptions, ModelSpec, fit, panel_loglik
from .splines import AGE_MAX, AGE_MIN, SplineCoefficients
from .state_process import OUParams, euler_maruyama_ensemble, simulate_exact

logger = logging.getLogger(__name__)

# все три настройки имеют один предельный закон N(0, 0.5^2)
SETTINGS = {
    1: OUParams(theta=0.02, mu=0.0, sigma=0.1),
    2: OUParams(theta=0.5, mu=0.0, sigma=0.5),
    3: OUParams(theta=2.0, mu=0.0, sigma=1.0),
}
SETTING_ALPHA = 200.0
SWEEP_M_VALUES = (20, 30, 50, 100, 150)
SWEEP_RANGE = (-2.5, 2.5)
SWEEP_COLUMNS = ["m", "theta", "sigma", "alpha", "seconds", "neg_llk"]
POISSON_FREE = ("theta", "sigma", "alpha")

# кривая возраст–преступность: рост до 14–15 лет, спад, подъём после двадцати
DEFAULT_OMEGA1 = SplineCoefficients((-0.6, 0.2, -0.2, -0.8, -1.2, -1.3, -1.0, -0.8))
DEFAULT_OMEGA2 = SplineCoefficients((-0.5, -0.7, -0.6, -0.5, -0.5, -0.4, -0.4, -0.4))
CASE_STUDY_PROCESS = OUParams(theta=0.222, mu=0.0, sigma=1.489)
CASE_STUDY_PHI = 0.570
CASE_STUDY_RANGE = (-9.0, 9.0)
# восемь ежегодных волн, затем четыре раз в два года
WAVE_OFFSETS = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 9.0, 11.0, 13.0, 15.0)


@dataclass(frozen=True)
class GapLaw:
    """Зазоры: k ~ Poisson(mean_hours) часов, k = 0 перетягивается, затем перевод в дни."""

    mean_hours: float = 30.0
    hours_per_unit: float = 24.0

    def __post_init__(self):
        if not (self.mean_hours > 0 and self.hours_per_unit > 0):
            raise InvalidArgumentError("Параметры закона зазоров должны быть положительными.")

    def sample(self, n, rng):
        hours = rng.poisson(self.mean_hours, n)
        zero = hours == 0
        while zero.any():
            hours[zero] = rng.poisson(self.mean_hours, int(zero.sum()))
            zero = hours == 0
        return hours / self.hours_per_unit


@dataclass(frozen=True)
class SimSetting:
    process: OUParams
    emission: PoissonScaleEmission
    T: int
    gap_law: GapLaw = field(default_factory=GapLaw)
    seed: int = 0

    def __post_init__(self):
        if self.T < 2:
            raise InvalidArgumentError(f"Нужно не меньше двух наблюдений, получено T={self.T}.")


def ou_setting(number, T=2000, seed=0, alpha=SETTING_ALPHA, gap_law=None):
    if number not in SETTINGS:
        raise InvalidArgumentError(f"Настройка {number} не существует; допустимы: {', '.join(map(str, SETTINGS))}.")
    return SimSetting(
        process=SETTINGS[number],
        emission=PoissonScaleEmission(alpha=alpha),
        T=T,
        gap_law=gap_law or GapLaw(),
        seed=seed,
    )


@dataclass(frozen=True, eq=False)
class SimulatedData:
    sequence: ObservationSequence
    states: object

    @property
    def panel(self):
        return PanelDataset.single(self.sequence)


def generate_dataset(setting, rng=None):
    rng = np.random.default_rng(setting.seed) if rng is None else rng
    gaps = setting.gap_law.sample(setting.T - 1, rng)
    times = np.concatenate(([0.0], np.cumsum(gaps)))
    law = setting.process.stationary_law()
    x0 = law.mean + law.sd * rng.standard_normal()
    states = simulate_exact(setting.process, x0, times, rng)
    counts = setting.emission.sample(states.values, rng)
    return SimulatedData(sequence=ObservationSequence(times=times, counts=counts), states=states)


def poisson_template(setting, m, grid_range):
    grid = build_grid(grid_range[0], grid_range[1], m)
    return ModelSpec(process=setting.process, emission=setting.emission, grid=grid)


# Перебор m

@dataclass
class SweepResult:
    rows: list
    failures: dict = field(default_factory=dict)

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=SWEEP_COLUMNS)

    def render(self):
        frame = self.to_frame()
        return frame.to_string(index=False, float_format=lambda value: f"{value:.4f}")


def run_m_sweep(setting, m_values=SWEEP_M_VALUES, grid_range=SWEEP_RANGE, options=None, data=None):
    """Все m оцениваются на одной и той же последовательности."""
    options = options or FitOptions(compute_ci=False)
    data = generate_dataset(setting) if data is None else data
    rows, failures = [], {}
    for m in m_values:
        template = poisson_template(setting, m, grid_range)
        try:
            result = fit(data.sequence, template, free=POISSON_FREE, options=options)
        except StateSpaceError as exc:
            logger.warning("m=%d: оценка не удалась: %s", m, exc)
            failures[m] = str(exc)
            rows.append({"m": m, "theta": np.nan, "sigma": np.nan, "alpha": np.nan, "seconds": np.nan, "neg_llk": np.nan})
            continue
        if not result.convergence.converged:
            failures[m] = result.convergence.message
        estimates = result.estimates
        rows.append({
            "m": m,
            "theta": estimates["theta"],
            "sigma": estimates["sigma"],
            "alpha": estimates["alpha"],
            "seconds": result.convergence.seconds,
            "neg_llk": result.neg_llk,
        })
        logger.info("m=%d: -llk=%.2f за %.1f с", m, result.neg_llk, result.convergence.seconds)
    return SweepResult(rows=rows, failures=failures)


# Состоятельность

@dataclass
class ConsistencyResult:
    frame: pd.DataFrame
    truth: dict

    @property
    def failed(self):
        return self.frame.groupby("T")["status"].apply(lambda status: int((status != "converged").sum())).to_dict()

    def summary(self):
        """Медиана и межквартильный размах относительного смещения по (T, параметр)."""
        ok = self.frame[self.frame["status"] == "converged"]
        records = []
        for T, group in ok.groupby("T"):
            for name in self.truth:
                bias = group[f"rel_bias_{name}"]
                records.append({
                    "T": T,
                    "parameter": name,
                    "median": float(bias.median()),
                    "iqr": float(bias.quantile(0.75) - bias.quantile(0.25)),
                    "n": int(bias.size),
                })
        return pd.DataFrame(records, columns=["T", "parameter", "median", "iqr", "n"])


def _consistency_replicate(task):
    setting, T, index, m, grid_range, options, evaluate_only = task
    rng = np.random.default_rng([setting.seed, index])
    data = generate_dataset(replace(setting, T=T), rng)
    template = poisson_template(setting, m, grid_range)
    truth = template.parameter_values()
    row = {"T": T, "replicate": index, "status": "converged"}
    try:
        if evaluate_only:
            loglik = panel_loglik(data.panel, template)
            estimates = {name: truth[name] for name in POISSON_FREE}
            if not np.isfinite(loglik):
                row["status"] = "failed"
        else:
            result = fit(data.sequence, template, free=POISSON_FREE, options=options)
            loglik = result.loglik
            estimates = result.estimates
            row["status"] = result.convergence.status
    except StateSpaceError as exc:
        logger.warning("Повтор %d (T=%d) не удался: %s", index, T, exc)
        row.update(status="failed", neg_llk=np.nan)
        for name in POISSON_FREE:
            row[name] = row[f"rel_bias_{name}"] = np.nan
        return row
    row["neg_llk"] = -loglik
    for name in POISSON_FREE:
        row[name] = estimates[name]
        row[f"rel_bias_{name}"] = (estimates[name] - truth[name]) / truth[name]
    return row


def run_consistency_study(setting, T_values=(2000, 5000), n_replicates=50, m=100, grid_range=SWEEP_RANGE,
                          options=None, workers=1, evaluate_only=False):
    """
    Для каждого T генерируются n_replicates независимых наборов и оцениваются при
    фиксированном m. Поток случайных чисел повтора задан парой (seed, номер повтора);
    результаты собираются в порядке номеров.
    """
    options = options or FitOptions(compute_ci=False)
    tasks = []
    for t_index, T in enumerate(T_values):
        for replicate in range(n_replicates):
            tasks.append((setting, T, t_index * n_replicates + replicate, m, grid_range, options, evaluate_only))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_consistency_replicate, tasks))
    else:
        rows = [_consistency_replicate(task) for task in tasks]

    columns = ["T", "replicate", "status", *POISSON_FREE, "neg_llk", *[f"rel_bias_{name}" for name in POISSON_FREE]]
    frame = pd.DataFrame(rows, columns=columns)
    truth = {name: poisson_template(setting, m, grid_range).parameter_values()[name] for name in POISSON_FREE}
    result = ConsistencyResult(frame=frame, truth=truth)
    for T, failed in result.failed.items():
        if failed:
            logger.warning("T=%d: %d неудачных повторов исключены", T, failed)
    return result


# Панели в форме кейс-стади

def default_case_study_emission(phi=CASE_STUDY_PHI):
    return NegBinSplineEmission(phi=phi, omega1=DEFAULT_OMEGA1, omega2=DEFAULT_OMEGA2)


@dataclass(frozen=True)
class PanelConfig:
    n_individuals: int = 1000
    process: OUParams = CASE_STUDY_PROCESS
    emission: NegBinSplineEmission = field(default_factory=default_case_study_emission)
    wave_offsets: tuple = WAVE_OFFSETS
    start_age: tuple = (12.0, 13.0)
    female_share: float = 626 / 1093
    dropout: float = 0.0
    max_gap: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if self.n_individuals < 1:
            raise InvalidArgumentError("В панели должен быть хотя бы один индивид.")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidArgumentError(f"Доля пропусков должна лежать в [0, 1), получено {self.dropout}.")
        if len(self.wave_offsets) < 2 or np.any(np.diff(self.wave_offsets) <= 0) or self.wave_offsets[0] != 0:
            raise InvalidArgumentError("Сдвиги волн должны начинаться с 0 и строго возрастать.")
        youngest, oldest = min(self.start_age), max(self.start_age) + self.wave_offsets[-1]
        if youngest < AGE_MIN or oldest > AGE_MAX:
            raise InvalidArgumentError(
                f"Возраст участников [{youngest:g}, {oldest:g}] выходит за область сплайнов [{AGE_MIN:g}, {AGE_MAX:g}]."
            )


@dataclass(frozen=True, eq=False)
class SimulatedPanel:
    panel: PanelDataset
    states: dict


def _observed_waves(offsets, dropout, max_gap, rng):
    kept = [offsets[0]]
    for j in range(1, len(offsets)):
        last = j == len(offsets) - 1
        if rng.random() < dropout and (last or offsets[j + 1] - kept[-1] <= max_gap):
            continue
        kept.append(offsets[j])
    return np.asarray(kept)


def generate_panel(config):
    rng = np.random.default_rng(config.seed)
    law = config.process.stationary_law()
    sequences, states = [], {}
    width = len(str(config.n_individuals))
    for index in range(config.n_individuals):
        key = str(index + 1).zfill(width)
        times = _observed_waves(config.wave_offsets, config.dropout, config.max_gap, rng)
        start_age = rng.uniform(*config.start_age)
        gender = int(rng.random() < config.female_share)
        path = simulate_exact(config.process, law.mean + law.sd * rng.standard_normal(), times, rng)
        ages = start_age + times
        genders = np.full(times.size, gender)
        counts = config.emission.sample(path.values, rng, ages, genders)
        sequences.append((key, ObservationSequence(times=times, counts=counts, ages=ages, genders=genders)))
        states[key] = path
    panel = PanelDataset(tuple(sequences))
    logger.info("Сгенерирована панель: %d индивидов, %d наблюдений", len(panel), panel.n_observations)
    return SimulatedPanel(panel=panel, states=states)


def case_study_template(emission=None, process=CASE_STUDY_PROCESS, grid_range=CASE_STUDY_RANGE, m=100):
    emission = emission or default_case_study_emission()
    return ModelSpec(process=process, emission=emission, grid=build_grid(grid_range[0], grid_range[1], m))


# Иллюстрации путей

def illustrate_paths(params_by_label, step=0.01, horizon=100.0, seed=0, x0=0.0, n_paths=1):
    """Пути Эйлера–Маруямы из x0 с шагом step; по одному независимому потоку на метку."""
    frames = []
    for index, (label, params) in enumerate(params_by_label.items()):
        rng = np.random.default_rng([seed, index])
        times, values = euler_maruyama_ensemble(params, x0, step, horizon, n_paths, rng)
        for path_index in range(n_paths):
            frame = pd.DataFrame({"label": label, "time": times, "value": values[path_index]})
            if n_paths > 1:
                frame.insert(1, "path", path_index + 1)
            frames.append(frame)
    return pd.concat(frames, ignore_index=True)
