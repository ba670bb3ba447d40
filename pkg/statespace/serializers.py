import math
from pathlib import Path

from django.conf import settings
from rest_framework import serializers
from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from .discretization import build_grid
from .emissions import NegBinSplineEmission, PoissonScaleEmission
from .exceptions import IngestionError
from .inference import ModelSpec, omega_names
from .simulation import SETTINGS
from .splines import DEFAULT_BASIS, SplineCoefficients
from .state_process import OUParams

FAMILIES = ["poisson-scale", "negbin-spline", "benchmark"]
METHODS = ["nelder-mead", "bfgs"]
UNITS = ["hours", "days", "years"]


def statespace_default(key, *path):
    def default():
        value = settings.STATESPACE[key]
        for name in path:
            value = value[name]
        return value
    return default


class CommaSeparatedListField(serializers.ListField):
    """Списки в конфигурационных файлах пишутся через запятую."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = [item.strip() for item in data.split(",") if item.strip()]
        return super().to_internal_value(data)


class FiniteFloatField(serializers.FloatField):
    """В JSON нет NaN и бесконечностей: такие значения пишутся как null."""

    def __init__(self, **kwargs):
        kwargs.setdefault("allow_null", True)
        super().__init__(**kwargs)

    def to_representation(self, value):
        if value is None:
            return None
        value = float(value)
        return value if math.isfinite(value) else None


def _existing_file(value):
    if not Path(value).is_file():
        raise serializers.ValidationError(f"Файл не найден: {value}")
    return value


def _validate_range(data):
    bounds = data.get("range")
    if bounds is not None and not bounds[0] < bounds[1]:
        raise serializers.ValidationError({"range": "Левая граница сетки должна быть меньше правой."})


class RunConfigSerializer(serializers.Serializer):
    out = serializers.CharField(default=".")
    seed = serializers.IntegerField(min_value=0, default=0)
    threads = serializers.IntegerField(min_value=1, default=statespace_default("THREADS"))


class SeededRunConfigSerializer(RunConfigSerializer):
    """Команды со случайностью: без явного seed результат невоспроизводим."""

    seed = serializers.IntegerField(
        min_value=0, error_messages={"required": "Укажите --seed: команда использует случайные числа."},
    )


class OptimizerConfigMixin(serializers.Serializer):
    method = serializers.ChoiceField(choices=METHODS, default=statespace_default("OPTIMIZER", "method"))
    refine = serializers.BooleanField(default=statespace_default("OPTIMIZER", "refine"))
    maxiter = serializers.IntegerField(min_value=1, default=statespace_default("OPTIMIZER", "maxiter"))
    starts = serializers.IntegerField(min_value=1, required=False, allow_null=True, default=None)


class SettingField(serializers.IntegerField):
    def __init__(self, **kwargs):
        kwargs.setdefault("error_messages", {"invalid": "Настройка задаётся номером 1, 2 или 3."})
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if value not in SETTINGS:
            valid = ", ".join(map(str, SETTINGS))
            raise serializers.ValidationError(f"Настройка {value} не существует; допустимы: {valid}.")
        return value


class SimulateConfigSerializer(SeededRunConfigSerializer):
    setting = SettingField(required=False, allow_null=True, default=None)
    panel = serializers.BooleanField(default=False)
    T = serializers.IntegerField(min_value=2, default=statespace_default("SIM_T"))
    alpha = serializers.FloatField(default=statespace_default("SIM_ALPHA"))
    gap_mean_hours = serializers.FloatField(default=statespace_default("GAP_MEAN_HOURS"))
    individuals = serializers.IntegerField(min_value=1, default=statespace_default("PANEL_INDIVIDUALS"))
    dropout = serializers.FloatField(min_value=0.0, max_value=0.99, default=statespace_default("PANEL_DROPOUT"))

    def validate_alpha(self, value):
        if value <= 0:
            raise serializers.ValidationError("alpha должен быть положительным числом.")
        return value

    def validate_gap_mean_hours(self, value):
        if value <= 0:
            raise serializers.ValidationError("Средний зазор должен быть положительным.")
        return value

    def validate(self, data):
        if data.get("setting") is None and not data.get("panel"):
            raise serializers.ValidationError({"setting": "Укажите номер настройки (1–3) или --panel."})
        if data.get("setting") is not None and data.get("panel"):
            raise serializers.ValidationError({"panel": "Настройка и панель взаимоисключающие."})
        return data


class FitConfigSerializer(OptimizerConfigMixin, SeededRunConfigSerializer):
    data = serializers.CharField()
    family = serializers.ChoiceField(choices=FAMILIES, default="poisson-scale")
    grid = serializers.ChoiceField(choices=["auto", "manual"], default="auto")
    m = serializers.IntegerField(min_value=2, default=statespace_default("DEFAULT_M"))
    range = CommaSeparatedListField(child=serializers.FloatField(), min_length=2, max_length=2,
                                    required=False, allow_null=True, default=None)
    ci = serializers.BooleanField(default=True)
    unit = serializers.ChoiceField(choices=UNITS, required=False, allow_null=True, default=None)

    def validate_data(self, value):
        return _existing_file(value)

    def validate(self, data):
        _validate_range(data)
        if data.get("range") is not None:
            data["grid"] = "manual"
        elif data.get("grid") == "manual":
            raise serializers.ValidationError({"range": "Для ручной сетки нужен диапазон --range B0 BM."})
        return data


class DecodeConfigSerializer(RunConfigSerializer):
    fit = serializers.CharField()
    data = serializers.CharField()
    states = serializers.CharField(required=False, allow_null=True, default=None)
    m = serializers.IntegerField(min_value=2, required=False, allow_null=True, default=None)
    range = CommaSeparatedListField(child=serializers.FloatField(), min_length=2, max_length=2,
                                    required=False, allow_null=True, default=None)
    unit = serializers.ChoiceField(choices=UNITS, required=False, allow_null=True, default=None)

    def validate_fit(self, value):
        return _existing_file(value)

    def validate_data(self, value):
        return _existing_file(value)

    def validate_states(self, value):
        return None if value is None else _existing_file(value)

    def validate(self, data):
        _validate_range(data)
        return data


class SweepConfigSerializer(OptimizerConfigMixin, SeededRunConfigSerializer):
    setting = SettingField(default=2)
    T = serializers.IntegerField(min_value=2, default=statespace_default("SIM_T"))
    m_values = CommaSeparatedListField(child=serializers.IntegerField(min_value=2), min_length=1,
                                       default=statespace_default("SWEEP_M_VALUES"))
    range = CommaSeparatedListField(child=serializers.FloatField(), min_length=2, max_length=2,
                                    default=statespace_default("SIM_RANGE"))

    def validate_m_values(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError("Значения m не должны повторяться.")
        return value

    def validate(self, data):
        _validate_range(data)
        return data


class ConsistencyConfigSerializer(OptimizerConfigMixin, SeededRunConfigSerializer):
    setting = SettingField(default=2)
    T_values = CommaSeparatedListField(child=serializers.IntegerField(min_value=2), min_length=1,
                                       required=False, allow_null=True, default=None)
    full = serializers.BooleanField(default=False)
    replicates = serializers.IntegerField(min_value=1, default=statespace_default("CONSISTENCY_REPLICATES"))
    m = serializers.IntegerField(min_value=2, default=statespace_default("DEFAULT_M"))
    range = CommaSeparatedListField(child=serializers.FloatField(), min_length=2, max_length=2,
                                    default=statespace_default("SIM_RANGE"))
    workers = serializers.IntegerField(min_value=1, default=1)
    evaluate_only = serializers.BooleanField(default=False)

    def validate(self, data):
        _validate_range(data)
        if data.get("T_values") is None:
            key = "FULL_T_VALUES" if data.get("full") else "CONSISTENCY_T_VALUES"
            data["T_values"] = list(settings.STATESPACE[key])
        return data


class CurveConfigSerializer(RunConfigSerializer):
    fit = serializers.CharField()
    age_from = serializers.FloatField(default=DEFAULT_BASIS.domain[0])
    age_to = serializers.FloatField(default=DEFAULT_BASIS.domain[1])
    age_step = serializers.FloatField(default=0.5)

    def validate_fit(self, value):
        return _existing_file(value)

    def validate_age_step(self, value):
        if value <= 0:
            raise serializers.ValidationError("Шаг по возрасту должен быть положительным.")
        return value

    def validate(self, data):
        low, high = DEFAULT_BASIS.domain
        if not low <= data["age_from"] < data["age_to"] <= high:
            raise serializers.ValidationError({"age_from": f"Нужно {low:g} ≤ age_from < age_to ≤ {high:g}."})
        return data


class PathsConfigSerializer(SeededRunConfigSerializer):
    setting_list = CommaSeparatedListField(child=SettingField(), min_length=1, default=lambda: list(SETTINGS))
    fit = serializers.CharField(required=False, allow_null=True, default=None)
    step = serializers.FloatField(default=statespace_default("EULER_STEP"))
    horizon = serializers.FloatField(default=statespace_default("EULER_HORIZON"))
    n_paths = serializers.IntegerField(min_value=1, default=1)

    def validate_fit(self, value):
        return None if value is None else _existing_file(value)

    def validate(self, data):
        if not 0 < data["step"] < data["horizon"]:
            raise serializers.ValidationError({"step": "Нужно 0 < step < horizon."})
        return data


class MatrixConfigSerializer(RunConfigSerializer):
    theta = serializers.FloatField()
    sigma = serializers.FloatField()
    mu = serializers.FloatField(default=0.0)
    delta = serializers.FloatField()
    m = serializers.IntegerField(min_value=2, default=statespace_default("DEFAULT_M"))
    range = CommaSeparatedListField(child=serializers.FloatField(), min_length=2, max_length=2,
                                    required=False, allow_null=True, default=None)

    def validate(self, data):
        for name in ("theta", "sigma", "delta"):
            if data[name] <= 0:
                raise serializers.ValidationError({name: f"{name} должен быть положительным."})
        _validate_range(data)
        return data


class DescribeConfigSerializer(RunConfigSerializer):
    data = serializers.CharField()

    def validate_data(self, value):
        return _existing_file(value)


# Отчёт об оценивании

class GridSerializer(serializers.Serializer):
    b0 = serializers.FloatField()
    bm = serializers.FloatField()
    m = serializers.IntegerField(min_value=2)


class ConvergenceSerializer(serializers.Serializer):
    status = serializers.ChoiceField(choices=["converged", "failed"])
    iterations = serializers.IntegerField()
    evaluations = serializers.IntegerField()
    seconds = FiniteFloatField()
    gradient_norm = FiniteFloatField(required=False)
    near_singular = serializers.BooleanField(required=False, allow_null=True)
    starts = serializers.IntegerField(required=False, default=1)
    message = serializers.CharField(required=False, allow_blank=True, default="")


class FitReportSerializer(serializers.Serializer):
    model = serializers.ChoiceField(choices=FAMILIES)
    estimates = serializers.DictField(child=FiniteFloatField())
    fixed = serializers.DictField(child=FiniteFloatField(), required=False, default=dict)
    se = serializers.DictField(child=FiniteFloatField(), required=False, default=dict)
    ci95 = serializers.DictField(
        child=serializers.ListField(child=FiniteFloatField(), min_length=2, max_length=2, allow_null=True),
        required=False, default=dict,
    )
    loglik = FiniteFloatField()
    neg_llk = FiniteFloatField(required=False)
    aic = FiniteFloatField()
    n_params = serializers.IntegerField(min_value=1)
    limiting_sd = FiniteFloatField(required=False)
    convergence = ConvergenceSerializer()
    grid = GridSerializer(allow_null=True)
    seed = serializers.IntegerField(allow_null=True, required=False)
    diagnostics = serializers.ListField(child=serializers.CharField(), required=False, default=list)

    def validate(self, data):
        if data["model"] != "benchmark" and data.get("grid") is None:
            raise serializers.ValidationError({"grid": "Отчёт модели с латентным процессом должен содержать сетку."})
        return data


def render_json(payload):
    return JSONRenderer().render(payload, renderer_context={"indent": 2})


def render_report(result):
    return render_json(FitReportSerializer(result.to_report()).data)


def load_report(path):
    with open(path, "rb") as stream:
        try:
            payload = JSONParser().parse(stream)
        except ParseError as exc:
            raise IngestionError(f"Не удалось разобрать отчёт {path}: {exc}") from exc
    serializer = FitReportSerializer(data=payload)
    if not serializer.is_valid():
        raise IngestionError(f"Отчёт {path} не соответствует схеме: {dict(serializer.errors)}")
    return serializer.validated_data


def spec_from_report(report):
    """Модель из отчёта: оценённые значения поверх зафиксированных."""
    values = {**report.get("fixed", {}), **report["estimates"]}
    if "phi" in values:
        count = DEFAULT_BASIS.basis_count
        emission = NegBinSplineEmission(
            phi=values["phi"],
            omega1=SplineCoefficients([values[name] for name in omega_names(1, count)]),
            omega2=SplineCoefficients([values[name] for name in omega_names(2, count)]),
        )
    else:
        emission = PoissonScaleEmission(alpha=values["alpha"])
    if report["model"] == "benchmark":
        return ModelSpec(process=None, emission=emission)
    grid = report["grid"]
    process = OUParams(theta=values["theta"], mu=values.get("mu", 0.0), sigma=values["sigma"])
    return ModelSpec(process=process, emission=emission, grid=build_grid(grid["b0"], grid["bm"], grid["m"]))
