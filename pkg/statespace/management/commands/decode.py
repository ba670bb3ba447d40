import numpy as np
from django.core.management.base import CommandError

from statespace.data import read_dataset, read_states
from statespace.decoding import decode_panel
from statespace.discretization import MatrixCache, build_grid
from statespace.exceptions import IngestionError, InvalidArgumentError
from statespace.serializers import DecodeConfigSerializer, load_report, spec_from_report

from ._base import USAGE_ERROR, StateSpaceCommand


def check_grid(spec, config):
    expected = spec.grid
    m = config["m"] if config["m"] is not None else expected.m
    b0, bm = config["range"] if config["range"] is not None else (expected.b0, expected.bm)
    if build_grid(b0, bm, m) != expected:
        raise InvalidArgumentError(
            f"Сетка [{b0:g}, {bm:g}], m={m} не совпадает с сеткой оценки "
            f"[{expected.b0:g}, {expected.bm:g}], m={expected.m}."
        )


def compare_states(decoded, states):
    merged = decoded.merge(states, on=["id", "time"], how="inner")
    if merged.empty:
        raise IngestionError("Истинные состояния не совпадают с данными ни по одной паре (id, time)")
    errors = merged["state_value"] - merged["x"]
    scores = {"matched": int(len(merged)), "mae": float(np.abs(errors).mean())}
    if merged["state_value"].std() > 0 and merged["x"].std() > 0:
        scores["correlation"] = float(np.corrcoef(merged["state_value"], merged["x"])[0, 1])
    else:
        scores["correlation"] = None
    return scores


class Command(StateSpaceCommand):
    help = "Декодирует наиболее вероятные траектории состояний по отчёту оценки"
    config_serializer = DecodeConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument("--fit", help="fit.json команды fit")
        parser.add_argument("--data", help="CSV, на котором проводилась оценка")
        parser.add_argument("--states", help="CSV истинных состояний для сравнения")
        parser.add_argument("--m", type=int, help="Ожидаемое число интервалов")
        parser.add_argument("--range", nargs=2, type=float, metavar=("B0", "BM"))
        parser.add_argument("--unit", choices=["hours", "days", "years"])

    def run(self, config, out):
        report = load_report(config["fit"])
        if report["model"] == "benchmark":
            raise CommandError("У эталонной модели нет латентных состояний: декодировать нечего.", returncode=USAGE_ERROR)
        spec = spec_from_report(report)
        check_grid(spec, config)
        panel = read_dataset(config["data"])
        if spec.emission.needs_covariates and not panel.has_covariates:
            raise IngestionError("Для negbin-spline нужны столбцы age и gender", column="age")
        self.unit = config["unit"]

        _, frame = decode_panel(panel, spec, MatrixCache())
        self.write_table(out, "decoded.csv", frame)
        self.extras["rows"] = int(len(frame))
        if config["states"]:
            scores = compare_states(frame, read_states(config["states"]))
            self.extras.update(scores)
            if scores["correlation"] is not None:
                self.stdout.write(f"Корреляция с истинными состояниями: {scores['correlation']:.3f}")
        self.stdout.write(self.style.SUCCESS(f"Декодировано {len(panel)} индивидов, {len(frame)} наблюдений"))
