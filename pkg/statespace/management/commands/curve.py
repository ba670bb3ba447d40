import numpy as np
import pandas as pd
from django.core.management.base import CommandError

from statespace.serializers import CurveConfigSerializer, load_report, spec_from_report
from statespace.splines import curve_eval

from ._base import USAGE_ERROR, StateSpaceCommand

CURVE_COLUMNS = ["age", "f1", "f2", "male", "female"]


def age_effect_frame(emission, ages):
    f1 = curve_eval(emission.basis, emission.omega1, ages)
    f2 = curve_eval(emission.basis, emission.omega2, ages)
    return pd.DataFrame({"age": ages, "f1": f1, "f2": f2, "male": np.exp(f1), "female": np.exp(f1 + f2)})[CURVE_COLUMNS]


class Command(StateSpaceCommand):
    help = "Кривые эффекта возраста для мужчин и женщин по отчёту оценки negbin-spline"
    config_serializer = CurveConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument("--fit", help="fit.json модели negbin-spline или эталонной модели")
        parser.add_argument("--age-from", type=float)
        parser.add_argument("--age-to", type=float)
        parser.add_argument("--age-step", type=float)

    def run(self, config, out):
        spec = spec_from_report(load_report(config["fit"]))
        if not spec.emission.needs_covariates:
            raise CommandError("В отчёте нет сплайновых кривых возраста.", returncode=USAGE_ERROR)
        count = int(np.floor((config["age_to"] - config["age_from"]) / config["age_step"] + 1e-9)) + 1
        ages = config["age_from"] + config["age_step"] * np.arange(count)
        frame = age_effect_frame(spec.emission, ages)
        self.write_table(out, "curve.csv", frame)
        self.unit = "years"
        if self.verbosity >= 2:
            self.show_table(frame)
        self.stdout.write(self.style.SUCCESS(f"Кривая вычислена в {len(frame)} точках"))
