from dataclasses import replace

import pandas as pd
from django.conf import settings

from statespace.data import read_dataset
from statespace.discretization import build_grid, default_range
from statespace.emissions import NegBinSplineEmission, PoissonScaleEmission
from statespace.exceptions import IngestionError
from statespace.inference import FitOptions, ModelSpec, default_free, fit, fit_benchmark, starting_values
from statespace.serializers import FitConfigSerializer, render_report
from statespace.splines import SplineCoefficients
from statespace.state_process import OUParams

from ._base import StateSpaceCommand


def initial_template(panel, family, m):
    """Шаблон со стартовыми значениями; сетка для «auto» строится по стартовым OU-параметрам."""
    if family == "negbin-spline" or (family == "benchmark" and panel.has_covariates):
        if not panel.has_covariates:
            raise IngestionError("Для negbin-spline нужны столбцы age и gender", column="age")
        emission = NegBinSplineEmission(phi=1.0, omega1=SplineCoefficients.zeros(), omega2=SplineCoefficients.zeros())
    else:
        emission = PoissonScaleEmission(alpha=1.0)

    if family == "benchmark":
        template = ModelSpec(process=None, emission=emission)
    else:
        template = ModelSpec(process=OUParams(theta=1.0, mu=0.0, sigma=1.0), emission=emission, grid=build_grid(-1.0, 1.0, m))
    return template.with_parameters(starting_values(panel, template, default_free(template)))


def summary_frame(result):
    rows = []
    for name, estimate in result.estimates.items():
        bounds = result.ci95.get(name)
        rows.append({
            "parameter": name,
            "estimate": estimate,
            "se": result.se.get(name),
            "ci_low": None if bounds is None else bounds[0],
            "ci_high": None if bounds is None else bounds[1],
        })
    return pd.DataFrame(rows, columns=["parameter", "estimate", "se", "ci_low", "ci_high"])


class Command(StateSpaceCommand):
    help = "Оценивает модель по CSV: максимизация приближённого правдоподобия, AIC и доверительные интервалы"
    config_serializer = FitConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument("--data", help="CSV с колонками id, time, y[, age, gender]")
        parser.add_argument("--family", choices=["poisson-scale", "negbin-spline", "benchmark"])
        parser.add_argument("--grid", choices=["auto", "manual"])
        parser.add_argument("--m", type=int, help="Число интервалов сетки")
        parser.add_argument("--range", nargs=2, type=float, metavar=("B0", "BM"))
        parser.add_argument("--method", choices=["nelder-mead", "bfgs"])
        parser.add_argument("--refine", action="store_true", default=None)
        parser.add_argument("--no-refine", dest="refine", action="store_false")
        parser.add_argument("--maxiter", type=int)
        parser.add_argument("--starts", type=int, help="Число стартов оптимизатора")
        parser.add_argument("--no-ci", dest="ci", action="store_false", default=None)
        parser.add_argument("--unit", choices=["hours", "days", "years"])

    def run(self, config, out):
        panel = read_dataset(config["data"])
        optimizer = settings.STATESPACE["OPTIMIZER"]
        options = FitOptions(
            method=config["method"],
            refine=config["refine"],
            maxiter=config["maxiter"],
            xatol=optimizer["xatol"],
            fatol=optimizer["fatol"],
            n_starts=config["starts"],
            jitter=optimizer["jitter"],
            panel_starts=optimizer["panel_starts"],
            seed=config["seed"],
            threads=config["threads"],
            compute_ci=config["ci"],
            start="template",
        )
        self.unit = config["unit"]

        template = initial_template(panel, config["family"], config["m"])
        if config["family"] == "benchmark":
            result = fit_benchmark(panel, template.emission, options=options)
        else:
            if config["grid"] == "auto":
                b0, bm = default_range(template.process)
            else:
                b0, bm = config["range"]
            template = replace(template, grid=build_grid(b0, bm, config["m"]))
            self.extras["grid_source"] = config["grid"]
            result = fit(panel, template, options=options)

        self.output(out, "fit.json", lambda path: path.write_bytes(render_report(result)))
        frame = summary_frame(result)
        self.write_table(out, "summary.csv", frame)
        self.show_table(frame)
        self.stdout.write(
            f"-llk = {result.neg_llk:.2f}, AIC = {result.aic:.2f}, k = {result.n_params}, "
            f"{result.convergence.seconds:.1f} с"
        )
        self.extras["status"] = result.convergence.status
        for message in result.diagnostics:
            self.stdout.write(self.style.WARNING(message))
        if not result.convergence.converged:
            self.failure = f"Оптимизация не сошлась: {result.convergence.message}"
