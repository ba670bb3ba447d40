import numpy as np

from statespace.inference import FitOptions
from statespace.serializers import SweepConfigSerializer
from statespace.simulation import ou_setting, run_m_sweep

from ._base import StateSpaceCommand


def sweep_options(config):
    return FitOptions(
        method=config["method"],
        refine=config["refine"],
        maxiter=config["maxiter"],
        n_starts=config["starts"],
        seed=config["seed"],
        threads=config["threads"],
        compute_ci=False,
    )


class Command(StateSpaceCommand):
    help = "Оценивает одну последовательность при разных m: оценки, -llk и время"
    config_serializer = SweepConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument("--setting", type=int)
        parser.add_argument("--T", type=int)
        parser.add_argument("--m-values", help="Список m через запятую, например 20,30,50,100,150")
        parser.add_argument("--range", nargs=2, type=float, metavar=("B0", "BM"))
        parser.add_argument("--method", choices=["nelder-mead", "bfgs"])
        parser.add_argument("--no-refine", dest="refine", action="store_false", default=None)
        parser.add_argument("--maxiter", type=int)
        parser.add_argument("--starts", type=int)

    def run(self, config, out):
        setting = ou_setting(config["setting"], T=config["T"], seed=config["seed"])
        result = run_m_sweep(setting, config["m_values"], tuple(config["range"]), sweep_options(config))
        frame = result.to_frame()
        self.write_table(out, "sweep.csv", frame)
        self.show_table(frame)
        self.unit = "days"

        self.extras["failures"] = {str(m): message for m, message in result.failures.items()}
        for m, message in result.failures.items():
            self.stdout.write(self.style.WARNING(f"m={m}: {message}"))
        if not np.isfinite(frame["neg_llk"]).any():
            self.failure = "Ни одна оценка перебора не удалась."
