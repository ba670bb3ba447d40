from statespace.serializers import ConsistencyConfigSerializer
from statespace.simulation import ou_setting, run_consistency_study

from ._base import StateSpaceCommand
from .sweep import sweep_options


class Command(StateSpaceCommand):
    help = "Повторные симуляции и оценки: относительное смещение параметров при росте T"
    config_serializer = ConsistencyConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument("--setting", type=int)
        parser.add_argument("--T-values", help="Список T через запятую")
        parser.add_argument("--full", action="store_true", default=None, help="Добавить T = 10000")
        parser.add_argument("--replicates", type=int)
        parser.add_argument("--m", type=int)
        parser.add_argument("--range", nargs=2, type=float, metavar=("B0", "BM"))
        parser.add_argument("--workers", type=int, help="Число процессов для повторов")
        parser.add_argument("--evaluate-only", action="store_true", default=None,
                            help="Только правдоподобие в истинной точке, без оптимизации")
        parser.add_argument("--method", choices=["nelder-mead", "bfgs"])
        parser.add_argument("--no-refine", dest="refine", action="store_false", default=None)
        parser.add_argument("--maxiter", type=int)
        parser.add_argument("--starts", type=int)

    def run(self, config, out):
        setting = ou_setting(config["setting"], seed=config["seed"])
        result = run_consistency_study(
            setting,
            T_values=config["T_values"],
            n_replicates=config["replicates"],
            m=config["m"],
            grid_range=tuple(config["range"]),
            options=sweep_options(config),
            workers=config["workers"],
            evaluate_only=config["evaluate_only"],
        )
        self.write_table(out, "consistency.csv", result.frame)
        summary = result.summary()
        self.write_table(out, "consistency_summary.csv", summary)
        self.show_table(summary)
        self.unit = "days"

        failed = {str(T): count for T, count in result.failed.items()}
        self.extras["failed"] = failed
        for T, count in failed.items():
            if count:
                self.stdout.write(self.style.WARNING(f"T={T}: {count} неудачных повторов исключены"))
        if summary.empty:
            self.failure = "Ни один повтор не сошёлся."
