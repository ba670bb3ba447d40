from statespace.serializers import PathsConfigSerializer, load_report, spec_from_report
from statespace.simulation import SETTINGS, illustrate_paths

from ._base import StateSpaceCommand


class Command(StateSpaceCommand):
    help = "Иллюстративные пути OU по схеме Эйлера–Маруямы из нуля"
    config_serializer = PathsConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument("--setting-list", help="Номера настроек через запятую")
        parser.add_argument("--fit", help="Добавить путь с параметрами из fit.json")
        parser.add_argument("--step", type=float)
        parser.add_argument("--horizon", type=float)
        parser.add_argument("--n-paths", type=int)

    def run(self, config, out):
        params = {f"setting {number}": SETTINGS[number] for number in config["setting_list"]}
        if config["fit"]:
            spec = spec_from_report(load_report(config["fit"]))
            if not spec.stateless:
                params["fit"] = spec.process
        frame = illustrate_paths(
            params,
            step=config["step"],
            horizon=config["horizon"],
            seed=config["seed"],
            n_paths=config["n_paths"],
        )
        self.write_table(out, "paths.csv", frame)
        self.extras["labels"] = list(params)
        self.stdout.write(self.style.SUCCESS(f"Смоделировано путей: {len(params) * config['n_paths']}"))
