from django.conf import settings

from statespace.data import write_dataset, write_states
from statespace.serializers import SimulateConfigSerializer
from statespace.simulation import GapLaw, PanelConfig, generate_dataset, generate_panel, ou_setting

from ._base import StateSpaceCommand


class Command(StateSpaceCommand):
    help = "Генерирует набор данных одной из трёх настроек OU или синтетическую панель"
    config_serializer = SimulateConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument("--setting", type=int, help="Номер настройки: 1, 2 или 3")
        parser.add_argument("--T", type=int, help="Число наблюдений")
        parser.add_argument("--alpha", type=float)
        parser.add_argument("--gap-mean-hours", type=float)
        parser.add_argument("--panel", action="store_true", default=None, help="Панель в форме кейс-стади")
        parser.add_argument("--individuals", type=int)
        parser.add_argument("--dropout", type=float, help="Вероятность пропуска волны")

    def run(self, config, out):
        units = settings.STATESPACE["TIME_UNITS"]
        if config["panel"]:
            simulated = generate_panel(PanelConfig(
                n_individuals=config["individuals"],
                dropout=config["dropout"],
                seed=config["seed"],
            ))
            panel, states = simulated.panel, simulated.states
            self.unit = units["panel"]
        else:
            setting = ou_setting(
                config["setting"],
                T=config["T"],
                seed=config["seed"],
                alpha=config["alpha"],
                gap_law=GapLaw(mean_hours=config["gap_mean_hours"]),
            )
            data = generate_dataset(setting)
            panel, states = data.panel, {panel_id: data.states for panel_id in data.panel.ids}
            self.unit = units["setting"]

        self.output(out, "data.csv", lambda path: write_dataset(panel, path))
        self.output(out, "states.csv", lambda path: write_states(states, path))
        self.extras["individuals"] = len(panel)
        self.extras["observations"] = panel.n_observations
        self.stdout.write(
            self.style.SUCCESS(f"Сгенерировано {panel.n_observations} наблюдений по {len(panel)} индивидам")
        )
