from statespace.data import describe_panel, read_dataset
from statespace.serializers import DescribeConfigSerializer

from ._base import StateSpaceCommand


class Command(StateSpaceCommand):
    help = "Описательная статистика панели: доля нулей и медиана положительных счётов по возрасту и полу"
    config_serializer = DescribeConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument("--data", help="CSV с колонками id, time, y[, age, gender]")

    def run(self, config, out):
        panel = read_dataset(config["data"])
        overall, table = describe_panel(panel)
        self.extras["overall"] = overall
        for key, value in overall.items():
            self.stdout.write(f"{key}: {value}")
        if table is not None:
            self.write_table(out, "describe.csv", table)
            self.show_table(table, float_format="{:.3f}")
