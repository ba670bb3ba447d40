import pandas as pd

from statespace.discretization import build_grid, default_range, transition_matrix
from statespace.serializers import MatrixConfigSerializer
from statespace.state_process import OUParams

from ._base import StateSpaceCommand


class Command(StateSpaceCommand):
    help = "Выгружает матрицу переходов дискретизированного OU-процесса для заданного зазора"
    config_serializer = MatrixConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument("--theta", type=float)
        parser.add_argument("--mu", type=float)
        parser.add_argument("--sigma", type=float)
        parser.add_argument("--delta", type=float, help="Зазор между наблюдениями")
        parser.add_argument("--m", type=int)
        parser.add_argument("--range", nargs=2, type=float, metavar=("B0", "BM"))

    def run(self, config, out):
        process = OUParams(theta=config["theta"], mu=config["mu"], sigma=config["sigma"])
        b0, bm = config["range"] if config["range"] is not None else default_range(process)
        grid = build_grid(b0, bm, config["m"])
        matrix = transition_matrix(process, grid, config["delta"])
        labels = [f"{value:.6g}" for value in grid.midpoints]
        frame = pd.DataFrame(matrix.entries, columns=labels)
        frame.insert(0, "from", labels)
        self.write_table(out, "matrix.csv", frame)
        self.extras["grid"] = grid.as_dict()
        self.extras["captured_mass"] = matrix.captured_mass
        self.stdout.write(f"Минимальная удержанная масса строки: {matrix.captured_mass:.6f}")
