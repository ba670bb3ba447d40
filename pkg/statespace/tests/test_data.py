import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from statespace.data import (
    ObservationSequence, PanelDataset, describe_panel, read_dataset, read_states, write_dataset, write_states,
)
from statespace.exceptions import IngestionError, InvalidArgumentError
from statespace.state_process import SamplePath


class ObservationSequenceTests(SimpleTestCase):
    def test_gaps_and_read_only_arrays(self):
        sequence = ObservationSequence(times=[0.0, 0.5, 2.0], counts=[1, 0, 3])
        np.testing.assert_allclose(sequence.gaps, [0.5, 1.5])
        with self.assertRaises(ValueError):
            sequence.counts[0] = 5

    def test_invalid_sequences(self):
        with self.assertRaises(InvalidArgumentError):
            ObservationSequence(times=[0.0, 0.0], counts=[1, 1])
        with self.assertRaises(InvalidArgumentError):
            ObservationSequence(times=[0.0, 1.0], counts=[1, -1])
        with self.assertRaises(InvalidArgumentError):
            ObservationSequence(times=[0.0, 1.0], counts=[1])
        with self.assertRaises(InvalidArgumentError):
            ObservationSequence(times=[0.0], counts=[1], ages=[15.0])

    def test_covariates(self):
        sequence = ObservationSequence(times=[0.0, 1.0], counts=[0, 2], ages=[12.5, 13.5], genders=[1, 1])
        self.assertTrue(sequence.has_covariates)
        self.assertEqual(sequence.covariates(1).age, 13.5)
        self.assertEqual(len(sequence.covariate_list()), 2)


class PanelDatasetTests(SimpleTestCase):
    def sequence(self):
        return ObservationSequence(times=[0.0, 1.0], counts=[1, 2])

    def test_numeric_ids_sort_numerically(self):
        panel = PanelDataset((("10", self.sequence()), ("2", self.sequence()), ("b", self.sequence())))
        self.assertEqual([key for key, _ in panel.ordered()], ["2", "10", "b"])

    def test_duplicate_and_empty(self):
        with self.assertRaises(InvalidArgumentError):
            PanelDataset((("1", self.sequence()), ("1", self.sequence())))
        with self.assertRaises(InvalidArgumentError):
            PanelDataset(())


class CsvTests(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)
        self.path = Path(self.directory.name) / "data.csv"

    def write(self, text):
        self.path.write_text(text)
        return self.path

    def test_reads_panel_with_covariates(self):
        panel = read_dataset(self.write(
            "id,time,y,age,gender\n1,0,0,12.5,0\n1,1,3,13.5,0\n2,0,1,13.0,1\n2,2,0,15.0,1\n"
        ))
        self.assertEqual(panel.ids, ["1", "2"])
        self.assertTrue(panel.has_covariates)
        self.assertEqual(panel.n_observations, 4)

    def test_write_then_read(self):
        sequence = ObservationSequence(times=[0.0, 1.25, 2.5], counts=[180, 201, 222])
        write_dataset(PanelDataset.single(sequence), self.path)
        panel = read_dataset(self.path)
        np.testing.assert_allclose(dict(panel.sequences)["1"].times, sequence.times)

    def test_rejections_name_row_and_column(self):
        cases = [
            ("id,time,y\n1,0,1\n1,1,-2\n", 3, "y"),
            ("id,time,y\n1,0,1\n1,1,1.5\n", 3, "y"),
            ("id,time,y\n1,0,1\n1,,1\n", 3, "time"),
            ("id,time,y\n1,0,1\n1,abc,1\n", 3, "time"),
            ("id,time,y\n1,0,1\n1,2,1\n1,2,1\n", 4, "time"),
            ("id,time,y,age,gender\n1,0,1,40,0\n", 2, "age"),
            ("id,time,y,age,gender\n1,0,1,20,2\n", 2, "gender"),
        ]
        for text, row, column in cases:
            with self.subTest(text=text):
                with self.assertRaises(IngestionError) as context:
                    read_dataset(self.write(text))
                self.assertEqual((context.exception.row, context.exception.column), (row, column))
                self.assertIn(f"строка {row}", str(context.exception))

    def test_missing_column_and_file(self):
        with self.assertRaises(IngestionError) as context:
            read_dataset(self.write("id,time\n1,0\n"))
        self.assertEqual(context.exception.column, "y")
        with self.assertRaises(IngestionError):
            read_dataset(Path(self.directory.name) / "absent.csv")

    def test_states_file(self):
        path = Path(self.directory.name) / "states.csv"
        write_states({"1": SamplePath(times=[0.0, 1.0], values=[0.1, -0.2])}, path)
        frame = read_states(path)
        self.assertEqual(list(frame.columns), ["id", "time", "x"])
        self.assertEqual(frame["id"].tolist(), ["1", "1"])


class DescribePanelTests(SimpleTestCase):
    def test_zero_share_and_table(self):
        frame = pd.DataFrame({
            "id": ["1", "1", "2", "2"],
            "time": [0.0, 1.0, 0.0, 1.0],
            "y": [0, 4, 0, 2],
            "age": [12.5, 13.5, 14.5, 15.5],
            "gender": [0, 0, 1, 1],
        })
        path = Path(tempfile.mkdtemp()) / "panel.csv"
        frame.to_csv(path, index=False)
        overall, table = describe_panel(read_dataset(path))
        self.assertEqual(overall["zero_share"], 0.5)
        self.assertEqual(overall["positive_median"], 3.0)
        self.assertEqual(int(table["observations"].sum()), 4)
