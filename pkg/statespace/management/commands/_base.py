"""
Общая обвязка команд: конфиг key = value, проверка сериализатором,
коды возврата и manifest.json в каталоге --out.
"""
import hashlib
import json
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from statespace.exceptions import IngestionError, InvalidArgumentError, StateSpaceError
from statespace.serializers import render_json

logger = logging.getLogger(__name__)

USAGE_ERROR = 2
INGESTION_ERROR = 3
NUMERIC_ERROR = 4
# не влияют на результат и не входят в хэш конфигурации
UNHASHED_KEYS = ("out", "threads", "workers")


def read_config_file(path):
    """Плоский текстовый формат: key = value, строки с # и пустые пропускаются."""
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CommandError(f"Не удалось прочитать конфигурацию {path}: {exc}", returncode=USAGE_ERROR)
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = line.partition("=")
        if not separator or not key.strip():
            raise CommandError(f"{path}, строка {number}: ожидается 'ключ = значение'.", returncode=USAGE_ERROR)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def file_checksum(path):
    digest = hashlib.sha256()
    with open(path, "rb") as stream:
        for block in iter(lambda: stream.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def config_hash(config):
    hashed = {key: value for key, value in config.items() if key not in UNHASHED_KEYS}
    return hashlib.sha256(json.dumps(hashed, sort_keys=True, default=str).encode()).hexdigest()


def format_errors(errors):
    parts = []
    for field, messages in errors.items():
        if isinstance(messages, dict):
            messages = [f"{key}: {value}" for key, value in messages.items()]
        parts.append(f"{field}: {' '.join(str(message) for message in messages)}")
    return "; ".join(parts)


class StateSpaceCommand(BaseCommand):
    """
    Базовая команда. Подкласс задаёт config_serializer, добавляет свои флаги в
    add_run_arguments и реализует run(config, out).
    """

    config_serializer = None

    def add_arguments(self, parser):
        parser.add_argument("--config", help="Файл конфигурации key = value; флаги имеют приоритет")
        parser.add_argument("--out", help="Каталог для результатов и manifest.json")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--threads", type=int, help="Предел числа потоков")
        self.add_run_arguments(parser)

    def add_run_arguments(self, parser):
        pass

    def load_config(self, options):
        merged = read_config_file(options["config"]) if options.get("config") else {}
        fields = self.config_serializer().fields
        for name, value in options.items():
            if value is not None and name in fields:
                merged[name] = value
        serializer = self.config_serializer(data=merged)
        if not serializer.is_valid():
            raise CommandError(f"Некорректная конфигурация: {format_errors(serializer.errors)}", returncode=USAGE_ERROR)
        return dict(serializer.validated_data)

    def handle(self, *args, **options):
        self.verbosity = options.get("verbosity", 1)
        config = self.load_config(options)
        out = Path(config["out"])
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CommandError(f"Не удалось создать каталог {out}: {exc}", returncode=USAGE_ERROR)

        self.files = {}
        self.extras = {}
        self.unit = None
        self.failure = None
        try:
            self.run(config, out)
        except IngestionError as exc:
            raise CommandError(str(exc), returncode=INGESTION_ERROR)
        except InvalidArgumentError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR)
        except StateSpaceError as exc:
            raise CommandError(str(exc), returncode=NUMERIC_ERROR)
        except OSError as exc:
            raise CommandError(f"Ошибка ввода-вывода ({exc.filename}): {exc.strerror}", returncode=USAGE_ERROR)

        self.write_manifest(config, out)
        if self.failure:
            raise CommandError(self.failure, returncode=NUMERIC_ERROR)

    def run(self, config, out):
        raise NotImplementedError

    def output(self, out, name, writer):
        """writer(path) пишет файл; контрольная сумма попадает в манифест."""
        path = out / name
        writer(path)
        self.files[name] = file_checksum(path)
        return path

    def write_table(self, out, name, frame):
        return self.output(out, name, lambda path: frame.to_csv(path, index=False))

    def show_table(self, frame, float_format="{:.4f}"):
        if self.verbosity >= 1:
            self.stdout.write(frame.to_string(index=False, float_format=float_format.format))

    def write_manifest(self, config, out):
        manifest = {
            "command": self.__module__.rsplit(".", 1)[-1],
            "config": config,
            "config_hash": config_hash(config),
            "seed": config.get("seed"),
            "unit": self.unit,
            "files": dict(self.files),
            **self.extras,
        }
        rendered = render_json(manifest)
        (out / "manifest.json").write_bytes(rendered)
        if self.verbosity >= 2:
            self.stdout.write(rendered.decode("utf-8"))
        if self.verbosity >= 1:
            self.stdout.write(self.style.SUCCESS(f"Результаты записаны в {out}"))
        return manifest

