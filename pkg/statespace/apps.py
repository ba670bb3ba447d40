from django.apps import AppConfig


class StatespaceConfig(AppConfig):
    name = 'statespace'
    verbose_name = "Непрерывные модели пространства состояний"
