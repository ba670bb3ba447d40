"""Иерархия ошибок ядра. Команды переводят их в коды возврата."""


class StateSpaceError(Exception):
    pass


class InvalidArgumentError(StateSpaceError, ValueError):
    pass


class OutOfDomainError(InvalidArgumentError):
    pass


class IllConditionedGridError(StateSpaceError):
    pass


class NumericDomainError(StateSpaceError, ArithmeticError):
    pass


class NumericFailureError(StateSpaceError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class TooLargeError(StateSpaceError):
    pass


class InvalidStartError(StateSpaceError):
    pass


class IngestionError(StateSpaceError):
    def __init__(self, message, row=None, column=None):
        location = []
        if row is not None:
            location.append(f"строка {row}")
        if column is not None:
            location.append(f"столбец '{column}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column
