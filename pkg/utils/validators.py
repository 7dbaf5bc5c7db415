from fractions import Fraction

from core.exceptions import InvalidArgument


def validate_positive_rate(v: int) -> int:
    if v <= 0:
        raise ValueError('частота дискретизации должна быть положительной')
    return v


def validate_fraction_value(v: object) -> Fraction:
    """Принимает Fraction, число, строку 'a/b' или пару [a, b]."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return Fraction(int(v[0]), int(v[1]))
    if isinstance(v, dict) and {'numerator', 'denominator'} <= v.keys():
        return Fraction(int(v['numerator']), int(v['denominator']))
    if isinstance(v, (int, float, str)):
        return Fraction(v)
    raise ValueError('ожидалось рациональное число')


def validate_db_range(v: tuple[float, float]) -> tuple[float, float]:
    lo, hi = v
    if lo > hi:
        raise ValueError('нижняя граница диапазона больше верхней')
    return v


def validate_probability(v: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise ValueError('вероятность должна лежать в [0, 1]')
    return v


def require_same_rate(actual: int, expected: int, what: str) -> None:
    """Частоты дискретизации не приводятся неявно: при несовпадении ошибка."""
    if actual != expected:
        raise InvalidArgument(
            f'{what}: частота дискретизации {actual} Гц, '
            f'ожидалась {expected} Гц'
        )
