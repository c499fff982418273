from .base import _BaseStepper
from .fixed import _FixedStepper
from .normal import _NormalStepper

_STEPPERS = {
    stepper.name: stepper for stepper in (_FixedStepper(), _NormalStepper())
}


def get_stepper(name: str) -> _BaseStepper:
    """Return the step distribution registered under ``name``."""
    try:
        return _STEPPERS[name]
    except KeyError:
        raise ValueError(
            "specified an invalid step distribution: %s" % name
        ) from None


__all__ = ["get_stepper"]
