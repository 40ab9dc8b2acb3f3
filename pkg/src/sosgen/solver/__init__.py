from .core import (
    DivergenceError,
    RfFrame,
    SourceSignal,
    StabilityError,
    WaveStepper,
    has_compiled_kernels,
    make_tone_burst,
    resample_bandlimited,
    simulate,
)

__all__ = [
    "DivergenceError",
    "RfFrame",
    "SourceSignal",
    "StabilityError",
    "WaveStepper",
    "has_compiled_kernels",
    "make_tone_burst",
    "resample_bandlimited",
    "simulate",
]
