"""Physical constants and unit helpers."""

import math

SPEED_OF_LIGHT = 2.99792458e8  # m/s


def carrier_wavelength(carrier_freq_hz: float) -> float:
    """Wavelength in meters for a carrier frequency in hertz."""
    if carrier_freq_hz <= 0:
        raise ValueError(f"carrier frequency must be positive, got {carrier_freq_hz}")
    return SPEED_OF_LIGHT / carrier_freq_hz


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x_lin: float) -> float:
    return 10.0 * math.log10(x_lin)
