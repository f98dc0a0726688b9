"""Atomic-unit conversion constants (single source of truth)."""

AU_TIME_S = 2.418884326e-17
AU_FIELD_V_PER_CM = 5.142206747e9


def time_to_si(t):
    return t * AU_TIME_S


def time_from_si(t):
    return t / AU_TIME_S


def field_to_si(f):
    """Field in atomic units -> V/cm."""
    return f * AU_FIELD_V_PER_CM


def field_from_si(f):
    return f / AU_FIELD_V_PER_CM
