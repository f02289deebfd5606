"""Physical constants shared across the toolkit."""

SPEED_OF_LIGHT = 299792458.0     # m/s, exact
ETA0 = 376.730313668             # free-space impedance, ohms
