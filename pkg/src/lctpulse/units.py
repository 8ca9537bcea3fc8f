"""Unit conventions and conversions.

Everything inside the package works in angular frequency (rad/ns) and time
in ns.  Configuration files, CSV exports and reported numbers use ordinary
frequency in GHz (nu = omega / 2pi).  Conversions happen only at the
boundary (io, cli, summaries); never mix conventions inside the numerics.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def ghz_to_rad_ns(nu):
    """Ordinary frequency in GHz -> angular frequency in rad/ns."""
    return TWO_PI * np.asarray(nu, dtype=float) if np.ndim(nu) else TWO_PI * float(nu)


def rad_ns_to_ghz(omega):
    """Angular frequency in rad/ns -> ordinary frequency in GHz."""
    return np.asarray(omega, dtype=float) / TWO_PI if np.ndim(omega) else float(omega) / TWO_PI
