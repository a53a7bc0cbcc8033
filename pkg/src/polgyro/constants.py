"""Physical constants (CODATA 2018, SI)."""

C = 2.99792458e8  # m/s
HBAR = 1.054571817e-34  # J s
H = 6.62607015e-34  # J s
M_E = 9.1093837015e-31  # kg
MEV = 1.602176634e-22  # J per meV
AMU = 1.66053906660e-27  # kg
M_RB87 = 86.909180527 * AMU
