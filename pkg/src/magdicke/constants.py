"""Physical constants in the unit system used throughout the package.

Energies are in meV, fields in Tesla, temperatures in K, times in ps and
frequencies in THz.
"""

import math

MU_B = 0.05788381806  # meV / T
K_B = 0.08617333262  # meV / K
HBAR = 0.6582119569  # meV ps
C_UM_PER_PS = 299.792458  # speed of light, um / ps

# 1 meV expressed as an ordinary frequency
MEV_TO_THZ = 1.0 / (2.0 * math.pi * HBAR)
