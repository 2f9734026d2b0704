"""Physical constants and experimental presets.

Energies are in peV, times in seconds, frequencies in kHz unless a name
says otherwise.
"""

# Planck constant: h * (1 kHz) in peV.
H_PEV_PER_KHZ = 4.135667696
# Planck constant in peV * s (for frequencies in Hz).
H_PEV_S = 4.135667696e-3

NU_KHZ = 1.0
KBT_PRESETS_PEV = (1.88, 2.98)
KBT_UNCERTAINTY_PEV = {1.88: 0.21, 2.98: 0.19}

J_COUPLING_HZ = 194.65
TAU_CYCLE_S = 7.7e-3

T1_H_S = 11.67
T1_C_S = 22.97
T2_H_S = 1.31
T2_C_S = 2.57

# qubit ordering used everywhere: carbon (system) first, proton (ancilla) second
SYSTEM = 0
ANCILLA = 1
