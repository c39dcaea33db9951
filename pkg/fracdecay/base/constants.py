# constants file
import numpy as np

PRESET_FIG1 = "fig1"
PRESET_FIG2 = "fig2"
PRESET_FIG3 = "fig3"
PRESET_FIG4 = "fig4"
PRESET_VACUUM = "vacuum"
PRESET_EMPTY_LATTICE = "empty_lattice"
PRESETS = [
            PRESET_FIG1,
            PRESET_FIG2,
            PRESET_FIG3,
            PRESET_FIG4,
            PRESET_VACUUM,
            PRESET_EMPTY_LATTICE,
        ]

CONFIG_KEYS = [
            "lattice",
            "basis",
            "kmesh",
            "kpath",
            "bands",
            "wigner_seitz",
            "ldos",
            "band_edge",
            "kbe_map",
            "emitter",
            "loss",
            "dynamics",
            "decay",
            "df_scan",
            "run",
        ]

COMMANDS = [
            "bands",
            "ldos",
            "kbe-map",
            "decay",
            "df-scan",
        ]

# real-space points of the rhombic-dodecahedral Wigner-Seitz cell, units of a
WS_GAMMA = "Γ"
WS_POINTS = {
            WS_GAMMA: (0.0, 0.0, 0.0),
            "H": (0.5, 0.0, 0.0),
            "P": (0.25, 0.25, 0.25),
            "N": (0.25, 0.25, 0.0),
        }
WS_ALIASES = {"G": WS_GAMMA, "Gamma": WS_GAMMA}

# Brillouin-zone points of the FCC lattice, units of 2π/a
HIGH_SYMMETRY_K = {
            "Γ": (0.0, 0.0, 0.0),
            "X": (1.0, 0.0, 0.0),
            "W": (1.0, 0.5, 0.0),
            "L": (0.5, 0.5, 0.5),
            "K": (0.75, 0.75, 0.0),
            "U": (1.0, 0.25, 0.25),
        }
X_POINTS = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]

ORIENTATIONS = {
            "x": (1.0, 0.0, 0.0),
            "y": (0.0, 1.0, 0.0),
            "z": (0.0, 0.0, 1.0),
        }

# sphere centres of the conventional cube, units of a
FCC_SITES = np.array([[0.0, 0.0, 0.0],
                      [0.0, 0.5, 0.5],
                      [0.5, 0.0, 0.5],
                      [0.5, 0.5, 0.0]])

TOUCHING_RADIUS = np.sqrt(2.0) / 4.0   # R/a at which neighbouring spheres touch
MAX_RADIUS = 0.5
BZ_VOLUME = 4.0                        # FCC first Brillouin zone, units (2π/a)^3
CELL_VOLUME = 0.25                     # primitive cell, units a^3

EDGE_BAND = 9

WINDOW_LO = 0.95
WINDOW_HI = 1.01
CUTOFF = 1.0e5

WINDOW_BAND_EDGE = "band_edge"
WINDOW_VACUUM = "vacuum"
WINDOW_MODELS = [WINDOW_BAND_EDGE, WINDOW_VACUUM]

# dimensionless coupling β = Γ0/(2π ω_eg) of common emitters
EMITTER_PRESETS = {
            "InAs": 1.0e-8,
            "PbSe": 5.5e-8,
            "interface_defect": 1.0e-6,
        }
OMEGA_PBSE = 1.3e15   # s^-1

EPS = 1e-12
