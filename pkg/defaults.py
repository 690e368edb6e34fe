# defaults.py

# Numerical tolerances and output conventions shared by the whole pipeline.
# Every value here can be overridden from the environment (see
# modules/config.py) or from the `tolerances` block of a scenario file.
# Energies are in arbitrary units with hbar = 1.

# --- Spectral decomposition ---
DEGENERACY_TOL = 1e-9      # relative gap below which eigenvalues share a band
ORTHOGONALITY_TOL = 1e-10  # P_m P_n = delta_mn P_m
COMPLETENESS_TOL = 1e-12   # sum_m P_m = 1

# --- Validation of states and operators ---
NORM_TOL = 1e-10           # unit norm of pure states, unit trace of densities
PSD_TOL = 1e-12            # smallest eigenvalue allowed for a density operator
HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
RESIDUE_TOL = 1e-10        # imaginary part discarded from real expectation values
EIGENSTATE_TOL = 1e-10     # || H_A xi - lambda_0 xi || relative to ||H_A||

# --- Work statistics ---
BIN_TOL = 1e-9             # work values closer than this are one point
ZERO_PROBABILITY = 1e-15   # below this a probability is treated as exact zero
NORMALIZATION_TOL = 1e-10

# --- Verification ---
CHECK_TOL = 1e-10

# --- Output ---
CSV_FLOAT_FORMAT = "%.17g"
SCENARIO_VERSION = "tpm-scenario/1"
REPORT_VERSION = "tpm-report/1"

# Names accepted by `--checks` and by `expected_fail` in scenario files.
CHECK_NAMES = [
    "dilation",
    "self_consistency",
    "first_law",
    "strong_repeatability",
    "distribution_equality",
    "weak_conservation",
    "full_conservation",
    "restriction_identity",
    "oracle_agreement",
]

SWEEP_MODES = ["eigenstate-xi", "pointer-equal", "weak-conservation-family"]
