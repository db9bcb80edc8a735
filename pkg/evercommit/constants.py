from __future__ import annotations

# ---------------------------------------------------------------------------
# Shared constants
# ---------------------------------------------------------------------------

# App folders
LOGS_DIRNAME = "logs"

# Environment variables
ENV_SEED = "EVERCOMMIT_SEED"
ENV_LOG_LEVEL = "EVERCOMMIT_LOG_LEVEL"
ENV_LOG_TO_CONSOLE = "EVERCOMMIT_LOG_TO_CONSOLE"
ENV_LOG_FILE = "EVERCOMMIT_LOG_FILE"

# ---------------------------------------------------------------------------
# Numerics
# ---------------------------------------------------------------------------

TOL = 1e-9

# Dense simulation ceiling (2^12 x 2^12 complex matrices).
DENSE_QUBIT_CAP = 12

# Largest check support accepted in instance files.
MAX_CHECK_SUPPORT = 5

# ---------------------------------------------------------------------------
# Oracles / classical commitment
# ---------------------------------------------------------------------------

# q = s + t + COMMIT_TAG_BITS
COMMIT_TAG_BITS = 64

# Brute-force extraction is only attempted when s + t <= EXTRACT_MAX_BITS.
EXTRACT_MAX_BITS = 24

# ---------------------------------------------------------------------------
# Parameter presets
# ---------------------------------------------------------------------------

PRESET_DEFAULT = "default"
PRESET_SMALL = "small"

PRESETS: dict[str, dict[str, int]] = {
    # desk parameters
    PRESET_DEFAULT: {"msg_len": 8, "mu": 32, "mu_comp": 16, "s": 16, "t": 16, "threshold": 0},
    # statistics-friendly: forging a certificate succeeds with 2^-(mu - mu_comp) = 1/16
    PRESET_SMALL: {"msg_len": 4, "mu": 8, "mu_comp": 4, "s": 8, "t": 8, "threshold": 0},
}

# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

MIN_TRIALS = 100

# S3 retry budget per check (max_retries = RETRIES_PER_CHECK * m)
RETRIES_PER_CHECK = 64

# Bootstrap resamples for total-variation confidence intervals.
TV_BOOTSTRAP_ROUNDS = 200

# Progress callback cadence (trials).
PROGRESS_EVERY = 1000
