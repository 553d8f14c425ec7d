# Configuration template for the Chow-Künneth workbench
# Copy this file to config.py and adjust the settings for your local environment

# Exceptional self-intersection multiplier used when a blowup(...) expression
# gives no third argument (-1 for a smooth point)
DEFAULT_MULTIPLIER = -1

# Randomized checks
DEFAULT_SEED = 42
ORACLE_FUZZ_CASES = 200
ROUNDTRIP_SAMPLES = 100
RANDOM_NUMERATOR_RANGE = (-5, 5)
RANDOM_DENOMINATOR_RANGE = (1, 4)

# Report settings
DEFAULT_OUTPUT_FORMAT = "text"  # "text" or "machine"
REPORT_OUTPUT_DIR = "analysis_output"
SAVE_REPORTS_BY_DEFAULT = False
REPORT_TIMING = False  # timings make machine reports differ between runs

# Display
SHOW_PROGRESS = True
