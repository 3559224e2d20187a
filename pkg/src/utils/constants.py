APP_NAME = "orient8"
APP_VERSION = "1.0.0"

# Environment
THREADS_ENV = "ORIENT8_THREADS"
SLOW_TESTS_ENV = "ORIENT8_SLOW"

# Labels
NUM_ORIENTATIONS = 8

ORIENTATION_NAMES = [
    "initial state",
    "horizontal flip",
    "vertical flip",
    "rotate 180 clockwise",
    "flip along upper-left/lower-right diagonal",
    "rotate 90 clockwise",
    "rotate 270 clockwise",
    "flip along lower-left/upper-right diagonal",
]

MODALITIES = ["C0", "LGE", "T2"]

# Hand-typeset composition and inverse-action tables, kept as the reference
# the derived tables are checked against (`orient8 tables`, tests).
REFERENCE_COMPOSE = [
    [0, 1, 2, 3, 4, 5, 6, 7],
    [1, 0, 3, 2, 5, 4, 7, 6],
    [2, 3, 0, 1, 6, 7, 4, 5],
    [3, 2, 1, 0, 7, 6, 5, 4],
    [4, 6, 5, 7, 0, 2, 1, 3],
    [5, 7, 4, 6, 1, 3, 0, 2],
    [6, 4, 7, 5, 2, 0, 3, 1],
    [7, 5, 6, 4, 3, 1, 2, 0],
]

REFERENCE_INVERSE_ACTION = [
    [0, 1, 2, 3, 4, 5, 6, 7],
    [1, 0, 3, 2, 5, 4, 7, 6],
    [2, 3, 0, 1, 6, 7, 4, 5],
    [3, 2, 1, 0, 7, 6, 5, 4],
    [4, 6, 5, 7, 0, 2, 1, 3],
    [6, 4, 7, 5, 2, 0, 3, 1],
    [5, 7, 4, 6, 1, 3, 0, 2],
    [7, 5, 6, 4, 3, 1, 2, 0],
]

# File formats
CHECKPOINT_MAGIC = b"OR8W"
CHECKPOINT_VERSION = 1
CHECKPOINT_EXTENSION = ".or8w"
IMAGE_MAGIC = b"ORI8"
IMAGE_VERSION = 1
NATIVE_EXTENSION = ".ori8"
PGM_EXTENSIONS = [".pgm"]
MANIFEST_NAME = "manifest.tsv"
SLICE_FILE_PATTERN = "slice_{index:03d}" + NATIVE_EXTENSION

# Network defaults
DEFAULT_INPUT_SIZE = 64
DEFAULT_IN_CHANNELS = 3
DEFAULT_CONV_CHANNELS = (8, 16, 32)
DEFAULT_KERNEL = 3
DEFAULT_HIDDEN_UNITS = 64
SOFTMAX_EPS = 1e-12

# Optimizer / training defaults
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
DEFAULT_LR = 1e-3
DEFAULT_EPOCHS = 30
DEFAULT_BATCH_SIZE = 32
DEFAULT_SEED = 0
TRANSFER_LR_FACTOR = 0.1
TRANSFER_EPOCH_FACTOR = 0.25
MAX_SNAPSHOTS = 5

# Dataset defaults
DEFAULT_SPLIT_RATIOS = (0.5, 0.3, 0.2)
DEFAULT_SWEEP_FRACTIONS = (0.6, 0.5, 0.4, 0.3, 0.2)
DEFAULT_PATIENTS = 45
DEFAULT_SLICES_PER_PATIENT = 5
DEFAULT_IMAGE_SIZE = 64

# Exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_MISSING_FILE = 2
EXIT_FORMAT_ERROR = 3
EXIT_DIVERGED = 4
