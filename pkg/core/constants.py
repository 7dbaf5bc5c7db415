from fractions import Fraction

# ---------------------------- filter bank ----------------------------------

DEFAULT_FRAME_DURATION_S = Fraction(2048, 48000)
HOP_FRACTION = Fraction(1, 2)
MIN_FRAME_LEN = 4

# ----------------------------- features ------------------------------------

DEFAULT_ALPHA = 1.0
# масштаб коэффициентов перед сжатием: как при анализе на этой частоте
FEATURE_REFERENCE_FS = 48000
WHITENING_STD_FLOOR = 1e-8

# ------------------------------ network ------------------------------------

KERNEL_TIME = 3
KERNEL_FREQ = 5
LAYERNORM_VAR_FLOOR = 1e-8
# при двух каналах нормировка вырождается в ±1
LAYERNORM_MIN_CHANNELS = 3

DEFAULT_HIDDEN_BLOCKS = 24
DEFAULT_HIDDEN_FILTERS = 32

ADADELTA_RHO = 0.95
ADADELTA_EPS = 1e-6

# ------------------------------ training -----------------------------------

DEFAULT_PATIENCE = 10
DEFAULT_MAX_EPOCHS = 200

# ------------------------------- data --------------------------------------

RESAMPLER_KAISER_BETA = 12.0
RESAMPLER_TAPS_PER_PHASE = 64
RESAMPLER_CUTOFF_RATIO = 0.45

CORPUS_REFERENCE_FS = 48000
FOREGROUND_MAX_HZ = 3000.0
NOISE_MIN_HZ = 20.0
NOISE_MAX_HZ = 24000.0

AUGMENT_MAX_OFFSET_S = 0.010
AUGMENT_DOWNMIX_PROB = 1 / 3
AUGMENT_GAIN_DB = (-6.0, 6.0)
AUGMENT_MIX_RATIO_DB = (-6.0, 6.0)

# ------------------------------ metrics ------------------------------------

METRIC_CAP_DB = 100.0
GRAM_PINV_RCOND = 1e-12
LOW_BAND_EDGE_HZ = 4000.0

# ---------------------------- model file -----------------------------------

MODEL_MAGIC = b'SFIS'
MODEL_FORMAT_VERSION = 1
SUPPORTED_MODEL_VERSIONS = (1,)
