"""Frozen reference values for the scoring and budgeting checks.

NORMDEL_CELLS maps each public endoscopy segmentation benchmark to its
(mIoU percent, expected NormDEL percent) pairs, one per retention ratio
in RETENTION_RATIOS, all at alpha = 1. EPOCH_TABLE lists the
equal-compute epoch budget for a 200-epoch baseline.
"""

from fractions import Fraction

RETENTION_RATIOS = (0.05, 0.10, 0.20, 0.33, 0.50, 1.00)

NORMDEL_CELLS = {
    "kvasir-instrument": [
        (79.38, 68.03), (79.52, 67.25), (80.22, 65.85),
        (80.38, 64.06), (80.48, 61.97), (79.70, 57.28),
    ],
    "kvasir-seg": [
        (75.45, 67.21), (75.74, 66.49), (76.37, 65.14),
        (76.03, 63.33), (76.77, 61.43), (76.02, 56.95),
    ],
    "imageclefmed": [
        (70.95, 66.26), (71.80, 65.69), (71.44, 64.22),
        (72.58, 62.76), (71.23, 60.64), (72.02, 56.59),
    ],
    "etis": [
        (47.50, 61.11), (49.44, 61.00), (50.20, 60.13),
        (50.28, 58.94), (49.62, 57.47), (49.13, 54.51),
    ],
    "polypgen2021": [
        (60.93, 64.10), (61.61, 63.59), (61.47, 62.32),
        (62.28, 61.01), (62.20, 59.32), (60.89, 55.58),
    ],
    "cvc-300": [
        (63.67, 64.69), (56.69, 62.55), (61.40, 62.31),
        (62.85, 61.11), (61.97, 59.29), (61.16, 55.60),
    ],
    "cvc-clinicdb": [
        (75.24, 67.16), (74.58, 66.26), (75.27, 64.94),
        (75.50, 63.25), (75.49, 61.25), (74.95, 56.85),
    ],
    "cvc-colondb": [
        (69.52, 65.96), (68.58, 65.03), (69.90, 63.93),
        (71.60, 62.59), (69.72, 60.42), (69.48, 56.36),
    ],
}

EPOCH_TABLE = [
    (Fraction(1, 1), 200),
    (Fraction(1, 2), 400),
    (Fraction(1, 3), 600),
    (Fraction(1, 5), 1000),
    (Fraction(1, 10), 2000),
    (Fraction(1, 20), 4000),
]

# Frame-rate savings scenario: daily frame count and single-GPU throughput.
DAILY_FRAMES = 22_546_800_000
THROUGHPUT_FPS = 325.6
ROUNDED_BASE_HOURS = 19_200.0
SAVED_HOURS_ROUNDED_BASE = 18_816.0
