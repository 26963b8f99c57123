"""Reference error tables for the power-law test problem, used by the check modes.

Both tables report the discrete max-norm error with m = 10 time subsamples.
"""

# spatial refinement, alpha -> {M: (error, rate)}
SPATIAL = {
    0.4: {
        10: (3.6522e-02, None),
        20: (9.6096e-03, 1.9262),
        40: (2.4235e-03, 1.9873),
        80: (5.8239e-04, 2.0570),
        120: (2.4903e-04, 2.0953),
        160: (1.3923e-04, 2.0211),
    },
    0.75: {
        10: (3.1396e-02, None),
        20: (8.2601e-03, 1.9263),
        40: (2.0831e-03, 1.9874),
        80: (5.0059e-04, 2.0570),
        120: (2.3145e-04, 1.9026),
        160: (1.2713e-04, 2.0827),
    },
}

# temporal refinement for alpha = 0.6, gamma -> {N: (error, rate)}
TEMPORAL_ALPHA = 0.6
TEMPORAL = {
    1.0: {
        10: (1.0313e-02, None),
        20: (7.2124e-03, 0.5159),
        40: (5.0788e-03, 0.5060),
        60: (4.1411e-03, 0.5034),
        80: (3.5604e-03, 0.5252),
    },
    2.0: {
        10: (3.2357e-03, None),
        20: (1.5719e-03, 1.0416),
        40: (7.3189e-04, 1.1028),
        60: (4.6047e-04, 1.1428),
        80: (3.2953e-04, 1.1630),
    },
    3.4: {
        10: (2.0414e-03, None),
        20: (6.2591e-04, 1.7055),
        40: (1.7878e-04, 1.8078),
        60: (8.4038e-05, 1.8619),
    },
}

SPATIAL_ERROR_FACTOR = 2.0
SPATIAL_RATE_TOL = 0.15
TEMPORAL_ERROR_FACTOR = 3.0
TEMPORAL_RATE_TOL = 0.2
