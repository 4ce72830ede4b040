"""Reference numbers used by ``qagap reproduce`` and the acceptance tests.

Values keep their original rounding.  Keys are
(w4, J) for chain-5 and J for chain-7.
"""

S_STAR_ATOL = 0.01
GAP_RTOL = 0.05

# chain-5, X driver: (w4, J) -> (s*, min gap, verdict)
CHAIN5_X = {
    (1.49, 1.52): (0.7479, 0.0018, "strong"),
    (1.49, 4.0): (0.94, 0.0387, "none"),
    (1.49, 10.0): (0.95, 0.0389, "none"),
    (1.49, 100.0): (0.95, 0.0391, "none"),
    (1.51, 1.52): (0.95, 0.03889, "none"),
    (1.51, 4.0): (0.7262, 3.8e-4, "strong"),
    (1.51, 10.0): (0.7522, 1.2e-4, "strong"),
    (1.51, 100.0): (0.76147, 7.136e-5, "strong"),
}
STRONG_DELTA = 0.008
STRONG_DELTA_ATOL = 0.004

# chain-5, stoquastic XX driver on the problem edges: (w4, J) -> (s*, min gap, verdict or None)
CHAIN5_XX = {
    (1.51, 4.0): (0.965, 0.03928, "none"),
    (1.51, 10.0): (0.965, 0.039322, None),
    (1.49, 4.0): (0.82375, 0.016349, "weak"),
    (1.49, 10.0): (0.81759, 0.013135, None),
}

# chain-7, X driver: J -> (s*, min gap)
CHAIN7_X = {
    2.0: (0.84375, 0.00155),
    10.0: (0.70609, 0.00413683),
    100.0: (0.6456, 0.0074294),
    1000.0: (0.6389, 0.0080297),
}

# LENS level labels for chain-5 w4=1.49, X driver: J -> (nbr(GS), nbr(FS) partial, lens(GS), lens(FS))
LENS_149 = {
    1.52: ({5, 11, 12}, None, {5}, {4}),
    4.0: (None, None, {4}, {5, 6}),
}
LENS_151_XX_GS_LEVELS = {2, 3}

# problem-scale case: chain5(1.51), J=10, with the problem part divided by 10 as the base
SCALING = {
    "alpha": 10.0,
    "base_alpha": 0.1,
    "s_star": 0.9681,
    "gap1": 1.566e-5,
    "t_star": 0.7522,
    "gap_alpha": 1.2e-4,
    "factor": 7.7698,
}
SCALING_FACTOR_RTOL = 0.005

# loop gadget (normalized, R=4): gap ~ exp(c n)
LOOP_EXPONENT = -0.593
LOOP_EXPONENT_ATOL = 0.05

# loop gadget n=4, R=4 reduction
LOOP4_REDUCED_VERTICES = 7
LOOP4_MIS_WEIGHT = 12.0
LOOP4_LOCAL_MAX = 11.5
