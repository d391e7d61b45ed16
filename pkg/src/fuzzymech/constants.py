"""Default tolerances for every checklist entry.

A config may override any of these under ``"tolerances"``; unknown names are
rejected.  Each value is the bound in the comparison listed beside it.
"""

DEFAULT_TOLERANCES = {
    # |N2 - 1| <= tol
    "norm_conservation": 1e-10,
    # relative L2 between evolved state and the Gaussian closed form
    "closed_form_agreement": 1e-6,
    # relative error of density variance against sigma_w^2(0)(1 + t^2/(m0^2 sigma0^4))
    "variance_spreading": 1e-6,
    # |<x> - (x0 + p0 t / m0)|
    "center_drift": 1e-8,
    # relative L2 between convolution and spectral evolution
    "convolution_spectral_l2": 1e-6,
    # |N2 - 1| after convolution
    "convolution_norm": 1e-6,
    # relative L2 of U(t1)U(t2) vs U(t1 + t2) by convolution
    "semigroup": 1e-6,
    # |int w_n dx|
    "w_n_zero_integral": 1e-8,
    # max(|w_n| - sum 2 sqrt(w_i w_j)) <= tol
    "w_n_bound": 1e-12,
    # min w_n < -tol
    "w_n_negative": 0.0,
    # relative L2 projection of w_n onto span{w_i}
    "lemma_projection": 1e-3,
    # relative error of the measured fringe period
    "fringe_period": 0.01,
    # |int w_m dx - 1|
    "mixed_norm": 1e-10,
    # max |w_m - sum P_i w_i| (bitwise linearity)
    "mixed_linearity": 0.0,
    # visibility of the mixed pattern at the centre
    "mixed_visibility": 0.01,
    # max |continued propagator - heat kernel|
    "continuation_residual": 1e-12,
    # |int w_D dx - 1|
    "diffusion_norm": 1e-10,
    # relative error of the heat-kernel variance against 2 k^2 t
    "diffusion_variance": 1e-10,
    # max |w_D(t1) * w_D(t2) - w_D(t1 + t2)|
    "chapman_kolmogorov": 1e-8,
    # |fitted - predicted| tail exponent
    "tail_exponent": 0.05,
    # x_hi / x_lo >= tol
    "tail_window_decade": 10.0,
    # number of monotonicity violations along the t-sequence
    "delta_monotone": 0.0,
    # last error / floor <= tol
    "delta_floor": 1.5,
    # max |<x>(t) - classical trajectory|
    "ehrenfest_center": 1e-4,
    # |error ratio on halving dt - 4|
    "strang_order": 0.5,
}
