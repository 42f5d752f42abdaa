"""
Fitting a GARCH(1, 1) model by Gaussian QMLE
============================================

Simulate a long GARCH(1, 1) path, fit it back, and compare the filtered
conditional variance with the one that generated the data.
"""

import numpy as np

from garchcp import GarchParams, fit_garch, simulate_garch_path

truth = GarchParams(omega=0.1, alpha=(0.1,), beta=(0.8,))
print("true parameters:", truth.as_array(), "unconditional variance:", truth.unconditional_variance)

# 500 leading draws are a burn-in and are dropped from the path
eps = np.random.default_rng(0).standard_normal(5000 + 500)
path = simulate_garch_path(truth, eps)

fit = fit_garch(path.values)
print("estimated      :", np.round(fit.params.as_array(), 4))
print("converged      :", fit.converged)
print("log-likelihood :", round(fit.loglik, 2))

# the filtered variance tracks the true one closely after a few days
err = np.abs(fit.fitted_condvar - path.condvar) / path.condvar
print("median relative error of the filtered variance: %.3f" % np.median(err[50:]))

# standardized residuals should look like unit-variance noise
z = fit.residuals
print("residual mean %.3f, variance %.3f" % (z.mean(), z.var()))
