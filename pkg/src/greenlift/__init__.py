"""greenlift: learned Green's-function kernels for 1D boundary-value solvers.

The package trains a small fully-connected network to represent the Green's
function of an indefinite 1D operator in lifted coordinates (x, y, |y-x|,
and |.-alpha| distances for piecewise coefficients), then uses the learned
or closed-form kernel to build dense approximate inverses that serve as fast
solvers, GMRES preconditioners, and the smooth half of a hybrid
kernel/Jacobi iteration.
"""

__version__ = "0.1.0"
