"""Neural control of weighted finite element weak forms.

Trains a shallow ReLU network whose output steers pointwise weights inside
discrete weak formulations (least squares, Galerkin, discrete-dual minimal
residual) of advection-reaction problems, so that the resulting finite
element solution minimizes a user-chosen cost.
"""

__version__ = "0.1.0"
