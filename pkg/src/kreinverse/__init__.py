"""Inverse scattering for a diatomic ground-state potential via the Krein equation.

Modules
-------
specfun   complex error function, sine integral, Tricomi Psi asymptotics
gk_model  piecewise characteristic function g(k) and its config format
hfun      Krein H-function H(r) in closed form, with a quadrature oracle
krein     discretized Krein equation, G(x) and the no-bound-state potential
glm       bound-state ladder: add, remove, deform, Jost modulus
refpot    pseudo-Morse reference, quadratic seed, Riccati route, b3 fit
cli       command-line front end
"""

from .errors import KreinError

__version__ = "0.1.0"

__all__ = ["KreinError", "__version__"]
