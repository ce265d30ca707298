"""Finite-scale computational toolkit for algebraic theories, sheaves and kernels.

Subpackages and modules:

``fincat``    finite categories, presheaves, limits and Kan extensions
``site``      finite Grothendieck sites and sheafification
``theory``    theory presentations over a site and their models
``dayconv``   Day convolution and the tensor of models
``fibered``   bundles over finite sets and the Lawvere/Linton round trip
``kernels``   exact kernels with atomic measures
``cli``       the ``lawvere`` command
"""

from .site import NotConverged

__version__ = "0.1.0"
__all__ = ["NotConverged", "__version__"]
