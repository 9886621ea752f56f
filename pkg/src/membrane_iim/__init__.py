"""Level-set membrane dynamics with immersed-interface jump conditions.

Modules: ``grid`` (MAC fields and stencils), ``levelset``, ``stretch``,
``geometry``, ``forces``, ``jumps``, ``oracle`` (Lagrangian markers),
``solver`` (corrected Navier-Stokes steps and scenarios), ``io``, ``verify``
and ``cli``.
"""

__version__ = "0.1.0"
