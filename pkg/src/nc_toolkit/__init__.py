"""Sparse random linear network coding toolkit for layered multicast.

Subpackages:

* :mod:`nc_toolkit.gf` -- exact GF(2) / GF(2^8) arithmetic
* :mod:`nc_toolkit.codec` -- coding-vector streams and an operation-counting
  Gaussian-elimination decoder
* :mod:`nc_toolkit.amc` -- closed-form expected-delay model based on an
  absorbing Markov chain over the decoder matrix defect
* :mod:`nc_toolkit.allocator` -- joint MCS / sparsity resource allocation
* :mod:`nc_toolkit.channel` -- scenario documents, user geometry and erasure
  processes
* :mod:`nc_toolkit.sim` -- Monte Carlo multicast session engine
* :mod:`nc_toolkit.cli` -- command line front end
"""

__version__ = "0.1.0"
