"""Privacy-preserving and secure in-network aggregation laboratory.

Building blocks:

* :mod:`wsnagg.keydist` - random key predistribution and its
  connectivity/overhearing probabilities.
* :mod:`wsnagg.cpda` - the cluster-based private aggregation protocol
  (original, efficient and hardened variants) with operation counters.
* :mod:`wsnagg.attack` - insider attacks that break the original
  protocol, plus the seed bound they rely on.
* :mod:`wsnagg.ciagg` - covariance-intersection fusion of max estimates
  with deviation-based fault detection.
* :mod:`wsnagg.netsim` - a deterministic round-based network simulator
  with message, operation and energy accounting.
* :mod:`wsnagg.cli` - reproducible experiment runner emitting CSV.
"""

from . import attack, ciagg, cpda, errors, keydist, netsim

__all__ = ["attack", "ciagg", "cpda", "errors", "keydist", "netsim"]
__version__ = "0.1.0"
