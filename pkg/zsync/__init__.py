"""Z2 group synchronization: spectral, SDP, anchored QCQP and message-passing solvers."""

__version__ = "0.1.0"
