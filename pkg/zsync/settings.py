"""Runtime settings: environment variables with defaults."""

import os

LOG_LEVEL = os.environ.get("ZSYNC_LOG_LEVEL", "WARNING").upper()

# Worker processes for experiment sweeps (CLI --jobs overrides)
DEFAULT_JOBS = int(os.environ.get("ZSYNC_JOBS", "1"))

# Largest program the SDP solvers accept
SDP_MAX_N = int(os.environ.get("ZSYNC_SDP_MAX_N", "5000"))

# Eigenproblems up to this size go through a dense solve
DENSE_LIMIT = int(os.environ.get("ZSYNC_DENSE_LIMIT", "400"))

# Full-spectrum histograms need a dense solve; refuse beyond this
HISTOGRAM_MAX_N = int(os.environ.get("ZSYNC_HIST_MAX_N", "2000"))
