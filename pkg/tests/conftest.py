import os

# Keep BLAS single-threaded: the tiny matmuls in these tests lose more to
# thread churn than they gain, and timings matter for the acceptance suite.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
