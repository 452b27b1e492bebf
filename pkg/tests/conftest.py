import threadpoolctl

# Small-matrix workloads: BLAS thread teams only add sync overhead here, and a
# fixed thread count keeps every numeric result in the suite reproducible.
_BLAS_PIN = threadpoolctl.threadpool_limits(limits=1)
