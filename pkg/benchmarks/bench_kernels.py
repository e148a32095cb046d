"""Compare the compiled kernels with the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is checked for
matching output before it is timed.
"""
from fibrand.bench import format_kernel_bench, kernel_bench

if __name__ == "__main__":
    print(format_kernel_bench(kernel_bench()), end="")
