"""Run every benchmark and write CSVs into ``--out`` (default ``bench_out``).

    python3 benchmarks/run_all.py --out bench_out

Kernel timings compare the compiled extension against the numpy
fallback on identical inputs; the speedup table is printed first.
"""
import argparse
from pathlib import Path

from ehgnn import bench
from ehgnn.kernels import implementations


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="bench_out")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if "cython" not in implementations():
        print("compiled kernels not built; kernel comparison covers the numpy fallback only")
    rows = bench.bench_kernels([2000, 8000, 32000], args.repeats, seed=args.seed)
    bench.write_csv(rows, out / "bench_kernels.csv")
    print(bench.format_table(bench.kernel_speedups(rows)))

    rows = bench.bench_transform([2000, 4000, 8000, 16000], args.repeats, seed=args.seed)
    bench.write_csv(rows, out / "bench_transform.csv")
    print(bench.format_table(rows))
    for key, value in bench.transform_slopes(rows).items():
        print(f"slope {key}: {value:.3f}")

    rows = bench.bench_message_passing(bench.default_mp_graphs(seed=args.seed), max(args.repeats, 20), seed=args.seed)
    bench.write_csv(rows, out / "bench_mp.csv")
    print(bench.format_table(rows))
    print(f"CSVs in {out}")


if __name__ == "__main__":
    main()
