"""
Counting difference invariants from the rank of the prolonged generators.

For each built-in family the Z matrix is sampled at generic stencils; the
count dim M - rank Z is compared with the number of invariants provided.
"""
from symm import cli


def main():
    print(f"{'family':<12}{'dim M':>6}{'rank':>6}{'mu':>4}{'members':>9}")
    for fid in ("linear-ode", "heat", "nl-heat", "wave-yz", "wave-xt"):
        report, _ = cli.cmd_rank({"family": fid, "samples": 100}, 0)
        (rank,) = report["rank_table"]
        print(f"{fid:<12}{report['dim_M']:>6}{rank:>6}{report['mu']:>4}{report['members']:>9}")


if __name__ == "__main__":
    main()
