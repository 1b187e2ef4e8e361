"""Recompute the derived columns of both experiment tables and list every flagged row."""

import argparse

from uscsim.circuit import ingest_table, recompute_and_report


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--convention", default="auto", choices=["auto", "C1", "C4"])
    args = parser.parse_args()

    for name in ("table1", "table2"):
        report = recompute_and_report(ingest_table(name), args.convention)
        print(f"# {name}: convention={report.convention} matches={report.matches} "
              f"conflict={report.convention_conflict}")
        for row in report.rows:
            if row.flags:
                print(f"{name},{row.ref},{'; '.join(row.flags)}")


if __name__ == "__main__":
    main()
