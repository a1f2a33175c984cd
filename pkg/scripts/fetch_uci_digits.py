"""Write the UCI OptDigits and PenDigits sets to data/ as CSV.

UCI itself is not always reachable, so the files are taken from the KEEL
repository copies bundled in the ``keel-ds`` wheel (OptDigits: 5620 x 64,
PenDigits a.k.a. "penbased": 10992 x 16, both 10 classes). The wheel is
fetched with ``pip download`` unless ``--wheel`` points at a local copy.

    python scripts/fetch_uci_digits.py [--out data] [--wheel path.whl]
"""
import argparse
import glob
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

SOURCES = {"optdigits": "optdigits", "pendigits": "penbased"}


def _find_wheel(tmp):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, "keel-ds==0.2.5"],
        check=True,
    )
    return glob.glob(str(Path(tmp) / "keel_ds-*.whl"))[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data"))
    ap.add_argument("--wheel", default=None)
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or _find_wheel(tmp)
        with zipfile.ZipFile(wheel) as zf:
            for name, keel_name in SOURCES.items():
                text = zf.read(f"keel_ds/data/balanced/raw/{keel_name}.dat").decode()
                rows = [ln.replace(" ", "") for ln in text.splitlines()
                        if ln.strip() and not ln.startswith("@")]
                d = rows[0].count(",")
                header = ",".join([f"f{j}" for j in range(d)] + ["label"])
                (out / f"{name}.csv").write_text(header + "\n" + "\n".join(rows) + "\n")
                print(f"{name}: {len(rows)} rows, {d} features -> {out / (name + '.csv')}")


if __name__ == "__main__":
    main()
