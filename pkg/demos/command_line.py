"""Drive the command-line tool on a Matrix Market file."""

import tempfile
from pathlib import Path

from selinv.cli import main
from selinv.corpus import kpoint
from selinv.sparse import mm_write

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "hk.mtx"
    mm_write(kpoint(ncell=12, block=6, kpt=0.25, seed=1), path)
    for argv in (["selinv", "--trace-check", "-o", str(Path(tmp) / "sel.mtx")],
                 ["verify"],
                 ["simulate", "--grid", "2x3", "--check", "--stats-out", str(Path(tmp) / "s.csv")]):
        print("$ selinv", " ".join(argv[:1] + ["--matrix", "hk.mtx"] + argv[1:]))
        code = main(argv + ["--matrix", str(path)])
        print(f"(exit {code})\n")
    print((Path(tmp) / "s.csv").read_text())
