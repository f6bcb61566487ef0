"""Convert base64-embedded EXR environment maps into Radiance test fixtures.

Usage: python tools/convert_exr_fixtures.py <dir with *.exr.js> <out dir> name [name ...]

The sources are the CC0 HDRIs shipped in the ``@pmndrs/assets`` npm package
(``hdri/<name>.exr.js``).  Needs the ``OpenEXR`` Python package, which is a
tooling-only dependency.
"""

import base64
import sys
import tempfile
from pathlib import Path

import numpy as np
import OpenEXR

from icmtone.hdr_io import HdrImage, encode_radiance_hdr


def decode(js_path: Path) -> np.ndarray:
    text = js_path.read_text()
    payload = text.split("base64,", 1)[1].rsplit("'", 1)[0]
    with tempfile.NamedTemporaryFile(suffix=".exr") as tmp:
        tmp.write(base64.b64decode(payload))
        tmp.flush()
        rgb = OpenEXR.File(tmp.name).channels()["RGB"].pixels
    # lossy DWA compression leaves small negative ringing
    return np.clip(np.asarray(rgb, dtype=np.float64), 0.0, None)


def main(argv: list[str]) -> None:
    src, out = Path(argv[0]), Path(argv[1])
    out.mkdir(parents=True, exist_ok=True)
    for name in argv[2:]:
        rgb = decode(src / f"{name}.exr.js")
        (out / f"{name}.hdr").write_bytes(encode_radiance_hdr(HdrImage(rgb)))
        y = rgb.max(axis=2)
        print(f"{name}: {rgb.shape[1]}x{rgb.shape[0]}, range {y.max() / max(y[y > 0].min(), 1e-12):.3g}:1")


if __name__ == "__main__":
    main(sys.argv[1:])
