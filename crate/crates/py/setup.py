"""Builds the Rust extension with cargo; no extra build tooling needed."""

import json
import shutil
import subprocess
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

HERE = Path(__file__).resolve().parent


class CargoExtension(Extension):
    def __init__(self, name, manifest):
        super().__init__(name, sources=[])
        self.manifest = str(manifest)


class CargoBuildExt(build_ext):
    def build_extension(self, ext):
        subprocess.check_call(
            ["cargo", "build", "--release", "--manifest-path", ext.manifest]
        )
        meta = json.loads(
            subprocess.check_output(
                ["cargo", "metadata", "--format-version", "1", "--no-deps",
                 "--manifest-path", ext.manifest]
            )
        )
        target = Path(meta["target_directory"]) / "release"
        built = next(
            p
            for p in (target / f"libprotosynth_py{s}" for s in (".so", ".dylib"))
            if p.exists()
        )
        out = Path(self.get_ext_fullpath(ext.name))
        out.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(built, out)


setup(
    ext_modules=[CargoExtension("protosynth_py", HERE / "Cargo.toml")],
    cmdclass={"build_ext": CargoBuildExt},
)
