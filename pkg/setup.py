import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Fall back to the pure-Python kernel when compilation fails."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing etc.
            print(f"WARNING: building fairsemi._sgd failed ({exc}); using numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: building {ext.name} failed ({exc}); using numpy fallback")


ext_modules = []
if not os.environ.get("FAIRSEMI_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython not available; installing without the compiled kernel")
    else:
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("fairsemi._sgd", ["src/fairsemi/_sgd.pyx"], extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
