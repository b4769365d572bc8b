import os
import pathlib
from setuptools import setup, find_packages

def get_version() -> str:
    init = open(os.path.join("SkillRL", "__init__.py"), "r").read().split()
    return init[init.index("__version__") + 2][1:-1]

ROOT_DIR = pathlib.Path(__file__).parent
README = (ROOT_DIR / "README.md").read_text()
VERSION = get_version()

def get_install_requires():
    return [
        "gymnasium>=0.26",
        "tqdm",
        "numpy",
        "scipy",
        "torch",
        "pandas",
        "pyyaml",
    ]

def get_extras_require():
    return {
        "docs": ["sphinx", "sphinx-rtd-theme"],
    }

setup(
    name                = "SkillRL",
    version             = VERSION,
    description         = "Latent skill spaces for a planar character, with active data augmentation and feature alignment. ",
    long_description    = README,
    long_description_content_type = "text/markdown",
    license             = "MIT",
    packages            = find_packages(exclude=["test", "test.*"]),
    include_package_data = True,
    tests_require=["pytest", "mock"],
    python_requires=">=3.8",
    install_requires = get_install_requires(),
    extras_require = get_extras_require(),
    entry_points = {
        "console_scripts": ["skillrl = SkillRL.cli:main"],
    },
)
