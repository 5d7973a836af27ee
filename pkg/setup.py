#!/usr/bin/env python3
# encoding=utf-8
import sys
from pathlib import Path

from setuptools import setup, find_packages

if sys.version_info < (3, 7):
    raise RuntimeError('OrdSparse requires Python 3.7 or greater')


def long_description():
    return """{}\n\n{}""".format(
        (Path(__file__).resolve().parent / "README.rst").read_text().split(".. split_here")[0],
        (Path(__file__).resolve().parent / "docs/changes.rst").read_text()
    )


setup(
    name="ordsparse",
    version="0.1.0",
    description="Sparse regression under order constraints: the doubly majorized algorithm and nonmonotone "
                "proximal gradient baselines.",
    keywords=["sparse regression", "order constraints", "isotonic", "nonconvex optimization", "compressed sensing"],
    license="MIT",
    packages=find_packages(exclude=["tests"]),
    long_description=long_description(),
    install_requires=[
        "numpy>=1.17",
        "scipy>=1.4",
        "pandas>=1.0",
        "requests",
        "gitpython>=3.0.5",
        "dogpile.cache>=0.9.0",
        "entrypoints>=0.2.3",
        "cached-property",
    ],
    entry_points={
        "console_scripts": [
            "ordsparse=ordsparse.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    setup_requires=["pytest-runner"],
    tests_require=["pytest", "pytest-flake8", "pytest-cov", "pytest-mock", "hypothesis"],
)
