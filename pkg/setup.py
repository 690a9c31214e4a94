# -*- coding: utf-8 -*-
"""
    Setup file for privnet-cpd.

    All metadata and dependencies live in setup.cfg.
"""
from setuptools import setup


def setup_package():
    setup()


if __name__ == "__main__":
    setup_package()
