"""
Build the pip package.
"""

from setuptools import setup, find_packages

setup(
    name="semsplat",
    version="0.3.0",
    description="Semantic Gaussian splatting for multi-view segmentation under sparse labels",
    license="Apache-2.0",
    packages=find_packages(include=["semsplat", "semsplat.*"]),
    include_package_data=True,
    python_requires=">=3.10",
    install_requires=open("requirements.txt").read().splitlines(),
    entry_points={
        "console_scripts": [
            "semsplat = semsplat.cli.main:main",
        ],
    },
)
