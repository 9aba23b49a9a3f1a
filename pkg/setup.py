from os.path import dirname, join

from setuptools import find_packages, setup

setup(
    name="pnn_hedge",
    version="1.0",
    description="Глубокое хеджирование семейства рыночных моделей одной сетью.",
    long_description=open(
        join(dirname(__file__), "README.md"), encoding="utf-8"
    ).read(),
    long_description_content_type="text/markdown",
    license="GNU General Public License v3.0",
    packages=find_packages(exclude=("tests", "tests.*", "examples", "examples.*")),
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "pandas>=1.4",
    ],
    package_data={"pnn_hedge.config": ["config.json"]},
    include_package_data=True,
    entry_points={"console_scripts": ["pnn_hedge=pnn_hedge.__main__:main"]},
)
