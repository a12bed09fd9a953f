# Import required functions
from pathlib import Path

from setuptools import find_packages, setup

import carnot_kit

# read the contents of your README file
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text()


# Call setup function
setup(
    author="Javad Ebadi",
    author_email="javad@javadebadi.com",
    description="Numerics on step-2 Carnot groups: distances, "
    "semiconcavity probes and Hopf-Lax solutions",
    name="carnot-kit",
    packages=find_packages(include=["carnot_kit", "carnot_kit.*"]),
    version=carnot_kit.__version__,
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "pydantic",
        ],
    entry_points={
        "console_scripts": ["carnot-kit=carnot_kit.cli:main"],
    },
    python_requires=">=3.11",
    license="Apache 2.0",
    long_description=long_description,
    long_description_content_type="text/markdown",
)
