# -*- coding: utf-8 -*-

import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="reconsched",
    python_requires='>=3.8',
    version="0.1.0",
    description="Observation scheduling for reconfigurable Earth-observation constellations",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["test", "test.*"]),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    install_requires=[
        "numpy>=1.21",
        "scipy>=1.9",
        "shapely>=2.0",
        "click>=8.0",
        "markdown2>=2.4",
        "pybars3>=0.9",
        "commentjson>=0.9"
    ],
    extras_require={
        "dev": ["pytest"],
    },
    zip_safe=False,
    package_data={
        "reconsched": [
            "resources/presets/*.json",
            "resources/tracks/*.csv",
            "resources/report/*/*",
            "resources/landmask.json"
        ]
    },
    entry_points = {
        "console_scripts": [
            "reconsched=reconsched.ui:cli"
        ],
    }
)
