import setuptools

with open("README-pypi.md", "r", encoding="utf-8") as stream:
    long_description = stream.read()

setuptools.setup(
    name="epiforge",
    version="0.1.0",
    author="epiforge team",
    description=(
        "Calibrate uncertain social SIAR epidemic models and train PINN and NAR "
        "forecasters on the calibrated data."
    ),
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["test"]),
    entry_points={
        "console_scripts": [
            "epiforge=epiforge.cli:main",
            "epiforge-clear-cache=epiforge.clear_cache:main",
        ]
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    keywords=(
        "epidemiology siar sir calibration uncertainty quadrature nelder-mead "
        "pinn nar forecasting"
    ),
    install_requires=[
        "colorama",
        "commentjson",
        "dataclasses_json",
        "easydict",
        "jinja2",
        "numpy",
        "pandas",
        "PyYAML",
        "scipy",
        "sqlalchemy>=1.4",
    ],
    include_package_data=True,
    package_data={
        "": ["templates/*.jinja", "report.yaml", "default_config.json"]
    },
    python_requires=">=3.7",
)
