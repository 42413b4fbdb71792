"""Setup script for the stream-graph engine."""

from setuptools import setup, find_packages

setup(
    name="stream-graph",
    version="0.1.0",
    description="Out-of-core vertex-centric graph engine over buffered streams",
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.10",
    install_requires=[
        "websockets",
        "python-dotenv",
        "pydantic>=2",
        "pydantic-settings",
        "loguru",
        "numpy",
        "rich",
        "click",
    ],
    entry_points={
        "console_scripts": ["stream-graph=main:cli"],
    },
    py_modules=["main"],
)
