from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [line for line in fh.read().splitlines() if line and not line.startswith("#")]

setup(
    name="flow-topology-optimizer",
    version="0.1.0",
    author="Flow Topology Optimization Team",
    author_email="your.email@example.com",
    description="Phase-field topology optimization of Stokes flow with Crouzeix-Raviart elements",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://github.com/yourusername/flow-topology-optimizer",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    classifiers=[
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    python_requires=">=3.10",
    install_requires=requirements,
    entry_points={
        "console_scripts": [
            "flow-topopt=flow_topopt.app:main",
        ],
    },
)
