from setuptools import find_packages, setup

setup(
    name="generative_tnc",
    version="0.1.0",
    packages=find_packages(exclude=["examples", "examples.*"]),
    install_requires=[
        "numpy",
        "pandas>=1.5",
        "torch",
    ],
    extras_require={
        "dev": [
            "black",
            "mypy",
            "pandas-stubs",
            "pytest",
            "flake8",
            "isort",
        ],
    },
    python_requires=">=3.8",
    author="Your Name",
    author_email="your.email@example.com",
    description="Generative tensor network classification with matrix product states",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
    ],
    entry_points={
        'console_scripts': [
            'gtnc=GenerativeTNC.Cli.ExperimentCli:main',
        ],
    },
)
