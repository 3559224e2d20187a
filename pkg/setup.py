from setuptools import setup, find_packages

setup(
    name="orient8",
    version="1.0.0",
    description="Orientation recognition and correction for cardiac MR slices",
    author="orient8 developers",
    packages=find_packages(exclude=["tests", "examples*"]),
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "Pillow>=9.5.0",
        "pandas>=1.5",
        "scikit-learn>=1.2",
    ],
    extras_require={
        "test": ["pytest>=7.0.0", "hypothesis>=6.70"],
        "torch": ["torch>=2.0.0"],
    },
    python_requires=">=3.10",
    entry_points={
        "console_scripts": [
            "orient8=src.main:main",
        ],
    },
)
