from setuptools import find_packages, setup

setup(
    name="quantum-nft-simulator",
    version="1.0.0",
    description="Desk-scale simulator of a quantum NFT blockchain on weighted double hypergraph states",
    package_dir={"": "src"},  # This tells setuptools to look in the src directory
    packages=find_packages(where="src"),  # This finds packages inside src
    python_requires=">=3.10",
    install_requires=[
        "numpy",
        "scipy",
        "dataclasses-json",
    ],
    extras_require={
        "tests": [
            "pytest",
            "hypothesis",
        ],
    },
    entry_points={
        "console_scripts": [
            "quantum-nft = quantum_nft.solver.driver.main:main",
        ],
    },
)
