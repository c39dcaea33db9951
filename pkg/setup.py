from setuptools import setup, find_packages
with open("requirements.txt", "r") as f:
    REQUIRED_PACKAGES = f.read()

def setup_package():
    data = dict(
        name="fracdecay",
        version="1.0.0",
        packages=find_packages(exclude=["*tests"]),
        package_data={'fracdecay': ['configs/*.yaml', 'configs/preset/*.yaml']},
        install_requires=REQUIRED_PACKAGES,
        entry_points={"console_scripts": ["fracdecay=fracdecay.cli:main"]},
        description="Fractional decay of quantum dots in lossy inverse-opal photonic crystals",
    )
    setup(**data)


if __name__ == "__main__":
    setup_package()
