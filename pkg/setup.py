from setuptools import setup, find_packages

setup(
    name="defocus-otf",
    version="1.0.0",
    packages=find_packages(include=["backend", "backend.*"]),
    package_data={"backend": ["templates/*.j2"]},
    python_requires=">=3.9",
    install_requires=[
        "fastapi",
        "uvicorn",
        "python-dotenv",
        "pydantic>=2",
        "jinja2",
        "python-multipart",
        "aiofiles",
        "numpy",
        "scipy",
    ],
    extras_require={
        "test": ["pytest", "httpx"],
    },
    entry_points={
        "console_scripts": [
            "defocus-otf=backend.cli:main",
        ],
    },
)
