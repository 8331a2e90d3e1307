from setuptools import setup, find_packages
setup(
    name = "hebbpy",
    version = "0.1",
    packages = find_packages(exclude=['tests']),
    install_requires = ['numpy>=1.16.0', 'scipy>=0.12.0', 'h5py', 'matplotlib', 'mpi4py',
                        'numba', 'six'],
    extras_require = {'test': ['pytest', 'hypothesis']},
    entry_points = {'console_scripts': ['hebbpy = hebbpy.cli:main']},
    package_data = { '': ['*.txt'] },
    author = 'William Gurecky',
    license = "BSD3",
    author_email = "william.gurecky@gmail.com",
)
