from setuptools import setup
from stablenv import __version__

setup(
    name='stablenv',
    version=__version__,
    packages=['stablenv', 'stablenv.adapters'],
    install_requires=['numpy',
                      'pandas',
                      'scipy',
                      'toposort',
                      'arrow',
                      'mpmath'],
    entry_points={
        'console_scripts': ['stablenv=stablenv.cli:main'],
    },
    license='MIT',
    description='Limit law of diffusion in a spectrally negative stable random environment'
)
