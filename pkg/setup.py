#!/usr/bin/env python
import os
from setuptools import setup

LONG_DESCRIPTION = ""
with open(os.path.join(os.path.dirname(__file__), 'README.md'), 'r') as f:
    LONG_DESCRIPTION = f.read()


setup(
    name='avsearch',
    version='0.1.0',
    description='Active visual search with online POMDP planning on known grid maps',
    long_description=LONG_DESCRIPTION,
    long_description_content_type='text/markdown',
    python_requires='>=3.8',
    packages=['avsearch',
              'avsearch.managers'],
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Operating System :: POSIX',
        'Operating System :: Unix',
    ],
    keywords='pomdp pomcp robotics visual_search planning',
    install_requires=[
        'numpy>=1.20',
        'scipy',
        'networkx',
        'pandas',
        'tqdm',
    ],
    tests_require=['pytest'],
    entry_points={
        'console_scripts': ['avsearch=avsearch.cli:main'],
    },
    include_package_data=True,
)
