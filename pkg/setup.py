#!/usr/bin/env python
from setuptools import setup

if __name__ == '__main__':
    setup(author='Fleet Computer Team',
          classifiers=['Intended Audience :: Developers',
                       'Intended Audience :: Science/Research',
                       'License :: OSI Approved :: Mozilla Public License 2.0 (MPL 2.0)',
                       'Operating System :: OS Independent',
                       'Programming Language :: Python',
                       'Programming Language :: Python :: 3',
                       'Programming Language :: Python :: 3.8',
                       'Programming Language :: Python :: 3.9',
                       'Programming Language :: Python :: 3.10',
                       'Topic :: Scientific/Engineering :: Artificial Intelligence'],
          description='Multi-agent swarm mission platform with reward shaping, online learning and edge scheduling',
          entry_points={'console_scripts': ['fleetsim = FleetRunner.FleetRunner:main']},
          extras_require={'test': ['pytest>=3.0', 'pytest-cov', 'pytest-flake8']},
          install_requires=['fasteners>=0.14.1', 'numpy>=1.17', 'scipy>=1.3', 'six>=1.11.0'],
          keywords='swarm multi-agent reinforcement-learning bayesian-optimization edge-computing',
          license='MPL 2.0',
          maintainer='Fleet Computer Team',
          maintainer_email='fleetsim@example.org',
          name='FleetSim',
          packages=['FleetCore', 'FleetCore.Apps', 'FleetCore.Cluster', 'FleetCore.Mission', 'FleetCore.Models',
                    'FleetCore.Online', 'FleetCore.Shaping', 'FleetRunner', 'Reporter'],
          python_requires='>=3.6',
          version='0.1.0')
