from setuptools import setup, find_packages

setup(
  name = 'delaykit',
  packages = find_packages(exclude=["*.tests", "*.tests.*", "tests.*", "tests"]),
  version = '0.1.0',
  license='MIT',
  description = 'DelayKit represents distributed-delay operators with exponential-polynomial kernels, builds stable approximants with certified error bounds and simulates time-delay feedback loops.',
  keywords = ['Jax', 'distributed delay', 'time-delay systems', 'Bernstein approximation'],
  install_requires=['jax', 'numpy', 'scipy', 'mpmath'],
  entry_points={
    'console_scripts': ['delaykit=delaykit.cli:main'],
  },
  classifiers=[
    'Development Status :: 4 - Beta',
    'Intended Audience :: Science/Research',
    'License :: OSI Approved :: MIT License',
    'Programming Language :: Python :: 3',
    'Programming Language :: Python :: 3.8',
    'Programming Language :: Python :: 3.9',
    'Programming Language :: Python :: 3.10',
  ],
)
