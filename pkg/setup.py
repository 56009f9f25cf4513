from setuptools import setup
from setuptools import find_packages

package_name = 'reservoircrowd'

setup(
    name=package_name,
    version='0.1.0',
    packages=find_packages(exclude=['test']),
    package_data={
        package_name: ['config.yaml', 'config_schema.yaml', 'maps/*.txt'],
    },
    install_requires=[
        'setuptools',
        'numpy',
        'scipy',
        'pyyaml',
        'cerberus',
        'matplotlib',
    ],
    python_requires='>=3.8',
    zip_safe=False,
    description='Multi-agent pedestrian grid world trained with echo state networks and least-squares policy iteration',
    license='MIT',
    tests_require=['pytest', 'flake8', 'pydocstyle'],
    extras_require={'test': ['pytest', 'flake8', 'pydocstyle']},
    entry_points={
        'console_scripts': [
            'reservoircrowd = reservoircrowd.cli:main',
        ],
    },
)
