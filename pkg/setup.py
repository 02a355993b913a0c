from setuptools import find_packages, setup

setup(name='gym_mec_slicing',
      version='0.0.1',
      packages=find_packages(exclude=['tests']),
      package_data={'gym_mec_slicing': ['config_files/*.json']},
      install_requires=['gym>=0.26,<0.27', 'numpy', 'pandas'])
