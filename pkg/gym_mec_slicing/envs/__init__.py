from gym_mec_slicing.envs.slicing_env import SlicingEnv, StepOutcome
