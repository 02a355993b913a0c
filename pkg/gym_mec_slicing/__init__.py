from gym.envs.registration import register

register(id='mec_slicing-v0',
         entry_point='gym_mec_slicing.envs:SlicingEnv')
