# MACLab: multi-agent regret minimization toolkit
__version__ = "1.0.0" 