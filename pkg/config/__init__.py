# Configuration package for the Behavioural Cloning Toolkit
from config.bc_config import *
from config.player_data import *
