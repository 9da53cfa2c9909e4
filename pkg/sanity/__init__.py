import os
from dotenv import load_dotenv

load_dotenv()

SEED = int(os.getenv("SEED", "0"))
DEVICE = os.getenv("DEVICE", "cpu")
