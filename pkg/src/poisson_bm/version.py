VERSION = "0.1.0"
TOOL_NAME = "poisson-bm"
