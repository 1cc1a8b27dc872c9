from config.fabric_config import DEFAULT_CONFIG_PATH, FabricConfigLoader
