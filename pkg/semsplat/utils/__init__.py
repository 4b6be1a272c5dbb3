from semsplat.utils.logger import get_logger
from semsplat.utils.parallel import parallel_map
from semsplat.utils.images import default_palette, read_index_map, read_rgb, write_index_map, write_rgb

__all__ = ["get_logger", "parallel_map", "default_palette", "read_index_map", "read_rgb", "write_index_map", "write_rgb"]
