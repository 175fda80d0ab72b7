from .tableau_file import load_tableau, read_tableau, tableau_from_mapping, write_tableau
from .yaml_editor import YamlEditor

__all__ = ["YamlEditor", "load_tableau", "read_tableau", "tableau_from_mapping", "write_tableau"]
