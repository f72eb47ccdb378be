# Snapshot persistence package
from store.snapshot import dump_snapshot, load_snapshot, parse_snapshot, save_snapshot
