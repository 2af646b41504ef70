"""Worker pool executing independent sweep rows.

Each row gets its own seed derived from (global seed, row index), so results
do not depend on scheduling; rows are returned in index order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
from tqdm import tqdm

from config import config
from utils.errors import GeoCalcError

logger = logging.getLogger(__name__)

RowFunction = Callable[[Dict, int], Dict]


def row_seed(global_seed: int, row_index: int) -> int:
    """Deterministic 32-bit seed for one sweep row."""
    return int(np.random.SeedSequence([global_seed, row_index]).generate_state(1)[0])


@dataclass
class SweepTask:
    """Parameters of one sweep point and the function evaluating it."""

    params: Dict
    fn: RowFunction


class SweepRunner:
    """Run sweep tasks concurrently and collect one row per task."""

    def __init__(self, threads: Optional[int] = None, show_progress: bool = config.SHOW_PROGRESS):
        """Initialize the runner.

        Args:
            threads: Worker count; capped by GEOCALC_THREADS
            show_progress: Show a tqdm bar over finished rows
        """
        cap = max(1, config.THREADS)
        self.threads = max(1, min(threads or cap, cap))
        self.show_progress = show_progress

    def _run_one(self, index: int, task: SweepTask, global_seed: int) -> Dict:
        seed = row_seed(global_seed, index)
        row = {"row": index, "seed": seed, **task.params}
        try:
            row.update(task.fn(task.params, seed))
            row["status"] = "ok"
        except (GeoCalcError, FloatingPointError, np.linalg.LinAlgError) as e:
            logger.warning("row %d failed: %s: %s", index, type(e).__name__, e)
            row["status"] = f"error: {type(e).__name__}: {e}"
        return row

    def run(self, tasks: List[SweepTask], global_seed: int, desc: str = "sweep") -> List[Dict]:
        """Execute all tasks and return their rows in task order."""
        rows: List[Optional[Dict]] = [None] * len(tasks)
        logger.info("running %d %s rows on %d thread(s)", len(tasks), desc, self.threads)
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            futures = {
                pool.submit(self._run_one, i, task, global_seed): i
                for i, task in enumerate(tasks)
            }
            for future in tqdm(as_completed(futures), total=len(futures), desc=desc, disable=not self.show_progress):
                rows[futures[future]] = future.result()
        return rows
