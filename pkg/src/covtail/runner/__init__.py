from covtail.runner.executor import VERIFIER_BLOCK, resolve_workers, run_blocks, run_trials

__all__ = ["VERIFIER_BLOCK", "resolve_workers", "run_blocks", "run_trials"]
