import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional

from app.AsyncHandler import AsyncCommandHandler
from app.utils.artifact_utils import ArtifactStore
from app.utils.config_utils import RunConfig


class AsyncRunner:
    """One run of one command: resolved config, artifact store and the per-country worker pool."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.store = ArtifactStore(config.out)
        self.executor: Optional[ThreadPoolExecutor] = None
        self.handler = AsyncCommandHandler(self)

    @classmethod
    async def create(cls, config: RunConfig) -> "AsyncRunner":
        instance = cls(config)
        instance.executor = ThreadPoolExecutor(max_workers=config.jobs)
        logging.info(f"Runner ready: out={config.out} seed={config.seed} jobs={config.jobs}")
        return instance

    async def fan_out(self, fn: Callable, items: Iterable) -> List:
        """Run ``fn`` over ``items`` on the pool; results keep the input order."""
        loop = asyncio.get_running_loop()
        return list(await asyncio.gather(*(loop.run_in_executor(self.executor, fn, item) for item in items)))

    def map(self, fn: Callable, items: Iterable) -> List:
        return list(self.executor.map(fn, items))

    async def run(self, command: str, args) -> int:
        try:
            return await self.handler.handle(command, args)
        finally:
            self.close()

    def close(self) -> None:
        if self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None
