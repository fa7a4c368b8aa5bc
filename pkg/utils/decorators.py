"""
Корисні декоратори
"""

import asyncio
import functools
import time
from typing import Tuple, Type

from utils.logger import setup_logger

logger = setup_logger()


def async_retry(
    max_attempts: int = 3,
    delay: float = 1.0,
    backoff: float = 2.0,
    exceptions: Tuple[Type[BaseException], ...] = (Exception,),
):
    """Повтор асинхронної функції лише для перелічених (тимчасових) помилок; пауза росте в backoff разів"""

    def decorator(func):
        @functools.wraps(func)
        async def wrapper(*args, **kwargs):
            pause = delay
            for attempt in range(max_attempts):
                try:
                    return await func(*args, **kwargs)
                except exceptions as e:
                    if attempt == max_attempts - 1:
                        logger.error(f"❌ {func.__name__} не виконалась після {max_attempts} спроб: {e}")
                        raise

                    logger.warning(f"⚠️ Спроба {attempt + 1}/{max_attempts} {func.__name__} не вдалась: {e}; повтор через {pause:.2f}с")
                    await asyncio.sleep(pause)
                    pause *= backoff

        return wrapper
    return decorator


def log_execution(func):
    """Логування запуску, тривалості та типу помилки асинхронної функції"""

    @functools.wraps(func)
    async def wrapper(*args, **kwargs):
        logger.info(f"🚀 Виконання {func.__name__}")
        started = time.perf_counter()
        try:
            result = await func(*args, **kwargs)
        except Exception as e:
            logger.error(f"❌ {func.__name__} ({type(e).__name__}) після {time.perf_counter() - started:.1f}с: {e}")
            raise
        logger.info(f"✅ {func.__name__} виконано за {time.perf_counter() - started:.1f}с")
        return result

    return wrapper
