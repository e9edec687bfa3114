__all__ = []


