class Config:
    CACHE_TYPE = 'SimpleCache'
    CACHE_DEFAULT_TIMEOUT = 300
    REALIZER_FUEL = 100_000
    REALIZER_MAX_FUEL = 1_000_000
    REALIZER_TRIALS = 100
