class ConfigError(Exception):
    def __init__(self, caught):
        self.caught = caught

    def __str__(self):
        return str(self.caught)

class InputError(Exception):
    def __init__(self, caught):
        self.caught = caught

    def __str__(self):
        return str(self.caught)

class NumericalError(Exception):
    def __init__(self, caught, diagnostics=None):
        self.caught = caught
        self.diagnostics = diagnostics or {}

    def __str__(self):
        if not self.diagnostics:
            return str(self.caught)
        diag = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        return f"{self.caught} ({diag})"
