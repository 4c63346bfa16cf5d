import toml

from mlbias.utilities import InputError


# ========================================================================
#
# Classes
#
# ========================================================================
class Parameter:
    def __init__(self, default, helper, typer, choices=None):
        self.default = default
        self.helper = helper
        self.typer = typer
        self.choices = choices
        self.name = None
        self.set_value(self.default)

    def __repr__(self):
        return self.describe()

    def __str__(self):
        return f"""Instance of {self.describe()}"""

    def describe(self):
        return f"""Parameter({self.default}, {self.helper}, {self.typer}, choices={self.choices})"""

    def set_value(self, value):
        if type(value) == self.typer:
            self.value = value
        elif value is None:
            self.value = value
        else:
            raise InputError(
                f"Type does not match for {self.name} ({self.typer} is not {type(value)})"
            )

        if (self.choices is not None) and (value not in self.choices):
            raise InputError(
                f"Value {value} is not part of the available choices {self.choices}"
            )


# ========================================================================
class Input:
    def __init__(self):

        self.inputs = {
            "bias": {
                "budget": Parameter(
                    10**6, "Largest number of domain points enumerated", int
                ),
                "method": Parameter(
                    "kernel",
                    "Bias computation",
                    str,
                    choices=["kernel", "oracle"],
                ),
                "jobs": Parameter(1, "Number of processes", int),
            },
            "precision": {
                "start_bits": Parameter(
                    53, "Working bits of the first interval enclosure", int
                ),
                "max_bits": Parameter(
                    256, "Precision cap before a comparison gives up", int
                ),
            },
            "search": {
                "max_q": Parameter(4, "Largest prime power q in a certificate", int),
                "max_rank": Parameter(2, "Largest number of certificate terms", int),
                "strategy": Parameter(
                    "search",
                    "Decomposition strategy",
                    str,
                    choices=["search", "induction"],
                ),
                "budget": Parameter(
                    10**6, "Largest number of candidate terms or domain points", int
                ),
            },
            "spectrum": {
                "k": Parameter(2, "Number of arguments", int),
                "max_order": Parameter(4, "Largest group order visited", int),
                "degree": Parameter(
                    None, "Degree bound for multiaffine maps (multilinear if unset)", int
                ),
                "budget": Parameter(
                    2 * 10**5, "Largest number of maps visited", int
                ),
                "jobs": Parameter(1, "Number of processes", int),
            },
            "lemmas": {
                "trials": Parameter(1000, "Random multilinear maps", int),
                "affine_trials": Parameter(200, "Random multiaffine maps", int),
                "extension_trials": Parameter(
                    200, "Random inputs of the extension algorithms", int
                ),
                "seed": Parameter(7, "Seed of the random generator", int),
                "max_order": Parameter(16, "Largest group order", int),
                "max_k": Parameter(3, "Largest number of arguments", int),
                "jobs": Parameter(1, "Number of processes", int),
            },
        }
        for section in self.inputs.values():
            for name, param in section.items():
                param.name = name

    def __getitem__(self, section):
        return self.inputs[section]

    def value(self, section, name):
        return self.inputs[section][name].value

    def set(self, section, name, value):
        """Override a value, e.g. from a command line flag; None leaves it alone"""
        if value is not None:
            self.inputs[section][name].set_value(value)

    def write_toml(self):
        """Write inputs as TOML format"""
        for section in self.inputs.keys():
            print(f"""[{section}]""")
            for name, param in self.inputs[section].items():
                if param.value is None:
                    continue
                if type(param.value) is str:
                    print(f"""{name} = "{param.value}" """)
                else:
                    print(f"""{name} = {param.value}""")

    def print_help(self):
        """Print the defaults and help"""
        for section in self.inputs.keys():
            print(f"""[{section}]""")
            for name, param in self.inputs[section].items():
                if type(param.value) is str:
                    print(f"""{name} = "{param.default}" # {param.helper}""")
                else:
                    print(f"""{name} = {param.default} # {param.helper}""")

    def from_toml(self, fname):
        """Read TOML file for inputs"""
        try:
            parsed = toml.load(fname)
        except (OSError, toml.TomlDecodeError) as err:
            raise InputError(f"cannot read {fname}: {err}")
        for section in parsed.keys():
            if section not in self.inputs:
                raise InputError(f"Unknown section [{section}] in {fname}")
            for key, value in parsed[section].items():
                if key not in self.inputs[section]:
                    raise InputError(f"Unknown key {key} in section [{section}]")
                self.inputs[section][key].set_value(value)
