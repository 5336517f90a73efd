"""
Run configuration data model for the insulation laboratory.
"""
import typing as t

# Solvers accepted for the inner linear systems of the inverse iteration
LINEAR_SOLVERS = ("direct", "cg")


class RunConfig:
    """Stores the parameters of one laboratory run."""

    def __init__(self):
        """Initialize with default settings."""
        # Domain
        self.domain = "disk:1"
        self.mesh_h = 0.1

        # Physics
        self.beta = 1.0
        self.mass = 1.0
        self.beta_grid: t.List[float] = [1.5, 8.0]
        self.m_grid: t.List[float] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]

        # Solver
        self.tol = 1e-10
        self.eig_tol = 1e-9
        self.max_iter = 500
        self.restarts = True
        self.linear_solver = "direct"
        self.radiality_safety = 4.0

        # Thin layer
        self.h_const = 1.0
        self.eps_list: t.List[float] = [0.1, 0.05, 0.025, 0.0125, 0.00625]
        self.outer_condition = "weak"

        # Run
        self.jobs = 1
        self.out: t.Optional[str] = None
        self.seed = 0
        self.refinements = 0

    def update(self, settings_dict):
        """Update settings from a dictionary of groups."""
        if not settings_dict:
            return

        if "domain" in settings_dict:
            self.domain = settings_dict["domain"].get("domain", self.domain)
            self.mesh_h = settings_dict["domain"].get("mesh_h", self.mesh_h)

        if "physics" in settings_dict:
            self.beta = settings_dict["physics"].get("beta", self.beta)
            self.mass = settings_dict["physics"].get("mass", self.mass)
            self.beta_grid = list(settings_dict["physics"].get("beta_grid", self.beta_grid))
            self.m_grid = list(settings_dict["physics"].get("m_grid", self.m_grid))

        if "solver" in settings_dict:
            self.tol = settings_dict["solver"].get("tol", self.tol)
            self.eig_tol = settings_dict["solver"].get("eig_tol", self.eig_tol)
            self.max_iter = settings_dict["solver"].get("max_iter", self.max_iter)
            self.restarts = settings_dict["solver"].get("restarts", self.restarts)
            self.linear_solver = settings_dict["solver"].get("linear_solver", self.linear_solver)
            self.radiality_safety = settings_dict["solver"].get("radiality_safety", self.radiality_safety)

        if "layer" in settings_dict:
            self.h_const = settings_dict["layer"].get("h_const", self.h_const)
            self.eps_list = list(settings_dict["layer"].get("eps_list", self.eps_list))
            self.outer_condition = settings_dict["layer"].get("outer_condition", self.outer_condition)

        if "run" in settings_dict:
            self.jobs = settings_dict["run"].get("jobs", self.jobs)
            self.out = settings_dict["run"].get("out", self.out)
            self.seed = settings_dict["run"].get("seed", self.seed)
            self.refinements = settings_dict["run"].get("refinements", self.refinements)

    def to_dict(self):
        """Convert settings to a dictionary."""
        return {
            "domain": {
                "domain": self.domain,
                "mesh_h": self.mesh_h
            },
            "physics": {
                "beta": self.beta,
                "mass": self.mass,
                "beta_grid": list(self.beta_grid),
                "m_grid": list(self.m_grid)
            },
            "solver": {
                "tol": self.tol,
                "eig_tol": self.eig_tol,
                "max_iter": self.max_iter,
                "restarts": self.restarts,
                "linear_solver": self.linear_solver,
                "radiality_safety": self.radiality_safety
            },
            "layer": {
                "h_const": self.h_const,
                "eps_list": list(self.eps_list),
                "outer_condition": self.outer_condition
            },
            "run": {
                "jobs": self.jobs,
                "out": self.out,
                "seed": self.seed,
                "refinements": self.refinements
            }
        }

    def flat(self) -> t.Dict[str, t.Any]:
        """All settings in one level, as echoed into output files."""
        return {key: value for group in self.to_dict().values() for key, value in group.items()}
