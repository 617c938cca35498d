"""treeicp: causal discovery on observational data without given environments.

Observational data carries no intervention labels, so invariance-based causal
discovery cannot be applied directly.  This package generates the missing
"environments" with supervised clustering: for each covariate a univariate
decision tree is fitted against the target, and its leaves become environments
that exhibit a distribution shift by construction.  Invariant causal
prediction then searches covariate subsets whose regression residuals keep the
same mean and variance across those environments; covariates present in every
accepted subset of their own partition are reported as causal parents.  A
capped-pool voting variant handles datasets with many covariates, where the
exhaustive search degrades.

Typical use:

    import treeicp

    spec = {s.name: s for s in treeicp.builtin_specs()}["dataset1"]
    data = treeicp.simulate(spec, n=1000, seed=0)
    result = treeicp.discover_v1(data, target="Y")
    print(result.parents)

A SEM simulator (five built-in benchmark models), an experiment harness
reporting true-positive and false-discovery rates over repeated simulations,
and CSV/JSON/DOT persistence round out the toolkit; ``treeicp --help`` exposes
the same functionality as a command line.  The ``demos/`` directory of the
repository walks through each capability.
"""

from .envgen import (
    EnvironmentPartition,
    PairShift,
    TreeModel,
    assign,
    build_partition,
    check_shift,
    fit_environment_tree,
)
from .evaluation import EvalReport, SimOutcome, render_table, run_experiment, score
from .icp import DiscoveryResult, SubsetTestResult, discover_v1, discover_v2, invariance_p
from .io import (
    DatasetFormatError,
    GraphDocument,
    export_dot,
    read_dataset,
    read_spec,
    write_dataset,
    write_json,
    write_spec,
)
from .regress import OlsFit, ols
from .sem import (
    BinomialNoise,
    CausalGraph,
    Dataset,
    Equation,
    GaussianNoise,
    SemSpec,
    SpecValidationError,
    builtin_specs,
    ground_truth,
    simulate,
)
from .stats import (
    TestReport,
    bonferroni,
    combine_min_double,
    f_variance_test,
    ks_two_sample,
    t_two_sample,
)

__version__ = "0.1.0"

__all__ = [
    "EnvironmentPartition",
    "PairShift",
    "TreeModel",
    "assign",
    "build_partition",
    "check_shift",
    "fit_environment_tree",
    "EvalReport",
    "SimOutcome",
    "render_table",
    "run_experiment",
    "score",
    "DiscoveryResult",
    "SubsetTestResult",
    "discover_v1",
    "discover_v2",
    "invariance_p",
    "DatasetFormatError",
    "GraphDocument",
    "export_dot",
    "read_dataset",
    "read_spec",
    "write_dataset",
    "write_json",
    "write_spec",
    "OlsFit",
    "ols",
    "BinomialNoise",
    "CausalGraph",
    "Dataset",
    "Equation",
    "GaussianNoise",
    "SemSpec",
    "SpecValidationError",
    "builtin_specs",
    "ground_truth",
    "simulate",
    "TestReport",
    "bonferroni",
    "combine_min_double",
    "f_variance_test",
    "ks_two_sample",
    "t_two_sample",
    "__version__",
]
