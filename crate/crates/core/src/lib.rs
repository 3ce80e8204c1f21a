//! Long-term dispatch of a coupled hydropower + floating-PV plant under a monthly
//! water-release contract.
//!
//! The contract is priced with a single water price per month: a closed-form,
//! non-anticipatory per-step [`policy`] turns a price into releases, and the
//! [`pricer`] bisects on the price until the month's total release matches the
//! contract. [`oracle`] holds brute-force references, [`scenario`] runs Monte
//! Carlo perturbations of the inputs.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fixture;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod pricer;
pub mod scenario;

pub use model::{
    fit_head_curve, head, max_hydro_energy, validate_inputs, Contract, DispatchRecord,
    ExogenousSeries, FeasibilityReport, Head, HeadCurve, HeadFit, InitialState, ModelError,
    StepRange, SystemParams, Trajectory, J_PER_MWH,
};
pub use oracle::{dp_solve, grid_subproblem, DpGrid, OracleError};
pub use policy::{dispatch_step, rollout, PolicyError, StepInput};
pub use pricer::{
    sigma, solve_contract_price, solve_multi_month, sweep_capacity, BisectionConfig,
    ContractSolution, PricerError, SweepRow,
};
pub use scenario::{gen_ar1, monte_carlo, MonteCarloReport, NoiseSpec, ScenarioError};
