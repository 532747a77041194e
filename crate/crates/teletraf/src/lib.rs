//! Teletraffic analysis toolkit.
//!
//! The crate collects the standard machinery of teletraffic engineering:
//!
//! * [`randkit`]: seeded random-number streams and random-deviate generation,
//! * [`chainsolve`]: birth–death and general finite Markov-chain solvers,
//! * [`lossmodels`]: Erlang B family, Engset, overflow approximations,
//! * [`delaymodels`]: M/M/1, M/M/k, finite buffers, M/G/1 and priorities,
//! * [`deterministic`]: exact cycle analysis of D/D/... queues,
//! * [`multiservice`]: multi-service loss model (enumeration and recursion),
//! * [`netcalc`]: Jackson networks and the Erlang fixed-point approximation,
//! * [`simkit`]: discrete-event and Markov-chain simulation with confidence intervals,
//! * [`trafficgen`]: Poisson, MMPP(2), AR(1), EAR(1) and PPBP traffic models,
//! * [`dimension`]: link and server-group dimensioning against QoS targets.
//!
//! Analytic modules are generic over the scalar type through the [`num::Real`]
//! trait; `f64` is the working type everywhere else and the concrete aliases
//! at the crate root fix it for the common records.

pub mod chainsolve;
pub mod delaymodels;
pub mod deterministic;
pub mod dimension;
mod error;
pub mod lossmodels;
pub mod multiservice;
pub mod netcalc;
pub mod num;
pub mod randkit;
pub mod simkit;
pub mod trafficgen;

pub use error::{Error, Result};
pub use num::Real;

/// `f64` probability mass function.
pub type Pmf = randkit::Pmf<f64>;
/// `f64` loss-system result record.
pub type LossResult = lossmodels::LossResult<f64>;
/// `f64` overflow-traffic descriptor.
pub type OverflowTraffic = lossmodels::OverflowTraffic<f64>;
/// `f64` offered-load descriptor.
pub type TrafficLoad = lossmodels::TrafficLoad<f64>;
/// `f64` delay-system metric record.
pub type QueueMetrics = delaymodels::QueueMetrics<f64>;
/// `f64` service-time description.
pub type ServiceSpec = delaymodels::ServiceSpec<f64>;
/// `f64` birth–death chain description.
pub type BirthDeathSpec = chainsolve::BirthDeathSpec<f64>;
/// `f64` infinitesimal generator.
pub type GeneratorMatrix = chainsolve::GeneratorMatrix<f64>;
/// `f64` steady-state distribution.
pub type StateDistribution = chainsolve::StateDistribution<f64>;
/// `f64` deterministic-queue result record.
pub type DeterministicResult = deterministic::DeterministicResult<f64>;
