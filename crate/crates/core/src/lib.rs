//! Upper bounds on the gain, QBER and double-click rate that a sequential
//! unambiguous-state-discrimination attack produces against DPS QKD, for both
//! untrusted and trusted detectors, plus a pulse-level Monte Carlo simulator.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod detection;
pub mod error;
pub mod montecarlo;
pub mod resend;
pub mod sweep;
pub mod trusted;
pub mod untrusted;

pub use attack::{block_distribution, dead_time_pad, usd_success_probability, AttackParams, BlockDistribution};
pub use detection::{DetectorModel, ModeAmplitudes, SlotClickProbabilities, SlotOutcome};
pub use error::{Error, Result};
pub use montecarlo::{phase_randomization_check, simulate, SimConfig, SimResult};
pub use resend::{AmplitudeDistribution, AmplitudeStrategy, DistributionKind, StrategyRegistry};
pub use sweep::untrusted_curve;
pub use sweep::{frontier, Curve, CurvePoint, FrontierKind, GridSpec};
pub use trusted::{
    renewal_rates, trusted_curve, trusted_point, trusted_rates, FixedPoint, PhotonNumberDistribution, TrustedModel,
};
pub use untrusted::{
    gain_to_distance, untrusted_gain, untrusted_point, untrusted_qber, AttackOutcome, ChannelModel, Distance,
};
