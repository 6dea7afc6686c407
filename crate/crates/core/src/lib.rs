//! Attribute-guided verifiable rewards for molecular property prediction.
//!
//! The crate is organised bottom-up:
//!
//! * [`molgraph`] parses SMILES into molecular graphs,
//! * [`descriptors`] computes attribute values and resolves free-text names,
//! * [`response`] renders prompts and parses structured responses,
//! * [`rewards`] scores responses with the format, correctness, count and
//!   rationality rewards,
//! * [`grpo`] holds the group-relative policy optimisation math,
//! * [`policysim`] trains a small categorical policy against the real rewards,
//! * [`mlpipe`] covers dataset loading, scaffold splits, random forests and
//!   metrics.

pub mod descriptors;
pub mod grpo;
pub mod mlpipe;
pub mod molgraph;
pub mod policysim;
pub mod response;
pub mod rewards;
